#include "spanqa/autodiff.hpp"

#include <cmath>
#include <string>

#include "spanqa/errors.hpp"

namespace spanqa {

Tape::Ref Tape::push(Matrix value) {
    Node n;
    n.grad = Matrix::zeros(value.rows(), value.cols());
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::input(Matrix value) { return push(std::move(value)); }

Tape::Ref Tape::matmul(Ref a, Ref b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    Ref out = push(spanqa::matmul(va, vb));
    adjoints_.push_back([this, a, b, out] {
        const Matrix& g = grad(out);
        add_scaled(grad_mut(a), spanqa::matmul_nt(g, value(b)));
        add_scaled(grad_mut(b), spanqa::matmul_tn(value(a), g));
    });
    return out;
}

Tape::Ref Tape::matmul_nt(Ref a, Ref b) {
    Ref out = push(spanqa::matmul_nt(value(a), value(b)));
    adjoints_.push_back([this, a, b, out] {
        const Matrix& g = grad(out);
        add_scaled(grad_mut(a), spanqa::matmul(g, value(b)));
        add_scaled(grad_mut(b), spanqa::matmul_tn(g, value(a)));
    });
    return out;
}

Tape::Ref Tape::add(Ref a, Ref b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!va.same_shape(vb)) throw ShapeError("tape add: shape mismatch");
    Matrix v = va;
    add_scaled(v, vb);
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, b, out] {
        add_scaled(grad_mut(a), grad(out));
        add_scaled(grad_mut(b), grad(out));
    });
    return out;
}

Tape::Ref Tape::mul(Ref a, Ref b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!va.same_shape(vb)) throw ShapeError("tape mul: shape mismatch");
    Matrix v = va;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= vb[i];
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, b, out] {
        const Matrix& g = grad(out);
        Matrix& ga = grad_mut(a);
        Matrix& gb = grad_mut(b);
        const Matrix& va = value(a);
        const Matrix& vb = value(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb[i];
            gb[i] += g[i] * va[i];
        }
    });
    return out;
}

Tape::Ref Tape::scale(Ref a, double s) {
    Matrix v = value(a);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= s;
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out, s] { add_scaled(grad_mut(a), grad(out), s); });
    return out;
}

Tape::Ref Tape::tanh_op(Ref a) {
    Matrix v = value(a);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(v[i]);
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out] {
        const Matrix& g = grad(out);
        const Matrix& y = value(out);
        Matrix& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
    return out;
}

Tape::Ref Tape::sigmoid_op(Ref a) {
    Matrix v = value(a);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out] {
        const Matrix& g = grad(out);
        const Matrix& y = value(out);
        Matrix& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
    return out;
}

Tape::Ref Tape::concat_cols(Ref a, Ref b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.rows() != vb.rows()) throw ShapeError("tape concat_cols: row mismatch");
    Matrix v(va.rows(), va.cols() + vb.cols());
    for (int i = 0; i < va.rows(); ++i) {
        for (int j = 0; j < va.cols(); ++j) v(i, j) = va(i, j);
        for (int j = 0; j < vb.cols(); ++j) v(i, va.cols() + j) = vb(i, j);
    }
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, b, out] {
        const Matrix& g = grad(out);
        Matrix& ga = grad_mut(a);
        Matrix& gb = grad_mut(b);
        const int ca = ga.cols();
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < ca; ++j) ga(i, j) += g(i, j);
            for (int j = 0; j < gb.cols(); ++j) gb(i, j) += g(i, ca + j);
        }
    });
    return out;
}

Tape::Ref Tape::concat_rows(const std::vector<Ref>& parts) {
    if (parts.empty()) throw ShapeError("tape concat_rows: no parts");
    const int cols = value(parts[0]).cols();
    int rows = 0;
    for (Ref p : parts) {
        if (value(p).cols() != cols) throw ShapeError("tape concat_rows: column mismatch");
        rows += value(p).rows();
    }
    Matrix v(rows, cols);
    int r = 0;
    for (Ref p : parts) {
        const Matrix& vp = value(p);
        for (int i = 0; i < vp.rows(); ++i, ++r)
            for (int j = 0; j < cols; ++j) v(r, j) = vp(i, j);
    }
    Ref out = push(std::move(v));
    adjoints_.push_back([this, parts, out] {
        const Matrix& g = grad(out);
        int r = 0;
        for (Ref p : parts) {
            Matrix& gp = grad_mut(p);
            for (int i = 0; i < gp.rows(); ++i, ++r)
                for (int j = 0; j < g.cols(); ++j) gp(i, j) += g(r, j);
        }
    });
    return out;
}

Tape::Ref Tape::slice_row(Ref a, int r) {
    const Matrix& va = value(a);
    if (r < 0 || r >= va.rows()) throw ShapeError("tape slice_row: row out of range");
    Matrix v(1, va.cols());
    for (int j = 0; j < va.cols(); ++j) v(0, j) = va(r, j);
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, r, out] {
        const Matrix& g = grad(out);
        Matrix& ga = grad_mut(a);
        for (int j = 0; j < g.cols(); ++j) ga(r, j) += g(0, j);
    });
    return out;
}

Tape::Ref Tape::slice_cols(Ref a, int c0, int c1) {
    const Matrix& va = value(a);
    if (c0 < 0 || c1 > va.cols() || c0 >= c1) throw ShapeError("tape slice_cols: bad range");
    Matrix v(va.rows(), c1 - c0);
    for (int i = 0; i < va.rows(); ++i)
        for (int j = c0; j < c1; ++j) v(i, j - c0) = va(i, j);
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, c0, out] {
        const Matrix& g = grad(out);
        Matrix& ga = grad_mut(a);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) ga(i, c0 + j) += g(i, j);
    });
    return out;
}

Tape::Ref Tape::transpose_op(Ref a) {
    Ref out = push(transpose(value(a)));
    adjoints_.push_back([this, a, out] { add_scaled(grad_mut(a), transpose(grad(out))); });
    return out;
}

Tape::Ref Tape::softmax_rows(Ref a) {
    const Matrix& va = value(a);
    Matrix v(va.rows(), va.cols());
    for (int i = 0; i < va.rows(); ++i) {
        double mx = va(i, 0);
        for (int j = 1; j < va.cols(); ++j) mx = std::max(mx, va(i, j));
        double sum = 0.0;
        for (int j = 0; j < va.cols(); ++j) {
            v(i, j) = std::exp(va(i, j) - mx);
            sum += v(i, j);
        }
        for (int j = 0; j < va.cols(); ++j) v(i, j) /= sum;
    }
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out] {
        // dz = p * (dp - <dp, p>) per row
        const Matrix& g = grad(out);
        const Matrix& p = value(out);
        Matrix& ga = grad_mut(a);
        for (int i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < g.cols(); ++j) dot += g(i, j) * p(i, j);
            for (int j = 0; j < g.cols(); ++j) ga(i, j) += p(i, j) * (g(i, j) - dot);
        }
    });
    return out;
}

Tape::Ref Tape::row_max(Ref a) {
    const Matrix& va = value(a);
    Matrix v(va.rows(), 1);
    std::vector<int> arg(static_cast<std::size_t>(va.rows()), 0);
    for (int i = 0; i < va.rows(); ++i) {
        double mx = va(i, 0);
        int mj = 0;
        for (int j = 1; j < va.cols(); ++j) {
            if (va(i, j) > mx) {
                mx = va(i, j);
                mj = j;
            }
        }
        v(i, 0) = mx;
        arg[static_cast<std::size_t>(i)] = mj;
    }
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out, arg = std::move(arg)] {
        const Matrix& g = grad(out);
        Matrix& ga = grad_mut(a);
        for (int i = 0; i < g.rows(); ++i) ga(i, arg[static_cast<std::size_t>(i)]) += g(i, 0);
    });
    return out;
}

Tape::Ref Tape::tile_rows(Ref a, int n) {
    const Matrix& va = value(a);
    if (va.rows() != 1) throw ShapeError("tape tile_rows: source must be a single row");
    Matrix v(n, va.cols());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < va.cols(); ++j) v(i, j) = va(0, j);
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out] {
        const Matrix& g = grad(out);
        Matrix& ga = grad_mut(a);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) ga(0, j) += g(i, j);
    });
    return out;
}

Tape::Ref Tape::pick(Ref a, int r, int c) {
    const Matrix& va = value(a);
    if (r < 0 || r >= va.rows() || c < 0 || c >= va.cols())
        throw ShapeError("tape pick: index out of range");
    Matrix v(1, 1);
    v(0, 0) = va(r, c);
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, r, c, out] { grad_mut(a)(r, c) += grad(out)(0, 0); });
    return out;
}

Tape::Ref Tape::neg_log_clamped(Ref a, double floor) {
    const Matrix& va = value(a);
    Matrix v(va.rows(), va.cols());
    for (std::size_t i = 0; i < va.size(); ++i) v[i] = -std::log(std::max(va[i], floor));
    Ref out = push(std::move(v));
    adjoints_.push_back([this, a, out, floor] {
        const Matrix& g = grad(out);
        const Matrix& x = value(a);
        Matrix& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (-1.0 / std::max(x[i], floor));
    });
    return out;
}

Tape::Ref Tape::gather_rows(Ref table, const std::vector<int>& ids) {
    const Matrix& vt = value(table);
    Matrix v(static_cast<int>(ids.size()), vt.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || id >= vt.rows())
            throw LookupError("gather_rows: id " + std::to_string(id) + " outside table of " +
                              std::to_string(vt.rows()) + " rows");
        for (int j = 0; j < vt.cols(); ++j) v(static_cast<int>(i), j) = vt(id, j);
    }
    Ref out = push(std::move(v));
    adjoints_.push_back([this, table, out, ids] {
        const Matrix& g = grad(out);
        Matrix& gt = grad_mut(table);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (int j = 0; j < g.cols(); ++j) gt(ids[i], j) += g(static_cast<int>(i), j);
    });
    return out;
}

void Tape::backward(Ref loss) {
    Matrix& g = grad_mut(loss);
    if (g.rows() != 1 || g.cols() != 1) throw ShapeError("tape backward: loss must be 1x1");
    g(0, 0) = 1.0;
    for (auto it = adjoints_.rbegin(); it != adjoints_.rend(); ++it) (*it)();
}

void Tape::clear() {
    nodes_.clear();
    adjoints_.clear();
}

}  // namespace spanqa
