#pragma once

#include <functional>
#include <vector>

#include "spanqa/matrix.hpp"

namespace spanqa {

// Reverse-mode tape over Matrix values. A forward pass appends nodes in
// topological order; backward() replays the recorded adjoint closures in
// reverse. One tape serves one forward/backward pass and is then clear()ed.
//
// Refs are indices into the tape and stay valid until clear().
class Tape {
public:
    using Ref = int;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf node. Gradients accumulate for leaves exactly like interior nodes.
    Ref input(Matrix value);

    const Matrix& value(Ref r) const { return nodes_[static_cast<std::size_t>(r)].value; }
    const Matrix& grad(Ref r) const { return nodes_[static_cast<std::size_t>(r)].grad; }

    Ref matmul(Ref a, Ref b);
    Ref matmul_nt(Ref a, Ref b);  // a * b^T
    Ref add(Ref a, Ref b);        // same shape
    Ref mul(Ref a, Ref b);        // elementwise
    Ref scale(Ref a, double s);
    Ref tanh_op(Ref a);
    Ref sigmoid_op(Ref a);
    Ref concat_cols(Ref a, Ref b);
    Ref concat_rows(const std::vector<Ref>& parts);  // each part 1 x c
    Ref slice_row(Ref a, int r);                     // 1 x c
    Ref slice_cols(Ref a, int c0, int c1);           // n x (c1-c0)
    Ref transpose_op(Ref a);
    Ref softmax_rows(Ref a);
    Ref row_max(Ref a);             // n x 1, gradient routed to the argmax entry
    Ref tile_rows(Ref a, int n);    // 1 x c -> n x c
    Ref pick(Ref a, int r, int c);  // 1 x 1
    // Elementwise -log(max(x, floor)); the clamp keeps saturated softmax finite.
    Ref neg_log_clamped(Ref a, double floor);
    // Embedding lookup: out row i = table row ids[i]; backward scatter-adds.
    Ref gather_rows(Ref table, const std::vector<int>& ids);

    // Seeds d(loss) = 1 (loss must be 1x1) and runs adjoints in reverse order.
    void backward(Ref loss);

    void clear();
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
    };

    Ref push(Matrix value);
    Matrix& grad_mut(Ref r) { return nodes_[static_cast<std::size_t>(r)].grad; }

    std::vector<Node> nodes_;
    std::vector<std::function<void()>> adjoints_;
};

}  // namespace spanqa
