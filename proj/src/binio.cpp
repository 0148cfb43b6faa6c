#include "spanqa/binio.hpp"

#include <cstring>

#include "spanqa/errors.hpp"

namespace spanqa {

BinaryWriter::BinaryWriter(const std::string& path)
    : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
}

void BinaryWriter::raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void BinaryWriter::u8(std::uint8_t v) { raw(&v, 1); }
void BinaryWriter::u32(std::uint32_t v) { raw(&v, 4); }
void BinaryWriter::u64(std::uint64_t v) { raw(&v, 8); }
void BinaryWriter::i32(std::int32_t v) { raw(&v, 4); }
void BinaryWriter::f64(double v) { raw(&v, 8); }

void BinaryWriter::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
}

void BinaryWriter::i32_vec(const std::vector<int>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (int x : v) i32(x);
}

void BinaryWriter::matrix(const Matrix& m) {
    i32(m.rows());
    i32(m.cols());
    raw(m.data(), m.size() * sizeof(double));
}

void BinaryWriter::finish() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
}

BinaryReader::BinaryReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw InputError("cannot open for reading: " + path);
}

void BinaryReader::raw(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
        throw SchemaError("truncated container: " + path_);
}

std::uint8_t BinaryReader::u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
}
std::uint32_t BinaryReader::u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
}
std::uint64_t BinaryReader::u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
}
std::int32_t BinaryReader::i32() {
    std::int32_t v;
    raw(&v, 4);
    return v;
}
double BinaryReader::f64() {
    double v;
    raw(&v, 8);
    return v;
}

std::string BinaryReader::str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    if (n > 0) raw(s.data(), n);
    return s;
}

std::vector<int> BinaryReader::i32_vec() {
    const std::uint32_t n = u32();
    std::vector<int> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = i32();
    return v;
}

Matrix BinaryReader::matrix() {
    const std::int32_t rows = i32();
    const std::int32_t cols = i32();
    if (rows < 0 || cols < 0) throw SchemaError("corrupt matrix header: " + path_);
    Matrix m(rows, cols);
    if (m.size() > 0) raw(m.data(), m.size() * sizeof(double));
    return m;
}

}  // namespace spanqa
