#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "spanqa/matrix.hpp"

namespace spanqa {

// Little-endian fixed-width records. Both dataset and checkpoint containers
// are written through this so identical inputs give identical bytes.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path);  // throws IoError

    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v);
    void f64(double v);
    void str(const std::string& s);               // u32 length + bytes
    void i32_vec(const std::vector<int>& v);      // u32 count + i32s
    void matrix(const Matrix& m);                 // i32 rows, i32 cols, f64s

    void finish();  // flush and verify; throws IoError

private:
    void raw(const void* data, std::size_t n);
    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path);  // throws InputError

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32();
    double f64();
    std::string str();
    std::vector<int> i32_vec();
    Matrix matrix();

private:
    void raw(void* data, std::size_t n);  // throws SchemaError on truncation
    std::ifstream in_;
    std::string path_;
};

}  // namespace spanqa
