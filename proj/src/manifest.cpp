#include "spanqa/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spanqa/errors.hpp"

namespace spanqa {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out.good()) throw IoError("write failed: " + path);
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read input file: " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex_digest(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_run_manifest(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out;
    for (const auto& [key, value] : entries) {
        // Multi-line values (config snapshots) are indented under their key.
        if (value.find('\n') != std::string::npos) {
            out += key + ":\n";
            std::size_t pos = 0;
            while (pos < value.size()) {
                const std::size_t nl = value.find('\n', pos);
                const std::string line =
                    nl == std::string::npos ? value.substr(pos) : value.substr(pos, nl - pos);
                if (!line.empty()) out += "  " + line + "\n";
                if (nl == std::string::npos) break;
                pos = nl + 1;
            }
        } else {
            out += key + ": " + value + "\n";
        }
    }
    write_text_file(path, out);
}

}  // namespace spanqa
