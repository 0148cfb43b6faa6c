#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spanqa {

std::string read_text_file(const std::string& path);  // throws InputError
void write_text_file(const std::string& path, const std::string& content);  // throws IoError

// FNV-1a over the file bytes; used for input digests in run manifests.
std::uint64_t fnv1a_file(const std::string& path);  // throws InputError
std::string hex_digest(std::uint64_t v);

// One `key: value` line per entry. Every command writes exactly one of
// these next to its outputs; timestamps live only here.
void write_run_manifest(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace spanqa
