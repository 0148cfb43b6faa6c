#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spanqa {

// Malformed input document (SQuAD JSON, embedding file, dataset container).
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Answer span could not be mapped onto the token sequence.
class AlignmentError : public std::runtime_error {
public:
    explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix dimensions inconsistent with the operation's contract.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Token id outside the embedding table.
class LookupError : public std::runtime_error {
public:
    explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller-supplied value violated an operation precondition.
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Answer span does not fit inside the padded context window.
class SpanWindowError : public std::runtime_error {
public:
    explicit SpanWindowError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value surfaced during optimization.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input file missing or unreadable (exit code 2 at the CLI).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Output write failure (exit code 3 at the CLI).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Collects every violation before throwing so the user sees the full list.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
    explicit ConfigError(const std::string& issue)
        : ConfigError(std::vector<std::string>{issue}) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out;
        for (const auto& s : issues) {
            if (!out.empty()) out += "\n";
            out += s;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

}  // namespace spanqa
