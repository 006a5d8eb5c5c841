#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fusion {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownVariable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries every violation found, not just the first.
struct SchemaError : std::runtime_error {
    explicit SchemaError(std::vector<std::string> violations_)
        : std::runtime_error(join(violations_)), violations(std::move(violations_)) {}
    std::vector<std::string> violations;

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "schema violations:";
        for (const auto& x : v) {
            s += "\n  - " + x;
        }
        return s;
    }
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnresolvedAsset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AllCandidatesInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fusion
