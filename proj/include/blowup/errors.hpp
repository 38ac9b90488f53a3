#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

// %.6g, for diagnostics
inline std::string num_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Argument outside the admissible set of a formula.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Iteration failed, tail too large, singular system...
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& msg)
        : std::invalid_argument(field + ": " + msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace blowup
