#pragma once

#include <stdexcept>
#include <string>

namespace nonholo {

enum class Errc {
    non_invertible_metric,
    differentiation,
    degenerate_constraint,
    degenerate_distribution,
    actuation_degeneracy,
    stationarity_degenerate,
    integration_diverged,
    dimension_mismatch,
    invalid_argument,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

    // Failures rooted in the geometry of the model at some point (singular
    // metric, rank-deficient constraints, degenerate actuation) as opposed to
    // bad input or numerical blow-up.
    bool is_geometric() const noexcept;

private:
    Errc code_;
};

class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(double last_valid_time, const std::string& what)
        : Error(Errc::integration_diverged, what), last_valid_time_(last_valid_time) {}

    double last_valid_time() const noexcept { return last_valid_time_; }

private:
    double last_valid_time_;
};

} // namespace nonholo
