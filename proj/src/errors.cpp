#include "nonholo/errors.hpp"

namespace nonholo {

const char* to_string(Errc code)
{
    switch (code) {
    case Errc::non_invertible_metric: return "non-invertible metric";
    case Errc::differentiation: return "differentiation error";
    case Errc::degenerate_constraint: return "degenerate constraint";
    case Errc::degenerate_distribution: return "degenerate distribution";
    case Errc::actuation_degeneracy: return "actuation degeneracy";
    case Errc::stationarity_degenerate: return "stationarity degenerate";
    case Errc::integration_diverged: return "integration diverged";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::invalid_argument: return "invalid argument";
    }
    return "unknown error";
}

bool Error::is_geometric() const noexcept
{
    switch (code_) {
    case Errc::non_invertible_metric:
    case Errc::degenerate_constraint:
    case Errc::degenerate_distribution:
    case Errc::actuation_degeneracy:
    case Errc::stationarity_degenerate:
    case Errc::differentiation:
        return true;
    default:
        return false;
    }
}

} // namespace nonholo
