#pragma once

// The vertical coin on SE(2): q = (x, y, heading), knife-edge constraint
// sin q3 dq1 - cos q3 dq2 = 0, forward force and steering torque.
// Closed forms below are the hand-derived reference values the generic
// pipeline is checked against.

#include "nonholo/classical.hpp"
#include "nonholo/optimality.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nonholo::coin {

struct CoinParams {
    double m = 1.0;
    double J = 1.0;

    void validate() const;
};

CoinParams params_from_map(const std::map<std::string, double>& values);

MechanicalSystem build_coin(const CoinParams& params);
// Forward force restricted to the x direction; dq2 is the unactuated direction.
MechanicalSystem build_coin_x_force(const CoinParams& params);
// Same metric, no knife edge, fully actuated.
MechanicalSystem build_free_body(const CoinParams& params);

// First-order classical system on (q, v) with closed-form costate rates.
HamiltonianSpec classical_spec(const CoinParams& params);

// --- closed forms -------------------------------------------------------

Mat metric(const CoinParams& params);
Vec constraint_form(double q3);               // omega^1
Mat input_forms(double q3);                   // rows F^1, F^2
Mat input_forms_uncorrected(double q3);           // F^1 with cos q3 in both slots
Vec unactuated_form(double q3);               // F-tilde^1
Mat input_fields(double q3, const CoinParams& params); // columns Y_1, Y_2
Vec input_vector(double q3, const Vec& tau, const CoinParams& params);
Mat dstar_basis(double q3);                   // rows omega^2, omega^3

Mat projector(double q3);
// Nonzero nonholonomic coefficients: Gamma-bar^i_{3k} in the (direction j,
// row i, column k) convention of ConnectionCoefficients.
ConnectionCoefficients gamma_bar(double q3);
Vec gamma_bar_quadratic(double q3, const Vec& v);

// Unreduced equations of motion and their simplified form on D.
Vec eom_unreduced(const Point& q, const Vec& v, const Vec& tau, const CoinParams& params);
Vec eom(const Point& q, const Vec& v, const Vec& tau, const CoinParams& params);

Vec control_from_eta(const Vec& eta, const CoinParams& params);

struct CoinAdjointRates {
    Vec mudot;
    Vec etadot;
};
CoinAdjointRates adjoint_rates(const AdjointState& adj);

// Linear multiplier family; `uncorrected` drops the factor t in the eta^3 line.
AdjointState analytic_extremal(const AdjointState& initial, double t, bool uncorrected = false);

Vec classical_control(double q3, const Vec& etabar, const CoinParams& params);
// Costate rates with tau eliminated by stationarity.
ClassicalAdjointRates classical_rates(const Point& q, const Vec& v, const ClassicalAdjoint& adj,
                                      const CoinParams& params);

ClassicalAdjoint to_classical(double q3, const AdjointState& adj);
MappedAdjoints from_classical(double q3, const ClassicalAdjoint& adj);

// --- fixture checks -----------------------------------------------------

enum class Component { gamma, projector, eom, adjoint_ode, analytic_extremal, classical, mapping };
enum class Path { analytic, finite_difference };

const char* to_string(Component component);

struct Sample {
    Point q;
    Vec v;       // in D
    Vec tau;     // 2
    AdjointState adj;       // D* coefficients (2 + 2)
    ClassicalAdjoint classical; // full costates
};

// Deterministic pseudo-random samples with constrained velocities.
std::vector<Sample> random_samples(int count, std::uint64_t seed);
// Samples at the given headings with a fixed mixed velocity and adjoint.
std::vector<Sample> heading_grid(const std::vector<double>& headings);

struct FixtureReport {
    Component component;
    double max_error = 0.0;
    int samples = 0;
};

struct FixtureOptions {
    Path path = Path::analytic;
    double horizon = 2.0; // analytic_extremal only
    double dt = 1e-3;
};

FixtureReport fixture_check(Component component, const std::vector<Sample>& grid, const CoinParams& params = {},
                            const FixtureOptions& options = {});

} // namespace nonholo::coin
