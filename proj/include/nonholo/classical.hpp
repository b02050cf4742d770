#pragma once

// Coordinate-space costate oracle. Works with full covector costates
// (mubar, etabar in R^n) on the first-order system qdot = v, vdot = f(q,v,tau)
// and H = -L(q,tau) + mubar.v + etabar.f(q,v,tau), matching the appended
// functional L + mubar(qdot - v) + etabar(vdot - f).

#include "nonholo/constraints.hpp"
#include "nonholo/dynamics.hpp"

#include <functional>
#include <optional>

namespace nonholo {

struct ClassicalAdjoint {
    Vec mubar;
    Vec etabar;
};

struct ClassicalAdjointRates {
    Vec mubardot;
    Vec etabardot;
};

struct HamiltonianSpec {
    int dim = 0;
    int num_inputs = 0;
    std::function<Vec(const Point&, const Vec&, const Vec&)> f;  // acceleration
    std::function<double(const Point&, const Vec&)> running_cost; // L(q, tau)
    // Optional closed-form costate rates bypassing finite differences.
    std::function<ClassicalAdjointRates(const Point&, const Vec&, const ClassicalAdjoint&, const Vec&)> analytic_rates;
    FdScheme fd;
};

// Generic spec from a mechanical system: f = forward dynamics, L = 1/2 |u|^2.
HamiltonianSpec hamiltonian_from_system(const MechanicalSystem& sys);

double hamiltonian(const HamiltonianSpec& spec, const Point& q, const Vec& v, const ClassicalAdjoint& adj,
                   const Vec& tau);

StateRate classical_rhs(const HamiltonianSpec& spec, const Point& q, const Vec& v, const Vec& tau);

// Solves dH/dtau = 0 assuming f affine and L quadratic in tau (exactly, by
// polarization rather than finite differences).
Vec stationarity_solve(const HamiltonianSpec& spec, const Point& q, const Vec& v, const Vec& etabar);

// mubardot = -dH/dq, etabardot = -dH/dv at fixed tau.
ClassicalAdjointRates classical_adjoint_rhs(const HamiltonianSpec& spec, const Point& q, const Vec& v,
                                            const ClassicalAdjoint& adj, const Vec& tau);
// Always the finite-difference route, ignoring any analytic override.
ClassicalAdjointRates classical_adjoint_rhs_fd(const HamiltonianSpec& spec, const Point& q, const Vec& v,
                                               const ClassicalAdjoint& adj, const Vec& tau);

struct MappedAdjoints {
    Vec mu;      // D* coefficients
    Vec eta;
    Vec mu_orth; // coefficients on the annihilator rows
    Vec eta_orth;
};

MappedAdjoints map_adjoints(const Point& q, const ClassicalAdjoint& adj, const DistributionBasis& basis);

// RK4 on (q, v, mubar, etabar) with tau from stationarity at every stage.
// Costates are stored in Trajectory::mu / Trajectory::eta.
Trajectory integrate_classical(const HamiltonianSpec& spec, const DynState& state0, const ClassicalAdjoint& adj0,
                               double horizon, double dt);

} // namespace nonholo
