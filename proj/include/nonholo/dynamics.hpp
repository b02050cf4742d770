#pragma once

#include "nonholo/constraints.hpp"

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace nonholo {

// Chart model plus actuation: p input one-forms F^i and n-p unactuated
// one-forms completing them to a basis of T*Q.
struct MechanicalSystem : ChartModel {
    int num_inputs = 0;
    MatrixField actuated;   // p x n
    MatrixField unactuated; // (n-p) x n
    std::map<std::string, double> params;
    double drift_tolerance = 1e-6;

    Mat actuated_at(const Point& q) const;
    Mat unactuated_at(const Point& q) const;
};

MechanicalSystem with_finite_differences(MechanicalSystem sys);

struct DynState {
    Point q;
    Vec v;
};

struct StateRate {
    Vec qdot;
    Vec vdot;
};

struct ReactionForce {
    Vec covector; // lambda
    Vec vector;   // lambda^sharp = nabla_v v - u on the constrained motion
};

// Y_i = (F^i)^sharp as columns (n x p).
Mat input_vector_fields(const MechanicalSystem& sys, const Point& q);

// u = sum tau_i Y_i
Vec input_vector(const MechanicalSystem& sys, const Point& q, const Vec& tau);

// qdot = v, vdot = -Gammabar(v, v) + P(u). Checks the drift tolerance.
StateRate forward_rhs(const MechanicalSystem& sys, const DynState& state, const Vec& tau);
// Same right-hand side without the on-constraint precondition check.
StateRate forward_rhs_unchecked(const MechanicalSystem& sys, const DynState& state, const Vec& tau);

// Levi-Civita form: vdot = -Gamma(v, v) + u + lambda^sharp.
StateRate forward_rhs_levi_civita(const MechanicalSystem& sys, const DynState& state, const Vec& tau);

Vec project_input(const MechanicalSystem& sys, const Point& q, const Vec& tau);

// lambda^sharp = -Q(u) - (nabla_v Q)(v)
ReactionForce reaction_force(const MechanicalSystem& sys, const DynState& state, const Vec& tau);

struct Trajectory {
    std::vector<double> times;
    std::vector<DynState> states;
    std::vector<Vec> controls;
    // Filled by the adjoint integrators only.
    std::vector<Vec> mu;
    std::vector<Vec> eta;
    std::vector<Vec> xi;
    std::map<std::string, std::vector<double>> diagnostics;

    std::size_t size() const { return times.size(); }
};

using ControlFn = std::function<Vec(double, const DynState&)>;

struct IntegrateOptions {
    bool reproject = true;
};

Trajectory integrate(const MechanicalSystem& sys, const DynState& state0, const ControlFn& control,
                     double horizon, double dt, const IntegrateOptions& options = {});

// Trapezoidal discrepancy between the kinetic-energy change and the input work.
double energy_balance_error(const MechanicalSystem& sys, const Trajectory& traj);

// Header t,q1..qn,v1..vn,tau1..taup,drift,reaction_norm; 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

std::string format_real(double x);

} // namespace nonholo
