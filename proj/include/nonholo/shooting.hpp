#pragma once

// Indirect single shooting for the two-point force-minimizing problem, on
// either the classical costate system or the geometric D*-coefficient one.

#include "nonholo/classical.hpp"
#include "nonholo/optimality.hpp"

#include <string>

namespace nonholo {

enum class Pipeline { classical, geometric };

const char* to_string(Pipeline pipeline);

struct OcpSpec {
    MechanicalSystem sys;
    HamiltonianSpec classical; // used by the classical pipeline
    Point q0;
    Vec v0;
    Point qT;
    Vec vT;
    double horizon = 1.0;
    double dt = 1e-3;
    Pipeline pipeline = Pipeline::classical;
    ConditionMode mode = ConditionMode::paper_literal;
    Vec weights; // 2n terminal weights on (q, v); empty means all ones

    void validate() const;
    int unknown_count() const;
    Vec weight_vector() const;
};

struct SolveOptions {
    int max_iter = 100;
    double tol = 1e-8;
    double fd_step = 1e-6;
    double damping = 1e-3;
    int threads = 1;
};

struct ShootingResult {
    Vec unknowns;
    Vec terminal_residual;
    double residual_norm = 0.0;
    double cost = 0.0;
    int iterations = 0;
    Trajectory trajectory;
    bool converged = false;
    // converged | stationary_least_squares | max_iterations | line_search_failure
    std::string status;
    double jacobian_condition = 0.0;
};

// Integrates the selected pipeline from (q0, v0, unknowns) over [0, T].
Trajectory shoot(const OcpSpec& spec, const Vec& unknowns);

// Weighted (q(T) - qT, v(T) - vT); +inf entries when the integration diverges.
Vec shoot_residual(const OcpSpec& spec, const Vec& unknowns);

// Central-difference Jacobian of shoot_residual; columns are spread over
// `threads` workers and written to fixed slots.
Mat shoot_jacobian(const OcpSpec& spec, const Vec& unknowns, double step, int threads);

// Levenberg-Marquardt on shoot_residual.
ShootingResult solve(const OcpSpec& spec, const Vec& guess, const SolveOptions& options = {});

struct ResidualSummary {
    double control = 0.0;
    double mu_projected = 0.0;
    double mu_orthogonal = 0.0;
    double eta = 0.0;
    double eta_orthogonal = 0.0;
    double curvature = 0.0;
    double lambda_term = 0.0;
};

ResidualSummary summarize(const std::vector<ResidualRecord>& records);

struct CrossVerifyReport {
    double control_agreement = 0.0; // max over samples
    ResidualSummary paper;
    ResidualSummary full;
    std::vector<double> times;
    std::vector<Vec> mu_tilde;  // multiplier components outside D*
    std::vector<Vec> eta_tilde;
    std::vector<double> lambda_term; // |eta((nabla P) lambda^sharp)| per sample
    std::vector<double> control_error;
    double mu_tilde_max_abs = 0.0;
    double eta_tilde_max_abs = 0.0;
    double lambda_term_max = 0.0;
};

// Maps the classical costates of a solution onto D* coefficients and checks
// the geometric conditions in both modes.
CrossVerifyReport cross_verify(const OcpSpec& spec, const Trajectory& classical_traj);
CrossVerifyReport cross_verify(const OcpSpec& spec, const ShootingResult& result);

} // namespace nonholo
