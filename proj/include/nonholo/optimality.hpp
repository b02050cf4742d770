#pragma once

// Geometric necessary conditions for the force-minimizing problem:
//
//   u + xi^sharp = eta^sharp
//   nabla_v mu   = [R(eta^sharp, v) v]^flat + eta((nabla P) lambda^sharp)
//   nabla_v eta  = -mu
//
// with sharps and flats taken in the identity metric and mu, eta stored as
// coefficients on the D* basis.

#include "nonholo/dynamics.hpp"

#include <ostream>
#include <vector>

namespace nonholo {

enum class ConditionMode {
    paper_literal, // drops the reaction-force term
    full,          // keeps eta((nabla P) lambda^sharp)
};

const char* to_string(ConditionMode mode);

struct AdjointState {
    Vec mu;
    Vec eta;
};

struct ExtremalState {
    Point q;
    Vec v;
    AdjointState adj;
};

struct RecoveredControl {
    Vec tau;
    Vec xi;
};

// Expands D*-coefficients to full covector components.
Vec expand_covector(const DistributionBasis& basis, const Vec& coeffs);

// Solves sum tau_i Y_i + sum xi_i Ftilde_i = eta (identity-metric sharps).
RecoveredControl recover_control(const MechanicalSystem& sys, const Point& q, const AdjointState& adj,
                                 const DistributionBasis* basis = nullptr);

struct AdjointRates {
    Vec mudot;
    Vec etadot;
    // Norm of the part of the full mu-equation not representable in D*.
    double residual_orthogonal = 0.0;
    double eta_residual_orthogonal = 0.0;
    Vec curvature_term; // [R(eta^sharp, v) v]^flat
    // eta((nabla P) lambda^sharp); always evaluated, enters mudot only in full mode
    Vec lambda_term;
    Vec lambda_sharp;
};

AdjointRates geometric_adjoint_rhs(const MechanicalSystem& sys, const ExtremalState& ex, ConditionMode mode,
                                   const DistributionBasis* hint = nullptr);

// Component k is eta((nabla_{e_k} P)(lambda^sharp)).
Vec reaction_term(const ProjectorPair& pp, const Vec& eta_full, const Vec& lambda_sharp);

struct ExtremalOptions {
    bool reproject = true;
};

// RK4 on (q, v, mu, eta) with the control recovered from eta at every stage.
Trajectory integrate_extremal(const MechanicalSystem& sys, const ExtremalState& ex0, double horizon, double dt,
                              ConditionMode mode, const ExtremalOptions& options = {});

// Trapezoidal quadrature of 1/2 |u|^2 in the identity metric.
double cost_functional(const MechanicalSystem& sys, const Trajectory& traj);

struct ResidualRecord {
    double control = 0.0;
    double mu_projected = 0.0;
    double mu_orthogonal = 0.0;
    double eta = 0.0;
    double eta_orthogonal = 0.0;
    double curvature_norm = 0.0;
    double lambda_term_norm = 0.0;
};

// Fourth-order finite differences in time of sampled vectors (second order
// when fewer than five samples are available).
std::vector<Vec> time_derivative(const std::vector<double>& times, const std::vector<Vec>& values);

// Residuals of the three conditions along a stored trajectory carrying
// D*-coefficient adjoints, controls and xi.
std::vector<ResidualRecord> necessary_condition_residual(const MechanicalSystem& sys, const Trajectory& traj,
                                                         ConditionMode mode);

// Columns t,q*,v*,mu*,eta*,tau*,xi*,res_control,res_mu_proj,res_mu_orth,res_eta.
void write_extremal_csv(const Trajectory& traj, const std::vector<ResidualRecord>& residuals, std::ostream& os);

} // namespace nonholo
