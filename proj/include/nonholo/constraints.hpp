#pragma once

// Constraint distribution machinery: bases of D and D*, the g-orthogonal
// projectors onto D and its complement, their covariant derivatives, the
// nonholonomic connection and its curvature.

#include "nonholo/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nonholo {

// Basis of the constraint distribution D at a point together with a basis of
// D* (one-forms used to expand multipliers) and a basis of the annihilator of
// D (used to report multiplier components outside D*).
struct DistributionBasis {
    Mat x;           // n x (n-m), column a is X_a
    Mat dual;        // (n-m) x n, row a is a one-form
    Mat annihilator; // m x n, rows span the annihilator of D
    // Coordinate columns treated as free in the elimination construction;
    // empty when the basis was supplied by the model.
    std::vector<int> free_columns;

    int rank() const { return static_cast<int>(x.cols()); }
    // M(a,b) = dual[a](X_b)
    Mat pairing() const { return dual * x; }
};

using BasisField = std::function<DistributionBasis(const Point&)>;

// A configuration chart with callable component fields. Partials fields are
// optional; when present they bypass finite differences.
struct ChartModel {
    std::string name;
    int dim = 0;
    int num_constraints = 0;

    MatrixField metric;
    PartialsField metric_partials;

    // Rows are the constraint one-forms omega^i (m x n).
    MatrixField constraints;
    PartialsField constraint_partials;

    // Optional basis override and the partials of its dual rows.
    BasisField basis;
    PartialsField dual_partials;

    FdScheme fd;

    Mat metric_at(const Point& q) const;
    Mat constraints_at(const Point& q) const;
    bool has_analytic_geometry() const;
};

// Strips every analytic partial so that all derivatives go through finite
// differences. The basis override is kept (it is data, not a derivative).
ChartModel with_finite_differences(ChartModel model);

struct ProjectorPair {
    Mat p;
    Mat q;
    std::vector<Mat> nabla_p; // element j: (nabla_{e_j} P)^i_k
    std::vector<Mat> nabla_q;

    // (nabla_X Q) as a matrix
    Mat nabla_q_along(const Vec& x) const;
};

// Null space of the constraint rows with sign and ordering continuity against
// `hint` (typically the basis at the previous sample).
DistributionBasis distribution_basis(const ChartModel& model, const Point& q,
                                     const DistributionBasis* hint = nullptr);

// Elimination basis with a prescribed set of free coordinate columns.
DistributionBasis elimination_basis_at(const ChartModel& model, const Point& q, const std::vector<int>& free_columns);

// Default D* rows for a basis: flat(X_a) scaled so that dual[a](X_a) = 1.
Mat default_dual(const Mat& g, const Mat& x);

// P(Z) = sum C^{ij} g(Z, X_i) X_j with C_ij = g(X_i, X_j).
ProjectorPair projectors(const DistributionBasis& basis, const Mat& g);

// Q = g^{-1} W^T (W g^{-1} W^T)^{-1} W built from the constraint rows W. Same
// projector as `projectors`, reached without a basis.
Mat constraint_projector_q(const Mat& g, const Mat& w);

// Partials d_j Q: analytic when the model carries metric and constraint
// partials, finite differences otherwise.
std::vector<Mat> projector_q_partials(const ChartModel& model, const Point& q);

ConnectionCoefficients levi_civita(const ChartModel& model, const Point& q);
CurvatureTensor levi_civita_curvature(const ChartModel& model, const Point& q);

// P, Q and their Levi-Civita covariant derivatives at q.
ProjectorPair projector_derivatives(const ChartModel& model, const Point& q);

ConnectionCoefficients nonholonomic_christoffel(const ChartModel& model, const Point& q);

// nabla-bar_X lambda = nabla_X lambda - (nabla_X Q)^*(lambda); dlam holds the
// directional derivatives X(lambda_k) of the components.
Vec nonholonomic_oneform_derivative(const ChartModel& model, const Point& q, const Vec& x,
                                    const Vec& lam, const Vec& dlam);

struct NonholonomicCurvature {
    CurvatureTensor direct;  // from the nonholonomic coefficients
    CurvatureTensor expanded; // R + commutator-of-nabla Q terms + (nabla Q)(nabla Q) terms
};

// Direct evaluation only.
CurvatureTensor nonholonomic_curvature(const ChartModel& model, const Point& q);
// Both evaluators, for cross-checking.
NonholonomicCurvature nonholonomic_curvature_pair(const ChartModel& model, const Point& q);

double constraint_drift(const ChartModel& model, const Point& q, const Vec& v);

} // namespace nonholo
