#pragma once

// Chart-based differential geometry kernel.
//
// Every field is a callable on chart coordinates. Connection coefficients
// follow the convention nabla_{e_j} e_k = Gamma^i_{jk} e_i, i.e. j is the
// differentiation direction and k the argument slot; both the Levi-Civita and
// the (torsion-carrying) nonholonomic coefficients are stored this way.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace nonholo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Chart coordinates of a configuration.
using Point = Vec;

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Vec(const Point&)>;
using MatrixField = std::function<Mat(const Point&)>;
// Coordinate partials of a matrix field: element k is d/dq^k of the field.
using PartialsField = std::function<std::vector<Mat>(const Point&)>;

inline constexpr double kMetricEigenFloor = 1e-10;

struct FdScheme {
    double step = 1e-5;
    int order = 2; // 2 or 4

    void validate() const;
};

class ConnectionCoefficients {
public:
    ConnectionCoefficients() = default;
    explicit ConnectionCoefficients(int n);
    explicit ConnectionCoefficients(std::vector<Mat> slices);

    int dim() const { return static_cast<int>(slices_.size()); }

    // Gamma^i_{jk}
    double operator()(int i, int j, int k) const { return slices_[j](i, k); }
    double& operator()(int i, int j, int k) { return slices_[j](i, k); }

    // Matrix (i,k) of Gamma^i_{jk} for fixed direction j.
    const Mat& slice(int j) const { return slices_[j]; }
    Mat& slice(int j) { return slices_[j]; }
    const std::vector<Mat>& slices() const { return slices_; }

    // sum_j x^j Gamma^i_{jk}: the matrix of nabla_X acting on coordinate fields.
    Mat contract_direction(const Vec& x) const;
    // Gamma^i_{jk} v^j v^k
    Vec quadratic(const Vec& v) const;

    double max_abs() const;

private:
    std::vector<Mat> slices_;
};

// R(e_i, e_j) e_k = R^l_{ijk} e_l, stored as one (l,k) matrix per (i,j).
class CurvatureTensor {
public:
    CurvatureTensor() = default;
    explicit CurvatureTensor(int n);

    int dim() const { return n_; }

    double operator()(int l, int i, int j, int k) const { return maps_[i * n_ + j](l, k); }
    double& operator()(int l, int i, int j, int k) { return maps_[i * n_ + j](l, k); }

    const Mat& map(int i, int j) const { return maps_[i * n_ + j]; }
    Mat& map(int i, int j) { return maps_[i * n_ + j]; }

    // Components of R(x, y) z.
    Vec apply(const Vec& x, const Vec& y, const Vec& z) const;

    double max_abs() const;

private:
    int n_ = 0;
    std::vector<Mat> maps_;
};

// Checks symmetry and the eigenvalue floor; throws non_invertible_metric.
void check_metric(const Mat& g);

// Finite-difference partials of a matrix-valued function at q.
std::vector<Mat> fd_partials(const MatrixField& field, const Point& q, const FdScheme& fd);
// Finite-difference derivative of a matrix field along direction x.
Mat fd_directional(const MatrixField& field, const Point& q, const Vec& x, const FdScheme& fd);

// Derivative of a scalar field along X. The same routine serves every
// connection: on functions all connections act as the Lie derivative.
double directional_derivative(const ScalarField& f, const Point& q, const Vec& x, const FdScheme& fd);
double covariant_derivative_scalar(const ConnectionCoefficients& connection, const ScalarField& f,
                                   const Point& q, const Vec& x, const FdScheme& fd);

// Levi-Civita coefficients from the metric and its partials at a point.
ConnectionCoefficients christoffel_from_partials(const Mat& g, const std::vector<Mat>& dg);
ConnectionCoefficients christoffel(const MatrixField& metric, const Point& q, const FdScheme& fd);

Vec sharp(const Mat& g, const Vec& covector);
Vec flat(const Mat& g, const Vec& vector);

// (vdot^i + Gamma^i_{jk} v^j v^k)
Vec covariant_acceleration(const ConnectionCoefficients& gamma, const Vec& v, const Vec& vdot);

using ConnectionField = std::function<ConnectionCoefficients(const Point&)>;

// Coordinate curvature formula applied to any coefficient field:
// R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}
CurvatureTensor curvature(const ConnectionField& gamma_field, const Point& q, const FdScheme& fd);

// Finite-difference partials of a coefficient field; element i is d_i Gamma.
std::vector<ConnectionCoefficients> fd_connection_partials(const ConnectionField& gamma_field,
                                                           const Point& q, const FdScheme& fd);

// Curvature from coefficients and their partials (no differentiation).
CurvatureTensor curvature_from_partials(const ConnectionCoefficients& gamma,
                                        const std::vector<ConnectionCoefficients>& dgamma);

} // namespace nonholo
