#include "nonholo/geometry.hpp"

#include "nonholo/errors.hpp"

#include <cmath>
#include <string>

namespace nonholo {

namespace {

bool all_finite(const Mat& m) { return m.allFinite(); }

// Weighted stencil offsets/weights for a central first derivative.
struct Stencil {
    std::vector<double> offsets;
    std::vector<double> weights;
};

Stencil central_stencil(const FdScheme& fd)
{
    fd.validate();
    if (fd.order == 4)
        return {{-2.0, -1.0, 1.0, 2.0}, {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0}};
    return {{-1.0, 1.0}, {-0.5, 0.5}};
}

} // namespace

void FdScheme::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step))
        throw Error(Errc::invalid_argument, "finite-difference step must be positive");
    if (order != 2 && order != 4)
        throw Error(Errc::invalid_argument, "finite-difference order must be 2 or 4");
}

ConnectionCoefficients::ConnectionCoefficients(int n)
    : slices_(static_cast<std::size_t>(n), Mat::Zero(n, n))
{
}

ConnectionCoefficients::ConnectionCoefficients(std::vector<Mat> slices)
    : slices_(std::move(slices))
{
}

Mat ConnectionCoefficients::contract_direction(const Vec& x) const
{
    const int n = dim();
    Mat out = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j)
        out += x(j) * slices_[j];
    return out;
}

Vec ConnectionCoefficients::quadratic(const Vec& v) const
{
    if (v.size() != dim())
        throw Error(Errc::dimension_mismatch, "quadratic: vector length does not match chart dimension");
    return contract_direction(v) * v;
}

double ConnectionCoefficients::max_abs() const
{
    double out = 0.0;
    for (const auto& s : slices_)
        if (s.size() > 0)
            out = std::max(out, s.cwiseAbs().maxCoeff());
    return out;
}

CurvatureTensor::CurvatureTensor(int n)
    : n_(n), maps_(static_cast<std::size_t>(n * n), Mat::Zero(n, n))
{
}

Vec CurvatureTensor::apply(const Vec& x, const Vec& y, const Vec& z) const
{
    Vec out = Vec::Zero(n_);
    for (int i = 0; i < n_; ++i) {
        if (x(i) == 0.0)
            continue;
        for (int j = 0; j < n_; ++j) {
            if (y(j) == 0.0)
                continue;
            out += x(i) * y(j) * (map(i, j) * z);
        }
    }
    return out;
}

double CurvatureTensor::max_abs() const
{
    double out = 0.0;
    for (const auto& m : maps_)
        if (m.size() > 0)
            out = std::max(out, m.cwiseAbs().maxCoeff());
    return out;
}

void check_metric(const Mat& g)
{
    if (g.rows() != g.cols())
        throw Error(Errc::dimension_mismatch, "metric matrix is not square");
    if (!g.allFinite())
        throw Error(Errc::non_invertible_metric, "metric matrix has non-finite entries");
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(Errc::non_invertible_metric, "metric matrix is not symmetric");
    if (g.rows() == 0)
        return;
    Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
    const double smallest = eig.eigenvalues().minCoeff();
    if (!(smallest > kMetricEigenFloor))
        throw Error(Errc::non_invertible_metric,
                    "metric smallest eigenvalue " + std::to_string(smallest) + " below floor");
}

std::vector<Mat> fd_partials(const MatrixField& field, const Point& q, const FdScheme& fd)
{
    const Stencil st = central_stencil(fd);
    const int n = static_cast<int>(q.size());
    std::vector<Mat> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Mat acc;
        for (std::size_t s = 0; s < st.offsets.size(); ++s) {
            Point qs = q;
            qs(k) += st.offsets[s] * fd.step;
            Mat val = field(qs);
            if (!all_finite(val))
                throw Error(Errc::differentiation, "non-finite field value on finite-difference stencil");
            if (s == 0)
                acc = st.weights[s] * val;
            else
                acc += st.weights[s] * val;
        }
        acc /= fd.step;
        if (!all_finite(acc))
            throw Error(Errc::differentiation, "non-finite finite-difference result");
        out.push_back(std::move(acc));
    }
    return out;
}

Mat fd_directional(const MatrixField& field, const Point& q, const Vec& x, const FdScheme& fd)
{
    const Stencil st = central_stencil(fd);
    Mat acc;
    for (std::size_t s = 0; s < st.offsets.size(); ++s) {
        Mat val = field(q + st.offsets[s] * fd.step * x);
        if (!all_finite(val))
            throw Error(Errc::differentiation, "non-finite field value on finite-difference stencil");
        if (s == 0)
            acc = st.weights[s] * val;
        else
            acc += st.weights[s] * val;
    }
    return acc / fd.step;
}

double directional_derivative(const ScalarField& f, const Point& q, const Vec& x, const FdScheme& fd)
{
    const MatrixField as_matrix = [&f](const Point& p) {
        Mat m(1, 1);
        m(0, 0) = f(p);
        return m;
    };
    return fd_directional(as_matrix, q, x, fd)(0, 0);
}

double covariant_derivative_scalar(const ConnectionCoefficients& /*connection*/, const ScalarField& f,
                                   const Point& q, const Vec& x, const FdScheme& fd)
{
    return directional_derivative(f, q, x, fd);
}

ConnectionCoefficients christoffel_from_partials(const Mat& g, const std::vector<Mat>& dg)
{
    check_metric(g);
    const int n = static_cast<int>(g.rows());
    if (static_cast<int>(dg.size()) != n)
        throw Error(Errc::dimension_mismatch, "metric partials count does not match chart dimension");
    const Mat ginv = g.ldlt().solve(Mat::Identity(n, n));
    ConnectionCoefficients gamma(n);
    // Lowered symbols Gamma_{l,jk} = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    for (int j = 0; j < n; ++j) {
        Mat lowered(n, n);
        for (int l = 0; l < n; ++l)
            for (int k = 0; k < n; ++k)
                lowered(l, k) = 0.5 * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
        gamma.slice(j) = ginv * lowered;
    }
    for (const auto& s : gamma.slices())
        if (!s.allFinite())
            throw Error(Errc::differentiation, "non-finite Christoffel symbols");
    return gamma;
}

ConnectionCoefficients christoffel(const MatrixField& metric, const Point& q, const FdScheme& fd)
{
    const Mat g = metric(q);
    check_metric(g);
    return christoffel_from_partials(g, fd_partials(metric, q, fd));
}

Vec sharp(const Mat& g, const Vec& covector)
{
    check_metric(g);
    if (covector.size() != g.rows())
        throw Error(Errc::dimension_mismatch, "sharp: covector length does not match metric");
    return g.ldlt().solve(covector);
}

Vec flat(const Mat& g, const Vec& vector)
{
    if (vector.size() != g.rows())
        throw Error(Errc::dimension_mismatch, "flat: vector length does not match metric");
    return g * vector;
}

Vec covariant_acceleration(const ConnectionCoefficients& gamma, const Vec& v, const Vec& vdot)
{
    if (vdot.size() != v.size())
        throw Error(Errc::dimension_mismatch, "covariant_acceleration: vdot length mismatch");
    return vdot + gamma.quadratic(v);
}

std::vector<ConnectionCoefficients> fd_connection_partials(const ConnectionField& gamma_field,
                                                           const Point& q, const FdScheme& fd)
{
    const Stencil st = central_stencil(fd);
    const int n = static_cast<int>(q.size());
    std::vector<ConnectionCoefficients> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ConnectionCoefficients acc(n);
        for (std::size_t s = 0; s < st.offsets.size(); ++s) {
            Point qs = q;
            qs(i) += st.offsets[s] * fd.step;
            const ConnectionCoefficients val = gamma_field(qs);
            for (int j = 0; j < n; ++j) {
                if (!val.slice(j).allFinite())
                    throw Error(Errc::differentiation, "non-finite connection on finite-difference stencil");
                acc.slice(j) += (st.weights[s] / fd.step) * val.slice(j);
            }
        }
        out.push_back(std::move(acc));
    }
    return out;
}

CurvatureTensor curvature_from_partials(const ConnectionCoefficients& gamma,
                                        const std::vector<ConnectionCoefficients>& dgamma)
{
    const int n = gamma.dim();
    CurvatureTensor r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r.map(i, j) = dgamma[i].slice(j) - dgamma[j].slice(i)
                          + gamma.slice(i) * gamma.slice(j) - gamma.slice(j) * gamma.slice(i);
    return r;
}

CurvatureTensor curvature(const ConnectionField& gamma_field, const Point& q, const FdScheme& fd)
{
    return curvature_from_partials(gamma_field(q), fd_connection_partials(gamma_field, q, fd));
}

} // namespace nonholo
