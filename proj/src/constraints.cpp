#include "nonholo/constraints.hpp"

#include "nonholo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nonholo {

namespace {

constexpr double kRankTolerance = 1e-10;
// Reuse the previous free columns while the basic block stays this well
// conditioned; below it the elimination is re-pivoted.
constexpr double kPivotReuseRcond = 1e-3;

double rcond(const Mat& a)
{
    if (a.size() == 0)
        return 1.0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0)
        return 0.0;
    return s(s.size() - 1) / s(0);
}

Mat elimination_basis(const Mat& w, const std::vector<int>& free_cols)
{
    const int n = static_cast<int>(w.cols());
    const int m = static_cast<int>(w.rows());
    std::vector<int> basic;
    for (int c = 0; c < n; ++c)
        if (std::find(free_cols.begin(), free_cols.end(), c) == free_cols.end())
            basic.push_back(c);
    Mat wb(m, m);
    for (int r = 0; r < m; ++r)
        wb.col(r) = w.col(basic[r]);
    const Eigen::FullPivLU<Mat> lu(wb);
    Mat x = Mat::Zero(n, static_cast<int>(free_cols.size()));
    for (std::size_t a = 0; a < free_cols.size(); ++a) {
        const int f = free_cols[a];
        x(f, static_cast<int>(a)) = 1.0;
        if (m > 0) {
            const Vec coeffs = lu.solve(Vec(w.col(f)));
            for (int r = 0; r < m; ++r)
                x(basic[r], static_cast<int>(a)) = -coeffs(r);
        }
    }
    return x;
}

std::vector<int> pivot_free_columns(const Mat& w)
{
    const int n = static_cast<int>(w.cols());
    const int m = static_cast<int>(w.rows());
    const Eigen::ColPivHouseholderQR<Mat> qr(w);
    const auto& perm = qr.colsPermutation().indices();
    std::vector<int> free_cols;
    for (int c = m; c < n; ++c)
        free_cols.push_back(perm(c));
    std::sort(free_cols.begin(), free_cols.end());
    return free_cols;
}

// Reorders and re-signs the columns of `x` to best match `reference`.
void align_to(const Mat& g, const Mat& reference, Mat& x, std::vector<int>& free_cols)
{
    const int k = static_cast<int>(x.cols());
    if (reference.cols() != k || reference.rows() != x.rows())
        return;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    Mat aligned(x.rows(), k);
    std::vector<int> aligned_free(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
        const Vec ref = reference.col(a);
        int best = -1;
        double best_overlap = -1.0;
        double best_sign = 1.0;
        for (int b = 0; b < k; ++b) {
            if (used[b])
                continue;
            const Vec cand = x.col(b);
            const double denom = std::sqrt(ref.dot(g * ref) * cand.dot(g * cand));
            const double c = denom > 0.0 ? ref.dot(g * cand) / denom : 0.0;
            if (std::abs(c) > best_overlap) {
                best_overlap = std::abs(c);
                best = b;
                best_sign = c < 0.0 ? -1.0 : 1.0;
            }
        }
        used[best] = true;
        aligned.col(a) = best_sign * x.col(best);
        aligned_free[a] = free_cols[best];
    }
    x = std::move(aligned);
    free_cols = std::move(aligned_free);
}

// Evaluates a vector-of-matrices field on a central stencil in coordinate
// direction k and returns the derivative of every element.
template <class F>
std::vector<Mat> fd_partial_of_list(const F& field, const Point& q, int k, const FdScheme& fd)
{
    fd.validate();
    std::vector<double> offsets;
    std::vector<double> weights;
    if (fd.order == 4) {
        offsets = {-2.0, -1.0, 1.0, 2.0};
        weights = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
    } else {
        offsets = {-1.0, 1.0};
        weights = {-0.5, 0.5};
    }
    std::vector<Mat> acc;
    for (std::size_t s = 0; s < offsets.size(); ++s) {
        Point qs = q;
        qs(k) += offsets[s] * fd.step;
        const std::vector<Mat> vals = field(qs);
        if (acc.empty())
            for (const auto& v : vals)
                acc.push_back(Mat::Zero(v.rows(), v.cols()));
        for (std::size_t e = 0; e < vals.size(); ++e) {
            if (!vals[e].allFinite())
                throw Error(Errc::differentiation, "non-finite value on finite-difference stencil");
            acc[e] += (weights[s] / fd.step) * vals[e];
        }
    }
    return acc;
}

} // namespace

Mat ChartModel::metric_at(const Point& q) const
{
    if (q.size() != dim)
        throw Error(Errc::dimension_mismatch, "point dimension does not match chart");
    if (!q.allFinite())
        throw Error(Errc::invalid_argument, "point has non-finite coordinates");
    Mat g = metric(q);
    if (g.rows() != dim || g.cols() != dim)
        throw Error(Errc::dimension_mismatch, "metric field returned wrong shape");
    check_metric(g);
    return g;
}

Mat ChartModel::constraints_at(const Point& q) const
{
    if (num_constraints == 0 || !constraints)
        return Mat(0, dim);
    Mat w = constraints(q);
    if (w.rows() != num_constraints || w.cols() != dim)
        throw Error(Errc::dimension_mismatch, "constraint field returned wrong shape");
    return w;
}

bool ChartModel::has_analytic_geometry() const
{
    return static_cast<bool>(metric_partials)
           && (num_constraints == 0 || static_cast<bool>(constraint_partials));
}

ChartModel with_finite_differences(ChartModel model)
{
    model.metric_partials = nullptr;
    model.constraint_partials = nullptr;
    model.dual_partials = nullptr;
    return model;
}

Mat ProjectorPair::nabla_q_along(const Vec& x) const
{
    const int n = static_cast<int>(q.rows());
    Mat out = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j)
        out += x(j) * nabla_q[j];
    return out;
}

Mat default_dual(const Mat& g, const Mat& x)
{
    Mat dual(x.cols(), x.rows());
    for (int a = 0; a < x.cols(); ++a) {
        const Vec xa = x.col(a);
        const Vec fl = g * xa;
        dual.row(a) = fl.transpose() / xa.dot(fl);
    }
    return dual;
}

DistributionBasis distribution_basis(const ChartModel& model, const Point& q, const DistributionBasis* hint)
{
    const Mat w = model.constraints_at(q);
    if (model.basis) {
        DistributionBasis b = model.basis(q);
        if (b.annihilator.size() == 0 && w.rows() > 0)
            b.annihilator = w;
        return b;
    }
    const int n = model.dim;
    const int m = static_cast<int>(w.rows());
    DistributionBasis b;
    if (m == 0) {
        b.x = Mat::Identity(n, n);
        b.dual = Mat::Identity(n, n);
        b.annihilator = Mat(0, n);
        b.free_columns.resize(static_cast<std::size_t>(n));
        std::iota(b.free_columns.begin(), b.free_columns.end(), 0);
        return b;
    }
    if (!w.allFinite() || rcond(w) < kRankTolerance)
        throw Error(Errc::degenerate_constraint, "constraint one-forms are rank deficient at the requested point");

    const Mat g = model.metric_at(q);
    std::vector<int> free_cols;
    bool reused = false;
    if (hint != nullptr && static_cast<int>(hint->free_columns.size()) == n - m) {
        std::vector<int> basic;
        for (int c = 0; c < n; ++c)
            if (std::find(hint->free_columns.begin(), hint->free_columns.end(), c) == hint->free_columns.end())
                basic.push_back(c);
        Mat wb(m, m);
        for (int r = 0; r < m; ++r)
            wb.col(r) = w.col(basic[r]);
        if (rcond(wb) > kPivotReuseRcond) {
            free_cols = hint->free_columns;
            reused = true;
        }
    }
    if (!reused)
        free_cols = pivot_free_columns(w);
    b.x = elimination_basis(w, free_cols);
    if (!reused && hint != nullptr)
        align_to(g, hint->x, b.x, free_cols);
    b.free_columns = free_cols;
    b.dual = default_dual(g, b.x);
    b.annihilator = w;
    return b;
}

DistributionBasis elimination_basis_at(const ChartModel& model, const Point& q, const std::vector<int>& free_columns)
{
    const Mat w = model.constraints_at(q);
    if (static_cast<int>(free_columns.size()) != model.dim - w.rows())
        throw Error(Errc::dimension_mismatch, "free column count does not match distribution rank");
    DistributionBasis b;
    b.x = elimination_basis(w, free_columns);
    b.free_columns = free_columns;
    b.dual = w.rows() == 0 ? Mat(Mat::Identity(model.dim, model.dim)) : default_dual(model.metric_at(q), b.x);
    b.annihilator = w;
    return b;
}

ProjectorPair projectors(const DistributionBasis& basis, const Mat& g)
{
    const int n = static_cast<int>(g.rows());
    const Mat& x = basis.x;
    const Mat c = x.transpose() * g * x;
    if (c.size() > 0 && rcond(c) < kRankTolerance)
        throw Error(Errc::degenerate_distribution, "Gram matrix of the distribution basis is singular");
    ProjectorPair out;
    if (c.size() == 0)
        out.p = Mat::Zero(n, n);
    else
        out.p = x * c.ldlt().solve(x.transpose() * g);
    out.q = Mat::Identity(n, n) - out.p;
    return out;
}

Mat constraint_projector_q(const Mat& g, const Mat& w)
{
    const int n = static_cast<int>(g.rows());
    if (w.rows() == 0)
        return Mat::Zero(n, n);
    const Mat a = g.ldlt().solve(w.transpose());
    const Mat m = w * a;
    if (rcond(m) < kRankTolerance)
        throw Error(Errc::degenerate_constraint, "constraint one-forms are rank deficient at the requested point");
    return a * m.ldlt().solve(w);
}

std::vector<Mat> projector_q_partials(const ChartModel& model, const Point& q)
{
    const int n = model.dim;
    if (model.num_constraints == 0)
        return std::vector<Mat>(static_cast<std::size_t>(n), Mat::Zero(n, n));
    if (model.has_analytic_geometry()) {
        const Mat g = model.metric_at(q);
        const Mat w = model.constraints_at(q);
        const std::vector<Mat> dg = model.metric_partials(q);
        const std::vector<Mat> dw = model.constraint_partials(q);
        const auto ldlt = g.ldlt();
        const Mat ginv = ldlt.solve(Mat::Identity(n, n));
        const Mat a = ginv * w.transpose();
        const Mat m = w * a;
        const Mat minv = m.ldlt().solve(Mat::Identity(m.rows(), m.cols()));
        std::vector<Mat> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const Mat dginv = -ginv * dg[k] * ginv;
            const Mat da = dginv * w.transpose() + ginv * dw[k].transpose();
            const Mat dm = dw[k] * a + w * da;
            const Mat dminv = -minv * dm * minv;
            out.push_back(da * minv * w + a * dminv * w + a * minv * dw[k]);
        }
        return out;
    }
    const MatrixField qfield = [&model](const Point& p) {
        return constraint_projector_q(model.metric_at(p), model.constraints_at(p));
    };
    return fd_partials(qfield, q, model.fd);
}

ConnectionCoefficients levi_civita(const ChartModel& model, const Point& q)
{
    if (model.metric_partials)
        return christoffel_from_partials(model.metric_at(q), model.metric_partials(q));
    return christoffel(model.metric, q, model.fd);
}

CurvatureTensor levi_civita_curvature(const ChartModel& model, const Point& q)
{
    const ConnectionField field = [&model](const Point& p) { return levi_civita(model, p); };
    return curvature(field, q, model.fd);
}

ProjectorPair projector_derivatives(const ChartModel& model, const Point& q)
{
    const int n = model.dim;
    const Mat g = model.metric_at(q);
    ProjectorPair out;
    out.q = constraint_projector_q(g, model.constraints_at(q));
    out.p = Mat::Identity(n, n) - out.q;
    const std::vector<Mat> dq = projector_q_partials(model, q);
    const ConnectionCoefficients gamma = levi_civita(model, q);
    out.nabla_q.reserve(static_cast<std::size_t>(n));
    out.nabla_p.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Mat nq = dq[j] + gamma.slice(j) * out.q - out.q * gamma.slice(j);
        out.nabla_p.push_back(-nq);
        out.nabla_q.push_back(std::move(nq));
    }
    return out;
}

ConnectionCoefficients nonholonomic_christoffel(const ChartModel& model, const Point& q)
{
    ConnectionCoefficients gamma = levi_civita(model, q);
    if (model.num_constraints == 0)
        return gamma;
    const ProjectorPair pp = projector_derivatives(model, q);
    for (int j = 0; j < model.dim; ++j)
        gamma.slice(j) += pp.nabla_q[j];
    return gamma;
}

Vec nonholonomic_oneform_derivative(const ChartModel& model, const Point& q, const Vec& x,
                                    const Vec& lam, const Vec& dlam)
{
    if (x.size() != model.dim || lam.size() != model.dim || dlam.size() != model.dim)
        throw Error(Errc::dimension_mismatch, "nonholonomic_oneform_derivative: length mismatch");
    const ConnectionCoefficients gamma = levi_civita(model, q);
    const Vec levi = dlam - gamma.contract_direction(x).transpose() * lam;
    if (model.num_constraints == 0)
        return levi;
    const ProjectorPair pp = projector_derivatives(model, q);
    return levi - pp.nabla_q_along(x).transpose() * lam;
}

CurvatureTensor nonholonomic_curvature(const ChartModel& model, const Point& q)
{
    const ConnectionField field = [&model](const Point& p) { return nonholonomic_christoffel(model, p); };
    return curvature(field, q, model.fd);
}

NonholonomicCurvature nonholonomic_curvature_pair(const ChartModel& model, const Point& q)
{
    const int n = model.dim;
    NonholonomicCurvature out;
    out.direct = nonholonomic_curvature(model, q);

    CurvatureTensor expanded = levi_civita_curvature(model, q);
    const ConnectionCoefficients gamma = levi_civita(model, q);
    const ProjectorPair pp = projector_derivatives(model, q);
    const auto nabla_q_field = [&model](const Point& p) { return projector_derivatives(model, p).nabla_q; };
    // d_i (nabla_j Q) for every i, j
    std::vector<std::vector<Mat>> d_nabla_q;
    d_nabla_q.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        d_nabla_q.push_back(fd_partial_of_list(nabla_q_field, q, i, model.fd));

    // Covariant derivative along e_i of the (1,1) field nabla_j Q.
    const auto second = [&](int i, int j) {
        return Mat(d_nabla_q[i][j] + gamma.slice(i) * pp.nabla_q[j] - pp.nabla_q[j] * gamma.slice(i));
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            expanded.map(i, j) += second(i, j) - second(j, i)
                               + pp.nabla_q[i] * pp.nabla_q[j] - pp.nabla_q[j] * pp.nabla_q[i];
    out.expanded = std::move(expanded);
    return out;
}

double constraint_drift(const ChartModel& model, const Point& q, const Vec& v)
{
    const Mat w = model.constraints_at(q);
    if (w.rows() == 0)
        return 0.0;
    return (w * v).cwiseAbs().maxCoeff();
}

} // namespace nonholo
