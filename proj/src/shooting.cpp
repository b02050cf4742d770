#include "nonholo/shooting.hpp"

#include "nonholo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace nonholo {

const char* to_string(Pipeline pipeline)
{
    return pipeline == Pipeline::geometric ? "geometric" : "classical";
}

void OcpSpec::validate() const
{
    const int n = sys.dim;
    if (q0.size() != n || v0.size() != n || qT.size() != n || vT.size() != n)
        throw Error(Errc::dimension_mismatch, "boundary data length does not match the chart dimension");
    if (!(horizon > 0.0) || !(dt > 0.0))
        throw Error(Errc::invalid_argument, "horizon and dt must be positive");
    if (weights.size() != 0 && weights.size() != 2 * n)
        throw Error(Errc::dimension_mismatch, "terminal weights must have length 2n");
    for (const Vec* v : {&v0, &vT}) {
        const Point& q = v == &v0 ? q0 : qT;
        const double drift = constraint_drift(sys, q, *v);
        if (drift > 1e-9)
            throw Error(Errc::invalid_argument,
                        "boundary velocity violates the constraints (residual " + format_real(drift) + ")");
    }
    if (pipeline == Pipeline::classical && (!classical.f || !classical.running_cost))
        throw Error(Errc::invalid_argument, "classical pipeline requires a Hamiltonian spec");
}

int OcpSpec::unknown_count() const
{
    return pipeline == Pipeline::classical ? 2 * sys.dim : 2 * (sys.dim - sys.num_constraints);
}

Vec OcpSpec::weight_vector() const
{
    return weights.size() == 0 ? Vec(Vec::Ones(2 * sys.dim)) : weights;
}

Trajectory shoot(const OcpSpec& spec, const Vec& unknowns)
{
    if (unknowns.size() != spec.unknown_count())
        throw Error(Errc::dimension_mismatch, "unknown vector length does not match the adjoint dimension");
    const int half = static_cast<int>(unknowns.size() / 2);
    if (spec.pipeline == Pipeline::classical) {
        const ClassicalAdjoint adj{unknowns.head(half), unknowns.tail(half)};
        return integrate_classical(spec.classical, {spec.q0, spec.v0}, adj, spec.horizon, spec.dt);
    }
    const ExtremalState ex0{spec.q0, spec.v0, {unknowns.head(half), unknowns.tail(half)}};
    return integrate_extremal(spec.sys, ex0, spec.horizon, spec.dt, spec.mode);
}

namespace {

Vec terminal_residual(const OcpSpec& spec, const Trajectory& traj)
{
    const int n = spec.sys.dim;
    const DynState& end = traj.states.back();
    Vec r(2 * n);
    r << end.q - spec.qT, end.v - spec.vT;
    return spec.weight_vector().cwiseProduct(r);
}

} // namespace

Vec shoot_residual(const OcpSpec& spec, const Vec& unknowns)
{
    try {
        return terminal_residual(spec, shoot(spec, unknowns));
    } catch (const IntegrationDiverged&) {
        return Vec::Constant(2 * spec.sys.dim, std::numeric_limits<double>::infinity());
    }
}

Mat shoot_jacobian(const OcpSpec& spec, const Vec& unknowns, double step, int threads)
{
    const int cols = static_cast<int>(unknowns.size());
    Mat jac(2 * spec.sys.dim, cols);
    const auto column = [&](int c) {
        Vec plus = unknowns;
        Vec minus = unknowns;
        plus(c) += step;
        minus(c) -= step;
        jac.col(c) = (shoot_residual(spec, plus) - shoot_residual(spec, minus)) / (2.0 * step);
    };
    const int workers = std::clamp(threads, 1, std::max(1, cols));
    if (workers == 1) {
        for (int c = 0; c < cols; ++c)
            column(c);
        return jac;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int c = w; c < cols; c += workers)
                column(c);
        });
    for (auto& t : pool)
        t.join();
    return jac;
}

ShootingResult solve(const OcpSpec& spec, const Vec& guess, const SolveOptions& options)
{
    spec.validate();
    if (guess.size() != spec.unknown_count())
        throw Error(Errc::dimension_mismatch, "initial guess length does not match the adjoint dimension");

    Vec x = guess;
    Vec r = shoot_residual(spec, x);
    if (!r.allFinite())
        throw IntegrationDiverged(0.0, "shooting diverged at the initial guess");
    double norm = r.norm();
    double lambda = options.damping;
    int iterations = 0;
    std::string status = "max_iterations";
    Mat jac;

    const auto lm_step = [&](const Mat& a, const Vec& g, double damp) {
        Vec scale = a.diagonal();
        const double floor = std::max(1e-12 * scale.maxCoeff(), 1e-300);
        scale = scale.cwiseMax(floor);
        Mat lhs = a;
        lhs.diagonal() += damp * scale;
        return Vec(lhs.ldlt().solve(-g));
    };

    while (iterations < options.max_iter) {
        if (norm <= options.tol) {
            status = "converged";
            break;
        }
        jac = shoot_jacobian(spec, x, options.fd_step, options.threads);
        ++iterations;
        const Mat a = jac.transpose() * jac;
        const Vec g = jac.transpose() * r;
        if (g.norm() <= 1e-14 * std::max(1.0, norm)) {
            status = "stationary_least_squares";
            break;
        }
        bool accepted = false;
        bool stalled = false;
        while (lambda < 1e16) {
            const Vec dx = lm_step(a, g, lambda);
            const Vec xn = x + dx;
            const Vec rn = shoot_residual(spec, xn);
            const double nn = rn.allFinite() ? rn.norm() : std::numeric_limits<double>::infinity();
            if (nn < norm) {
                stalled = (norm - nn) <= 1e-12 * norm && dx.norm() <= 1e-12 * (1.0 + x.norm());
                x = xn;
                r = rn;
                norm = nn;
                lambda = std::max(lambda / 3.0, 1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            status = norm <= options.tol ? "converged" : "stationary_least_squares";
            // A damped step that cannot decrease the residual at all means the
            // iterate sits at a least-squares minimum unless the gradient is large.
            if (norm > options.tol && g.norm() > 1e-6 * std::max(1.0, norm))
                status = "line_search_failure";
            break;
        }
        if (stalled && norm > options.tol) {
            status = "stationary_least_squares";
            break;
        }
    }
    if (status == "max_iterations" && norm <= options.tol)
        status = "converged";

    if (status == "converged") {
        // Gauss-Newton polish while it keeps halving the residual.
        for (int k = 0; k < 3 && norm > 0.0; ++k) {
            const Mat jp = shoot_jacobian(spec, x, options.fd_step, options.threads);
            const Vec dx = jp.completeOrthogonalDecomposition().solve(Vec(-r));
            const Vec xn = x + dx;
            const Vec rn = shoot_residual(spec, xn);
            if (!rn.allFinite() || rn.norm() >= 0.5 * norm)
                break;
            x = xn;
            r = rn;
            norm = rn.norm();
        }
    }

    ShootingResult out;
    out.unknowns = x;
    out.trajectory = shoot(spec, x);
    out.terminal_residual = terminal_residual(spec, out.trajectory);
    out.residual_norm = out.terminal_residual.norm();
    out.cost = cost_functional(spec.sys, out.trajectory);
    out.iterations = iterations;
    out.status = status;
    out.converged = status == "converged" && out.residual_norm <= options.tol;
    const Mat jfinal = shoot_jacobian(spec, x, options.fd_step, options.threads);
    const Eigen::JacobiSVD<Mat> svd(jfinal);
    const auto& s = svd.singularValues();
    out.jacobian_condition = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    return out;
}

ResidualSummary summarize(const std::vector<ResidualRecord>& records)
{
    ResidualSummary s;
    for (const auto& r : records) {
        s.control = std::max(s.control, r.control);
        s.mu_projected = std::max(s.mu_projected, r.mu_projected);
        s.mu_orthogonal = std::max(s.mu_orthogonal, r.mu_orthogonal);
        s.eta = std::max(s.eta, r.eta);
        s.eta_orthogonal = std::max(s.eta_orthogonal, r.eta_orthogonal);
        s.curvature = std::max(s.curvature, r.curvature_norm);
        s.lambda_term = std::max(s.lambda_term, r.lambda_term_norm);
    }
    return s;
}

CrossVerifyReport cross_verify(const OcpSpec& spec, const Trajectory& traj)
{
    const MechanicalSystem& sys = spec.sys;
    CrossVerifyReport report;
    Trajectory mapped;
    mapped.times = traj.times;
    mapped.states = traj.states;
    mapped.controls = traj.controls;
    DistributionBasis basis;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Point& q = traj.states[i].q;
        basis = distribution_basis(sys, q, i == 0 ? nullptr : &basis);
        const MappedAdjoints m = map_adjoints(q, {traj.mu[i], traj.eta[i]}, basis);
        const RecoveredControl rc = recover_control(sys, q, {m.mu, m.eta}, &basis);
        const double err = (traj.controls[i] - rc.tau).norm();
        report.control_error.push_back(err);
        report.control_agreement = std::max(report.control_agreement, err);
        report.times.push_back(traj.times[i]);
        report.mu_tilde.push_back(m.mu_orth);
        report.eta_tilde.push_back(m.eta_orth);
        if (m.mu_orth.size() > 0)
            report.mu_tilde_max_abs = std::max(report.mu_tilde_max_abs, m.mu_orth.cwiseAbs().maxCoeff());
        if (m.eta_orth.size() > 0)
            report.eta_tilde_max_abs = std::max(report.eta_tilde_max_abs, m.eta_orth.cwiseAbs().maxCoeff());
        mapped.mu.push_back(m.mu);
        mapped.eta.push_back(m.eta);
        mapped.xi.push_back(rc.xi);
    }
    const std::vector<ResidualRecord> paper = necessary_condition_residual(sys, mapped, ConditionMode::paper_literal);
    const std::vector<ResidualRecord> full = necessary_condition_residual(sys, mapped, ConditionMode::full);
    report.paper = summarize(paper);
    report.full = summarize(full);
    for (const auto& r : full) {
        report.lambda_term.push_back(r.lambda_term_norm);
        report.lambda_term_max = std::max(report.lambda_term_max, r.lambda_term_norm);
    }
    return report;
}

CrossVerifyReport cross_verify(const OcpSpec& spec, const ShootingResult& result)
{
    if (spec.pipeline != Pipeline::classical)
        throw Error(Errc::invalid_argument, "cross_verify expects a classical-pipeline solution");
    return cross_verify(spec, result.trajectory);
}

} // namespace nonholo
