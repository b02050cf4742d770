#include "nonholo/classical.hpp"

#include "nonholo/errors.hpp"

#include <cmath>

namespace nonholo {

HamiltonianSpec hamiltonian_from_system(const MechanicalSystem& sys)
{
    HamiltonianSpec spec;
    spec.dim = sys.dim;
    spec.num_inputs = sys.num_inputs;
    spec.fd = sys.fd;
    spec.f = [sys](const Point& q, const Vec& v, const Vec& tau) {
        return forward_rhs_unchecked(sys, {q, v}, tau).vdot;
    };
    spec.running_cost = [sys](const Point& q, const Vec& tau) {
        return 0.5 * input_vector(sys, q, tau).squaredNorm();
    };
    return spec;
}

double hamiltonian(const HamiltonianSpec& spec, const Point& q, const Vec& v, const ClassicalAdjoint& adj,
                   const Vec& tau)
{
    return -spec.running_cost(q, tau) + adj.mubar.dot(v) + adj.etabar.dot(spec.f(q, v, tau));
}

StateRate classical_rhs(const HamiltonianSpec& spec, const Point& q, const Vec& v, const Vec& tau)
{
    if (q.size() != spec.dim || v.size() != spec.dim || tau.size() != spec.num_inputs)
        throw Error(Errc::dimension_mismatch, "classical_rhs: argument length mismatch");
    return {v, spec.f(q, v, tau)};
}

Vec stationarity_solve(const HamiltonianSpec& spec, const Point& q, const Vec& v, const Vec& etabar)
{
    const int p = spec.num_inputs;
    const Vec zero = Vec::Zero(p);
    const double l0 = spec.running_cost(q, zero);
    const Vec f0 = spec.f(q, v, zero);
    std::vector<Vec> unit(static_cast<std::size_t>(p));
    Vec li(p);
    Mat b(spec.dim, p);
    for (int i = 0; i < p; ++i) {
        unit[i] = Vec::Unit(p, i);
        li(i) = spec.running_cost(q, unit[i]);
        b.col(i) = spec.f(q, v, unit[i]) - f0;
    }
    Mat w(p, p);
    for (int i = 0; i < p; ++i) {
        w(i, i) = 2.0 * (li(i) - l0);
        for (int j = 0; j < i; ++j) {
            w(i, j) = spec.running_cost(q, unit[i] + unit[j]) - li(i) - li(j) + l0;
            w(j, i) = w(i, j);
        }
    }
    // L(tau) = 1/2 tau^T W tau + c^T tau + l0
    const Vec c = li - 0.5 * w.diagonal() - Vec::Constant(p, l0);
    const Eigen::FullPivLU<Mat> lu(w);
    if (!w.allFinite() || !lu.isInvertible() || std::abs(lu.rcond()) < 1e-12)
        throw Error(Errc::stationarity_degenerate, "running-cost Hessian in the controls is singular");
    return lu.solve(Vec(b.transpose() * etabar - c));
}

ClassicalAdjointRates classical_adjoint_rhs_fd(const HamiltonianSpec& spec, const Point& q, const Vec& v,
                                               const ClassicalAdjoint& adj, const Vec& tau)
{
    const int n = spec.dim;
    Mat grad_q(1, n);
    Mat grad_v(1, n);
    const MatrixField hq = [&](const Point& p) {
        Mat m(1, 1);
        m(0, 0) = hamiltonian(spec, p, v, adj, tau);
        return m;
    };
    const MatrixField hv = [&](const Point& w) {
        Mat m(1, 1);
        m(0, 0) = hamiltonian(spec, q, w, adj, tau);
        return m;
    };
    const std::vector<Mat> dq = fd_partials(hq, q, spec.fd);
    const std::vector<Mat> dv = fd_partials(hv, v, spec.fd);
    ClassicalAdjointRates out{Vec(n), Vec(n)};
    for (int k = 0; k < n; ++k) {
        out.mubardot(k) = -dq[k](0, 0);
        out.etabardot(k) = -dv[k](0, 0);
    }
    return out;
}

ClassicalAdjointRates classical_adjoint_rhs(const HamiltonianSpec& spec, const Point& q, const Vec& v,
                                            const ClassicalAdjoint& adj, const Vec& tau)
{
    if (spec.analytic_rates)
        return spec.analytic_rates(q, v, adj, tau);
    return classical_adjoint_rhs_fd(spec, q, v, adj, tau);
}

MappedAdjoints map_adjoints(const Point& /*q*/, const ClassicalAdjoint& adj, const DistributionBasis& basis)
{
    const Mat mt = basis.pairing().transpose();
    const auto lu = mt.fullPivLu();
    const Mat& ann = basis.annihilator;
    const auto project = [&](const Vec& full, Vec& coeffs, Vec& orth) {
        coeffs = lu.solve(Vec(basis.x.transpose() * full));
        const Vec rest = full - basis.dual.transpose() * coeffs;
        if (ann.rows() == 0)
            orth = Vec(0);
        else
            orth = (ann * ann.transpose()).ldlt().solve(Vec(ann * rest));
    };
    MappedAdjoints out;
    project(adj.mubar, out.mu, out.mu_orth);
    project(adj.etabar, out.eta, out.eta_orth);
    return out;
}

Trajectory integrate_classical(const HamiltonianSpec& spec, const DynState& state0, const ClassicalAdjoint& adj0,
                               double horizon, double dt)
{
    if (!(dt > 0.0) || !(horizon >= 0.0))
        throw Error(Errc::invalid_argument, "integrate_classical: dt must be positive and the horizon non-negative");
    const int n = spec.dim;
    const long steps = std::max(1L, std::lround(horizon / dt));
    const double h = horizon / static_cast<double>(steps);

    // x = (q, v, mubar, etabar)
    const auto rate = [&](const Vec& x) {
        const Point q = x.segment(0, n);
        const Vec v = x.segment(n, n);
        const ClassicalAdjoint adj{x.segment(2 * n, n), x.segment(3 * n, n)};
        const Vec tau = stationarity_solve(spec, q, v, adj.etabar);
        const ClassicalAdjointRates r = classical_adjoint_rhs(spec, q, v, adj, tau);
        Vec out(4 * n);
        out << v, spec.f(q, v, tau), r.mubardot, r.etabardot;
        return out;
    };

    Trajectory traj;
    auto& ham = traj.diagnostics["hamiltonian"];
    const auto record = [&](double t, const Vec& x) {
        const Point q = x.segment(0, n);
        const Vec v = x.segment(n, n);
        const ClassicalAdjoint adj{x.segment(2 * n, n), x.segment(3 * n, n)};
        const Vec tau = stationarity_solve(spec, q, v, adj.etabar);
        traj.times.push_back(t);
        traj.states.push_back({q, v});
        traj.mu.push_back(adj.mubar);
        traj.eta.push_back(adj.etabar);
        traj.controls.push_back(tau);
        ham.push_back(hamiltonian(spec, q, v, adj, tau));
    };

    Vec x(4 * n);
    x << state0.q, state0.v, adj0.mubar, adj0.etabar;
    record(0.0, x);
    for (long step = 0; step < steps; ++step) {
        const double t = h * static_cast<double>(step);
        const Vec k1 = rate(x);
        const Vec k2 = rate(x + 0.5 * h * k1);
        const Vec k3 = rate(x + 0.5 * h * k2);
        const Vec k4 = rate(x + h * k3);
        Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!next.allFinite())
            throw IntegrationDiverged(t, "classical integration diverged after t = " + format_real(t));
        x = std::move(next);
        record(h * static_cast<double>(step + 1), x);
    }
    return traj;
}

} // namespace nonholo
