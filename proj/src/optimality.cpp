#include "nonholo/optimality.hpp"

#include "nonholo/errors.hpp"

#include <cmath>

namespace nonholo {

namespace {

constexpr double kActuationRcond = 1e-12;

double rcond(const Mat& a)
{
    if (a.size() == 0)
        return 1.0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    return s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0);
}

// Rate of the D* rows along v: sum_j v^j d_j dual.
Mat dual_rate(const MechanicalSystem& sys, const Point& q, const Vec& v, const DistributionBasis& basis)
{
    if (sys.dual_partials) {
        const std::vector<Mat> d = sys.dual_partials(q);
        Mat out = Mat::Zero(basis.dual.rows(), basis.dual.cols());
        for (int j = 0; j < sys.dim; ++j)
            out += v(j) * d[j];
        return out;
    }
    if (sys.num_constraints == 0 && !sys.basis)
        return Mat::Zero(basis.dual.rows(), basis.dual.cols());
    const MatrixField field = [&sys, &basis](const Point& p) {
        if (sys.basis)
            return distribution_basis(sys, p).dual;
        return elimination_basis_at(sys, p, basis.free_columns).dual;
    };
    return fd_directional(field, q, v, sys.fd);
}

Vec solve_pairing(const DistributionBasis& basis, const Vec& target)
{
    const Mat mt = basis.pairing().transpose();
    return mt.fullPivLu().solve(Vec(basis.x.transpose() * target));
}

} // namespace

const char* to_string(ConditionMode mode)
{
    return mode == ConditionMode::full ? "full" : "paper";
}

Vec expand_covector(const DistributionBasis& basis, const Vec& coeffs)
{
    if (coeffs.size() != basis.dual.rows())
        throw Error(Errc::dimension_mismatch, "multiplier coefficients do not match the D* basis size");
    return basis.dual.transpose() * coeffs;
}

RecoveredControl recover_control(const MechanicalSystem& sys, const Point& q, const AdjointState& adj,
                                 const DistributionBasis* basis)
{
    const DistributionBasis local = basis != nullptr ? *basis : distribution_basis(sys, q);
    const Vec eta_full = expand_covector(local, adj.eta);
    const int n = sys.dim;
    const int p = sys.num_inputs;
    Mat act(n, n);
    act.leftCols(p) = input_vector_fields(sys, q);
    if (n > p)
        act.rightCols(n - p) = sys.unactuated_at(q).transpose();
    if (!act.allFinite() || rcond(act) < kActuationRcond)
        throw Error(Errc::actuation_degeneracy, "input and unactuated directions do not span the tangent space");
    const Vec sol = act.fullPivLu().solve(eta_full);
    return {sol.head(p), sol.tail(n - p)};
}

Vec reaction_term(const ProjectorPair& pp, const Vec& eta_full, const Vec& lambda_sharp)
{
    const int n = static_cast<int>(eta_full.size());
    Vec out(n);
    for (int k = 0; k < n; ++k)
        out(k) = eta_full.dot(pp.nabla_p[k] * lambda_sharp);
    return out;
}

AdjointRates geometric_adjoint_rhs(const MechanicalSystem& sys, const ExtremalState& ex, ConditionMode mode,
                                   const DistributionBasis* hint)
{
    const int n = sys.dim;
    const DistributionBasis basis = distribution_basis(sys, ex.q, hint);
    const Mat& theta = basis.dual;
    if (ex.adj.mu.size() != theta.rows() || ex.adj.eta.size() != theta.rows())
        throw Error(Errc::dimension_mismatch, "adjoint coefficients do not match the D* basis size");
    const Vec mu_full = theta.transpose() * ex.adj.mu;
    const Vec eta_full = theta.transpose() * ex.adj.eta;

    const Mat theta_dot = dual_rate(sys, ex.q, ex.v, basis);
    const Mat gamma_v = levi_civita(sys, ex.q).contract_direction(ex.v);

    AdjointRates out;
    out.curvature_term = levi_civita_curvature(sys, ex.q).apply(eta_full, ex.v, ex.v);
    out.lambda_sharp = Vec::Zero(n);
    out.lambda_term = Vec::Zero(n);
    if (sys.num_constraints > 0) {
        const RecoveredControl rc = recover_control(sys, ex.q, ex.adj, &basis);
        const ProjectorPair pp = projector_derivatives(sys, ex.q);
        const Vec u = input_vector(sys, ex.q, rc.tau);
        out.lambda_sharp = -pp.q * u - pp.nabla_q_along(ex.v) * ex.v;
        out.lambda_term = reaction_term(pp, eta_full, out.lambda_sharp);
    }

    Vec rhs_mu = out.curvature_term;
    if (mode == ConditionMode::full)
        rhs_mu += out.lambda_term;
    // theta^T mudot = rhs - theta_dot^T mu + Gamma_v^T mu_full
    const Vec b_mu = rhs_mu - theta_dot.transpose() * ex.adj.mu + gamma_v.transpose() * mu_full;
    const Vec b_eta = -mu_full - theta_dot.transpose() * ex.adj.eta + gamma_v.transpose() * eta_full;

    out.mudot = solve_pairing(basis, b_mu);
    out.etadot = solve_pairing(basis, b_eta);
    out.residual_orthogonal = (b_mu - theta.transpose() * out.mudot).norm();
    out.eta_residual_orthogonal = (b_eta - theta.transpose() * out.etadot).norm();
    return out;
}

namespace {

struct ExtremalRate {
    Vec qdot;
    Vec vdot;
    Vec mudot;
    Vec etadot;
};

ExtremalState advance(const ExtremalState& s, const ExtremalRate& k, double h)
{
    return {s.q + h * k.qdot, s.v + h * k.vdot, {s.adj.mu + h * k.mudot, s.adj.eta + h * k.etadot}};
}

bool finite(const ExtremalState& s)
{
    return s.q.allFinite() && s.v.allFinite() && s.adj.mu.allFinite() && s.adj.eta.allFinite();
}

} // namespace

Trajectory integrate_extremal(const MechanicalSystem& sys, const ExtremalState& ex0, double horizon, double dt,
                              ConditionMode mode, const ExtremalOptions& options)
{
    if (!(dt > 0.0) || !(horizon >= 0.0))
        throw Error(Errc::invalid_argument, "integrate_extremal: dt must be positive and the horizon non-negative");
    const double drift0 = constraint_drift(sys, ex0.q, ex0.v);
    if (drift0 > sys.drift_tolerance)
        throw Error(Errc::invalid_argument,
                    "initial velocity violates the constraints (residual " + format_real(drift0) + ")");

    const long steps = std::max(1L, std::lround(horizon / dt));
    const double h = horizon / static_cast<double>(steps);

    Trajectory traj;
    auto& drift = traj.diagnostics["drift"];
    auto& reaction = traj.diagnostics["reaction_norm"];
    auto& orth = traj.diagnostics["residual_orthogonal"];

    DistributionBasis basis = distribution_basis(sys, ex0.q);

    const auto rate = [&](const ExtremalState& s) {
        const DistributionBasis b = distribution_basis(sys, s.q, &basis);
        const RecoveredControl rc = recover_control(sys, s.q, s.adj, &b);
        const StateRate dyn = forward_rhs_unchecked(sys, {s.q, s.v}, rc.tau);
        const AdjointRates adj = geometric_adjoint_rhs(sys, s, mode, &b);
        return ExtremalRate{dyn.qdot, dyn.vdot, adj.mudot, adj.etadot};
    };

    const auto record = [&](double t, const ExtremalState& s) {
        const RecoveredControl rc = recover_control(sys, s.q, s.adj, &basis);
        const AdjointRates adj = geometric_adjoint_rhs(sys, s, mode, &basis);
        traj.times.push_back(t);
        traj.states.push_back({s.q, s.v});
        traj.mu.push_back(s.adj.mu);
        traj.eta.push_back(s.adj.eta);
        traj.controls.push_back(rc.tau);
        traj.xi.push_back(rc.xi);
        drift.push_back(constraint_drift(sys, s.q, s.v));
        reaction.push_back(flat(sys.metric_at(s.q), adj.lambda_sharp).norm());
        orth.push_back(adj.residual_orthogonal);
    };

    ExtremalState s = ex0;
    record(0.0, s);
    for (long step = 0; step < steps; ++step) {
        const double t = h * static_cast<double>(step);
        const ExtremalRate k1 = rate(s);
        const ExtremalRate k2 = rate(advance(s, k1, 0.5 * h));
        const ExtremalRate k3 = rate(advance(s, k2, 0.5 * h));
        const ExtremalRate k4 = rate(advance(s, k3, h));
        ExtremalState next = s;
        next.q += (h / 6.0) * (k1.qdot + 2.0 * k2.qdot + 2.0 * k3.qdot + k4.qdot);
        next.v += (h / 6.0) * (k1.vdot + 2.0 * k2.vdot + 2.0 * k3.vdot + k4.vdot);
        next.adj.mu += (h / 6.0) * (k1.mudot + 2.0 * k2.mudot + 2.0 * k3.mudot + k4.mudot);
        next.adj.eta += (h / 6.0) * (k1.etadot + 2.0 * k2.etadot + 2.0 * k3.etadot + k4.etadot);
        if (!finite(next))
            throw IntegrationDiverged(t, "extremal integration diverged after t = " + format_real(t));
        if (options.reproject && sys.num_constraints > 0)
            next.v -= constraint_projector_q(sys.metric_at(next.q), sys.constraints_at(next.q)) * next.v;

        DistributionBasis next_basis = distribution_basis(sys, next.q, &basis);
        if (!sys.basis && next_basis.free_columns != basis.free_columns) {
            // Re-pivoted: carry the full covectors over to the new basis.
            const DistributionBasis old_at_next = elimination_basis_at(sys, next.q, basis.free_columns);
            next.adj.mu = solve_pairing(next_basis, expand_covector(old_at_next, next.adj.mu));
            next.adj.eta = solve_pairing(next_basis, expand_covector(old_at_next, next.adj.eta));
        }
        basis = std::move(next_basis);
        s = std::move(next);
        record(h * static_cast<double>(step + 1), s);
    }
    return traj;
}

double cost_functional(const MechanicalSystem& sys, const Trajectory& traj)
{
    if (traj.controls.size() != traj.size())
        throw Error(Errc::invalid_argument, "cost_functional: trajectory lacks controls at some samples");
    const auto running = [&](std::size_t i) {
        return 0.5 * input_vector(sys, traj.states[i].q, traj.controls[i]).squaredNorm();
    };
    double total = 0.0;
    if (traj.size() < 2)
        return total;
    double prev = running(0);
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double cur = running(i);
        total += 0.5 * (traj.times[i] - traj.times[i - 1]) * (prev + cur);
        prev = cur;
    }
    return total;
}

std::vector<Vec> time_derivative(const std::vector<double>& times, const std::vector<Vec>& values)
{
    const std::size_t count = values.size();
    std::vector<Vec> out(count);
    if (count < 2) {
        for (std::size_t i = 0; i < count; ++i)
            out[i] = Vec::Zero(values[i].size());
        return out;
    }
    const double h = (times.back() - times.front()) / static_cast<double>(count - 1);
    if (count < 5) {
        for (std::size_t i = 0; i < count; ++i) {
            if (i == 0)
                out[i] = (values[1] - values[0]) / h;
            else if (i == count - 1)
                out[i] = (values[i] - values[i - 1]) / h;
            else
                out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }
        return out;
    }
    const auto& f = values;
    const std::size_t e = count - 1;
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    for (std::size_t i = 2; i + 2 < count; ++i)
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    out[e - 1] = (3.0 * f[e] + 10.0 * f[e - 1] - 18.0 * f[e - 2] + 6.0 * f[e - 3] - f[e - 4]) / (12.0 * h);
    out[e] = (25.0 * f[e] - 48.0 * f[e - 1] + 36.0 * f[e - 2] - 16.0 * f[e - 3] + 3.0 * f[e - 4]) / (12.0 * h);
    return out;
}

std::vector<ResidualRecord> necessary_condition_residual(const MechanicalSystem& sys, const Trajectory& traj,
                                                         ConditionMode mode)
{
    const std::size_t count = traj.size();
    if (traj.mu.size() != count || traj.eta.size() != count || traj.controls.size() != count)
        throw Error(Errc::invalid_argument, "trajectory lacks adjoints or controls");
    const std::vector<Vec> mudot = time_derivative(traj.times, traj.mu);
    const std::vector<Vec> etadot = time_derivative(traj.times, traj.eta);

    std::vector<ResidualRecord> out;
    out.reserve(count);
    DistributionBasis basis;
    for (std::size_t i = 0; i < count; ++i) {
        const DynState& st = traj.states[i];
        basis = distribution_basis(sys, st.q, i == 0 ? nullptr : &basis);
        const ExtremalState ex{st.q, st.v, {traj.mu[i], traj.eta[i]}};
        const AdjointRates rates = geometric_adjoint_rhs(sys, ex, mode, &basis);

        Vec applied = input_vector(sys, st.q, traj.controls[i]);
        if (i < traj.xi.size() && traj.xi[i].size() == sys.dim - sys.num_inputs && traj.xi[i].size() > 0)
            applied += sys.unactuated_at(st.q).transpose() * traj.xi[i];

        ResidualRecord r;
        r.control = (applied - expand_covector(basis, traj.eta[i])).norm();
        r.mu_projected = (mudot[i] - rates.mudot).norm();
        r.mu_orthogonal = rates.residual_orthogonal;
        r.eta = (etadot[i] - rates.etadot).norm();
        r.eta_orthogonal = rates.eta_residual_orthogonal;
        r.curvature_norm = rates.curvature_term.norm();
        r.lambda_term_norm = rates.lambda_term.norm();
        out.push_back(r);
    }
    return out;
}

void write_extremal_csv(const Trajectory& traj, const std::vector<ResidualRecord>& residuals, std::ostream& os)
{
    if (traj.size() == 0)
        return;
    const auto n = traj.states.front().q.size();
    const auto k = traj.mu.front().size();
    const auto p = traj.controls.front().size();
    const auto nx = traj.xi.empty() ? Eigen::Index{0} : traj.xi.front().size();
    os << "t";
    for (Eigen::Index i = 1; i <= n; ++i)
        os << ",q" << i;
    for (Eigen::Index i = 1; i <= n; ++i)
        os << ",v" << i;
    for (Eigen::Index i = 1; i <= k; ++i)
        os << ",mu" << i;
    for (Eigen::Index i = 1; i <= k; ++i)
        os << ",eta" << i;
    for (Eigen::Index i = 1; i <= p; ++i)
        os << ",tau" << i;
    for (Eigen::Index i = 1; i <= nx; ++i)
        os << ",xi" << i;
    os << ",res_control,res_mu_proj,res_mu_orth,res_eta\n";
    for (std::size_t s = 0; s < traj.size(); ++s) {
        const auto row = [&os](const Vec& x) {
            for (Eigen::Index i = 0; i < x.size(); ++i)
                os << ',' << format_real(x(i));
        };
        os << format_real(traj.times[s]);
        row(traj.states[s].q);
        row(traj.states[s].v);
        row(traj.mu[s]);
        row(traj.eta[s]);
        row(traj.controls[s]);
        if (nx > 0)
            row(traj.xi[s]);
        const ResidualRecord& r = residuals.at(s);
        os << ',' << format_real(r.control) << ',' << format_real(r.mu_projected) << ','
           << format_real(r.mu_orthogonal) << ',' << format_real(r.eta) << '\n';
    }
}

} // namespace nonholo
