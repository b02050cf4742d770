#include "nonholo/coin.hpp"

#include "nonholo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nonholo::coin {

namespace {

Mat row(double a, double b, double c)
{
    Mat r(1, 3);
    r << a, b, c;
    return r;
}

std::vector<Mat> zeros(int k, int rows, int cols)
{
    return std::vector<Mat>(static_cast<std::size_t>(k), Mat::Zero(rows, cols));
}

MechanicalSystem base_system(const CoinParams& params, const std::string& name)
{
    params.validate();
    MechanicalSystem sys;
    sys.name = name;
    sys.dim = 3;
    sys.params = {{"m", params.m}, {"J", params.J}};
    const Mat g = metric(params);
    sys.metric = [g](const Point&) { return g; };
    sys.metric_partials = [](const Point&) { return zeros(3, 3, 3); };
    return sys;
}

void add_knife_edge(MechanicalSystem& sys)
{
    sys.num_constraints = 1;
    sys.constraints = [](const Point& q) { return Mat(constraint_form(q(2)).transpose()); };
    sys.constraint_partials = [](const Point& q) {
        std::vector<Mat> d = zeros(3, 1, 3);
        d[2] = row(std::cos(q(2)), std::sin(q(2)), 0.0);
        return d;
    };
    sys.basis = [](const Point& q) {
        const double c = std::cos(q(2));
        const double s = std::sin(q(2));
        DistributionBasis b;
        b.x = Mat(3, 2);
        b.x << c, 0.0, s, 0.0, 0.0, 1.0;
        b.dual = dstar_basis(q(2));
        b.annihilator = row(-s, c, 0.0);
        return b;
    };
    sys.dual_partials = [](const Point& q) {
        std::vector<Mat> d = zeros(3, 2, 3);
        d[2](0, 0) = -std::sin(q(2));
        d[2](0, 1) = std::cos(q(2));
        return d;
    };
}

} // namespace

void CoinParams::validate() const
{
    if (!(m > 0.0) || !(J > 0.0) || !std::isfinite(m) || !std::isfinite(J))
        throw Error(Errc::invalid_argument, "coin parameters m and J must be positive");
}

CoinParams params_from_map(const std::map<std::string, double>& values)
{
    CoinParams p;
    for (const auto& [key, value] : values) {
        if (key == "m")
            p.m = value;
        else if (key == "J")
            p.J = value;
        else
            throw Error(Errc::invalid_argument, "unknown coin parameter '" + key + "' (expected m, J)");
    }
    p.validate();
    return p;
}

MechanicalSystem build_coin(const CoinParams& params)
{
    MechanicalSystem sys = base_system(params, "coin");
    add_knife_edge(sys);
    sys.num_inputs = 2;
    sys.actuated = [](const Point& q) { return input_forms(q(2)); };
    sys.unactuated = [](const Point& q) { return Mat(unactuated_form(q(2)).transpose()); };
    return sys;
}

MechanicalSystem build_coin_x_force(const CoinParams& params)
{
    MechanicalSystem sys = base_system(params, "coin_x_force");
    add_knife_edge(sys);
    sys.num_inputs = 2;
    sys.actuated = [](const Point&) {
        Mat f = Mat::Zero(2, 3);
        f(0, 0) = 1.0;
        f(1, 2) = 1.0;
        return f;
    };
    sys.unactuated = [](const Point&) { return row(0.0, 1.0, 0.0); };
    return sys;
}

MechanicalSystem build_free_body(const CoinParams& params)
{
    MechanicalSystem sys = base_system(params, "free_body");
    sys.num_constraints = 0;
    sys.num_inputs = 3;
    sys.actuated = [](const Point&) { return Mat(Mat::Identity(3, 3)); };
    sys.unactuated = [](const Point&) { return Mat(0, 3); };
    return sys;
}

HamiltonianSpec classical_spec(const CoinParams& params)
{
    params.validate();
    const double m = params.m;
    const double J = params.J;
    HamiltonianSpec spec;
    spec.dim = 3;
    spec.num_inputs = 2;
    spec.f = [m, J](const Point& q, const Vec& v, const Vec& tau) {
        Vec f(3);
        f << -v(1) * v(2) + std::cos(q(2)) * tau(0) / m, v(0) * v(2) + std::sin(q(2)) * tau(0) / m, tau(1) / J;
        return f;
    };
    spec.running_cost = [m, J](const Point&, const Vec& tau) {
        return 0.5 * (tau(0) * tau(0) / (m * m) + tau(1) * tau(1) / (J * J));
    };
    spec.analytic_rates = [m](const Point& q, const Vec& v, const ClassicalAdjoint& adj, const Vec& tau) {
        const double c = std::cos(q(2));
        const double s = std::sin(q(2));
        const Vec& mb = adj.mubar;
        const Vec& eb = adj.etabar;
        ClassicalAdjointRates r{Vec(3), Vec(3)};
        r.mubardot << 0.0, 0.0, tau(0) / m * (s * eb(0) - c * eb(1));
        r.etabardot << -mb(0) - eb(1) * v(2), -mb(1) + eb(0) * v(2), -mb(2) + eb(0) * v(1) - eb(1) * v(0);
        return r;
    };
    return spec;
}

Mat metric(const CoinParams& params)
{
    return Vec((Vec(3) << params.m, params.m, params.J).finished()).asDiagonal();
}

Vec constraint_form(double q3)
{
    return (Vec(3) << std::sin(q3), -std::cos(q3), 0.0).finished();
}

Mat input_forms(double q3)
{
    Mat f(2, 3);
    f << std::cos(q3), std::sin(q3), 0.0, 0.0, 0.0, 1.0;
    return f;
}

Mat input_forms_uncorrected(double q3)
{
    Mat f(2, 3);
    f << std::cos(q3), std::cos(q3), 0.0, 0.0, 0.0, 1.0;
    return f;
}

Vec unactuated_form(double q3)
{
    return (Vec(3) << -std::sin(q3), std::cos(q3), 0.0).finished();
}

Mat input_fields(double q3, const CoinParams& params)
{
    Mat y = Mat::Zero(3, 2);
    y(0, 0) = std::cos(q3) / params.m;
    y(1, 0) = std::sin(q3) / params.m;
    y(2, 1) = 1.0 / params.J;
    return y;
}

Vec input_vector(double q3, const Vec& tau, const CoinParams& params)
{
    return input_fields(q3, params) * tau;
}

Mat dstar_basis(double q3)
{
    Mat d(2, 3);
    d << std::cos(q3), std::sin(q3), 0.0, 0.0, 0.0, 1.0;
    return d;
}

Mat projector(double q3)
{
    const double c = std::cos(q3);
    const double s = std::sin(q3);
    Mat p = Mat::Zero(3, 3);
    p(0, 0) = c * c;
    p(0, 1) = c * s;
    p(1, 0) = c * s;
    p(1, 1) = s * s;
    p(2, 2) = 1.0;
    return p;
}

ConnectionCoefficients gamma_bar(double q3)
{
    std::vector<Mat> slices = zeros(3, 3, 3);
    const double s2 = std::sin(2.0 * q3);
    const double c2 = std::cos(2.0 * q3);
    slices[2](0, 0) = s2;
    slices[2](0, 1) = -c2;
    slices[2](1, 0) = -c2;
    slices[2](1, 1) = -s2;
    return ConnectionCoefficients(slices);
}

Vec gamma_bar_quadratic(double q3, const Vec& v)
{
    const double s2 = std::sin(2.0 * q3);
    const double c2 = std::cos(2.0 * q3);
    return (Vec(3) << v(2) * (v(0) * s2 - v(1) * c2), v(2) * (-v(0) * c2 - v(1) * s2), 0.0).finished();
}

Vec eom_unreduced(const Point& q, const Vec& v, const Vec& tau, const CoinParams& params)
{
    const double s2 = std::sin(2.0 * q(2));
    const double c2 = std::cos(2.0 * q(2));
    Vec a(3);
    a << (-v(0) * s2 + v(1) * c2) * v(2) + std::cos(q(2)) * tau(0) / params.m,
        (v(0) * c2 + v(1) * s2) * v(2) + std::sin(q(2)) * tau(0) / params.m, tau(1) / params.J;
    return a;
}

Vec eom(const Point& q, const Vec& v, const Vec& tau, const CoinParams& params)
{
    Vec a(3);
    a << -v(1) * v(2) + std::cos(q(2)) * tau(0) / params.m, v(0) * v(2) + std::sin(q(2)) * tau(0) / params.m,
        tau(1) / params.J;
    return a;
}

Vec control_from_eta(const Vec& eta, const CoinParams& params)
{
    return (Vec(2) << params.m * eta(0), params.J * eta(1)).finished();
}

CoinAdjointRates adjoint_rates(const AdjointState& adj)
{
    return {Vec::Zero(2), Vec(-adj.mu)};
}

AdjointState analytic_extremal(const AdjointState& initial, double t, bool uncorrected)
{
    AdjointState out{initial.mu, Vec(2)};
    out.eta(0) = -initial.mu(0) * t + initial.eta(0);
    out.eta(1) = uncorrected ? -initial.mu(1) + initial.eta(1) : -initial.mu(1) * t + initial.eta(1);
    return out;
}

Vec classical_control(double q3, const Vec& etabar, const CoinParams& params)
{
    return (Vec(2) << params.m * (etabar(0) * std::cos(q3) + etabar(1) * std::sin(q3)), params.J * etabar(2))
        .finished();
}

ClassicalAdjointRates classical_rates(const Point& q, const Vec& v, const ClassicalAdjoint& adj,
                                      const CoinParams& /*params*/)
{
    const double s2 = std::sin(2.0 * q(2));
    const double c2 = std::cos(2.0 * q(2));
    const Vec& mb = adj.mubar;
    const Vec& eb = adj.etabar;
    ClassicalAdjointRates r{Vec(3), Vec(3)};
    r.mubardot << 0.0, 0.0, 0.5 * s2 * (eb(0) * eb(0) - eb(1) * eb(1)) - eb(0) * eb(1) * c2;
    r.etabardot << -mb(0) - eb(1) * v(2), -mb(1) + eb(0) * v(2), -mb(2) + eb(0) * v(1) - eb(1) * v(0);
    return r;
}

ClassicalAdjoint to_classical(double q3, const AdjointState& adj)
{
    const Mat d = dstar_basis(q3);
    return {d.transpose() * adj.mu, d.transpose() * adj.eta};
}

MappedAdjoints from_classical(double q3, const ClassicalAdjoint& adj)
{
    const double c = std::cos(q3);
    const double s = std::sin(q3);
    const auto split = [&](const Vec& bar, Vec& coeffs, Vec& orth) {
        coeffs = (Vec(2) << bar(0) * c + bar(1) * s, bar(2)).finished();
        orth = (Vec(1) << -bar(0) * s + bar(1) * c).finished();
    };
    MappedAdjoints out;
    split(adj.mubar, out.mu, out.mu_orth);
    split(adj.etabar, out.eta, out.eta_orth);
    return out;
}

const char* to_string(Component component)
{
    switch (component) {
    case Component::gamma: return "gamma";
    case Component::projector: return "projector";
    case Component::eom: return "eom";
    case Component::adjoint_ode: return "adjoint_ode";
    case Component::analytic_extremal: return "analytic_extremal";
    case Component::classical: return "classical";
    case Component::mapping: return "mapping";
    }
    return "unknown";
}

std::vector<Sample> random_samples(int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto vec = [&](int n, double scale) {
        Vec v(n);
        for (int i = 0; i < n; ++i)
            v(i) = scale * unit(rng);
        return v;
    };
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(std::max(0, count)));
    for (int i = 0; i < count; ++i) {
        Sample s;
        s.q = vec(3, 2.0);
        s.q(2) = 3.14159 * unit(rng);
        const double forward = 2.0 * unit(rng);
        const double turn = 2.0 * unit(rng);
        s.v = (Vec(3) << forward * std::cos(s.q(2)), forward * std::sin(s.q(2)), turn).finished();
        s.tau = vec(2, 2.0);
        s.adj = {vec(2, 1.5), vec(2, 1.5)};
        s.classical = {vec(3, 1.5), vec(3, 1.5)};
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> heading_grid(const std::vector<double>& headings)
{
    std::vector<Sample> out;
    for (double h : headings) {
        Sample s;
        s.q = (Vec(3) << 0.3, -0.2, h).finished();
        s.v = (Vec(3) << 0.8 * std::cos(h), 0.8 * std::sin(h), -0.6).finished();
        s.tau = (Vec(2) << 0.7, -0.4).finished();
        s.adj = {(Vec(2) << 0.5, -0.25).finished(), (Vec(2) << 1.0, 0.75).finished()};
        s.classical = {(Vec(3) << 0.4, -0.3, 0.2).finished(), (Vec(3) << 0.9, 0.6, -0.5).finished()};
        out.push_back(std::move(s));
    }
    return out;
}

FixtureReport fixture_check(Component component, const std::vector<Sample>& grid, const CoinParams& params,
                            const FixtureOptions& options)
{
    if (grid.empty())
        throw Error(Errc::invalid_argument, "fixture_check requires a nonempty grid");
    MechanicalSystem sys = build_coin(params);
    if (options.path == Path::finite_difference)
        sys = with_finite_differences(sys);
    const HamiltonianSpec spec = classical_spec(params);

    FixtureReport report{component, 0.0, static_cast<int>(grid.size())};
    const auto track = [&report](double err) { report.max_error = std::max(report.max_error, err); };
    for (const Sample& s : grid) {
        const double q3 = s.q(2);
        switch (component) {
        case Component::gamma: {
            const ConnectionCoefficients gb = nonholonomic_christoffel(sys, s.q);
            const ConnectionCoefficients ref = gamma_bar(q3);
            for (int j = 0; j < 3; ++j)
                track((gb.slice(j) - ref.slice(j)).cwiseAbs().maxCoeff());
            track((gb.quadratic(s.v) - gamma_bar_quadratic(q3, s.v)).cwiseAbs().maxCoeff());
            break;
        }
        case Component::projector: {
            const Mat g = sys.metric_at(s.q);
            const ProjectorPair pp = projectors(distribution_basis(sys, s.q), g);
            track((pp.p - projector(q3)).cwiseAbs().maxCoeff());
            track((constraint_projector_q(g, sys.constraints_at(s.q)) - (Mat::Identity(3, 3) - projector(q3)))
                      .cwiseAbs()
                      .maxCoeff());
            break;
        }
        case Component::eom: {
            const StateRate r = forward_rhs(sys, {s.q, s.v}, s.tau);
            track((r.vdot - eom(s.q, s.v, s.tau, params)).cwiseAbs().maxCoeff());
            track((r.qdot - s.v).cwiseAbs().maxCoeff());
            break;
        }
        case Component::adjoint_ode: {
            const AdjointRates r = geometric_adjoint_rhs(sys, {s.q, s.v, s.adj}, ConditionMode::paper_literal);
            const CoinAdjointRates ref = adjoint_rates(s.adj);
            track((r.mudot - ref.mudot).cwiseAbs().maxCoeff());
            track((r.etadot - ref.etadot).cwiseAbs().maxCoeff());
            break;
        }
        case Component::analytic_extremal: {
            const Trajectory traj = integrate_extremal(sys, {s.q, s.v, s.adj}, options.horizon, options.dt,
                                                       ConditionMode::paper_literal);
            for (std::size_t i = 0; i < traj.size(); ++i) {
                const AdjointState ref = analytic_extremal(s.adj, traj.times[i]);
                track((traj.mu[i] - ref.mu).cwiseAbs().maxCoeff());
                track((traj.eta[i] - ref.eta).cwiseAbs().maxCoeff());
            }
            break;
        }
        case Component::classical: {
            const Vec tau = stationarity_solve(spec, s.q, s.v, s.classical.etabar);
            track((tau - classical_control(q3, s.classical.etabar, params)).cwiseAbs().maxCoeff());
            const ClassicalAdjointRates r = options.path == Path::finite_difference
                                                ? classical_adjoint_rhs_fd(spec, s.q, s.v, s.classical, tau)
                                                : classical_adjoint_rhs(spec, s.q, s.v, s.classical, tau);
            const ClassicalAdjointRates ref = classical_rates(s.q, s.v, s.classical, params);
            track((r.mubardot - ref.mubardot).cwiseAbs().maxCoeff());
            track((r.etabardot - ref.etabardot).cwiseAbs().maxCoeff());
            break;
        }
        case Component::mapping: {
            const MappedAdjoints mapped = map_adjoints(s.q, s.classical, distribution_basis(sys, s.q));
            const MappedAdjoints ref = from_classical(q3, s.classical);
            track((mapped.mu - ref.mu).cwiseAbs().maxCoeff());
            track((mapped.eta - ref.eta).cwiseAbs().maxCoeff());
            track((mapped.mu_orth - ref.mu_orth).cwiseAbs().maxCoeff());
            track((mapped.eta_orth - ref.eta_orth).cwiseAbs().maxCoeff());
            break;
        }
        }
    }
    return report;
}

} // namespace nonholo::coin
