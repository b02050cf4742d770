#include "nonholo/dynamics.hpp"

#include "nonholo/errors.hpp"

#include <cmath>
#include <cstdio>

namespace nonholo {

Mat MechanicalSystem::actuated_at(const Point& q) const
{
    Mat f = actuated(q);
    if (f.rows() != num_inputs || f.cols() != dim)
        throw Error(Errc::dimension_mismatch, "actuated field returned wrong shape");
    return f;
}

Mat MechanicalSystem::unactuated_at(const Point& q) const
{
    if (num_inputs == dim || !unactuated)
        return Mat(0, dim);
    Mat f = unactuated(q);
    if (f.rows() != dim - num_inputs || f.cols() != dim)
        throw Error(Errc::dimension_mismatch, "unactuated field returned wrong shape");
    return f;
}

MechanicalSystem with_finite_differences(MechanicalSystem sys)
{
    static_cast<ChartModel&>(sys) = with_finite_differences(static_cast<ChartModel>(sys));
    return sys;
}

Mat input_vector_fields(const MechanicalSystem& sys, const Point& q)
{
    const Mat g = sys.metric_at(q);
    return g.ldlt().solve(Mat(sys.actuated_at(q).transpose()));
}

Vec input_vector(const MechanicalSystem& sys, const Point& q, const Vec& tau)
{
    if (tau.size() != sys.num_inputs)
        throw Error(Errc::dimension_mismatch, "control vector length does not match number of inputs");
    return input_vector_fields(sys, q) * tau;
}

StateRate forward_rhs_unchecked(const MechanicalSystem& sys, const DynState& state, const Vec& tau)
{
    const Vec u = input_vector(sys, state.q, tau);
    const ConnectionCoefficients gbar = nonholonomic_christoffel(sys, state.q);
    Vec pu = u;
    if (sys.num_constraints > 0) {
        const Mat g = sys.metric_at(state.q);
        pu = u - constraint_projector_q(g, sys.constraints_at(state.q)) * u;
    }
    return {state.v, Vec(-gbar.quadratic(state.v) + pu)};
}

StateRate forward_rhs(const MechanicalSystem& sys, const DynState& state, const Vec& tau)
{
    const double drift = constraint_drift(sys, state.q, state.v);
    if (drift > sys.drift_tolerance)
        throw Error(Errc::invalid_argument,
                    "state violates the constraints (residual " + format_real(drift) + ")");
    return forward_rhs_unchecked(sys, state, tau);
}

StateRate forward_rhs_levi_civita(const MechanicalSystem& sys, const DynState& state, const Vec& tau)
{
    const Vec u = input_vector(sys, state.q, tau);
    const ConnectionCoefficients gamma = levi_civita(sys, state.q);
    const ReactionForce lambda = reaction_force(sys, state, tau);
    return {state.v, Vec(-gamma.quadratic(state.v) + u + lambda.vector)};
}

Vec project_input(const MechanicalSystem& sys, const Point& q, const Vec& tau)
{
    const Vec u = input_vector(sys, q, tau);
    if (sys.num_constraints == 0)
        return u;
    return u - constraint_projector_q(sys.metric_at(q), sys.constraints_at(q)) * u;
}

ReactionForce reaction_force(const MechanicalSystem& sys, const DynState& state, const Vec& tau)
{
    const int n = sys.dim;
    ReactionForce out{Vec::Zero(n), Vec::Zero(n)};
    if (sys.num_constraints == 0)
        return out;
    const Vec u = input_vector(sys, state.q, tau);
    const ProjectorPair pp = projector_derivatives(sys, state.q);
    out.vector = -pp.q * u - pp.nabla_q_along(state.v) * state.v;
    out.covector = flat(sys.metric_at(state.q), out.vector);
    return out;
}

namespace {

void check_finite_state(const DynState& s, double last_time)
{
    if (!s.q.allFinite() || !s.v.allFinite())
        throw IntegrationDiverged(last_time, "integration diverged after t = " + format_real(last_time));
}

Vec reproject_velocity(const MechanicalSystem& sys, const Point& q, const Vec& v)
{
    if (sys.num_constraints == 0)
        return v;
    return v - constraint_projector_q(sys.metric_at(q), sys.constraints_at(q)) * v;
}

} // namespace

Trajectory integrate(const MechanicalSystem& sys, const DynState& state0, const ControlFn& control,
                     double horizon, double dt, const IntegrateOptions& options)
{
    if (!(dt > 0.0) || !(horizon >= 0.0))
        throw Error(Errc::invalid_argument, "integrate: dt must be positive and the horizon non-negative");
    const double drift0 = constraint_drift(sys, state0.q, state0.v);
    if (drift0 > sys.drift_tolerance)
        throw Error(Errc::invalid_argument,
                    "initial velocity violates the constraints (residual " + format_real(drift0) + ")");

    const long steps = std::max(1L, std::lround(horizon / dt));
    const double h = horizon / static_cast<double>(steps);

    Trajectory traj;
    traj.times.reserve(static_cast<std::size_t>(steps + 1));
    auto& drift = traj.diagnostics["drift"];
    auto& reaction = traj.diagnostics["reaction_norm"];

    const auto record = [&](double t, const DynState& s) {
        const Vec tau = control(t, s);
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.controls.push_back(tau);
        drift.push_back(constraint_drift(sys, s.q, s.v));
        reaction.push_back(reaction_force(sys, s, tau).covector.norm());
    };

    const auto rate = [&](double t, const DynState& s) {
        return forward_rhs_unchecked(sys, s, control(t, s));
    };

    DynState s = state0;
    record(0.0, s);
    for (long step = 0; step < steps; ++step) {
        const double t = h * static_cast<double>(step);
        const StateRate k1 = rate(t, s);
        const DynState s2{s.q + 0.5 * h * k1.qdot, s.v + 0.5 * h * k1.vdot};
        check_finite_state(s2, t);
        const StateRate k2 = rate(t + 0.5 * h, s2);
        const DynState s3{s.q + 0.5 * h * k2.qdot, s.v + 0.5 * h * k2.vdot};
        check_finite_state(s3, t);
        const StateRate k3 = rate(t + 0.5 * h, s3);
        const DynState s4{s.q + h * k3.qdot, s.v + h * k3.vdot};
        check_finite_state(s4, t);
        const StateRate k4 = rate(t + h, s4);
        DynState next{s.q + (h / 6.0) * (k1.qdot + 2.0 * k2.qdot + 2.0 * k3.qdot + k4.qdot),
                      s.v + (h / 6.0) * (k1.vdot + 2.0 * k2.vdot + 2.0 * k3.vdot + k4.vdot)};
        check_finite_state(next, t);
        if (options.reproject)
            next.v = reproject_velocity(sys, next.q, next.v);
        s = std::move(next);
        record(h * static_cast<double>(step + 1), s);
    }
    return traj;
}

double energy_balance_error(const MechanicalSystem& sys, const Trajectory& traj)
{
    if (traj.size() < 2)
        return 0.0;
    const auto kinetic = [&](std::size_t i) {
        const DynState& s = traj.states[i];
        return 0.5 * s.v.dot(sys.metric_at(s.q) * s.v);
    };
    const auto power = [&](std::size_t i) {
        const DynState& s = traj.states[i];
        return flat(sys.metric_at(s.q), input_vector(sys, s.q, traj.controls[i])).dot(s.v);
    };
    double work = 0.0;
    double prev = power(0);
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double cur = power(i);
        work += 0.5 * (traj.times[i] - traj.times[i - 1]) * (prev + cur);
        prev = cur;
    }
    return kinetic(traj.size() - 1) - kinetic(0) - work;
}

std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os)
{
    if (traj.size() == 0)
        return;
    const auto n = traj.states.front().q.size();
    const auto p = traj.controls.front().size();
    os << "t";
    for (Eigen::Index i = 1; i <= n; ++i)
        os << ",q" << i;
    for (Eigen::Index i = 1; i <= n; ++i)
        os << ",v" << i;
    for (Eigen::Index i = 1; i <= p; ++i)
        os << ",tau" << i;
    os << ",drift,reaction_norm\n";
    const auto& drift = traj.diagnostics.at("drift");
    const auto& reaction = traj.diagnostics.at("reaction_norm");
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << format_real(traj.times[k]);
        for (Eigen::Index i = 0; i < n; ++i)
            os << ',' << format_real(traj.states[k].q(i));
        for (Eigen::Index i = 0; i < n; ++i)
            os << ',' << format_real(traj.states[k].v(i));
        for (Eigen::Index i = 0; i < p; ++i)
            os << ',' << format_real(traj.controls[k](i));
        os << ',' << format_real(drift[k]) << ',' << format_real(reaction[k]) << '\n';
    }
}

} // namespace nonholo
