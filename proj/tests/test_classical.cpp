#include "doctest.h"

#include "nonholo/classical.hpp"
#include "nonholo/coin.hpp"
#include "nonholo/optimality.hpp"

#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace nonholo;

namespace {

Vec v2(double a, double b)
{
    return (Vec(2) << a, b).finished();
}

Vec v3(double a, double b, double c)
{
    return (Vec(3) << a, b, c).finished();
}

HamiltonianSpec fd_only(HamiltonianSpec spec)
{
    spec.analytic_rates = nullptr;
    return spec;
}

Trajectory classical_extremal(const coin::CoinParams& p, double horizon)
{
    const double q3 = 0.4;
    const DynState s0{v3(0, 0, q3), v3(0.6 * std::cos(q3), 0.6 * std::sin(q3), 0.5)};
    const ClassicalAdjoint a0{v3(0.3, -0.5, 0.2), v3(0.8, 0.4, -0.6)};
    return integrate_classical(coin::classical_spec(p), s0, a0, horizon, 1e-3);
}

} // namespace

TEST_CASE("first-order dynamics examples")
{
    const HamiltonianSpec spec = coin::classical_spec({});
    StateRate r = classical_rhs(spec, Vec::Zero(3), v3(1, 0, 1), Vec::Zero(2));
    CHECK(test::max_abs(r.vdot - v3(0, 1, 0)) <= 1e-15);
    CHECK(test::max_abs(r.qdot - v3(1, 0, 1)) == 0.0);
    r = classical_rhs(spec, v3(1, 1, 1), Vec::Zero(3), Vec::Zero(2));
    CHECK(test::max_abs(r.vdot) == 0.0);
    CHECK(test::max_abs(r.qdot) == 0.0);
    r = classical_rhs(spec, v3(0, 0, std::numbers::pi / 2), Vec::Zero(3), v2(1.7, 0));
    CHECK(test::max_abs(r.vdot - v3(0, 1.7, 0)) <= 1e-15);
}

TEST_CASE("stationarity")
{
    const HamiltonianSpec unit = coin::classical_spec({});
    const double a = 0.7, b = -1.1, c = 0.4;
    CHECK(test::max_abs(stationarity_solve(unit, Vec::Zero(3), Vec::Zero(3), v3(a, b, c)) - v2(a, c)) <= 1e-12);
    CHECK(test::max_abs(stationarity_solve(unit, v3(0, 0, 1), v3(1, 2, 3), Vec::Zero(3))) <= 1e-15);
    const HamiltonianSpec heavy = coin::classical_spec({2.0, 1.0});
    const Vec tau = stationarity_solve(heavy, v3(0, 0, std::numbers::pi / 4), Vec::Zero(3), v3(1, 1, 0));
    CHECK(tau(0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(tau(1)) <= 1e-12);

    for (const auto& s : coin::random_samples(30, 3)) {
        const coin::CoinParams p{1.7, 0.6};
        const Vec t = stationarity_solve(coin::classical_spec(p), s.q, s.v, s.classical.etabar);
        CHECK(test::max_abs(t - coin::classical_control(s.q(2), s.classical.etabar, p)) <= 1e-10);
    }

    HamiltonianSpec flat = unit;
    flat.running_cost = [](const Point&, const Vec&) { return 0.0; };
    CHECK(test::error_code([&] { stationarity_solve(flat, Vec::Zero(3), Vec::Zero(3), v3(1, 0, 0)); }) ==
          Errc::stationarity_degenerate);
}

TEST_CASE("costate rates")
{
    const coin::CoinParams p{};
    const HamiltonianSpec spec = coin::classical_spec(p);
    const double a = 0.9, b = -0.4;
    const ClassicalAdjoint adj{v3(0.1, 0.2, 0.3), v3(a, b, 0.5)};
    const Vec tau = stationarity_solve(spec, Vec::Zero(3), Vec::Zero(3), adj.etabar);
    for (const HamiltonianSpec& s : {spec, fd_only(spec)})
        CHECK(classical_adjoint_rhs(s, Vec::Zero(3), Vec::Zero(3), adj, tau).mubardot(2) ==
              doctest::Approx(-a * b).epsilon(1e-8));

    const ClassicalAdjoint zero{Vec::Zero(3), Vec::Zero(3)};
    const ClassicalAdjointRates z = classical_adjoint_rhs_fd(spec, v3(1, 2, 3), v3(0.1, 0.2, 0.3), zero, Vec::Zero(2));
    CHECK(test::max_abs(z.mubardot) <= 1e-12);
    CHECK(test::max_abs(z.etabardot) <= 1e-12);
}

TEST_CASE("finite-difference costates match the closed form")
{
    for (const coin::CoinParams& p : {coin::CoinParams{}, coin::CoinParams{1.8, 0.7}}) {
        const HamiltonianSpec spec = coin::classical_spec(p);
        for (const auto& s : coin::random_samples(100, 41)) {
            const Vec tau = stationarity_solve(spec, s.q, s.v, s.classical.etabar);
            const ClassicalAdjointRates fd = classical_adjoint_rhs_fd(spec, s.q, s.v, s.classical, tau);
            const ClassicalAdjointRates closed = coin::classical_rates(s.q, s.v, s.classical, p);
            const ClassicalAdjointRates over = classical_adjoint_rhs(spec, s.q, s.v, s.classical, tau);
            CHECK(test::max_abs(fd.mubardot - closed.mubardot) <= 1e-6);
            CHECK(test::max_abs(fd.etabardot - closed.etabardot) <= 1e-6);
            CHECK(test::max_abs(over.mubardot - closed.mubardot) <= 1e-12);
            CHECK(test::max_abs(over.etabardot - closed.etabardot) <= 1e-12);
        }
    }
}

TEST_CASE("adjoint mapping")
{
    const MechanicalSystem sys = coin::build_coin({});
    for (double q3 : {0.0, 0.5, -1.9}) {
        const Point q = v3(0, 0, q3);
        const DistributionBasis b = distribution_basis(sys, q);
        const ClassicalAdjoint in{v3(0.7 * std::cos(q3), 0.7 * std::sin(q3), -0.3),
                                  v3(-0.2 * std::cos(q3), -0.2 * std::sin(q3), 1.1)};
        const MappedAdjoints m = map_adjoints(q, in, b);
        CHECK(test::max_abs(m.mu - v2(0.7, -0.3)) <= 1e-12);
        CHECK(test::max_abs(m.eta - v2(-0.2, 1.1)) <= 1e-12);
        CHECK(test::max_abs(m.mu_orth) <= 1e-12);
        CHECK(test::max_abs(m.eta_orth) <= 1e-12);
        const MappedAdjoints zero = map_adjoints(q, {Vec::Zero(3), Vec::Zero(3)}, b);
        CHECK(test::max_abs(zero.mu) == 0.0);
        CHECK(test::max_abs(zero.mu_orth) == 0.0);
    }
    const MappedAdjoints lat =
        map_adjoints(Vec::Zero(3), {v3(0, 1, 0), Vec::Zero(3)}, distribution_basis(sys, Vec::Zero(3)));
    CHECK(std::abs(lat.mu(0)) <= 1e-15);
    CHECK(lat.mu_orth(0) == doctest::Approx(1.0));

    for (const auto& s : coin::random_samples(30, 8)) {
        const MappedAdjoints a = map_adjoints(s.q, s.classical, distribution_basis(sys, s.q));
        const MappedAdjoints c = coin::from_classical(s.q(2), s.classical);
        CHECK(test::max_abs(a.mu - c.mu) <= 1e-12);
        CHECK(test::max_abs(a.eta - c.eta) <= 1e-12);
        CHECK(test::max_abs(a.mu_orth - c.mu_orth) <= 1e-12);
    }
}

TEST_CASE("bridge between the two forms of the dynamics")
{
    const coin::CoinParams p{1.4, 0.9};
    const MechanicalSystem sys = coin::build_coin(p);
    const HamiltonianSpec spec = coin::classical_spec(p);
    const HamiltonianSpec generic = hamiltonian_from_system(sys);
    for (const auto& s : coin::random_samples(100, 13)) {
        const Vec ref = forward_rhs(sys, {s.q, s.v}, s.tau).vdot;
        CHECK(test::max_abs(classical_rhs(spec, s.q, s.v, s.tau).vdot - ref) <= 1e-10);
        CHECK(test::max_abs(classical_rhs(generic, s.q, s.v, s.tau).vdot - ref) <= 1e-10);
    }
}

TEST_CASE("properties along classical extremals")
{
    const coin::CoinParams p{1.2, 0.8};
    const MechanicalSystem sys = coin::build_coin(p);
    const HamiltonianSpec spec = coin::classical_spec(p);
    const Trajectory tr = classical_extremal(p, 1.0);
    REQUIRE(tr.size() == 1001);

    const auto adj_at = [&](std::size_t i) { return ClassicalAdjoint{tr.mu[i], tr.eta[i]}; };
    const double h0 = hamiltonian(spec, tr.states[0].q, tr.states[0].v, adj_at(0), tr.controls[0]);
    double drift = 0.0;
    std::vector<Vec> eta2, mu2;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const DynState& s = tr.states[i];
        const ClassicalAdjoint a = adj_at(i);
        drift = std::max(drift, std::abs(hamiltonian(spec, s.q, s.v, a, tr.controls[i]) - h0));

        const double c = std::cos(s.q(2)), sn = std::sin(s.q(2));
        eta2.push_back(Vec::Constant(1, a.etabar(0) * c + a.etabar(1) * sn));
        mu2.push_back(Vec::Constant(1, a.mubar(0) * c + a.mubar(1) * sn));

        // stationarity agrees with control recovery from the mapped eta
        const DistributionBasis b = distribution_basis(sys, s.q);
        const MappedAdjoints m = map_adjoints(s.q, a, b);
        const Vec tau = recover_control(sys, s.q, {m.mu, m.eta}, &b).tau;
        CHECK(test::max_abs(tau - tr.controls[i]) <= 1e-10);
    }
    CHECK(drift <= 1e-6);

    const std::vector<Vec> deta2 = time_derivative(tr.times, eta2);
    const std::vector<Vec> dmu2 = time_derivative(tr.times, mu2);
    double worst_eta = 0.0, worst_mu = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        worst_eta = std::max(worst_eta, std::abs(deta2[i](0) + mu2[i](0)));
        // mu2 rate equals mutilde v3 off the compatible subfamily
        const MappedAdjoints m = map_adjoints(tr.states[i].q, adj_at(i), distribution_basis(sys, tr.states[i].q));
        worst_mu = std::max(worst_mu, std::abs(dmu2[i](0) - m.mu_orth(0) * tr.states[i].v(2)));
    }
    CHECK(worst_eta <= 1e-8);
    CHECK(worst_mu <= 1e-8);
}
