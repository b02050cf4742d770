#include "doctest.h"

#include "nonholo/coin.hpp"

#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace nonholo;

namespace {

Vec v3(double a, double b, double c)
{
    return (Vec(3) << a, b, c).finished();
}

const std::vector<double> kHeadings{0.0,
                                    std::numbers::pi / 6,
                                    std::numbers::pi / 4,
                                    std::numbers::pi / 3,
                                    std::numbers::pi / 2,
                                    1.0,
                                    2.5};

} // namespace

TEST_CASE("model construction")
{
    const MechanicalSystem sys = coin::build_coin({});
    CHECK(sys.dim == 3);
    CHECK(sys.num_constraints == 1);
    CHECK(sys.num_inputs == 2);
    CHECK(sys.has_analytic_geometry());
    CHECK(test::max_abs(sys.metric_at(v3(1, 2, 3)) - Mat::Identity(3, 3)) == 0.0);
    CHECK(test::max_abs(sys.constraints_at(Vec::Zero(3)) - v3(0, -1, 0).transpose()) <= 1e-15);
    CHECK(sys.unactuated_at(Vec::Zero(3)).rows() == 1);

    const coin::CoinParams p{2.5, 0.7};
    const MechanicalSystem heavy = coin::build_coin(p);
    for (double q3 : kHeadings) {
        const Point q = v3(0.1, 0.2, q3);
        const Mat y = input_vector_fields(heavy, q);
        CHECK(std::abs(coin::unactuated_form(q3).dot(y.col(0))) <= 1e-15);
        CHECK(std::abs(coin::unactuated_form(q3).dot(y.col(1))) <= 1e-15);
        CHECK(test::max_abs(heavy.actuated_at(q) - coin::input_forms(q3)) <= 1e-15);
    }

    const MechanicalSystem free = coin::build_free_body({});
    CHECK(free.num_constraints == 0);
    CHECK(free.num_inputs == 3);
    const MechanicalSystem xf = coin::build_coin_x_force({});
    CHECK(test::max_abs(xf.actuated_at(v3(0, 0, 0.3)).row(0) - v3(1, 0, 0).transpose()) == 0.0);
}

TEST_CASE("parameters")
{
    const coin::CoinParams p = coin::params_from_map({{"m", 2.0}, {"J", 0.5}});
    CHECK(p.m == 2.0);
    CHECK(p.J == 0.5);
    CHECK(coin::params_from_map({}).m == 1.0);
    CHECK(test::error_code([] { coin::params_from_map({{"mass", 1.0}}); }) == Errc::invalid_argument);
    CHECK(test::error_code([] { coin::build_coin({0.0, 1.0}); }) == Errc::invalid_argument);
    CHECK(test::error_code([] { coin::build_coin({1.0, -1.0}); }) == Errc::invalid_argument);
}

TEST_CASE("uncorrected input form is inconsistent with its own sharp")
{
    const coin::CoinParams p{};
    for (double q3 : {0.3, 1.0, 2.5}) {
        const Vec y1 = coin::input_fields(q3, p).col(0);
        const Vec corrected = sharp(coin::metric(p), coin::input_forms(q3).row(0).transpose());
        const Vec wrong = sharp(coin::metric(p), coin::input_forms_uncorrected(q3).row(0).transpose());
        CHECK(test::max_abs(corrected - y1) <= 1e-15);
        CHECK(test::max_abs(wrong - y1) > 1e-2);
    }
}

TEST_CASE("fixture checks on the analytic path")
{
    const auto grid = coin::heading_grid(kHeadings);
    const auto random = coin::random_samples(200, 99);
    for (const coin::CoinParams& p : {coin::CoinParams{}, coin::CoinParams{1.7, 0.4}}) {
        CHECK(coin::fixture_check(coin::Component::projector, grid, p).max_error <= 1e-12);
        CHECK(coin::fixture_check(coin::Component::gamma, random, p).max_error <= 1e-12);
        CHECK(coin::fixture_check(coin::Component::eom, random, p).max_error <= 1e-12);
        CHECK(coin::fixture_check(coin::Component::adjoint_ode, random, p).max_error <= 1e-12);
        CHECK(coin::fixture_check(coin::Component::classical, random, p).max_error <= 1e-12);
        CHECK(coin::fixture_check(coin::Component::mapping, random, p).max_error <= 1e-12);
    }
    const auto few = coin::random_samples(4, 3);
    const coin::FixtureReport ext = coin::fixture_check(coin::Component::analytic_extremal, few);
    CHECK(ext.samples == 4);
    CHECK(ext.max_error <= 1e-10);
}

TEST_CASE("fixture checks on the finite-difference path")
{
    const coin::FixtureOptions fd{coin::Path::finite_difference};
    const auto grid = coin::heading_grid(kHeadings);
    const auto random = coin::random_samples(100, 17);
    CHECK(coin::fixture_check(coin::Component::projector, grid, {}, fd).max_error <= 1e-12);
    CHECK(coin::fixture_check(coin::Component::gamma, grid, {}, fd).max_error <= 1e-6);
    CHECK(coin::fixture_check(coin::Component::gamma, random, {}, fd).max_error <= 1e-6);
    CHECK(coin::fixture_check(coin::Component::eom, random, {}, fd).max_error <= 1e-8);
    CHECK(coin::fixture_check(coin::Component::adjoint_ode, random, {}, fd).max_error <= 1e-6);
    CHECK(coin::fixture_check(coin::Component::classical, random, {}, fd).max_error <= 1e-6);
    CHECK(coin::fixture_check(coin::Component::mapping, random, {}, fd).max_error <= 1e-12);
    CHECK(test::error_code([] { coin::fixture_check(coin::Component::gamma, {}); }) == Errc::invalid_argument);
}

TEST_CASE("fixture closed forms")
{
    // P at pi/4: every planar entry is 1/2.
    const Mat pm = coin::projector(std::numbers::pi / 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(pm(i, j) == doctest::Approx(0.5));
    CHECK(pm(2, 2) == 1.0);
    const Vec quad = coin::gamma_bar_quadratic(0.0, v3(0, 1, 1));
    CHECK(test::max_abs(quad - v3(-1, 0, 0)) <= 1e-15);
    CHECK(test::max_abs(coin::gamma_bar(0.7).quadratic(v3(0.2, 0.3, 0.4)) -
                        coin::gamma_bar_quadratic(0.7, v3(0.2, 0.3, 0.4))) <= 1e-15);
    const Vec u = coin::control_from_eta((Vec(2) << 1, 1).finished(), {2.0, 3.0});
    CHECK(test::max_abs(u - (Vec(2) << 2, 3).finished()) <= 1e-15);
}

TEST_CASE("unreduced and simplified equations of motion agree on D")
{
    for (const coin::CoinParams& p : {coin::CoinParams{}, coin::CoinParams{0.6, 2.2}})
        for (const auto& s : coin::random_samples(200, 5)) {
            CHECK(std::abs(std::sin(s.q(2)) * s.v(0) - std::cos(s.q(2)) * s.v(1)) <= 1e-12);
            CHECK(test::max_abs(coin::eom_unreduced(s.q, s.v, s.tau, p) - coin::eom(s.q, s.v, s.tau, p)) <= 1e-12);
        }
}

TEST_CASE("D* rows annihilate the constraint direction")
{
    for (double q3 : kHeadings) {
        const Mat d = coin::dstar_basis(q3);
        CHECK(test::max_abs(d * coin::constraint_form(q3)) <= 1e-12);
        CHECK(test::max_abs(d * coin::unactuated_form(q3)) <= 1e-12);
    }
}

TEST_CASE("forward speed is conserved under pure torque")
{
    const MechanicalSystem sys = coin::build_coin({1.3, 0.9});
    const ControlFn torque = [](double t, const DynState&) { return Vec((Vec(2) << 0.0, std::sin(2.0 * t) + 0.3).finished()); };
    for (bool reproject : {true, false}) {
        const Trajectory t = integrate(sys, {Vec::Zero(3), v3(0.8, 0, 0.2)}, torque, 2.0, 1e-3, {reproject});
        for (const auto& s : t.states)
            CHECK(std::abs(std::cos(s.q(2)) * s.v(0) + std::sin(s.q(2)) * s.v(1) - 0.8) <= 1e-8);
    }
}

TEST_CASE("sample generators are deterministic")
{
    const auto a = coin::random_samples(10, 123);
    const auto b = coin::random_samples(10, 123);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i].q.array() == b[i].q.array()).all());
        CHECK((a[i].classical.etabar.array() == b[i].classical.etabar.array()).all());
    }
    const auto g = coin::heading_grid({0.25});
    REQUIRE(g.size() == 1);
    CHECK(g[0].q(2) == 0.25);
    CHECK(std::abs(std::sin(0.25) * g[0].v(0) - std::cos(0.25) * g[0].v(1)) <= 1e-15);
}
