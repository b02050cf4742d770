#include "doctest.h"

#include "nonholo/coin.hpp"
#include "nonholo/constraints.hpp"

#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace nonholo;

namespace {

ChartModel flat_slab()
{
    ChartModel m;
    m.dim = 3;
    m.num_constraints = 1;
    m.metric = [](const Point&) { return Mat(Mat::Identity(3, 3)); };
    m.constraints = [](const Point&) {
        Mat w = Mat::Zero(1, 3);
        w(0, 1) = 1.0;
        return w;
    };
    return m;
}

Vec coin_q(double q3)
{
    return (Vec(3) << 0.4, -1.1, q3).finished();
}

} // namespace

TEST_CASE("coin distribution basis at zero heading")
{
    const MechanicalSystem sys = coin::build_coin({});
    const DistributionBasis b = distribution_basis(sys, coin_q(0.0));
    REQUIRE(b.rank() == 2);
    const ProjectorPair pp = projectors(b, sys.metric_at(coin_q(0.0)));
    CHECK(test::max_abs(pp.p * Vec::Unit(3, 2) - Vec::Unit(3, 2)) <= 1e-15);
    CHECK(test::max_abs(pp.p * Vec::Unit(3, 0) - Vec::Unit(3, 0)) <= 1e-15);
    CHECK(test::max_abs(b.pairing() - Mat::Identity(2, 2)) <= 1e-15);
    CHECK(test::max_abs(sys.constraints_at(coin_q(0.0)) * b.x) <= 1e-15);
}

TEST_CASE("generic elimination basis also spans the coin distribution")
{
    ChartModel m = coin::build_coin({});
    m.basis = nullptr;
    m.dual_partials = nullptr;
    for (double q3 : {0.0, 0.3, std::numbers::pi / 2, 2.5}) {
        const DistributionBasis b = distribution_basis(m, coin_q(q3));
        CHECK(test::max_abs(m.constraints_at(coin_q(q3)) * b.x) <= 1e-12);
        CHECK(test::max_abs(projectors(b, m.metric_at(coin_q(q3))).p - coin::projector(q3)) <= 1e-12);
        CHECK(b.annihilator.rows() == 1);
    }
}

TEST_CASE("no constraints gives the coordinate basis")
{
    const MechanicalSystem sys = coin::build_free_body({2.0, 3.0});
    const DistributionBasis b = distribution_basis(sys, Vec::Zero(3));
    CHECK(test::max_abs(b.x - Mat::Identity(3, 3)) == 0.0);
    CHECK(test::max_abs(b.dual - Mat::Identity(3, 3)) == 0.0);
    CHECK(b.annihilator.rows() == 0);
    const ProjectorPair pp = projectors(b, sys.metric_at(Vec::Zero(3)));
    CHECK(test::max_abs(pp.p - Mat::Identity(3, 3)) <= 1e-15);
    CHECK(test::max_abs(pp.q) <= 1e-15);
}

TEST_CASE("random constraint rows are annihilated by the basis")
{
    test::Rng rng(21);
    for (int s = 0; s < 20; ++s) {
        const int n = 5;
        const int m = 1 + s % 3;
        const Mat w = rng.mat(m, n, 1.0);
        const Mat g = rng.spd(n);
        ChartModel model;
        model.dim = n;
        model.num_constraints = m;
        model.metric = [g](const Point&) { return g; };
        model.constraints = [w](const Point&) { return w; };
        const DistributionBasis b = distribution_basis(model, Vec::Zero(n));
        CHECK(b.rank() == n - m);
        CHECK(test::max_abs(w * b.x) <= 1e-10);
        const Mat pairing = b.pairing();
        CHECK(std::abs(pairing.determinant()) > 1e-8);
        for (int a = 0; a < n - m; ++a)
            CHECK(pairing(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(test::max_abs(default_dual(g, b.x) - b.dual) <= 1e-14);
    }
}

TEST_CASE("rank-deficient constraints are rejected")
{
    ChartModel model = flat_slab();
    model.num_constraints = 2;
    model.constraints = [](const Point&) {
        Mat w(2, 3);
        w << 0.0, 1.0, 0.0, 0.0, 2.0, 0.0;
        return w;
    };
    CHECK(test::error_code([&] { distribution_basis(model, Vec::Zero(3)); }) == Errc::degenerate_constraint);
}

TEST_CASE("projector components match the closed form")
{
    const MechanicalSystem sys = coin::build_coin({2.0, 0.5});
    const ProjectorPair p4 = projectors(distribution_basis(sys, coin_q(std::numbers::pi / 4)), sys.metric_at(coin_q(0)));
    Mat expected = Mat::Zero(3, 3);
    expected.topLeftCorner(2, 2).setConstant(0.5);
    expected(2, 2) = 1.0;
    CHECK(test::max_abs(p4.p - expected) <= 1e-12);
    const ProjectorPair p0 = projectors(distribution_basis(sys, coin_q(0.0)), sys.metric_at(coin_q(0)));
    CHECK(test::max_abs(p0.p - Vec((Vec(3) << 1.0, 0.0, 1.0).finished()).asDiagonal().toDenseMatrix()) <= 1e-12);
}

TEST_CASE("singular Gram matrix is a degenerate distribution")
{
    DistributionBasis b;
    b.x = Mat::Zero(3, 2);
    b.x(0, 0) = 1.0;
    b.x(0, 1) = 1.0;
    CHECK(test::error_code([&] { projectors(b, Mat::Identity(3, 3)); }) == Errc::degenerate_distribution);
}

TEST_CASE("projector identities on a warped constrained chart")
{
    test::Rng rng(8);
    for (int m : {1, 2}) {
        const MechanicalSystem sys = test::warped_system(m);
        for (int s = 0; s < 10; ++s) {
            const Point q = rng.vec(4, 1.2);
            const Mat g = sys.metric_at(q);
            const ProjectorPair pp = projectors(distribution_basis(sys, q), g);
            const Mat id = Mat::Identity(4, 4);
            CHECK(test::max_abs(pp.p * pp.p - pp.p) <= 1e-10);
            CHECK(test::max_abs(pp.q * pp.q - pp.q) <= 1e-10);
            CHECK(test::max_abs(pp.p + pp.q - id) <= 1e-10);
            CHECK(test::max_abs(g * pp.p - pp.p.transpose() * g) <= 1e-10);
            CHECK(test::max_abs(sys.constraints_at(q) * pp.p * rng.vec(4, 3.0)) <= 1e-10);
            CHECK(test::max_abs(constraint_projector_q(g, sys.constraints_at(q)) - pp.q) <= 1e-10);
        }
    }
}

TEST_CASE("covariant derivative of the projectors")
{
    const MechanicalSystem sys = coin::build_coin({});
    for (double q3 : {0.1, 0.8, 2.0}) {
        const ProjectorPair pp = projector_derivatives(sys, coin_q(q3));
        CHECK(pp.nabla_q[2](0, 0) == doctest::Approx(std::sin(2 * q3)).epsilon(1e-12));
        CHECK(test::max_abs(pp.nabla_q[0]) <= 1e-15);
        CHECK(test::max_abs(pp.nabla_p[2] + pp.nabla_q[2]) <= 1e-15);
        const ProjectorPair fd = projector_derivatives(with_finite_differences(sys), coin_q(q3));
        CHECK(test::max_abs(fd.nabla_q[2] - pp.nabla_q[2]) <= 1e-8);
    }
    const ProjectorPair slab = projector_derivatives(flat_slab(), Vec::Ones(3));
    for (const Mat& d : slab.nabla_q)
        CHECK(test::max_abs(d) <= 1e-12);
    const ProjectorPair free = projector_derivatives(coin::build_free_body({}), Vec::Ones(3));
    for (const Mat& d : free.nabla_p)
        CHECK(test::max_abs(d) == 0.0);
}

TEST_CASE("analytic and finite-difference projector partials agree on a warped chart")
{
    MechanicalSystem sys = test::warped_system(2);
    test::Rng rng(4);
    // Analytic partials supplied from high-order differences of the fields.
    MechanicalSystem analytic = sys;
    analytic.metric_partials = [sys](const Point& q) { return fd_partials(sys.metric, q, {1e-3, 4}); };
    analytic.constraint_partials = [sys](const Point& q) { return fd_partials(sys.constraints, q, {1e-3, 4}); };
    for (int s = 0; s < 5; ++s) {
        const Point q = rng.vec(4, 1.0);
        const std::vector<Mat> a = projector_q_partials(analytic, q);
        const std::vector<Mat> f = projector_q_partials(sys, q);
        for (int k = 0; k < 4; ++k)
            CHECK(test::max_abs(a[k] - f[k]) <= 1e-7);
    }
}

TEST_CASE("nonholonomic coefficients of the coin")
{
    const MechanicalSystem sys = coin::build_coin({});
    test::Rng rng(2);
    for (int s = 0; s < 10; ++s) {
        const double q3 = rng.uniform(-3.0, 3.0);
        const Vec v = rng.vec(3, 2.0);
        const ConnectionCoefficients gb = nonholonomic_christoffel(sys, coin_q(q3));
        const Vec expected = (Vec(3) << v(2) * (v(0) * std::sin(2 * q3) - v(1) * std::cos(2 * q3)),
                              v(2) * (-v(0) * std::cos(2 * q3) - v(1) * std::sin(2 * q3)), 0.0)
                                 .finished();
        CHECK(test::max_abs(gb.quadratic(v) - expected) <= 1e-12);
    }
    const ConnectionCoefficients g4 = nonholonomic_christoffel(sys, coin_q(std::numbers::pi / 4));
    CHECK(g4(0, 0, 2) + g4(0, 2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(g4(0, 1, 2) + g4(0, 2, 1)) <= 1e-12);
}

TEST_CASE("without constraints the nonholonomic connection is Levi-Civita")
{
    const MechanicalSystem sys = test::warped_system(0);
    const Point q = (Vec(4) << 0.2, -0.5, 0.9, 0.3).finished();
    const ConnectionCoefficients gb = nonholonomic_christoffel(sys, q);
    const ConnectionCoefficients lc = levi_civita(sys, q);
    for (int j = 0; j < 4; ++j)
        CHECK(test::max_abs(gb.slice(j) - lc.slice(j)) == 0.0);
}

TEST_CASE("the nonholonomic connection keeps D-valued fields in D")
{
    test::Rng rng(17);
    for (int m : {1, 2}) {
        const MechanicalSystem sys = test::warped_system(m);
        const Vec z0 = rng.vec(4, 1.0);
        // Y = P(Z) with Z a smooth field, so Y takes values in D.
        const MatrixField y = [&sys, z0](const Point& q) {
            const Vec z = z0 + 0.5 * q.array().sin().matrix();
            return Mat(projectors(distribution_basis(sys, q), sys.metric_at(q)).p * z);
        };
        for (int s = 0; s < 6; ++s) {
            const Point q = rng.vec(4, 1.0);
            const Vec x = rng.vec(4, 1.0);
            const Vec dy = fd_directional(y, q, x, {1e-4, 4});
            const Vec result = dy + nonholonomic_christoffel(sys, q).contract_direction(x) * y(q);
            CHECK(test::max_abs(sys.constraints_at(q) * result) <= 1e-7);
        }
    }
}

TEST_CASE("one-form derivative against the Leibniz rule")
{
    const MechanicalSystem sys = coin::build_coin({});
    const FdScheme fd{1e-5, 4};
    const VectorField lam_field = [](const Point& q) { return coin::dstar_basis(q(2)).row(0).transpose(); };
    const VectorField x2 = [](const Point& q) {
        return Vec((Vec(3) << std::cos(q(2)), std::sin(q(2)), 0.0).finished());
    };
    const MatrixField lam_m = [&](const Point& q) { return Mat(lam_field(q)); };
    const MatrixField x2_m = [&](const Point& q) { return Mat(x2(q)); };
    const Vec x = Vec::Unit(3, 2);
    for (double q3 : {0.0, 0.4, 1.0, 1.9, 2.7, -0.6, -1.5, 3.0}) {
        const Point q = coin_q(q3);
        const Vec lam = lam_field(q);
        const Vec dlam = fd_directional(lam_m, q, x, fd);
        const Vec lhs = nonholonomic_oneform_derivative(sys, q, x, lam, dlam);
        const Mat gx = nonholonomic_christoffel(sys, q).contract_direction(x);
        // (nabla-bar_X lam)(Z) = X(lam(Z)) - lam(nabla-bar_X Z)
        for (int k = 0; k < 3; ++k) {
            const ScalarField pair = [&, k](const Point& p) { return lam_field(p)(k); };
            const double rhs = directional_derivative(pair, q, x, fd) - lam.dot(gx.col(k));
            CHECK(std::abs(lhs(k) - rhs) <= 1e-8);
        }
        const ScalarField pair = [&](const Point& p) { return lam_field(p).dot(x2(p)); };
        const Vec nabla_z = fd_directional(x2_m, q, x, fd) + gx * x2(q);
        const double rhs = directional_derivative(pair, q, x, fd) - lam.dot(nabla_z);
        CHECK(std::abs(lhs.dot(x2(q)) - rhs) <= 1e-8);
    }
    // Constant one-form, direction without a heading component.
    const Vec lc = (Vec(3) << 0.3, -1.0, 2.0).finished();
    const Vec xdir = (Vec(3) << 1.0, -2.0, 0.0).finished();
    CHECK(test::max_abs(nonholonomic_oneform_derivative(sys, coin_q(0.7), xdir, lc, Vec::Zero(3))) <= 1e-15);
}

TEST_CASE("one-form derivative reduces to Levi-Civita without constraints")
{
    const MechanicalSystem sys = test::warped_system(0);
    const Point q = (Vec(4) << 0.1, 0.2, -0.3, 0.4).finished();
    const Vec x = (Vec(4) << 1.0, 0.5, -0.5, 2.0).finished();
    const Vec lam = (Vec(4) << 0.3, 0.1, -0.7, 1.0).finished();
    const Vec dlam = (Vec(4) << 0.2, -0.1, 0.0, 0.5).finished();
    const Vec expected = dlam - levi_civita(sys, q).contract_direction(x).transpose() * lam;
    CHECK(test::max_abs(nonholonomic_oneform_derivative(sys, q, x, lam, dlam) - expected) <= 1e-12);
}

TEST_CASE("nonholonomic curvature: direct evaluation equals the correction formula")
{
    const MechanicalSystem sys = coin::build_coin({});
    for (double q3 : {0.0, 0.4, 1.0, 1.9, 2.7, -0.6, -1.5, 3.0}) {
        const NonholonomicCurvature r = nonholonomic_curvature_pair(sys, coin_q(q3));
        double diff = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                diff = std::max(diff, test::max_abs(r.direct.map(i, j) - r.expanded.map(i, j)));
        CHECK(diff <= 1e-5);
    }
    const MechanicalSystem warped = test::warped_system(2);
    const NonholonomicCurvature w = nonholonomic_curvature_pair(warped, (Vec(4) << 0.3, -0.2, 0.5, 0.1).finished());
    double diff = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            diff = std::max(diff, test::max_abs(w.direct.map(i, j) - w.expanded.map(i, j)));
    CHECK(diff <= 1e-4);
    CHECK(w.direct.max_abs() > 1e-3);
}

TEST_CASE("nonholonomic curvature edge cases")
{
    const MechanicalSystem free = test::warped_system(0);
    const Point q = (Vec(4) << 0.3, -0.2, 0.5, 0.1).finished();
    const CurvatureTensor rb = nonholonomic_curvature(free, q);
    const CurvatureTensor r = levi_civita_curvature(free, q);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(test::max_abs(rb.map(i, j) - r.map(i, j)) <= 1e-8);
    CHECK(nonholonomic_curvature(flat_slab(), Vec::Ones(3)).max_abs() <= 1e-8);
}

TEST_CASE("constraint drift")
{
    const MechanicalSystem sys = coin::build_coin({});
    CHECK(constraint_drift(sys, coin_q(0.0), (Vec(3) << 1.0, 0.0, 5.0).finished()) == 0.0);
    CHECK(constraint_drift(sys, coin_q(0.0), (Vec(3) << 0.0, 2.0, 0.0).finished()) == doctest::Approx(2.0));
}
