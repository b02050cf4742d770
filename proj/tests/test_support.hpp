#pragma once

#include "nonholo/errors.hpp"
#include "nonholo/dynamics.hpp"
#include "nonholo/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace test {

using nonholo::Mat;
using nonholo::Vec;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    Vec vec(int n, double scale)
    {
        Vec v(n);
        for (int i = 0; i < n; ++i)
            v(i) = uniform(-scale, scale);
        return v;
    }

    Mat mat(int r, int c, double scale)
    {
        Mat m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                m(i, j) = uniform(-scale, scale);
        return m;
    }

    Mat spd(int n)
    {
        const Mat a = mat(n, n, 1.0);
        return a * a.transpose() + 0.5 * Mat::Identity(n, n);
    }

private:
    std::mt19937_64 engine_;
};

inline double max_abs(const Mat& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

template <class F>
std::optional<nonholo::Errc> error_code(F&& f)
{
    try {
        f();
    } catch (const nonholo::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

// Smooth non-flat metric on R^4 with `m` (0, 1 or 2) nonconstant constraints
// and `p` inputs drawn from the coordinate covectors.
inline nonholo::MechanicalSystem warped_system(int m, int p = 4)
{
    using nonholo::Point;
    nonholo::MechanicalSystem sys;
    sys.name = "warped";
    sys.dim = 4;
    sys.num_constraints = m;
    sys.metric = [](const Point& q) {
        Mat a(4, 4);
        a << 1.0 + 0.3 * std::sin(q(1)), 0.2 * q(2), 0.1, 0.0, 0.0, 1.0 + 0.2 * q(0) * q(0), 0.3 * std::cos(q(3)),
            0.1, 0.05 * q(1), 0.0, 1.2, 0.2 * std::sin(q(0)), 0.0, 0.1 * q(3), 0.0, 0.9;
        return Mat(a * a.transpose() + 0.5 * Mat::Identity(4, 4));
    };
    sys.constraints = [m](const Point& q) {
        Mat w(2, 4);
        w << 1.0, std::sin(q(0)), 0.3 * q(2), -0.2, 0.1 * q(3), 1.0, std::cos(q(1)), 0.4;
        return Mat(w.topRows(m));
    };
    sys.num_inputs = p;
    sys.actuated = [p](const Point& q) {
        Mat f = Mat::Identity(4, 4);
        f(0, 1) = 0.2 * std::sin(q(2));
        return Mat(f.topRows(p));
    };
    sys.unactuated = [p](const Point& q) {
        Mat f = Mat::Identity(4, 4);
        f(0, 1) = 0.2 * std::sin(q(2));
        return Mat(f.bottomRows(4 - p));
    };
    return sys;
}

} // namespace test
