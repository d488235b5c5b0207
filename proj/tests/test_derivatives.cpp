#include "pathlab/derivatives.hpp"
#include "pathlab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace pathlab;

namespace {

constexpr double kDt = 1.0 / 64.0;
constexpr double kT = 1.0;

Path const_path(double x) {
    return Path::constant1d(x, TimeGrid(-kDt, kDt, 1));
}

Path ramp_path() {
    return Path::sampled1d(TimeGrid(0.0, kDt, 64), [](double t) { return t; });
}

Path noisy_path(std::uint64_t seed) {
    Rng rng(seed);
    TimeGrid g(0.0, kDt, 64);
    Mat v(1, g.n_nodes());
    v(0, 0) = rng.uniform() - 0.5;
    for (std::int64_t k = 1; k < g.n_nodes(); ++k)
        v(0, k) = v(0, k - 1) + 0.1 * (rng.uniform() - 0.5);
    return Path(g, v);
}

AdaptedProcess coordinate_process() {
    AdaptedProcess V;
    V.t_max = kT;
    V.value = [](double t, const Path& p) { return eval1(p, t); };
    return V;
}

AdaptedProcess cylinder(std::function<double(double, double)> u) {
    AdaptedProcess V;
    V.t_max = kT;
    V.value = [u = std::move(u)](double t, const Path& p) { return u(t, eval1(p, t)); };
    return V;
}

SdeCoefficients brownian() {
    SdeCoefficients c;
    c.dim = 1;
    c.drift = [](const Vec& x) { return Vec::Zero(x.size()); };
    c.diffusion = [](const Vec& x) { return Mat::Identity(x.size(), x.size()); };
    return c;
}

const std::vector<double> kLadder = default_time_ladder(kDt);

} // namespace

TEST_CASE("ladder extrapolation") {
    // q(h) = 3 + 2h has exact O(h) elimination
    const DerivativeEstimate est =
        extrapolate_ladder({0.4, 0.2, 0.1}, {3.0 + 0.8, 3.0 + 0.4, 3.0 + 0.2});
    CHECK(est.value == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(est.extrapolated);
    CHECK(est.error_estimate <= 1e-14);
    CHECK(est.reliable);

    // a diverging ladder is flagged
    const DerivativeEstimate bad = extrapolate_ladder({0.4, 0.2, 0.1}, {1.0, 1.5, 9.0});
    CHECK(!bad.reliable);

    CHECK_THROWS_AS(extrapolate_ladder({0.1, 0.2}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("e_derivative of a martingale vanishes") {
    const ExpectationOperator W = ExpectationOperator::wiener(1, kT, kDt, 311);
    const AdaptedProcess M =
        conditional_process(W, make_eval(scalar1d([](double x) { return std::cos(x); }), kT), 64,
                            kT);
    const DerivativeEstimate est = e_derivative(M, W, 0.25, const_path(0.0), kLadder, 4000);
    CHECK(std::abs(est.value) <= std::max(4 * est.std_error, est.error_estimate));
}

TEST_CASE("e_derivative of the coordinate recovers the drift") {
    SdeCoefficients c;
    c.dim = 1;
    c.drift = [](const Vec& x) { return Vec::Constant(1, 0.5 - 0.25 * x(0)); };
    c.diffusion = [](const Vec& x) { return Mat::Identity(x.size(), x.size()); };
    const ExpectationOperator E = ExpectationOperator::ito(c, kT, kDt, 313);

    const Path x = const_path(0.8);
    const double want = 0.5 - 0.25 * 0.8;
    const DerivativeEstimate est = e_derivative(coordinate_process(), E, 0.25, x, kLadder, 20000);
    CHECK(std::abs(est.value - want) <=
          std::max({4 * est.std_error, est.error_estimate, 5e-3}));
}

TEST_CASE("e_derivative sees the Ito correction") {
    const ExpectationOperator W = ExpectationOperator::wiener(1, kT, kDt, 317);
    const AdaptedProcess V = cylinder([](double, double x) { return x * x; });
    const DerivativeEstimate est = e_derivative(V, W, 0.25, const_path(0.3), kLadder, 20000);
    CHECK(std::abs(est.value - 1.0) <= std::max(4 * est.std_error, 1e-2));
}

TEST_CASE("horizontal derivative") {
    SUBCASE("coordinate of a frozen path does not move") {
        const DerivativeEstimate est =
            dupire_horizontal(coordinate_process(), 0.25, ramp_path(), kLadder);
        CHECK(std::abs(est.value) <= 1e-12);
    }
    SUBCASE("cylinder reduction to the time derivative") {
        // the 1e-6 bound needs the production grid step
        const std::vector<double> fine = default_time_ladder(1.0 / 256);
        const double T = kT;
        const AdaptedProcess V = cylinder(
            [T](double t, double x) { return std::exp(-(T - t) / 2) * std::cos(x); });
        for (const Path& p : {ramp_path(), noisy_path(3)}) {
            for (double t : {0.25, 0.5}) {
                const DerivativeEstimate est = dupire_horizontal(V, t, p, fine);
                const double want =
                    0.5 * std::exp(-(T - t) / 2) * std::cos(eval1(p, t));
                CHECK(std::abs(est.value - want) <= 1e-6);
            }
        }
    }
    SUBCASE("running integral differentiates to the integrand") {
        const ScalarField f = scalar1d([](double x) { return std::tanh(x); });
        AdaptedProcess V;
        V.t_max = kT;
        V.value = [f](double t, const Path& p) { return make_integral(f, 0.0, t)(p); };
        const Path p = noisy_path(5);
        const DerivativeEstimate est = dupire_horizontal(V, 0.5, p, kLadder);
        CHECK(std::abs(est.value - std::tanh(eval1(p, 0.5))) <= 1e-5);
    }
}

TEST_CASE("vertical derivative") {
    const std::vector<double> bumps = {4e-3, 2e-3, 1e-3};
    const Vec e1 = Vec::Constant(1, 1.0);

    CHECK(dupire_vertical(coordinate_process(), 0.25, noisy_path(7), e1, bumps).value ==
          doctest::Approx(1.0).epsilon(1e-10));

    const AdaptedProcess sq = cylinder([](double, double x) { return x * x; });
    const Path p = noisy_path(9);
    CHECK(dupire_vertical(sq, 0.25, p, e1, bumps).value ==
          doctest::Approx(2.0 * eval1(p, 0.25)).epsilon(1e-8));

    // a running integral is blind to the bump except for the trapezoid
    // endpoint weight at the bump node, an O(dt) grid artifact
    const ScalarField f = scalar1d([](double x) { return std::cos(x); });
    AdaptedProcess integral;
    integral.t_max = kT;
    integral.value = [f](double t, const Path& q) { return make_integral(f, 0.0, t)(q); };
    CHECK(std::abs(dupire_vertical(integral, 0.5, p, e1, bumps).value) <= 0.75 * kDt);
}

TEST_CASE("second vertical derivative") {
    const AdaptedProcess sq = cylinder([](double, double x) { return x * x; });
    CHECK(dupire_vertical2(sq, 0.25, noisy_path(11), 0, 0, 1e-2).value ==
          doctest::Approx(2.0).epsilon(1e-6));

    CHECK(std::abs(dupire_vertical2(coordinate_process(), 0.25, noisy_path(13), 0, 0, 1e-2).value) <=
          1e-9);

    const AdaptedProcess cosv = cylinder([](double, double x) { return std::cos(x); });
    const Path zero = Path::constant1d(0.0, TimeGrid(0.0, kDt, 64));
    CHECK(dupire_vertical2(cosv, 0.25, zero, 0, 0, 1e-2).value ==
          doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("ito residual") {
    ItoResidualSpec spec;
    spec.time_ladder = kLadder;

    SUBCASE("compensated square of Brownian motion") {
        const AdaptedProcess V = cylinder([](double t, double x) { return x * x - t; });
        const ItoResidual res = ito_residual(V, brownian(), 0.25, noisy_path(17), spec);
        CHECK(std::abs(res.value) <= 1e-5);
    }
    SUBCASE("heat solution") {
        const double T = kT;
        const AdaptedProcess V = cylinder(
            [T](double t, double x) { return std::exp(-(T - t) / 2) * std::cos(x); });
        const ItoResidual res = ito_residual(V, brownian(), 0.5, noisy_path(19), spec);
        CHECK(std::abs(res.value) <= 1e-4);
    }
    SUBCASE("linear functional picks up the drift") {
        SdeCoefficients c;
        c.dim = 1;
        c.drift = [](const Vec&) { return Vec::Constant(1, 0.37); };
        c.diffusion = [](const Vec& x) { return Mat::Identity(x.size(), x.size()); };
        const ItoResidual res = ito_residual(coordinate_process(), c, 0.25, noisy_path(23), spec);
        CHECK(res.value == doctest::Approx(0.37).epsilon(1e-6));
    }
}

TEST_CASE("stopping derivative equals the horizontal derivative") {
    const ExpectationOperator L = ExpectationOperator::stopping();
    Rng rng(29);
    auto catalog = scalar_catalog();
    for (int c = 0; c < 30; ++c) {
        const auto& nf = catalog[c % catalog.size()];
        // conditioning times on the grid, so t + h stays a node
        const double t = kDt * (8 + static_cast<int>(rng.uniform() * 40));
        const Path p = noisy_path(400 + c);
        AdaptedProcess V;
        V.t_max = kT;
        const double w = 0.5 + rng.uniform();
        V.value = [&nf, w](double s, const Path& q) {
            return std::exp(-w * s) * nf.f(eval(q, s));
        };
        const DerivativeEstimate a = e_derivative(V, L, t, p, kLadder, 1);
        const DerivativeEstimate b = dupire_horizontal(V, t, p, kLadder);
        CHECK(std::abs(a.value - b.value) <= a.error_estimate + b.error_estimate + 1e-9);
    }
}

TEST_CASE("deterministic chain rule along flow orbits") {
    // the 1e-5 bound needs the production grid step
    const double dt = 1.0 / 256;
    const ExpectationOperator F =
        ExpectationOperator::flow([](const Vec& x) { return Vec::Constant(1, -std::atan(x(0))); },
                                  1, kT, dt);
    auto flow_to = [&](double x0, double t) {
        const Path c = Path::constant1d(x0, TimeGrid(-dt, dt, 1));
        return eval1(F.deterministic_continuation(c, std::max(t, dt)), t);
    };
    auto u = [](double t, double x) { return std::exp(-t / 2) * std::cos(x); };

    for (double x0 : {-1.0, 0.5, 2.0}) {
        AdaptedProcess V;
        V.t_max = kT;
        V.value = [&](double s, const Path& p) {
            return u(s, flow_to(eval1(p, 0.0), s));
        };
        const double t = 0.5;
        const DerivativeEstimate est =
            e_derivative(V, F, t, Path::constant1d(x0, TimeGrid(-dt, dt, 1)),
                         default_time_ladder(dt), 1);
        const double z = flow_to(x0, t);
        const double want = -0.5 * u(t, z) + (-std::exp(-t / 2) * std::sin(z)) * (-std::atan(z));
        CHECK(std::abs(est.value - want) <= 1e-5);
    }
}

TEST_CASE("window validation") {
    const ExpectationOperator W = ExpectationOperator::wiener(1, kT, kDt, 401);
    CHECK_THROWS_AS(e_derivative(coordinate_process(), W, 0.999, const_path(0.0), kLadder, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(dupire_horizontal(coordinate_process(), 1.5, ramp_path(), kLadder),
                    std::invalid_argument);
}
