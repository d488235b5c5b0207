#include "pathlab/fvp.hpp"
#include "pathlab/quadrature.hpp"
#include "pathlab/semigroup.hpp"

#include <doctest.h>

#include <cmath>

using namespace pathlab;

namespace {

const ScalarField cos_field = scalar1d([](double x) { return std::cos(x); });
const ScalarField sq_field = scalar1d([](double x) { return x * x; });
const ScalarField gauss_field = scalar1d([](double x) { return std::exp(-x * x); });

std::vector<Vec> states1d(std::initializer_list<double> xs) {
    std::vector<Vec> v;
    for (double x : xs) v.push_back(Vec::Constant(1, x));
    return v;
}

std::vector<Vec> lin_states(double lo, double hi, int n) {
    std::vector<Vec> v;
    for (int i = 0; i < n; ++i) v.push_back(Vec::Constant(1, lo + (hi - lo) * i / (n - 1)));
    return v;
}

} // namespace

TEST_CASE("gaussian_apply closed forms") {
    for (double t : {0.1, 0.7, 2.0}) {
        for (double x : {-1.5, 0.0, 0.8}) {
            const Vec xv = Vec::Constant(1, x);
            CHECK(gaussian_apply(t, sq_field, xv) == doctest::Approx(x * x + t).epsilon(1e-10));
            CHECK(gaussian_apply(t, cos_field, xv) ==
                  doctest::Approx(std::exp(-t / 2) * std::cos(x)).epsilon(1e-8));
            CHECK(gaussian_apply(t, scalar1d([](double) { return 2.5; }), xv) ==
                  doctest::Approx(2.5).epsilon(1e-15));
        }
    }
    CHECK(gaussian_apply(0.0, cos_field, Vec::Constant(1, 0.3)) ==
          doctest::Approx(std::cos(0.3)));
    // quadrature oracle cross-check at one point
    const double oracle = simpson(
        [](double y) {
            return std::cos(y) * std::exp(-y * y / 2.0) / std::sqrt(2.0 * M_PI);
        },
        -14.0, 14.0, 4000);
    CHECK(gaussian_apply(1.0, cos_field, Vec::Zero(1)) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("gaussian_apply in two dimensions") {
    const ScalarField f = [](const Vec& x) { return x(0) * x(0) + std::cos(x(1)); };
    const Vec x = (Vec(2) << 0.5, -0.25).finished();
    const double got = gaussian_apply(0.4, f, x, 48);
    const double want = 0.25 + 0.4 + std::exp(-0.2) * std::cos(-0.25);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("laplace resolvent") {
    const MarkovOracle oracle = MarkovOracle::gaussian(1);
    const Vec x0 = Vec::Zero(1);
    const ScalarField one = scalar1d([](double) { return 1.0; });

    for (double lambda : {0.5, 1.0, 2.0}) {
        const double Tt = laplace_truncation_time(lambda, 1.0, 1e-10);
        const ResolventValue rv = laplace_resolvent(oracle, lambda, one, x0, Tt, 4000);
        CHECK(std::abs(rv.value - 1.0 / lambda) <= 1e-8);
        CHECK(!rv.truncation_warning);
    }

    const double Tt = laplace_truncation_time(1.0, 1.0, 1e-10);
    const ResolventValue rv = laplace_resolvent(oracle, 1.0, cos_field, x0, Tt, 4000);
    CHECK(std::abs(rv.value - 1.0 / 1.5) <= 1e-6);

    // short truncation raises the warning
    CHECK(laplace_resolvent(oracle, 1.0, one, x0, 5.0, 400).truncation_warning);
}

TEST_CASE("resolvent identity residual") {
    const MarkovOracle oracle = MarkovOracle::gaussian(1, 32);
    const Vec x0 = Vec::Zero(1);
    const double T1 = laplace_truncation_time(1.0, 1.0, 1e-9);
    const double T2 = laplace_truncation_time(2.0, 1.0, 1e-9);

    const double r1 = laplace_resolvent(oracle, 1.0, cos_field, x0, T1, 2000).value;
    const double r2 = laplace_resolvent(oracle, 2.0, cos_field, x0, T2, 2000).value;
    const ScalarField r2_field = resolvent_field(oracle, 2.0, cos_field, T2, 200);
    const double r12 = laplace_resolvent(oracle, 1.0, r2_field, x0, T1, 400, 0.5).value;
    CHECK(std::abs(r1 - r2 - (2.0 - 1.0) * r12) <= 1e-5);
}

TEST_CASE("semigroup law for the Gaussian oracle") {
    const MarkovOracle oracle = MarkovOracle::gaussian(1);
    for (const ScalarField& f : {cos_field, gauss_field}) {
        for (double t : {0.25, 0.5, 1.0})
            for (double s : {0.25, 0.5, 1.0})
                CHECK(semigroup_law_residual(oracle, f, t, s, Vec::Constant(1, 0.5)) <= 1e-6);
    }
}

TEST_CASE("identity oracle") {
    const MarkovOracle oracle = MarkovOracle::identity();
    CHECK(oracle.apply(0.7, cos_field, Vec::Constant(1, 1.1)) == doctest::Approx(std::cos(1.1)));
}

TEST_CASE("evolutionary semigroup") {
    const EvolutionarySemigroup SG{ExpectationOperator::wiener(1, 1.0, 1.0 / 64, 17)};
    const Path x0 = Path::constant1d(0.0, TimeGrid(-1.0 / 64, 1.0 / 64, 1));

    SUBCASE("projection at t = 0") {
        const MCEstimate est = SG.evo_apply(0.0, make_eval(cos_field, 0.0), x0, 500);
        CHECK(est.mean == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("terminal square moment") {
        const MCEstimate est = SG.evo_apply(1.0, make_eval(sq_field, 0.0), x0, 20000);
        CHECK(std::abs(est.mean - 1.0) <= 4 * est.std_error);
    }
    SUBCASE("horizon gate") {
        CHECK_THROWS_AS(SG.evo_apply(0.5, make_eval(cos_field, 0.25), x0, 100),
                        std::invalid_argument);
    }
    SUBCASE("stopping kind freezes") {
        const EvolutionarySemigroup L{ExpectationOperator::stopping()};
        const Path ramp = Path::sampled1d(TimeGrid(-1.0, 0.125, 16), [](double t) { return t; });
        for (double t : {0.0, 0.5, 1.0}) {
            const MCEstimate est = L.evo_apply(t, make_eval(cos_field, 0.0), ramp, 2);
            CHECK(est.mean == doctest::Approx(std::cos(0.0)));
        }
    }
    SUBCASE("evolutionary property: S(t) Theta_{-t} F = F") {
        const Path ramp = Path::sampled1d(TimeGrid(-1.0, 1.0 / 64, 128), [](double t) { return t; });
        const Functional F = make_eval(cos_field, 0.0); // horizon 0
        for (double t : {0.25, 0.75}) {
            const Functional back = shift_functional(F, -t);
            const MCEstimate est = SG.evo_apply(t, back, ramp, 4000);
            CHECK(std::abs(est.mean - F(ramp)) <= std::max(4 * est.std_error, 1e-12));
        }
    }
}

TEST_CASE("markov restriction agrees with the Gaussian oracle") {
    const EvolutionarySemigroup SG{ExpectationOperator::wiener(1, 1.0, 1.0 / 64, 29)};
    for (double t : {0.25, 1.0}) {
        for (double x0 : {-1.0, 0.0, 2.0}) {
            const MCEstimate mc = SG.markov_restrict(t, cos_field, Vec::Constant(1, x0), 20000);
            const double ref = gaussian_apply(t, cos_field, Vec::Constant(1, x0));
            CHECK(std::abs(mc.mean - ref) <= 4 * mc.std_error);
        }
    }
    const EvolutionarySemigroup L{ExpectationOperator::stopping()};
    const MCEstimate frozen = L.markov_restrict(0.7, cos_field, Vec::Constant(1, 1.3), 2);
    CHECK(frozen.mean == doctest::Approx(std::cos(1.3)));
}

TEST_CASE("brownian max expectation field") {
    // at t = T the window collapses
    CHECK(brownian_max_expectation([](double m) { return std::tanh(m); }, 1.0, 1.0, 0.4) ==
          doctest::Approx(std::tanh(0.4)));
    // constant payoff integrates to the constant
    CHECK(brownian_max_expectation([](double) { return 1.0; }, 0.0, 1.0, -0.3) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // identity payoff from 0 gives sqrt(2/pi) at t = 0
    CHECK(brownian_max_expectation([](double m) { return m; }, 0.0, 1.0, 0.0) ==
          doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-9));
}

TEST_CASE("solve_fvp_mild closed forms") {
    const MarkovOracle oracle = MarkovOracle::gaussian(1);
    const double T = 1.0;
    const auto states = lin_states(-2.0, 2.0, 17);

    SUBCASE("homogeneous heat flow") {
        const FVPSolution sol =
            solve_fvp_mild(oracle, cos_field, SourceTerm::zero(), T, 8, states);
        for (std::size_t i = 0; i < sol.times.size(); ++i)
            for (std::size_t j = 0; j < sol.states.size(); ++j) {
                const double ref =
                    std::exp(-(T - sol.times[i]) / 2) * std::cos(sol.states[j](0));
                CHECK(std::abs(sol.u(i, j) - ref) <= 1e-6);
            }
    }
    SUBCASE("constant source") {
        const double c = 0.7;
        const SourceTerm phi = SourceTerm::regular([c](double, const Vec&) { return -c; });
        const FVPSolution sol = solve_fvp_mild(
            oracle, scalar1d([](double) { return 0.0; }), phi, T, 8, states);
        for (std::size_t i = 0; i < sol.times.size(); ++i)
            for (std::size_t j = 0; j < sol.states.size(); ++j)
                CHECK(std::abs(sol.u(i, j) - c * (T - sol.times[i])) <= 1e-8);
    }
    SUBCASE("quadratic source") {
        const SourceTerm phi =
            SourceTerm::regular([](double, const Vec& x) { return -x(0) * x(0); });
        const FVPSolution sol = solve_fvp_mild(
            oracle, scalar1d([](double) { return 0.0; }), phi, T, 8, states);
        for (std::size_t i = 0; i < sol.times.size(); ++i) {
            const double s = T - sol.times[i];
            for (std::size_t j = 0; j < sol.states.size(); ++j) {
                const double x = sol.states[j](0);
                CHECK(std::abs(sol.u(i, j) - (x * x * s + s * s / 2)) <= 1e-6);
            }
        }
    }
    SUBCASE("terminal condition pinned exactly") {
        const FVPSolution sol =
            solve_fvp_mild(oracle, cos_field, SourceTerm::zero(), T, 4, states);
        for (std::size_t j = 0; j < sol.states.size(); ++j)
            CHECK(sol.u(4, j) == std::cos(sol.states[j](0)));
    }
}

TEST_CASE("mild solution integrated identity") {
    // u(t) = f + A int_t^T u(s) ds - int_t^T phi(s) ds with A by central
    // second differences of the time-integrated field
    const MarkovOracle oracle = MarkovOracle::gaussian(1);
    const double T = 1.0;
    const int n_time = 64;
    const auto states = lin_states(-2.0, 2.0, 81);
    const double dx = 0.05;
    const FVPSolution sol = solve_fvp_mild(oracle, cos_field, SourceTerm::zero(), T, n_time, states);

    const double dt = T / n_time;
    for (int i : {0, 16, 32}) {
        for (std::size_t j = 20; j <= 60; j += 10) {
            // trapezoid of u over [t_i, T] in time, per state column
            auto column_integral = [&](std::size_t col) {
                double acc = 0.0;
                for (int k = i; k < n_time; ++k)
                    acc += 0.5 * dt * (sol.u(k, col) + sol.u(k + 1, col));
                return acc;
            };
            const double a_int = 0.5 *
                                 (column_integral(j + 1) - 2 * column_integral(j) +
                                  column_integral(j - 1)) /
                                 (dx * dx);
            const double f_val = std::cos(sol.states[j](0));
            CHECK(std::abs(sol.u(i, j) - (f_val + a_int)) <= 1e-4);
        }
    }
}

TEST_CASE("strong residual") {
    SUBCASE("heat closed form leaves only discretization error") {
        const double T = 1.0;
        FVPSolution sol;
        sol.T = T;
        const int nt = 100, nx = 100;
        sol.times.resize(nt + 1);
        for (int i = 0; i <= nt; ++i) sol.times[i] = i * 0.01;
        sol.states = lin_states(-0.5, 0.5, nx + 1);
        sol.u.resize(nt + 1, nx + 1);
        for (int i = 0; i <= nt; ++i)
            for (int j = 0; j <= nx; ++j)
                sol.u(i, j) = std::exp(-(T - sol.times[i]) / 2) * std::cos(sol.states[j](0));
        const ResidualReport rep = strong_residual(
            sol, [](double, double) { return 0.0; }, half_laplacian_fd(), 1e-4);
        CHECK(rep.max_residual <= 1e-4);
        CHECK(!rep.grid_warning);
    }
    SUBCASE("quadratic solution is differenced exactly") {
        const double T = 1.0;
        FVPSolution sol;
        sol.T = T;
        sol.times = {0.0, 0.25, 0.5, 0.75, 1.0};
        sol.states = lin_states(-1.0, 1.0, 9);
        sol.u.resize(5, 9);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 9; ++j) {
                const double x = sol.states[j](0);
                sol.u(i, j) = x * x + (T - sol.times[i]);
            }
        const ResidualReport rep = strong_residual(
            sol, [](double, double) { return 0.0; }, half_laplacian_fd(), 1e-8);
        CHECK(rep.max_residual <= 1e-10);
    }
    SUBCASE("uniform grid required") {
        FVPSolution sol;
        sol.times = {0.0, 0.5, 1.0};
        sol.states = states1d({0.0, 0.1, 0.5});
        sol.u = Mat::Zero(3, 3);
        CHECK_THROWS_AS(strong_residual(sol, [](double, double) { return 0.0; },
                                        half_laplacian_fd(), 1e-4),
                        std::invalid_argument);
    }
}

TEST_CASE("full generator pair check") {
    const MarkovOracle oracle = MarkovOracle::gaussian(1);
    const std::vector<double> ts = {0.25, 0.5, 1.0};
    const auto xs = states1d({-1.0, 0.0, 0.8});

    // g = (1/2) f'' for f = cos
    const ScalarField minus_half_cos = scalar1d([](double x) { return -0.5 * std::cos(x); });
    CHECK(full_generator_pair_check(oracle, cos_field, minus_half_cos, ts, xs).pass);

    const ScalarField c5 = scalar1d([](double) { return 5.0; });
    const ScalarField zero = scalar1d([](double) { return 0.0; });
    CHECK(full_generator_pair_check(oracle, c5, zero, ts, xs).max_violation <= 1e-12);

    // flipping the sign of g breaks the identity at the predicted scale
    const ScalarField plus_half_cos = scalar1d([](double x) { return 0.5 * std::cos(x); });
    const PairCheckReport bad = full_generator_pair_check(oracle, cos_field, plus_half_cos, ts, xs);
    CHECK(!bad.pass);
    CHECK(bad.max_violation == doctest::Approx(2.0 * (1.0 - std::exp(-0.5))).epsilon(0.05));
}

TEST_CASE("semigroup law for the Monte Carlo semigroup") {
    // nested sampling: S(t) S(s) F vs S(t+s) F at a frozen path
    const ExpectationOperator W = ExpectationOperator::wiener(1, 1.0, 1.0 / 64, 67);
    const Functional F = make_eval(cos_field, 0.0);
    const Path x0 = Path::constant1d(0.2, TimeGrid(-1.0 / 64, 1.0 / 64, 1));
    const double t = 0.25, s = 0.5;

    Functional inner;
    inner.horizon = 0.0;
    inner.evaluate_stream = [&](const Path& p, std::uint64_t stream) {
        return W.apply_stream(shift_functional(F, s), p, 64, stream).mean;
    };
    const MCEstimate lhs = W.apply(shift_functional(inner, t), x0, 4000);
    const MCEstimate rhs = W.apply(shift_functional(F, t + s), x0, 4000);
    const double se = std::sqrt(lhs.std_error * lhs.std_error + rhs.std_error * rhs.std_error);
    CHECK(std::abs(lhs.mean - rhs.mean) <= 4 * se);
}
