#include "pathlab/functional.hpp"
#include "pathlab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace pathlab;

namespace {

Path random_path(std::uint64_t seed) {
    Rng rng(seed);
    TimeGrid g(-1.0, 0.125, 32); // [-1, 3]
    Mat v(1, g.n_nodes());
    v(0, 0) = rng.uniform() - 0.5;
    for (std::int64_t k = 1; k < g.n_nodes(); ++k) v(0, k) = v(0, k - 1) + rng.uniform() - 0.5;
    return Path(g, v);
}

Path ramp_path() {
    return Path::sampled1d(TimeGrid(-1.0, 0.125, 24), [](double t) { return t; });
}

} // namespace

TEST_CASE("make_eval reads the path at one time") {
    const ScalarField id = scalar1d([](double x) { return x; });
    const Functional F = make_eval(id, 1.0);
    CHECK(F(ramp_path()) == doctest::Approx(1.0));

    const Functional C = make_eval(scalar1d([](double) { return 3.5; }), 0.7);
    CHECK(C(random_path(5)) == 3.5);

    const Path p = random_path(6);
    CHECK(F(p) == F(stop_at(p, 1.0)));
}

TEST_CASE("shift_functional is the shift action") {
    const ScalarField id = scalar1d([](double x) { return x; });
    const Path p = random_path(9);

    const Functional F = make_eval(id, 0.5);
    CHECK(shift_functional(F, 0.0)(p) == F(p));

    // Theta_t F_s = F_{s+t}
    for (double t : {-0.25, 0.375, 1.0}) {
        CHECK(shift_functional(F, t)(p) == doctest::Approx(eval1(p, 0.5 + t)));
        CHECK(*shift_functional(F, t).horizon == doctest::Approx(0.5 + t));
    }

    // Theta_{-t} Theta_t = id on random paths
    for (int c = 0; c < 50; ++c) {
        const Path q = random_path(100 + c);
        const Functional round = shift_functional(shift_functional(F, 0.8), -0.8);
        CHECK(std::abs(round(q) - F(q)) <= 1e-12);
    }
}

TEST_CASE("theta identity over the catalog") {
    Rng rng(31);
    const Path paths[] = {random_path(41), random_path(43), random_path(47)};
    for (const NamedField& nf : scalar_catalog()) {
        for (int c = 0; c < 20; ++c) {
            const double s = 2.0 * rng.uniform() - 1.0;
            const double t = 2.0 * rng.uniform() - 1.0;
            const Path& p = paths[c % 3];
            const double lhs = shift_functional(make_eval(nf.f, s), t)(p);
            const double rhs = nf.f(eval(p, s + t));
            CHECK(std::abs(lhs - rhs) <= 1e-12);
        }
    }
}

TEST_CASE("theta reduction to time zero") {
    // Theta_{-t} make_eval(f, t) == make_eval(f, 0) pointwise
    const ScalarField f = scalar1d([](double x) { return std::tanh(x); });
    for (double t : {0.25, 1.0}) {
        const Functional lhs = shift_functional(make_eval(f, t), -t);
        const Functional rhs = make_eval(f, 0.0);
        for (int c = 0; c < 10; ++c) {
            const Path p = random_path(200 + c);
            CHECK(std::abs(lhs(p) - rhs(p)) <= 1e-12);
        }
    }
}

TEST_CASE("make_integral trapezoid") {
    const ScalarField one = scalar1d([](double) { return 1.0; });
    const ScalarField id = scalar1d([](double x) { return x; });

    CHECK(make_integral(one, -0.3, 1.7)(random_path(51)) == doctest::Approx(2.0));
    CHECK(make_integral(id, 0.0, 1.0)(ramp_path()) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(make_integral(id, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("integral splits exactly across grid nodes") {
    const ScalarField f = scalar1d([](double x) { return std::cos(x); });
    const Path p = random_path(53);
    for (double mid : {0.125, 0.5, 1.0}) { // grid nodes of the 0.125 grid
        const double whole = make_integral(f, 0.0, 2.0)(p);
        const double split = make_integral(f, 0.0, mid)(p) + make_integral(f, mid, 2.0)(p);
        CHECK(whole == doctest::Approx(split).epsilon(1e-14));
    }
}

TEST_CASE("make_running_max") {
    CHECK(make_running_max([](double m) { return m; }, 0.0, 1.0)(ramp_path()) ==
          doctest::Approx(1.0));
    CHECK(make_running_max([](double) { return 1.0; }, 0.0, 1.0)(random_path(57)) == 1.0);

    const Path down = Path::sampled1d(TimeGrid(0.0, 0.125, 8), [](double t) { return 5.0 - t; });
    CHECK(make_running_max([](double m) { return m; }, 0.0, 1.0)(down) == doctest::Approx(5.0));

    Mat v(2, 2);
    v.setZero();
    const Path twod(TimeGrid(0.0, 1.0, 1), v);
    CHECK_THROWS_AS(make_running_max([](double m) { return m; }, 0.0, 1.0)(twod),
                    std::invalid_argument);
}

TEST_CASE("check_adapted certifies horizons") {
    std::vector<Path> panel;
    for (int c = 0; c < 6; ++c) panel.push_back(random_path(300 + c));
    const ScalarField f = scalar1d([](double x) { return std::cos(x); });

    CHECK(check_adapted(make_eval(f, 0.5), 0.5, panel).adapted);
    CHECK(check_adapted(make_integral(f, 0.0, 1.5), 1.5, panel).adapted);

    // a functional reading beyond the claimed horizon fails on a moving path
    const AdaptednessReport bad = check_adapted(make_eval(f, 1.5), 0.5, {ramp_path()});
    CHECK(!bad.adapted);
    CHECK(bad.worst_error > 1e-6);
    CHECK(bad.worst_path == 0);

    CHECK_THROWS_AS(check_adapted(make_eval(f, 0.5), 0.5, {}), std::invalid_argument);
}

TEST_CASE("adapted process sections carry the horizon") {
    AdaptedProcess V;
    V.t_max = 2.0;
    V.value = [](double t, const Path& p) { return eval1(p, t); };
    const Functional sec = V.section(0.75);
    CHECK(*sec.horizon == 0.75);
    CHECK(sec(ramp_path()) == doctest::Approx(0.75));
}
