#pragma once

#include "pathlab/path.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pathlab {

using ScalarField = std::function<double(const Vec&)>;

// wraps a scalar function of the first coordinate into a field on R^d
inline ScalarField scalar1d(std::function<double(double)> f) {
    return [f = std::move(f)](const Vec& x) { return f(x(0)); };
}

// A bounded functional on path space. `horizon` is the smallest time t for
// which the builder guarantees that the value only depends on the path up to
// t (the testable surrogate of F_t-measurability); `reach` is the lowest
// time it reads, so simulations need not resample the past below it. Monte
// Carlo backed functionals implement `evaluate_stream` instead; the extra
// argument is an independent substream for any sampling the evaluation needs.
struct Functional {
    std::function<double(const Path&)> evaluate;
    std::function<double(const Path&, std::uint64_t)> evaluate_stream;
    std::optional<double> horizon;
    std::optional<double> reach;
    std::optional<double> bound_hint;

    double operator()(const Path& p) const {
        if (evaluate) return evaluate(p);
        if (evaluate_stream) throw std::invalid_argument("Functional: needs a sampling stream");
        throw std::invalid_argument("Functional: empty");
    }
    double operator()(const Path& p, std::uint64_t stream) const {
        if (evaluate_stream) return evaluate_stream(p, stream);
        return (*this)(p);
    }
    bool stochastic() const { return static_cast<bool>(evaluate_stream); }
};

// shift action: result(p) = F(shift(p, t)); a declared horizon moves to
// horizon + t since the shifted functional reads the path up to there
Functional shift_functional(const Functional& F, double t);

// F(p) = f(p(t)), horizon t
Functional make_eval(ScalarField f, double t);

// F(p) = trapezoid of f(p(s)) ds over the path grid restricted to [a, b];
// the rule uses a, interior grid nodes and b as quadrature points, so the
// split F_a^b = F_a^c + F_c^b is exact across any interior node c
Functional make_integral(ScalarField f, double a, double b);

// F(p) = f(max over grid nodes in [t, T] of p(s)), d = 1 only
Functional make_running_max(std::function<double(double)> f, double t, double T);

struct AdaptednessReport {
    bool adapted = true;
    double worst_error = 0.0;
    int worst_path = -1;
};

// checks F(p) == F(stop_at(p, t)) on the given paths within 1e-10
AdaptednessReport check_adapted(const Functional& F, double t, const std::vector<Path>& test_paths);

// An adapted process V(t, x): each t-section is a Functional with horizon t.
// `value_stream`, when set, backs sections whose evaluation itself samples.
struct AdaptedProcess {
    std::function<double(double, const Path&)> value;
    std::function<double(double, const Path&, std::uint64_t)> value_stream;
    double t_min = 0.0;
    double t_max = 1.0;

    Functional section(double t) const {
        Functional F;
        if (value) F.evaluate = [f = value, t](const Path& p) { return f(t, p); };
        if (value_stream)
            F.evaluate_stream = [f = value_stream, t](const Path& p, std::uint64_t s) {
                return f(t, p, s);
            };
        if (!F.evaluate && !F.evaluate_stream)
            throw std::invalid_argument("AdaptedProcess: no evaluation defined");
        F.horizon = t;
        return F;
    }
};

// catalog of bounded test functions used across the suites
struct NamedField {
    std::string name;
    ScalarField f;
};
std::vector<NamedField> scalar_catalog();

} // namespace pathlab
