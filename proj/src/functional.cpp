#include "pathlab/functional.hpp"

#include <algorithm>
#include <cmath>

namespace pathlab {

Functional shift_functional(const Functional& F, double t) {
    Functional out;
    if (F.evaluate)
        out.evaluate = [F, t](const Path& p) { return F.evaluate(shift(p, t)); };
    if (F.evaluate_stream)
        out.evaluate_stream = [F, t](const Path& p, std::uint64_t s) {
            return F.evaluate_stream(shift(p, t), s);
        };
    if (F.horizon) out.horizon = *F.horizon + t;
    if (F.reach) out.reach = *F.reach + t;
    out.bound_hint = F.bound_hint;
    return out;
}

Functional make_eval(ScalarField f, double t) {
    Functional out;
    out.evaluate = [f = std::move(f), t](const Path& p) { return f(eval(p, t)); };
    out.horizon = t;
    out.reach = t;
    return out;
}

Functional make_integral(ScalarField f, double a, double b) {
    if (a > b) throw std::invalid_argument("make_integral: need a <= b");
    Functional out;
    out.evaluate = [f = std::move(f), a, b](const Path& p) {
        if (a == b) return 0.0;
        const TimeGrid& g = p.grid();
        double sum = 0.0;
        double t_prev = a;
        double f_prev = f(eval(p, a));
        const std::int64_t k0 = g.floor_index(a) + 1;
        for (std::int64_t k = k0; k < g.n_nodes(); ++k) {
            const double t = g.node(k);
            if (t <= a) continue;
            if (t >= b) break;
            const double ft = f(p.values().col(k));
            sum += 0.5 * (t - t_prev) * (f_prev + ft);
            t_prev = t;
            f_prev = ft;
        }
        sum += 0.5 * (b - t_prev) * (f_prev + f(eval(p, b)));
        return sum;
    };
    out.horizon = b;
    out.reach = a;
    return out;
}

Functional make_running_max(std::function<double(double)> f, double t, double T) {
    if (t > T) throw std::invalid_argument("make_running_max: need t <= T");
    Functional out;
    out.evaluate = [f = std::move(f), t, T](const Path& p) {
        if (p.dim() != 1) throw std::invalid_argument("make_running_max: requires d = 1");
        const TimeGrid& g = p.grid();
        bool found = false;
        double m = 0.0;
        for (std::int64_t k = 0; k < g.n_nodes(); ++k) {
            const double s = g.node(k);
            if (s < t || s > T) continue;
            const double v = p.values()(0, k);
            m = found ? std::max(m, v) : v;
            found = true;
        }
        if (!found) m = std::max(eval1(p, t), eval1(p, T));
        return f(m);
    };
    out.horizon = T;
    out.reach = t;
    return out;
}

AdaptednessReport check_adapted(const Functional& F, double t, const std::vector<Path>& test_paths) {
    if (test_paths.empty()) throw std::invalid_argument("check_adapted: no test paths");
    AdaptednessReport rep;
    for (std::size_t i = 0; i < test_paths.size(); ++i) {
        const double err = std::abs(F(test_paths[i]) - F(stop_at(test_paths[i], t)));
        if (err > rep.worst_error) {
            rep.worst_error = err;
            rep.worst_path = static_cast<int>(i);
        }
    }
    rep.adapted = rep.worst_error <= 1e-10;
    return rep;
}

std::vector<NamedField> scalar_catalog() {
    std::vector<NamedField> out;
    out.push_back({"cos", scalar1d([](double x) { return std::cos(x); })});
    out.push_back({"tanh", scalar1d([](double x) { return std::tanh(x); })});
    out.push_back({"gauss", scalar1d([](double x) { return std::exp(-x * x); })});
    out.push_back({"const1", scalar1d([](double) { return 1.0; })});
    out.push_back({"coord", scalar1d([](double x) { return x; })});
    return out;
}

} // namespace pathlab
