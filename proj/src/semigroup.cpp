#include "pathlab/semigroup.hpp"

#include "pathlab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pathlab {

MCEstimate EvolutionarySemigroup::evo_apply(double t, const Functional& F, const Path& x,
                                            std::int64_t n) const {
    if (t < 0.0) throw std::invalid_argument("evo_apply: t >= 0 required");
    if (F.horizon && *F.horizon > 1e-12)
        throw std::invalid_argument("evo_apply: F must be measurable for the past (horizon <= 0)");
    return E.apply(shift_functional(F, t), x, n);
}

MCEstimate EvolutionarySemigroup::markov_restrict(double t, const ScalarField& f, const Vec& x0,
                                                  std::int64_t n) const {
    const TimeGrid g(-E.dt(), E.dt(), 1);
    return evo_apply(t, make_eval(f, 0.0), Path::constant(x0, g), n);
}

MarkovOracle MarkovOracle::gaussian(int dim, int hermite_nodes) {
    MarkovOracle o;
    o.kind_ = Kind::Gaussian;
    o.dim_ = dim;
    o.nodes_ = hermite_nodes;
    return o;
}

MarkovOracle MarkovOracle::identity() {
    MarkovOracle o;
    o.kind_ = Kind::Identity;
    return o;
}

double MarkovOracle::apply(double t, const ScalarField& f, const Vec& x) const {
    if (kind_ == Kind::Identity) return f(x);
    return gaussian_apply(t, f, x, nodes_);
}

double gaussian_apply(double t, const ScalarField& f, const Vec& x, int hermite_nodes) {
    if (t < 0.0) throw std::invalid_argument("gaussian_apply: t >= 0 required");
    if (t == 0.0) return f(x);
    const QuadratureRule& rule = gauss_hermite(hermite_nodes);
    const double scale = std::sqrt(2.0 * t);
    const auto d = x.size();
    if (d == 1) {
        double sum = 0.0;
        Vec y(1);
        for (int i = 0; i < rule.nodes.size(); ++i) {
            y(0) = x(0) + scale * rule.nodes(i);
            sum += rule.weights(i) * f(y);
        }
        return sum;
    }
    // tensor product over dimensions
    std::vector<int> idx(d, 0);
    Vec y(d);
    double sum = 0.0;
    for (;;) {
        double w = 1.0;
        for (Eigen::Index c = 0; c < d; ++c) {
            y(c) = x(c) + scale * rule.nodes(idx[c]);
            w *= rule.weights(idx[c]);
        }
        sum += w * f(y);
        Eigen::Index c = 0;
        while (c < d && ++idx[c] == rule.nodes.size()) idx[c++] = 0;
        if (c == d) break;
    }
    return sum;
}

ResolventValue laplace_resolvent(const MarkovOracle& oracle, double lambda, const ScalarField& f,
                                 const Vec& x, double T_trunc, int panels, double f_bound) {
    if (lambda <= 0.0) throw std::invalid_argument("laplace_resolvent: lambda > 0 required");
    ResolventValue out;
    out.value = simpson(
        [&](double t) { return std::exp(-lambda * t) * oracle.apply(t, f, x); }, 0.0, T_trunc,
        panels);
    out.tail_bound = f_bound * std::exp(-lambda * T_trunc) / lambda;
    out.truncation_warning = out.tail_bound > 1e-8;
    return out;
}

double laplace_truncation_time(double lambda, double f_bound, double tol) {
    return std::log(std::max(f_bound, 1e-300) / (lambda * tol)) / lambda;
}

ScalarField resolvent_field(const MarkovOracle& oracle, double lambda, ScalarField f,
                            double T_trunc, int panels) {
    return [oracle, lambda, f = std::move(f), T_trunc, panels](const Vec& y) {
        return laplace_resolvent(oracle, lambda, f, y, T_trunc, panels).value;
    };
}

double semigroup_law_residual(const MarkovOracle& oracle, const ScalarField& f, double t, double s,
                              const Vec& x) {
    const double lhs = oracle.apply(t + s, f, x);
    ScalarField inner = [&oracle, &f, s](const Vec& y) { return oracle.apply(s, f, y); };
    return std::abs(lhs - oracle.apply(t, inner, x));
}

double brownian_max_expectation(const std::function<double(double)>& f, double t, double T,
                                double x, int legendre_nodes) {
    if (t > T) throw std::invalid_argument("brownian_max_expectation: t <= T required");
    const double s = T - t;
    if (s == 0.0) return f(x);
    const QuadratureRule& rule = gauss_legendre(legendre_nodes);
    const double radius = 10.0 * std::sqrt(s);
    const double half = 0.5 * radius;
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * s);
    double sum = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i) {
        const double y = x + half * (rule.nodes(i) + 1.0);
        sum += rule.weights(i) * f(y) * std::exp(-(y - x) * (y - x) / (2.0 * s));
    }
    return 2.0 * norm * half * sum;
}

PairCheckReport full_generator_pair_check(const MarkovOracle& oracle, const ScalarField& f,
                                          const ScalarField& g, const std::vector<double>& t_list,
                                          const std::vector<Vec>& x_list, double tolerance,
                                          int panels) {
    PairCheckReport rep;
    for (double t : t_list) {
        for (const Vec& x : x_list) {
            const double lhs = oracle.apply(t, f, x) - f(x);
            const double rhs =
                simpson([&](double s) { return oracle.apply(s, g, x); }, 0.0, t, panels);
            const double viol = std::abs(lhs - rhs);
            if (viol > rep.max_violation) {
                rep.max_violation = viol;
                rep.worst_t = t;
            }
        }
    }
    rep.pass = rep.max_violation <= tolerance;
    return rep;
}

} // namespace pathlab
