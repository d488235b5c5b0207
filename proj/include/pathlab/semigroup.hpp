#pragma once

#include "pathlab/expectation.hpp"
#include "pathlab/functional.hpp"

#include <functional>

namespace pathlab {

// S(t) F = E Theta_t F on functionals measurable with respect to the past
struct EvolutionarySemigroup {
    ExpectationOperator E;

    // requires F.horizon <= 0
    MCEstimate evo_apply(double t, const Functional& F, const Path& x, std::int64_t n) const;

    // [S(t) f](x0) through F_0(f) on the constant path at x0
    MCEstimate markov_restrict(double t, const ScalarField& f, const Vec& x0,
                               std::int64_t n) const;
};

// Deterministic realization of the semigroup induced on the state space.
class MarkovOracle {
public:
    enum class Kind { Gaussian, Identity };

    static MarkovOracle gaussian(int dim, int hermite_nodes = 64);
    static MarkovOracle identity();

    // [S(t) f](x); t = 0 returns f(x)
    double apply(double t, const ScalarField& f, const Vec& x) const;

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    int nodes() const { return nodes_; }

private:
    Kind kind_ = Kind::Gaussian;
    int dim_ = 1;
    int nodes_ = 64;
};

// Gaussian convolution by tensorized Gauss-Hermite quadrature (d = dim of x)
double gaussian_apply(double t, const ScalarField& f, const Vec& x, int hermite_nodes = 64);

struct ResolventValue {
    double value = 0.0;
    double tail_bound = 0.0;
    bool truncation_warning = false;
};

// R(lambda) f(x) by composite Simpson of the truncated Laplace integral;
// f_bound is a sup-norm hint used for the tail estimate
ResolventValue laplace_resolvent(const MarkovOracle& oracle, double lambda, const ScalarField& f,
                                 const Vec& x, double T_trunc, int panels = 400,
                                 double f_bound = 1.0);

// truncation horizon making the tail bound ||f|| e^{-lambda T} / lambda <= tol
double laplace_truncation_time(double lambda, double f_bound, double tol);

// R(lambda) f as a field, for resolvent compositions
ScalarField resolvent_field(const MarkovOracle& oracle, double lambda, ScalarField f,
                            double T_trunc, int panels = 400);

// |[S(t+s) f](x) - [S(t) S(s) f](x)| with the inner application as a field
double semigroup_law_residual(const MarkovOracle& oracle, const ScalarField& f, double t, double s,
                              const Vec& x);

// E[f(max_{r in [t,T]} B_r) | B_t = x] via the reflection principle:
// 2 int_x^inf f(y) p_{T-t}(x, y) dy, integrated over [x, x + 10 sqrt(T-t)]
double brownian_max_expectation(const std::function<double(double)>& f, double t, double T,
                                double x, int legendre_nodes = 64);

struct PairCheckReport {
    double max_violation = 0.0;
    double worst_t = 0.0;
    bool pass = true;
};

// checks S(t) f - f = int_0^t S(s) g ds on the sample points; the defining
// relation of generator pairs (f, g)
PairCheckReport full_generator_pair_check(const MarkovOracle& oracle, const ScalarField& f,
                                          const ScalarField& g, const std::vector<double>& t_list,
                                          const std::vector<Vec>& x_list, double tolerance = 1e-6,
                                          int panels = 200);

} // namespace pathlab
