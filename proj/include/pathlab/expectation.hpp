#pragma once

#include "pathlab/functional.hpp"
#include "pathlab/path.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace pathlab {

// Result of any stochastic evaluation. Deterministic operators report
// std_error = 0 and n_samples = 1.
struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 1;
};

struct SdeCoefficients {
    int dim = 1;
    std::function<Vec(const Vec&)> drift;     // b
    std::function<Mat(const Vec&)> diffusion; // sigma; empty means sigma == 0
    // allocation-free scalar forms for d = 1; used by the simulation loop
    // when set, must agree with the vector forms
    std::function<double(double)> drift1;
    std::function<double(double)> diffusion1;
    double drift_bound = 1.0;
    double diffusion_bound = 1.0;

    bool sigma_zero() const { return !diffusion && !diffusion1; }
};

// Realization of an expectation operator: E F is evaluated at a path x by
// gluing a model-specific future onto the past of x at time 0. Conditional
// versions are obtained by conjugation with the shift.
class ExpectationOperator {
public:
    enum class Kind { Stopping, Flow, Wiener, Ito };

    static ExpectationOperator stopping();
    // deterministic evolution: future follows dy/dt = b(y) from x(0),
    // integrated with a classical 4th-order step at dt/4 substeps
    static ExpectationOperator flow(std::function<Vec(const Vec&)> b, int dim, double horizon,
                                    double dt);
    static ExpectationOperator wiener(int dim, double horizon, double dt, std::uint64_t seed);
    static ExpectationOperator ito(SdeCoefficients coeffs, double horizon, double dt,
                                   std::uint64_t seed);

    Kind kind() const { return kind_; }
    bool stochastic() const { return kind_ == Kind::Wiener || (kind_ == Kind::Ito && !coeffs_.sigma_zero()); }
    int dim() const { return coeffs_.dim; }
    double dt() const { return dt_; }
    double horizon() const { return horizon_; }
    std::uint64_t base_seed() const { return seed_; }
    ExpectationOperator with_seed(std::uint64_t seed) const {
        ExpectationOperator out(*this);
        out.seed_ = seed;
        return out;
    }

    // x with its future replaced by one simulated continuation on [0, until]
    Path continuation(const Path& x, double until, std::uint64_t stream) const;
    // deterministic continuation (Flow and sigma-zero Ito kinds)
    Path deterministic_continuation(const Path& x, double until) const;

    MCEstimate apply(const Functional& F, const Path& x, std::int64_t n) const;
    MCEstimate apply_stream(const Functional& F, const Path& x, std::int64_t n,
                            std::uint64_t stream) const;
    MCEstimate conditional_apply(double t, const Functional& F, const Path& x,
                                 std::int64_t n) const;
    MCEstimate conditional_apply_stream(double t, const Functional& F, const Path& x,
                                        std::int64_t n, std::uint64_t stream) const;

private:
    ExpectationOperator() = default;

    struct SimTemplate;
    SimTemplate make_template(const Path& x, double until, std::optional<double> reach) const;
    Path simulate(const SimTemplate& tpl, std::uint64_t stream) const;
    double sim_until(const Functional& F) const;

    Kind kind_ = Kind::Stopping;
    SdeCoefficients coeffs_;
    double horizon_ = 1.0;
    double dt_ = 1.0 / 256.0;
    std::uint64_t seed_ = 0;
};

MCEstimate apply(const ExpectationOperator& E, const Functional& F, const Path& x, std::int64_t n);
MCEstimate conditional_apply(const ExpectationOperator& E, double t, const Functional& F,
                             const Path& x, std::int64_t n);

// adapted process whose sections sample an inner conditional expectation:
// value_stream(t, p, s) = conditional_apply at t with n_inner samples on
// substream s. Used for nested checks and martingale tests of E_t G.
AdaptedProcess conditional_process(const ExpectationOperator& E, const Functional& G,
                                   std::int64_t n_inner, double t_max);

struct OperatorCheckReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double diff = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    bool pass = true;
};

// |E E_t F - E F| at x against 4 * paired std error
OperatorCheckReport check_homogeneity(const ExpectationOperator& E, double t, const Functional& F,
                                      const Path& x, std::int64_t n_outer, std::int64_t n_inner);

// |E_s E_t F - E_s F| at x, 0 <= s <= t
OperatorCheckReport check_tower(const ExpectationOperator& E, double s, double t,
                                const Functional& F, const Path& x, std::int64_t n_outer,
                                std::int64_t n_inner);

// |E_t(F G) - F E_t G| at x with common random numbers; F_known must have
// horizon <= t
OperatorCheckReport check_taking_out_known(const ExpectationOperator& E, double t,
                                           const Functional& F_known, const Functional& G,
                                           const Path& x, std::int64_t n);

struct EvolutionAxiomReport {
    bool stop_then_map = true; // phi(tau(x)) == phi(x)
    bool map_then_stop = true; // tau(phi(x)) == tau(x)
    bool orbit_fixed = true;   // phi(theta_t phi(x)) == theta_t phi(x), t >= 0
    double worst_error = 0.0;
    bool pass() const { return stop_then_map && map_then_stop && orbit_fixed; }
};

// checks the three evolution-map axioms pointwise on test paths
EvolutionAxiomReport evolution_map_axioms(const std::function<Path(const Path&)>& phi,
                                          const std::vector<Path>& test_paths,
                                          const std::vector<double>& shift_times,
                                          double tolerance = 1e-8);

} // namespace pathlab
