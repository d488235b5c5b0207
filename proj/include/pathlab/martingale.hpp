#pragma once

#include "pathlab/expectation.hpp"
#include "pathlab/fvp.hpp"
#include "pathlab/functional.hpp"

#include <string>
#include <vector>

namespace pathlab {

struct DeviationCell {
    double s = 0.0;
    double t = 0.0;
    int path_id = 0;
    double deviation = 0.0;
    double std_error = 0.0;
    double z = 0.0;
};

struct MartingaleReport {
    std::vector<DeviationCell> cells;
    double max_z = 0.0;
    bool pass = true;
    std::int64_t budget = 0;
    DeviationCell worst; // witness of the largest |z|

    std::string to_json() const;
    std::string deviations_csv() const;
};

// default pair grid {(0,T/2), (0,T), (T/4,3T/4), (T/2,T)}
std::vector<std::pair<double, double>> default_pair_grid(double T);

// panel of test paths: constants at -1, 0, 2, a ramp, one frozen Brownian
// sample (fixed seed)
std::vector<Path> default_path_panel(double T, double dt);

// checks V(s) = E_s V(t) on the pair grid and path panel; deviations are
// conditional estimates minus the exact section value
MartingaleReport test_martingale(const AdaptedProcess& V, const ExpectationOperator& E,
                                 const std::vector<std::pair<double, double>>& pairs,
                                 const std::vector<Path>& test_paths, std::int64_t n,
                                 double z_threshold = 4.0);

// adapted integrand Psi of a compensator int_0^t Psi(s, x) ds; a declared
// endpoint singularity means Psi(s,x) = sqrt_scaled(s,x)/sqrt(T - s)
struct Compensator {
    std::function<double(double, const Path&)> value;
    std::function<double(double, const Path&)> sqrt_scaled;
    bool singular_at_end = false;
    double T = 1.0;
    int panels = 128;

    static Compensator regular(std::function<double(double, const Path&)> psi, double T);
    static Compensator endpoint_singular(std::function<double(double, const Path&)> psi, double T);

    // pathwise integral int_0^t Psi(s, p) ds
    double integral(double t, const Path& p) const;
};

// martingale test of M(t) = V(t) - int_0^t Psi(s) ds
MartingaleReport test_compensated(const AdaptedProcess& V, const Compensator& psi,
                                  const ExpectationOperator& E,
                                  const std::vector<std::pair<double, double>>& pairs,
                                  const std::vector<Path>& test_paths, std::int64_t n,
                                  double z_threshold = 4.0);

struct EquivalenceReport {
    double sup_diff = 0.0;
    double worst_t = 0.0;
    double worst_x = 0.0;
    double max_se = 0.0;
    bool pass = true;
};

// compares U(t, x) = [Theta_{-t} V(t)](constant path at x), supplied as a
// Monte Carlo evaluator, against the variation-of-constants field
using ShiftedProcessMC = std::function<MCEstimate(double t, const Vec& x)>;
EquivalenceReport test_shifted_fvp_equivalence(const ShiftedProcessMC& U, const FVPSolution& field,
                                               double tolerance = 1e-4);

// simple adapted step process H = sum_k H_k 1_{(t_k, t_{k+1}]}
struct SimpleProcess {
    std::vector<double> knots;       // t_0 < ... < t_n
    std::vector<Functional> values;  // H_k, F_{t_k}-measurable
};

struct IsometryReport {
    double lhs = 0.0; // E[(H . M)^2(T)]
    double rhs = 0.0; // E[int_0^T H^2 Psi^2 ds]
    double rel_diff = 0.0;
    double std_error = 0.0;
    bool pass = true;
};

// Ito isometry for the coordinate martingale of the Brownian operator
// (Psi == 1): both sides on common samples, 5% relative tolerance
IsometryReport ito_isometry_check(const SimpleProcess& H, const ExpectationOperator& E, double T,
                                  std::int64_t n);

struct SupportCounterexampleReport {
    bool zero_along_orbits = true;     // V == 0 on simulated P^x paths
    double worst_orbit_value = 0.0;
    double v_at_s = 0.0;               // V(s, ramp)
    double conditional_at_s = 0.0;     // [E_s V(t)](ramp)
    double margin = 0.0;               // conditional - V(s)
    bool pass = true;                  // margin <= -0.1 and exact zeros
};

// sigma == 0, b = -arctan flow: V(t,x) = min{(|x(t)| - |x(0)|)^+, 1} is a
// P^x-martingale for every x but not an E-martingale
SupportCounterexampleReport support_counterexample(double T, double dt, int n_paths);

} // namespace pathlab
