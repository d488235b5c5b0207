#pragma once

#include "pathlab/semigroup.hpp"

#include <functional>
#include <vector>

namespace pathlab {

// Right-hand side source of the final value problem. A source with an
// integrable endpoint singularity is declared through its smooth part:
// phi(r, x) = sqrt_scaled(r, x) / sqrt(T - r).
struct SourceTerm {
    std::function<double(double, const Vec&)> value;
    std::function<double(double, const Vec&)> sqrt_scaled;
    bool singular_at_end = false;

    static SourceTerm zero();
    static SourceTerm regular(std::function<double(double, const Vec&)> phi);
    static SourceTerm endpoint_singular(std::function<double(double, const Vec&)> psi);

    bool is_zero() const { return !value && !sqrt_scaled; }
    double operator()(double r, const Vec& x, double T) const;
};

// u(t, x) sampled on a uniform time grid [0, T] and a state sample set
struct FVPSolution {
    double T = 1.0;
    std::vector<double> times;  // uniform, times.front() = 0, times.back() = T
    std::vector<Vec> states;
    Mat u;                      // times.size() x states.size()

    double time_step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

// variation of constants: u(t) = S(T-t) f - int_t^T S(r-t) phi(r) dr
FVPSolution solve_fvp_mild(const MarkovOracle& oracle, const ScalarField& f,
                           const SourceTerm& phi, double T, int n_time,
                           const std::vector<Vec>& states, int time_panels = 400);

struct ResidualReport {
    double max_residual = 0.0;
    double worst_t = 0.0;
    double worst_x = 0.0;
    double richardson_gap = 0.0;
    bool grid_warning = false;
    Mat field; // interior residuals, (n_time-1) x (n_state-1) shaped window
};

// finite-difference generator action A u at an interior grid point
using GeneratorFD = std::function<double(const Mat& u, Eigen::Index i, Eigen::Index j, double dx)>;

// A = 1/2 d^2/dx^2 by central differences (the Gaussian generator, d = 1)
GeneratorFD half_laplacian_fd();

// residual field r(t,x) = D_t u + A u - phi with central differences; states
// must form a uniform 1-d grid. The same residual is recomputed at doubled
// steps on the even sub-grid; a large disagreement flags the grid as too
// coarse for the requested tolerance.
ResidualReport strong_residual(const FVPSolution& u,
                               const std::function<double(double, double)>& phi,
                               const GeneratorFD& generator, double tolerance);

} // namespace pathlab
