#pragma once

#include "pathlab/expectation.hpp"
#include "pathlab/functional.hpp"

#include <vector>

namespace pathlab {

// One-sided difference quotients over a decreasing step ladder with one
// Richardson elimination assuming O(h) bias. `error_estimate` is the spread
// of the last two extrapolated entries; a ladder whose spread grows is
// reported as unreliable instead of silently returned.
struct DerivativeEstimate {
    double value = 0.0;
    std::vector<double> h_ladder;
    std::vector<double> raw_quotients;
    bool extrapolated = false;
    double error_estimate = 0.0;
    double std_error = 0.0; // sampling error when Monte Carlo backed
    bool reliable = true;
};

// Richardson table for quotients q(h) = L + c h + O(h^2); noise_floor is the
// sampling noise below which a growing spread is not flagged
DerivativeEstimate extrapolate_ladder(const std::vector<double>& h_ladder,
                                      const std::vector<double>& quotients,
                                      double noise_floor = 0.0);

// default time ladder tied to the path grid so t + h stays on nodes
std::vector<double> default_time_ladder(double dt);

// E-derivative at (t, x): limit of E_t[(V(t+h) - V(t)) / h], estimated with
// common random numbers across the ladder and across the two sections
DerivativeEstimate e_derivative(const AdaptedProcess& V, const ExpectationOperator& E, double t,
                                const Path& x, const std::vector<double>& h_ladder,
                                std::int64_t n);

// horizontal (Dupire time) derivative: limit of (V(t+h, stop_at(x,t)) - V(t,x)) / h
DerivativeEstimate dupire_horizontal(const AdaptedProcess& V, double t, const Path& x,
                                     const std::vector<double>& h_ladder);

// vertical derivative in direction v: bump quotient with h v 1_{[t,inf)}
DerivativeEstimate dupire_vertical(const AdaptedProcess& V, double t, const Path& x, const Vec& v,
                                   const std::vector<double>& h_ladder);

// iterated bump quotient, symmetrized over the (i, j) order; the single h
// seeds an internal {h, h/2, h/4} ladder
DerivativeEstimate dupire_vertical2(const AdaptedProcess& V, double t, const Path& x, int i, int j,
                                    double h);

struct ItoResidualSpec {
    std::vector<double> time_ladder;          // for the horizontal quotient
    std::vector<double> bump_ladder = {4e-3, 2e-3, 1e-3};
    double bump2_h = 1e-2;
};

struct ItoResidual {
    double value = 0.0;
    double error_bound = 0.0;
    DerivativeEstimate horizontal;
    std::vector<DerivativeEstimate> gradient;
    Mat hessian;
};

// Psi(t, x) = d_t V + <b(x(t)), grad V> + 1/2 tr(sigma sigma^T hess V),
// assembled from the Dupire quotients above
ItoResidual ito_residual(const AdaptedProcess& V, const SdeCoefficients& coeffs, double t,
                         const Path& x, const ItoResidualSpec& spec);

} // namespace pathlab
