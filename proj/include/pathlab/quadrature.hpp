#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pathlab {

struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

// Gauss-Hermite rule for weight exp(-x^2) on R (Golub-Welsch). Weights are
// normalized to sum to 1, i.e. they integrate against the standard Gaussian
// after the change of variables x -> sqrt(2) x.
const QuadratureRule& gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1], weights summing to 2.
const QuadratureRule& gauss_legendre(int n);

// composite Simpson of f over [a, b] with n panels (n >= 1, forced even)
double simpson(const std::function<double(double)>& f, double a, double b, int panels);

// int_a^b g(r) / sqrt(T - r) dr for smooth g and a <= b <= T, via r = T - rho^2
// which removes the endpoint singularity; `panels` Simpson panels in rho.
double integrate_sqrt_singular(const std::function<double(double)>& g, double a, double b,
                               double T, int panels);

} // namespace pathlab
