#include "pathlab/fvp.hpp"

#include "pathlab/parallel.hpp"
#include "pathlab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pathlab {

SourceTerm SourceTerm::zero() {
    return SourceTerm{};
}

SourceTerm SourceTerm::regular(std::function<double(double, const Vec&)> phi) {
    SourceTerm s;
    s.value = std::move(phi);
    return s;
}

SourceTerm SourceTerm::endpoint_singular(std::function<double(double, const Vec&)> psi) {
    SourceTerm s;
    s.sqrt_scaled = std::move(psi);
    s.singular_at_end = true;
    return s;
}

double SourceTerm::operator()(double r, const Vec& x, double T) const {
    if (is_zero()) return 0.0;
    if (singular_at_end) {
        const double d = T - r;
        if (d <= 0.0) throw std::domain_error("SourceTerm: singular at the endpoint");
        return sqrt_scaled(r, x) / std::sqrt(d);
    }
    return value(r, x);
}

FVPSolution solve_fvp_mild(const MarkovOracle& oracle, const ScalarField& f,
                           const SourceTerm& phi, double T, int n_time,
                           const std::vector<Vec>& states, int time_panels) {
    if (n_time < 1) throw std::invalid_argument("solve_fvp_mild: n_time >= 1");
    if (states.empty()) throw std::invalid_argument("solve_fvp_mild: empty state sample set");

    FVPSolution sol;
    sol.T = T;
    sol.times.resize(n_time + 1);
    for (int i = 0; i <= n_time; ++i) sol.times[i] = T * i / n_time;
    sol.states = states;
    sol.u.resize(n_time + 1, static_cast<Eigen::Index>(states.size()));

    const std::size_t cells = sol.times.size() * states.size();
    for_blocks(cells, std::min<std::size_t>(cells, 64), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        for (std::size_t cell = begin; cell < end; ++cell) {
            const std::size_t i = cell / states.size();
            const std::size_t j = cell % states.size();
            const double t = sol.times[i];
            const Vec& x = states[j];

            double val = oracle.apply(T - t, f, x);
            if (!phi.is_zero()) {
                if (phi.singular_at_end) {
                    // int_t^T S(r-t) psi(r)/sqrt(T-r) dr with r = T - rho^2
                    const double hi = std::sqrt(T - t);
                    val -= simpson(
                        [&](double rho) {
                            const double r = T - rho * rho;
                            ScalarField slice = [&](const Vec& y) { return phi.sqrt_scaled(r, y); };
                            return 2.0 * oracle.apply(r - t, slice, x);
                        },
                        0.0, hi, time_panels);
                } else {
                    val -= simpson(
                        [&](double r) {
                            ScalarField slice = [&](const Vec& y) { return phi.value(r, y); };
                            return oracle.apply(r - t, slice, x);
                        },
                        t, T, time_panels);
                }
            }
            sol.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = val;
        }
    });
    // pin the terminal condition exactly on the sample set
    for (std::size_t j = 0; j < states.size(); ++j)
        sol.u(n_time, static_cast<Eigen::Index>(j)) = f(states[j]);
    return sol;
}

GeneratorFD half_laplacian_fd() {
    return [](const Mat& u, Eigen::Index i, Eigen::Index j, double dx) {
        return 0.5 * (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) / (dx * dx);
    };
}

namespace {

double residual_scan(const Mat& u, const std::vector<double>& times,
                     const std::vector<double>& xs, Eigen::Index stride,
                     const std::function<double(double, double)>& phi, const GeneratorFD& gen,
                     double* worst_t, double* worst_x, Mat* field) {
    const Eigen::Index nt = u.rows();
    const Eigen::Index nx = u.cols();
    const double dt = (times[stride] - times[0]);
    const double dx = (xs[stride] - xs[0]);
    double worst = 0.0;
    if (field) field->setZero();
    for (Eigen::Index i = stride; i + stride < nt; i += stride) {
        for (Eigen::Index j = stride; j + stride < nx; j += stride) {
            const double dtu = (u(i + stride, j) - u(i - stride, j)) / (2.0 * dt);
            Mat sub(3, 3);
            sub << u(i - stride, j - stride), u(i - stride, j), u(i - stride, j + stride),
                u(i, j - stride), u(i, j), u(i, j + stride), u(i + stride, j - stride),
                u(i + stride, j), u(i + stride, j + stride);
            const double au = gen(sub, 1, 1, dx);
            const double r = dtu + au - phi(times[i], xs[j]);
            if (field && stride == 1) (*field)(i - 1, j - 1) = r;
            if (std::abs(r) > worst) {
                worst = std::abs(r);
                if (worst_t) *worst_t = times[i];
                if (worst_x) *worst_x = xs[j];
            }
        }
    }
    return worst;
}

} // namespace

ResidualReport strong_residual(const FVPSolution& sol,
                               const std::function<double(double, double)>& phi,
                               const GeneratorFD& generator, double tolerance) {
    const Eigen::Index nt = sol.u.rows();
    const Eigen::Index nx = sol.u.cols();
    if (nt < 3 || nx < 3)
        throw std::invalid_argument("strong_residual: need at least a 3x3 sample grid");

    std::vector<double> xs(sol.states.size());
    for (std::size_t j = 0; j < sol.states.size(); ++j) {
        if (sol.states[j].size() != 1)
            throw std::invalid_argument("strong_residual: implemented for d = 1");
        xs[j] = sol.states[j](0);
    }
    const double dx0 = xs[1] - xs[0];
    for (std::size_t j = 1; j < xs.size(); ++j) {
        if (std::abs(xs[j] - xs[j - 1] - dx0) > 1e-9 * std::max(1.0, std::abs(dx0)))
            throw std::invalid_argument("strong_residual: states must form a uniform grid");
    }

    ResidualReport rep;
    rep.field.resize(nt - 2, nx - 2);
    rep.max_residual =
        residual_scan(sol.u, sol.times, xs, 1, phi, generator, &rep.worst_t, &rep.worst_x,
                      &rep.field);

    if (nt >= 5 && nx >= 5) {
        const double coarse = residual_scan(sol.u, sol.times, xs, 2, phi, generator, nullptr,
                                            nullptr, nullptr);
        rep.richardson_gap = std::abs(coarse - rep.max_residual);
        rep.grid_warning = rep.richardson_gap > 10.0 * tolerance;
    }
    return rep;
}

} // namespace pathlab
