#include "pathlab/derivatives.hpp"

#include "pathlab/parallel.hpp"
#include "pathlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pathlab {

DerivativeEstimate extrapolate_ladder(const std::vector<double>& h_ladder,
                                      const std::vector<double>& quotients, double noise_floor) {
    if (h_ladder.size() != quotients.size() || h_ladder.empty())
        throw std::invalid_argument("extrapolate_ladder: ladder/quotient size mismatch");
    for (std::size_t k = 1; k < h_ladder.size(); ++k) {
        if (!(h_ladder[k] < h_ladder[k - 1]))
            throw std::invalid_argument("extrapolate_ladder: ladder must decrease");
    }

    DerivativeEstimate est;
    est.h_ladder = h_ladder;
    est.raw_quotients = quotients;
    if (h_ladder.size() == 1) {
        est.value = quotients[0];
        return est;
    }

    std::vector<double> extr(h_ladder.size() - 1);
    for (std::size_t k = 0; k + 1 < h_ladder.size(); ++k) {
        const double h1 = h_ladder[k], h2 = h_ladder[k + 1];
        extr[k] = (h1 * quotients[k + 1] - h2 * quotients[k]) / (h1 - h2);
    }
    est.extrapolated = true;
    est.value = extr.back();
    if (extr.size() >= 2) {
        est.error_estimate = std::abs(extr[extr.size() - 1] - extr[extr.size() - 2]);
        // a growing quotient spread (beyond the sampling noise) means the
        // ladder is not converging and the estimate cannot be trusted
        const double floor =
            std::max(1e-12 * (1.0 + std::abs(est.value)), 8.0 * noise_floor);
        double prev_spread = std::abs(quotients[1] - quotients[0]);
        for (std::size_t k = 2; k < quotients.size(); ++k) {
            const double spread = std::abs(quotients[k] - quotients[k - 1]);
            if (spread > 4.0 * prev_spread + floor) est.reliable = false;
            prev_spread = spread;
        }
    } else {
        est.error_estimate = std::abs(extr[0] - quotients.back());
    }
    return est;
}

std::vector<double> default_time_ladder(double dt) {
    return {4.0 * dt, 2.0 * dt, dt};
}

namespace {

double section_value(const AdaptedProcess& V, double t, const Path& p, std::uint64_t stream) {
    if (V.value) return V.value(t, p);
    if (V.value_stream) return V.value_stream(t, p, stream);
    throw std::invalid_argument("AdaptedProcess: no evaluation defined");
}

void require_window(const AdaptedProcess& V, double t, double h_max) {
    if (t < V.t_min - 1e-12 || t + h_max > V.t_max + 1e-12)
        throw std::invalid_argument("derivative: t + h leaves the process time window");
}

} // namespace

DerivativeEstimate e_derivative(const AdaptedProcess& V, const ExpectationOperator& E, double t,
                                const Path& x, const std::vector<double>& h_ladder,
                                std::int64_t n) {
    if (h_ladder.empty()) throw std::invalid_argument("e_derivative: empty ladder");
    const double h_max = *std::max_element(h_ladder.begin(), h_ladder.end());
    require_window(V, t, h_max);

    const std::size_t L = h_ladder.size();
    if (!E.stochastic()) {
        const Path y = shift(E.deterministic_continuation(shift(x, t), h_max), -t);
        const std::uint64_t s0 = mix64(E.base_seed(), 0x0de7e2817);
        const double base = section_value(V, t, y, s0);
        std::vector<double> q(L);
        for (std::size_t k = 0; k < L; ++k)
            q[k] = (section_value(V, t + h_ladder[k], y, s0) - base) / h_ladder[k];
        return extrapolate_ladder(h_ladder, q);
    }

    if (n < 2) throw std::invalid_argument("e_derivative: stochastic kinds need n >= 2");
    const Path xs = shift(x, t);

    // per-sample extrapolated quotients: one continuation per sample, shared
    // across the ladder and between the two sections (common random numbers)
    const std::size_t blocks = static_cast<std::size_t>(std::min<std::int64_t>(n, 256));
    std::vector<std::vector<Accumulator>> sums(L, std::vector<Accumulator>(blocks));
    std::vector<Accumulator> ex_sum(blocks), ex_sum2(blocks);

    for_blocks(static_cast<std::size_t>(n), blocks, [&](std::size_t b, std::size_t begin,
                                                        std::size_t end) {
        std::vector<double> q(L);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t si = mix64(E.base_seed(), i);
            const Path y = shift(E.continuation(xs, h_max, si), -t);
            const std::uint64_t inner = mix64(E.base_seed(), i, 0xd12f);
            const double base = section_value(V, t, y, inner);
            for (std::size_t k = 0; k < L; ++k) {
                q[k] = (section_value(V, t + h_ladder[k], y, inner) - base) / h_ladder[k];
                sums[k][b].add(q[k]);
            }
            double ex = q.back();
            if (L >= 2) {
                const double h1 = h_ladder[L - 2], h2 = h_ladder[L - 1];
                ex = (h1 * q[L - 1] - h2 * q[L - 2]) / (h1 - h2);
            }
            ex_sum[b].add(ex);
            ex_sum2[b].add(ex * ex);
        }
    });

    std::vector<double> q_mean(L);
    for (std::size_t k = 0; k < L; ++k) {
        Accumulator a;
        for (std::size_t b = 0; b < blocks; ++b) a.add(sums[k][b].sum);
        q_mean[k] = a.sum / static_cast<double>(n);
    }
    Accumulator s1, s2;
    for (std::size_t b = 0; b < blocks; ++b) {
        s1.add(ex_sum[b].sum);
        s2.add(ex_sum2[b].sum);
    }
    const double mean = s1.sum / static_cast<double>(n);
    const double var = std::max(0.0, (s2.sum - n * mean * mean) / (n - 1.0));
    const double se = std::sqrt(var / static_cast<double>(n));

    DerivativeEstimate est = extrapolate_ladder(h_ladder, q_mean, se);
    est.std_error = se;
    return est;
}

DerivativeEstimate dupire_horizontal(const AdaptedProcess& V, double t, const Path& x,
                                     const std::vector<double>& h_ladder) {
    if (h_ladder.empty()) throw std::invalid_argument("dupire_horizontal: empty ladder");
    require_window(V, t, *std::max_element(h_ladder.begin(), h_ladder.end()));
    if (!V.value) throw std::invalid_argument("dupire_horizontal: needs a deterministic process");

    const Path frozen = stop_at(x, t);
    const double base = V.value(t, x);
    std::vector<double> q(h_ladder.size());
    for (std::size_t k = 0; k < h_ladder.size(); ++k)
        q[k] = (V.value(t + h_ladder[k], frozen) - base) / h_ladder[k];
    return extrapolate_ladder(h_ladder, q);
}

DerivativeEstimate dupire_vertical(const AdaptedProcess& V, double t, const Path& x, const Vec& v,
                                   const std::vector<double>& h_ladder) {
    if (h_ladder.empty()) throw std::invalid_argument("dupire_vertical: empty ladder");
    require_window(V, t, 0.0);
    if (!V.value) throw std::invalid_argument("dupire_vertical: needs a deterministic process");

    const double base = V.value(t, x);
    std::vector<double> q(h_ladder.size());
    for (std::size_t k = 0; k < h_ladder.size(); ++k)
        q[k] = (V.value(t, vertical_bump(x, t, v, h_ladder[k])) - base) / h_ladder[k];
    return extrapolate_ladder(h_ladder, q);
}

DerivativeEstimate dupire_vertical2(const AdaptedProcess& V, double t, const Path& x, int i, int j,
                                    double h) {
    require_window(V, t, 0.0);
    if (!V.value) throw std::invalid_argument("dupire_vertical2: needs a deterministic process");
    const auto d = x.dim();
    if (i < 0 || j < 0 || i >= d || j >= d)
        throw std::invalid_argument("dupire_vertical2: direction out of range");

    Vec ei = Vec::Zero(d), ej = Vec::Zero(d);
    ei(i) = 1.0;
    ej(j) = 1.0;
    const std::vector<double> ladder = {h, 0.5 * h, 0.25 * h};

    auto iterated = [&](const Vec& first, const Vec& second) {
        // inner quotient in direction `first` as a function of the path,
        // bumped outer in direction `second` with the same step
        auto inner = [&](const Path& p, double step) {
            return (V.value(t, vertical_bump(p, t, first, step)) - V.value(t, p)) / step;
        };
        std::vector<double> q(ladder.size());
        for (std::size_t k = 0; k < ladder.size(); ++k) {
            const double step = ladder[k];
            q[k] = (inner(vertical_bump(x, t, second, step), step) - inner(x, step)) / step;
        }
        return extrapolate_ladder(ladder, q);
    };

    const DerivativeEstimate a = iterated(ei, ej);
    const DerivativeEstimate b = (i == j) ? a : iterated(ej, ei);
    DerivativeEstimate est;
    est.h_ladder = ladder;
    est.extrapolated = true;
    est.value = 0.5 * (a.value + b.value);
    est.error_estimate = std::max(a.error_estimate, b.error_estimate);
    est.raw_quotients = a.raw_quotients;
    est.reliable = a.reliable && b.reliable;
    if (std::abs(a.value - b.value) > 10.0 * std::max(est.error_estimate, 1e-14))
        est.reliable = false; // conditioning warning: bump order matters
    return est;
}

ItoResidual ito_residual(const AdaptedProcess& V, const SdeCoefficients& coeffs, double t,
                         const Path& x, const ItoResidualSpec& spec) {
    ItoResidual out;
    out.horizontal = dupire_horizontal(V, t, x, spec.time_ladder);
    out.value = out.horizontal.value;
    out.error_bound = out.horizontal.error_estimate;

    const auto d = x.dim();
    const Vec xt = eval(x, t);
    const Vec b = coeffs.drift ? coeffs.drift(xt) : Vec::Zero(d);
    Mat a = Mat::Zero(d, d); // sigma sigma^T
    if (coeffs.diffusion) {
        const Mat sigma = coeffs.diffusion(xt);
        a = sigma * sigma.transpose();
    } else if (coeffs.diffusion1 && d == 1) {
        const double s = coeffs.diffusion1(xt(0));
        a(0, 0) = s * s;
    }

    out.gradient.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        Vec e = Vec::Zero(d);
        e(c) = 1.0;
        out.gradient[c] = dupire_vertical(V, t, x, e, spec.bump_ladder);
        out.value += b(c) * out.gradient[c].value;
        out.error_bound += std::abs(b(c)) * out.gradient[c].error_estimate;
    }

    out.hessian = Mat::Zero(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = r; c < d; ++c) {
            if (a(r, c) == 0.0 && a(c, r) == 0.0 && r != c) continue;
            const DerivativeEstimate h2 =
                dupire_vertical2(V, t, x, static_cast<int>(r), static_cast<int>(c), spec.bump2_h);
            out.hessian(r, c) = h2.value;
            out.hessian(c, r) = h2.value;
            const double w = (r == c) ? 0.5 * a(r, c) : a(r, c); // symmetric pair counted once
            out.value += w * h2.value;
            out.error_bound += std::abs(w) * h2.error_estimate;
        }
    }
    return out;
}

} // namespace pathlab
