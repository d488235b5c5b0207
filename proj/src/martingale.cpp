#include "pathlab/martingale.hpp"

#include "pathlab/quadrature.hpp"
#include "pathlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace pathlab {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string MartingaleReport::to_json() const {
    std::ostringstream os;
    os << "{\"pass\":" << (pass ? "true" : "false") << ",\"max_z\":" << fmt17(max_z)
       << ",\"budget\":" << budget << ",\"pairs_tested\":[";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const DeviationCell& c = cells[i];
        os << (i ? "," : "") << "{\"s\":" << fmt17(c.s) << ",\"t\":" << fmt17(c.t)
           << ",\"path\":" << c.path_id << ",\"deviation\":" << fmt17(c.deviation)
           << ",\"std_error\":" << fmt17(c.std_error) << ",\"z\":" << fmt17(c.z) << "}";
    }
    os << "],\"worst\":{\"s\":" << fmt17(worst.s) << ",\"t\":" << fmt17(worst.t)
       << ",\"path\":" << worst.path_id << ",\"z\":" << fmt17(worst.z) << "}}";
    return os.str();
}

std::string MartingaleReport::deviations_csv() const {
    std::ostringstream os;
    os << "s,t,path_id,deviation,std_error,z\n";
    for (const DeviationCell& c : cells) {
        os << fmt17(c.s) << ',' << fmt17(c.t) << ',' << c.path_id << ',' << fmt17(c.deviation)
           << ',' << fmt17(c.std_error) << ',' << fmt17(c.z) << '\n';
    }
    return os.str();
}

std::vector<std::pair<double, double>> default_pair_grid(double T) {
    return {{0.0, T / 2}, {0.0, T}, {T / 4, 3 * T / 4}, {T / 2, T}};
}

std::vector<Path> default_path_panel(double T, double dt) {
    const auto n = static_cast<std::int64_t>(std::llround(T / dt));
    TimeGrid g(0.0, dt, std::max<std::int64_t>(n, 1));
    std::vector<Path> panel;
    panel.push_back(Path::constant1d(-1.0, g));
    panel.push_back(Path::constant1d(0.0, g));
    panel.push_back(Path::constant1d(2.0, g));
    panel.push_back(Path::sampled1d(g, [](double t) { return t; }));
    // one frozen Brownian sample
    Rng rng(mix64(0x9e3779b9, 1234));
    Mat v(1, g.n_nodes());
    v(0, 0) = 0.0;
    const double sq = std::sqrt(dt);
    for (std::int64_t k = 1; k < g.n_nodes(); ++k) v(0, k) = v(0, k - 1) + sq * rng.normal();
    panel.emplace_back(g, std::move(v));
    return panel;
}

namespace {

MartingaleReport run_pair_grid(const std::function<double(double, const Path&, std::uint64_t)>& M,
                               const ExpectationOperator& E,
                               const std::vector<std::pair<double, double>>& pairs,
                               const std::vector<Path>& test_paths, std::int64_t n,
                               double z_threshold, std::optional<double> window_end) {
    MartingaleReport rep;
    rep.budget = n;
    for (const auto& [s, t] : pairs) {
        if (!(0.0 <= s && s <= t)) throw std::invalid_argument("pair grid: need 0 <= s <= t");
        if (window_end && t > *window_end + 1e-12)
            throw std::invalid_argument("pair grid: t beyond the process window");
        for (std::size_t pid = 0; pid < test_paths.size(); ++pid) {
            const Path& x = test_paths[pid];
            // deviation of E_s M(t) from M(s) estimated as one paired sample
            // mean, so noise in an inner-sampled M(s, x) lands in the spread
            Functional paired;
            paired.horizon = t;
            paired.evaluate_stream = [&M, t, s, &x](const Path& p, std::uint64_t q) {
                return M(t, p, q) - M(s, x, mix64(q, 0xeace));
            };
            const std::int64_t budget = E.stochastic() ? n : 1;
            const MCEstimate lhs = E.conditional_apply(s, paired, x, budget);

            DeviationCell cell;
            cell.s = s;
            cell.t = t;
            cell.path_id = static_cast<int>(pid);
            cell.deviation = lhs.mean;
            cell.std_error = lhs.std_error;
            if (lhs.std_error > 0.0) {
                cell.z = std::abs(cell.deviation) / lhs.std_error;
            } else {
                cell.z = std::abs(cell.deviation) <= 1e-10 ? 0.0 : std::numeric_limits<double>::infinity();
            }
            if (cell.z >= rep.max_z) {
                rep.max_z = cell.z;
                rep.worst = cell;
            }
            rep.cells.push_back(cell);
        }
    }
    rep.pass = rep.max_z <= z_threshold;
    return rep;
}

} // namespace

MartingaleReport test_martingale(const AdaptedProcess& V, const ExpectationOperator& E,
                                 const std::vector<std::pair<double, double>>& pairs,
                                 const std::vector<Path>& test_paths, std::int64_t n,
                                 double z_threshold) {
    if (test_paths.empty()) throw std::invalid_argument("test_martingale: no test paths");
    if (!V.value && !V.value_stream)
        throw std::invalid_argument("test_martingale: V needs an evaluation (inner budget for "
                                    "nested processes)");
    auto M = [&V](double t, const Path& p, std::uint64_t stream) {
        return V.value ? V.value(t, p) : V.value_stream(t, p, stream);
    };
    return run_pair_grid(M, E, pairs, test_paths, n, z_threshold, V.t_max);
}

Compensator Compensator::regular(std::function<double(double, const Path&)> psi, double T) {
    Compensator c;
    c.value = std::move(psi);
    c.T = T;
    return c;
}

Compensator Compensator::endpoint_singular(std::function<double(double, const Path&)> psi,
                                           double T) {
    Compensator c;
    c.sqrt_scaled = std::move(psi);
    c.singular_at_end = true;
    c.T = T;
    return c;
}

double Compensator::integral(double t, const Path& p) const {
    if (t <= 0.0) return 0.0;
    if (t > T + 1e-12) throw std::invalid_argument("Compensator: t beyond T");
    if (singular_at_end) {
        // int_0^t psi(s)/sqrt(T-s) ds, s = T - rho^2
        return integrate_sqrt_singular([&](double s) { return sqrt_scaled(s, p); }, 0.0,
                                       std::min(t, T), T, panels);
    }
    return simpson([&](double s) { return value(s, p); }, 0.0, t, panels);
}

MartingaleReport test_compensated(const AdaptedProcess& V, const Compensator& psi,
                                  const ExpectationOperator& E,
                                  const std::vector<std::pair<double, double>>& pairs,
                                  const std::vector<Path>& test_paths, std::int64_t n,
                                  double z_threshold) {
    if (!V.value && !V.value_stream)
        throw std::invalid_argument("test_compensated: V needs an evaluation");
    auto M = [&V, &psi](double t, const Path& p, std::uint64_t stream) {
        const double v = V.value ? V.value(t, p) : V.value_stream(t, p, stream);
        return v - psi.integral(t, p);
    };
    return run_pair_grid(M, E, pairs, test_paths, n, z_threshold, V.t_max);
}

EquivalenceReport test_shifted_fvp_equivalence(const ShiftedProcessMC& U, const FVPSolution& field,
                                               double tolerance) {
    EquivalenceReport rep;
    for (std::size_t i = 0; i < field.times.size(); ++i) {
        for (std::size_t j = 0; j < field.states.size(); ++j) {
            const MCEstimate est = U(field.times[i], field.states[j]);
            const double diff =
                std::abs(est.mean - field.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            rep.max_se = std::max(rep.max_se, est.std_error);
            if (diff > rep.sup_diff) {
                rep.sup_diff = diff;
                rep.worst_t = field.times[i];
                rep.worst_x = field.states[j](0);
            }
        }
    }
    rep.pass = rep.sup_diff <= std::max(tolerance, 4.0 * rep.max_se);
    return rep;
}

IsometryReport ito_isometry_check(const SimpleProcess& H, const ExpectationOperator& E, double T,
                                  std::int64_t n) {
    if (H.knots.size() < 2 || H.values.size() + 1 != H.knots.size())
        throw std::invalid_argument("ito_isometry_check: malformed step process");
    if (!E.stochastic())
        throw std::invalid_argument("ito_isometry_check: needs a stochastic operator");
    for (std::size_t k = 0; k + 1 < H.knots.size(); ++k) {
        if (!(H.knots[k] < H.knots[k + 1]))
            throw std::invalid_argument("ito_isometry_check: knots must increase");
        const double steps = (H.knots[k + 1] - H.knots[k]) / E.dt();
        if (std::abs(steps - std::llround(steps)) > 1e-9)
            throw std::invalid_argument("ito_isometry_check: partition must align with the grid");
    }

    // lhs - rhs on common samples: (sum_k H_k dM_k)^2 - sum_k H_k^2 (t_{k+1}-t_k)
    Functional paired;
    paired.horizon = T;
    paired.evaluate = [&H, T](const Path& p) {
        double integral = 0.0;
        double quad = 0.0;
        for (std::size_t k = 0; k + 1 < H.knots.size(); ++k) {
            const double a = std::min(H.knots[k], T);
            const double b = std::min(H.knots[k + 1], T);
            if (b <= a) break;
            const double h = H.values[k](p);
            integral += h * (eval1(p, b) - eval1(p, a));
            quad += h * h * (b - a);
        }
        return integral * integral - quad;
    };
    Functional lhs_only;
    lhs_only.horizon = T;
    lhs_only.evaluate = [&H, T](const Path& p) {
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < H.knots.size(); ++k) {
            const double a = std::min(H.knots[k], T);
            const double b = std::min(H.knots[k + 1], T);
            if (b <= a) break;
            integral += H.values[k](p) * (eval1(p, b) - eval1(p, a));
        }
        return integral * integral;
    };

    const TimeGrid g(-E.dt(), E.dt(), 1);
    const Path x0 = Path::constant1d(0.0, g);
    const MCEstimate diff = E.apply(paired, x0, n);
    const MCEstimate lhs = E.apply(lhs_only, x0, n);

    IsometryReport rep;
    rep.lhs = lhs.mean;
    rep.rhs = lhs.mean - diff.mean;
    rep.std_error = diff.std_error;
    const double denom = std::max(std::abs(rep.rhs), 1e-12);
    rep.rel_diff = std::abs(diff.mean) / denom;
    rep.pass = rep.rel_diff <= std::max(0.05, 4.0 * diff.std_error / denom);
    return rep;
}

SupportCounterexampleReport support_counterexample(double T, double dt, int n_paths) {
    SupportCounterexampleReport rep;

    SdeCoefficients coeffs;
    coeffs.dim = 1;
    coeffs.drift = [](const Vec& x) { return Vec::Constant(1, -std::atan(x(0))); };
    coeffs.drift_bound = M_PI / 2;
    const ExpectationOperator E = ExpectationOperator::ito(coeffs, T, dt, 77);

    auto V = [](double t, const Path& p) {
        const double gain = std::abs(eval1(p, t)) - std::abs(eval1(p, 0.0));
        return std::min(std::max(gain, 0.0), 1.0);
    };

    // (a) V vanishes along every continuation x (x)_0 X^{x(0)}
    const auto n_steps = static_cast<std::int64_t>(std::llround(T / dt));
    TimeGrid g(0.0, dt, n_steps);
    Rng starts(mix64(2024, 7));
    for (int i = 0; i < n_paths; ++i) {
        // varied pasts: constants, ramps and scaled noise shapes
        Path past = [&]() -> Path {
            const int shape = i % 3;
            const double a = 4.0 * starts.uniform() - 2.0;
            if (shape == 0) return Path::constant1d(a, g);
            if (shape == 1) return Path::sampled1d(g, [a](double t) { return a * t; });
            Mat v(1, g.n_nodes());
            v(0, 0) = a;
            for (std::int64_t k = 1; k < g.n_nodes(); ++k)
                v(0, k) = v(0, k - 1) + 0.1 * (starts.uniform() - 0.5);
            return Path(g, std::move(v));
        }();
        const Path orbit = E.deterministic_continuation(past, T);
        for (std::int64_t k = 0; k <= n_steps; ++k) {
            const double val = V(g.node(k), orbit);
            if (val != 0.0) {
                rep.zero_along_orbits = false;
                rep.worst_orbit_value = std::max(rep.worst_orbit_value, val);
            }
        }
    }

    // (b) at the ramp x(t) = t the martingale property fails with a margin
    const Path ramp = Path::sampled1d(g, [](double t) { return t; });
    const double s = T / 2, t = T;
    rep.v_at_s = V(s, ramp);
    Functional section;
    section.horizon = t;
    section.evaluate = [&V, t](const Path& p) { return V(t, p); };
    rep.conditional_at_s = E.conditional_apply(s, section, ramp, 1).mean;
    rep.margin = rep.conditional_at_s - rep.v_at_s;
    rep.pass = rep.zero_along_orbits && rep.margin <= -0.1;
    return rep;
}

} // namespace pathlab
