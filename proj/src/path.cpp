#include "pathlab/path.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pathlab {

std::int64_t TimeGrid::floor_index(double t) const {
    if (t <= t_start_) return 0;
    auto k = static_cast<std::int64_t>(std::floor((t - t_start_) / dt_));
    // floating point can land one off around a node; fix up locally
    while (k > 0 && node(k) > t) --k;
    while (k < n_steps_ && node(k + 1) <= t) ++k;
    return std::min(k, n_steps_);
}

std::int64_t TimeGrid::node_index(double t) const {
    auto k = static_cast<std::int64_t>(std::llround((t - t_start_) / dt_));
    if (k < 0 || k > n_steps_ || std::abs(node(k) - t) > 1e-9 * std::max(1.0, std::abs(t)))
        throw std::invalid_argument("TimeGrid: time is not a grid node");
    return k;
}

bool TimeGrid::contains_node(double t) const {
    auto k = static_cast<std::int64_t>(std::llround((t - t_start_) / dt_));
    return k >= 0 && k <= n_steps_ && std::abs(node(k) - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

Vec eval(const Path& p, double t) {
    const TimeGrid& g = p.grid();
    if (t <= g.t_start()) return p.values().col(0);
    if (t >= g.t_end()) return p.values().col(g.n_steps());
    const std::int64_t k = g.floor_index(t);
    if (k == g.n_steps()) return p.values().col(k);
    const double w = (t - g.node(k)) / g.dt();
    return (1.0 - w) * p.values().col(k) + w * p.values().col(k + 1);
}

double eval1(const Path& p, double t) {
    return eval(p, t)(0);
}

Path shift(const Path& p, double t) {
    return Path(p.grid().shifted(-t), p.values_ptr());
}

Path stop(const Path& p) {
    return stop_at(p, 0.0);
}

Path stop_at(const Path& p, double t) {
    const TimeGrid& g = p.grid();
    Mat v = p.values();
    const std::int64_t k = g.floor_index(t);
    for (std::int64_t j = k + 1; j < g.n_nodes(); ++j) v.col(j) = v.col(k);
    return Path(g, std::move(v));
}

Path concat_at_zero(const Path& past, const Path& future) {
    const TimeGrid& gp = past.grid();
    const TimeGrid& gf = future.grid();
    if (past.dim() != future.dim())
        throw std::invalid_argument("concat_at_zero: dimension mismatch");
    if (std::abs(gp.dt() - gf.dt()) > 1e-12 * gp.dt())
        throw std::invalid_argument("concat_at_zero: grids differ in dt");
    if (!gp.contains_node(0.0) || !gf.contains_node(0.0))
        throw std::invalid_argument("concat_at_zero: 0 must be a node of both grids");
    if (eval(future, 0.0).norm() > 1e-12)
        throw std::invalid_argument("concat_at_zero: future must start at 0 (increment path)");

    const std::int64_t kp = gp.node_index(0.0);   // past nodes 0..kp cover (-inf, 0]
    const std::int64_t kf = gf.node_index(0.0);   // future nodes kf..end cover [0, inf)
    const std::int64_t n_fwd = gf.n_steps() - kf;
    const Vec x0 = past.values().col(kp);

    TimeGrid g(gp.node(0), gp.dt(), kp + std::max<std::int64_t>(n_fwd, 1));
    Mat v(past.dim(), g.n_nodes());
    for (std::int64_t j = 0; j <= kp; ++j) v.col(j) = past.values().col(j);
    for (std::int64_t j = 1; j <= n_fwd; ++j) v.col(kp + j) = x0 + future.values().col(kf + j);
    if (n_fwd == 0) v.col(kp + 1) = x0;
    return Path(g, std::move(v));
}

Path vertical_bump(const Path& p, double t, const Vec& v, double h) {
    if (v.size() != p.dim())
        throw std::invalid_argument("vertical_bump: direction dimension mismatch");
    Path stopped = stop_at(p, t);
    Mat vals = stopped.values();
    const TimeGrid& g = p.grid();
    for (std::int64_t j = 0; j < g.n_nodes(); ++j) {
        if (g.node(j) >= t) vals.col(j) += h * v;
    }
    return Path(g, std::move(vals));
}

PathMetricValue path_distance(const Path& p, const Path& q, int n_max) {
    if (n_max < 1) throw std::invalid_argument("path_distance: n_max >= 1 required");
    if (p.dim() != q.dim()) throw std::invalid_argument("path_distance: dimension mismatch");

    // |p - q| is piecewise linear between the union of both node sets, so the
    // sup over [-n, n] is attained at a node or an interval endpoint.
    std::set<double> times;
    auto add_nodes = [&times](const Path& a, double lo, double hi) {
        const TimeGrid& g = a.grid();
        for (std::int64_t k = 0; k < g.n_nodes(); ++k) {
            const double t = g.node(k);
            if (t >= lo && t <= hi) times.insert(t);
        }
    };

    double total = 0.0;
    double sup = 0.0;
    double covered = 0.0; // sup over [-covered, covered] already known
    for (int n = 1; n <= n_max; ++n) {
        times.clear();
        times.insert(-static_cast<double>(n));
        times.insert(static_cast<double>(n));
        add_nodes(p, -static_cast<double>(n), static_cast<double>(n));
        add_nodes(q, -static_cast<double>(n), static_cast<double>(n));
        for (double t : times) {
            if (std::abs(t) <= covered) continue;
            sup = std::max(sup, (eval(p, t) - eval(q, t)).norm());
        }
        covered = static_cast<double>(n);
        total += std::ldexp(std::min(1.0, sup), -n);
        if (sup >= 1.0) {
            // every further term saturates at 2^-n
            total += std::ldexp(1.0, -n_max) * (std::ldexp(1.0, n_max - n) - 1.0);
            break;
        }
    }
    return PathMetricValue{total};
}

} // namespace pathlab
