#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>

namespace pathlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Uniform grid t_start + k*dt, k = 0..n_steps. Node times are recomputed from
// (t_start, dt, k) so they are identical wherever they are needed.
class TimeGrid {
public:
    TimeGrid(double t_start, double dt, std::int64_t n_steps)
        : t_start_(t_start), dt_(dt), n_steps_(n_steps) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    }

    static TimeGrid over(double t_start, double t_end, std::int64_t n_steps) {
        if (!(t_start < t_end)) throw std::invalid_argument("TimeGrid: t_start < t_end required");
        return TimeGrid(t_start, (t_end - t_start) / static_cast<double>(n_steps), n_steps);
    }

    double t_start() const { return t_start_; }
    double t_end() const { return node(n_steps_); }
    double dt() const { return dt_; }
    std::int64_t n_steps() const { return n_steps_; }
    std::int64_t n_nodes() const { return n_steps_ + 1; }
    double node(std::int64_t k) const { return t_start_ + dt_ * static_cast<double>(k); }

    // largest node index with node time <= t, clamped to [0, n_steps]
    std::int64_t floor_index(double t) const;

    // index of the node at time t; throws if t is not a node (1e-9 slack)
    std::int64_t node_index(double t) const;

    bool contains_node(double t) const;

    TimeGrid shifted(double by) const { return TimeGrid(t_start_ + by, dt_, n_steps_); }

private:
    double t_start_;
    double dt_;
    std::int64_t n_steps_;
};

// A continuous trajectory R -> R^d represented by node values on a uniform
// grid: linear interpolation inside the window, constant extension outside.
// Paths are immutable after construction; every operation below is pure.
// Node values live behind a shared pointer so copies and shifts are cheap.
class Path {
public:
    Path(TimeGrid grid, Mat values)
        : Path(grid, std::make_shared<const Mat>(std::move(values))) {}

    Path(TimeGrid grid, std::shared_ptr<const Mat> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_->cols() != grid_.n_nodes())
            throw std::invalid_argument("Path: values.cols() must equal grid.n_nodes()");
        if (values_->rows() < 1)
            throw std::invalid_argument("Path: state dimension must be positive");
    }

    static Path constant(const Vec& x, const TimeGrid& grid) {
        Mat v(x.size(), grid.n_nodes());
        v.colwise() = x;
        return Path(grid, std::move(v));
    }
    static Path constant1d(double x, const TimeGrid& grid) {
        return constant(Vec::Constant(1, x), grid);
    }
    // scalar path from a function sampled at the nodes
    template <class F>
    static Path sampled1d(const TimeGrid& grid, F&& f) {
        Mat v(1, grid.n_nodes());
        for (std::int64_t k = 0; k < grid.n_nodes(); ++k) v(0, k) = f(grid.node(k));
        return Path(grid, std::move(v));
    }

    const TimeGrid& grid() const { return grid_; }
    const Mat& values() const { return *values_; }
    const std::shared_ptr<const Mat>& values_ptr() const { return values_; }
    Eigen::Index dim() const { return values_->rows(); }

private:
    TimeGrid grid_;
    std::shared_ptr<const Mat> values_;
};

// evaluation map: linear interpolation on the window, constant outside
Vec eval(const Path& p, double t);
double eval1(const Path& p, double t); // d = 1 convenience

// shift: result(s) = p(t + s)
Path shift(const Path& p, double t);

// stopping map: result(s) = p(min(s, 0))
Path stop(const Path& p);

// stopping at time t: result(s) = p(min(s, t)); a non-node t freezes at the
// nearest node <= t
Path stop_at(const Path& p, double t);

// past of `past` glued at time 0 to the increments of `future`:
// r(t) = past(t) for t <= 0, r(t) = past(0) + future(t) for t > 0.
// Requires matching dt, 0 a node of both grids, and future(0) = 0.
Path concat_at_zero(const Path& past, const Path& future);

// stop_at(p, t) plus h*v added to every node with node time >= t; the jump at
// t is carried by the node values (post-jump value at the bump node)
Path vertical_bump(const Path& p, double t, const Vec& v, double h);

struct PathMetricValue {
    double value = 0.0;
};

// truncated path metric: sum_{n=1}^{n_max} 2^{-n} (1 ^ sup_{[-n,n]} |p - q|)
PathMetricValue path_distance(const Path& p, const Path& q, int n_max = 20);

} // namespace pathlab
