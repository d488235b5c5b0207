#include "pathlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace pathlab {

namespace {

// nodes and weights from the symmetric tridiagonal Jacobi matrix
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diag, double total_weight) {
    const int n = static_cast<int>(off_diag.size()) + 1;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n - 1; ++k) {
        jacobi(k, k + 1) = off_diag(k);
        jacobi(k + 1, k) = off_diag(k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    QuadratureRule rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        const double v0 = es.eigenvectors()(0, k);
        rule.weights(k) = total_weight * v0 * v0;
    }
    return rule;
}

std::map<int, QuadratureRule>& cache(int which) {
    static std::map<int, QuadratureRule> hermite, legendre;
    return which == 0 ? hermite : legendre;
}
std::mutex cache_mutex;

} // namespace

const QuadratureRule& gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1 required");
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto& c = cache(0);
    auto it = c.find(n);
    if (it == c.end()) {
        Eigen::VectorXd beta(n - 1);
        for (int k = 1; k < n; ++k) beta(k - 1) = std::sqrt(0.5 * k);
        QuadratureRule rule = golub_welsch(beta, 1.0);
        rule.weights /= rule.weights.sum(); // constants integrate exactly to 1
        it = c.emplace(n, std::move(rule)).first;
    }
    return it->second;
}

const QuadratureRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto& c = cache(1);
    auto it = c.find(n);
    if (it == c.end()) {
        Eigen::VectorXd beta(n - 1);
        for (int k = 1; k < n; ++k) beta(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
        it = c.emplace(n, golub_welsch(beta, 2.0)).first;
    }
    return it->second;
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels < 1) throw std::invalid_argument("simpson: panels >= 1 required");
    if (a == b) return 0.0;
    const int n = 2 * panels; // subintervals, always even
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int k = 1; k < n; ++k) {
        sum += f(a + k * h) * ((k % 2 == 1) ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

double integrate_sqrt_singular(const std::function<double(double)>& g, double a, double b,
                               double T, int panels) {
    if (!(a <= b && b <= T)) throw std::invalid_argument("integrate_sqrt_singular: need a <= b <= T");
    // r = T - rho^2, dr = -2 rho drho, 1/sqrt(T-r) = 1/rho
    const double lo = std::sqrt(std::max(0.0, T - b));
    const double hi = std::sqrt(std::max(0.0, T - a));
    return simpson([&](double rho) { return 2.0 * g(T - rho * rho); }, lo, hi, panels);
}

} // namespace pathlab
