#include "segfuse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace segfuse {

namespace {

double auto_lambda(const std::vector<double>& d, double lambda) {
    if (lambda >= 0.0) return lambda;
    double mx = 0.0;
    for (double v : d) mx = std::max(mx, v);
    return 0.5 * mx;
}

double l2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

std::vector<double> simplex_project(const std::vector<double>& v) {
    const std::size_t k = v.size();
    if (k == 0) throw std::invalid_argument("simplex_project: empty vector");
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < k; ++i) {
        css += u[i];
        const double cand = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - cand > 0.0) {
            rho = i + 1;
            theta = cand;
        }
    }
    (void)rho;
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = std::max(v[i] - theta, 0.0);
    return w;
}

SolverResult solve_quadratic(const std::vector<double>& d, const SolverConfig& cfg) {
    if (d.empty()) throw std::invalid_argument("solve_quadratic: empty distance vector");
    if (cfg.lambda_q <= 0.0) throw std::invalid_argument("solve_quadratic: lambda_q must be > 0");
    SolverResult r;
    std::vector<double> v(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) v[i] = -d[i] / (2.0 * cfg.lambda_q);
    r.w = simplex_project(v);
    r.z = r.w;
    r.converged = true;
    r.iterations = 0;
    return r;
}

SolverResult solve_l1(const std::vector<double>& d, const SolverConfig& cfg) {
    const std::size_t k = d.size();
    if (k == 0) throw std::invalid_argument("solve_l1: empty distance vector");
    if (cfg.penalty <= 0.0) throw std::invalid_argument("solve_l1: penalty must be > 0");

    const double lambda = auto_lambda(d, cfg.lambda);
    const double theta = cfg.penalty;

    SolverResult r;
    r.lambda_used = lambda;
    std::vector<double> w(k, 1.0 / static_cast<double>(k));
    std::vector<double> z = w, u(k, 0.0), z_old(k), tmp(k);

    for (int it = 1; it <= cfg.max_iter; ++it) {
        // w-step: argmin over the simplex of w.d + (theta/2)||w - z + u||^2
        for (std::size_t i = 0; i < k; ++i) tmp[i] = z[i] - u[i] - d[i] / theta;
        w = simplex_project(tmp);

        // z-step: soft-threshold of w + u at lambda/theta
        z_old = z;
        const double tau = lambda / theta;
        for (std::size_t i = 0; i < k; ++i) {
            const double x = w[i] + u[i];
            z[i] = x > tau ? x - tau : (x < -tau ? x + tau : 0.0);
        }

        for (std::size_t i = 0; i < k; ++i) u[i] += w[i] - z[i];

        const double pr = l2(w, z);
        double dr = theta * l2(z, z_old);
        r.primal_history.push_back(pr);
        r.dual_history.push_back(dr);
        r.iterations = it;
        r.primal_residual = pr;
        r.dual_residual = dr;
        if (pr < cfg.tol_primal && dr < cfg.tol_dual) {
            r.converged = true;
            r.w = w;
            r.z = z;
            return r;
        }
    }
    r.converged = false;
    r.w = w;
    r.z = z;
    return r;
}

}  // namespace segfuse
