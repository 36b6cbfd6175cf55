#pragma once

#include <vector>

namespace segfuse {

struct SolverConfig {
    double lambda = -1.0;    // L1 weight; < 0 means auto: 0.5 * max_i d_i
    double lambda_q = 1.0;   // L2 weight of the quadratic problem
    double penalty = 1.0;    // ADMM penalty theta
    int max_iter = 1000;     // ADMM iteration cap T_tau
    double tol_primal = 1e-6;
    double tol_dual = 1e-6;
};

struct SolverResult {
    std::vector<double> w;   // simplex-feasible weights
    std::vector<double> z;   // ADMM split variable (sparse pattern, solve_l1 only)
    bool converged = true;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double lambda_used = 0.0;
    // residual histories, one entry per ADMM iteration
    std::vector<double> primal_history;
    std::vector<double> dual_history;
};

// Euclidean projection onto the probability simplex {w >= 0, sum w = 1},
// sort-and-threshold.
std::vector<double> simplex_project(const std::vector<double>& v);

// Minimizes sum_i w_i d_i + lambda_q * ||w||_2^2 over the simplex.
// Closed form: the objective is lambda_q * ||w + d/(2 lambda_q)||^2 up to a
// constant, so the optimum is simplex_project(-d / (2 lambda_q)).
SolverResult solve_quadratic(const std::vector<double>& d, const SolverConfig& cfg);

// Minimizes sum_i w_i d_i + lambda * ||z||_1 with w = z, w on the simplex,
// via ADMM (simplex projection step for w, soft-thresholding for z). Runs
// until primal and dual residuals drop below tolerance or max_iter; on
// non-convergence the best iterate is still returned with converged = false.
SolverResult solve_l1(const std::vector<double>& d, const SolverConfig& cfg);

}  // namespace segfuse
