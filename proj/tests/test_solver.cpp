#include <cmath>
#include <random>

#include "doctest.h"
#include "segfuse/solver.hpp"
#include "support/oracles.hpp"

using namespace segfuse;

namespace {

void check_simplex_feasible(const std::vector<double>& w, double tol = 1e-9) {
    double sum = 0.0;
    for (double v : w) {
        CHECK(v >= -tol);
        sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= tol);
}

std::vector<double> random_vector(std::mt19937_64& g, int k, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(k);
    for (double& x : v) x = dist(g);
    return v;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("simplex_project idempotent on feasible points, clips vertices") {
    const std::vector<double> on = {0.2, 0.5, 0.3};
    const auto proj = simplex_project(on);
    for (int i = 0; i < 3; ++i) CHECK(proj[i] == doctest::Approx(on[i]).epsilon(1e-12));

    const auto vert = simplex_project({2.0, 0.0, 0.0});
    CHECK(vert[0] == doctest::Approx(1.0));
    CHECK(vert[1] == doctest::Approx(0.0));
    CHECK(vert[2] == doctest::Approx(0.0));
}

TEST_CASE("simplex_project agrees with bisection oracle") {
    std::mt19937_64 g(41);
    for (int rep = 0; rep < 50; ++rep) {
        const auto v = random_vector(g, 8, -3.0, 3.0);
        const auto w = simplex_project(v);
        const auto ref = oracle::simplex_project_bisect(v);
        check_simplex_feasible(w);
        for (int i = 0; i < 8; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("solve_quadratic symmetric and dominant cases") {
    SolverConfig cfg;
    const auto uni = solve_quadratic({5.0, 5.0, 5.0}, cfg);
    for (double v : uni.w) CHECK(v == doctest::Approx(1.0 / 3.0));

    cfg.lambda_q = 1e-6;  // linear term dominates
    const auto vert = solve_quadratic({0.0, 10.0, 10.0}, cfg);
    CHECK(vert.w[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(vert.w[1] == doctest::Approx(0.0));
}

TEST_CASE("solve_quadratic matches projected-gradient oracle") {
    std::mt19937_64 g(42);
    SolverConfig cfg;
    cfg.lambda_q = 1.0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = random_vector(g, 5, 0.0, 4.0);
        const auto r = solve_quadratic(d, cfg);
        check_simplex_feasible(r.w);
        const auto ref = oracle::quad_projected_gradient(d, cfg.lambda_q, 100000);
        const double got = oracle::quad_objective(r.w, d, cfg.lambda_q);
        const double want = oracle::quad_objective(ref, d, cfg.lambda_q);
        CHECK(got <= want + 1e-8);
        CHECK(std::abs(got - want) <= 1e-8);
    }
}

TEST_CASE("solve_quadratic beats all vertices and the uniform point") {
    std::mt19937_64 g(43);
    SolverConfig cfg;
    cfg.lambda_q = 0.7;
    for (int rep = 0; rep < 10; ++rep) {
        const auto d = random_vector(g, 6, 0.0, 3.0);
        const auto r = solve_quadratic(d, cfg);
        const double got = oracle::quad_objective(r.w, d, cfg.lambda_q);
        for (int i = 0; i < 6; ++i) {
            std::vector<double> e(6, 0.0);
            e[i] = 1.0;
            CHECK(got <= oracle::quad_objective(e, d, cfg.lambda_q) + 1e-12);
        }
        CHECK(got <= oracle::quad_objective(std::vector<double>(6, 1.0 / 6.0), d, cfg.lambda_q) +
                         1e-12);
    }
}

TEST_CASE("solve_l1 symmetric and vertex cases") {
    SolverConfig cfg;
    const auto uni = solve_l1({2.0, 2.0, 2.0}, cfg);
    check_simplex_feasible(uni.w);
    for (double v : uni.w) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    cfg.lambda = 1.0;
    const auto vert = solve_l1({0.0, 10.0, 10.0}, cfg);
    check_simplex_feasible(vert.w);
    CHECK(vert.w[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("solve_l1 matches grid-search oracle within 1e-3") {
    std::mt19937_64 g(44);
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 2 + static_cast<int>(g() % 5);  // 2..6
        const auto d = random_vector(g, k, 0.0, 1.0);
        for (double lambda : {-1.0, 0.1}) {  // auto and fixed
            SolverConfig cfg;
            cfg.lambda = lambda;
            const auto r = solve_l1(d, cfg);
            check_simplex_feasible(r.w);
            const double got = oracle::l1_objective(r.w, d, r.lambda_used);
            const double best = oracle::l1_grid_best(d, r.lambda_used, 25);
            CHECK(got <= best + 1e-3);
        }
    }
}

TEST_CASE("solve_l1 agrees with vanishing-ridge quadratic argmin") {
    std::mt19937_64 g(45);
    for (int rep = 0; rep < 10; ++rep) {
        const auto d = random_vector(g, 5, 0.0, 1.0);
        SolverConfig l1cfg;
        const auto a = solve_l1(d, l1cfg);
        SolverConfig qcfg;
        qcfg.lambda_q = 1e-7;
        const auto b = solve_quadratic(d, qcfg);
        // on the simplex the L1 term is constant, so both solve the same LP
        const double oa = oracle::l1_objective(a.w, d, 0.0);
        const double ob = oracle::l1_objective(b.w, d, 0.0);
        CHECK(std::abs(oa - ob) <= 1e-3);
    }
}

TEST_CASE("solve_l1 residual histories trend downward") {
    std::mt19937_64 g(46);
    const auto d = random_vector(g, 6, 0.0, 1.0);
    SolverConfig cfg;
    cfg.tol_primal = cfg.tol_dual = 1e-14;  // force a long run
    cfg.max_iter = 400;
    const auto r = solve_l1(d, cfg);
    REQUIRE(r.primal_history.size() == static_cast<std::size_t>(r.iterations));

    // statistical check: mean combined residual over consecutive windows of
    // 50 iterations never increases by more than 5%
    std::vector<double> window_means;
    for (std::size_t start = 0; start + 50 <= r.primal_history.size(); start += 50) {
        double s = 0.0;
        for (std::size_t i = start; i < start + 50; ++i)
            s += std::hypot(r.primal_history[i], r.dual_history[i]);
        window_means.push_back(s / 50.0);
    }
    for (std::size_t i = 1; i < window_means.size(); ++i)
        CHECK(window_means[i] <= window_means[i - 1] * 1.05 + 1e-12);
}

TEST_CASE("solve_l1 reports non-convergence but stays feasible") {
    SolverConfig cfg;
    cfg.max_iter = 1;
    const auto r = solve_l1({0.9, 0.1, 0.5}, cfg);
    CHECK_FALSE(r.converged);
    check_simplex_feasible(r.w);
    CHECK(r.iterations == 1);
}

TEST_CASE("solver input validation") {
    SolverConfig cfg;
    CHECK_THROWS_AS(solve_l1({}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(solve_quadratic({}, cfg), std::invalid_argument);
    cfg.lambda_q = 0.0;
    CHECK_THROWS_AS(solve_quadratic({1.0}, cfg), std::invalid_argument);
    SolverConfig bad;
    bad.penalty = 0.0;
    CHECK_THROWS_AS(solve_l1({1.0}, bad), std::invalid_argument);
}

TEST_CASE("auto lambda is half the largest distance") {
    SolverConfig cfg;  // lambda < 0 -> auto
    const auto r = solve_l1({0.2, 0.8, 0.4}, cfg);
    CHECK(r.lambda_used == doctest::Approx(0.4));
    cfg.lambda = 0.05;
    const auto fixed = solve_l1({0.2, 0.8, 0.4}, cfg);
    CHECK(fixed.lambda_used == doctest::Approx(0.05));
}

}  // TEST_SUITE
