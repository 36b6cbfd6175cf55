#include <random>

#include "doctest.h"
#include "segfuse/fusion.hpp"
#include "segfuse/metrics.hpp"
#include "segfuse/rng.hpp"
#include "support/oracles.hpp"

using namespace segfuse;

namespace {

std::int64_t ensemble_objective(const Ensemble& ens, const Segmentation& s) {
    std::int64_t total = 0;
    for (const auto& m : ens.members) total += oracle::sdd(m, s);
    return total;
}

bool satisfies(const Segmentation& s, const ConstraintSet& cons) {
    for (const auto& [m, l] : cons.must_link)
        if (s.labels[m] != s.labels[l]) return false;
    for (const auto& [m, l] : cons.cannot_link)
        if (s.labels[m] == s.labels[l]) return false;
    return true;
}

// Random consistent constraints: sample pairs, classify them by a hidden
// random partition so the set can always be satisfied.
ConstraintSet random_consistent_constraints(std::mt19937_64& g, int n, int classes, int pairs) {
    std::vector<int> hidden(n);
    std::uniform_int_distribution<int> cls(0, classes - 1);
    for (int& v : hidden) v = cls(g);
    ConstraintSet cons;
    std::uniform_int_distribution<int> pix(0, n - 1);
    for (int i = 0; i < pairs; ++i) {
        int m = pix(g), l = pix(g);
        if (m == l) continue;
        if (hidden[m] == hidden[l]) cons.must_link.emplace_back(m, l);
        else cons.cannot_link.emplace_back(m, l);
    }
    return close_constraints(cons);
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("bok_init basics and exhaustive oracle") {
    std::mt19937_64 g(61);
    Ensemble solo = oracle::random_ensemble(g, 1, 4, 3, 3);
    CHECK(bok_init(solo).labels == solo.members[0].labels);

    // two identical members out of three: one of the pair wins
    Ensemble trio;
    trio.members.push_back(make_segmentation({0, 0, 1, 1}, 4, 1));
    trio.members.push_back(make_segmentation({0, 1, 0, 1}, 4, 1));
    trio.members.push_back(make_segmentation({0, 0, 1, 1}, 4, 1));
    CHECK(bok_init(trio).labels == trio.members[0].labels);

    for (int rep = 0; rep < 20; ++rep) {
        Ensemble e = oracle::random_ensemble(g, 5, 4, 3, 3);
        const Segmentation pick = bok_init(e);
        std::int64_t best = -1;
        int best_i = -1;
        for (int i = 0; i < e.k(); ++i) {
            std::int64_t sum = 0;
            for (int j = 0; j < e.k(); ++j) sum += oracle::sdd(e.members[i], e.members[j]);
            if (best_i < 0 || sum < best) {
                best = sum;
                best_i = i;
            }
        }
        CHECK(pick.labels == e.members[best_i].labels);
    }
}

TEST_CASE("move_delta no-op and worked example") {
    const Segmentation ref = make_segmentation({0, 0, 1, 1}, 4, 1);
    Segmentation cur = make_segmentation({0, 1, 1, 1}, 4, 1);
    const ContingencyTable t = contingency(ref, cur);
    CHECK(move_delta(ref, cur, t, 2, cur.labels[2]) == 0);
    CHECK(move_delta(ref, cur, t, 1, 0) == -3);  // sdd drops 3 -> 0
    CHECK_THROWS_AS(move_delta(ref, cur, t, 9, 0), std::out_of_range);
    CHECK_THROWS_AS(move_delta(ref, cur, t, 0, 7), std::out_of_range);
}

TEST_CASE("move_delta equals full recomputation on random tuples") {
    std::mt19937_64 g(62);
    for (int rep = 0; rep < 200; ++rep) {
        const Segmentation ref = oracle::random_segmentation(g, 5, 4, 3);
        Segmentation cur = oracle::random_segmentation(g, 5, 4, 3);
        const ContingencyTable t = contingency(ref, cur);
        const int n = static_cast<int>(g() % 20);
        const int c = static_cast<int>(g() % 3);
        const std::int64_t before = oracle::sdd(ref, cur);
        Segmentation moved = cur;
        moved.labels[n] = c;
        CHECK(move_delta(ref, cur, t, n, c) == oracle::sdd(ref, moved) - before);
    }
}

TEST_CASE("fuse_usf fixed point on identical members") {
    Ensemble e;
    const Segmentation s = make_segmentation({0, 1, 1, 0, 2, 2}, 6, 1);
    for (int i = 0; i < 4; ++i) e.members.push_back(s);
    FusionConfig cfg;
    cfg.seed = 3;
    cfg.T = 50;
    const FusionResult r = fuse_usf(e, cfg);
    CHECK(r.consensus.labels == s.labels);
    CHECK(r.accepted_moves == 0);
    CHECK(r.objective == 0);
    CHECK(r.iterations == cfg.T - 1);  // the budget always runs out (t = 2..T)
}

TEST_CASE("fuse_usf improves on the BOK objective") {
    std::mt19937_64 g(63);
    for (int rep = 0; rep < 10; ++rep) {
        Ensemble e = oracle::random_ensemble(g, 3, 3, 2, 2);
        FusionConfig cfg;
        cfg.seed = rep;
        cfg.T = 200;
        const FusionResult r = fuse_usf(e, cfg);
        const std::int64_t bok_obj = ensemble_objective(e, bok_init(e));
        CHECK(r.objective <= bok_obj);
        CHECK(r.objective == ensemble_objective(e, r.consensus));
    }
}

TEST_CASE("fuse_usf accepted moves strictly improve (monotone at beta=1)") {
    std::mt19937_64 g(64);
    Ensemble e = oracle::random_ensemble(g, 5, 6, 4, 3);
    FusionConfig cfg;
    cfg.beta = 1.0;
    cfg.seed = 11;
    cfg.T = 500;
    const FusionResult r = fuse_usf(e, cfg);
    std::int64_t running = ensemble_objective(e, bok_init(e));
    for (const auto& entry : r.log) {
        // the per-entry objective column tracks the running total exactly
        // (USF weights are all ones, so it is the plain median objective)
        if (entry.accepted) {
            CHECK(entry.exact_delta < -1e-9);  // strict improvement
            CHECK(entry.h_value < -1e-9);      // move matrix minimum strictly negative
            running += static_cast<std::int64_t>(entry.exact_delta);
        }
        CHECK(entry.objective == static_cast<double>(running));
    }
    CHECK(running == r.objective);  // deltas account exactly for the final objective
}

TEST_CASE("fuse_usf beta=0 degenerates to per-member greedy") {
    // with beta = 0 the move matrix holds only the selected member's deltas,
    // so the chosen move must be that member's own best strictly-improving
    // move (ties: smallest pixel, then smallest label), additionally gated by
    // the exact total-objective check
    std::mt19937_64 g(65);
    Ensemble e = oracle::random_ensemble(g, 3, 4, 3, 3);
    FusionConfig cfg;
    cfg.beta = 0.0;
    cfg.seed = 21;
    cfg.T = 300;
    const FusionResult r = fuse_usf(e, cfg);

    // replay: mirror the engine's member order (one shuffle per pass)
    Rng rng(cfg.seed);
    std::vector<int> perm = {0, 1, 2};
    Segmentation cur = bok_init(e);
    const int C = 3;
    for (std::size_t step = 0; step < r.log.size(); ++step) {
        if (step % perm.size() == 0) rng.shuffle(perm);
        const int member = perm[step % perm.size()];
        CHECK(r.log[step].member == member);

        const ContingencyTable t = contingency(e.members[member], cur);
        std::int64_t best = 0;
        int bp = -1, bc = -1;
        for (int p = 0; p < cur.n(); ++p)
            for (int c = 0; c < C; ++c) {
                if (c == cur.labels[p]) continue;
                const std::int64_t d = move_delta(e.members[member], cur, t, p, c);
                if (bp < 0 ? d < 0 : d < best) {
                    best = d;
                    bp = p;
                    bc = c;
                }
            }
        bool accept = bp >= 0;
        if (accept) {
            std::int64_t exact = 0;
            for (const auto& m : e.members) {
                const ContingencyTable tm = contingency(m, cur);
                exact += move_delta(m, cur, tm, bp, bc);
            }
            accept = exact < 0;
        }
        if (accept) {
            CHECK(r.log[step].accepted);
            CHECK(r.log[step].pixel == bp);
            CHECK(r.log[step].to_label == bc);
            cur.labels[bp] = bc;
        } else {
            CHECK_FALSE(r.log[step].accepted);
        }
    }
    CHECK(cur.labels == r.consensus.labels);
}

TEST_CASE("fuse_usf near-optimal on exhaustively solvable instances") {
    std::mt19937_64 g(66);
    int good = 0;
    const int trials = 10;
    for (int rep = 0; rep < trials; ++rep) {
        Ensemble e = oracle::random_ensemble(g, 5, 3, 3, 3);
        FusionConfig cfg;
        cfg.seed = rep;
        cfg.T = 500;
        const FusionResult r = fuse_usf(e, cfg);
        const std::int64_t opt = oracle::exhaustive_median_optimum(e, 3);
        REQUIRE(r.objective >= opt);
        if (static_cast<double>(r.objective) <= 1.05 * static_cast<double>(opt) + 1e-9) ++good;
    }
    CHECK(good >= 8);
}

TEST_CASE("fuse_usf deterministic per seed") {
    std::mt19937_64 g(67);
    Ensemble e = oracle::random_ensemble(g, 4, 6, 5, 3);
    FusionConfig cfg;
    cfg.seed = 99;
    const FusionResult a = fuse_usf(e, cfg);
    const FusionResult b = fuse_usf(e, cfg);
    CHECK(a.consensus.labels == b.consensus.labels);
    CHECK(a.objective == b.objective);
    CHECK(a.accepted_moves == b.accepted_moves);
}

TEST_CASE("fuse_sssf with fixed uniform weights reproduces fuse_usf") {
    std::mt19937_64 g(68);
    for (int rep = 0; rep < 5; ++rep) {
        Ensemble e = oracle::random_ensemble(g, 4, 5, 4, 3);
        FusionConfig cfg;
        cfg.seed = 7 + rep;
        cfg.T = 400;
        const FusionResult usf = fuse_usf(e, cfg);

        FusionConfig scfg = cfg;
        scfg.fixed_weights = std::vector<double>(4, 0.25);
        const FusionResult sssf = fuse_sssf(e, ConstraintSet{}, scfg);
        CHECK(sssf.consensus.labels == usf.consensus.labels);
        CHECK(sssf.accepted_moves == usf.accepted_moves);
    }
}

TEST_CASE("fuse_sssf clamp guarantee on ground-truth constraints") {
    std::mt19937_64 g(69);
    // member labelings loosely derived from a planted truth
    const int n = 30;
    Segmentation gt = oracle::random_segmentation(g, n, 1, 3);
    Ensemble e;
    for (int i = 0; i < 4; ++i) {
        Segmentation m = gt;
        for (int p = 0; p < n; ++p)
            if (g() % 5 == 0) m.labels[p] = static_cast<int>(g() % 3);
        e.members.push_back(m);
    }
    ConstraintSet cons;
    for (int rep = 0; rep < 40; ++rep) {
        const int m = static_cast<int>(g() % n), l = static_cast<int>(g() % n);
        if (m == l) continue;
        if (gt.labels[m] == gt.labels[l]) cons.must_link.emplace_back(m, l);
        else cons.cannot_link.emplace_back(m, l);
    }
    cons = close_constraints(cons);
    FusionConfig cfg;
    cfg.seed = 5;
    cfg.T = 300;
    const FusionResult r = fuse_sssf(e, cons, cfg);
    CHECK(satisfies(r.consensus, cons));
    CHECK(r.weights.size() == 4);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fuse_sssf satisfies random consistent constraint sets") {
    std::mt19937_64 g(70);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 36;
        Ensemble e = oracle::random_ensemble(g, 4, 6, 6, 3);
        const ConstraintSet cons = random_consistent_constraints(g, n, 3, 25);
        FusionConfig cfg;
        cfg.seed = rep;
        cfg.T = 250;
        const FusionResult r = fuse_sssf(e, cons, cfg);
        CHECK(satisfies(r.consensus, cons));
        CHECK_NOTHROW(validate(r.consensus));
    }
}

TEST_CASE("fuse_sssf propagates inconsistent constraints") {
    std::mt19937_64 g(71);
    Ensemble e = oracle::random_ensemble(g, 3, 4, 3, 2);
    ConstraintSet bad;
    bad.must_link = {{0, 1}, {1, 2}};
    bad.cannot_link = {{0, 2}};
    FusionConfig cfg;
    CHECK_THROWS_AS(fuse_sssf(e, bad, cfg), InconsistentConstraints);
}

TEST_CASE("fuse_sssf deterministic per seed, learned weights included") {
    std::mt19937_64 g(72);
    Ensemble e = oracle::random_ensemble(g, 5, 6, 5, 3);
    const ConstraintSet cons = random_consistent_constraints(g, 30, 3, 12);
    FusionConfig cfg;
    cfg.seed = 31;
    cfg.T = 200;
    const FusionResult a = fuse_sssf(e, cons, cfg);
    const FusionResult b = fuse_sssf(e, cons, cfg);
    CHECK(a.consensus.labels == b.consensus.labels);
    CHECK(a.weights == b.weights);
    CHECK(a.repair_relabels == b.repair_relabels);
}

TEST_CASE("fusion config validation") {
    std::mt19937_64 g(73);
    Ensemble e = oracle::random_ensemble(g, 2, 4, 3, 2);
    FusionConfig cfg;
    cfg.beta = 1.5;
    CHECK_THROWS_AS(fuse_usf(e, cfg), std::invalid_argument);
    cfg.beta = 0.9;
    cfg.T = 0;
    CHECK_THROWS_AS(fuse_usf(e, cfg), std::invalid_argument);
    cfg.T = 10;
    cfg.fixed_weights = std::vector<double>{0.5, 0.2};  // does not sum to 1
    CHECK_THROWS_AS(fuse_sssf(e, ConstraintSet{}, cfg), std::invalid_argument);
}

TEST_CASE("consensus label budget is respected and may exceed members under repair") {
    std::mt19937_64 g(74);
    Ensemble e = oracle::random_ensemble(g, 3, 5, 4, 4);
    FusionConfig cfg;
    cfg.C_hat = 2;  // tighter than the members' four labels
    cfg.seed = 1;
    const FusionResult r = fuse_usf(e, cfg);
    for (int v : r.consensus.labels) CHECK(v < 2);
}

}  // TEST_SUITE
