#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "segfuse/constraints.hpp"
#include "segfuse/contingency.hpp"
#include "segfuse/segmentation.hpp"
#include "segfuse/solver.hpp"

namespace segfuse {

enum class FusionMode { USF, SSSF };

struct FusionConfig {
    FusionMode mode = FusionMode::USF;
    double beta = 0.9;        // decay of the accumulated move matrix, in [0,1]
    int T = 1000;             // outer iteration budget
    int C_hat = 0;            // consensus label budget; 0 -> max member label count
    std::uint64_t seed = 0;
    SolverConfig solver;      // weight subproblem settings (SSSF)
    // When set, SSSF skips weight learning and uses these fixed weights
    // (must be simplex-feasible, size K).
    std::optional<std::vector<double>> fixed_weights;
};

struct IterationLogEntry {
    int t = 0;            // outer iteration index
    int member = 0;       // selected member
    int pixel = -1;       // argmin move (-1 when no candidate existed)
    int to_label = -1;
    double h_value = 0.0;     // move-matrix value at the argmin, minus baseline
    double exact_delta = 0.0; // recomputed objective change of that move
    bool accepted = false;
    double objective = 0.0;   // weighted median objective after this iteration
};

struct FusionResult {
    Segmentation consensus;
    std::vector<double> weights;          // final member weights (uniform for USF)
    std::int64_t objective = 0;           // sum_i sdd(member_i, consensus)
    int iterations = 0;                   // outer iterations actually run
    int accepted_moves = 0;
    bool solver_warning = false;          // some solve_l1 call failed to converge
    int repair_relabels = 0;              // pixels changed by the constraint repair pass
    std::vector<IterationLogEntry> log;
};

// The ensemble member minimizing the summed symmetric distance to all
// members; ties broken by lowest index.
Segmentation bok_init(const Ensemble& ens);

// Objective change sdd(ref, cur') - sdd(ref, cur) when pixel n of cur is
// relabeled to c, in O(1) from the maintained contingency table
// t = contingency(ref, cur). With a = cur(n), b = ref(n) and marginals taken
// excluding pixel n: delta = col_c - col_a - 2*joint(b,c) + 2*joint(b,a).
std::int64_t move_delta(const Segmentation& ref, const Segmentation& cur,
                        const ContingencyTable& t, int n, int c);

// Unsupervised fusion: best-one-element moves over a decayed accumulator of
// per-member move deltas, initialized at the best-of-K member.
FusionResult fuse_usf(const Ensemble& ens, const FusionConfig& cfg);

// Semi-supervised fusion: per-iteration member weights from the L1 solver
// over Bregman connectivity distances, constraint-violating moves barred,
// and a deterministic repair pass guaranteeing every must-link and
// cannot-link pair is satisfied. cons may be any consistent constraint set;
// it is transitively closed here (throws InconsistentConstraints when
// contradictory).
FusionResult fuse_sssf(const Ensemble& ens, const ConstraintSet& cons, const FusionConfig& cfg);

}  // namespace segfuse
