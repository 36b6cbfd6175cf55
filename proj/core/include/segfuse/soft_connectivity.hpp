#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "segfuse/constraints.hpp"
#include "segfuse/segmentation.hpp"

namespace segfuse {

// Weighted-average connectivity of an ensemble with constrained entries
// clamped: p(m,l) = sum_i w_i * [s_i(m) == s_i(l)], except p = 1 on must-link
// pairs and p = 0 on cannot-link pairs, and p(m,m) = 1.
//
// The N x N matrix is never materialized. Clamped pairs are kept both as raw
// lists (exact generic queries) and grouped by their member-agreement bit
// pattern (bit i set iff member i co-segments the pair), which is what makes
// repeated distance evaluations cheap: there are at most 2^K patterns.
struct SoftConnectivity {
    const Ensemble* ensemble = nullptr;
    std::vector<double> weights;

    std::vector<std::pair<int, int>> ml_pairs;  // clamped to 1
    std::vector<std::pair<int, int>> cl_pairs;  // clamped to 0

    // pattern -> number of clamped pairs with that member-agreement pattern
    std::vector<std::pair<std::uint64_t, std::int64_t>> ml_patterns;
    std::vector<std::pair<std::uint64_t, std::int64_t>> cl_patterns;

    double entry(int m, int l) const;
};

// Builds the soft connectivity for simplex-feasible weights w over ens, with
// cons already normalized/closed. Requires K <= 64 (bit patterns).
SoftConnectivity consensus_connectivity(const Ensemble& ens, const std::vector<double>& w,
                                        const ConstraintSet& cons);

}  // namespace segfuse
