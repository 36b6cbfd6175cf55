#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace segfuse {

// Pairwise side information: must-link pairs share a segment, cannot-link
// pairs never do. Pairs are stored normalized (first < second), sorted,
// deduplicated; pixel indices are row-major linear indices.
struct ConstraintSet {
    std::vector<std::pair<int, int>> must_link;
    std::vector<std::pair<int, int>> cannot_link;

    bool empty() const { return must_link.empty() && cannot_link.empty(); }
};

struct InconsistentConstraints : std::runtime_error {
    int m, l;
    InconsistentConstraints(int m_, int l_)
        : std::runtime_error("inconsistent constraints: pair (" + std::to_string(m_) + ", " +
                             std::to_string(l_) + ") is both must-link (by closure) and cannot-link"),
          m(m_), l(l_) {}
};

// Normalizes pair order, sorts, deduplicates, and rejects self-pairs.
ConstraintSet normalize_constraints(ConstraintSet raw);

// Replaces must_link with its transitive closure (materialized as explicit
// pairs within each connected component) and verifies no closed must-link
// pair is also cannot-link. Throws InconsistentConstraints on collision.
// The closure is materialized, so pathological inputs (one giant component)
// cost O(#pixels-in-component squared) pairs.
ConstraintSet close_constraints(const ConstraintSet& raw);

}  // namespace segfuse
