#pragma once

#include <cstdint>

#include "segfuse/contingency.hpp"
#include "segfuse/segmentation.hpp"
#include "segfuse/soft_connectivity.hpp"

namespace segfuse {

// Pixel-pair agreement counts between two segmentations, over unordered pairs
// with the diagonal excluded. n11 + n00 + n10 + n01 == N*(N-1)/2.
struct PairCounts {
    std::int64_t n11 = 0;  // co-segmented in both
    std::int64_t n00 = 0;  // co-segmented in neither
    std::int64_t n10 = 0;  // co-segmented in the first only
    std::int64_t n01 = 0;  // co-segmented in the second only
};

PairCounts pair_counts(const ContingencyTable& t);

// Symmetric distance: number of unordered pixel pairs co-segmented in exactly
// one of the two segmentations (n10 + n01).
std::int64_t sdd(const Segmentation& a, const Segmentation& b);

// 1 iff pixels m and l share a segment in s; reflexive.
int connectivity_entry(const Segmentation& s, int m, int l);

// Squared difference of the two connectivity entries for pair (m,l);
// summing over all unordered pairs gives sdd(a,b).
int pairwise_d(const Segmentation& a, const Segmentation& b, int m, int l);

// Rand index: fraction of unordered pairs on which the segmentations agree.
double rand_index(const Segmentation& a, const Segmentation& b);

// Chance-adjusted Rand index under the permutation model (exact integer
// arithmetic, 128-bit intermediates). Degenerate zero denominator -> 1.
double adjusted_rand_index(const Segmentation& a, const Segmentation& b);

// Chance-adjusted mutual information, max-entropy normalization, expected MI
// under the hypergeometric model. Degenerate denominator -> 1.
double adjusted_mutual_information(const Segmentation& a, const Segmentation& b);

// Squared-Euclidean Bregman divergence between the soft connectivity p and
// the hard connectivity of s, summed over unordered pixel pairs. Exact:
// contingency-style aggregation plus per-pair clamp corrections; no N x N
// matrix is formed.
double bregman_connectivity_distance(const SoftConnectivity& p, const Segmentation& s);

}  // namespace segfuse
