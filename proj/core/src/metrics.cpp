#include "segfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace segfuse {

namespace {

inline std::int64_t choose2(std::int64_t n) { return n * (n - 1) / 2; }

void check_pair(const Segmentation& s, int m, int l) {
    if (m < 0 || l < 0 || m >= s.n() || l >= s.n())
        throw std::out_of_range("pixel index out of range");
}

}  // namespace

PairCounts pair_counts(const ContingencyTable& t) {
    PairCounts pc;
    for (std::int64_t v : t.counts) pc.n11 += choose2(v);
    std::int64_t rows2 = 0, cols2 = 0;
    for (std::int64_t v : t.row_sums) rows2 += choose2(v);
    for (std::int64_t v : t.col_sums) cols2 += choose2(v);
    pc.n10 = rows2 - pc.n11;
    pc.n01 = cols2 - pc.n11;
    pc.n00 = choose2(t.total) - pc.n11 - pc.n10 - pc.n01;
    return pc;
}

std::int64_t sdd(const Segmentation& a, const Segmentation& b) {
    const PairCounts pc = pair_counts(contingency(a, b));
    return pc.n10 + pc.n01;
}

int connectivity_entry(const Segmentation& s, int m, int l) {
    check_pair(s, m, l);
    return s.labels[m] == s.labels[l] ? 1 : 0;
}

int pairwise_d(const Segmentation& a, const Segmentation& b, int m, int l) {
    if (a.n() != b.n())
        throw std::invalid_argument("pairwise_d: segmentations differ in pixel count");
    const int d = connectivity_entry(a, m, l) - connectivity_entry(b, m, l);
    return d * d;
}

double rand_index(const Segmentation& a, const Segmentation& b) {
    if (a.n() < 2) throw std::invalid_argument("rand_index: needs at least 2 pixels");
    const PairCounts pc = pair_counts(contingency(a, b));
    return static_cast<double>(pc.n11 + pc.n00) / static_cast<double>(choose2(a.n()));
}

double adjusted_rand_index(const Segmentation& a, const Segmentation& b) {
    if (a.n() < 2) throw std::invalid_argument("adjusted_rand_index: needs at least 2 pixels");
    const ContingencyTable t = contingency(a, b);

    // ARI = (index - expected) / (max - expected) with
    //   index    = sum_ij C(n_ij, 2)
    //   expected = sum_a * sum_b / total
    //   max      = (sum_a + sum_b) / 2
    // over C(.,2) sums of cells/rows/cols; cleared of the /total denominator
    // it becomes an exact integer ratio (128-bit intermediates).
    __int128 sum_ij = 0, sum_a = 0, sum_b = 0;
    for (std::int64_t v : t.counts) sum_ij += choose2(v);
    for (std::int64_t v : t.row_sums) sum_a += choose2(v);
    for (std::int64_t v : t.col_sums) sum_b += choose2(v);
    const __int128 total = choose2(t.total);

    const __int128 num = 2 * (sum_ij * total - sum_a * sum_b);
    const __int128 den = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if (den == 0) return 1.0;  // both sides degenerate (single segment each)
    return static_cast<double>(num) / static_cast<double>(den);
}

double adjusted_mutual_information(const Segmentation& a, const Segmentation& b) {
    if (a.n() < 2) throw std::invalid_argument("adjusted_mutual_information: needs >= 2 pixels");
    const ContingencyTable t = contingency(a, b);
    const double n = static_cast<double>(t.total);
    const std::int64_t in = t.total;

    // Mutual information, arranged so that for identical partitions each term
    // collapses to (n_ii/N) * (log N - log b_i) and MI sums bit-identically
    // to the entropy, making the final ratio exactly 1.
    double mi = 0.0;
    for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c < t.cols; ++c) {
            const std::int64_t v = t.at(r, c);
            if (v == 0) continue;
            const double lv = std::log(static_cast<double>(v));
            const double la = std::log(static_cast<double>(t.row_sums[r]));
            const double lb = std::log(static_cast<double>(t.col_sums[c]));
            mi += (static_cast<double>(v) / n) * ((lv - la) + (std::log(n) - lb));
        }

    double ha = 0.0, hb = 0.0;
    for (std::int64_t v : t.row_sums)
        if (v > 0) ha += (static_cast<double>(v) / n) * (std::log(n) - std::log(static_cast<double>(v)));
    for (std::int64_t v : t.col_sums)
        if (v > 0) hb += (static_cast<double>(v) / n) * (std::log(n) - std::log(static_cast<double>(v)));
    const double h_max = std::max(ha, hb);

    // Expected MI under the hypergeometric model: cell (r,c) takes value nij
    // with probability C(ai,nij) C(N-ai, bj-nij) / C(N, bj); log-factorial
    // tables keep the terms stable.
    std::vector<double> lfact(static_cast<std::size_t>(in) + 1, 0.0);
    for (std::int64_t i = 1; i <= in; ++i)
        lfact[static_cast<std::size_t>(i)] = lfact[static_cast<std::size_t>(i - 1)] + std::log(static_cast<double>(i));
    auto lf = [&](std::int64_t x) { return lfact[static_cast<std::size_t>(x)]; };

    double emi = 0.0;
    for (std::int64_t ai : t.row_sums) {
        if (ai == 0) continue;
        for (std::int64_t bj : t.col_sums) {
            if (bj == 0) continue;
            const std::int64_t lo = std::max<std::int64_t>(1, ai + bj - in);
            const std::int64_t hi = std::min(ai, bj);
            for (std::int64_t nij = lo; nij <= hi; ++nij) {
                const double term =
                    (static_cast<double>(nij) / n) *
                    (std::log(n) + std::log(static_cast<double>(nij)) -
                     std::log(static_cast<double>(ai)) - std::log(static_cast<double>(bj)));
                const double lprob = lf(ai) + lf(bj) + lf(in - ai) + lf(in - bj) - lf(in) -
                                     lf(nij) - lf(ai - nij) - lf(bj - nij) - lf(in - ai - bj + nij);
                emi += term * std::exp(lprob);
            }
        }
    }

    const double den = h_max - emi;
    const double num = mi - emi;
    if (std::abs(den) < 1e-12) return 1.0;  // degenerate: no information to adjust
    return num / den;
}

double SoftConnectivity::entry(int m, int l) const {
    if (m == l) return 1.0;
    int lo = m < l ? m : l, hi = m < l ? l : m;
    const std::pair<int, int> key{lo, hi};
    if (std::binary_search(ml_pairs.begin(), ml_pairs.end(), key)) return 1.0;
    if (std::binary_search(cl_pairs.begin(), cl_pairs.end(), key)) return 0.0;
    double p = 0.0;
    for (std::size_t i = 0; i < ensemble->members.size(); ++i)
        if (ensemble->members[i].labels[m] == ensemble->members[i].labels[l]) p += weights[i];
    return p;
}

SoftConnectivity consensus_connectivity(const Ensemble& ens, const std::vector<double>& w,
                                        const ConstraintSet& cons) {
    if (w.size() != ens.members.size())
        throw std::invalid_argument("consensus_connectivity: weight count != member count");
    if (ens.members.size() > 64)
        throw std::invalid_argument("consensus_connectivity: more than 64 members unsupported");

    SoftConnectivity p;
    p.ensemble = &ens;
    p.weights = w;
    p.ml_pairs = cons.must_link;
    p.cl_pairs = cons.cannot_link;
    std::sort(p.ml_pairs.begin(), p.ml_pairs.end());
    std::sort(p.cl_pairs.begin(), p.cl_pairs.end());

    const int K = ens.k();
    auto pattern_of = [&](int m, int l) {
        std::uint64_t bits = 0;
        for (int i = 0; i < K; ++i)
            if (ens.members[i].labels[m] == ens.members[i].labels[l]) bits |= 1ULL << i;
        return bits;
    };
    auto group = [&](const std::vector<std::pair<int, int>>& pairs) {
        std::unordered_map<std::uint64_t, std::int64_t> counts;
        for (const auto& [m, l] : pairs) ++counts[pattern_of(m, l)];
        std::vector<std::pair<std::uint64_t, std::int64_t>> out(counts.begin(), counts.end());
        std::sort(out.begin(), out.end());
        return out;
    };
    p.ml_patterns = group(p.ml_pairs);
    p.cl_patterns = group(p.cl_pairs);
    return p;
}

double bregman_connectivity_distance(const SoftConnectivity& p, const Segmentation& s) {
    const Ensemble& ens = *p.ensemble;
    if (ens.n() != s.n())
        throw std::invalid_argument("bregman_connectivity_distance: pixel count mismatch");
    const int K = ens.k();
    const std::vector<double>& w = p.weights;

    // Unclamped part over all unordered pairs: with q = sum_i w_i b_i and b_s
    // both built from 0/1 connectivities,
    //   sum (q - b_s)^2 = sum_ij w_i w_j n11(i,j) - 2 sum_i w_i n11(i,s) + n11(s,s)
    // where n11(x,y) counts pairs co-segmented in both x and y.
    auto n11 = [](const Segmentation& x, const Segmentation& y) {
        return pair_counts(contingency(x, y)).n11;
    };
    double total = 0.0;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            total += w[i] * w[j] * static_cast<double>(n11(ens.members[i], ens.members[j]));
    for (int i = 0; i < K; ++i)
        total -= 2.0 * w[i] * static_cast<double>(n11(ens.members[i], s));
    total += static_cast<double>(n11(s, s));

    // Clamp corrections: replace each clamped pair's (q - b_s)^2 contribution
    // by (clamp - b_s)^2.
    auto correct = [&](const std::vector<std::pair<int, int>>& pairs, double clamp) {
        double acc = 0.0;
        for (const auto& [m, l] : pairs) {
            double q = 0.0;
            for (int i = 0; i < K; ++i)
                if (ens.members[i].labels[m] == ens.members[i].labels[l]) q += w[i];
            const double bs = s.labels[m] == s.labels[l] ? 1.0 : 0.0;
            acc += (clamp - bs) * (clamp - bs) - (q - bs) * (q - bs);
        }
        return acc;
    };
    total += correct(p.ml_pairs, 1.0);
    total += correct(p.cl_pairs, 0.0);
    return total < 0.0 ? 0.0 : total;
}

}  // namespace segfuse
