#include "segfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "segfuse/metrics.hpp"
#include "segfuse/rng.hpp"
#include "segfuse/soft_connectivity.hpp"

namespace segfuse {

Segmentation bok_init(const Ensemble& ens) {
    validate(ens);
    const int K = ens.k();
    std::vector<std::int64_t> sums(K, 0);
    for (int i = 0; i < K; ++i)
        for (int j = i + 1; j < K; ++j) {
            const std::int64_t d = sdd(ens.members[i], ens.members[j]);
            sums[i] += d;
            sums[j] += d;
        }
    int best = 0;
    for (int i = 1; i < K; ++i)
        if (sums[i] < sums[best]) best = i;
    return ens.members[best];
}

std::int64_t move_delta(const Segmentation& ref, const Segmentation& cur,
                        const ContingencyTable& t, int n, int c) {
    if (n < 0 || n >= cur.n()) throw std::out_of_range("move_delta: pixel out of range");
    if (c < 0 || c >= t.cols) throw std::out_of_range("move_delta: label out of range");
    const int a = cur.labels[n];
    const int b = ref.labels[n];
    // marginals excluding pixel n itself
    const std::int64_t col_c = t.col_sums[c] - (c == a ? 1 : 0);
    const std::int64_t col_a = t.col_sums[a] - 1;
    const std::int64_t j_bc = t.at(b, c) - (c == a ? 1 : 0);
    const std::int64_t j_ba = t.at(b, a) - 1;
    return col_c - col_a - 2 * j_bc + 2 * j_ba;
}

namespace {

constexpr double kAcceptEps = 1e-9;

struct PixelGuard {
    std::vector<int> ml_partners;
    std::vector<int> cl_partners;
    std::vector<std::int64_t> ml_label_count;  // per consensus label
    std::vector<std::int64_t> cl_label_count;
};

// Union-find over pixel indices, smallest index becomes the root.
struct UnionFind {
    std::unordered_map<int, int> parent;

    int find(int x) {
        auto it = parent.find(x);
        if (it == parent.end()) return x;
        int root = x;
        while (parent.count(root) && parent.at(root) != root) root = parent.at(root);
        while (parent.at(x) != root) {
            const int next = parent.at(x);
            parent[x] = root;
            x = next;
        }
        return root;
    }

    void unite(int a, int b) {
        if (!parent.count(a)) parent[a] = a;
        if (!parent.count(b)) parent[b] = b;
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

class Engine {
public:
    Engine(const Ensemble& ens, const ConstraintSet& cons, FusionConfig cfg, bool semi)
        : ens_(ens), cons_(cons), cfg_(std::move(cfg)), semi_(semi), rng_(cfg_.seed) {
        validate(ens_);
        if (cfg_.beta < 0.0 || cfg_.beta > 1.0)
            throw std::invalid_argument("fusion: beta must be in [0, 1]");
        if (cfg_.T < 1) throw std::invalid_argument("fusion: T must be >= 1");
        K_ = ens_.k();
        N_ = ens_.n();
        C_ = cfg_.C_hat;
        if (C_ <= 0)
            for (const auto& m : ens_.members) C_ = std::max(C_, m.num_labels);
        if (semi_ && K_ > 64)
            throw std::invalid_argument("fusion: SSSF supports at most 64 members");

        fixed_weights_ = cfg_.fixed_weights.has_value();
        if (fixed_weights_) {
            omega_ = *cfg_.fixed_weights;
            if (static_cast<int>(omega_.size()) != K_)
                throw std::invalid_argument("fusion: fixed weight count != member count");
            double sum = 0.0;
            for (double w : omega_) {
                if (w < -1e-9) throw std::invalid_argument("fusion: negative fixed weight");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-6)
                throw std::invalid_argument("fusion: fixed weights must sum to 1");
        } else if (semi_) {
            omega_.assign(K_, 1.0 / static_cast<double>(K_));
        } else {
            omega_.assign(K_, 1.0);  // unweighted sum over members
        }
    }

    FusionResult run() {
        init_state();
        FusionResult result;
        result.weights = omega_;

        std::vector<int> perm(K_);
        for (int i = 0; i < K_; ++i) perm[i] = i;

        std::vector<std::int64_t> deltas(K_);
        int iterations = 0;
        for (int t = 2; t <= cfg_.T; ++t) {
            ++iterations;
            const int step = t - 2;
            if (step % K_ == 0) rng_.shuffle(perm);
            const int member = perm[step % K_];

            if (semi_ && !fixed_weights_) learn_weights(result);
            decay_and_add(member);

            IterationLogEntry entry;
            entry.t = t;
            entry.member = member;
            const auto [pix, lab] = argmin_move();
            entry.pixel = pix;
            entry.to_label = lab;
            bool accepted = false;
            if (pix >= 0) {
                const double h = H_[static_cast<std::size_t>(pix) * C_ + lab] - baseline_;
                entry.h_value = h;
                double exact = 0.0;
                for (int i = 0; i < K_; ++i) {
                    deltas[i] = member_delta(i, pix, lab);
                    exact += omega_[i] * static_cast<double>(deltas[i]);
                }
                entry.exact_delta = exact;
                // the move matrix only approximates the objective once rows go
                // stale, so a candidate must also pass an exact recomputation
                if (h < -kAcceptEps && exact < -kAcceptEps) {
                    apply_move(pix, lab);
                    for (int i = 0; i < K_; ++i) sdd_i_[i] += deltas[i];
                    accepted = true;
                }
            }
            entry.accepted = accepted;
            entry.objective = weighted_objective();
            result.log.push_back(entry);
            if (accepted) ++result.accepted_moves;
        }
        result.iterations = iterations;

        if (semi_) result.repair_relabels = repair();

        Segmentation out;
        out.labels = cur_;
        out.width = ens_.width();
        out.height = ens_.height();
        int mx = C_ - 1;
        for (int v : cur_) mx = std::max(mx, v);
        out.num_labels = mx + 1;
        result.consensus = std::move(out);
        result.weights = omega_;
        result.solver_warning = solver_warning_;
        for (int i = 0; i < K_; ++i) result.objective += sdd(ens_.members[i], result.consensus);
        return result;
    }

private:
    void init_state() {
        // start at the best-of-K member, squashed into the label budget
        const Segmentation bok = bok_init(ens_);
        cur_.resize(N_);
        for (int p = 0; p < N_; ++p) cur_[p] = bok.labels[p] % C_;

        colcnt_.assign(C_, 0);
        for (int p = 0; p < N_; ++p) ++colcnt_[cur_[p]];
        joint_.resize(K_);
        for (int i = 0; i < K_; ++i) {
            joint_[i].assign(static_cast<std::size_t>(ens_.members[i].num_labels) * C_, 0);
            for (int p = 0; p < N_; ++p)
                ++joint_[i][static_cast<std::size_t>(ens_.members[i].labels[p]) * C_ + cur_[p]];
        }

        H_.assign(static_cast<std::size_t>(N_) * C_, 0.0);
        baseline_ = 0.0;
        for (int p = 0; p < N_; ++p) refresh_row(p);

        Segmentation start;
        start.labels = cur_;
        start.width = ens_.width();
        start.height = ens_.height();
        start.num_labels = C_;
        sdd_i_.resize(K_);
        for (int i = 0; i < K_; ++i) sdd_i_[i] = sdd(ens_.members[i], start);

        if (semi_) init_constraint_state();
    }

    // delta of relabeling pixel p to c under member i, from the maintained
    // tables (which include pixel p)
    inline std::int64_t member_delta(int i, int p, int c) const {
        const int a = cur_[p];
        if (c == a) return 0;
        const int b = ens_.members[i].labels[p];
        const std::int64_t* jrow = &joint_[i][static_cast<std::size_t>(b) * C_];
        return colcnt_[c] - colcnt_[a] + 1 - 2 * jrow[c] + 2 * jrow[a] - 2;
    }

    double weighted_objective() const {
        double acc = 0.0;
        for (int i = 0; i < K_; ++i) acc += omega_[i] * static_cast<double>(sdd_i_[i]);
        return acc;
    }

    void refresh_row(int p) {
        double* row = &H_[static_cast<std::size_t>(p) * C_];
        const int a = cur_[p];
        for (int c = 0; c < C_; ++c) row[c] = baseline_;
        for (int i = 0; i < K_; ++i) {
            const double w = omega_[i];
            if (w == 0.0) continue;
            const int b = ens_.members[i].labels[p];
            const std::int64_t* jrow = &joint_[i][static_cast<std::size_t>(b) * C_];
            const std::int64_t base = -colcnt_[a] + 1 + 2 * jrow[a] - 2;
            for (int c = 0; c < C_; ++c)
                row[c] += w * static_cast<double>(colcnt_[c] - 2 * jrow[c] + base);
        }
        row[a] = baseline_;  // staying put is not a move
    }

    void decay_and_add(int member) {
        const double beta = cfg_.beta;
        const double w = omega_[member];
        const double lambda_term = semi_ ? lambda_const_ : 0.0;
        baseline_ = beta * baseline_ + lambda_term;
        const std::vector<int>& mlab = ens_.members[member].labels;
        for (int p = 0; p < N_; ++p) {
            double* row = &H_[static_cast<std::size_t>(p) * C_];
            const int a = cur_[p];
            const int b = mlab[p];
            const std::int64_t* jrow = &joint_[member][static_cast<std::size_t>(b) * C_];
            const std::int64_t base = -colcnt_[a] + 1 + 2 * jrow[a] - 2;
            for (int c = 0; c < C_; ++c)
                row[c] = beta * row[c] + lambda_term +
                         w * static_cast<double>(colcnt_[c] - 2 * jrow[c] + base);
            row[a] = baseline_;
        }
    }

    std::pair<int, int> argmin_move() const {
        double best = std::numeric_limits<double>::infinity();
        int bp = -1, bc = -1;
        for (int p = 0; p < N_; ++p) {
            const double* row = &H_[static_cast<std::size_t>(p) * C_];
            const int a = cur_[p];
            const PixelGuard* guard = nullptr;
            if (semi_ && guard_id_[p] >= 0) guard = &guards_[guard_id_[p]];
            for (int c = 0; c < C_; ++c) {
                if (c == a) continue;
                if (guard) {
                    // a constrained pixel may only take labels that keep every
                    // must-link partner matched and every cannot-link partner
                    // separated (violating moves cost +infinity)
                    if (guard->ml_label_count[c] !=
                        static_cast<std::int64_t>(guard->ml_partners.size()))
                        continue;
                    if (guard->cl_label_count[c] != 0) continue;
                }
                if (row[c] < best) {
                    best = row[c];
                    bp = p;
                    bc = c;
                }
            }
        }
        return {bp, bc};
    }

    void apply_move(int p, int c) {
        const int a = cur_[p];
        for (int i = 0; i < K_; ++i) {
            const int b = ens_.members[i].labels[p];
            std::int64_t* jrow = &joint_[i][static_cast<std::size_t>(b) * C_];
            --jrow[a];
            ++jrow[c];
        }
        --colcnt_[a];
        ++colcnt_[c];
        cur_[p] = c;
        if (semi_) {
            if (guard_id_[p] >= 0) {
                const PixelGuard& g = guards_[guard_id_[p]];
                for (int q : g.ml_partners) {
                    PixelGuard& gq = guards_[guard_id_[q]];
                    --gq.ml_label_count[a];
                    ++gq.ml_label_count[c];
                }
                for (int q : g.cl_partners) {
                    PixelGuard& gq = guards_[guard_id_[q]];
                    --gq.cl_label_count[a];
                    ++gq.cl_label_count[c];
                }
            }
        }
        refresh_row(p);
    }

    void init_constraint_state() {
        guard_id_.assign(N_, -1);
        auto ensure_guard = [&](int p) -> PixelGuard& {
            if (guard_id_[p] < 0) {
                guard_id_[p] = static_cast<int>(guards_.size());
                guards_.emplace_back();
                guards_.back().ml_label_count.assign(C_, 0);
                guards_.back().cl_label_count.assign(C_, 0);
            }
            return guards_[guard_id_[p]];
        };
        for (const auto& [m, l] : cons_.must_link) {
            if (m >= N_ || l >= N_) throw std::invalid_argument("fusion: constraint pixel out of range");
            ensure_guard(m).ml_partners.push_back(l);
            ensure_guard(l).ml_partners.push_back(m);
        }
        for (const auto& [m, l] : cons_.cannot_link) {
            if (m >= N_ || l >= N_) throw std::invalid_argument("fusion: constraint pixel out of range");
            ensure_guard(m).cl_partners.push_back(l);
            ensure_guard(l).cl_partners.push_back(m);
        }
        for (auto& g : guards_) {
            for (int q : g.ml_partners) ++g.ml_label_count[cur_[q]];
            for (int q : g.cl_partners) ++g.cl_label_count[cur_[q]];
        }

        // member pair-together counts and clamp patterns for the distance
        // vector; both are constant for the whole run
        n11_.assign(static_cast<std::size_t>(K_) * K_, 0.0);
        for (int i = 0; i < K_; ++i)
            for (int j = i; j < K_; ++j) {
                const double v = static_cast<double>(
                    pair_counts(contingency(ens_.members[i], ens_.members[j])).n11);
                n11_[static_cast<std::size_t>(i) * K_ + j] = v;
                n11_[static_cast<std::size_t>(j) * K_ + i] = v;
            }
        auto pattern_of = [&](int m, int l) {
            std::uint64_t bits = 0;
            for (int i = 0; i < K_; ++i)
                if (ens_.members[i].labels[m] == ens_.members[i].labels[l]) bits |= 1ULL << i;
            return bits;
        };
        std::unordered_map<std::uint64_t, std::int64_t> ml, cl;
        for (const auto& [m, l] : cons_.must_link) ++ml[pattern_of(m, l)];
        for (const auto& [m, l] : cons_.cannot_link) ++cl[pattern_of(m, l)];
        ml_patterns_.assign(ml.begin(), ml.end());
        cl_patterns_.assign(cl.begin(), cl.end());
        std::sort(ml_patterns_.begin(), ml_patterns_.end());
        std::sort(cl_patterns_.begin(), cl_patterns_.end());
    }

    // distance from the current weighted consensus connectivity (with clamps)
    // to each member, exactly, via the quadratic expansion plus per-pattern
    // clamp corrections
    std::vector<double> distance_vector() const {
        std::vector<double> d(K_, 0.0);
        double ww = 0.0;
        std::vector<double> wrow(K_, 0.0);
        for (int i = 0; i < K_; ++i)
            for (int j = 0; j < K_; ++j) {
                const double v = omega_[i] * n11_[static_cast<std::size_t>(i) * K_ + j];
                ww += v * omega_[j];
                wrow[j] += v;
            }
        for (int i = 0; i < K_; ++i)
            d[i] = ww - 2.0 * wrow[i] + n11_[static_cast<std::size_t>(i) * K_ + i];

        auto apply = [&](const std::vector<std::pair<std::uint64_t, std::int64_t>>& patterns,
                         double clamp) {
            for (const auto& [bits, cnt] : patterns) {
                double q = 0.0;
                for (int j = 0; j < K_; ++j)
                    if (bits & (1ULL << j)) q += omega_[j];
                for (int i = 0; i < K_; ++i) {
                    const double bi = (bits & (1ULL << i)) ? 1.0 : 0.0;
                    const double with_clamp = (clamp - bi) * (clamp - bi);
                    const double without = (q - bi) * (q - bi);
                    d[i] += static_cast<double>(cnt) * (with_clamp - without);
                }
            }
        };
        apply(ml_patterns_, 1.0);
        apply(cl_patterns_, 0.0);
        for (double& v : d) v = std::max(v, 0.0);
        return d;
    }

    void learn_weights(FusionResult& result) {
        const std::vector<double> d = distance_vector();
        SolverResult sol = solve_l1(d, cfg_.solver);
        if (!sol.converged) solver_warning_ = true;
        omega_ = sol.w;
        double l1 = 0.0;
        for (double w : omega_) l1 += std::abs(w);
        lambda_const_ = sol.lambda_used * l1;
        result.weights = omega_;
    }

    // Deterministic post-pass: merge every must-link component onto its
    // majority label, then walk cannot-link pairs in sorted order recoloring
    // the later component to the smallest label that avoids all of its
    // cannot-link partners (extending the label space only if the budget is
    // exhausted).
    int repair() {
        if (cons_.must_link.empty() && cons_.cannot_link.empty()) return 0;
        int relabels = 0;

        UnionFind uf;
        for (const auto& [m, l] : cons_.must_link) uf.unite(m, l);
        std::unordered_map<int, std::vector<int>> comps;
        for (const auto& [node, _] : uf.parent) comps[uf.find(node)].push_back(node);

        std::vector<int> roots;
        roots.reserve(comps.size());
        for (auto& [root, members] : comps) {
            std::sort(members.begin(), members.end());
            roots.push_back(root);
        }
        std::sort(roots.begin(), roots.end());

        for (int root : roots) {
            const auto& members = comps[root];
            std::unordered_map<int, int> freq;
            for (int p : members) ++freq[cur_[p]];
            int best_label = -1, best_count = -1;
            for (int p : members) {
                const int lab = cur_[p];
                const int cnt = freq[lab];
                if (cnt > best_count || (cnt == best_count && lab < best_label)) {
                    best_count = cnt;
                    best_label = lab;
                }
            }
            for (int p : members)
                if (cur_[p] != best_label) {
                    cur_[p] = best_label;
                    ++relabels;
                }
        }

        std::unordered_map<int, std::vector<int>> cl_adj;
        for (const auto& [m, l] : cons_.cannot_link) {
            cl_adj[m].push_back(l);
            cl_adj[l].push_back(m);
        }
        auto component_of = [&](int p) -> std::vector<int> {
            const int root = uf.find(p);
            auto it = comps.find(root);
            if (it == comps.end()) return {p};
            return it->second;
        };

        std::vector<std::pair<int, int>> cl_sorted = cons_.cannot_link;
        std::sort(cl_sorted.begin(), cl_sorted.end());
        for (const auto& [m, l] : cl_sorted) {
            if (cur_[m] != cur_[l]) continue;
            // recolor the component whose smallest pixel index is larger
            const std::vector<int> cm = component_of(m);
            const std::vector<int> cl_comp = component_of(l);
            const std::vector<int>& target = cm.front() > cl_comp.front() ? cm : cl_comp;
            std::vector<char> forbidden;
            auto forbid = [&](int label) {
                if (label >= static_cast<int>(forbidden.size())) forbidden.resize(label + 1, 0);
                forbidden[label] = 1;
            };
            for (int p : target) {
                auto it = cl_adj.find(p);
                if (it == cl_adj.end()) continue;
                for (int q : it->second) forbid(cur_[q]);
            }
            int color = 0;
            while (color < static_cast<int>(forbidden.size()) && forbidden[color]) ++color;
            for (int p : target) {
                if (cur_[p] != color) ++relabels;
                cur_[p] = color;
            }
        }
        return relabels;
    }

    const Ensemble& ens_;
    ConstraintSet cons_;
    FusionConfig cfg_;
    bool semi_;
    Rng rng_;
    int K_ = 0, N_ = 0, C_ = 0;

    std::vector<int> cur_;
    std::vector<std::int64_t> colcnt_;
    std::vector<std::vector<std::int64_t>> joint_;
    std::vector<std::int64_t> sdd_i_;  // running sdd(member i, consensus)
    std::vector<double> H_;
    double baseline_ = 0.0;
    std::vector<double> omega_;
    double lambda_const_ = 0.0;
    bool fixed_weights_ = false;
    bool solver_warning_ = false;

    std::vector<int> guard_id_;
    std::vector<PixelGuard> guards_;
    std::vector<double> n11_;
    std::vector<std::pair<std::uint64_t, std::int64_t>> ml_patterns_;
    std::vector<std::pair<std::uint64_t, std::int64_t>> cl_patterns_;
};

}  // namespace

FusionResult fuse_usf(const Ensemble& ens, const FusionConfig& cfg) {
    FusionConfig c = cfg;
    c.mode = FusionMode::USF;
    c.fixed_weights.reset();
    Engine engine(ens, ConstraintSet{}, std::move(c), false);
    return engine.run();
}

FusionResult fuse_sssf(const Ensemble& ens, const ConstraintSet& cons, const FusionConfig& cfg) {
    FusionConfig c = cfg;
    c.mode = FusionMode::SSSF;
    // idempotent on closed sets; throws InconsistentConstraints otherwise
    Engine engine(ens, close_constraints(cons), std::move(c), true);
    return engine.run();
}

}  // namespace segfuse
