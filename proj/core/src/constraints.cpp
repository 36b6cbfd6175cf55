#include "segfuse/constraints.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace segfuse {

namespace {

std::vector<std::pair<int, int>> normalize_pairs(std::vector<std::pair<int, int>> v) {
    for (auto& p : v) {
        if (p.first == p.second)
            throw std::invalid_argument("constraints: self-pair (" + std::to_string(p.first) + ")");
        if (p.first < 0)
            throw std::invalid_argument("constraints: negative pixel index");
        if (p.first > p.second) std::swap(p.first, p.second);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

struct UnionFind {
    std::unordered_map<int, int> parent;

    int find(int x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return x;
        }
        int root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            int next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // smaller root wins: keeps component ids deterministic
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

ConstraintSet normalize_constraints(ConstraintSet raw) {
    ConstraintSet out;
    out.must_link = normalize_pairs(std::move(raw.must_link));
    out.cannot_link = normalize_pairs(std::move(raw.cannot_link));
    return out;
}

ConstraintSet close_constraints(const ConstraintSet& raw) {
    ConstraintSet cons = normalize_constraints(raw);

    UnionFind uf;
    for (const auto& [m, l] : cons.must_link) uf.unite(m, l);

    // root -> members, sorted for deterministic pair order
    std::unordered_map<int, std::vector<int>> groups;
    for (const auto& [node, _] : uf.parent) groups[uf.find(node)].push_back(node);

    std::vector<std::pair<int, int>> closed;
    std::vector<int> roots;
    roots.reserve(groups.size());
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        roots.push_back(root);
    }
    std::sort(roots.begin(), roots.end());
    for (int root : roots) {
        const auto& members = groups[root];
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j)
                closed.emplace_back(members[i], members[j]);
    }
    std::sort(closed.begin(), closed.end());

    for (const auto& [m, l] : cons.cannot_link)
        if (uf.parent.count(m) && uf.parent.count(l) && uf.find(m) == uf.find(l))
            throw InconsistentConstraints(m, l);

    ConstraintSet out;
    out.must_link = std::move(closed);
    out.cannot_link = cons.cannot_link;
    return out;
}

}  // namespace segfuse
