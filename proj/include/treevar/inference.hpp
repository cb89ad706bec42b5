#pragma once

#include "treevar/similarity.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace treevar {

/// Reconstructed weighted tree: undirected edge list over node ids, rooted
/// for reporting purposes at the id the caller supplied.
struct InferredTree {
    struct Edge {
        int a, b;
        double weight;
    };
    int root = 0;
    std::vector<int> node_ids;
    std::vector<Edge> edges;
};

namespace detail {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[a] = b;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

inline void check_inferred(const InferredTree& t) {
    const std::size_t n = t.node_ids.size();
    if (n == 0) throw invalid_input("inferred tree must have nodes");
    if (t.edges.size() != n - 1) throw invalid_input("inferred tree must have n-1 edges");
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[t.node_ids[i]] = i;
    if (index.size() != n) throw invalid_input("inferred tree ids must be unique");
    if (!index.count(t.root)) throw invalid_input("inferred tree root id unknown");
    DisjointSet dsu(n);
    for (const auto& e : t.edges) {
        if (!index.count(e.a) || !index.count(e.b)) throw invalid_input("inferred edge references unknown id");
        if (!(e.weight > 0)) throw invalid_input("inferred edge weights must be positive");
        if (!dsu.unite(index[e.a], index[e.b])) throw invalid_input("inferred tree contains a cycle");
    }
}

} // namespace detail

/// Minimum spanning tree of the complete graph weighted by the similarity
/// matrix (Kruskal). Every node is observed here, and on an exact tree
/// metric each non-tree chord is the strict maximum of its cycle, so the
/// MST is the generating tree. Equal weights break lexicographically by
/// (min id, max id).
template <typename Scalar>
InferredTree reconstruct(const SimilarityMatrix<Scalar>& m, int root_id) {
    const Index n = m.size();
    if (n < 1) throw invalid_input("reconstruct: empty matrix");
    if (std::find(m.node_ids.begin(), m.node_ids.end(), root_id) == m.node_ids.end())
        throw invalid_input("reconstruct: root id not present");
    if (!m.values.allFinite()) throw invalid_input("reconstruct: matrix has non-finite entries");

    struct Cand {
        Scalar w;
        int a, b;
    };
    std::vector<Cand> cands;
    cands.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            const auto [lo, hi] = std::minmax(m.node_ids[static_cast<std::size_t>(i)], m.node_ids[static_cast<std::size_t>(j)]);
            cands.push_back({m.values(i, j), lo, hi});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.w != y.w) return x.w < y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < m.node_ids.size(); ++i) index[m.node_ids[i]] = i;
    detail::DisjointSet dsu(m.node_ids.size());
    InferredTree out;
    out.root = root_id;
    out.node_ids = m.node_ids;
    for (const auto& c : cands) {
        if (out.edges.size() + 1 == m.node_ids.size()) break;
        if (dsu.unite(index[c.a], index[c.b]))
            out.edges.push_back({c.a, c.b, static_cast<double>(c.w)});
    }
    if (out.edges.size() + 1 != m.node_ids.size())
        throw numeric_error("reconstruct: matrix did not yield a spanning tree");
    return out;
}

enum class IsomorphismMode { Strict, Relaxed };

namespace detail {

inline std::vector<std::vector<int>> adjacency(const InferredTree& t, std::map<int, std::size_t>& index) {
    for (std::size_t i = 0; i < t.node_ids.size(); ++i) index[t.node_ids[i]] = i;
    std::vector<std::vector<int>> adj(t.node_ids.size());
    for (const auto& e : t.edges) {
        adj[index[e.a]].push_back(e.b);
        adj[index[e.b]].push_back(e.a);
    }
    return adj;
}

/// Canonical rooted-tree encoding: "(" + sorted child encodings + ")".
inline std::string canonical_encoding(const std::vector<std::vector<std::size_t>>& child_idx, std::size_t v) {
    std::vector<std::string> parts;
    parts.reserve(child_idx[v].size());
    for (std::size_t c : child_idx[v]) parts.push_back(canonical_encoding(child_idx, c));
    std::sort(parts.begin(), parts.end());
    std::string out = "(";
    for (const auto& p : parts) out += p;
    out += ")";
    return out;
}

inline std::string canonical_form(const InferredTree& t) {
    std::map<int, std::size_t> index;
    const auto adj = adjacency(t, index);
    std::vector<std::vector<std::size_t>> child_idx(t.node_ids.size());
    std::vector<char> seen(t.node_ids.size(), 0);
    std::vector<std::size_t> queue{index.at(t.root)};
    seen[index.at(t.root)] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const std::size_t u = queue[q];
        for (int nb : adj[u]) {
            const std::size_t w = index.at(nb);
            if (!seen[w]) {
                seen[w] = 1;
                child_idx[u].push_back(w);
                queue.push_back(w);
            }
        }
    }
    return canonical_encoding(child_idx, index.at(t.root));
}

inline InferredTree as_inferred(const RootedTree& t) {
    InferredTree out;
    out.root = t.root;
    out.node_ids.resize(static_cast<std::size_t>(t.node_count()));
    std::iota(out.node_ids.begin(), out.node_ids.end(), 0);
    for (int v = 0; v < t.node_count(); ++v)
        if (v != t.root) out.edges.push_back({t.parent[static_cast<std::size_t>(v)], v, 1.0});
    return out;
}

} // namespace detail

/// Strict mode: equal edge sets as unordered id pairs (node identity
/// respected). Relaxed mode: equal canonical rooted encodings (identity
/// ignored, children order-free).
inline bool is_isomorphic(const InferredTree& a, const InferredTree& b,
                          IsomorphismMode mode = IsomorphismMode::Strict) {
    if (a.node_ids.size() != b.node_ids.size()) throw invalid_input("is_isomorphic: node-count mismatch");
    if (mode == IsomorphismMode::Strict) {
        auto edge_set = [](const InferredTree& t) {
            std::vector<std::pair<int, int>> es;
            es.reserve(t.edges.size());
            for (const auto& e : t.edges) es.push_back(std::minmax(e.a, e.b));
            std::sort(es.begin(), es.end());
            return es;
        };
        return edge_set(a) == edge_set(b);
    }
    return detail::canonical_form(a) == detail::canonical_form(b);
}

inline bool is_isomorphic(const InferredTree& a, const RootedTree& b,
                          IsomorphismMode mode = IsomorphismMode::Strict) {
    return is_isomorphic(a, detail::as_inferred(b), mode);
}

/// Exact shortest-path matrix of a weighted tree over ids 0..n-1 (test
/// fixture and CLI input for the exact-metric paths).
inline Matrixd shortest_path_matrix(const InferredTree& t) {
    std::map<int, std::size_t> index;
    const auto adj_ids = detail::adjacency(t, index);
    const std::size_t n = t.node_ids.size();
    std::map<std::pair<int, int>, double> w;
    for (const auto& e : t.edges) {
        w[std::minmax(e.a, e.b)] = e.weight;
    }
    Matrixd d = Matrixd::Zero(static_cast<Index>(n), static_cast<Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
        // BFS from s accumulating path weights (unique paths in a tree)
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> queue{s};
        seen[s] = 1;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const std::size_t u = queue[q];
            for (int nb : adj_ids[u]) {
                const std::size_t v = index.at(nb);
                if (seen[v]) continue;
                seen[v] = 1;
                d(static_cast<Index>(s), static_cast<Index>(v)) =
                    d(static_cast<Index>(s), static_cast<Index>(u)) + w.at(std::minmax(t.node_ids[u], nb));
                queue.push_back(v);
            }
        }
    }
    return d;
}

/// Largest Delta between MST-adjacent nodes — the defect normalizer when the
/// ground-truth edge set is unknown.
template <typename Scalar>
Scalar mst_edge_sup(const SimilarityMatrix<Scalar>& m) {
    if (m.size() < 2) throw invalid_input("mst_edge_sup: need at least two nodes");
    const InferredTree t = reconstruct(m, m.node_ids.front());
    double sup = 0;
    for (const auto& e : t.edges) sup = std::max(sup, e.weight);
    return static_cast<Scalar>(sup);
}

/// One trial of the end-to-end recovery experiment.
struct RecoveryRow {
    int trial;
    double sigma;
    bool success;
    double four_point_defect;
};

struct RecoveryConfig {
    int max_children = 3;
    EmbedParams<double> embed;
    double sigma_ratio = 1.0; // sigma_t = ratio * sigma_x
};

/// Generates `trees` random trees, embeds them, and for each sigma computes
/// Delta (discretized at sigma/5), reconstructs, and records strict
/// isomorphism against the generating tree. Deterministic per seed: trial
/// t uses the derived seed stream (seed, t).
inline std::vector<RecoveryRow> recovery_experiment(int trees, int nodes, Index dim,
                                                    const std::vector<double>& sigmas, std::uint64_t seed,
                                                    const RecoveryConfig& cfg = {}, int threads = 1) {
    if (trees < 1 || nodes < 1 || dim < 2) throw invalid_input("recovery_experiment: counts must be positive, dim >= 2");
    std::vector<RecoveryRow> rows;
    rows.reserve(static_cast<std::size_t>(trees) * sigmas.size());
    for (int t = 0; t < trees; ++t) {
        const auto tree = random_tree(nodes, cfg.max_children, Rng::derive(seed, static_cast<std::uint64_t>(2 * t)));
        const auto emb = embed(tree, dim, cfg.embed, Rng::derive(seed, static_cast<std::uint64_t>(2 * t + 1)));
        for (double sigma : sigmas) {
            const auto fine = resample_embedding(emb, sigma / 5.0);
            const auto k = make_kernel(sigma, cfg.sigma_ratio * sigma);
            const auto m = delta_matrix(fine, k, threads);
            const auto inferred = reconstruct(m, tree.root);
            RecoveryRow row;
            row.trial = t;
            row.sigma = sigma;
            row.success = is_isomorphic(inferred, tree, IsomorphismMode::Strict);
            row.four_point_defect = nodes >= 4 ? static_cast<double>(four_point_defect(m, edge_delta_sup(tree, m)))
                                               : -std::numeric_limits<double>::infinity();
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace treevar
