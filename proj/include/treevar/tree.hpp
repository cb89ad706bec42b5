#pragma once

#include "treevar/curve.hpp"
#include "treevar/rng.hpp"
#include "treevar/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace treevar {

/// Rooted tree as a parent array; parent[root] == -1. Node indices double as
/// node ids, with the parent of a node listed before it is not required —
/// validation checks reachability explicitly.
struct RootedTree {
    int root = 0;
    std::vector<int> parent; // parent[i], -1 for the root

    int node_count() const { return static_cast<int>(parent.size()); }

    std::vector<std::vector<int>> children() const {
        std::vector<std::vector<int>> ch(parent.size());
        for (int v = 0; v < node_count(); ++v)
            if (v != root) ch[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])].push_back(v);
        return ch;
    }

    /// Node sequence of the unique path from a to b (through their lowest
    /// common ancestor).
    std::vector<int> path_between(int a, int b) const {
        auto ancestry = [&](int v) {
            std::vector<int> up;
            for (int u = v; u != -1; u = parent[static_cast<std::size_t>(u)]) up.push_back(u);
            return up;
        };
        std::vector<int> ua = ancestry(a), ub = ancestry(b);
        std::size_t ia = ua.size(), ib = ub.size();
        while (ia > 0 && ib > 0 && ua[ia - 1] == ub[ib - 1]) {
            --ia;
            --ib;
        }
        std::vector<int> path(ua.begin(), ua.begin() + static_cast<std::ptrdiff_t>(ia + 1));
        for (std::size_t i = ib; i-- > 0;) path.push_back(ub[i]);
        return path;
    }

    int depth(int v) const {
        int d = 0;
        for (int u = v; parent[static_cast<std::size_t>(u)] != -1; u = parent[static_cast<std::size_t>(u)]) ++d;
        return d;
    }
};

inline RootedTree make_tree(int root, std::vector<int> parent) {
    RootedTree t{root, std::move(parent)};
    const int n = t.node_count();
    if (n < 1) throw invalid_input("tree needs at least one node");
    if (root < 0 || root >= n) throw invalid_input("root index out of range");
    int roots = 0;
    for (int v = 0; v < n; ++v) {
        const int p = t.parent[static_cast<std::size_t>(v)];
        if (p == -1) {
            ++roots;
            if (v != root) throw invalid_input("node " + std::to_string(v) + " has no parent but is not the root");
        } else if (p < 0 || p >= n) {
            throw invalid_input("parent of node " + std::to_string(v) + " out of range");
        }
    }
    if (roots != 1) throw invalid_input("tree must have exactly one root");
    // reachability (also rules out cycles)
    for (int v = 0; v < n; ++v) {
        int u = v, hops = 0;
        while (u != t.root) {
            u = t.parent[static_cast<std::size_t>(u)];
            if (u == -1 || ++hops > n) throw invalid_input("node " + std::to_string(v) + " not reachable from root");
        }
    }
    return t;
}

/// Grows a tree by attaching each new node to a uniformly random existing
/// node that still has fewer than max_children children.
inline RootedTree random_tree(int node_count, int max_children, std::uint64_t seed) {
    if (node_count < 1 || max_children < 1) throw invalid_input("random_tree: counts must be >= 1");
    Rng rng(seed);
    std::vector<int> parent(static_cast<std::size_t>(node_count), -1);
    std::vector<int> child_count(static_cast<std::size_t>(node_count), 0);
    for (int v = 1; v < node_count; ++v) {
        std::vector<int> open;
        for (int u = 0; u < v; ++u)
            if (child_count[static_cast<std::size_t>(u)] < max_children) open.push_back(u);
        const int p = open[rng.below(open.size())];
        parent[static_cast<std::size_t>(v)] = p;
        ++child_count[static_cast<std::size_t>(p)];
    }
    return make_tree(0, std::move(parent));
}

/// Knobs of the synthetic embedding generator. Straight edges subdivided at
/// sampling_step; all angles in radians.
template <typename Scalar>
struct EmbedParams {
    Scalar edge_len_min = Scalar(0.8);
    Scalar edge_len_max = Scalar(1.3);
    Scalar theta_min = Scalar(30.0 * EIGEN_PI / 180.0); // min branch/turn separation
    Scalar sampling_step = Scalar(0.05);
    Scalar clearance = Scalar(0); // 0 -> 1% of mean edge length
    int max_retries = 64;
};

/// A rooted tree realized in R^n: node positions plus one polyline per edge,
/// oriented parent -> child. edge_to(v) is the curve of edge
/// (parent(v), v); the root has none.
template <typename Scalar>
struct EmbeddedTree {
    RootedTree tree;
    MatrixX<Scalar> positions; // node_count x dim
    std::vector<std::optional<PolygonalCurve<Scalar>>> edge_curves; // indexed by child node

    Index dim() const { return positions.cols(); }
    int node_count() const { return tree.node_count(); }

    const PolygonalCurve<Scalar>& edge_to(int child) const {
        const auto& c = edge_curves[static_cast<std::size_t>(child)];
        if (!c) throw invalid_input("node " + std::to_string(child) + " has no incoming edge");
        return *c;
    }

    Scalar edge_length(int child) const { return arc_length(edge_to(child)); }

    /// Initial direction of the edge into `child`, at the parent end.
    RowVectorX<Scalar> edge_direction_at_parent(int child) const {
        const auto& c = edge_to(child);
        const RowVectorX<Scalar> d = c.points.row(1) - c.points.row(0);
        return d / d.norm();
    }
};

namespace detail {

template <typename Scalar>
void validate_embedding(const EmbeddedTree<Scalar>& emb, Scalar clearance) {
    const int n = emb.node_count();
    if (emb.positions.rows() != n) throw invalid_input("positions row count does not match node count");
    for (int v = 0; v < n; ++v) {
        if (v == emb.tree.root) {
            if (emb.edge_curves[static_cast<std::size_t>(v)])
                throw invalid_input("root must not carry an incoming edge curve");
            continue;
        }
        const auto& c = emb.edge_curves[static_cast<std::size_t>(v)];
        if (!c) throw invalid_input("missing edge curve into node " + std::to_string(v));
        const int p = emb.tree.parent[static_cast<std::size_t>(v)];
        if ((c->front() - emb.positions.row(p)).norm() > Scalar(1e-9))
            throw invalid_input("edge into node " + std::to_string(v) + " does not start at its parent position");
        if ((c->back() - emb.positions.row(v)).norm() > Scalar(1e-9))
            throw invalid_input("edge into node " + std::to_string(v) + " does not end at the node position");
    }
    // injective node map
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if ((emb.positions.row(a) - emb.positions.row(b)).norm() < clearance)
                throw invalid_input("node positions " + std::to_string(a) + " and " + std::to_string(b) +
                                    " are closer than the clearance");
    // non-adjacent edges must keep their distance (adjacent ones share a node
    // and are exempt so that validator negative controls remain constructible)
    for (int a = 0; a < n; ++a) {
        if (a == emb.tree.root) continue;
        for (int b = a + 1; b < n; ++b) {
            if (b == emb.tree.root) continue;
            const int pa = emb.tree.parent[static_cast<std::size_t>(a)];
            const int pb = emb.tree.parent[static_cast<std::size_t>(b)];
            const bool adjacent = (pa == b) || (pb == a) || (pa == pb);
            if (adjacent) continue;
            if (polyline_min_distance(emb.edge_to(a), emb.edge_to(b)) < clearance)
                throw invalid_input("edges into nodes " + std::to_string(a) + " and " + std::to_string(b) +
                                    " violate the clearance");
        }
    }
}

} // namespace detail

/// Assembles and validates an embedding from parts (used by generators, IO
/// and tests). clearance <= 0 defaults to 1% of the mean edge length.
template <typename Scalar>
EmbeddedTree<Scalar> make_embedding(RootedTree tree, MatrixX<Scalar> positions,
                                    std::vector<std::optional<PolygonalCurve<Scalar>>> edge_curves,
                                    Scalar clearance = Scalar(0)) {
    EmbeddedTree<Scalar> emb{std::move(tree), std::move(positions), std::move(edge_curves)};
    if (clearance <= Scalar(0)) {
        Scalar mean_len = Scalar(0);
        int edges = 0;
        for (int v = 0; v < emb.node_count(); ++v)
            if (v != emb.tree.root) {
                mean_len += arc_length(emb.edge_to(v));
                ++edges;
            }
        clearance = edges > 0 ? Scalar(0.01) * mean_len / Scalar(edges) : Scalar(1e-9);
    }
    detail::validate_embedding(emb, clearance);
    return emb;
}

/// Generates a straight-edge embedding of `tree` in R^dim: child directions
/// keep at least theta_min from the incoming direction and from every placed
/// sibling, and turn by at most 90 degrees so that chord distances grow
/// monotonically along paths. Rejection-sampled against the clearance;
/// throws after max_retries failed attempts.
template <typename Scalar>
EmbeddedTree<Scalar> embed(const RootedTree& tree, Index dim, const EmbedParams<Scalar>& params,
                           std::uint64_t seed) {
    if (dim < 2) throw invalid_input("embed: dim must be >= 2");
    if (!(params.edge_len_min > Scalar(0)) || params.edge_len_max < params.edge_len_min)
        throw invalid_input("embed: invalid edge length range");
    if (!(params.theta_min > Scalar(0)) || params.theta_min > Scalar(EIGEN_PI / 2))
        throw invalid_input("embed: theta_min must lie in (0, pi/2]");
    Rng rng(seed);
    const auto children = tree.children();
    const Scalar cos_min_sep = std::cos(static_cast<double>(params.theta_min));

    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        MatrixX<Scalar> pos = MatrixX<Scalar>::Zero(tree.node_count(), dim);
        std::vector<std::optional<PolygonalCurve<Scalar>>> curves(static_cast<std::size_t>(tree.node_count()));
        std::vector<RowVectorX<Scalar>> incoming(static_cast<std::size_t>(tree.node_count()));
        bool ok = true;

        std::vector<int> order{tree.root};
        for (std::size_t q = 0; q < order.size() && ok; ++q) {
            const int u = order[q];
            std::vector<RowVectorX<Scalar>> placed;
            for (int v : children[static_cast<std::size_t>(u)]) {
                RowVectorX<Scalar> d;
                bool found = false;
                for (int draw = 0; draw < 4000 && !found; ++draw) {
                    d = rng.unit_row(dim).template cast<Scalar>();
                    if (u != tree.root) {
                        const Scalar c = d.dot(incoming[static_cast<std::size_t>(u)]);
                        if (c < Scalar(0) || c > cos_min_sep) continue; // turn within [theta_min, 90 deg]
                    }
                    found = true;
                    for (const auto& s : placed)
                        if (d.dot(s) > cos_min_sep) {
                            found = false;
                            break;
                        }
                }
                if (!found) {
                    ok = false;
                    break;
                }
                placed.push_back(d);
                incoming[static_cast<std::size_t>(v)] = d;
                const Scalar len = Scalar(rng.uniform(static_cast<double>(params.edge_len_min),
                                                      static_cast<double>(params.edge_len_max)));
                pos.row(v) = pos.row(u) + len * d;
                MatrixX<Scalar> seg(2, dim);
                seg.row(0) = pos.row(u);
                seg.row(1) = pos.row(v);
                curves[static_cast<std::size_t>(v)] = resample(PolygonalCurve<Scalar>{std::move(seg)}, params.sampling_step);
                order.push_back(v);
            }
        }
        if (!ok) continue;
        try {
            return make_embedding<Scalar>(tree, std::move(pos), std::move(curves), params.clearance);
        } catch (const invalid_input&) {
            // clearance failed; retry with fresh randomness
        }
    }
    throw numeric_error("embed: could not satisfy clearance after " + std::to_string(params.max_retries) +
                        " attempts (configuration too dense)");
}

/// Embedding of the root-to-node path, oriented root -> node. The root has
/// no path curve; requesting it is an error callers must special-case.
template <typename Scalar>
PolygonalCurve<Scalar> path_curve(const EmbeddedTree<Scalar>& emb, int node) {
    if (node < 0 || node >= emb.node_count()) throw invalid_input("path_curve: node out of range");
    if (node == emb.tree.root) throw invalid_input("path_curve: the root has an empty path");
    std::vector<int> chain;
    for (int v = node; v != emb.tree.root; v = emb.tree.parent[static_cast<std::size_t>(v)]) chain.push_back(v);
    PolygonalCurve<Scalar> out = emb.edge_to(chain.back());
    for (std::size_t i = chain.size() - 1; i-- > 0;) out = concat(out, emb.edge_to(chain[i]));
    return out;
}

/// All path curves at once, reusing each shared prefix once per node.
/// Entry [root] stays empty.
template <typename Scalar>
std::vector<std::optional<PolygonalCurve<Scalar>>> path_curves(const EmbeddedTree<Scalar>& emb) {
    std::vector<std::optional<PolygonalCurve<Scalar>>> paths(static_cast<std::size_t>(emb.node_count()));
    std::vector<int> order{emb.tree.root};
    const auto children = emb.tree.children();
    for (std::size_t q = 0; q < order.size(); ++q) {
        const int u = order[q];
        for (int v : children[static_cast<std::size_t>(u)]) {
            paths[static_cast<std::size_t>(v)] =
                u == emb.tree.root ? emb.edge_to(v) : concat(*paths[static_cast<std::size_t>(u)], emb.edge_to(v));
            order.push_back(v);
        }
    }
    return paths;
}

/// Copy of the embedding with every edge polyline resampled at `step`.
template <typename Scalar>
EmbeddedTree<Scalar> resample_embedding(const EmbeddedTree<Scalar>& emb, Scalar step) {
    EmbeddedTree<Scalar> out = emb;
    for (auto& c : out.edge_curves)
        if (c) c = resample(*c, step);
    return out;
}

// --- assumption validators ----------------------------------------------

/// Outcome of a sampled assumption check. Violations count sampled
/// implications that failed beyond a 1e-9 slack; worst_margin is the largest
/// failure magnitude (<= 0 when the check passes).
struct ValidationReport {
    long violations = 0;
    double worst_margin = 0.0;
    std::vector<int> flagged_nodes;

    bool pass() const { return violations == 0; }
};

namespace detail {

/// Arc-length stations and unit tangents of a polyline, measured from the
/// given end (from_end = false: distances from the first vertex).
template <typename Scalar>
struct ArcSamples {
    std::vector<Scalar> arc;
    std::vector<RowVectorX<Scalar>> point;
    std::vector<RowVectorX<Scalar>> tangent;
};

template <typename Scalar>
ArcSamples<Scalar> sample_arc(const PolygonalCurve<Scalar>& c, int stations, bool from_far_end) {
    if (stations < 2) throw invalid_input("sample_arc: need at least 2 stations");
    const PolygonalCurve<Scalar> cc = from_far_end ? reverse(c) : c;
    const VectorX<Scalar> lens = segment_lengths(cc);
    const Scalar total = lens.sum();
    ArcSamples<Scalar> out;
    out.arc.reserve(static_cast<std::size_t>(stations));
    std::vector<Scalar> cum(static_cast<std::size_t>(cc.point_count()), Scalar(0));
    for (Index i = 0; i < cc.segment_count(); ++i) cum[static_cast<std::size_t>(i + 1)] = cum[static_cast<std::size_t>(i)] + lens[i];
    for (int s = 0; s < stations; ++s) {
        const Scalar a = total * Scalar(s) / Scalar(stations - 1);
        Index k = 0;
        for (Index i = 0; i < cc.segment_count(); ++i)
            if (a >= cum[static_cast<std::size_t>(i)]) k = i;
        const Scalar t = std::clamp((a - cum[static_cast<std::size_t>(k)]) / lens[k], Scalar(0), Scalar(1));
        out.arc.push_back(a);
        out.point.push_back(cc.points.row(k) + t * (cc.points.row(k + 1) - cc.points.row(k)));
        out.tangent.push_back(((cc.points.row(k + 1) - cc.points.row(k)) / lens[k]).eval());
    }
    if (from_far_end)
        for (auto& t : out.tangent) t = -t; // restore the stored orientation
    return out;
}

} // namespace detail

/// Assumption check: along every parent-edge/child-edge pair of a common
/// path, the chord distance |x - y| must grow as either endpoint moves away
/// from the shared node (the synchronized reading of the arc-length
/// implication; grid-monotonicity in each index is its sampled surrogate).
template <typename Scalar>
ValidationReport validate_A1(const EmbeddedTree<Scalar>& emb, int stations = 50) {
    ValidationReport rep;
    const double tol = 1e-9;
    for (int j = 0; j < emb.node_count(); ++j) {
        if (j == emb.tree.root) continue;
        for (int kk = 0; kk < emb.node_count(); ++kk) {
            if (kk == emb.tree.root || emb.tree.parent[static_cast<std::size_t>(kk)] != j) continue;
            // x walks backward from x_j on edge (i,j); y walks forward on (j,kk)
            const auto xs = detail::sample_arc(emb.edge_to(j), stations, true);
            const auto ys = detail::sample_arc(emb.edge_to(kk), stations, false);
            MatrixX<Scalar> d(stations, stations);
            for (int a = 0; a < stations; ++a)
                for (int b = 0; b < stations; ++b) d(a, b) = (xs.point[static_cast<std::size_t>(a)] - ys.point[static_cast<std::size_t>(b)]).norm();
            bool bad = false;
            for (int a = 0; a < stations; ++a)
                for (int b = 0; b < stations; ++b) {
                    if (a + 1 < stations && d(a, b) > d(a + 1, b) + tol) {
                        ++rep.violations;
                        rep.worst_margin = std::max(rep.worst_margin, static_cast<double>(d(a, b) - d(a + 1, b)));
                        bad = true;
                    }
                    if (b + 1 < stations && d(a, b) > d(a, b + 1) + tol) {
                        ++rep.violations;
                        rep.worst_margin = std::max(rep.worst_margin, static_cast<double>(d(a, b) - d(a, b + 1)));
                        bad = true;
                    }
                }
            if (bad) rep.flagged_nodes.push_back(j);
        }
    }
    return rep;
}

/// Assumption check: across every sibling edge pair, the tangent gap
/// |t(x) - t(y)| must respect the arc-sum ordering
///   l([x_i,x]) + l([x_i,y]) <= l([x_i,x']) + l([x_i,y'])  =>  gap <= gap'
/// over all sampled pairs (the stricter all-pairs reading).
template <typename Scalar>
ValidationReport validate_A2(const EmbeddedTree<Scalar>& emb, int stations = 50) {
    ValidationReport rep;
    const double tol = 1e-9;
    const auto children = emb.tree.children();
    for (int i = 0; i < emb.node_count(); ++i) {
        const auto& ch = children[static_cast<std::size_t>(i)];
        for (std::size_t a = 0; a < ch.size(); ++a)
            for (std::size_t b = a + 1; b < ch.size(); ++b) {
                const auto xs = detail::sample_arc(emb.edge_to(ch[a]), stations, false);
                const auto ys = detail::sample_arc(emb.edge_to(ch[b]), stations, false);
                struct Entry {
                    double sum, gap;
                };
                std::vector<Entry> entries;
                entries.reserve(static_cast<std::size_t>(stations) * static_cast<std::size_t>(stations));
                for (int s = 0; s < stations; ++s)
                    for (int u = 0; u < stations; ++u)
                        entries.push_back({static_cast<double>(xs.arc[static_cast<std::size_t>(s)] + ys.arc[static_cast<std::size_t>(u)]),
                                           static_cast<double>((xs.tangent[static_cast<std::size_t>(s)] - ys.tangent[static_cast<std::size_t>(u)]).norm())});
                std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) { return l.sum < r.sum; });
                // running max of gaps over strictly smaller sums
                double run_max = -1.0;
                std::size_t group_start = 0;
                bool bad = false;
                for (std::size_t e = 0; e < entries.size(); ++e) {
                    if (entries[e].sum > entries[group_start].sum + 1e-15) {
                        for (std::size_t g = group_start; g < e; ++g) run_max = std::max(run_max, entries[g].gap);
                        group_start = e;
                    }
                    if (run_max >= 0 && entries[e].gap < run_max - tol) {
                        ++rep.violations;
                        rep.worst_margin = std::max(rep.worst_margin, run_max - entries[e].gap);
                        bad = true;
                    }
                }
                if (bad) rep.flagged_nodes.push_back(i);
            }
    }
    return rep;
}

/// Assumption check: near each branching node, every branch tangent must
/// deviate from the sibling branch's initial direction at least as fast as
/// arc^a: |t(x) - t_sibling(x_i)| >= l([x_i, x])^a on the sampled
/// neighborhood. neighborhood <= 0 defaults to 20% of the shortest edge
/// incident to the node.
template <typename Scalar>
ValidationReport validate_A3(const EmbeddedTree<Scalar>& emb, double a_exponent = 1.0,
                             double neighborhood = 0.0, int stations = 50) {
    if (!(a_exponent > 0.0) || a_exponent >= 2.0) throw invalid_input("validate_A3: exponent must lie in (0, 2)");
    ValidationReport rep;
    const double tol = 1e-9;
    const auto children = emb.tree.children();
    for (int i = 0; i < emb.node_count(); ++i) {
        const auto& ch = children[static_cast<std::size_t>(i)];
        if (ch.size() < 2) continue;
        Scalar shortest = std::numeric_limits<Scalar>::infinity();
        for (int v : ch) shortest = std::min(shortest, emb.edge_length(v));
        if (i != emb.tree.root) shortest = std::min(shortest, emb.edge_length(i));
        const double hood = neighborhood > 0.0 ? neighborhood : 0.2 * static_cast<double>(shortest);
        bool bad = false;
        double node_worst = 0.0;
        for (std::size_t a = 0; a < ch.size(); ++a)
            for (std::size_t b = 0; b < ch.size(); ++b) {
                if (a == b) continue;
                const RowVectorX<Scalar> t_ref = emb.edge_direction_at_parent(ch[a]);
                const auto& probe_edge = emb.edge_to(ch[b]);
                const double reach = std::min(hood, static_cast<double>(arc_length(probe_edge)));
                const auto samples = detail::sample_arc(probe_edge, stations, false);
                for (int s = 1; s < stations; ++s) {
                    const double arc = static_cast<double>(samples.arc[static_cast<std::size_t>(s)]);
                    if (arc > reach + tol) break;
                    const double gap = static_cast<double>((samples.tangent[static_cast<std::size_t>(s)] - t_ref).norm());
                    const double need = std::pow(arc, a_exponent);
                    if (gap < need - tol) {
                        ++rep.violations;
                        node_worst = std::max(node_worst, need - gap);
                        bad = true;
                    }
                }
            }
        if (bad) {
            rep.flagged_nodes.push_back(i);
            rep.worst_margin = std::max(rep.worst_margin, node_worst);
        }
    }
    return rep;
}

} // namespace treevar
