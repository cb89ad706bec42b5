#pragma once

#include "treevar/kernel.hpp"
#include "treevar/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace treevar {

/// Symmetric matrix of node similarities Delta(i, j) = d^2 between the
/// root-to-i and root-to-j path varifolds. Zero diagonal, nonnegative.
template <typename Scalar>
struct SimilarityMatrix {
    MatrixX<Scalar> values;
    KernelParams<Scalar> params;
    std::vector<int> node_ids;

    Index size() const { return values.rows(); }

    Scalar operator()(Index i, Index j) const { return values(i, j); }
};

template <typename Scalar>
SimilarityMatrix<Scalar> make_similarity(MatrixX<Scalar> values, KernelParams<Scalar> params,
                                         std::vector<int> node_ids) {
    if (values.rows() != values.cols()) throw invalid_input("similarity matrix must be square");
    if (static_cast<Index>(node_ids.size()) != values.rows())
        throw invalid_input("similarity matrix id count mismatch");
    for (Index i = 0; i < values.rows(); ++i) {
        if (values(i, i) != Scalar(0)) throw invalid_input("similarity diagonal must be zero");
        for (Index j = 0; j < values.cols(); ++j) {
            if (!std::isfinite(static_cast<double>(values(i, j))) || values(i, j) < Scalar(0))
                throw invalid_input("similarity entries must be finite and nonnegative");
            if (values(i, j) != values(j, i)) throw invalid_input("similarity matrix must be symmetric");
        }
    }
    return SimilarityMatrix<Scalar>{std::move(values), params, std::move(node_ids)};
}

namespace detail {

/// Path varifolds for every node; the root's is the empty varifold, so its
/// inner products vanish and Delta(r, j) = |mu_[x_r, x_j]|^2 as required.
template <typename Scalar>
std::vector<DiscreteVarifold<Scalar>> path_varifolds(const EmbeddedTree<Scalar>& emb) {
    const auto paths = path_curves(emb);
    std::vector<DiscreteVarifold<Scalar>> vs;
    vs.reserve(paths.size());
    for (int v = 0; v < emb.node_count(); ++v) {
        const auto& p = paths[static_cast<std::size_t>(v)];
        vs.push_back(p ? to_varifold(*p) : DiscreteVarifold<Scalar>::zero(emb.dim()));
    }
    return vs;
}

template <typename Scalar>
Scalar delta_from_gram(const MatrixX<Scalar>& g, Index i, Index j) {
    if (i == j) return Scalar(0);
    const Scalar d2 = g(i, i) + g(j, j) - Scalar(2) * g(i, j);
    return d2 < Scalar(0) ? Scalar(0) : d2;
}

} // namespace detail

/// Node similarity Delta(i, j) = d^2([x_r, x_i], [x_r, x_j]).
template <typename Scalar>
Scalar delta(const EmbeddedTree<Scalar>& emb, int i, int j, const KernelParams<Scalar>& k) {
    if (i < 0 || i >= emb.node_count() || j < 0 || j >= emb.node_count())
        throw invalid_input("delta: node out of range");
    if (i == j) return Scalar(0);
    auto path_v = [&](int v) {
        return v == emb.tree.root ? DiscreteVarifold<Scalar>::zero(emb.dim()) : to_varifold(path_curve(emb, v));
    };
    return distance_sq(path_v(i), path_v(j), k);
}

/// All-pairs Delta over the observed nodes. Path varifolds are built once
/// (shared prefixes concatenated once per node); entries are independent
/// work units computed from a Gram matrix of path inner products.
template <typename Scalar>
SimilarityMatrix<Scalar> delta_matrix(const EmbeddedTree<Scalar>& emb, const KernelParams<Scalar>& k,
                                      int threads = 1) {
    const auto vs = detail::path_varifolds(emb);
    const MatrixX<Scalar> g = gram(vs, k, threads);
    const Index n = g.rows();
    MatrixX<Scalar> d(n, n);
    for (Index i = 0; i < n; ++i) {
        d(i, i) = Scalar(0);
        for (Index j = i + 1; j < n; ++j) {
            const Scalar v = detail::delta_from_gram(g, i, j);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = static_cast<int>(i);
    return SimilarityMatrix<Scalar>{std::move(d), k, std::move(ids)};
}

/// Relative gap between Delta(i, j) and the telescoped edge sum along the
/// tree path i = i_1, ..., i_N = j (Proposition-1 statistic). Returns
/// infinity with the nonfinite flag implied when the edge sum underflows.
template <typename Scalar>
Scalar path_decomposition_error(const EmbeddedTree<Scalar>& emb, int i, int j,
                                const KernelParams<Scalar>& k) {
    if (i == j) throw invalid_input("path_decomposition_error: need two distinct nodes");
    const auto path = emb.tree.path_between(i, j);
    Scalar edge_sum = Scalar(0);
    for (std::size_t s = 0; s + 1 < path.size(); ++s) edge_sum += delta(emb, path[s], path[s + 1], k);
    const Scalar direct = delta(emb, i, j, k);
    if (edge_sum <= std::numeric_limits<Scalar>::min())
        return std::numeric_limits<Scalar>::infinity();
    return std::abs(direct - edge_sum) / edge_sum;
}

namespace detail {

template <typename Scalar>
Scalar decomposition_error_from_matrix(const RootedTree& tree, const MatrixX<Scalar>& d, int i, int j) {
    const auto path = tree.path_between(i, j);
    Scalar edge_sum = Scalar(0);
    for (std::size_t s = 0; s + 1 < path.size(); ++s) edge_sum += d(path[s], path[s + 1]);
    if (edge_sum <= std::numeric_limits<Scalar>::min()) return std::numeric_limits<Scalar>::infinity();
    return std::abs(d(i, j) - edge_sum) / edge_sum;
}

} // namespace detail

/// Largest decomposition error over all node pairs, read off a precomputed
/// Delta matrix.
template <typename Scalar>
Scalar max_decomposition_error(const EmbeddedTree<Scalar>& emb, const SimilarityMatrix<Scalar>& m) {
    Scalar worst = Scalar(0);
    for (Index i = 0; i < m.size(); ++i)
        for (Index j = i + 1; j < m.size(); ++j)
            worst = std::max(worst, detail::decomposition_error_from_matrix(emb.tree, m.values,
                                                                            static_cast<int>(i), static_cast<int>(j)));
    return worst;
}

/// sup over tree edges of Delta(parent, child) — the normalizer of the
/// asymptotic defect statistics.
template <typename Scalar>
Scalar edge_delta_sup(const RootedTree& tree, const SimilarityMatrix<Scalar>& m) {
    Scalar sup = Scalar(0);
    for (int v = 0; v < tree.node_count(); ++v)
        if (v != tree.root) sup = std::max(sup, m.values(tree.parent[static_cast<std::size_t>(v)], v));
    return sup;
}

/// Worst triangle-inequality excess max_{i,j,k} Delta(i,k) - Delta(i,j) -
/// Delta(j,k), normalized by the supplied edge sup. Fewer than 3 nodes is
/// vacuous and returns -infinity.
template <typename Scalar>
Scalar triangle_defect(const SimilarityMatrix<Scalar>& m, Scalar edge_sup) {
    const Index n = m.size();
    if (n < 3) return -std::numeric_limits<Scalar>::infinity();
    if (!(edge_sup > Scalar(0))) throw invalid_input("triangle_defect: normalizer must be positive");
    Scalar worst = -std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            for (Index k = i + 1; k < n; ++k) {
                if (k == j) continue;
                worst = std::max(worst, m.values(i, k) - m.values(i, j) - m.values(j, k));
            }
        }
    return worst / edge_sup;
}

/// Worst four-points-condition excess over node quadruples: the largest of
/// the three pairings minus the largest of the other two, normalized.
/// Fewer than 4 nodes returns -infinity.
template <typename Scalar>
Scalar four_point_defect(const SimilarityMatrix<Scalar>& m, Scalar edge_sup) {
    const Index n = m.size();
    if (n < 4) return -std::numeric_limits<Scalar>::infinity();
    if (!(edge_sup > Scalar(0))) throw invalid_input("four_point_defect: normalizer must be positive");
    Scalar worst = -std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            for (Index k = j + 1; k < n; ++k)
                for (Index l = k + 1; l < n; ++l) {
                    const Scalar s1 = m.values(i, j) + m.values(k, l);
                    const Scalar s2 = m.values(i, k) + m.values(j, l);
                    const Scalar s3 = m.values(i, l) + m.values(j, k);
                    const Scalar hi = std::max({s1, s2, s3});
                    const Scalar mid = s1 + s2 + s3 - hi - std::min({s1, s2, s3});
                    worst = std::max(worst, hi - mid);
                }
    return worst / edge_sup;
}

/// Lemma-1/Lemma-2 cross-term ratio
///   <mu_A, mu_B> / (|mu_A|^2 + |mu_B|^2)
/// where (A, B) are the edge curves of either a chain (i parent of j parent
/// of kk) or a branching (j, kk children of i) configuration.
template <typename Scalar>
Scalar lemma_probe(const EmbeddedTree<Scalar>& emb, int i, int j, int kk, const KernelParams<Scalar>& k) {
    const auto& par = emb.tree.parent;
    const bool chain = par[static_cast<std::size_t>(j)] == i && par[static_cast<std::size_t>(kk)] == j;
    const bool branching = j != kk && par[static_cast<std::size_t>(j)] == i && par[static_cast<std::size_t>(kk)] == i;
    if (!chain && !branching)
        throw invalid_input("lemma_probe: nodes do not form a chain or branching configuration");
    const auto va = to_varifold(emb.edge_to(j));
    const auto vb = to_varifold(emb.edge_to(kk));
    return inner(va, vb, k) / (norm_sq(va, k) + norm_sq(vb, k));
}

/// Largest lemma ratio over every chain and branching configuration of the
/// tree (the per-sigma statistic of the convergence table).
template <typename Scalar>
Scalar max_lemma_ratio(const EmbeddedTree<Scalar>& emb, const KernelParams<Scalar>& k) {
    Scalar worst = Scalar(0);
    const auto children = emb.tree.children();
    bool any = false;
    for (int i = 0; i < emb.node_count(); ++i) {
        const auto& ch = children[static_cast<std::size_t>(i)];
        for (std::size_t a = 0; a < ch.size(); ++a) {
            for (int gc : children[static_cast<std::size_t>(ch[a])]) {
                worst = std::max(worst, lemma_probe(emb, i, ch[a], gc, k));
                any = true;
            }
            for (std::size_t b = a + 1; b < ch.size(); ++b) {
                worst = std::max(worst, lemma_probe(emb, i, ch[a], ch[b], k));
                any = true;
            }
        }
    }
    return any ? worst : std::numeric_limits<Scalar>::quiet_NaN();
}

/// One rung of the convergence experiment.
template <typename Scalar>
struct SweepRow {
    Scalar sigma_x;
    Scalar sigma_t;
    Scalar max_decomp_err;
    Scalar triangle_defect;
    Scalar four_point_defect;
    Scalar max_lemma_ratio;
};

/// Runs every diagnostic at sigma_x = sigma, sigma_t = ratio * sigma for a
/// strictly decreasing sigma ladder. Edge curves are rediscretized once at
/// step = min(sigma_min, ratio * sigma_min) / 5 so quadrature error stays
/// below the asymptotic signal at every rung.
template <typename Scalar>
std::vector<SweepRow<Scalar>> convergence_sweep(const EmbeddedTree<Scalar>& emb,
                                                const std::vector<Scalar>& sigmas, Scalar ratio,
                                                int threads = 1) {
    if (sigmas.empty()) throw invalid_input("convergence_sweep: empty sigma ladder");
    if (!(ratio > Scalar(0))) throw invalid_input("convergence_sweep: ratio must be positive");
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (!(sigmas[i] > Scalar(0))) throw invalid_input("convergence_sweep: sigmas must be positive");
        if (i > 0 && !(sigmas[i] < sigmas[i - 1]))
            throw invalid_input("convergence_sweep: sigma ladder must be strictly decreasing");
    }
    const Scalar sigma_min = sigmas.back();
    const Scalar step = std::min(sigma_min, ratio * sigma_min) / Scalar(5);
    const EmbeddedTree<Scalar> fine = resample_embedding(emb, step);

    std::vector<SweepRow<Scalar>> rows;
    rows.reserve(sigmas.size());
    for (const Scalar sigma : sigmas) {
        const auto k = make_kernel(sigma, ratio * sigma);
        const auto m = delta_matrix(fine, k, threads);
        const Scalar sup = edge_delta_sup(fine.tree, m);
        SweepRow<Scalar> row;
        row.sigma_x = sigma;
        row.sigma_t = ratio * sigma;
        row.max_decomp_err = max_decomposition_error(fine, m);
        row.triangle_defect = triangle_defect(m, sup);
        row.four_point_defect = four_point_defect(m, sup);
        row.max_lemma_ratio = max_lemma_ratio(fine, k);
        rows.push_back(row);
    }
    return rows;
}

} // namespace treevar
