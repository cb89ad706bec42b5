#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <treevar/inference.hpp>
#include <treevar/rng.hpp>

#include <cmath>

using namespace treevar;

namespace {

SimilarityMatrix<double> matrix_from(std::initializer_list<std::initializer_list<double>> rows) {
    const Index n = static_cast<Index>(rows.size());
    Matrixd m(n, n);
    Index i = 0;
    for (auto& r : rows) {
        Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    return make_similarity(std::move(m), make_kernel(1.0, 1.0), std::move(ids));
}

// Labeled tree on n nodes from a Pruefer sequence (standard decoding).
std::vector<std::pair<int, int>> pruefer_decode(const std::vector<int>& seq) {
    const int n = static_cast<int>(seq.size()) + 2;
    std::vector<int> degree(static_cast<std::size_t>(n), 1);
    for (int v : seq) ++degree[static_cast<std::size_t>(v)];
    std::vector<std::pair<int, int>> edges;
    std::vector<int> deg = degree;
    for (int v : seq) {
        for (int leaf = 0; leaf < n; ++leaf) {
            if (deg[static_cast<std::size_t>(leaf)] == 1) {
                edges.emplace_back(leaf, v);
                --deg[static_cast<std::size_t>(leaf)];
                --deg[static_cast<std::size_t>(v)];
                break;
            }
        }
    }
    int u = -1, w = -1;
    for (int v = 0; v < n; ++v)
        if (deg[static_cast<std::size_t>(v)] == 1) (u == -1 ? u : w) = v;
    edges.emplace_back(u, w);
    return edges;
}

} // namespace

TEST_CASE("reconstruct recovers exact path and star metrics") {
    // path r-a-b with unit edges: the weight-2 chord is excluded
    auto path = matrix_from({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
    auto t = reconstruct(path, 0);
    REQUIRE(t.edges.size() == 2);
    CHECK(is_isomorphic(t, make_tree(0, {-1, 0, 1})));

    // star: center 0, three leaves at distance 1, leaf-leaf 2
    auto star = matrix_from({{0, 1, 1, 1}, {1, 0, 2, 2}, {1, 2, 0, 2}, {1, 2, 2, 0}});
    auto s = reconstruct(star, 0);
    CHECK(is_isomorphic(s, make_tree(0, {-1, 0, 0, 0})));

    CHECK_THROWS_AS(reconstruct(path, 9), invalid_input);
}

TEST_CASE("reconstruct ties break lexicographically") {
    // all pairwise distances equal: MST must pick (0,1), (0,2), (0,3)
    auto flat = matrix_from({{0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}});
    auto t = reconstruct(flat, 0);
    REQUIRE(t.edges.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(t.edges[i].a == 0);
        CHECK(t.edges[i].b == static_cast<int>(i) + 1);
    }
}

TEST_CASE("reconstruct output is always a spanning tree") {
    Rng rng(8);
    for (int trial = 0; trial < 25; ++trial) {
        const Index n = 2 + static_cast<Index>(rng.below(8));
        Matrixd v = Matrixd::Zero(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j) {
                v(i, j) = rng.uniform(0.1, 5.0);
                v(j, i) = v(i, j);
            }
        std::vector<int> ids(static_cast<std::size_t>(n));
        std::iota(ids.begin(), ids.end(), 0);
        auto t = reconstruct(make_similarity(std::move(v), make_kernel(1.0, 1.0), ids), 0);
        CHECK(t.edges.size() == static_cast<std::size_t>(n - 1));
        detail::DisjointSet dsu(static_cast<std::size_t>(n));
        int merges = 0;
        for (const auto& e : t.edges)
            if (dsu.unite(static_cast<std::size_t>(e.a), static_cast<std::size_t>(e.b))) ++merges;
        CHECK(merges == static_cast<int>(n) - 1); // connected and acyclic
    }
}

TEST_CASE("MST recovers every tree with <= 6 nodes from its exact metric") {
    Rng rng(2025);
    long checked = 0;
    for (int n = 2; n <= 6; ++n) {
        // enumerate all labeled trees via Pruefer sequences (n^(n-2))
        const int len = n - 2;
        std::vector<int> seq(static_cast<std::size_t>(std::max(0, len)), 0);
        long count = 1;
        for (int i = 0; i < len; ++i) count *= n;
        for (long code = 0; code < count; ++code) {
            long c = code;
            for (int i = 0; i < len; ++i) {
                seq[static_cast<std::size_t>(i)] = static_cast<int>(c % n);
                c /= n;
            }
            InferredTree truth;
            truth.root = 0;
            truth.node_ids.resize(static_cast<std::size_t>(n));
            std::iota(truth.node_ids.begin(), truth.node_ids.end(), 0);
            for (auto [a, b] : pruefer_decode(seq))
                truth.edges.push_back({a, b, static_cast<double>(1 + rng.below(9))});
            auto metric = make_similarity(shortest_path_matrix(truth), make_kernel(1.0, 1.0), truth.node_ids);
            auto rec = reconstruct(metric, 0);
            REQUIRE(is_isomorphic(rec, truth));
            ++checked;
        }
    }
    CHECK(checked == 1 + 3 + 16 + 125 + 1296);
}

TEST_CASE("is_isomorphic: strict and relaxed modes") {
    auto tree = make_tree(0, {-1, 0, 0, 1});
    auto same = detail::as_inferred(tree);
    CHECK(is_isomorphic(same, tree, IsomorphismMode::Strict));
    CHECK(is_isomorphic(same, tree, IsomorphismMode::Relaxed));

    // path vs star on 3 nodes: degree sequences differ
    auto path = detail::as_inferred(make_tree(0, {-1, 0, 1}));
    CHECK_FALSE(is_isomorphic(path, make_tree(0, {-1, 0, 0})));
    CHECK_FALSE(is_isomorphic(path, make_tree(0, {-1, 0, 0}), IsomorphismMode::Relaxed));

    // children permuted: same rooted topology in both modes
    InferredTree permuted;
    permuted.root = 0;
    permuted.node_ids = {0, 1, 2, 3};
    permuted.edges = {{1, 0, 1.0}, {0, 2, 1.0}, {3, 1, 1.0}};
    CHECK(is_isomorphic(permuted, tree, IsomorphismMode::Strict));
    CHECK(is_isomorphic(permuted, tree, IsomorphismMode::Relaxed));

    // different labels, same shape: relaxed only
    InferredTree relabeled;
    relabeled.root = 0;
    relabeled.node_ids = {0, 1, 2, 3};
    relabeled.edges = {{0, 2, 1.0}, {0, 1, 1.0}, {2, 3, 1.0}};
    CHECK_FALSE(is_isomorphic(relabeled, tree, IsomorphismMode::Strict));
    CHECK(is_isomorphic(relabeled, tree, IsomorphismMode::Relaxed));

    // symmetry and reflexivity of the relation
    CHECK(is_isomorphic(relabeled, permuted, IsomorphismMode::Relaxed) ==
          is_isomorphic(permuted, relabeled, IsomorphismMode::Relaxed));

    InferredTree small;
    small.root = 0;
    small.node_ids = {0};
    CHECK_THROWS_AS((void)is_isomorphic(small, tree), invalid_input);
}

TEST_CASE("recovery_experiment: trivial topology, determinism, sigma effect") {
    auto rows = recovery_experiment(1, 2, 2, {0.3, 0.1}, 4);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) CHECK(r.success);

    auto again = recovery_experiment(1, 2, 2, {0.3, 0.1}, 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].trial == again[i].trial);
        CHECK(rows[i].sigma == again[i].sigma);
        CHECK(rows[i].success == again[i].success);
        CHECK(rows[i].four_point_defect == again[i].four_point_defect);
    }

    // small end-to-end run: the small-sigma rate is at least the large-sigma rate
    auto sweep = recovery_experiment(4, 8, 3, {0.8, 0.05}, 11, {}, 2);
    int ok_small = 0, ok_large = 0;
    for (const auto& r : sweep) (r.sigma == 0.05 ? ok_small : ok_large) += r.success ? 1 : 0;
    CHECK(ok_small == 4);
    CHECK(ok_small >= ok_large);

    CHECK_THROWS_AS(recovery_experiment(0, 5, 3, {0.1}, 1), invalid_input);
}

TEST_CASE("mst_edge_sup matches the ground-truth normalizer on exact metrics") {
    InferredTree t;
    t.root = 0;
    t.node_ids = {0, 1, 2, 3};
    t.edges = {{0, 1, 1.0}, {1, 2, 4.0}, {1, 3, 2.0}};
    auto m = make_similarity(shortest_path_matrix(t), make_kernel(1.0, 1.0), t.node_ids);
    CHECK(mst_edge_sup(m) == doctest::Approx(4.0));
}
