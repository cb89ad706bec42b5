#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <treevar/inference.hpp>
#include <treevar/similarity.hpp>

#include "oracle.hpp"

#include <cmath>

using namespace treevar;

namespace {

EmbeddedTree<double> straight_embedding(const RootedTree& tree, Matrixd positions, double step = 0.05) {
    std::vector<std::optional<PolygonalCurve<double>>> curves(static_cast<std::size_t>(tree.node_count()));
    for (int v = 0; v < tree.node_count(); ++v) {
        if (v == tree.root) continue;
        Matrixd seg(2, positions.cols());
        seg.row(0) = positions.row(tree.parent[static_cast<std::size_t>(v)]);
        seg.row(1) = positions.row(v);
        curves[static_cast<std::size_t>(v)] = resample(make_curve(std::move(seg)), step);
    }
    return make_embedding<double>(tree, std::move(positions), std::move(curves));
}

// chain r -> a -> b along the x axis, unit edges
EmbeddedTree<double> collinear_chain(double step) {
    Matrixd pos(3, 2);
    pos << 0, 0, 1, 0, 2, 0;
    return straight_embedding(make_tree(0, {-1, 0, 1}), std::move(pos), step);
}

// root with two children at 90 degrees, unit edges
EmbeddedTree<double> right_angle_star(double step) {
    Matrixd pos(3, 2);
    pos << 0, 0, 1, 0, 0, 1;
    return straight_embedding(make_tree(0, {-1, 0, 0}), std::move(pos), step);
}

SimilarityMatrix<double> exact_metric(const InferredTree& t) {
    return make_similarity(shortest_path_matrix(t), make_kernel(1.0, 1.0), t.node_ids);
}

} // namespace

TEST_CASE("delta: zero on the diagonal, norm against the empty root path") {
    auto emb = collinear_chain(0.02);
    const auto k = make_kernel(0.1, 0.1);
    CHECK(delta(emb, 1, 1, k) == 0.0);
    CHECK(delta(emb, 0, 0, k) == 0.0);
    // root path is empty, so Delta(r, a) = |mu_[x_r, x_a]|^2
    const double expected = norm_sq(to_varifold(path_curve(emb, 1)), k);
    CHECK(delta(emb, 0, 1, k) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("delta of 90-degree siblings matches the dense quadrature oracle") {
    auto emb = right_angle_star(0.01);
    const auto k = make_kernel(0.1, 0.1);
    const double lib = delta(emb, 1, 2, k);
    const double ora = oracle::distance_sq(path_curve(emb, 1), path_curve(emb, 2), 0.1, 0.1, 10);
    // midpoint quadrature at step sigma/10 leaves ~1e-4 relative error
    CHECK(lib == doctest::Approx(ora).epsilon(2e-4));
}

TEST_CASE("delta_matrix: single node, mirror symmetry, consistency with delta") {
    auto lone = make_embedding<double>(make_tree(0, {-1}), Matrixd::Zero(1, 2),
                                       std::vector<std::optional<PolygonalCurve<double>>>(1));
    const auto k = make_kernel(0.2, 0.2);
    auto m1 = delta_matrix(lone, k);
    REQUIRE(m1.size() == 1);
    CHECK(m1(0, 0) == 0.0);

    // mirror-image children: Delta(r, a) == Delta(r, b)
    auto star = right_angle_star(0.02);
    auto m = delta_matrix(star, k);
    CHECK(m(0, 1) == doctest::Approx(m(0, 2)).epsilon(1e-12));
    CHECK(m.values == m.values.transpose().eval());
    CHECK(m.values.diagonal().cwiseAbs().maxCoeff() == 0.0);

    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) {
            const double direct = delta(star, static_cast<int>(i), static_cast<int>(j), k);
            CHECK(std::abs(m(i, j) - direct) <= 1e-12 * std::max(1.0, direct));
        }

    // parallel evaluation agrees with the sequential reference
    auto mp = delta_matrix(star, k, 4);
    CHECK((m.values - mp.values).cwiseAbs().maxCoeff() <= 1e-10 * m.values.maxCoeff());
}

TEST_CASE("additive consistency: full-path delta equals prefix-cancelled evaluation") {
    EmbedParams<double> params;
    auto tree = random_tree(9, 3, 17);
    auto emb = embed(tree, 3, params, 17);
    const auto k = make_kernel(0.15, 0.15);
    const auto paths = path_curves(emb);
    for (int j = 0; j < emb.node_count(); ++j) {
        const int i = j == emb.tree.root ? -1 : emb.tree.parent[static_cast<std::size_t>(j)];
        if (i == -1 || i == emb.tree.root) continue;
        const double full = delta(emb, i, j, k);
        // with pj = pi u e, every prefix term cancels and the difference
        // measure is mu_e alone, so the analytic cancellation leaves |mu_e|^2
        const auto vi = to_varifold(*paths[static_cast<std::size_t>(i)]);
        const auto vj = to_varifold(*paths[static_cast<std::size_t>(j)]);
        const auto ve = to_varifold(emb.edge_to(j));
        const double cancelled = norm_sq(ve, k);
        CHECK(std::abs(full - cancelled) <= 1e-10 * std::max(full, 1e-30));
        // the cross-term identity behind the cancellation holds exactly too
        const double lhs = inner(vj, vi, k);
        const double rhs = inner(vi, vi, k) + inner(ve, vi, k);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    }
}

TEST_CASE("path_decomposition_error: adjacent pairs vanish, sigma sweeps shrink") {
    const auto emb = collinear_chain(0.005);
    CHECK(path_decomposition_error(emb, 0, 1, make_kernel(0.1, 0.1)) == 0.0);
    CHECK_THROWS_AS(path_decomposition_error(emb, 1, 1, make_kernel(0.1, 0.1)), invalid_input);

    // collinear chain: error at sigma 0.05 below error at sigma 0.2
    const double e_small = path_decomposition_error(emb, 0, 2, make_kernel(0.05, 0.05));
    const double e_large = path_decomposition_error(emb, 0, 2, make_kernel(0.2, 0.2));
    CHECK(e_small < e_large);
    CHECK(e_small > 0.0);

    // sibling leaves through a branching ancestor
    const auto star = right_angle_star(0.005);
    double prev = std::numeric_limits<double>::infinity();
    for (double sigma : {0.4, 0.2, 0.1, 0.05}) {
        const double e = path_decomposition_error(star, 1, 2, make_kernel(sigma, sigma));
        CHECK(e <= prev * 1.05 + 1e-12);
        prev = e;
    }
}

TEST_CASE("triangle_defect: exact tree metrics stay nonpositive, sweep shrinks") {
    InferredTree path;
    path.root = 0;
    path.node_ids = {0, 1, 2, 3};
    path.edges = {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 1.0}};
    auto m = exact_metric(path);
    CHECK(triangle_defect(m, 2.0) <= 0.0);

    // 2-node matrix: vacuous quantification
    InferredTree two;
    two.root = 0;
    two.node_ids = {0, 1};
    two.edges = {{0, 1, 1.0}};
    CHECK(triangle_defect(exact_metric(two), 1.0) == -std::numeric_limits<double>::infinity());

    const auto emb = collinear_chain(0.005);
    auto defect_at = [&](double sigma) {
        auto dm = delta_matrix(emb, make_kernel(sigma, sigma));
        return triangle_defect(dm, edge_delta_sup(emb.tree, dm));
    };
    CHECK(defect_at(0.05) < defect_at(0.4));
}

TEST_CASE("four_point_defect: tree metrics pass, random symmetric matrices fail") {
    InferredTree t;
    t.root = 0;
    t.node_ids = {0, 1, 2, 3, 4};
    t.edges = {{0, 1, 1.0}, {0, 2, 3.0}, {1, 3, 2.0}, {1, 4, 5.0}};
    CHECK(four_point_defect(exact_metric(t), 5.0) <= 0.0);

    // negative control: a generic symmetric matrix violates the condition
    Rng rng(4);
    int positive = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Matrixd v = Matrixd::Zero(5, 5);
        for (Index i = 0; i < 5; ++i)
            for (Index j = i + 1; j < 5; ++j) {
                v(i, j) = rng.uniform(0.5, 2.0);
                v(j, i) = v(i, j);
            }
        auto m = make_similarity(std::move(v), make_kernel(1.0, 1.0), {0, 1, 2, 3, 4});
        if (four_point_defect(m, 1.0) > 0.0) ++positive;
    }
    CHECK(positive >= 18);

    // defect shrinks along the sigma ladder on an 8-node tree
    EmbedParams<double> params;
    auto tree = random_tree(8, 3, 5);
    auto emb = embed(tree, 3, params, 5);
    auto defect_at = [&](double sigma) {
        auto fine = resample_embedding(emb, sigma / 5.0);
        auto dm = delta_matrix(fine, make_kernel(sigma, sigma));
        return four_point_defect(dm, edge_delta_sup(tree, dm));
    };
    CHECK(defect_at(0.05) < defect_at(0.4));
}

TEST_CASE("lemma_probe: configuration detection and kernel decay") {
    const auto chain = collinear_chain(0.01);
    const auto star = right_angle_star(0.01);

    // chain configuration, collinear edges: ratio shrinks with sigma and
    // stays in (0, 1) once the norms dominate the cross term
    const double c1 = lemma_probe(chain, 0, 1, 2, make_kernel(0.2, 0.2));
    const double c2 = lemma_probe(chain, 0, 1, 2, make_kernel(0.05, 0.05));
    CHECK(c2 < c1);
    CHECK(c2 > 0.0);
    CHECK(c1 < 1.0);

    // branching configuration at 90 degrees
    const double b1 = lemma_probe(star, 0, 1, 2, make_kernel(0.2, 0.2));
    const double b2 = lemma_probe(star, 0, 1, 2, make_kernel(0.05, 0.05));
    CHECK(b2 <= b1);

    // edges whose bulk lies far apart relative to sigma (right-angle turn,
    // lengths >> sigma): kernel decay drives the ratio below 1e-6
    Matrixd pos(3, 2);
    pos << 0, 0, 1, 0, 1, 1;
    auto far = straight_embedding(make_tree(0, {-1, 0, 1}), std::move(pos), 0.005);
    CHECK(lemma_probe(far, 0, 1, 2, make_kernel(0.01, 0.01)) < 1e-6);

    CHECK_THROWS_AS(lemma_probe(chain, 2, 1, 0, make_kernel(0.1, 0.1)), invalid_input);
    CHECK_THROWS_AS(lemma_probe(star, 1, 0, 2, make_kernel(0.1, 0.1)), invalid_input);
}

TEST_CASE("convergence_sweep: shape, determinism, monotone statistics") {
    EmbedParams<double> params;
    auto tree = random_tree(10, 3, 7);
    auto emb = embed(tree, 3, params, 7);

    auto single = convergence_sweep<double>(emb, {0.1}, 1.0);
    REQUIRE(single.size() == 1);
    CHECK(single[0].sigma_x == 0.1);
    CHECK(single[0].sigma_t == 0.1);

    const std::vector<double> ladder{0.4, 0.2, 0.1, 0.05};
    auto rows = convergence_sweep(emb, ladder, 1.0, 2);
    auto rows2 = convergence_sweep(emb, ladder, 1.0, 2);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].max_decomp_err == rows2[i].max_decomp_err);
        CHECK(rows[i].triangle_defect == rows2[i].triangle_defect);
        CHECK(rows[i].four_point_defect == rows2[i].four_point_defect);
        CHECK(rows[i].max_lemma_ratio == rows2[i].max_lemma_ratio);
    }
    CHECK(rows.back().max_decomp_err < rows.front().max_decomp_err);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].max_decomp_err <= rows[i - 1].max_decomp_err * 1.05 + 1e-12);
        CHECK(rows[i].triangle_defect <= rows[i - 1].triangle_defect + 0.05 * std::abs(rows[i - 1].triangle_defect) + 1e-12);
        CHECK(rows[i].four_point_defect <= rows[i - 1].four_point_defect + 0.05 * std::abs(rows[i - 1].four_point_defect) + 1e-12);
        CHECK(rows[i].max_lemma_ratio <= rows[i - 1].max_lemma_ratio * 1.05 + 1e-12);
    }

    CHECK_THROWS_AS(convergence_sweep<double>(emb, {0.1, 0.2}, 1.0), invalid_input);
    CHECK_THROWS_AS(convergence_sweep<double>(emb, {0.2, -0.1}, 1.0), invalid_input);
    CHECK_THROWS_AS(convergence_sweep<double>(emb, {}, 1.0), invalid_input);
}

TEST_CASE("similarity matrix validation") {
    Matrixd good = Matrixd::Zero(2, 2);
    good(0, 1) = good(1, 0) = 1.5;
    CHECK_NOTHROW(make_similarity(good, make_kernel(1.0, 1.0), {0, 1}));

    Matrixd asym = good;
    asym(0, 1) = 2.0;
    CHECK_THROWS_AS(make_similarity(asym, make_kernel(1.0, 1.0), {0, 1}), invalid_input);

    Matrixd diag = good;
    diag(0, 0) = 0.1;
    CHECK_THROWS_AS(make_similarity(diag, make_kernel(1.0, 1.0), {0, 1}), invalid_input);

    Matrixd neg = good;
    neg(0, 1) = neg(1, 0) = -1.0;
    CHECK_THROWS_AS(make_similarity(neg, make_kernel(1.0, 1.0), {0, 1}), invalid_input);
}
