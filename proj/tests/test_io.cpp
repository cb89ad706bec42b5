#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <treevar/io.hpp>

using namespace treevar;

namespace {

EmbeddedTree<double> demo_tree() {
    EmbedParams<double> params;
    return embed(random_tree(7, 3, 21), 3, params, 21);
}

} // namespace

TEST_CASE("curve JSON round trip and offending-index reporting") {
    Matrixd pts(3, 2);
    pts << 0, 0, 1.25, -0.5, 2, 3;
    auto c = make_curve(std::move(pts));
    auto back = io::curve_from_json(io::curve_to_json(c));
    CHECK(back.points == c.points);

    CHECK_THROWS_WITH_AS(io::curve_from_json(R"({"dim": 2, "points": [[0,0],[1],[2,2]]})"),
                         doctest::Contains("point 1"), invalid_input);
    CHECK_THROWS_WITH_AS(io::curve_from_json(R"({"dim": 2, "points": [[0,0],[0,0]]})"),
                         doctest::Contains("points 0 and 1"), invalid_input);
    CHECK_THROWS_AS(io::curve_from_json("not json"), invalid_input);
    CHECK_THROWS_AS(io::curve_from_json(R"({"points": [[0,0],[1,1]]})"), invalid_input);
}

TEST_CASE("tree JSON round trip preserves geometry bytes") {
    auto emb = demo_tree();
    const std::string text = io::tree_to_json(emb);
    auto back = io::tree_from_json(text);
    CHECK(back.tree.parent == emb.tree.parent);
    CHECK(back.tree.root == emb.tree.root);
    CHECK(back.positions == emb.positions);
    for (int v = 0; v < emb.node_count(); ++v) {
        if (v == emb.tree.root) continue;
        CHECK(back.edge_to(v).points == emb.edge_to(v).points);
    }
    // writing the reloaded tree reproduces the file byte for byte
    CHECK(io::tree_to_json(back) == text);

    CHECK_THROWS_WITH_AS(io::tree_from_json(R"({"dim":2,"root":0,"parent":[-1,0],"positions":[[0,0],[1,0]],
        "edges":[{"from":1,"to":0,"points":[[0,0],[1,0]]}]})"),
                         doctest::Contains("does not match the parent array"), invalid_input);
}

TEST_CASE("cells and inferred-tree JSON round trips") {
    auto emb = demo_tree();
    auto cells = sample_cells<double>(emb, 3, 0.01, 0.02, 1.0, 5);
    auto back = io::cells_from_json(io::cells_to_json(cells, emb.dim()));
    REQUIRE(back.size() == cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(back[i].position == cells[i].position);
        CHECK(back[i].velocity == cells[i].velocity);
    }

    InferredTree t;
    t.root = 0;
    t.node_ids = {0, 1, 2};
    t.edges = {{0, 1, 0.5}, {1, 2, 0.25}};
    auto t2 = io::inferred_from_json(io::inferred_to_json(t));
    CHECK(t2.root == t.root);
    CHECK(t2.node_ids == t.node_ids);
    REQUIRE(t2.edges.size() == 2);
    CHECK(t2.edges[0].weight == 0.5);

    // cycles rejected on read
    CHECK_THROWS_AS(io::inferred_from_json(
                        R"({"root":0,"nodes":[0,1,2],"edges":[{"from":0,"to":1,"weight":1},{"from":1,"to":0,"weight":1}]})"),
                    invalid_input);
}

TEST_CASE("matrix CSV: lossless round trip, symmetric re-read, malformed input") {
    auto emb = demo_tree();
    auto m = delta_matrix(emb, make_kernel(0.1, 0.1));
    const std::string csv = io::similarity_to_csv(m);
    auto back = io::similarity_from_csv(csv, m.params);
    CHECK(back.values == m.values);
    CHECK(back.node_ids == m.node_ids);
    CHECK(back.values == back.values.transpose().eval());

    CHECK_THROWS_AS(io::matrix_from_csv("0,1\n0,1,2\n1,0,3\n"), invalid_input);
    CHECK_THROWS_AS(io::matrix_from_csv("a,b\n0,1\n1,0\n"), invalid_input);
    CHECK_THROWS_AS(io::matrix_from_csv("0,1\n0,x\n1,0\n"), invalid_input);
    // asymmetric values pass matrix_from_csv but fail the similarity reader
    CHECK_THROWS_AS(io::similarity_from_csv("0,1\n0,2\n1,0\n", make_kernel(1.0, 1.0)), invalid_input);
}

TEST_CASE("sweep and recovery CSV formats") {
    auto emb = demo_tree();
    auto rows = convergence_sweep<double>(emb, {0.2, 0.1}, 1.0);
    const std::string csv = io::sweep_to_csv(rows);
    auto back = io::sweep_from_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].sigma_x == rows[i].sigma_x);
        CHECK(back[i].max_decomp_err == rows[i].max_decomp_err);
        CHECK(back[i].triangle_defect == rows[i].triangle_defect);
        CHECK(back[i].four_point_defect == rows[i].four_point_defect);
        CHECK(back[i].max_lemma_ratio == rows[i].max_lemma_ratio);
    }
    CHECK_THROWS_AS(io::sweep_from_csv("wrong,header\n"), invalid_input);

    std::vector<RecoveryRow> rec{{0, 0.1, true, 0.01}, {1, 0.1, false, 0.5}};
    const std::string rc = io::recovery_to_csv(rec);
    CHECK(rc.find("trial,sigma,success,four_point_defect") == 0);
    CHECK(rc.find("0,0.1") != std::string::npos);
    CHECK(rc.find(",1,") != std::string::npos);
    CHECK(rc.find(",0,") != std::string::npos);
}
