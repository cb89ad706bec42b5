#include "treevar/io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace treevar::io {

using nlohmann::json;

namespace {

// CSV floats carry full round-trip precision.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw invalid_input("could not parse number '" + s + "' in " + what);
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Matrixd points_from_json(const json& arr, Index dim, const std::string& what) {
    if (!arr.is_array() || arr.empty())
        throw invalid_input(what + ": points must be a non-empty array");
    Matrixd m(static_cast<Index>(arr.size()), dim);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_array() || static_cast<Index>(arr[i].size()) != dim)
            throw invalid_input(what + ": point " + std::to_string(i) + " does not have dimension " +
                                std::to_string(dim));
        for (Index d = 0; d < dim; ++d) {
            if (!arr[i][static_cast<std::size_t>(d)].is_number())
                throw invalid_input(what + ": point " + std::to_string(i) + " has a non-numeric coordinate");
            m(static_cast<Index>(i), d) = arr[i][static_cast<std::size_t>(d)].get<double>();
        }
    }
    return m;
}

json points_to_json(const Matrixd& m) {
    json arr = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        arr.push_back(std::move(row));
    }
    return arr;
}

json parse(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw invalid_input(what + ": invalid JSON: " + e.what());
    }
}

} // namespace

std::string curve_to_json(const PolygonalCurve<double>& c) {
    json j;
    j["dim"] = c.dim();
    j["points"] = points_to_json(c.points);
    return j.dump(2) + "\n";
}

PolygonalCurve<double> curve_from_json(const std::string& text) {
    const json j = parse(text, "curve");
    if (!j.contains("dim") || !j["dim"].is_number_integer())
        throw invalid_input("curve: missing integer field 'dim'");
    if (!j.contains("points")) throw invalid_input("curve: missing field 'points'");
    const Index dim = j["dim"].get<Index>();
    if (dim < 1) throw invalid_input("curve: dim must be >= 1");
    return make_curve(points_from_json(j["points"], dim, "curve"));
}

std::string tree_to_json(const EmbeddedTree<double>& emb) {
    json j;
    j["dim"] = emb.dim();
    j["root"] = emb.tree.root;
    j["parent"] = emb.tree.parent;
    j["positions"] = points_to_json(emb.positions);
    json edges = json::array();
    for (int v = 0; v < emb.node_count(); ++v) {
        if (v == emb.tree.root) continue;
        json e;
        e["from"] = emb.tree.parent[static_cast<std::size_t>(v)];
        e["to"] = v;
        e["points"] = points_to_json(emb.edge_to(v).points);
        edges.push_back(std::move(e));
    }
    j["edges"] = std::move(edges);
    return j.dump(2) + "\n";
}

EmbeddedTree<double> tree_from_json(const std::string& text) {
    const json j = parse(text, "tree");
    for (const char* field : {"dim", "root", "parent", "positions", "edges"})
        if (!j.contains(field)) throw invalid_input(std::string("tree: missing field '") + field + "'");
    const Index dim = j["dim"].get<Index>();
    const int root = j["root"].get<int>();
    std::vector<int> parent;
    for (std::size_t i = 0; i < j["parent"].size(); ++i) {
        if (!j["parent"][i].is_number_integer())
            throw invalid_input("tree: parent[" + std::to_string(i) + "] is not an integer");
        parent.push_back(j["parent"][i].get<int>());
    }
    RootedTree tree = make_tree(root, std::move(parent));
    Matrixd positions = points_from_json(j["positions"], dim, "tree positions");
    if (positions.rows() != tree.node_count())
        throw invalid_input("tree: positions row count " + std::to_string(positions.rows()) +
                            " does not match node count " + std::to_string(tree.node_count()));
    std::vector<std::optional<PolygonalCurve<double>>> curves(static_cast<std::size_t>(tree.node_count()));
    for (std::size_t i = 0; i < j["edges"].size(); ++i) {
        const json& e = j["edges"][i];
        for (const char* field : {"from", "to", "points"})
            if (!e.contains(field))
                throw invalid_input("tree: edge " + std::to_string(i) + " missing field '" + field + "'");
        const int from = e["from"].get<int>();
        const int to = e["to"].get<int>();
        if (to < 0 || to >= tree.node_count() || tree.parent[static_cast<std::size_t>(to)] != from)
            throw invalid_input("tree: edge " + std::to_string(i) + " (" + std::to_string(from) + " -> " +
                                std::to_string(to) + ") does not match the parent array");
        if (curves[static_cast<std::size_t>(to)])
            throw invalid_input("tree: duplicate edge into node " + std::to_string(to));
        curves[static_cast<std::size_t>(to)] =
            make_curve(points_from_json(e["points"], dim, "tree edge " + std::to_string(i)));
    }
    return make_embedding<double>(std::move(tree), std::move(positions), std::move(curves));
}

std::string cells_to_json(const std::vector<CellSample<double>>& cells, Index dim) {
    json j;
    j["dim"] = dim;
    json arr = json::array();
    for (const auto& c : cells) {
        json e;
        json p = json::array(), v = json::array();
        for (Index d = 0; d < c.position.cols(); ++d) p.push_back(c.position[d]);
        for (Index d = 0; d < c.velocity.cols(); ++d) v.push_back(c.velocity[d]);
        e["p"] = std::move(p);
        e["v"] = std::move(v);
        arr.push_back(std::move(e));
    }
    j["cells"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::vector<CellSample<double>> cells_from_json(const std::string& text) {
    const json j = parse(text, "cells");
    if (!j.contains("dim") || !j.contains("cells")) throw invalid_input("cells: missing 'dim' or 'cells'");
    const Index dim = j["dim"].get<Index>();
    std::vector<CellSample<double>> out;
    for (std::size_t i = 0; i < j["cells"].size(); ++i) {
        const json& e = j["cells"][i];
        if (!e.contains("p") || !e.contains("v") || static_cast<Index>(e["p"].size()) != dim ||
            static_cast<Index>(e["v"].size()) != dim)
            throw invalid_input("cells: cell " + std::to_string(i) + " fields 'p'/'v' must have dimension " +
                                std::to_string(dim));
        CellSample<double> c{RowVectord(dim), RowVectord(dim)};
        for (Index d = 0; d < dim; ++d) {
            c.position[d] = e["p"][static_cast<std::size_t>(d)].get<double>();
            c.velocity[d] = e["v"][static_cast<std::size_t>(d)].get<double>();
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::string inferred_to_json(const InferredTree& t) {
    json j;
    j["root"] = t.root;
    j["nodes"] = t.node_ids;
    json edges = json::array();
    for (const auto& e : t.edges) {
        json je;
        je["from"] = e.a;
        je["to"] = e.b;
        je["weight"] = e.weight;
        edges.push_back(std::move(je));
    }
    j["edges"] = std::move(edges);
    return j.dump(2) + "\n";
}

InferredTree inferred_from_json(const std::string& text) {
    const json j = parse(text, "inferred tree");
    for (const char* field : {"root", "nodes", "edges"})
        if (!j.contains(field)) throw invalid_input(std::string("inferred tree: missing field '") + field + "'");
    InferredTree t;
    t.root = j["root"].get<int>();
    for (const auto& n : j["nodes"]) t.node_ids.push_back(n.get<int>());
    for (std::size_t i = 0; i < j["edges"].size(); ++i) {
        const json& e = j["edges"][i];
        for (const char* field : {"from", "to", "weight"})
            if (!e.contains(field))
                throw invalid_input("inferred tree: edge " + std::to_string(i) + " missing '" + field + "'");
        t.edges.push_back({e["from"].get<int>(), e["to"].get<int>(), e["weight"].get<double>()});
    }
    detail::check_inferred(t);
    return t;
}

std::string matrix_to_csv(const Matrixd& m, const std::vector<int>& ids) {
    if (static_cast<Index>(ids.size()) != m.rows() || m.rows() != m.cols())
        throw invalid_input("matrix_to_csv: id/shape mismatch");
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(ids[i]);
    }
    out += '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += fmt(m(i, j));
        }
        out += '\n';
    }
    return out;
}

std::pair<Matrixd, std::vector<int>> matrix_from_csv(const std::string& text) {
    const auto rows = lines_of(text);
    if (rows.size() < 2) throw invalid_input("matrix csv: need a header and at least one row");
    const auto header = split(rows[0], ',');
    const Index n = static_cast<Index>(header.size());
    std::vector<int> ids;
    for (const auto& h : header) {
        try {
            std::size_t used = 0;
            ids.push_back(std::stoi(h, &used));
            if (used != h.size()) throw std::invalid_argument(h);
        } catch (const std::exception&) {
            throw invalid_input("matrix csv: header entry '" + h + "' is not an integer id");
        }
    }
    if (static_cast<Index>(rows.size()) - 1 != n)
        throw invalid_input("matrix csv: expected " + std::to_string(n) + " data rows, got " +
                            std::to_string(rows.size() - 1));
    Matrixd m(n, n);
    for (Index i = 0; i < n; ++i) {
        const auto cells = split(rows[static_cast<std::size_t>(i) + 1], ',');
        if (static_cast<Index>(cells.size()) != n)
            throw invalid_input("matrix csv: row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                                " columns, expected " + std::to_string(n));
        for (Index j = 0; j < n; ++j)
            m(i, j) = parse_double(cells[static_cast<std::size_t>(j)], "matrix row " + std::to_string(i));
    }
    return {std::move(m), std::move(ids)};
}

std::string similarity_to_csv(const SimilarityMatrix<double>& m) {
    return matrix_to_csv(m.values, m.node_ids);
}

SimilarityMatrix<double> similarity_from_csv(const std::string& text, const KernelParams<double>& k) {
    auto [m, ids] = matrix_from_csv(text);
    return make_similarity(std::move(m), k, std::move(ids));
}

std::string sweep_to_csv(const std::vector<SweepRow<double>>& rows) {
    std::string out = "sigma_x,sigma_t,max_decomp_err,triangle_defect,four_point_defect,max_lemma_ratio\n";
    for (const auto& r : rows) {
        out += fmt(r.sigma_x);
        out += ',';
        out += fmt(r.sigma_t);
        out += ',';
        out += fmt(r.max_decomp_err);
        out += ',';
        out += fmt(r.triangle_defect);
        out += ',';
        out += fmt(r.four_point_defect);
        out += ',';
        out += fmt(r.max_lemma_ratio);
        out += '\n';
    }
    return out;
}

std::vector<SweepRow<double>> sweep_from_csv(const std::string& text) {
    const auto rows = lines_of(text);
    if (rows.empty() ||
        rows[0] != "sigma_x,sigma_t,max_decomp_err,triangle_defect,four_point_defect,max_lemma_ratio")
        throw invalid_input("sweep csv: bad header");
    std::vector<SweepRow<double>> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cells = split(rows[i], ',');
        if (cells.size() != 6) throw invalid_input("sweep csv: row " + std::to_string(i) + " needs 6 columns");
        SweepRow<double> r;
        r.sigma_x = parse_double(cells[0], "sweep");
        r.sigma_t = parse_double(cells[1], "sweep");
        r.max_decomp_err = parse_double(cells[2], "sweep");
        r.triangle_defect = parse_double(cells[3], "sweep");
        r.four_point_defect = parse_double(cells[4], "sweep");
        r.max_lemma_ratio = parse_double(cells[5], "sweep");
        out.push_back(r);
    }
    return out;
}

std::string recovery_to_csv(const std::vector<RecoveryRow>& rows) {
    std::string out = "trial,sigma,success,four_point_defect\n";
    for (const auto& r : rows) {
        out += std::to_string(r.trial);
        out += ',';
        out += fmt(r.sigma);
        out += ',';
        out += r.success ? "1" : "0";
        out += ',';
        out += fmt(r.four_point_defect);
        out += '\n';
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw invalid_input("cannot write file: " + path);
    out << content;
}

} // namespace treevar::io
