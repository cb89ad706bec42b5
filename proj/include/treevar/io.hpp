#pragma once

#include "treevar/inference.hpp"
#include "treevar/similarity.hpp"
#include "treevar/tree.hpp"
#include "treevar/velocity.hpp"

#include <string>
#include <vector>

namespace treevar::io {

// JSON schemas (field names fixed):
//   curve   {"dim": n, "points": [[...], ...]}
//   tree    {"dim": n, "root": r, "parent": [...], "positions": [[...]],
//            "edges": [{"from": i, "to": j, "points": [[...]]}]}
//   cells   {"dim": n, "cells": [{"p": [...], "v": [...]}]}
//   inferred{"root": r, "nodes": [...], "edges": [{"from","to","weight"}]}
// Readers validate invariants and name the first offending entry.

std::string curve_to_json(const PolygonalCurve<double>& c);
PolygonalCurve<double> curve_from_json(const std::string& text);

std::string tree_to_json(const EmbeddedTree<double>& emb);
EmbeddedTree<double> tree_from_json(const std::string& text);

std::string cells_to_json(const std::vector<CellSample<double>>& cells, Index dim);
std::vector<CellSample<double>> cells_from_json(const std::string& text);

std::string inferred_to_json(const InferredTree& t);
InferredTree inferred_from_json(const std::string& text);

/// Square matrix with a header row of integer node ids.
std::string matrix_to_csv(const Matrixd& m, const std::vector<int>& ids);
std::pair<Matrixd, std::vector<int>> matrix_from_csv(const std::string& text);

/// Similarity matrix CSV additionally checks symmetry / zero diagonal on read.
std::string similarity_to_csv(const SimilarityMatrix<double>& m);
SimilarityMatrix<double> similarity_from_csv(const std::string& text, const KernelParams<double>& k);

std::string sweep_to_csv(const std::vector<SweepRow<double>>& rows);
std::vector<SweepRow<double>> sweep_from_csv(const std::string& text);

std::string recovery_to_csv(const std::vector<RecoveryRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace treevar::io
