#pragma once

#include "treevar/inference.hpp"
#include "treevar/similarity.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace treevar {

/// One synthetic "cell": a position in expression space and its velocity.
template <typename Scalar>
struct CellSample {
    RowVectorX<Scalar> position;
    RowVectorX<Scalar> velocity;
};

/// Discrete vector field with Gaussian-kernel (Nadaraya-Watson)
/// interpolation at scale `bandwidth`.
template <typename Scalar>
struct VectorFieldModel {
    MatrixX<Scalar> positions;  // cell_count x dim
    MatrixX<Scalar> velocities; // cell_count x dim
    Scalar bandwidth;

    Index cell_count() const { return positions.rows(); }
    Index dim() const { return positions.cols(); }
};

template <typename Scalar>
VectorFieldModel<Scalar> make_field(const std::vector<CellSample<Scalar>>& cells, Scalar bandwidth) {
    if (cells.empty()) throw invalid_input("vector field needs at least one cell");
    if (!(bandwidth > Scalar(0))) throw invalid_input("vector field bandwidth must be positive");
    const Index dim = cells.front().position.cols();
    VectorFieldModel<Scalar> f{MatrixX<Scalar>(static_cast<Index>(cells.size()), dim),
                               MatrixX<Scalar>(static_cast<Index>(cells.size()), dim), bandwidth};
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].position.cols() != dim || cells[i].velocity.cols() != dim)
            throw invalid_input("cell " + std::to_string(i) + " has mismatched dimension");
        if (!cells[i].position.allFinite() || !cells[i].velocity.allFinite())
            throw invalid_input("cell " + std::to_string(i) + " has non-finite entries");
        f.positions.row(static_cast<Index>(i)) = cells[i].position;
        f.velocities.row(static_cast<Index>(i)) = cells[i].velocity;
    }
    return f;
}

/// Cells at uniform arc-length stations ((m + 1/2) / per_edge of each edge's
/// length), velocity = local oriented tangent * speed, with independent
/// Gaussian position/velocity noise. Deterministic per seed.
template <typename Scalar>
std::vector<CellSample<Scalar>> sample_cells(const EmbeddedTree<Scalar>& emb, int per_edge,
                                             Scalar noise_pos, Scalar noise_vel, Scalar speed,
                                             std::uint64_t seed) {
    if (per_edge < 1) throw invalid_input("sample_cells: per_edge must be >= 1");
    if (noise_pos < Scalar(0) || noise_vel < Scalar(0)) throw invalid_input("sample_cells: noise must be >= 0");
    if (!(speed > Scalar(0))) throw invalid_input("sample_cells: speed must be positive");
    Rng rng(seed);
    std::vector<CellSample<Scalar>> cells;
    for (int v = 0; v < emb.node_count(); ++v) {
        if (v == emb.tree.root) continue;
        const auto& edge = emb.edge_to(v);
        const auto samples = detail::sample_arc(edge, 2 * per_edge + 1, false);
        for (int m = 0; m < per_edge; ++m) {
            // stations (m + 1/2)/per_edge of the edge: odd indices of the grid
            const std::size_t idx = static_cast<std::size_t>(2 * m + 1);
            CellSample<Scalar> cell;
            cell.position = samples.point[idx] + noise_pos * rng.gaussian_row(edge.dim()).template cast<Scalar>();
            cell.velocity = speed * samples.tangent[idx] + noise_vel * rng.gaussian_row(edge.dim()).template cast<Scalar>();
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

template <typename Scalar>
struct FieldSample {
    RowVectorX<Scalar> velocity;
    Scalar weight_sum;
    bool underflow;
};

/// Kernel-weighted velocity average at x; a zero vector with the underflow
/// flag when every weight vanishes.
template <typename Scalar>
FieldSample<Scalar> field_at(const VectorFieldModel<Scalar>& f, const RowVectorX<Scalar>& x) {
    const VectorX<Scalar> d2 = (f.positions.rowwise() - x).rowwise().squaredNorm();
    const VectorX<Scalar> w = (-(d2.array() / (f.bandwidth * f.bandwidth))).exp();
    const Scalar total = w.sum();
    if (!(total > Scalar(1e-300)))
        return FieldSample<Scalar>{RowVectorX<Scalar>::Zero(f.dim()), total, true};
    return FieldSample<Scalar>{(w.transpose() * f.velocities) / total, total, false};
}

enum class Termination { Captured, MaxSteps, FieldUnderflow };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Captured: return "captured";
        case Termination::MaxSteps: return "max_steps";
        default: return "field_underflow";
    }
}

template <typename Scalar>
struct IntegrationResult {
    PolygonalCurve<Scalar> curve; // oriented root -> cell
    Termination cause;
    int steps;
    bool immediate; // start already inside the capture ball
};

/// Traces the cell history backward: classical RK4 on the unit-normalized
/// negative field with fixed arc step, stopping inside the capture ball
/// around the root. The returned curve is reversed into root -> cell order
/// with the root position prepended. Per-step displacement is at most
/// `step`, so the traced arc length is bounded by step * max_steps.
template <typename Scalar>
IntegrationResult<Scalar> integrate_to_root(const VectorFieldModel<Scalar>& f, RowVectorX<Scalar> start,
                                            const RowVectorX<Scalar>& root, Scalar step, int max_steps,
                                            Scalar capture_radius) {
    if (!(step > Scalar(0))) throw invalid_input("integrate_to_root: step must be positive");
    if (max_steps < 1) throw invalid_input("integrate_to_root: max_steps must be >= 1");
    if (!(capture_radius > Scalar(0))) throw invalid_input("integrate_to_root: capture radius must be positive");

    auto unit_backward = [&](const RowVectorX<Scalar>& x, RowVectorX<Scalar>& out) -> bool {
        const auto s = field_at(f, x);
        const Scalar n = s.velocity.norm();
        if (s.underflow || !(n > Scalar(1e-12))) return false;
        out = -s.velocity / n;
        return true;
    };

    std::vector<RowVectorX<Scalar>> trail{start};
    Termination cause = Termination::MaxSteps;
    int steps = 0;
    const bool immediate = (start - root).norm() <= capture_radius;
    if (immediate) {
        cause = Termination::Captured;
    } else {
        RowVectorX<Scalar> x = start, k1, k2, k3, k4;
        for (; steps < max_steps; ) {
            if (!unit_backward(x, k1) || !unit_backward(x + (step / 2) * k1, k2) ||
                !unit_backward(x + (step / 2) * k2, k3) || !unit_backward(x + step * k3, k4)) {
                cause = Termination::FieldUnderflow;
                break;
            }
            const RowVectorX<Scalar> dx = (step / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
            if (dx.norm() <= Scalar(1e-14)) { // opposing contributions cancelled
                cause = Termination::FieldUnderflow;
                break;
            }
            x += dx;
            ++steps;
            trail.push_back(x);
            if ((x - root).norm() <= capture_radius) {
                cause = Termination::Captured;
                break;
            }
        }
    }

    // assemble root -> cell
    MatrixX<Scalar> pts(static_cast<Index>(trail.size()) + 1, start.cols());
    Index row = 0;
    pts.row(row++) = root;
    for (std::size_t i = trail.size(); i-- > 0;) pts.row(row++) = trail[i];
    if (pts.rows() > 2 && (pts.row(1) - pts.row(0)).norm() <= Scalar(1e-12))
        pts = pts.bottomRows(pts.rows() - 1).eval(); // trajectory reached the root exactly
    return IntegrationResult<Scalar>{PolygonalCurve<Scalar>{std::move(pts)}, cause, steps, immediate};
}

/// Full synthetic scenario configuration.
template <typename Scalar>
struct PipelineConfig {
    int per_edge = 120;             // field sampling density per edge
    Scalar noise_pos = Scalar(0);
    Scalar noise_vel = Scalar(0);
    Scalar speed = Scalar(1);
    Scalar bandwidth = Scalar(0.015);
    Scalar step = Scalar(0.01);     // integration arc step
    int max_steps = 4000;
    // 0 -> max(2 * step * speed, 2.5 * bandwidth): traced curves ride parallel
    // to the true path with a lateral offset on the bandwidth scale (straight
    // runs exert no restoring force), so the ball must cover that offset or
    // deep traces overshoot the root
    Scalar capture_radius = Scalar(0);
    bool trace_nodes_only = true;   // trace node positions; false: every cell
    bool include_root = true;       // add the empty root row to the matrix
    std::uint64_t seed = 0;
};

template <typename Scalar>
struct TraceStatus {
    int id;
    Termination cause;
    int steps;
};

template <typename Scalar>
struct PipelineResult {
    std::vector<CellSample<Scalar>> cells;       // the sampled field cells
    std::vector<TraceStatus<Scalar>> statuses;   // one per traced start
    std::vector<int> failed_ids;                 // traces that did not capture
    SimilarityMatrix<Scalar> matrix;             // over root (if any) + captured traces
    InferredTree tree;
    std::vector<std::pair<int, PolygonalCurve<Scalar>>> curves; // id -> recovered curve
};

/// Samples a velocity field on the embedding, traces every start backward to
/// the root, and runs the similarity + reconstruction pipeline over the
/// recovered curves. Traced starts are the non-root node positions
/// (trace_nodes_only) or all sampled cells; ids are node ids in the former
/// mode and cell indices in the latter (the root row uses the root node id,
/// or -1 in cell mode).
template <typename Scalar>
PipelineResult<Scalar> velocity_pipeline(const EmbeddedTree<Scalar>& emb, const PipelineConfig<Scalar>& cfg,
                                         const KernelParams<Scalar>& k, int threads = 1) {
    auto cells = sample_cells(emb, cfg.per_edge, cfg.noise_pos, cfg.noise_vel, cfg.speed, cfg.seed);
    if (cells.empty()) throw invalid_input("velocity_pipeline: tree has no edges, no cells to sample");
    const auto field = make_field(cells, cfg.bandwidth);
    const Scalar capture = cfg.capture_radius > Scalar(0)
                               ? cfg.capture_radius
                               : std::max(Scalar(2) * cfg.step * cfg.speed, Scalar(2.5) * cfg.bandwidth);
    const RowVectorX<Scalar> root_pos = emb.positions.row(emb.tree.root);

    std::vector<std::pair<int, RowVectorX<Scalar>>> starts;
    if (cfg.trace_nodes_only) {
        for (int v = 0; v < emb.node_count(); ++v)
            if (v != emb.tree.root) starts.emplace_back(v, emb.positions.row(v));
    } else {
        for (std::size_t i = 0; i < cells.size(); ++i)
            starts.emplace_back(static_cast<int>(i), cells[i].position);
    }

    PipelineResult<Scalar> out{std::move(cells), {}, {}, SimilarityMatrix<Scalar>{MatrixX<Scalar>(0, 0), k, {}}, {}, {}};
    std::vector<IntegrationResult<Scalar>> traces(starts.size(),
                                                  IntegrationResult<Scalar>{PolygonalCurve<Scalar>{}, Termination::MaxSteps, 0, false});
    parallel_for(starts.size(), threads, [&](std::size_t i) {
        traces[i] = integrate_to_root(field, starts[i].second, root_pos, cfg.step, cfg.max_steps, capture);
    });

    std::vector<DiscreteVarifold<Scalar>> vs;
    std::vector<int> ids;
    const int root_id = cfg.trace_nodes_only ? emb.tree.root : -1;
    if (cfg.include_root) {
        vs.push_back(DiscreteVarifold<Scalar>::zero(emb.dim()));
        ids.push_back(root_id);
    }
    for (std::size_t i = 0; i < starts.size(); ++i) {
        out.statuses.push_back(TraceStatus<Scalar>{starts[i].first, traces[i].cause, traces[i].steps});
        if (traces[i].cause != Termination::Captured) {
            out.failed_ids.push_back(starts[i].first);
            continue;
        }
        vs.push_back(to_varifold(traces[i].curve));
        ids.push_back(starts[i].first);
        out.curves.emplace_back(starts[i].first, traces[i].curve);
    }
    if (vs.size() < 2)
        throw numeric_error("velocity_pipeline: fewer than two usable curves (all traces failed)");

    const MatrixX<Scalar> g = gram(vs, k, threads);
    MatrixX<Scalar> d(g.rows(), g.cols());
    for (Index i = 0; i < g.rows(); ++i) {
        d(i, i) = Scalar(0);
        for (Index j = i + 1; j < g.cols(); ++j) {
            d(i, j) = detail::delta_from_gram(g, i, j);
            d(j, i) = d(i, j);
        }
    }
    out.matrix = SimilarityMatrix<Scalar>{std::move(d), k, ids};
    out.tree = reconstruct(out.matrix, cfg.include_root ? root_id : ids.front());
    return out;
}

} // namespace treevar
