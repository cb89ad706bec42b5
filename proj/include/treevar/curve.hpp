#pragma once

#include "treevar/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace treevar {

/// Oriented polygonal chain in R^n. Rows of `points` are the vertices in
/// traversal order; every consecutive pair must be distinct so each segment
/// has strictly positive length.
template <typename Scalar>
struct PolygonalCurve {
    MatrixX<Scalar> points; // point_count x dim

    Index dim() const { return points.cols(); }
    Index point_count() const { return points.rows(); }
    Index segment_count() const { return points.rows() - 1; }

    RowVectorX<Scalar> front() const { return points.row(0); }
    RowVectorX<Scalar> back() const { return points.row(points.rows() - 1); }
};

/// Validates the curve invariants and reports the first offending vertex.
template <typename Scalar>
PolygonalCurve<Scalar> make_curve(MatrixX<Scalar> points) {
    if (points.rows() < 2)
        throw invalid_input("curve needs at least 2 points, got " + std::to_string(points.rows()));
    if (points.cols() < 1)
        throw invalid_input("curve points must have dimension >= 1");
    if (!points.allFinite())
        throw invalid_input("curve contains non-finite coordinates");
    for (Index i = 0; i + 1 < points.rows(); ++i) {
        if ((points.row(i + 1) - points.row(i)).norm() <= Scalar(0))
            throw invalid_input("zero-length segment between points " + std::to_string(i) +
                                " and " + std::to_string(i + 1));
    }
    return PolygonalCurve<Scalar>{std::move(points)};
}

template <typename Scalar>
PolygonalCurve<Scalar> make_curve(const std::vector<std::vector<Scalar>>& pts) {
    if (pts.empty()) throw invalid_input("curve needs at least 2 points, got 0");
    MatrixX<Scalar> m(static_cast<Index>(pts.size()), static_cast<Index>(pts[0].size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].size() != pts[0].size())
            throw invalid_input("point " + std::to_string(i) + " has dimension " +
                                std::to_string(pts[i].size()) + ", expected " +
                                std::to_string(pts[0].size()));
        for (std::size_t j = 0; j < pts[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = pts[i][j];
    }
    return make_curve(std::move(m));
}

/// Per-segment Euclidean lengths.
template <typename Scalar>
VectorX<Scalar> segment_lengths(const PolygonalCurve<Scalar>& c) {
    return (c.points.bottomRows(c.points.rows() - 1) - c.points.topRows(c.points.rows() - 1))
        .rowwise()
        .norm();
}

template <typename Scalar>
Scalar arc_length(const PolygonalCurve<Scalar>& c) {
    return segment_lengths(c).sum();
}

/// One weighted (position, unit tangent) sample of a discretized curve.
template <typename Scalar>
struct VarifoldAtom {
    RowVectorX<Scalar> center;
    RowVectorX<Scalar> tangent;
    Scalar weight;
};

/// Discrete oriented varifold: atom i is (centers.row(i), tangents.row(i),
/// weights[i]). Tangent rows are unit length, weights strictly positive.
/// The set may be empty (the root-path convention), in which case all kernel
/// sums over it are zero.
template <typename Scalar>
struct DiscreteVarifold {
    MatrixX<Scalar> centers;  // atom_count x dim
    MatrixX<Scalar> tangents; // atom_count x dim, unit rows
    VectorX<Scalar> weights;  // atom_count, > 0

    Index atom_count() const { return centers.rows(); }
    Index dim() const { return centers.cols(); }
    bool empty() const { return centers.rows() == 0; }
    Scalar total_weight() const { return weights.sum(); }

    VarifoldAtom<Scalar> atom(Index i) const {
        return VarifoldAtom<Scalar>{centers.row(i), tangents.row(i), weights[i]};
    }

    static DiscreteVarifold zero(Index dim) {
        return DiscreteVarifold{MatrixX<Scalar>(0, dim), MatrixX<Scalar>(0, dim), VectorX<Scalar>(0)};
    }
};

/// Midpoint discretization of the oriented varifold of a curve: one atom per
/// segment with center = midpoint, tangent = normalized direction, weight =
/// segment length. Total weight equals the arc length.
template <typename Scalar>
DiscreteVarifold<Scalar> to_varifold(const PolygonalCurve<Scalar>& c) {
    const Index m = c.segment_count();
    DiscreteVarifold<Scalar> v{MatrixX<Scalar>(m, c.dim()), MatrixX<Scalar>(m, c.dim()), VectorX<Scalar>(m)};
    for (Index i = 0; i < m; ++i) {
        const RowVectorX<Scalar> d = c.points.row(i + 1) - c.points.row(i);
        const Scalar len = d.norm();
        if (!(len > Scalar(0)))
            throw invalid_input("zero-length segment at index " + std::to_string(i));
        v.centers.row(i) = Scalar(0.5) * (c.points.row(i) + c.points.row(i + 1));
        v.tangents.row(i) = d / len;
        v.weights[i] = len;
    }
    return v;
}

/// Concatenation of two varifold atom lists (the discrete image of
/// mu_{X u Y} = mu_X + mu_Y).
template <typename Scalar>
DiscreteVarifold<Scalar> merge(const DiscreteVarifold<Scalar>& a, const DiscreteVarifold<Scalar>& b) {
    if (a.dim() != b.dim() && !a.empty() && !b.empty())
        throw invalid_input("varifold dimension mismatch");
    if (a.empty()) return b;
    if (b.empty()) return a;
    DiscreteVarifold<Scalar> out{MatrixX<Scalar>(a.atom_count() + b.atom_count(), a.dim()),
                                 MatrixX<Scalar>(a.atom_count() + b.atom_count(), a.dim()),
                                 VectorX<Scalar>(a.atom_count() + b.atom_count())};
    out.centers << a.centers, b.centers;
    out.tangents << a.tangents, b.tangents;
    out.weights << a.weights, b.weights;
    return out;
}

/// Subdivides every segment into equal pieces of length <= step. All original
/// vertices (hence the arc length) are preserved; endpoints are kept exactly.
template <typename Scalar>
PolygonalCurve<Scalar> resample(const PolygonalCurve<Scalar>& c, Scalar step) {
    if (!(step > Scalar(0))) throw invalid_input("resample step must be > 0");
    const VectorX<Scalar> lens = segment_lengths(c);
    std::vector<Index> pieces(static_cast<std::size_t>(c.segment_count()));
    Index total = 1;
    for (Index i = 0; i < c.segment_count(); ++i) {
        pieces[static_cast<std::size_t>(i)] = std::max<Index>(1, static_cast<Index>(std::ceil(lens[i] / step - Scalar(1e-12))));
        total += pieces[static_cast<std::size_t>(i)];
    }
    MatrixX<Scalar> pts(total, c.dim());
    Index row = 0;
    for (Index i = 0; i < c.segment_count(); ++i) {
        const Index k = pieces[static_cast<std::size_t>(i)];
        pts.row(row++) = c.points.row(i);
        for (Index j = 1; j < k; ++j) {
            const Scalar t = Scalar(j) / Scalar(k);
            pts.row(row++) = c.points.row(i) + t * (c.points.row(i + 1) - c.points.row(i));
        }
    }
    pts.row(row) = c.points.row(c.point_count() - 1);
    return PolygonalCurve<Scalar>{std::move(pts)};
}

/// Joins two curves sharing a junction point (|a.back - b.front| <= tol,
/// absolute). The duplicate junction vertex is dropped; a's copy is kept.
template <typename Scalar>
PolygonalCurve<Scalar> concat(const PolygonalCurve<Scalar>& a, const PolygonalCurve<Scalar>& b,
                              Scalar tol = Scalar(1e-9)) {
    if (a.dim() != b.dim()) throw invalid_input("concat dimension mismatch");
    const Scalar gap = (a.back() - b.front()).norm();
    if (gap > tol)
        throw invalid_input("concat junction mismatch: gap " + std::to_string(static_cast<double>(gap)));
    MatrixX<Scalar> pts(a.point_count() + b.point_count() - 1, a.dim());
    pts.topRows(a.point_count()) = a.points;
    pts.bottomRows(b.point_count() - 1) = b.points.bottomRows(b.point_count() - 1);
    return PolygonalCurve<Scalar>{std::move(pts)};
}

/// Extracts the portion between arc-length stations s0 < s1 with interpolated
/// endpoints. Stations must lie in [0, arc_length].
template <typename Scalar>
PolygonalCurve<Scalar> subcurve(const PolygonalCurve<Scalar>& c, Scalar s0, Scalar s1) {
    const VectorX<Scalar> lens = segment_lengths(c);
    const Scalar total = lens.sum();
    const Scalar fuzz = Scalar(1e-12) * std::max(Scalar(1), total);
    if (s0 < -fuzz || s1 > total + fuzz || !(s0 < s1))
        throw invalid_input("subcurve stations out of range or inverted");
    s0 = std::clamp(s0, Scalar(0), total);
    s1 = std::clamp(s1, Scalar(0), total);

    // Cumulative arc positions of the vertices.
    std::vector<Scalar> cum(static_cast<std::size_t>(c.point_count()));
    cum[0] = Scalar(0);
    for (Index i = 0; i < c.segment_count(); ++i) cum[static_cast<std::size_t>(i + 1)] = cum[static_cast<std::size_t>(i)] + lens[i];
    cum.back() = total;

    auto station_point = [&](Scalar s) -> RowVectorX<Scalar> {
        // Segment k with cum[k] <= s <= cum[k+1]; exact vertex hits return the
        // stored vertex so identity extractions are bit-exact.
        Index k = 0;
        for (Index i = 0; i < c.segment_count(); ++i) {
            if (s >= cum[static_cast<std::size_t>(i)]) k = i;
        }
        if (s <= cum[static_cast<std::size_t>(k)]) return c.points.row(k);
        if (s >= cum[static_cast<std::size_t>(k + 1)]) return c.points.row(k + 1);
        const Scalar t = (s - cum[static_cast<std::size_t>(k)]) / lens[k];
        return c.points.row(k) + t * (c.points.row(k + 1) - c.points.row(k));
    };

    std::vector<RowVectorX<Scalar>> rows;
    rows.push_back(station_point(s0));
    for (Index v = 0; v < c.point_count(); ++v) {
        const Scalar s = cum[static_cast<std::size_t>(v)];
        if (s > s0 && s < s1) rows.push_back(c.points.row(v));
    }
    rows.push_back(station_point(s1));

    // Drop interpolation artifacts: interior points coinciding with a
    // neighbor up to arc fuzz.
    std::vector<RowVectorX<Scalar>> kept;
    kept.push_back(rows.front());
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        if ((rows[i] - kept.back()).norm() > fuzz) kept.push_back(rows[i]);
    }
    if ((rows.back() - kept.back()).norm() > fuzz)
        kept.push_back(rows.back());
    else if (kept.size() >= 2)
        kept.back() = rows.back();
    else
        kept.push_back(rows.back()); // degenerate but positive-length by precondition

    MatrixX<Scalar> pts(static_cast<Index>(kept.size()), c.dim());
    for (std::size_t i = 0; i < kept.size(); ++i) pts.row(static_cast<Index>(i)) = kept[i];
    return PolygonalCurve<Scalar>{std::move(pts)};
}

/// The same chain traversed in the opposite direction.
template <typename Scalar>
PolygonalCurve<Scalar> reverse(const PolygonalCurve<Scalar>& c) {
    return PolygonalCurve<Scalar>{c.points.colwise().reverse().eval()};
}

// --- proximity utilities -----------------------------------------------

/// Distance from point p to segment [a, b].
template <typename Scalar>
Scalar point_segment_distance(const RowVectorX<Scalar>& p, const RowVectorX<Scalar>& a,
                              const RowVectorX<Scalar>& b) {
    const RowVectorX<Scalar> d = b - a;
    const Scalar len2 = d.squaredNorm();
    if (len2 <= Scalar(0)) return (p - a).norm();
    const Scalar t = std::clamp((p - a).dot(d) / len2, Scalar(0), Scalar(1));
    return (p - (a + t * d)).norm();
}

/// Distance between segments [p0, p1] and [q0, q1] (clamped closed form).
template <typename Scalar>
Scalar segment_segment_distance(const RowVectorX<Scalar>& p0, const RowVectorX<Scalar>& p1,
                                const RowVectorX<Scalar>& q0, const RowVectorX<Scalar>& q1) {
    const RowVectorX<Scalar> u = p1 - p0, v = q1 - q0, w = p0 - q0;
    const Scalar a = u.squaredNorm(), b = u.dot(v), c = v.squaredNorm();
    const Scalar d = u.dot(w), e = v.dot(w);
    const Scalar det = a * c - b * b;
    Scalar s, t;
    if (det > Scalar(1e-14) * a * c) {
        s = std::clamp((b * e - c * d) / det, Scalar(0), Scalar(1));
    } else {
        s = Scalar(0); // near-parallel; endpoint sweep below covers the rest
    }
    t = (c > Scalar(0)) ? std::clamp((b * s + e) / c, Scalar(0), Scalar(1)) : Scalar(0);
    s = (a > Scalar(0)) ? std::clamp((b * t - d) / a, Scalar(0), Scalar(1)) : Scalar(0);
    Scalar best = (p0 + s * u - (q0 + t * v)).norm();
    best = std::min(best, point_segment_distance(p0, q0, q1));
    best = std::min(best, point_segment_distance(p1, q0, q1));
    best = std::min(best, point_segment_distance(q0, p0, p1));
    best = std::min(best, point_segment_distance(q1, p0, p1));
    return best;
}

template <typename Scalar>
Scalar point_polyline_distance(const RowVectorX<Scalar>& p, const PolygonalCurve<Scalar>& c) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < c.segment_count(); ++i)
        best = std::min(best, point_segment_distance<Scalar>(p, c.points.row(i), c.points.row(i + 1)));
    return best;
}

/// Minimum distance between two polylines (exact over segment pairs).
template <typename Scalar>
Scalar polyline_min_distance(const PolygonalCurve<Scalar>& a, const PolygonalCurve<Scalar>& b) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < a.segment_count(); ++i)
        for (Index j = 0; j < b.segment_count(); ++j)
            best = std::min(best, segment_segment_distance<Scalar>(a.points.row(i), a.points.row(i + 1),
                                                                    b.points.row(j), b.points.row(j + 1)));
    return best;
}

/// Symmetric Hausdorff distance, with the max side evaluated on arc-length
/// samples at `sample_step` (distance-to-polyline is exact per sample, so the
/// result underestimates by at most sample_step / 2).
template <typename Scalar>
Scalar polyline_hausdorff(const PolygonalCurve<Scalar>& a, const PolygonalCurve<Scalar>& b,
                          Scalar sample_step) {
    if (!(sample_step > Scalar(0))) throw invalid_input("hausdorff sample_step must be > 0");
    auto directed = [&](const PolygonalCurve<Scalar>& x, const PolygonalCurve<Scalar>& y) {
        const PolygonalCurve<Scalar> xs = resample(x, sample_step);
        Scalar worst = Scalar(0);
        for (Index i = 0; i < xs.point_count(); ++i)
            worst = std::max(worst, point_polyline_distance<Scalar>(xs.points.row(i), y));
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

} // namespace treevar
