#pragma once

#include "treevar/curve.hpp"
#include "treevar/parallel.hpp"
#include "treevar/types.hpp"

#include <cmath>
#include <vector>

namespace treevar {

/// Bandwidths of the separable Gaussian kernel
/// k((x,t),(y,u)) = exp(-|x-y|^2 / sigma_x^2) * exp(-|t-u|^2 / sigma_t^2).
template <typename Scalar>
struct KernelParams {
    Scalar sigma_x;
    Scalar sigma_t;
};

template <typename Scalar>
KernelParams<Scalar> make_kernel(Scalar sigma_x, Scalar sigma_t) {
    if (!(sigma_x > Scalar(0)) || !std::isfinite(static_cast<double>(sigma_x)) ||
        !(sigma_t > Scalar(0)) || !std::isfinite(static_cast<double>(sigma_t)))
        throw invalid_input("kernel bandwidths must be positive and finite");
    return KernelParams<Scalar>{sigma_x, sigma_t};
}

namespace detail {

// Canonical argument order so that inner(a, b) and inner(b, a) accumulate in
// the same sequence and return equal bytes.
template <typename Scalar>
bool ordered_before(const DiscreteVarifold<Scalar>& a, const DiscreteVarifold<Scalar>& b) {
    if (a.atom_count() != b.atom_count()) return a.atom_count() < b.atom_count();
    for (Index i = 0; i < a.atom_count(); ++i) {
        for (Index d = 0; d < a.dim(); ++d) {
            if (a.centers(i, d) != b.centers(i, d)) return a.centers(i, d) < b.centers(i, d);
            if (a.tangents(i, d) != b.tangents(i, d)) return a.tangents(i, d) < b.tangents(i, d);
        }
        if (a.weights[i] != b.weights[i]) return a.weights[i] < b.weights[i];
    }
    return true; // identical content; either order gives the same sum
}

} // namespace detail

/// Kernel inner product of two discrete varifolds:
///   sum_i sum_j w_i w_j exp(-|c_i-c_j|^2/sx^2) exp(-|t_i-t_j|^2/st^2).
/// Atoms are accumulated in a canonical index order independent of argument
/// order, so symmetry is exact and equal inputs give equal bytes at any
/// caller thread count.
template <typename Scalar>
Scalar inner(const DiscreteVarifold<Scalar>& a, const DiscreteVarifold<Scalar>& b,
             const KernelParams<Scalar>& k) {
    if (a.empty() || b.empty()) return Scalar(0);
    if (a.dim() != b.dim()) throw invalid_input("inner: varifold dimension mismatch");
    const DiscreteVarifold<Scalar>& x = detail::ordered_before(a, b) ? a : b;
    const DiscreteVarifold<Scalar>& y = detail::ordered_before(a, b) ? b : a;
    const Scalar inv_sx2 = Scalar(1) / (k.sigma_x * k.sigma_x);
    const Scalar inv_st2 = Scalar(1) / (k.sigma_t * k.sigma_t);
    Scalar acc = Scalar(0);
    for (Index i = 0; i < x.atom_count(); ++i) {
        const auto dc2 = (y.centers.rowwise() - x.centers.row(i)).rowwise().squaredNorm();
        const auto dt2 = (y.tangents.rowwise() - x.tangents.row(i)).rowwise().squaredNorm();
        acc += x.weights[i] *
               ((-(dc2.array() * inv_sx2) - dt2.array() * inv_st2).exp() * y.weights.array()).sum();
    }
    return acc;
}

template <typename Scalar>
Scalar norm_sq(const DiscreteVarifold<Scalar>& a, const KernelParams<Scalar>& k) {
    return inner(a, a, k);
}

/// Squared kernel distance via the polarization identity
/// |mu_a - mu_b|^2 = |mu_a|^2 + |mu_b|^2 - 2 <mu_a, mu_b>.
/// Cancellation may drive the result negative by a few ulps; anything below
/// -1e-9 * (|mu_a|^2 + |mu_b|^2) signals a broken kernel and throws.
template <typename Scalar>
Scalar distance_sq(const DiscreteVarifold<Scalar>& a, const DiscreteVarifold<Scalar>& b,
                   const KernelParams<Scalar>& k) {
    const Scalar naa = norm_sq(a, k);
    const Scalar nbb = norm_sq(b, k);
    const Scalar nab = inner(a, b, k);
    const Scalar d2 = naa + nbb - Scalar(2) * nab;
    if (d2 < Scalar(0)) {
        if (d2 < Scalar(-1e-9) * (naa + nbb))
            throw numeric_error("distance_sq negative beyond tolerance: " + std::to_string(static_cast<double>(d2)));
        return Scalar(0);
    }
    return d2;
}

/// Pairwise inner-product matrix G[i][j] = <mu_i, mu_j>. Entries are
/// independent work units; each one is computed by the same sequential sum
/// regardless of thread count.
template <typename Scalar>
MatrixX<Scalar> gram(const std::vector<DiscreteVarifold<Scalar>>& vs, const KernelParams<Scalar>& k,
                     int threads = 1) {
    const Index n = static_cast<Index>(vs.size());
    for (const auto& v : vs)
        if (!v.empty() && !vs.front().empty() && v.dim() != vs.front().dim())
            throw invalid_input("gram: varifold dimension mismatch");
    MatrixX<Scalar> g(n, n);
    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) pairs.emplace_back(i, j);
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const Scalar v = inner(vs[static_cast<std::size_t>(i)], vs[static_cast<std::size_t>(j)], k);
        g(i, j) = v;
        g(j, i) = v;
    });
    return g;
}

/// Vertex-wise smooth perturbation phi(x) = x + eps * sin(pi * omega * <x, phase>) * direction,
/// so |phi - id|_inf = eps and |dphi - I|_F <= eps * pi * omega.
template <typename Scalar>
struct DeformationSpec {
    Scalar epsilon;
    Scalar omega;
    RowVectorX<Scalar> direction; // unit
    RowVectorX<Scalar> phase;     // unit
    RowVectorX<Scalar> offset;    // displacement generating the comparison curve
};

template <typename Scalar>
PolygonalCurve<Scalar> apply_deformation(const PolygonalCurve<Scalar>& c, const DeformationSpec<Scalar>& spec) {
    MatrixX<Scalar> pts = c.points;
    for (Index i = 0; i < pts.rows(); ++i) {
        const Scalar phase = Scalar(EIGEN_PI) * spec.omega * pts.row(i).dot(spec.phase);
        pts.row(i) += spec.epsilon * std::sin(static_cast<double>(phase)) * spec.direction;
    }
    return PolygonalCurve<Scalar>{std::move(pts)};
}

template <typename Scalar>
struct RobustnessProbe {
    Scalar deformed; // d^2(X, phi . Y)
    Scalar baseline; // d^2(X, Y)
};

/// Measures the diffeomorphic-robustness limit: Y is X translated by
/// spec.offset, and the probe returns d^2(X, phi.Y) next to d^2(X, Y). The
/// two converge as spec.epsilon -> 0.
template <typename Scalar>
RobustnessProbe<Scalar> robustness_probe(const PolygonalCurve<Scalar>& x, const DeformationSpec<Scalar>& spec,
                                         const KernelParams<Scalar>& k) {
    PolygonalCurve<Scalar> y = x;
    y.points.rowwise() += spec.offset;
    const PolygonalCurve<Scalar> y_def = apply_deformation(y, spec);
    const auto vx = to_varifold(x);
    return RobustnessProbe<Scalar>{distance_sq(vx, to_varifold(y_def), k),
                                   distance_sq(vx, to_varifold(y), k)};
}

} // namespace treevar
