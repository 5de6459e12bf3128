#pragma once

// Spectral splitting of a linear map along a circle of radius rho, plus the
// adapted (Lyapunov) norms in which the restricted blocks expand/contract at
// certified rates.

#include <vector>

#include "lipdyn/common.hpp"

namespace lipdyn {

struct SplitLinearMap {
    Mat matrix;   // d x d, real
    double rho = 1.0;

    Mat basis_u;  // d x d_u, orthonormal columns spanning the unstable subspace
    Mat basis_s;  // d x d_s
    Mat proj_u;   // spectral projection onto X_u along X_s
    Mat proj_s;

    double a = 0.0;  // > rho, lower bound (with margin) on unstable moduli
    double b = 0.0;  // in (0, rho), upper bound (with margin) on stable moduli
    double margin_frac = 0.01;  // fraction of the gap to rho consumed by the margin

    int dim() const { return static_cast<int>(matrix.rows()); }
    int dim_u() const { return static_cast<int>(basis_u.cols()); }
    int dim_s() const { return static_cast<int>(basis_s.cols()); }

    // Restrictions of the map to each subspace in the orthonormal bases.
    Mat block_u() const { return basis_u.transpose() * matrix * basis_u; }
    Mat block_s() const { return basis_s.transpose() * matrix * basis_s; }
};

// split_spectrum: separate spectrum across the circle |z| = rho.
// Throws EigenvalueOnCircle if some eigenvalue has |lambda - rho| <= gap_tol in
// modulus, NonConvergedEigensolve if the Schur iteration fails.
SplitLinearMap split_spectrum(const Mat& matrix, double rho, double gap_tol = 1e-8);

struct AdaptedNorm {
    // Cached split data (bases and projections) so the norm is self-contained.
    Mat basis_u, basis_s, proj_u, proj_s;
    double rate_u = 0.0, rate_s = 0.0;
    int depth_u = 0, depth_s = 0;
    double equiv_lo = 1.0, equiv_hi = 1.0;  // vs Euclidean on the full space

    // scaled_u[n] = rate_u^n * Mu^{-n}, scaled_s[n] = rate_s^{-n} * Ms^n.
    std::vector<Mat> scaled_u, scaled_s;

    int dim_u() const { return static_cast<int>(basis_u.cols()); }
    int dim_s() const { return static_cast<int>(basis_s.cols()); }

    Vec coords_u(const Vec& x) const { return basis_u.transpose() * (proj_u * x); }
    Vec coords_s(const Vec& x) const { return basis_s.transpose() * (proj_s * x); }
    Vec from_coords(const Vec& cu, const Vec& cs) const {
        return basis_u * cu + basis_s * cs;
    }

    // Adapted norms on subspace coordinates. ||Mu^{-1}|| <= 1/rate_u and
    // ||Ms|| <= rate_s hold in these norms by construction.
    double norm_u(const Vec& coords) const;
    double norm_s(const Vec& coords) const;
    NormFn norm_u_fn() const {
        return [this](const Vec& c) { return norm_u(c); };
    }
    NormFn norm_s_fn() const {
        return [this](const Vec& c) { return norm_s(c); };
    }

    double operator()(const Vec& x) const;  // max of the two component norms
    NormFn full_fn() const {
        return [this](const Vec& x) { return (*this)(x); };
    }
};

// build_adapted_norm: requires spectral_radius(Ls) < rate_s < rho and
// rho < rate_u < min-modulus of the unstable block. Iterate depth is the
// smallest making the truncated sup-norm contract at the requested rate;
// throws DepthOverflow past depth_cap, RateOutsideSpectralGap on bad rates.
AdaptedNorm build_adapted_norm(const SplitLinearMap& split, double rate_u, double rate_s,
                               int depth_cap = 10000);
inline AdaptedNorm build_adapted_norm(const SplitLinearMap& split) {
    return build_adapted_norm(split, split.a, split.b);
}

inline double eval_adapted_norm(const AdaptedNorm& norm, const Vec& x) {
    if (!all_finite(x)) fail("NonFiniteInput", "eval_adapted_norm: non-finite vector");
    return norm(x);
}

// a/(a-1) + 1/(1-b), the operator bound for (I-L)^{-1} in the adapted norm.
// Degenerate subspaces drop their term. Throws NotHyperbolicAtUnitCircle
// unless b < 1 < a (with the convention that an absent side imposes nothing).
double resolvent_bound(double a, double b, int dim_u = 1, int dim_s = 1);

}  // namespace lipdyn
