#include "lipdyn/spectral_split.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <limits>

namespace lipdyn {

namespace {

using Cplx = std::complex<double>;

// Swap the diagonal entries at positions (i, i+1) of the upper triangular T by
// a unitary similarity, accumulating into U. The 2x2 block [[alpha, t],[0, beta]]
// has eigenvector [t, beta - alpha] for beta; rotating it into e1 puts beta first.
void swap_adjacent(CMat& T, CMat& U, int i) {
    const Cplx alpha = T(i, i), beta = T(i + 1, i + 1), t = T(i, i + 1);
    Eigen::Vector2cd v;
    v << t, beta - alpha;
    double nv = v.norm();
    Eigen::Matrix2cd Q;
    if (nv < 1e-300) {
        Q << 0, 1, 1, 0;  // commuting diagonal block: plain permutation
    } else {
        Eigen::Vector2cd w = v / nv;
        Q.col(0) = w;
        Q.col(1) << -std::conj(w(1)), std::conj(w(0));
    }
    const int n = static_cast<int>(T.rows());
    T.block(i, 0, 2, n) = Q.adjoint() * T.block(i, 0, 2, n);
    T.block(0, i, n, 2) = T.block(0, i, n, 2) * Q;
    U.block(0, i, n, 2) = U.block(0, i, n, 2) * Q;
    T(i + 1, i) = Cplx(0, 0);
}

// Solve T11 Z - Z T22 = -T12 with both factors upper triangular and disjoint
// spectra, by forward sweep over columns with triangular back-substitution.
CMat solve_triangular_sylvester(const CMat& T11, const CMat& T22, const CMat& T12) {
    const int k = static_cast<int>(T11.rows());
    const int m = static_cast<int>(T22.rows());
    CMat Z(k, m);
    for (int j = 0; j < m; ++j) {
        CVec rhs = -T12.col(j);
        for (int i = 0; i < j; ++i) rhs += T22(i, j) * Z.col(i);
        CMat A = T11;
        A.diagonal().array() -= T22(j, j);
        Z.col(j) = A.triangularView<Eigen::Upper>().solve(rhs);
    }
    return Z;
}

Mat orthonormal_range_basis(const Mat& proj, int rank) {
    const int d = static_cast<int>(proj.rows());
    if (rank == 0) return Mat(d, 0);
    Eigen::ColPivHouseholderQR<Mat> qr(proj);
    Mat Q = qr.householderQ();
    return Q.leftCols(rank);
}

}  // namespace

SplitLinearMap split_spectrum(const Mat& matrix, double rho, double gap_tol) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
        fail("ConfigInvalid", "split_spectrum: matrix must be square and nonempty");
    if (!(rho > 0)) fail("ConfigInvalid", "split_spectrum: rho must be positive");

    const int d = static_cast<int>(matrix.rows());
    Eigen::ComplexSchur<CMat> schur(matrix.cast<Cplx>(), true);
    if (schur.info() != Eigen::Success)
        fail("NonConvergedEigensolve", "complex Schur iteration did not converge");
    CMat T = schur.matrixT();
    CMat U = schur.matrixU();

    std::vector<char> unstable(d);
    for (int i = 0; i < d; ++i) {
        double mod = std::abs(T(i, i));
        if (std::abs(mod - rho) <= gap_tol)
            fail("EigenvalueOnCircle",
                 "eigenvalue modulus " + std::to_string(mod) + " within gap_tol of rho");
        unstable[i] = mod > rho;
    }

    // Bubble unstable eigenvalues to the leading positions.
    bool moved = true;
    while (moved) {
        moved = false;
        for (int i = 0; i + 1 < d; ++i) {
            if (!unstable[i] && unstable[i + 1]) {
                swap_adjacent(T, U, i);
                std::swap(unstable[i], unstable[i + 1]);
                moved = true;
            }
        }
    }
    const int k = static_cast<int>(std::count(unstable.begin(), unstable.end(), char(1)));

    SplitLinearMap out;
    out.matrix = matrix;
    out.rho = rho;

    CMat P_T = CMat::Zero(d, d);
    if (k > 0) P_T.topLeftCorner(k, k).setIdentity();
    if (k > 0 && k < d) {
        CMat Z = solve_triangular_sylvester(T.topLeftCorner(k, k),
                                            T.bottomRightCorner(d - k, d - k),
                                            T.topRightCorner(k, d - k));
        P_T.topRightCorner(k, d - k) = -Z;
    }
    CMat proj_u_c = U * P_T * U.adjoint();
    if (proj_u_c.imag().cwiseAbs().maxCoeff() > 1e-8)
        fail("NonConvergedEigensolve", "spectral projection has non-real residue");
    out.proj_u = proj_u_c.real();
    out.proj_s = Mat::Identity(d, d) - out.proj_u;
    out.basis_u = orthonormal_range_basis(out.proj_u, k);
    out.basis_s = orthonormal_range_basis(out.proj_s, d - k);

    double min_u = std::numeric_limits<double>::infinity();
    double max_s = 0.0;
    for (int i = 0; i < d; ++i) {
        double mod = std::abs(T(i, i));
        if (unstable[i]) min_u = std::min(min_u, mod);
        else max_s = std::max(max_s, mod);
    }
    // Margins eat 1% of each side's gap to rho; degenerate sides get midpoints.
    out.a = (k > 0) ? min_u - out.margin_frac * (min_u - rho) : 2.0 * rho;
    out.b = (k < d) ? max_s + out.margin_frac * (rho - max_s) : 0.5 * rho;
    return out;
}

double AdaptedNorm::norm_u(const Vec& coords) const {
    double m = 0.0;
    for (const Mat& S : scaled_u) m = std::max(m, (S * coords).norm());
    return m;
}

double AdaptedNorm::norm_s(const Vec& coords) const {
    double m = 0.0;
    for (const Mat& S : scaled_s) m = std::max(m, (S * coords).norm());
    return m;
}

double AdaptedNorm::operator()(const Vec& x) const {
    double m = 0.0;
    if (dim_u() > 0) m = std::max(m, norm_u(coords_u(x)));
    if (dim_s() > 0) m = std::max(m, norm_s(coords_s(x)));
    return m;
}

namespace {

double spectral_radius(const Mat& M) {
    if (M.rows() == 0) return 0.0;
    return Eigen::EigenSolver<Mat>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

double op_norm2(const Mat& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(M).singularValues()(0);
}

// Smallest D >= 0 with ||M^{D+1}|| <= rate^{D+1}; stores rate^{-n} M^n for
// n = 0..D. The truncated sup-norm then contracts by rate under M.
int build_scaled_powers(const Mat& M, double rate, int depth_cap, std::vector<Mat>& out) {
    const int n = static_cast<int>(M.rows());
    out.clear();
    out.push_back(Mat::Identity(n, n));
    Mat power = M;
    int depth = 0;
    while (op_norm2(power) > std::pow(rate, depth + 1)) {
        ++depth;
        if (depth > depth_cap)
            fail("DepthOverflow", "adapted norm depth exceeded cap " + std::to_string(depth_cap));
        out.push_back(power / std::pow(rate, depth));
        power = M * power;
    }
    // The loop pushes n = 1..depth; the final power is certified, not stored.
    return depth;
}

}  // namespace

AdaptedNorm build_adapted_norm(const SplitLinearMap& split, double rate_u, double rate_s,
                               int depth_cap) {
    AdaptedNorm norm;
    norm.basis_u = split.basis_u;
    norm.basis_s = split.basis_s;
    norm.proj_u = split.proj_u;
    norm.proj_s = split.proj_s;
    norm.rate_u = rate_u;
    norm.rate_s = rate_s;

    double hi_u = 1.0, hi_s = 1.0;
    if (split.dim_s() > 0) {
        Mat Ms = split.block_s();
        double sr = spectral_radius(Ms);
        if (!(sr < rate_s && rate_s < split.rho))
            fail("RateOutsideSpectralGap",
                 "need spectral_radius(Ls) < rate_s < rho, got sr=" + std::to_string(sr) +
                     " rate_s=" + std::to_string(rate_s) + " rho=" + std::to_string(split.rho));
        norm.depth_s = build_scaled_powers(Ms, rate_s, depth_cap, norm.scaled_s);
        for (const Mat& S : norm.scaled_s) hi_s = std::max(hi_s, op_norm2(S));
    }
    if (split.dim_u() > 0) {
        Mat Mu = split.block_u();
        Eigen::PartialPivLU<Mat> lu(Mu);
        Mat Mu_inv = lu.inverse();
        double sr_inv = spectral_radius(Mu_inv);  // = 1 / min-modulus of block_u
        if (!(sr_inv < 1.0 / rate_u && rate_u > split.rho))
            fail("RateOutsideSpectralGap",
                 "need rho < rate_u < min unstable modulus, got rate_u=" + std::to_string(rate_u) +
                     " min modulus=" + std::to_string(1.0 / std::max(sr_inv, 1e-300)));
        norm.depth_u = build_scaled_powers(Mu_inv, 1.0 / rate_u, depth_cap, norm.scaled_u);
        for (const Mat& S : norm.scaled_u) hi_u = std::max(hi_u, op_norm2(S));
    }

    // ||x||_adapted >= max_j ||pi_j x||_2 >= ||x||_2 / 2 on the full space.
    bool both = split.dim_u() > 0 && split.dim_s() > 0;
    norm.equiv_lo = both ? 0.5 : 1.0;
    norm.equiv_hi = 0.0;
    if (split.dim_u() > 0) norm.equiv_hi = std::max(norm.equiv_hi, hi_u * op_norm2(split.proj_u));
    if (split.dim_s() > 0) norm.equiv_hi = std::max(norm.equiv_hi, hi_s * op_norm2(split.proj_s));
    return norm;
}

double resolvent_bound(double a, double b, int dim_u, int dim_s) {
    double bound = 0.0;
    if (dim_u > 0) {
        if (!(a > 1.0)) fail("GapViolated", "need a > 1, got " + std::to_string(a));
        bound += a / (a - 1.0);
    }
    if (dim_s > 0) {
        if (!(b < 1.0)) fail("GapViolated", "need b < 1, got " + std::to_string(b));
        bound += 1.0 / (1.0 - b);
    }
    if (dim_u <= 0 && dim_s <= 0)
        fail("ConfigInvalid", "resolvent_bound: at least one subspace must be present");
    return bound;
}

}  // namespace lipdyn
