#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epfield/common.hpp"
#include "epfield/linear_family.hpp"

namespace epf {

enum class Derivatives { none, first, second };
enum class ProfileMethod { analytic, finite_difference };

struct SpectrumSlice {
    double lambda = 0.0;
    Eigen::VectorXd energies;               // ascending
    std::optional<Eigen::VectorXd> d1;      // dE_k/dlambda  (Hellmann-Feynman)
    std::optional<Eigen::VectorXd> d2;      // d2E_k/dlambda2 (perturbation sum)
    std::optional<Eigen::MatrixXd> eigvecs; // columns, orthonormal

    double span() const { return energies(energies.size() - 1) - energies(0); }
};

namespace detail {

inline void solve_tridiagonal(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub,
                              bool want_vectors, double lambda, Eigen::VectorXd& evals,
                              Eigen::MatrixXd* z) {
    int n = static_cast<int>(diag.size());
    evals = diag;
    Eigen::VectorXd e = sub;
    lapack_int info;
    if (want_vectors) {
        z->resize(n, n);
        info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, evals.data(), e.data(), z->data(), n);
    } else {
        info = LAPACKE_dsterf(n, evals.data(), e.data());
    }
    if (info != 0)
        throw NumericalError("tridiagonal eigensolver failed (info=" + std::to_string(info) +
                             ", lambda=" + std::to_string(lambda) + ", n=" + std::to_string(n) + ")");
}

inline void solve_dense(const Eigen::MatrixXd& h, bool want_vectors, double lambda,
                        Eigen::VectorXd& evals, Eigen::MatrixXd* z) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.compute(h, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("dense eigensolver failed (lambda=" + std::to_string(lambda) +
                             ", n=" + std::to_string(h.rows()) + ")");
    evals = es.eigenvalues();
    if (want_vectors) *z = es.eigenvectors();
}

// V * Z without materializing dense V when the family is tridiagonal.
inline Eigen::MatrixXd apply_v(const LinearFamily& fam, const Eigen::MatrixXd& z) {
    if (fam.storage == Storage::tridiagonal) {
        int n = fam.n;
        Eigen::VectorXd vd(n), vs(std::max(0, n - 1));
        for (int i = 0; i < n; ++i) vd(i) = fam.v(i, i);
        for (int i = 0; i + 1 < n; ++i) vs(i) = fam.v(i + 1, i);
        Eigen::MatrixXd m(n, z.cols());
        for (int c = 0; c < z.cols(); ++c) {
            for (int i = 0; i < n; ++i) {
                double acc = vd(i) * z(i, c);
                if (i > 0) acc += vs(i - 1) * z(i - 1, c);
                if (i + 1 < n) acc += vs(i) * z(i + 1, c);
                m(i, c) = acc;
            }
        }
        return m;
    }
    return fam.v * z;
}

}  // namespace detail

/// Diagonalizes H(lambda). First derivatives come from the Hellmann-Feynman
/// identity d1[k] = <psi_k|V|psi_k>; second derivatives from the standard
/// perturbation sum d2[k] = 2 sum_{m != k} |<psi_m|V|psi_k>|^2 / (E_k - E_m).
/// A denominator below 1e-13 * span aborts rather than silently producing a
/// huge d2.
inline SpectrumSlice solve_slice(const LinearFamily& fam, double lambda,
                                 Derivatives want = Derivatives::none,
                                 bool keep_eigvecs = false) {
    if (!std::isfinite(lambda)) throw ConfigError("solve_slice: lambda must be finite");
    SpectrumSlice slice;
    slice.lambda = lambda;
    bool want_vectors = want != Derivatives::none || keep_eigvecs;

    Eigen::MatrixXd z;
    if (fam.storage == Storage::tridiagonal) {
        auto [diag, sub] = fam.bands_at(lambda);
        detail::solve_tridiagonal(diag, sub, want_vectors, lambda, slice.energies,
                                  want_vectors ? &z : nullptr);
    } else {
        detail::solve_dense(fam.matrix_at(lambda), want_vectors, lambda, slice.energies,
                            want_vectors ? &z : nullptr);
    }

    if (want != Derivatives::none) {
        int n = fam.n;
        Eigen::MatrixXd vz = detail::apply_v(fam, z);
        Eigen::VectorXd d1(n);
        for (int k = 0; k < n; ++k) d1(k) = z.col(k).dot(vz.col(k));
        slice.d1 = std::move(d1);

        if (want == Derivatives::second) {
            Eigen::MatrixXd w = z.transpose() * vz;  // w(m,k) = <psi_m|V|psi_k>
            double span = slice.span();
            double floor = 1e-13 * std::max(span, std::numeric_limits<double>::min());
            Eigen::VectorXd d2(n);
            for (int k = 0; k < n; ++k) {
                double acc = 0.0;
                for (int m = 0; m < n; ++m) {
                    if (m == k) continue;
                    double de = slice.energies(k) - slice.energies(m);
                    if (std::abs(de) < floor)
                        throw NumericalError(
                            "solve_slice: near-degenerate pair (" + std::to_string(k) + "," +
                            std::to_string(m) + ") at lambda=" + std::to_string(lambda) +
                            " makes the second-derivative sum ill-defined");
                    acc += w(m, k) * w(m, k) / de;
                }
                d2(k) = 2.0 * acc;
            }
            slice.d2 = std::move(d2);
        }
    }
    if (keep_eigvecs) slice.eigvecs = std::move(z);
    return slice;
}

// ---------------------------------------------------------------------------
// Grid-sampled spectra. Columns of the matrices are grid points; a table is
// computed once per family/grid and then serves every level.
// ---------------------------------------------------------------------------

struct SpectrumTable {
    std::vector<double> grid;
    Eigen::MatrixXd energies;            // n x m
    std::optional<Eigen::MatrixXd> d1;   // n x m
    std::optional<Eigen::MatrixXd> d2;   // n x m
};

inline SpectrumTable build_table(const LinearFamily& fam, const std::vector<double>& grid,
                                 Derivatives want = Derivatives::none, int threads = 0) {
    SpectrumTable table;
    table.grid = grid;
    std::size_t m = grid.size();
    table.energies.resize(fam.n, static_cast<Eigen::Index>(m));
    if (want != Derivatives::none) table.d1.emplace(fam.n, static_cast<Eigen::Index>(m));
    if (want == Derivatives::second) table.d2.emplace(fam.n, static_cast<Eigen::Index>(m));

    parallel_for(m, threads, [&](std::size_t j) {
        SpectrumSlice s = solve_slice(fam, grid[j], want);
        table.energies.col(static_cast<Eigen::Index>(j)) = s.energies;
        if (table.d1) table.d1->col(static_cast<Eigen::Index>(j)) = *s.d1;
        if (table.d2) table.d2->col(static_cast<Eigen::Index>(j)) = *s.d2;
    });
    return table;
}

/// Sampled log-potential / force / curvature of one level over a lambda grid.
struct CoulombProfile {
    int level_k = 0;
    double x = 0.0;  // excitation ratio k / n
    std::vector<double> grid;
    std::vector<double> U;
    std::vector<double> F;
    std::vector<double> C;
    ProfileMethod method = ProfileMethod::analytic;
};

namespace detail {

inline void check_gaps(const SpectrumTable& t, int k, std::size_t j, double omega) {
    (void)omega;
    int n = static_cast<int>(t.energies.rows());
    double span = t.energies(n - 1, static_cast<Eigen::Index>(j)) - t.energies(0, static_cast<Eigen::Index>(j));
    for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        double gap = std::abs(t.energies(l, static_cast<Eigen::Index>(j)) -
                              t.energies(k, static_cast<Eigen::Index>(j)));
        if (gap == 0.0)
            throw NumericalError("zero level gap at lambda=" + std::to_string(t.grid[j]) +
                                 " between levels " + std::to_string(k) + " and " + std::to_string(l));
        if (gap < 1e-14 * span)
            throw NumericalError("near-exact degeneracy at lambda=" + std::to_string(t.grid[j]) +
                                 " (levels " + std::to_string(k) + "," + std::to_string(l) +
                                 "); reduce to an irreducible subspace before profiling");
    }
}

inline double u_at(const SpectrumTable& t, int k, std::size_t j, double omega) {
    int n = static_cast<int>(t.energies.rows());
    double acc = 0.0;
    for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        acc += std::log(std::abs(t.energies(l, static_cast<Eigen::Index>(j)) -
                                 t.energies(k, static_cast<Eigen::Index>(j))));
    }
    return -acc / omega;
}

inline double f_analytic_at(const SpectrumTable& t, int k, std::size_t j, double omega) {
    int n = static_cast<int>(t.energies.rows());
    auto col = static_cast<Eigen::Index>(j);
    double acc = 0.0;
    for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        double de = t.energies(l, col) - t.energies(k, col);
        double dd = (*t.d1)(l, col) - (*t.d1)(k, col);
        acc += dd / de;
    }
    return acc / omega;
}

inline double c_analytic_at(const SpectrumTable& t, int k, std::size_t j, double omega) {
    int n = static_cast<int>(t.energies.rows());
    auto col = static_cast<Eigen::Index>(j);
    double acc = 0.0;
    for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        double de = t.energies(l, col) - t.energies(k, col);
        double dd1 = (*t.d1)(l, col) - (*t.d1)(k, col);
        double dd2 = (*t.d2)(l, col) - (*t.d2)(k, col);
        double r = dd1 / de;
        acc += dd2 / de - r * r;
    }
    return acc / omega;
}

// three-point stencils on a possibly nonuniform grid
inline double deriv3(double x0, double x1, double x2, double f0, double f1, double f2, double at) {
    double w0 = (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2));
    double w1 = (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2));
    double w2 = (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1));
    return w0 * f0 + w1 * f1 + w2 * f2;
}

inline double second3(double x0, double x1, double x2, double f0, double f1, double f2) {
    return 2.0 * (f0 / ((x0 - x1) * (x0 - x2)) + f1 / ((x1 - x0) * (x1 - x2)) +
                  f2 / ((x2 - x0) * (x2 - x1)));
}

}  // namespace detail

/// U_k only. Shared implementation for both methods.
inline CoulombProfile profile_u(const SpectrumTable& table, const LinearFamily& fam, int k) {
    if (k < 0 || k >= fam.n) throw ConfigError("profile: level index out of range");
    CoulombProfile p;
    p.level_k = k;
    p.x = static_cast<double>(k) / fam.n;
    p.grid = table.grid;
    p.U.resize(table.grid.size());
    for (std::size_t j = 0; j < table.grid.size(); ++j) {
        detail::check_gaps(table, k, j, fam.omega);
        p.U[j] = detail::u_at(table, k, j, fam.omega);
    }
    return p;
}

/// Adds F (and C when requested) to a U profile.
///   analytic          F from Hellmann-Feynman slopes, C from the
///                     second-order perturbation sums
///   finite_difference F = -dU/dlambda and C = -d2U/dlambda2 by three-point
///                     stencils on the sampled grid (one-sided at the ends)
inline CoulombProfile profile_ufc(const SpectrumTable& table, const LinearFamily& fam, int k,
                                  ProfileMethod method, bool with_c = true) {
    CoulombProfile p = profile_u(table, fam, k);
    p.method = method;
    std::size_t m = p.grid.size();
    if (m < 3) throw ConfigError("profile: need at least 3 grid points for F/C");
    p.F.resize(m);
    if (with_c) p.C.resize(m);

    if (method == ProfileMethod::analytic) {
        if (!table.d1) throw ConfigError("profile: analytic method requires first derivatives");
        if (with_c && !table.d2) throw ConfigError("profile: analytic C requires second derivatives");
        for (std::size_t j = 0; j < m; ++j) {
            p.F[j] = detail::f_analytic_at(table, k, j, fam.omega);
            if (with_c) p.C[j] = detail::c_analytic_at(table, k, j, fam.omega);
        }
        return p;
    }

    for (std::size_t j = 0; j < m; ++j) {
        std::size_t c = std::min(std::max<std::size_t>(j, 1), m - 2);
        const auto& g = p.grid;
        p.F[j] = -detail::deriv3(g[c - 1], g[c], g[c + 1], p.U[c - 1], p.U[c], p.U[c + 1], g[j]);
        if (with_c) p.C[j] = -detail::second3(g[c - 1], g[c], g[c + 1], p.U[c - 1], p.U[c], p.U[c + 1]);
    }
    return p;
}

inline CoulombProfile compute_U(const LinearFamily& fam, int k, const std::vector<double>& grid,
                                int threads = 0) {
    return profile_u(build_table(fam, grid, Derivatives::none, threads), fam, k);
}

inline CoulombProfile compute_F(const LinearFamily& fam, int k, const std::vector<double>& grid,
                                ProfileMethod method = ProfileMethod::analytic, int threads = 0) {
    Derivatives want = method == ProfileMethod::analytic ? Derivatives::first : Derivatives::none;
    return profile_ufc(build_table(fam, grid, want, threads), fam, k, method, /*with_c=*/false);
}

inline CoulombProfile compute_C(const LinearFamily& fam, int k, const std::vector<double>& grid,
                                ProfileMethod method = ProfileMethod::analytic, int threads = 0) {
    Derivatives want = method == ProfileMethod::analytic ? Derivatives::second : Derivatives::none;
    return profile_ufc(build_table(fam, grid, want, threads), fam, k, method, /*with_c=*/true);
}

/// Max |C_analytic - C_fd| away from the stencil-degraded edges.
inline double cross_method_deviation(const CoulombProfile& a, const CoulombProfile& b,
                                     std::size_t edge_skip = 2) {
    if (a.grid.size() != b.grid.size() || a.C.size() != b.C.size())
        throw ConfigError("cross_method_deviation: profiles not on the same grid");
    double dev = 0.0;
    for (std::size_t j = edge_skip; j + edge_skip < a.C.size(); ++j)
        dev = std::max(dev, std::abs(a.C[j] - b.C[j]));
    return dev;
}

}  // namespace epf
