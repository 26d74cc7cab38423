#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epfield/common.hpp"
#include "epfield/linear_family.hpp"
#include "epfield/spectral.hpp"

namespace epf {

using Complex = std::complex<double>;

constexpr int kCensusDimensionCeiling = 64;

/// All eigenvalues of the complex symmetric matrix h0 + Lambda * v,
/// unordered. Desk-scale only: the dimension is capped at 64.
inline std::vector<Complex> complex_spectrum(const LinearFamily& fam, Complex lambda) {
    if (fam.n > kCensusDimensionCeiling)
        throw ConfigError("complex_spectrum: dimension " + std::to_string(fam.n) +
                          " exceeds the census ceiling of " + std::to_string(kCensusDimensionCeiling));
    int n = fam.n;
    std::vector<Complex> a(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            a[static_cast<std::size_t>(j) * n + i] = Complex(fam.h0(i, j), 0.0) + lambda * fam.v(i, j);
    std::vector<Complex> w(static_cast<std::size_t>(n));
    lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n,
                                    reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                    reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1,
                                    nullptr, 1);
    if (info != 0)
        throw NumericalError("complex_spectrum: zgeev failed (info=" + std::to_string(info) + ")");
    return w;
}

/// min_{i<j} |E_i - E_j| together with the attaining pair
struct GapInfo {
    double gap = std::numeric_limits<double>::infinity();
    int i = -1, j = -1;
};

inline GapInfo min_gap(const std::vector<Complex>& evals) {
    GapInfo g;
    int n = static_cast<int>(evals.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = std::abs(evals[static_cast<std::size_t>(i)] - evals[static_cast<std::size_t>(j)]);
            if (d < g.gap) {
                g.gap = d;
                g.i = i;
                g.j = j;
            }
        }
    return g;
}

enum class EpStatus { refined, grid_only, suspect };

inline std::string to_string(EpStatus s) {
    switch (s) {
        case EpStatus::refined: return "refined";
        case EpStatus::grid_only: return "grid_only";
        default: return "suspect";
    }
}

struct ExceptionalPoint {
    Complex location;             // upper half-plane representative, Im >= 0
    int k = -1, l = -1;           // connected sheet pair (real-axis ordinals)
    double gap_residual = std::numeric_limits<double>::infinity();
    int newton_iters = 0;
    EpStatus status = EpStatus::grid_only;
};

struct CensusRegion {
    double re_lo = -0.2, re_hi = 1.2;
    double im_lo = 1e-6, im_hi = 1.5;  // scan floor and ceiling, both > 0

    double diagonal() const { return std::hypot(re_hi - re_lo, im_hi - im_lo); }
};

struct CensusPolicy {
    int re_points = 201;
    int im_points = 101;           // log-spaced rows between im_lo and im_hi
    double seed_factor = 10.0;     // minima below seed_factor * spacing * |grad g| seed Newton
    double merge_scale = 1e-8;     // merge radius = merge_scale * max(1, region diagonal)
    // status=refined when the recomputed pair gap < refine_tol * anchor span.
    // The gap of a branch point at a non-representable location floors at
    // sqrt(eps)-scale (~1e-8 relative), so tighter values are unverifiable;
    // the Newton location itself is accurate to ~1e-15.
    double refine_tol = 1e-6;
    int newton_max_iters = 128;
    int max_densify = 3;           // grid densification rounds while incomplete
    bool auto_expand = false;      // also grow the region while incomplete
    int max_expand = 6;
    bool assign = true;            // run sheet assignment on refined points
    int threads = 0;
};

struct EpCensus {
    CensusRegion region;
    std::vector<ExceptionalPoint> eps;
    int expected = 0;  // n(n-1)/2
    bool complete = false;
    int scan_rounds = 0;
};

// ---------------------------------------------------------------------------

namespace detail {

inline double anchor_span(const LinearFamily& fam, double re) {
    SpectrumSlice s = solve_slice(fam, re);
    double span = s.span();
    return span > 0.0 ? span : 1.0;
}

// Newton iteration on s(L) = (E_i - E_j)^2 for the locally minimal pair.
// Near a square-root branch point s is single-valued and analytic with a
// simple zero, so plain Newton converges quadratically.
struct NewtonResult {
    Complex location;
    double residual;
    int iters;
    bool converged;
};

inline NewtonResult newton_refine(const LinearFamily& fam, Complex seed, double span,
                                  const CensusPolicy& pol, double escape_radius) {
    auto s_at = [&](Complex z) -> Complex {
        auto evals = complex_spectrum(fam, z);
        GapInfo g = min_gap(evals);
        Complex d = evals[static_cast<std::size_t>(g.i)] - evals[static_cast<std::size_t>(g.j)];
        return d * d;
    };
    // The recomputed gap of a branch point cannot fall below ~sqrt(eps) times
    // the spectral scale unless the exact location is representable, in which
    // case the tail of the iteration walks onto it. Run until the gap is
    // essentially exact or stops improving.
    double hard_target = 1e-13 * span;
    Complex z = seed;
    double best_gap = std::numeric_limits<double>::infinity();
    Complex best_z = seed;
    int best_it = 0;
    int it = 0;
    for (; it < pol.newton_max_iters; ++it) {
        Complex s = s_at(z);
        double gap = std::sqrt(std::abs(s));
        if (gap < best_gap) {
            best_gap = gap;
            best_z = z;
            best_it = it;
        } else if (it - best_it > 8) {
            break;  // stalled at the floating-point floor
        }
        if (gap < hard_target) break;
        double h = 1e-7 * std::max(1.0, std::abs(z));
        Complex ds = (s_at(z + h) - s_at(z - h)) / (2.0 * h);
        if (ds == Complex(0.0, 0.0)) break;
        z -= s / ds;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
        if (std::abs(z - seed) > escape_radius) break;
    }
    return {best_z, best_gap, it, best_gap < pol.refine_tol * span};
}

}  // namespace detail

/// Continues all n eigenvalues from the real axis up to the EP and returns
/// the ordinals of the two that collide there. Matching between consecutive
/// steps is nearest-neighbor with a margin check; the step count doubles on
/// ambiguity. Ambiguity inside the colliding pair itself is expected at the
/// endpoint and is tolerated.
inline std::pair<std::pair<int, int>, EpStatus> assign_sheets(const LinearFamily& fam,
                                                              Complex location) {
    int n = fam.n;
    double mu = location.imag();
    double re = location.real();
    if (mu < 1e-14 * std::max(1.0, std::abs(location))) {
        // degeneracy on (or numerically on) the real axis; labels follow from
        // the hermitian spectrum right at the anchor
        auto evals = complex_spectrum(fam, location);
        GapInfo g = min_gap(evals);
        SpectrumSlice s = solve_slice(fam, re);
        // map the colliding eigenvalues to real-axis ordinals by value
        auto ordinal = [&](Complex e) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int k = 0; k < n; ++k) {
                double d = std::abs(e - Complex(s.energies(k), 0.0));
                if (d < bd) {
                    bd = d;
                    best = k;
                }
            }
            return best;
        };
        int a = ordinal(evals[static_cast<std::size_t>(g.i)]);
        int b = ordinal(evals[static_cast<std::size_t>(g.j)]);
        if (a == b) b = a + 1 < n ? a + 1 : a - 1;  // exact collision: adjacent pair
        return {{std::min(a, b), std::max(a, b)}, EpStatus::refined};
    }

    int steps = 48;
    const int max_steps = 1 << 16;
    while (true) {
        // labels[t] = position of real-axis ordinal t in the current eigenvalue list
        std::vector<Complex> tracked(static_cast<std::size_t>(n));
        {
            SpectrumSlice s = solve_slice(fam, re);
            for (int k = 0; k < n; ++k) tracked[static_cast<std::size_t>(k)] = Complex(s.energies(k), 0.0);
        }
        bool ambiguous_outside_pair = false;
        std::vector<std::pair<int, int>> ambiguous_events;

        for (int step = 1; step <= steps; ++step) {
            Complex z(re, mu * static_cast<double>(step) / steps);
            auto evals = complex_spectrum(fam, z);
            // greedy global nearest-neighbor matching
            std::vector<int> match(static_cast<std::size_t>(n), -1);
            std::vector<bool> used(static_cast<std::size_t>(n), false);
            for (int pick = 0; pick < n; ++pick) {
                double best = std::numeric_limits<double>::infinity();
                int bi = -1, bj = -1;
                for (int i = 0; i < n; ++i) {
                    if (match[static_cast<std::size_t>(i)] >= 0) continue;
                    for (int j = 0; j < n; ++j) {
                        if (used[static_cast<std::size_t>(j)]) continue;
                        double d = std::abs(tracked[static_cast<std::size_t>(i)] - evals[static_cast<std::size_t>(j)]);
                        if (d < best) {
                            best = d;
                            bi = i;
                            bj = j;
                        }
                    }
                }
                match[static_cast<std::size_t>(bi)] = bj;
                used[static_cast<std::size_t>(bj)] = true;
            }
            // margin check per label: another eigenvalue within 3x the
            // label's own step drift makes that label's match ambiguous
            for (int i = 0; i < n; ++i) {
                double drift_i = std::abs(tracked[static_cast<std::size_t>(i)] -
                                          evals[static_cast<std::size_t>(match[static_cast<std::size_t>(i)])]);
                for (int j = 0; j < n; ++j) {
                    if (j == match[static_cast<std::size_t>(i)]) continue;
                    if (std::abs(tracked[static_cast<std::size_t>(i)] - evals[static_cast<std::size_t>(j)]) <
                        3.0 * drift_i) {
                        // identify the other label claiming j
                        int other = -1;
                        for (int t = 0; t < n; ++t)
                            if (match[static_cast<std::size_t>(t)] == j) other = t;
                        ambiguous_events.emplace_back(std::min(i, other), std::max(i, other));
                    }
                }
            }
            for (int i = 0; i < n; ++i)
                tracked[static_cast<std::size_t>(i)] = evals[static_cast<std::size_t>(match[static_cast<std::size_t>(i)])];
        }

        // the answer pair: minimal mutual gap among tracked labels at the endpoint
        GapInfo g = min_gap(tracked);
        int a = std::min(g.i, g.j), b = std::max(g.i, g.j);
        for (auto& ev : ambiguous_events)
            if (!(ev.first == a && ev.second == b)) ambiguous_outside_pair = true;

        if (!ambiguous_outside_pair) return {{a, b}, EpStatus::refined};
        if (steps >= max_steps || mu / steps < 1e-6 * std::max(1.0, std::abs(location)))
            return {{a, b}, EpStatus::suspect};
        steps *= 2;
    }
}

namespace detail {

struct Seed {
    Complex location;
    double g = 0.0;
    double spacing = 0.0;
};

inline std::vector<Seed> scan_grid(const LinearFamily& fam, const CensusRegion& region,
                                   int re_points, int im_points, const CensusPolicy& pol) {
    std::vector<double> re(static_cast<std::size_t>(re_points)), im(static_cast<std::size_t>(im_points));
    for (int i = 0; i < re_points; ++i)
        re[static_cast<std::size_t>(i)] = region.re_lo + (region.re_hi - region.re_lo) * i / (re_points - 1);
    double log_lo = std::log(region.im_lo), log_hi = std::log(region.im_hi);
    for (int j = 0; j < im_points; ++j)
        im[static_cast<std::size_t>(j)] = std::exp(log_lo + (log_hi - log_lo) * j / (im_points - 1));

    Eigen::MatrixXd g(re_points, im_points);
    parallel_for(static_cast<std::size_t>(re_points) * im_points, pol.threads, [&](std::size_t idx) {
        int i = static_cast<int>(idx % static_cast<std::size_t>(re_points));
        int j = static_cast<int>(idx / static_cast<std::size_t>(re_points));
        auto evals = complex_spectrum(fam, Complex(re[static_cast<std::size_t>(i)], im[static_cast<std::size_t>(j)]));
        g(i, j) = min_gap(evals).gap;
    });

    std::vector<Seed> seeds;
    for (int i = 0; i < re_points; ++i) {
        for (int j = 0; j < im_points; ++j) {
            double center = g(i, j);
            bool is_min = true;
            std::vector<double> grads;
            double spacing = 0.0;
            for (int di = -1; di <= 1 && is_min; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    int ni = i + di, nj = j + dj;
                    if (ni < 0 || ni >= re_points || nj < 0 || nj >= im_points) continue;
                    if (g(ni, nj) < center) {
                        is_min = false;
                        break;
                    }
                    double dre = re[static_cast<std::size_t>(ni)] - re[static_cast<std::size_t>(i)];
                    double dim = im[static_cast<std::size_t>(nj)] - im[static_cast<std::size_t>(j)];
                    double dist = std::hypot(dre, dim);
                    spacing = std::max(spacing, dist);
                    grads.push_back(std::abs(g(ni, nj) - center) / dist);
                }
            }
            if (!is_min || grads.empty()) continue;
            std::nth_element(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(grads.size() / 2),
                             grads.end());
            double grad_med = grads[grads.size() / 2];
            if (center < pol.seed_factor * spacing * grad_med)
                seeds.push_back({Complex(re[static_cast<std::size_t>(i)], im[static_cast<std::size_t>(j)]),
                                 center, spacing});
        }
    }
    return seeds;
}

}  // namespace detail

/// Scans g(Lambda) = min_{i<j} |E_i - E_j| over the region, refines each
/// qualifying local minimum by Newton iteration on the squared gap of the
/// minimal pair, merges duplicates, and reports whether the census reached
/// the full count n(n-1)/2. Incompleteness triggers grid densification and
/// (optionally) region growth before being reported.
inline EpCensus scan_and_refine(const LinearFamily& fam, CensusRegion region, CensusPolicy pol = {}) {
    if (fam.n > kCensusDimensionCeiling)
        throw ConfigError("scan_and_refine: dimension exceeds census ceiling");
    if (region.im_lo <= 0.0 || region.im_hi <= region.im_lo)
        throw ConfigError("scan_and_refine: region must lie in the upper half-plane");

    EpCensus census;
    census.expected = fam.n * (fam.n - 1) / 2;

    int re_pts = pol.re_points, im_pts = pol.im_points;
    int expand_rounds = 0;
    int rounds = 0;
    while (true) {
        ++rounds;
        auto seeds = detail::scan_grid(fam, region, re_pts, im_pts, pol);

        std::vector<ExceptionalPoint> found(seeds.size());
        double escape = 2.0 * std::max(1.0, region.diagonal());
        parallel_for(seeds.size(), pol.threads, [&](std::size_t s) {
            double span = detail::anchor_span(
                fam, std::clamp(seeds[s].location.real(), region.re_lo, region.re_hi));
            auto nr = detail::newton_refine(fam, seeds[s].location, span, pol, escape);
            ExceptionalPoint ep;
            ep.newton_iters = nr.iters;
            if (nr.converged) {
                Complex z = nr.location;
                if (std::abs(z.imag()) < 1e-14 * std::max(1.0, std::abs(z)))
                    z = Complex(z.real(), 0.0);  // real-axis degeneracy (commuting pairs)
                else if (z.imag() < 0.0)
                    z = std::conj(z);  // canonical upper-half representative
                ep.location = z;
                ep.gap_residual = nr.residual;
                ep.status = EpStatus::refined;
            } else {
                ep.location = seeds[s].location;
                ep.gap_residual = seeds[s].g;
                ep.status = EpStatus::grid_only;
            }
            found[s] = ep;
        });

        // merge: refined first, then by residual; duplicates within the merge
        // radius collapse onto the best representative
        std::stable_sort(found.begin(), found.end(), [](const ExceptionalPoint& a, const ExceptionalPoint& b) {
            if ((a.status == EpStatus::refined) != (b.status == EpStatus::refined))
                return a.status == EpStatus::refined;
            return a.gap_residual < b.gap_residual;
        });
        double merge_radius = pol.merge_scale * std::max(1.0, region.diagonal());
        std::vector<ExceptionalPoint> merged;
        for (const auto& ep : found) {
            bool dup = false;
            for (const auto& kept : merged) {
                double r = std::abs(ep.location - kept.location);
                if (r < merge_radius) dup = true;
                // a failed Newton seed within a few grid cells of a refined
                // point is the same basin, not a separate candidate
                if (ep.status == EpStatus::grid_only && kept.status == EpStatus::refined) {
                    double cell = 3.0 * std::max((region.re_hi - region.re_lo) / re_pts,
                                                 ep.location.imag() * 2.0 / im_pts);
                    if (r < cell) dup = true;
                }
                if (dup) break;
            }
            if (!dup) merged.push_back(ep);
        }

        census.region = region;
        census.eps = std::move(merged);
        census.scan_rounds = rounds;
        census.complete = static_cast<int>(census.eps.size()) == census.expected &&
                          std::all_of(census.eps.begin(), census.eps.end(),
                                      [](const ExceptionalPoint& e) { return e.status == EpStatus::refined; });
        if (census.complete) break;

        if (rounds <= pol.max_densify) {
            re_pts = re_pts + re_pts / 2;
            im_pts = im_pts + im_pts / 2;
            continue;
        }
        if (pol.auto_expand && expand_rounds < pol.max_expand) {
            ++expand_rounds;
            double re_c = 0.5 * (region.re_lo + region.re_hi);
            double re_h = 0.75 * (region.re_hi - region.re_lo);
            region.re_lo = re_c - re_h;
            region.re_hi = re_c + re_h;
            region.im_hi *= 1.5;
            re_pts = re_pts + re_pts / 4;
            im_pts = im_pts + im_pts / 4;
            continue;
        }
        break;
    }

    if (pol.assign) {
        parallel_for(census.eps.size(), pol.threads, [&](std::size_t i) {
            auto& ep = census.eps[i];
            if (ep.status == EpStatus::grid_only) return;
            auto [pair, status] = assign_sheets(fam, ep.location);
            ep.k = pair.first;
            ep.l = pair.second;
            if (status == EpStatus::suspect) ep.status = EpStatus::suspect;
        });
    }
    return census;
}

// ---------------------------------------------------------------------------
// Constancy check of U_k + (1/Omega) sum_l ln R_kl along the real axis.
// ---------------------------------------------------------------------------

struct FactorizationReport {
    int level_k = 0;
    int sheet_count = 0;
    bool non_generic = false;  // sheet multiplicity != n-1; no PASS/FAIL issued
    double mean_delta = 0.0;   // estimate of -ln(c_k) / (2 Omega)
    double max_deviation = 0.0;
    double c_k = 0.0;
    bool pass = false;
    std::string message;
};

/// Tests that U_k(lambda) + (1/Omega) sum ln R_kl(lambda) is constant in
/// lambda, using the sheet-k points of a completed census. Constancy pins the
/// sheet-resolved factorization of the discriminant; the recovered constant
/// is reported as c_k.
inline FactorizationReport verify_factorization(const LinearFamily& fam, const EpCensus& census,
                                                int level_k, const std::vector<double>& grid,
                                                double tol = 1e-6, int threads = 0) {
    FactorizationReport rep;
    rep.level_k = level_k;
    std::vector<const ExceptionalPoint*> sheet;
    for (const auto& ep : census.eps)
        if (ep.status != EpStatus::grid_only && (ep.k == level_k || ep.l == level_k))
            sheet.push_back(&ep);
    rep.sheet_count = static_cast<int>(sheet.size());
    if (rep.sheet_count != fam.n - 1) {
        rep.non_generic = true;
        rep.message = "non-generic sheet multiplicity: found " + std::to_string(rep.sheet_count) +
                      " sheet-" + std::to_string(level_k) + " points, expected " +
                      std::to_string(fam.n - 1);
        return rep;
    }

    SpectrumTable table = build_table(fam, grid, Derivatives::none, threads);
    std::vector<double> delta(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double u = detail::u_at(table, level_k, j, fam.omega);
        double acc = 0.0;
        for (const auto* ep : sheet)
            acc += std::log(std::hypot(grid[j] - ep->location.real(), ep->location.imag()));
        delta[j] = u + acc / fam.omega;
    }
    double mean = 0.0;
    for (double d : delta) mean += d;
    mean /= static_cast<double>(delta.size());
    double dev = 0.0;
    for (double d : delta) dev = std::max(dev, std::abs(d - mean));
    rep.mean_delta = mean;
    rep.max_deviation = dev;
    rep.c_k = std::exp(-2.0 * fam.omega * mean);
    rep.pass = dev < tol;
    return rep;
}

}  // namespace epf
