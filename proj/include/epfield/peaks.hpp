#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epfield/common.hpp"
#include "epfield/spectral.hpp"

namespace epf {

struct PeakSummary {
    int level_k = 0;
    double x = 0.0;
    int boson_number = 0;     // 0 when not an IBM run
    double centroid = 0.0;    // argmax location after refinement
    double height = 0.0;      // C at the centroid
    double fwhm = 0.0;
    double q_hw = 0.0;        // height * width (area proxy)
    double q_int = 0.0;       // trapezoid integral over the half-max window
    ProfileMethod method = ProfileMethod::analytic;
    int refine_rounds = 0;
    double window_lo = 0.0;   // final refined window
    double window_hi = 0.0;
    double grid_step = 0.0;   // step of the final window grid
    double cross_dev = 0.0;   // max |C_analytic - C_fd| on the final window
    bool cross_checked = false;
    double energy_at_centroid = 0.0;
    double span_at_centroid = 0.0;
    double dominance = std::numeric_limits<double>::infinity();  // h / next local max
};

struct PeakPolicy {
    int refine_points = 201;
    double zoom = 10.0;        // window shrink factor while the peak is unresolved
    int max_rounds = 12;
    double min_width = 1e-12;
    int min_above_half = 32;   // samples above half max required to accept
    int min_per_fwhm = 64;     // grid steps across the FWHM required to accept
    double window_factor = 1.3;  // half-width of the snap window in units of the width estimate
};

/// Samples C on an m-point inclusive grid over [lo, hi].
using CSampler =
    std::function<std::vector<double>(const std::vector<double>& grid)>;

namespace detail {

struct WindowScan {
    std::size_t argmax = 0;
    double height = 0.0;
    std::optional<double> left_cross;
    std::optional<double> right_cross;
    int above_half = 0;
};

// leftmost maximal sample; half-max crossings by linear interpolation
inline WindowScan scan_window(const std::vector<double>& g, const std::vector<double>& c) {
    WindowScan w;
    for (std::size_t j = 1; j < c.size(); ++j)
        if (c[j] > c[w.argmax]) w.argmax = j;
    w.height = c[w.argmax];
    double half = 0.5 * w.height;
    for (std::size_t j = w.argmax; j-- > 0;) {
        if (c[j] < half) {
            double t = (half - c[j]) / (c[j + 1] - c[j]);
            w.left_cross = g[j] + t * (g[j + 1] - g[j]);
            break;
        }
    }
    for (std::size_t j = w.argmax + 1; j < c.size(); ++j) {
        if (c[j] < half) {
            double t = (half - c[j - 1]) / (c[j] - c[j - 1]);
            w.right_cross = g[j - 1] + t * (g[j] - g[j - 1]);
            break;
        }
    }
    if (w.left_cross && w.right_cross)
        for (std::size_t j = 0; j < c.size(); ++j)
            if (c[j] > half && g[j] >= *w.left_cross && g[j] <= *w.right_cross) ++w.above_half;
    return w;
}

inline double trapezoid_over_halfmax(const std::vector<double>& g, const std::vector<double>& c,
                                     double xl, double xr, double half) {
    // integrate the piecewise-linear interpolant between the two half-max
    // crossings; both endpoints sit exactly at `half`
    double acc = 0.0;
    double px = xl, pv = half;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] <= xl || g[j] >= xr) continue;
        acc += 0.5 * (pv + c[j]) * (g[j] - px);
        px = g[j];
        pv = c[j];
    }
    acc += 0.5 * (pv + half) * (xr - px);
    return acc;
}

inline double second_local_max(const std::vector<double>& c, std::size_t argmax) {
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t j = 1; j + 1 < c.size(); ++j) {
        if (j == argmax) continue;
        if (c[j] > c[j - 1] && c[j] >= c[j + 1] && c[j] > best) {
            best = c[j];
            found = true;
        }
    }
    return found ? best : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// detect_peak plus the final refined window samples, for callers that
/// cross-check a second computation path on the same grid.
struct PeakDetection {
    PeakSummary summary;
    std::vector<double> grid;  // final window
    std::vector<double> c;
};

/// Locates the dominant peak of a sampled curvature profile, re-gridding a
/// shrinking window around the argmax until at least `min_above_half` samples
/// lie above half maximum. The resampler supplies C on any requested grid;
/// tie-breaking is leftmost, so the result is deterministic.
inline PeakDetection detect_peak_window(const CoulombProfile& base, const CSampler& resample,
                                        const PeakPolicy& pol = {}) {
    if (base.C.empty()) throw ConfigError("detect_peak: profile carries no C values");
    std::vector<double> grid = base.grid;
    std::vector<double> c = base.C;

    detail::WindowScan scan = detail::scan_window(grid, c);
    if (scan.argmax == 0 || scan.argmax + 1 == grid.size())
        throw IncompleteError("detect_peak: peak truncated by the grid boundary (argmax at edge)");

    PeakSummary out;
    out.level_k = base.level_k;
    out.x = base.x;
    out.method = base.method;
    out.dominance = scan.height / detail::second_local_max(c, scan.argmax);
    if (std::isnan(out.dominance)) out.dominance = std::numeric_limits<double>::infinity();

    int round = 0;
    while (true) {
        double step = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
        bool resolved = scan.left_cross && scan.right_cross &&
                        scan.above_half >= pol.min_above_half &&
                        (*scan.right_cross - *scan.left_cross) >= pol.min_per_fwhm * step &&
                        scan.argmax != 0 && scan.argmax + 1 != grid.size();
        if (resolved) break;
        if (round >= pol.max_rounds)
            throw IncompleteError("detect_peak: refinement exhausted after " +
                                  std::to_string(round) + " rounds without resolving the peak");

        double center = grid[scan.argmax];
        double width = grid.back() - grid.front();
        double half_w;
        if (scan.left_cross && scan.right_cross) {
            double w_est = *scan.right_cross - *scan.left_cross;
            center = 0.5 * (*scan.left_cross + *scan.right_cross);
            half_w = pol.window_factor * w_est;
        } else {
            half_w = 0.5 * width / pol.zoom;
        }
        if (2.0 * half_w < pol.min_width)
            throw IncompleteError("detect_peak: window narrowed below " +
                                  std::to_string(pol.min_width) + " without resolving the peak");
        grid = linspace(center - half_w, center + half_w, pol.refine_points);
        c = resample(grid);
        if (c.size() != grid.size()) throw NumericalError("detect_peak: sampler size mismatch");
        scan = detail::scan_window(grid, c);
        ++round;
    }

    out.refine_rounds = round;
    out.centroid = grid[scan.argmax];
    out.height = scan.height;
    out.fwhm = *scan.right_cross - *scan.left_cross;
    out.q_hw = out.height * out.fwhm;
    out.q_int = detail::trapezoid_over_halfmax(grid, c, *scan.left_cross, *scan.right_cross,
                                               0.5 * scan.height);
    out.window_lo = grid.front();
    out.window_hi = grid.back();
    out.grid_step = grid.size() > 1 ? (grid.back() - grid.front()) / (grid.size() - 1) : 0.0;
    return {out, std::move(grid), std::move(c)};
}

inline PeakSummary detect_peak(const CoulombProfile& base, const CSampler& resample,
                               const PeakPolicy& pol = {}) {
    return detect_peak_window(base, resample, pol).summary;
}

/// Re-derives peak quantities from a second set of C values sampled on an
/// already-refined window (no further refinement).
inline PeakSummary summarize_window(const std::vector<double>& grid, const std::vector<double>& c,
                                    const PeakSummary& like) {
    detail::WindowScan scan = detail::scan_window(grid, c);
    if (!scan.left_cross || !scan.right_cross)
        throw IncompleteError("summarize_window: half-max crossings left the refined window");
    PeakSummary out = like;
    out.centroid = grid[scan.argmax];
    out.height = scan.height;
    out.fwhm = *scan.right_cross - *scan.left_cross;
    out.q_hw = out.height * out.fwhm;
    out.q_int = detail::trapezoid_over_halfmax(grid, c, *scan.left_cross, *scan.right_cross,
                                               0.5 * scan.height);
    return out;
}

// ---------------------------------------------------------------------------
// Large-N trend of the peak-area proxy.
// ---------------------------------------------------------------------------

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
    double window_lo = 0.0;  // fit restricted to [window_lo, window_hi] in N
    double window_hi = 0.0;
    int points_used = 0;
};

inline LogLogFit fit_loglog(const std::vector<double>& n, const std::vector<double>& y,
                            double window_lo, double window_hi) {
    LogLogFit fit;
    fit.window_lo = window_lo;
    fit.window_hi = window_hi;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] < window_lo || n[i] > window_hi) continue;
        if (y[i] <= 0.0) throw NumericalError("fit_loglog: non-positive observable");
        lx.push_back(std::log(n[i]));
        ly.push_back(std::log(y[i]));
    }
    fit.points_used = static_cast<int>(lx.size());
    if (fit.points_used < 2) throw ConfigError("fit_loglog: fewer than 2 points in the fit window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double m = static_cast<double>(lx.size());
    double denom = m * sxx - sx * sx;
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy * sxx - sx * sxy) / denom;
    for (std::size_t i = 0; i < lx.size(); ++i)
        fit.max_residual = std::max(fit.max_residual,
                                    std::abs(ly[i] - fit.slope * lx[i] - fit.intercept));
    return fit;
}

enum class QVerdict { first_order_compatible, continuous_compatible, inconclusive };

inline std::string to_string(QVerdict v) {
    switch (v) {
        case QVerdict::first_order_compatible: return "first-order-compatible";
        case QVerdict::continuous_compatible: return "continuous-compatible";
        default: return "inconclusive";
    }
}

struct QExtrapolation {
    std::vector<double> boson_numbers;
    std::vector<double> q_values;  // q_hw per N
    LogLogFit fit;                 // over the largest available decade
    QVerdict verdict = QVerdict::inconclusive;
};

/// Trend of Q-hat(N) over the largest available decade of N. Never claims a
/// limit: a flat positive trend is only "first-order-compatible", a decrease
/// toward zero "continuous-compatible".
inline QExtrapolation estimate_Q(const std::vector<double>& boson_numbers,
                                 const std::vector<double>& q_values,
                                 double flat_slope_band = 0.1) {
    if (boson_numbers.size() != q_values.size())
        throw ConfigError("estimate_Q: size mismatch");
    if (boson_numbers.size() < 3) throw ConfigError("estimate_Q: need at least 3 boson numbers");
    double n_max = *std::max_element(boson_numbers.begin(), boson_numbers.end());
    double n_min = *std::min_element(boson_numbers.begin(), boson_numbers.end());
    if (n_max < 10.0 * n_min)
        throw ConfigError("estimate_Q: N values must span at least one decade");

    QExtrapolation q;
    q.boson_numbers = boson_numbers;
    q.q_values = q_values;
    q.fit = fit_loglog(boson_numbers, q_values, n_max / 10.0, n_max);
    bool all_positive = std::all_of(q_values.begin(), q_values.end(), [](double v) { return v > 0.0; });
    if (all_positive && std::abs(q.fit.slope) <= flat_slope_band)
        q.verdict = QVerdict::first_order_compatible;
    else if (q.fit.slope < -flat_slope_band)
        q.verdict = QVerdict::continuous_compatible;
    else
        q.verdict = QVerdict::inconclusive;
    return q;
}

}  // namespace epf
