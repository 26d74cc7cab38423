#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "epfield/census.hpp"
#include "epfield/common.hpp"
#include "epfield/ibm.hpp"
#include "epfield/peaks.hpp"
#include "epfield/spectral.hpp"

namespace epf {

/// Full profile of one level sampled on an arbitrary uniform window. The
/// finite-difference path extends the window by two spacings per side so the
/// returned values use pure central stencils.
inline CoulombProfile sample_profile(const LinearFamily& fam, int k,
                                     const std::vector<double>& grid, ProfileMethod method,
                                     int threads = 0) {
    if (method == ProfileMethod::analytic) {
        SpectrumTable t = build_table(fam, grid, Derivatives::second, threads);
        return profile_ufc(t, fam, k, method);
    }
    std::size_t m = grid.size();
    double h = (grid.back() - grid.front()) / static_cast<double>(m - 1);
    std::vector<double> ext;
    ext.reserve(m + 4);
    ext.push_back(grid.front() - 2.0 * h);
    ext.push_back(grid.front() - h);
    ext.insert(ext.end(), grid.begin(), grid.end());
    ext.push_back(grid.back() + h);
    ext.push_back(grid.back() + 2.0 * h);
    SpectrumTable t = build_table(fam, ext, Derivatives::none, threads);
    CoulombProfile p = profile_ufc(t, fam, k, ProfileMethod::finite_difference);
    auto trim = [](std::vector<double>& v) { v = std::vector<double>(v.begin() + 2, v.end() - 2); };
    trim(p.grid);
    trim(p.U);
    trim(p.F);
    trim(p.C);
    return p;
}

inline std::vector<double> sample_c(const LinearFamily& fam, int k, const std::vector<double>& grid,
                                    ProfileMethod method, int threads = 0) {
    return sample_profile(fam, k, grid, method, threads).C;
}

inline CSampler make_sampler(const LinearFamily& fam, int k, ProfileMethod method,
                             int threads = 0) {
    return [&fam, k, method, threads](const std::vector<double>& grid) {
        return sample_c(fam, k, grid, method, threads);
    };
}

/// A peak resolved by one method and re-measured by the other on the same
/// final window. Reported numbers default to the analytic side; the
/// finite-difference side is the cross-check.
struct DualPeak {
    PeakSummary analytic;
    PeakSummary fd;
    double cross_dev = 0.0;            // max |C_a - C_fd| away from window edges
    CoulombProfile window_profile;     // analytic U/F/C on the final window
    std::vector<double> c_fd;          // finite-difference C on the same window
};

inline DualPeak detect_peak_dual(const LinearFamily& fam, int k, const CoulombProfile& base,
                                 ProfileMethod search, const PeakPolicy& pol = {},
                                 int threads = 0) {
    PeakDetection det = detect_peak_window(base, make_sampler(fam, k, search, threads), pol);

    DualPeak dual;
    dual.window_profile = sample_profile(fam, k, det.grid, ProfileMethod::analytic, threads);
    if (search == ProfileMethod::analytic) {
        dual.c_fd = sample_c(fam, k, det.grid, ProfileMethod::finite_difference, threads);
        dual.analytic = det.summary;
        dual.fd = summarize_window(det.grid, dual.c_fd, det.summary);
    } else {
        dual.c_fd = det.c;
        dual.analytic = summarize_window(det.grid, dual.window_profile.C, det.summary);
        dual.fd = det.summary;
    }
    dual.analytic.method = ProfileMethod::analytic;
    dual.fd.method = ProfileMethod::finite_difference;
    for (std::size_t j = 2; j + 2 < det.grid.size(); ++j)
        dual.cross_dev =
            std::max(dual.cross_dev, std::abs(dual.window_profile.C[j] - dual.c_fd[j]));
    dual.analytic.cross_dev = dual.cross_dev;
    dual.analytic.cross_checked = true;
    dual.fd.cross_dev = dual.cross_dev;
    dual.fd.cross_checked = true;
    return dual;
}

inline int level_for_ratio(double x, int n) {
    // round half up, recorded alongside x in every output
    int k = static_cast<int>(std::floor(x * n + 0.5));
    return std::min(std::max(k, 0), n - 1);
}

// ---------------------------------------------------------------------------
// Spectrum-wide peak survey at fixed N.
// ---------------------------------------------------------------------------

struct SweepPolicy {
    std::vector<double> base_grid = linspace(0.0, 1.0, 2001);
    PeakPolicy peak{};
    int threads = 0;
};

struct LevelPeak {
    double x_target = 0.0;
    int level_k = 0;
    CoulombProfile profile;  // base-grid analytic profile
    DualPeak peak;
    double energy_at_centroid = 0.0;
    double span_at_centroid = 0.0;
};

struct SpectrumSweep {
    int boson_number = 0;
    std::vector<LevelPeak> levels;
};

/// Curvature peaks of selected levels across the spectrum at fixed N, with
/// the energy at each peak centroid recorded (the crossings happen at E = 0).
inline SpectrumSweep run_fig2(int boson_number, const std::vector<double>& x_targets,
                              const SweepPolicy& pol = {}) {
    if (x_targets.empty()) throw ConfigError("run_fig2: empty excitation-ratio list");
    SpectrumSweep sweep;
    sweep.boson_number = boson_number;
    LinearFamily fam = build_ibm({boson_number});
    SpectrumTable table = build_table(fam, pol.base_grid, Derivatives::second, pol.threads);

    for (double x : x_targets) {
        LevelPeak lp;
        lp.x_target = x;
        lp.level_k = level_for_ratio(x, fam.n);
        lp.profile = profile_ufc(table, fam, lp.level_k, ProfileMethod::analytic);
        lp.peak = detect_peak_dual(fam, lp.level_k, lp.profile, ProfileMethod::analytic, pol.peak,
                                   pol.threads);
        lp.peak.analytic.level_k = lp.level_k;
        lp.peak.analytic.x = static_cast<double>(lp.level_k) / fam.n;
        lp.peak.analytic.boson_number = boson_number;
        SpectrumSlice s = solve_slice(fam, lp.peak.analytic.centroid);
        lp.energy_at_centroid = s.energies(lp.level_k);
        lp.span_at_centroid = s.span();
        lp.peak.analytic.energy_at_centroid = lp.energy_at_centroid;
        lp.peak.analytic.span_at_centroid = lp.span_at_centroid;
        sweep.levels.push_back(std::move(lp));
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// Large-N scaling of one excitation ratio.
// ---------------------------------------------------------------------------

struct ScalingPoint {
    int boson_number = 0;
    int level_k = 0;
    bool resolved = false;
    std::string diagnostic;
    PeakSummary peak;     // analytic numbers
    PeakSummary peak_fd;  // cross-check numbers
    double cross_dev = 0.0;
};

struct ScalingStudy {
    double x_target = 0.0;
    std::vector<ScalingPoint> points;
    LogLogFit fit_h;
    LogLogFit fit_inv_w;
    LogLogFit fit_hw;
    bool h_increasing = false;
    bool w_decreasing = false;
    bool hw_decreasing = false;
    bool slope_order_ok = false;  // slope(1/w) > slope(h) > 0 and slope(hw) < 0
};

/// Peak height / width / area-proxy scaling across a boson-number list. The
/// search runs on the cheap finite-difference path; the reported values and
/// the cross-check come from the analytic path on the final window.
inline ScalingStudy run_fig3(const std::vector<int>& n_list, double x,
                             const SweepPolicy& pol = {}) {
    if (n_list.size() < 3) throw ConfigError("run_fig3: need at least 3 boson numbers");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw ConfigError("run_fig3: N list must be increasing");

    ScalingStudy study;
    study.x_target = x;
    for (int N : n_list) {
        ScalingPoint pt;
        pt.boson_number = N;
        LinearFamily fam = build_ibm({N});
        pt.level_k = level_for_ratio(x, fam.n);
        try {
            SpectrumTable table = build_table(fam, pol.base_grid, Derivatives::none, pol.threads);
            CoulombProfile base = profile_ufc(table, fam, pt.level_k, ProfileMethod::finite_difference);
            DualPeak dual = detect_peak_dual(fam, pt.level_k, base, ProfileMethod::finite_difference,
                                             pol.peak, pol.threads);
            pt.peak = dual.analytic;
            pt.peak_fd = dual.fd;
            pt.cross_dev = dual.cross_dev;
            pt.peak.level_k = pt.level_k;
            pt.peak.x = static_cast<double>(pt.level_k) / fam.n;
            pt.peak.boson_number = N;
            pt.resolved = true;
        } catch (const IncompleteError& e) {
            pt.diagnostic = e.what();
        }
        study.points.push_back(std::move(pt));
    }

    std::vector<double> ns, h, inv_w, hw;
    for (const auto& pt : study.points) {
        if (!pt.resolved) continue;
        ns.push_back(static_cast<double>(pt.boson_number));
        h.push_back(pt.peak.height);
        inv_w.push_back(1.0 / pt.peak.fwhm);
        hw.push_back(pt.peak.q_hw);
    }
    if (ns.size() < 3)
        throw IncompleteError("run_fig3: fewer than 3 resolved peaks survive; cannot fit");

    study.h_increasing = study.w_decreasing = study.hw_decreasing = true;
    for (std::size_t i = 1; i < ns.size(); ++i) {
        if (h[i] <= h[i - 1]) study.h_increasing = false;
        if (inv_w[i] <= inv_w[i - 1]) study.w_decreasing = false;
        if (hw[i] >= hw[i - 1]) study.hw_decreasing = false;
    }
    double n_max = ns.back();
    study.fit_h = fit_loglog(ns, h, n_max / 10.0, n_max);
    study.fit_inv_w = fit_loglog(ns, inv_w, n_max / 10.0, n_max);
    study.fit_hw = fit_loglog(ns, hw, n_max / 10.0, n_max);
    study.slope_order_ok = study.fit_inv_w.slope > study.fit_h.slope && study.fit_h.slope > 0.0 &&
                           study.fit_hw.slope < 0.0;
    return study;
}

// ---------------------------------------------------------------------------
// Approach of sheet-0 degeneracies to the real axis.
// ---------------------------------------------------------------------------

struct EpApproachPoint {
    int boson_number = 0;
    int dimension = 0;
    bool found = false;
    double min_mu = 0.0;
    Complex location;
    bool census_complete = false;
    int sheet0_in_window = 0;
};

struct EpApproachStudy {
    double re_lo = 0.6, re_hi = 1.0;
    std::vector<EpApproachPoint> points;
    bool strictly_decreasing = false;
};

using FamilyFactory = std::function<LinearFamily(int)>;

/// Minimum height above the real axis over sheet-0 degeneracies with
/// Re(Lambda) in the window, per boson number. Census completeness is
/// reported but not required; the trend is judged on the refined points.
inline EpApproachStudy run_ep_approach(const std::vector<int>& n_list,
                                       const FamilyFactory& factory = nullptr,
                                       double re_lo = 0.6, double re_hi = 1.0,
                                       CensusRegion region = {0.55, 1.05, 1e-5, 0.8},
                                       CensusPolicy pol = {}) {
    EpApproachStudy study;
    study.re_lo = re_lo;
    study.re_hi = re_hi;
    FamilyFactory make = factory ? factory : [](int N) { return build_ibm({N}); };
    for (int N : n_list) {
        LinearFamily fam = make(N);
        if (fam.n > kCensusDimensionCeiling)
            throw ConfigError("run_ep_approach: dimension " + std::to_string(fam.n) +
                              " exceeds the census ceiling");
        EpApproachPoint pt;
        pt.boson_number = N;
        pt.dimension = fam.n;
        EpCensus census = scan_and_refine(fam, region, pol);
        pt.census_complete = census.complete;
        for (const auto& ep : census.eps) {
            if (ep.status == EpStatus::grid_only) continue;
            if (ep.k != 0 && ep.l != 0) continue;
            double re = ep.location.real();
            if (re < re_lo || re > re_hi) continue;
            ++pt.sheet0_in_window;
            if (!pt.found || ep.location.imag() < pt.min_mu) {
                pt.found = true;
                pt.min_mu = ep.location.imag();
                pt.location = ep.location;
            }
        }
        study.points.push_back(pt);
    }
    study.strictly_decreasing = true;
    for (std::size_t i = 0; i < study.points.size(); ++i) {
        if (!study.points[i].found) study.strictly_decreasing = false;
        if (i > 0 && study.points[i].found && study.points[i - 1].found &&
            study.points[i].min_mu >= study.points[i - 1].min_mu)
            study.strictly_decreasing = false;
    }
    return study;
}

}  // namespace epf
