#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "epfield/census.hpp"
#include "epfield/line_charge.hpp"
#include "epfield/peaks.hpp"
#include "epfield/scaling.hpp"
#include "epfield/spectral.hpp"

namespace epf::io {

using nlohmann::json;

// 17 significant digits, scientific: lossless round-trip for doubles
inline std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical across runs
    if (!out) throw ConfigError("cannot open output file " + path);
    return out;
}

inline void write_profile_csv(const std::string& path, const CoulombProfile& p) {
    auto out = open_out(path);
    out << "lambda,U,F,C\n";
    for (std::size_t j = 0; j < p.grid.size(); ++j) {
        out << g17(p.grid[j]) << ',' << g17(p.U[j]) << ','
            << (j < p.F.size() ? g17(p.F[j]) : "") << ','
            << (j < p.C.size() ? g17(p.C[j]) : "") << '\n';
    }
}

inline void write_spectrum_csv(const std::string& path, const SpectrumTable& t) {
    auto out = open_out(path);
    out << "lambda";
    for (int k = 0; k < t.energies.rows(); ++k) out << ",E_" << k;
    out << '\n';
    for (std::size_t j = 0; j < t.grid.size(); ++j) {
        out << g17(t.grid[j]);
        for (int k = 0; k < t.energies.rows(); ++k)
            out << ',' << g17(t.energies(k, static_cast<Eigen::Index>(j)));
        out << '\n';
    }
}

inline json peak_to_json(const PeakSummary& p) {
    return json{{"level", p.level_k},
                {"x", p.x},
                {"N", p.boson_number},
                {"centroid", p.centroid},
                {"height", p.height},
                {"fwhm", p.fwhm},
                {"q_hw", p.q_hw},
                {"q_int", p.q_int},
                {"method", p.method == ProfileMethod::analytic ? "analytic" : "finite_difference"},
                {"refine_rounds", p.refine_rounds}};
}

inline void write_peaks_json(const std::string& path, const std::vector<PeakSummary>& peaks) {
    json arr = json::array();
    for (const auto& p : peaks) arr.push_back(peak_to_json(p));
    open_out(path) << arr.dump(2) << '\n';
}

inline json census_to_json(const EpCensus& census) {
    json eps = json::array();
    for (const auto& ep : census.eps)
        eps.push_back(json{{"re", ep.location.real()},
                           {"im", ep.location.imag()},
                           {"k", ep.k},
                           {"l", ep.l},
                           {"residual", ep.gap_residual},
                           {"status", to_string(ep.status)}});
    return json{{"expected", census.expected},
                {"complete", census.complete},
                {"scan_rounds", census.scan_rounds},
                {"region", {{"re_lo", census.region.re_lo},
                            {"re_hi", census.region.re_hi},
                            {"im_lo", census.region.im_lo},
                            {"im_hi", census.region.im_hi}}},
                {"eps", eps}};
}

/// g(Lambda) sampled on a rectangular grid, for external heat maps.
inline void write_gap_grid_csv(const std::string& path, const LinearFamily& fam,
                               const CensusRegion& region, int re_points, int im_points,
                               int threads = 0) {
    std::vector<double> g(static_cast<std::size_t>(re_points) * im_points);
    std::vector<double> re(static_cast<std::size_t>(re_points)), im(static_cast<std::size_t>(im_points));
    for (int i = 0; i < re_points; ++i)
        re[static_cast<std::size_t>(i)] = region.re_lo + (region.re_hi - region.re_lo) * i / (re_points - 1);
    double llo = std::log(region.im_lo), lhi = std::log(region.im_hi);
    for (int j = 0; j < im_points; ++j)
        im[static_cast<std::size_t>(j)] = std::exp(llo + (lhi - llo) * j / (im_points - 1));
    parallel_for(g.size(), threads, [&](std::size_t idx) {
        int i = static_cast<int>(idx % static_cast<std::size_t>(re_points));
        int j = static_cast<int>(idx / static_cast<std::size_t>(re_points));
        g[idx] = min_gap(complex_spectrum(fam, Complex(re[static_cast<std::size_t>(i)],
                                                       im[static_cast<std::size_t>(j)])))
                     .gap;
    });
    auto out = open_out(path);
    out << "re,im,g\n";
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        int i = static_cast<int>(idx % static_cast<std::size_t>(re_points));
        int j = static_cast<int>(idx / static_cast<std::size_t>(re_points));
        out << g17(re[static_cast<std::size_t>(i)]) << ',' << g17(im[static_cast<std::size_t>(j)])
            << ',' << g17(g[idx]) << '\n';
    }
}

inline json factorization_to_json(const FactorizationReport& rep) {
    return json{{"level", rep.level_k},
                {"sheet_count", rep.sheet_count},
                {"non_generic", rep.non_generic},
                {"mean_delta", rep.mean_delta},
                {"max_deviation", rep.max_deviation},
                {"c_k", rep.c_k},
                {"pass", rep.pass},
                {"message", rep.message}};
}

inline json probe_to_json(const ProbeResult& r) {
    return json{{"quantity", r.quantity},
                {"scales", r.scales},
                {"values", r.values},
                {"measured", to_string(r.measured)},
                {"predicted", to_string(r.predicted)},
                {"value_if_finite", r.value_if_finite}};
}

inline json divergence_to_json(const DivergenceReport& rep) {
    return json{{"p", rep.p},
                {"mu_max", rep.mu_max},
                {"Q", probe_to_json(rep.q_jump)},
                {"C0", probe_to_json(rep.c0)},
                {"d2C0", probe_to_json(rep.d2c)},
                {"d4C0", probe_to_json(rep.d4c)},
                {"matches_prediction", rep.matches_prediction}};
}

inline void write_probe_csv(const std::string& path, const std::vector<DivergenceReport>& reports) {
    auto out = open_out(path);
    out << "p,quantity,probe_scale,value\n";
    for (const auto& rep : reports)
        for (const ProbeResult* r : {&rep.q_jump, &rep.c0, &rep.d2c, &rep.d4c})
            for (std::size_t i = 0; i < r->scales.size(); ++i)
                out << g17(rep.p) << ',' << r->quantity << ',' << g17(r->scales[i]) << ','
                    << g17(r->values[i]) << '\n';
}

inline json fit_to_json(const LogLogFit& f) {
    return json{{"slope", f.slope},
                {"intercept", f.intercept},
                {"max_residual", f.max_residual},
                {"window_lo", f.window_lo},
                {"window_hi", f.window_hi},
                {"points_used", f.points_used}};
}

inline void write_fit_table_csv(const std::string& path,
                                const std::vector<std::pair<std::string, LogLogFit>>& fits) {
    auto out = open_out(path);
    out << "observable,slope,intercept,window_lo,window_hi,max_residual\n";
    for (const auto& [name, f] : fits)
        out << name << ',' << g17(f.slope) << ',' << g17(f.intercept) << ',' << g17(f.window_lo)
            << ',' << g17(f.window_hi) << ',' << g17(f.max_residual) << '\n';
}

inline json qextrap_to_json(const QExtrapolation& q) {
    return json{{"N", q.boson_numbers},
                {"q_hw", q.q_values},
                {"fit", fit_to_json(q.fit)},
                {"verdict", to_string(q.verdict)}};
}

inline json scaling_to_json(const ScalingStudy& s) {
    json pts = json::array();
    for (const auto& pt : s.points) {
        json j{{"N", pt.boson_number}, {"level", pt.level_k}, {"resolved", pt.resolved}};
        if (pt.resolved) {
            j["peak"] = peak_to_json(pt.peak);
            j["cross_dev"] = pt.cross_dev;
        } else {
            j["diagnostic"] = pt.diagnostic;
        }
        pts.push_back(std::move(j));
    }
    return json{{"x", s.x_target},
                {"points", pts},
                {"fit_h", fit_to_json(s.fit_h)},
                {"fit_inv_w", fit_to_json(s.fit_inv_w)},
                {"fit_hw", fit_to_json(s.fit_hw)},
                {"h_increasing", s.h_increasing},
                {"w_decreasing", s.w_decreasing},
                {"hw_decreasing", s.hw_decreasing},
                {"slope_order_ok", s.slope_order_ok}};
}

inline json ep_approach_to_json(const EpApproachStudy& s) {
    json pts = json::array();
    for (const auto& pt : s.points) {
        json j{{"N", pt.boson_number},
               {"n", pt.dimension},
               {"found", pt.found},
               {"census_complete", pt.census_complete},
               {"sheet0_in_window", pt.sheet0_in_window}};
        if (pt.found) {
            j["min_mu"] = pt.min_mu;
            j["re"] = pt.location.real();
            j["im"] = pt.location.imag();
        }
        pts.push_back(std::move(j));
    }
    return json{{"re_lo", s.re_lo},
                {"re_hi", s.re_hi},
                {"points", pts},
                {"strictly_decreasing", s.strictly_decreasing}};
}

}  // namespace epf::io
