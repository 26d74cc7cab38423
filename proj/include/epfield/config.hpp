#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "epfield/census.hpp"
#include "epfield/common.hpp"
#include "epfield/ibm.hpp"
#include "epfield/linear_family.hpp"
#include "epfield/peaks.hpp"

namespace epf {

using nlohmann::json;

/// One JSON document per run; CLI flags override individual keys. Parsing is
/// strict: unknown keys are rejected so a typo cannot silently change an
/// experiment.
struct RunConfig {
    // model
    std::string model_kind;  // "ibm" | "generic"
    int boson_number = 0;
    std::string h0_path, v_path;

    std::string out_dir = "out";
    int threads = 0;
    std::uint64_t seed = 1;

    double grid_lo = 0.0, grid_hi = 1.0;
    int grid_points = 2001;

    std::vector<int> levels;
    std::vector<double> x_targets;
    std::vector<int> boson_numbers;

    CensusRegion region{};
    CensusPolicy census{};
    PeakPolicy peak{};

    int factor_level = 0;
    double factor_tol = 1e-6;
    double factor_lo = 0.05, factor_hi = 0.95;
    int factor_points = 181;

    std::vector<double> p_list;
    double mu_max = 1.0;

    double ep_re_lo = 0.6, ep_re_hi = 1.0;

    bool run_fig2_study = false;
    bool run_fig3_study = false;
    bool run_ep_study = false;
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + it.key() + "' in " + where);
}

template <typename T>
void take(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline void require_positive(double v, const std::string& name) {
    if (!(v > 0.0)) throw ConfigError("config: " + name + " must be positive");
}

}  // namespace detail

inline RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    detail::check_keys(doc, {"model", "out", "threads", "seed", "grid", "levels", "x_targets",
                             "boson_numbers", "region", "census", "peak", "factorization",
                             "p_list", "mu_max", "ep_window", "studies"},
                       "top level");
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        detail::check_keys(m, {"kind", "boson_number", "h0", "v"}, "model");
        detail::take(m, "kind", cfg.model_kind);
        detail::take(m, "boson_number", cfg.boson_number);
        detail::take(m, "h0", cfg.h0_path);
        detail::take(m, "v", cfg.v_path);
    }
    detail::take(doc, "out", cfg.out_dir);
    detail::take(doc, "threads", cfg.threads);
    detail::take(doc, "seed", cfg.seed);
    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        detail::check_keys(g, {"lo", "hi", "points"}, "grid");
        detail::take(g, "lo", cfg.grid_lo);
        detail::take(g, "hi", cfg.grid_hi);
        detail::take(g, "points", cfg.grid_points);
        if (cfg.grid_points < 2) throw ConfigError("config: grid.points must be >= 2");
        if (!(cfg.grid_hi > cfg.grid_lo)) throw ConfigError("config: grid.hi must exceed grid.lo");
    }
    detail::take(doc, "levels", cfg.levels);
    detail::take(doc, "x_targets", cfg.x_targets);
    detail::take(doc, "boson_numbers", cfg.boson_numbers);
    if (doc.contains("region")) {
        const json& r = doc.at("region");
        detail::check_keys(r, {"re_lo", "re_hi", "im_lo", "im_hi"}, "region");
        detail::take(r, "re_lo", cfg.region.re_lo);
        detail::take(r, "re_hi", cfg.region.re_hi);
        detail::take(r, "im_lo", cfg.region.im_lo);
        detail::take(r, "im_hi", cfg.region.im_hi);
        detail::require_positive(cfg.region.im_lo, "region.im_lo");
        detail::require_positive(cfg.region.im_hi - cfg.region.im_lo, "region.im_hi - im_lo");
    }
    if (doc.contains("census")) {
        const json& c = doc.at("census");
        detail::check_keys(c, {"re_points", "im_points", "seed_factor", "merge_scale",
                               "refine_tol", "newton_max_iters", "max_densify", "auto_expand",
                               "max_expand", "assign"},
                           "census");
        detail::take(c, "re_points", cfg.census.re_points);
        detail::take(c, "im_points", cfg.census.im_points);
        detail::take(c, "seed_factor", cfg.census.seed_factor);
        detail::take(c, "merge_scale", cfg.census.merge_scale);
        detail::take(c, "refine_tol", cfg.census.refine_tol);
        detail::take(c, "newton_max_iters", cfg.census.newton_max_iters);
        detail::take(c, "max_densify", cfg.census.max_densify);
        detail::take(c, "auto_expand", cfg.census.auto_expand);
        detail::take(c, "max_expand", cfg.census.max_expand);
        detail::take(c, "assign", cfg.census.assign);
        detail::require_positive(cfg.census.refine_tol, "census.refine_tol");
        detail::require_positive(cfg.census.merge_scale, "census.merge_scale");
        detail::require_positive(cfg.census.seed_factor, "census.seed_factor");
    }
    if (doc.contains("peak")) {
        const json& p = doc.at("peak");
        detail::check_keys(p, {"refine_points", "zoom", "max_rounds", "min_width",
                               "min_above_half", "window_factor"},
                           "peak");
        detail::take(p, "refine_points", cfg.peak.refine_points);
        detail::take(p, "zoom", cfg.peak.zoom);
        detail::take(p, "max_rounds", cfg.peak.max_rounds);
        detail::take(p, "min_width", cfg.peak.min_width);
        detail::take(p, "min_above_half", cfg.peak.min_above_half);
        detail::take(p, "window_factor", cfg.peak.window_factor);
        detail::require_positive(cfg.peak.zoom - 1.0, "peak.zoom - 1");
        detail::require_positive(cfg.peak.min_width, "peak.min_width");
        detail::require_positive(cfg.peak.window_factor, "peak.window_factor");
    }
    if (doc.contains("factorization")) {
        const json& f = doc.at("factorization");
        detail::check_keys(f, {"level", "tol", "grid_lo", "grid_hi", "points"}, "factorization");
        detail::take(f, "level", cfg.factor_level);
        detail::take(f, "tol", cfg.factor_tol);
        detail::take(f, "grid_lo", cfg.factor_lo);
        detail::take(f, "grid_hi", cfg.factor_hi);
        detail::take(f, "points", cfg.factor_points);
        detail::require_positive(cfg.factor_tol, "factorization.tol");
    }
    detail::take(doc, "p_list", cfg.p_list);
    detail::take(doc, "mu_max", cfg.mu_max);
    detail::require_positive(cfg.mu_max, "mu_max");
    if (doc.contains("ep_window")) {
        const json& w = doc.at("ep_window");
        detail::check_keys(w, {"re_lo", "re_hi"}, "ep_window");
        detail::take(w, "re_lo", cfg.ep_re_lo);
        detail::take(w, "re_hi", cfg.ep_re_hi);
    }
    if (doc.contains("studies")) {
        const json& s = doc.at("studies");
        detail::check_keys(s, {"fig2", "fig3", "ep_approach"}, "studies");
        detail::take(s, "fig2", cfg.run_fig2_study);
        detail::take(s, "fig3", cfg.run_fig3_study);
        detail::take(s, "ep_approach", cfg.run_ep_study);
    }
    if (cfg.threads < 0) throw ConfigError("config: threads must be >= 0");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

inline LinearFamily family_from_config(const RunConfig& cfg) {
    if (cfg.model_kind == "ibm") {
        if (cfg.boson_number < 1) throw ConfigError("config: ibm model needs boson_number >= 1");
        return build_ibm({cfg.boson_number});
    }
    if (cfg.model_kind == "generic") {
        if (cfg.h0_path.empty() || cfg.v_path.empty())
            throw ConfigError("config: generic model needs h0 and v matrix files");
        return build_generic_from_files(cfg.h0_path, cfg.v_path);
    }
    throw ConfigError("config: model.kind must be 'ibm' or 'generic'");
}

}  // namespace epf
