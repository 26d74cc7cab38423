#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "epfield/scaling.hpp"

using namespace epf;

TEST_CASE("fig2-style sweep at N=100: peak moves left with excitation ratio") {
    SweepPolicy pol;
    SpectrumSweep sweep = run_fig2(100, {0.0, 0.2}, pol);
    REQUIRE(sweep.levels.size() == 2);
    const auto& ground = sweep.levels[0];
    const auto& excited = sweep.levels[1];
    CHECK(ground.level_k == 0);
    CHECK(excited.level_k == 10);  // round(0.2 * 51)
    CHECK(ground.peak.analytic.height > 0.0);
    CHECK(excited.peak.analytic.centroid < ground.peak.analytic.centroid);
    // the excited-state crossing sits at E = 0
    CHECK(std::abs(excited.energy_at_centroid) < 0.05 * excited.span_at_centroid);
    // cross-method agreement on the resolved windows
    for (const auto& lp : sweep.levels) {
        double tol = std::max(1e-6, 1e-3 * lp.peak.analytic.height);
        CHECK(lp.peak.cross_dev < tol);
        CHECK(std::abs(lp.peak.analytic.centroid - lp.peak.fd.centroid) <=
              lp.peak.analytic.grid_step + 1e-15);
        CHECK(lp.peak.fd.height == Catch::Approx(lp.peak.analytic.height)
                                       .epsilon(1e-3));
    }
}

TEST_CASE("empty ratio list rejected") {
    CHECK_THROWS_AS(run_fig2(50, {}), ConfigError);
}

TEST_CASE("fig3-style study runs on a small ladder") {
    ScalingStudy study = run_fig3({50, 100, 200, 400}, 0.0);
    REQUIRE(study.points.size() == 4);
    for (const auto& pt : study.points) {
        CHECK(pt.resolved);
        CHECK(pt.peak.height > 0.0);
        CHECK(pt.peak.fwhm > 0.0);
    }
    CHECK(study.h_increasing);
    CHECK(study.w_decreasing);
    CHECK(study.fit_h.points_used >= 2);
    // q_hw and the half-max integral are both area proxies
    for (const auto& pt : study.points) {
        CHECK(pt.peak.q_int > 0.5 * pt.peak.q_hw);
        CHECK(pt.peak.q_int < 2.0 * pt.peak.q_hw);
    }
}

TEST_CASE("fig3 input validation") {
    CHECK_THROWS_AS(run_fig3({100, 200}, 0.0), ConfigError);
    CHECK_THROWS_AS(run_fig3({200, 100, 400}, 0.0), ConfigError);
}

TEST_CASE("sheet-0 degeneracies approach the axis as N grows") {
    EpApproachStudy study = run_ep_approach({10, 20});
    REQUIRE(study.points.size() == 2);
    CHECK(study.points[0].found);
    CHECK(study.points[1].found);
    CHECK(study.points[1].min_mu < study.points[0].min_mu);
    CHECK(study.strictly_decreasing);
}

TEST_CASE("commuting family pins degeneracies to the real axis") {
    FamilyFactory diag = [](int) {
        Eigen::MatrixXd h0(2, 2), v(2, 2);
        h0 << 0.0, 0.0, 0.0, -0.8;
        v << -1.0, 0.0, 0.0, 0.0;
        return make_family(h0, v, "commuting");
    };
    EpApproachStudy study = run_ep_approach({2, 4}, diag);
    for (const auto& pt : study.points) {
        CHECK(pt.found);
        CHECK(pt.min_mu < 1e-10);  // on the axis regardless of N
    }
    CHECK_FALSE(study.strictly_decreasing);  // degenerate trend
}

TEST_CASE("census ceiling guards the approach study") {
    FamilyFactory big = [](int) { return random_family(70, 1); };
    CHECK_THROWS_AS(run_ep_approach({10}, big), ConfigError);
}
