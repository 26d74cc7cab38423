#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "epfield/ibm.hpp"
#include "epfield/linear_family.hpp"
#include "epfield/spectral.hpp"

using namespace epf;

namespace {

LinearFamily toy_family() {
    Eigen::MatrixXd h0(2, 2), v(2, 2);
    h0 << 1, 0, 0, -1;
    v << 0, 1, 1, 0;
    return make_family(h0, v, "toy");
}

}  // namespace

TEST_CASE("toy slice at lambda=0: basis eigenvectors, vanishing slopes") {
    SpectrumSlice s = solve_slice(toy_family(), 0.0, Derivatives::first);
    CHECK(s.energies(0) == Catch::Approx(-1.0).margin(1e-14));
    CHECK(s.energies(1) == Catch::Approx(1.0).margin(1e-14));
    CHECK((*s.d1)(0) == Catch::Approx(0.0).margin(1e-14));
    CHECK((*s.d1)(1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("toy slice at lambda=1 matches E = +-sqrt(1+lambda^2)") {
    SpectrumSlice s = solve_slice(toy_family(), 1.0, Derivatives::first);
    double r = std::sqrt(2.0);
    CHECK(s.energies(0) == Catch::Approx(-r).epsilon(1e-14));
    CHECK(s.energies(1) == Catch::Approx(r).epsilon(1e-14));
    CHECK((*s.d1)(0) == Catch::Approx(-1.0 / r).epsilon(1e-12));
    CHECK((*s.d1)(1) == Catch::Approx(1.0 / r).epsilon(1e-12));
}

TEST_CASE("IBM N=2 slice reproduces the model-core example") {
    SpectrumSlice s = solve_slice(build_ibm({2}), 0.0);
    CHECK(s.energies(0) == Catch::Approx(-3.0).margin(1e-12));
    CHECK(s.energies(1) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("Hellmann-Feynman slopes match finite differences on random families") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
        int n = 4 + static_cast<int>(seed % 17);  // up to 20
        LinearFamily fam = random_family(n, seed);
        double lambda = 0.3 + 0.05 * static_cast<double>(seed % 7);
        SpectrumSlice s = solve_slice(fam, lambda, Derivatives::first);
        double span = s.span();
        double eps = 1e-5 * span;
        SpectrumSlice lo = solve_slice(fam, lambda - eps);
        SpectrumSlice hi = solve_slice(fam, lambda + eps);
        for (int k = 0; k < n; ++k) {
            double fd = (hi.energies(k) - lo.energies(k)) / (2.0 * eps);
            INFO("seed=" << seed << " n=" << n << " k=" << k);
            CHECK(std::abs((*s.d1)(k) - fd) < 1e-6);
        }
    }
}

TEST_CASE("second derivatives match finite differences away from crossings") {
    LinearFamily fam = random_family(8, 99);
    double lambda = 0.37;
    SpectrumSlice s = solve_slice(fam, lambda, Derivatives::second);
    double eps = 1e-4;
    SpectrumSlice lo = solve_slice(fam, lambda - eps);
    SpectrumSlice mid = solve_slice(fam, lambda);
    SpectrumSlice hi = solve_slice(fam, lambda + eps);
    for (int k = 0; k < fam.n; ++k) {
        double fd = (hi.energies(k) - 2.0 * mid.energies(k) + lo.energies(k)) / (eps * eps);
        double scale = std::max(1.0, std::abs(fd));
        CHECK(std::abs((*s.d2)(k) - fd) / scale < 1e-4);
    }
}

TEST_CASE("signed slope-over-gap sum cancels pairwise") {
    // sum_k sum_{l != k} (E_l' - E_k') / |E_l - E_k| is antisymmetric under
    // k <-> l, so it vanishes identically.
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        LinearFamily fam = random_family(6, seed);
        SpectrumSlice s = solve_slice(fam, 0.41, Derivatives::first);
        double acc = 0.0, mag = 0.0;
        for (int k = 0; k < fam.n; ++k)
            for (int l = 0; l < fam.n; ++l) {
                if (l == k) continue;
                double term = ((*s.d1)(l) - (*s.d1)(k)) / std::abs(s.energies(l) - s.energies(k));
                acc += term;
                mag += std::abs(term);
            }
        CHECK(std::abs(acc) < 1e-8 * std::max(1.0, mag));
    }
}

TEST_CASE("toy U profile matches -ln 2 sqrt(1+lambda^2)") {
    LinearFamily fam = toy_family();
    auto grid = linspace(-1.0, 1.0, 201);
    CoulombProfile p = compute_U(fam, 0, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double expected = -std::log(2.0 * std::sqrt(1.0 + grid[j] * grid[j]));
        CHECK(std::abs(p.U[j] - expected) < 1e-12);
    }
    CHECK(p.U[100] == Catch::Approx(-std::log(2.0)).margin(1e-14));
}

TEST_CASE("for n=2 both levels share the same U") {
    LinearFamily fam = random_family(2, 314);
    auto grid = linspace(0.0, 1.0, 21);
    SpectrumTable t = build_table(fam, grid);
    CoulombProfile p0 = profile_u(t, fam, 0);
    CoulombProfile p1 = profile_u(t, fam, 1);
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(p0.U[j] == p1.U[j]);
}

TEST_CASE("IBM N=4 level-0 U at the diagonal limit") {
    LinearFamily fam = build_ibm({4});
    REQUIRE(fam.n == 3);
    auto grid = linspace(0.999999999, 1.0, 3);
    CoulombProfile p = compute_U(fam, 0, grid);
    // gaps of level 0 at lambda=1 are 0.5 and 1.0
    CHECK(p.U.back() == Catch::Approx(-0.5 * (std::log(0.5) + std::log(1.0))).margin(1e-9));
    CHECK(p.U.back() == Catch::Approx(0.5 * std::log(2.0)).margin(1e-9));
}

TEST_CASE("toy F profile matches lambda/(1+lambda^2) on both paths") {
    LinearFamily fam = toy_family();
    auto grid = linspace(-1.0, 1.0, 201);
    CoulombProfile pa = compute_F(fam, 0, grid, ProfileMethod::analytic);
    CoulombProfile pf = compute_F(fam, 0, grid, ProfileMethod::finite_difference);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double l = grid[j];
        double expected = l / (1.0 + l * l);
        CHECK(std::abs(pa.F[j] - expected) < 1e-12);
        CHECK(std::abs(pf.F[j] - expected) < 5e-4);
    }
    CHECK(pa.F[100] == Catch::Approx(0.0).margin(1e-14));  // symmetric at 0
}

TEST_CASE("toy C profile matches (1-lambda^2)/(1+lambda^2)^2") {
    LinearFamily fam = toy_family();
    auto grid = linspace(-1.0, 1.0, 201);
    CoulombProfile pa = compute_C(fam, 0, grid, ProfileMethod::analytic);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double l = grid[j];
        double d = 1.0 + l * l;
        CHECK(std::abs(pa.C[j] - (1.0 - l * l) / (d * d)) < 1e-12);
    }
    CHECK(pa.C[100] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("C integrates back to F on the sampled grid") {
    LinearFamily fam = build_ibm({20});
    auto grid = linspace(0.2, 0.9, 301);
    CoulombProfile p = compute_C(fam, 1, grid, ProfileMethod::analytic);
    double integral = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j)
        integral += 0.5 * (p.C[j] + p.C[j - 1]) * (grid[j] - grid[j - 1]);
    CHECK(integral == Catch::Approx(p.F.back() - p.F.front()).margin(2e-5));
}

TEST_CASE("IBM N=50 ground-state force is positive near lambda=0.95") {
    LinearFamily fam = build_ibm({50});
    auto grid = linspace(0.949, 0.951, 3);
    CoulombProfile p = compute_F(fam, 0, grid, ProfileMethod::analytic);
    CHECK(p.F[1] > 0.0);  // all nearby sheet-0 charges lie to the left
}

TEST_CASE("analytic and finite-difference C agree on a smooth window") {
    LinearFamily fam = build_ibm({50});
    auto grid = linspace(0.55, 0.95, 401);
    SpectrumTable t = build_table(fam, grid, Derivatives::second);
    CoulombProfile pa = profile_ufc(t, fam, 0, ProfileMethod::analytic);
    CoulombProfile pf = profile_ufc(t, fam, 0, ProfileMethod::finite_difference);
    double h = *std::max_element(pa.C.begin(), pa.C.end());
    CHECK(cross_method_deviation(pa, pf) < std::max(1e-6, 1e-3 * h));
}

TEST_CASE("zero gap is reported with the offending lambda and level") {
    Eigen::MatrixXd h0(2, 2), v(2, 2);
    h0 << 1, 0, 0, 1;  // degenerate at lambda=0
    v << 0, 1, 1, 0;
    LinearFamily fam = make_family(h0, v);
    auto grid = linspace(0.0, 1.0, 3);
    CHECK_THROWS_AS(compute_U(fam, 0, grid), NumericalError);
}
