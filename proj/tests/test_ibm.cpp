#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "epfield/ibm.hpp"
#include "epfield/spectral.hpp"

using namespace epf;

namespace {

// every family eigenvalue must appear in the oracle multiset
double subset_deviation(const std::vector<double>& sub, const std::vector<double>& super) {
    double worst = 0.0;
    for (double e : sub) {
        double best = std::numeric_limits<double>::infinity();
        for (double o : super) best = std::min(best, std::abs(e - o));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST_CASE("N=1 has no level dynamics") {
    CHECK_THROWS_AS(build_ibm({1}), ConfigError);
}

TEST_CASE("N=2 spectrum at lambda=0 matches the 2x2 closed form") {
    LinearFamily fam = build_ibm({2});
    REQUIRE(fam.n == 2);
    CHECK(fam.storage == Storage::tridiagonal);
    SpectrumSlice s = solve_slice(fam, 0.0);
    CHECK(s.energies(0) == Catch::Approx(-3.0).margin(1e-12));
    CHECK(s.energies(1) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("N=10 spectrum at lambda=1 is the exact d-boson ladder") {
    LinearFamily fam = build_ibm({10});
    REQUIRE(fam.n == 6);
    SpectrumSlice s = solve_slice(fam, 1.0);
    for (int m = 0; m < 6; ++m) CHECK(s.energies(m) == 2.0 * m / 10.0);
}

TEST_CASE("Fock oracle reproduces the direct constructions at N=2") {
    auto at1 = fock_oracle_spectrum(2, 1.0);
    // n_d/N is diagonal in the Fock basis: one n_d=0 state at 0, each
    // n_d=2 state at 1
    CHECK(std::count_if(at1.begin(), at1.end(), [](double e) { return std::abs(e) < 1e-12; }) == 1);
    CHECK(std::count_if(at1.begin(), at1.end(), [](double e) { return std::abs(e - 1.0) < 1e-12; }) >= 1);

    auto at0 = fock_oracle_spectrum(2, 0.0);
    CHECK(std::any_of(at0.begin(), at0.end(), [](double e) { return std::abs(e + 3.0) < 1e-10; }));
    CHECK(std::any_of(at0.begin(), at0.end(), [](double e) { return std::abs(e) < 1e-10; }));
}

TEST_CASE("oracle ceiling enforced") {
    CHECK_THROWS_AS(fock_oracle_spectrum(7, 0.5), ConfigError);
}

TEST_CASE("seniority-zero spectrum is a sub-multiset of the Fock spectrum") {
    for (int N : {2, 3, 4, 5}) {
        LinearFamily fam = build_ibm({N});
        for (double lambda : {0.0, 0.4, 0.8, 1.0}) {
            SpectrumSlice s = solve_slice(fam, lambda);
            std::vector<double> evs(s.energies.data(), s.energies.data() + fam.n);
            auto oracle = fock_oracle_spectrum(N, lambda);
            INFO("N=" << N << " lambda=" << lambda);
            CHECK(subset_deviation(evs, oracle) < 1e-10);
        }
    }
}

TEST_CASE("ground state at lambda=0 sits at the sigma=N value") {
    for (int N : {2, 3, 4, 5, 6, 10, 40}) {
        LinearFamily fam = build_ibm({N});
        SpectrumSlice s = solve_slice(fam, 0.0);
        double expected = -static_cast<double>(N) * (N + 4.0) / (static_cast<double>(N) * N);
        INFO("N=" << N);
        CHECK(s.energies(0) == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("builder output is exactly symmetric") {
    LinearFamily fam = build_ibm({17});
    CHECK((fam.h0 - fam.h0.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fam.v - fam.v.transpose()).cwiseAbs().maxCoeff() == 0.0);
}
