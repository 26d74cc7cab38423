#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "epfield/common.hpp"
#include "epfield/linear_family.hpp"

namespace epf {

/// s-d boson pairing Hamiltonian restricted to the J = v = 0 subspace:
/// H(lambda) = lambda * n_d/N - (1 - lambda) * Q.Q/N^2.
struct IbmModelSpec {
    int boson_number = 0;

    int dimension() const { return boson_number / 2 + 1; }
};

/// Seniority-zero basis |n_d>, n_d = 0, 2, ..., 2*floor(N/2). The d-pair
/// ladder gives <n_d+2|P+|n_d> = sqrt((n_d+2)(n_d+5)) on v = 0 states, and
/// the s-boson pair contributes sqrt(n_s(n_s-1)); together with the diagonal
/// n_d(n_s+1) + (n_d+5)n_s of the normal plus reversed ordering this fixes
/// every matrix element of Q.Q in the subspace. These elements are validated
/// against the full Fock-space oracle below; see the tests.
inline LinearFamily build_ibm(const IbmModelSpec& spec) {
    int N = spec.boson_number;
    if (N < 1) throw ConfigError("build_ibm: boson number must be >= 1");
    int n = spec.dimension();
    if (n < 2)
        throw ConfigError("build_ibm: N = " + std::to_string(N) +
                          " gives a 1-dimensional subspace; no level dynamics");

    double Nd = static_cast<double>(N);
    Eigen::VectorXd a_diag(n), b_diag(n), b_sub(n - 1);
    for (int m = 0; m < n; ++m) {
        double nd = 2.0 * m;
        double ns = Nd - nd;
        a_diag(m) = nd / Nd;
        b_diag(m) = (nd * (ns + 1.0) + (nd + 5.0) * ns) / (Nd * Nd);
        if (m + 1 < n)
            b_sub(m) = std::sqrt((nd + 2.0) * (nd + 5.0)) * std::sqrt(ns * (ns - 1.0)) / (Nd * Nd);
    }

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m < n; ++m) {
        b(m, m) = b_diag(m);
        if (m + 1 < n) {
            b(m, m + 1) = b_sub(m);
            b(m + 1, m) = b_sub(m);
        }
    }
    Eigen::MatrixXd h0 = -b;
    Eigen::MatrixXd v = b;
    for (int m = 0; m < n; ++m) v(m, m) += a_diag(m);

    LinearFamily fam = make_family(std::move(h0), std::move(v), "ibm[N=" + std::to_string(N) + "]");
    fam.affine = AffineBands{std::move(a_diag), std::move(b_diag), std::move(b_sub)};
    return fam;
}

// ---------------------------------------------------------------------------
// Full Fock-space oracle. Builds n_d and Q_m as explicit second-quantized
// operators over all C(N+5,5) N-boson states (no subspace restriction) and
// diagonalizes the assembled Hamiltonian. Used to validate build_ibm.
// ---------------------------------------------------------------------------

namespace detail {

// occupation vector: slot 0 = s boson, slots 1..5 = d_{m}, m = -2..2
using FockState = std::array<int, 6>;

inline void enumerate_states(int remaining, int slot, FockState& cur, std::vector<FockState>& out) {
    if (slot == 5) {
        cur[5] = remaining;
        out.push_back(cur);
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        cur[slot] = k;
        enumerate_states(remaining - k, slot + 1, cur, out);
    }
}

struct FockBasis {
    std::vector<FockState> states;
    std::map<FockState, int> index;

    explicit FockBasis(int N) {
        FockState cur{};
        enumerate_states(N, 0, cur, states);
        for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = static_cast<int>(i);
    }

    int dim() const { return static_cast<int>(states.size()); }
};

// one-body operator b!_create b_annihilate in the occupation basis
inline Eigen::MatrixXd hop(const FockBasis& basis, int create, int annihilate) {
    int d = basis.dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        FockState st = basis.states[static_cast<std::size_t>(j)];
        if (st[annihilate] == 0) continue;
        double amp = std::sqrt(static_cast<double>(st[annihilate]));
        st[annihilate] -= 1;
        amp *= std::sqrt(static_cast<double>(st[create] + 1));
        st[create] += 1;
        m(basis.index.at(st), j) += amp;
    }
    return m;
}

}  // namespace detail

/// Assembles H(lambda) in the full N-boson Fock space over {s, d_-2..d_2}
/// and returns all eigenvalues sorted ascending. N is capped at 6
/// (dimension 462) because this is a validation oracle, not a solver.
inline std::vector<double> fock_oracle_spectrum(int N, double lambda) {
    if (N < 1) throw ConfigError("fock_oracle_spectrum: N must be >= 1");
    if (N > 6) throw ConfigError("fock_oracle_spectrum: N = " + std::to_string(N) +
                                 " exceeds the oracle ceiling of 6");
    detail::FockBasis basis(N);
    int d = basis.dim();
    auto slot_d = [](int m) { return 1 + (m + 2); };  // d_m occupation slot

    Eigen::MatrixXd n_d = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        int tot = 0;
        for (int m = -2; m <= 2; ++m) tot += basis.states[static_cast<std::size_t>(j)][slot_d(m)];
        n_d(j, j) = static_cast<double>(tot);
    }

    std::array<Eigen::MatrixXd, 5> q;  // q[m+2] = Q_m = d!_m s + (-)^m s! d_-m
    for (int m = -2; m <= 2; ++m) {
        double sign = (m % 2 == 0) ? 1.0 : -1.0;
        q[static_cast<std::size_t>(m + 2)] =
            detail::hop(basis, slot_d(m), 0) + sign * detail::hop(basis, 0, slot_d(-m));
    }

    Eigen::MatrixXd qq = Eigen::MatrixXd::Zero(d, d);
    for (int m = -2; m <= 2; ++m) {
        double sign = (m % 2 == 0) ? 1.0 : -1.0;
        qq += sign * q[static_cast<std::size_t>(m + 2)] * q[static_cast<std::size_t>(-m + 2)];
    }
    double asym = (qq - qq.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, qq.cwiseAbs().maxCoeff()))
        throw NumericalError("fock_oracle_spectrum: Q.Q assembled asymmetric");
    qq = ((qq + qq.transpose()) * 0.5).eval();

    double Nd = static_cast<double>(N);
    Eigen::MatrixXd h = (lambda / Nd) * n_d - ((1.0 - lambda) / (Nd * Nd)) * qq;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("fock_oracle_spectrum: eigensolver failed");
    std::vector<double> evals(es.eigenvalues().data(), es.eigenvalues().data() + d);
    return evals;  // Eigen returns them sorted ascending
}

}  // namespace epf
