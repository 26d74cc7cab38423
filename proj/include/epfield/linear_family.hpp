#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epfield/common.hpp"

namespace epf {

enum class Storage { dense, tridiagonal };

// Tridiagonal band form of an affine pencil lambda*A - (1-lambda)*B with A
// diagonal and B tridiagonal. Evaluating in this form keeps the lambda=0 and
// lambda=1 endpoints exact instead of routing them through h0 + lambda*v.
struct AffineBands {
    Eigen::VectorXd a_diag;
    Eigen::VectorXd b_diag;
    Eigen::VectorXd b_sub;
};

/// A one-parameter pencil H(lambda) = h0 + lambda * v of real symmetric
/// matrices. Immutable after construction; safe to share across threads.
struct LinearFamily {
    Eigen::MatrixXd h0;
    Eigen::MatrixXd v;
    int n = 0;
    double omega = 0.0;  // scale constant, always n - 1
    Storage storage = Storage::dense;
    std::string label;
    bool commuting_pair = false;  // warning flag: [h0, v] = 0
    std::optional<AffineBands> affine;

    Eigen::MatrixXd matrix_at(double lambda) const {
        if (affine) {
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i)
                h(i, i) = lambda * affine->a_diag(i) + (lambda - 1.0) * affine->b_diag(i);
            for (int i = 0; i + 1 < n; ++i) {
                double s = (lambda - 1.0) * affine->b_sub(i);
                h(i, i + 1) = s;
                h(i + 1, i) = s;
            }
            return h;
        }
        return h0 + lambda * v;
    }

    // Band accessors for the tridiagonal fast path.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> bands_at(double lambda) const {
        Eigen::VectorXd diag(n), sub(std::max(0, n - 1));
        if (affine) {
            for (int i = 0; i < n; ++i)
                diag(i) = lambda * affine->a_diag(i) + (lambda - 1.0) * affine->b_diag(i);
            for (int i = 0; i + 1 < n; ++i) sub(i) = (lambda - 1.0) * affine->b_sub(i);
        } else {
            for (int i = 0; i < n; ++i) diag(i) = h0(i, i) + lambda * v(i, i);
            for (int i = 0; i + 1 < n; ++i) sub(i) = h0(i + 1, i) + lambda * v(i + 1, i);
        }
        return {std::move(diag), std::move(sub)};
    }
};

namespace detail {

inline bool is_tridiagonal(const Eigen::MatrixXd& m) {
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i)
            if (std::abs(i - j) > 1 && m(i, j) != 0.0) return false;
    return true;
}

inline double symmetry_deviation(const Eigen::MatrixXd& m) {
    double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace detail

/// Builds a family from two symmetric matrices. Symmetry deviations below
/// 1e-12 (relative) are repaired by averaging with the transpose; larger
/// deviations are rejected as malformed input. A commuting pair [h0,v] = 0
/// is accepted but flagged, since level repulsion is absent there.
inline LinearFamily make_family(Eigen::MatrixXd h0, Eigen::MatrixXd v, std::string label = {}) {
    if (h0.rows() != h0.cols() || v.rows() != v.cols())
        throw ConfigError("make_family: matrices must be square");
    if (h0.rows() != v.rows())
        throw ConfigError("make_family: dimension mismatch between h0 (" +
                          std::to_string(h0.rows()) + ") and v (" + std::to_string(v.rows()) + ")");
    int n = static_cast<int>(h0.rows());
    if (n < 2) throw ConfigError("make_family: dimension must be at least 2");

    constexpr double sym_tol = 1e-12;
    for (auto* m : {&h0, &v}) {
        double dev = detail::symmetry_deviation(*m);
        if (dev > sym_tol)
            throw ConfigError("make_family: matrix is not symmetric (relative deviation " +
                              std::to_string(dev) + ")");
        if (dev > 0.0) *m = ((*m + m->transpose()) * 0.5).eval();
    }

    LinearFamily fam;
    fam.h0 = std::move(h0);
    fam.v = std::move(v);
    fam.n = n;
    fam.omega = static_cast<double>(n - 1);
    fam.storage = (detail::is_tridiagonal(fam.h0) && detail::is_tridiagonal(fam.v))
                      ? Storage::tridiagonal
                      : Storage::dense;
    fam.label = std::move(label);

    Eigen::MatrixXd comm = fam.h0 * fam.v - fam.v * fam.h0;
    double comm_scale = std::max(1e-300, fam.h0.cwiseAbs().maxCoeff() * fam.v.cwiseAbs().maxCoeff());
    fam.commuting_pair = comm.cwiseAbs().maxCoeff() <= 1e-12 * comm_scale;
    return fam;
}

// ---------------------------------------------------------------------------
// Matrix text input. Two formats:
//   dense      one whitespace-separated row per line
//   coordinate header line "coo <n>", then "<row> <col> <value>" triplets
//              (0-based indices; symmetric counterpart filled automatically)
// Lines starting with '#' are comments.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd parse_matrix_text(std::istream& in, const std::string& origin = "<input>") {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        std::istringstream probe(line);
        std::string tok;
        if (probe >> tok) lines.push_back(line);
    }
    if (lines.empty()) throw ConfigError(origin + ": empty matrix text");

    std::istringstream first(lines.front());
    std::string head;
    first >> head;
    if (head == "coo") {
        long n = -1;
        if (!(first >> n) || n <= 0) throw ConfigError(origin + ": bad coo header, expected 'coo <n>'");
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            std::istringstream row(lines[i]);
            long r, c;
            double val;
            if (!(row >> r >> c >> val))
                throw ConfigError(origin + ": bad coo entry '" + lines[i] + "'");
            if (r < 0 || c < 0 || r >= n || c >= n)
                throw ConfigError(origin + ": coo index out of range in '" + lines[i] + "'");
            m(r, c) = val;
            m(c, r) = val;
        }
        return m;
    }

    std::vector<std::vector<double>> rows;
    for (const auto& l : lines) {
        std::istringstream row(l);
        std::vector<double> vals;
        double x;
        while (row >> x) vals.push_back(x);
        if (!row.eof()) throw ConfigError(origin + ": non-numeric token in '" + l + "'");
        rows.push_back(std::move(vals));
    }
    std::size_t n = rows.size();
    for (const auto& r : rows)
        if (r.size() != n)
            throw ConfigError(origin + ": matrix is not square (" + std::to_string(n) + " rows, row of length " +
                              std::to_string(r.size()) + ")");
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return m;
}

inline Eigen::MatrixXd load_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file: " + path);
    return parse_matrix_text(in, path);
}

inline LinearFamily build_generic(const std::string& h0_text, const std::string& v_text,
                                  std::string label = {}) {
    std::istringstream a(h0_text), b(v_text);
    return make_family(parse_matrix_text(a, "h0"), parse_matrix_text(b, "v"), std::move(label));
}

inline LinearFamily build_generic_from_files(const std::string& h0_path, const std::string& v_path) {
    return make_family(load_matrix_file(h0_path), load_matrix_file(v_path),
                       h0_path + " + " + v_path);
}

/// Seeded dense symmetric test pair with standard-normal entries.
inline LinearFamily random_family(int n, std::uint64_t seed) {
    GaussianRng rng(seed);
    Eigen::MatrixXd a(n, n), b(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = rng.normal();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) b(i, j) = rng.normal();
    a = ((a + a.transpose()) * 0.5).eval();
    b = ((b + b.transpose()) * 0.5).eval();
    return make_family(std::move(a), std::move(b), "random[" + std::to_string(seed) + "]");
}

}  // namespace epf
