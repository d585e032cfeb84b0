#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "skrl/dense.hpp"
#include "skrl/disorder_core.hpp"
#include "skrl/errors.hpp"
#include "skrl/kahan.hpp"
#include "skrl/rng.hpp"

namespace skrl::path_resolvent {

using disorder_core::Beta;
using disorder_core::DisorderMatrix;

struct TruncationPolicy {
    enum class Mode { exact_dp, dfs_truncated };

    Mode mode = Mode::exact_dp;
    int max_path_len = -1; // < 0: unbounded (exact_dp only)

    static TruncationPolicy exact() { return {Mode::exact_dp, -1}; }
    static TruncationPolicy truncated(int len) { return {Mode::dfs_truncated, len}; }

    friend bool operator==(const TruncationPolicy&, const TruncationPolicy&) = default;
};

namespace detail {

inline constexpr int exact_dp_cap = 20;
inline constexpr int dfs_len_cap = 7;

// Subset DP over vertex sets excluding the source i: h[S][v] = sum of path
// weights i -> v with interior support S (v in S). One buffer per call,
// masks over the n-1 non-source vertices.
inline void p_row_exact(const Eigen::MatrixXd& b, int i, std::vector<double>& acc,
                        std::vector<double>& buf) {
    int n = static_cast<int>(b.rows());
    int m = n - 1;
    // label map: position p in [0,m) <-> vertex (p < i ? p : p+1)
    auto vert = [&](int p) { return p < i ? p : p + 1; };
    std::size_t words = (std::size_t{1} << m) * m;
    if (buf.size() < words) buf.assign(words, 0.0);
    else std::fill(buf.begin(), buf.begin() + words, 0.0);
    for (int p = 0; p < m; ++p)
        buf[(std::size_t(1) << p) * m + p] = b(i, vert(p));
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t total = std::size_t{1} << m;
    for (std::size_t s = 1; s < total; ++s) {
        const double* row = buf.data() + s * m;
        std::uint64_t rem = s;
        while (rem) {
            int p = std::countr_zero(rem);
            rem &= rem - 1;
            double w = row[p];
            if (w == 0.0) continue;
            acc[vert(p)] += w;
            std::uint64_t out = ~s & (total - 1);
            while (out) {
                int q = std::countr_zero(out);
                out &= out - 1;
                buf[(s | (std::size_t{1} << q)) * m + q] += w * b(vert(p), vert(q));
            }
        }
    }
}

// DFS over self-avoiding paths from i with at most max_len edges; every node
// of the search tree is a path endpoint, so one sweep fills the whole row.
inline void p_row_dfs(const Eigen::MatrixXd& b, int i, int max_len, std::vector<double>& acc) {
    int n = static_cast<int>(b.rows());
    std::fill(acc.begin(), acc.end(), 0.0);
    struct Frame {
        int v;
        int next;
        double prod;
    };
    std::vector<Frame> fr(static_cast<std::size_t>(max_len) + 1);
    std::uint32_t visited = 1u << i;
    int depth = 0;
    fr[0] = {i, 0, 1.0};
    while (depth >= 0) {
        Frame& top = fr[depth];
        if (top.next >= n || depth >= max_len) {
            visited &= ~(1u << top.v);
            --depth;
            continue;
        }
        int u = top.next++;
        if (visited & (1u << u)) continue;
        double w = top.prod * b(top.v, u);
        acc[u] += w;
        ++depth;
        fr[depth] = {u, 0, w};
        visited |= 1u << u;
    }
}

} // namespace detail

inline DenseMatrix p_matrix(const DisorderMatrix& g, Beta beta, TruncationPolicy policy) {
    int n = g.n;
    if (n < 1) throw invalid_dimension_error("p_matrix: n must be positive");
    if (policy.mode == TruncationPolicy::Mode::exact_dp) {
        if (n > detail::exact_dp_cap)
            throw resource_limit_error("p_matrix: exact subset DP capped at n <= 20");
    } else {
        if (policy.max_path_len < 1 || policy.max_path_len > detail::dfs_len_cap)
            throw resource_limit_error("p_matrix: dfs truncation requires 1 <= max_path_len <= 7");
        if (n > 31) throw resource_limit_error("p_matrix: dfs mode capped at n <= 31");
    }
    Eigen::MatrixXd b = beta.value * g.entries;
    DenseMatrix p;
    p.a = Eigen::MatrixXd::Identity(n, n);
    p.symmetric = true;
    std::vector<double> acc(n, 0.0);
    std::vector<double> buf;
    for (int i = 0; i + 1 < n; ++i) {
        if (policy.mode == TruncationPolicy::Mode::exact_dp)
            detail::p_row_exact(b, i, acc, buf);
        else
            detail::p_row_dfs(b, i, policy.max_path_len, acc);
        for (int j = i + 1; j < n; ++j) {
            p.a(i, j) = acc[j];
            p.a(j, i) = acc[j];
        }
    }
    return p;
}

inline DenseMatrix resolvent(const DisorderMatrix& g, Beta beta) {
    int n = g.n;
    double b = beta.value;
    Eigen::MatrixXd a = -b * g.entries;
    a.diagonal().array() += 1.0 + b * b;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::MatrixXd x = lu.solve(Eigen::MatrixXd::Identity(n, n));

    double anorm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    double xnorm1 = x.cwiseAbs().colwise().sum().maxCoeff();
    if (!(anorm1 * xnorm1 < 1e12))
        throw numerical_failure_error("resolvent: condition estimate exceeds 1e12");
    double resid = (a * x - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-10))
        throw numerical_failure_error("resolvent: residual check failed");

    DenseMatrix r;
    r.a = 0.5 * (x + x.transpose());
    r.symmetric = true;
    return r;
}

inline double frobenius_norm(const DenseMatrix& a) {
    kahan_sum acc;
    const double* d = a.a.data();
    std::size_t total = static_cast<std::size_t>(a.a.rows()) * a.a.cols();
    for (std::size_t k = 0; k < total; ++k) acc.add(d[k] * d[k]);
    return std::sqrt(acc.value());
}

inline double operator_norm(const DenseMatrix& a) {
    int n = a.n();
    if (n == 0) return 0.0;
    if (a.symmetric) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.a, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    // power iteration on A^T A with randomized restarts
    double best = -1.0;
    bool converged = false;
    for (int restart = 0; restart < 3; ++restart) {
        Eigen::VectorXd v(n);
        for (int k = 0; k < n; ++k)
            v(k) = standard_normal(0x5EEDull + restart, static_cast<std::uint64_t>(k));
        double vn = v.norm();
        if (vn == 0.0) continue;
        v /= vn;
        double lambda = 0.0;
        for (int it = 0; it < 20000; ++it) {
            Eigen::VectorXd y = a.a * v;
            double ln = y.squaredNorm();
            Eigen::VectorXd w = a.a.transpose() * y;
            double wn = w.norm();
            if (wn == 0.0) {
                lambda = 0.0;
                converged = true;
                break;
            }
            v = w / wn;
            if (std::abs(ln - lambda) <= 1e-10 * std::max(ln, 1e-300)) {
                lambda = ln;
                converged = true;
                break;
            }
            lambda = ln;
        }
        best = std::max(best, lambda);
    }
    if (!converged) throw numerical_failure_error("operator_norm: power iteration did not converge");
    return std::sqrt(std::max(best, 0.0));
}

} // namespace skrl::path_resolvent
