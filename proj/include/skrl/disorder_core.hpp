#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skrl/dense.hpp"
#include "skrl/errors.hpp"
#include "skrl/kahan.hpp"
#include "skrl/rng.hpp"

namespace skrl::disorder_core {

struct Beta {
    double value = 0.0;

    Beta() = default;
    explicit Beta(double v) : value(v) {
        if (!(v >= 0.0)) throw std::invalid_argument("beta must be a nonnegative real");
    }
};

struct DisorderMatrix {
    int n = 0;
    Eigen::MatrixXd entries;
};

struct SpinConfiguration {
    int n = 0;
    std::uint64_t bits = 0; // bit set <=> spin +1

    int spin(int i) const { return (bits >> i) & 1 ? 1 : -1; }
};

struct GibbsSummary {
    double z = 0.0;
    double hat_z = 0.0;
    path_resolvent::DenseMatrix m;
};

// Edge {i,j}, i<j, uses the counter pair derived from its upper-triangle rank,
// so every coupling is a pure function of (seed, edge) regardless of order.
inline DisorderMatrix sample_goe(int n, std::uint64_t seed) {
    if (n < 1) throw invalid_dimension_error("sample_goe: n must be positive");
    DisorderMatrix g;
    g.n = n;
    g.entries = Eigen::MatrixXd::Zero(n, n);
    double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::uint64_t k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++k) {
            double v = standard_normal(seed, k) * scale;
            g.entries(i, j) = v;
            g.entries(j, i) = v;
        }
    return g;
}

inline double hamiltonian(const SpinConfiguration& sigma, const DisorderMatrix& g, Beta beta) {
    if (sigma.n != g.n) throw invalid_dimension_error("hamiltonian: spin/disorder dimension mismatch");
    double h = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j)
            h += g.entries(i, j) * sigma.spin(i) * sigma.spin(j);
    return beta.value * h;
}

namespace detail {

// Gray-code walk over all 2^n configurations; h[m] is the Hamiltonian of the
// m-th visited configuration (start: all spins -1). Also returns max.
inline double hamiltonian_walk(const DisorderMatrix& g, Beta beta, std::vector<double>& h) {
    int n = g.n;
    std::size_t nconf = std::size_t{1} << n;
    h.resize(nconf);
    std::vector<double> s(n, -1.0);
    double cur = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) cur += g.entries(i, j);
    cur *= beta.value;
    h[0] = cur;
    double hmax = cur;
    const double* ge = g.entries.data();
    for (std::size_t m = 1; m < nconf; ++m) {
        int b = std::countr_zero(m);
        const double* row = ge + static_cast<std::size_t>(b) * n;
        double dot = 0.0;
        for (int k = 0; k < n; ++k) dot += row[k] * s[k];
        cur += -2.0 * beta.value * s[b] * dot;
        s[b] = -s[b];
        h[m] = cur;
        if (cur > hmax) hmax = cur;
    }
    return hmax;
}

inline double log_cosh_sum(const DisorderMatrix& g, Beta beta) {
    kahan_sum acc;
    for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j) {
            double x = beta.value * g.entries(i, j);
            // log(cosh x) written to stay finite for large |x|
            acc.add(std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))) - std::numbers::ln2);
        }
    return acc.value();
}

inline void check_cap(int n, int cap, const char* who) {
    if (n > cap)
        throw resource_limit_error(std::string(who) +
                                   ": n exceeds the exact enumeration cap; use the truncated workflows for larger n");
    if (n < 1) throw invalid_dimension_error(std::string(who) + ": n must be positive");
}

} // namespace detail

inline GibbsSummary gibbs_exact(const DisorderMatrix& g, Beta beta, int cap = 20) {
    detail::check_cap(g.n, cap, "gibbs_exact");
    int n = g.n;
    std::size_t nconf = std::size_t{1} << n;

    std::vector<double> h;
    double hmax = detail::hamiltonian_walk(g, beta, h);

    kahan_sum zacc;
    std::vector<double> s(n, -1.0);
    std::vector<double> pair(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t m = 0; m < nconf; ++m) {
        if (m) {
            int b = std::countr_zero(m);
            s[b] = -s[b];
        }
        double w = std::exp(h[m] - hmax);
        zacc.add(w);
        for (int a = 0; a + 1 < n; ++a) {
            double t = w * s[a];
            double* prow = pair.data() + static_cast<std::size_t>(a) * n;
            for (int b = a + 1; b < n; ++b) prow[b] += t * s[b];
        }
    }
    double zsum = zacc.value();

    GibbsSummary out;
    double logz = hmax - n * std::numbers::ln2 + std::log(zsum);
    out.z = std::exp(logz);
    out.hat_z = std::exp(logz - detail::log_cosh_sum(g, beta));
    out.m.a = Eigen::MatrixXd::Identity(n, n);
    out.m.symmetric = true;
    for (int a = 0; a + 1 < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            double v = pair[static_cast<std::size_t>(a) * n + b] / zsum;
            out.m.a(a, b) = v;
            out.m.a(b, a) = v;
        }
    return out;
}

// z and hat_z only; used by the distribution experiments where M is not needed.
inline GibbsSummary gibbs_partition(const DisorderMatrix& g, Beta beta, int cap = 20) {
    detail::check_cap(g.n, cap, "gibbs_partition");
    int n = g.n;
    std::size_t nconf = std::size_t{1} << n;
    std::vector<double> h;
    double hmax = detail::hamiltonian_walk(g, beta, h);
    kahan_sum zacc;
    for (std::size_t m = 0; m < nconf; ++m) zacc.add(std::exp(h[m] - hmax));
    GibbsSummary out;
    double logz = hmax - n * std::numbers::ln2 + std::log(zacc.value());
    out.z = std::exp(logz);
    out.hat_z = std::exp(logz - detail::log_cosh_sum(g, beta));
    return out;
}

// One-point Gibbs means <sigma_i>; exactly zero by spin-flip symmetry, kept
// separate so the cancellation can be tested without burdening gibbs_exact.
inline std::vector<double> gibbs_one_point(const DisorderMatrix& g, Beta beta, int cap = 20) {
    detail::check_cap(g.n, cap, "gibbs_one_point");
    int n = g.n;
    std::size_t nconf = std::size_t{1} << n;
    std::vector<double> h;
    double hmax = detail::hamiltonian_walk(g, beta, h);
    kahan_sum zacc;
    std::vector<kahan_sum> sacc(n);
    std::vector<double> s(n, -1.0);
    for (std::size_t m = 0; m < nconf; ++m) {
        if (m) {
            int b = std::countr_zero(m);
            s[b] = -s[b];
        }
        double w = std::exp(h[m] - hmax);
        zacc.add(w);
        for (int i = 0; i < n; ++i) sacc[i].add(w * s[i]);
    }
    std::vector<double> out(n);
    double z = zacc.value();
    for (int i = 0; i < n; ++i) out[i] = sacc[i].value() / z;
    return out;
}

} // namespace skrl::disorder_core
