#pragma once

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "skrl/disorder_core.hpp"
#include "skrl/errors.hpp"
#include "skrl/graph_kit.hpp"
#include "skrl/kahan.hpp"

namespace skrl::weight_engine {

using disorder_core::Beta;
using disorder_core::DisorderMatrix;
using graph_kit::LabeledGraph;

struct WeightContext {
    DisorderMatrix g;
    Beta beta;
    Eigen::MatrixXd tanh_bg; // tanh(beta*g) per edge
    Eigen::MatrixXd bg;      // beta*g per edge

    WeightContext(const DisorderMatrix& g_, Beta beta_) : g(g_), beta(beta_) {
        bg = beta.value * g.entries;
        tanh_bg = bg.unaryExpr([](double x) { return std::tanh(x); });
    }

    int n() const { return g.n; }
    double t(int i, int j) const { return tanh_bg(i, j); }
};

struct EdgeMoment {
    double t2 = 0.0;      // E tanh^2(beta g)
    double t4 = 0.0;      // E tanh^4(beta g)
    double variance = 0.0; // Var g = 1/n
};

namespace detail {

// product of m(i,j) over the edges of mask, optionally skipping one edge bit
inline double edge_product(std::uint64_t mask, int n, const Eigen::MatrixXd& m,
                           std::uint64_t skip_bits = 0) {
    const auto& d = graph_kit::detail::edge_decode(n);
    double p = 1.0;
    mask &= ~skip_bits;
    while (mask) {
        int b = std::countr_zero(mask);
        mask &= mask - 1;
        p *= m(d.ei[b], d.ej[b]);
    }
    return p;
}

struct GaussHermite {
    std::vector<double> nodes;   // roots of H_k
    std::vector<double> weights; // normalized: sum w_i = 1 against exp(-x^2)/sqrt(pi)
};

// Golub-Welsch on the symmetric Jacobi matrix of the Hermite recurrence.
// Eigenvalues-only tridiagonal solve keeps this O(k^2); the weight at each
// node is the Christoffel function 1 / sum_j p_j(x)^2 over the orthonormal
// polynomials, which sums to 1 across nodes.
inline GaussHermite gauss_hermite(int k) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd sub(k - 1);
    for (int i = 1; i < k; ++i) sub(i - 1) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    GaussHermite q;
    q.nodes.resize(k);
    q.weights.resize(k);
    for (int i = 0; i < k; ++i) {
        double x = es.eigenvalues()(i);
        q.nodes[i] = x;
        // At far-out nodes the sum overflows to inf, rounding the weight to
        // zero; the true weight is far below the double range there.
        double pm = 0.0, p = 1.0, acc = 1.0;
        for (int j = 1; j < k; ++j) {
            double pn = (x * p - std::sqrt((j - 1) / 2.0) * pm) / std::sqrt(j / 2.0);
            if (!std::isfinite(pn)) {
                acc = std::numeric_limits<double>::infinity();
                break;
            }
            pm = p;
            p = pn;
            acc += pn * pn;
        }
        q.weights[i] = 1.0 / acc;
    }
    return q;
}

} // namespace detail

inline double graph_weight(const LabeledGraph& gamma, const WeightContext& ctx) {
    return detail::edge_product(gamma.edges, gamma.n, ctx.tanh_bg);
}

inline double path_weight(const LabeledGraph& gamma, const WeightContext& ctx) {
    return detail::edge_product(gamma.edges, gamma.n, ctx.bg);
}

inline double hat_z_graph_sum(const WeightContext& ctx) {
    if (ctx.n() > 7)
        throw resource_limit_error("hat_z_graph_sum: n exceeds the closed-graph sum cap");
    kahan_sum acc;
    graph_kit::enumerate_closed_graphs(ctx.n(), -1, [&](const LabeledGraph& g) {
        acc.add(graph_weight(g, ctx));
    });
    return acc.value();
}

inline EdgeMoment edge_moments(Beta beta, int n, int quad_points = 96) {
    if (quad_points < 32) throw std::invalid_argument("edge_moments: quad_points must be >= 32");
    if (n < 1) throw invalid_dimension_error("edge_moments: n must be positive");
    double s = beta.value / std::sqrt(static_cast<double>(n)); // sd of beta*g
    auto eval = [s](int k) {
        auto q = detail::gauss_hermite(k);
        kahan_sum a2, a4;
        for (int i = 0; i < k; ++i) {
            double x = std::numbers::sqrt2 * s * q.nodes[i];
            double t = std::tanh(x);
            double t2 = t * t;
            a2.add(q.weights[i] * t2);
            a4.add(q.weights[i] * t2 * t2);
        }
        return std::pair<double, double>{a2.value(), a4.value()};
    };
    // tanh has poles at i*pi/2, so a wide integrand keeps a fixed rule well
    // away from machine precision; double the rule until the result settles.
    auto [t2, t4] = eval(quad_points);
    for (int k = 2 * quad_points; k <= 2048; k *= 2) {
        auto [u2, u4] = eval(k);
        bool settled = std::abs(u2 - t2) <= 4e-15 && std::abs(u4 - t4) <= 4e-15;
        t2 = u2;
        t4 = u4;
        if (settled) break;
    }
    EdgeMoment m;
    m.t2 = t2;
    m.t4 = t4;
    m.variance = 1.0 / n;
    return m;
}

// E (sum_{|gamma| >= k} w(gamma))^2 = sum_{|gamma| >= k} t2^{|gamma|}: distinct
// closed graphs are L2-orthogonal (a singly covered edge leaves an odd tanh
// moment, which vanishes).
inline double exact_tail_second_moment(int n, int k, Beta beta) {
    EdgeMoment m = edge_moments(beta, n);
    int emax = n * (n - 1) / 2;
    std::vector<double> pw(emax + 1);
    pw[0] = 1.0;
    for (int e = 1; e <= emax; ++e) pw[e] = pw[e - 1] * m.t2;
    kahan_sum acc;
    graph_kit::enumerate_closed_graphs(n, -1, [&](const LabeledGraph& g) {
        int e = g.edge_count();
        if (e >= k) acc.add(pw[e]);
    });
    return acc.value();
}

} // namespace skrl::weight_engine
