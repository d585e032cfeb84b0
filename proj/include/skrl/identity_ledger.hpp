#pragma once

// Error ledgers for the exact correlation and resolvent identities: the
// per-pair R terms driven by full closed-graph enumeration, the matrix Q
// ledger driven by cycle/path enumeration, and the appendix constant.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "skrl/dense.hpp"
#include "skrl/disorder_core.hpp"
#include "skrl/errors.hpp"
#include "skrl/graph_kit.hpp"
#include "skrl/kahan.hpp"
#include "skrl/path_resolvent.hpp"
#include "skrl/weight_engine.hpp"

namespace skrl::identity_ledger {

using disorder_core::Beta;
using disorder_core::DisorderMatrix;
using graph_kit::LabeledGraph;
using path_resolvent::DenseMatrix;
using weight_engine::WeightContext;

inline constexpr int r_ledger_cap = 7; // full closed-graph table
inline constexpr int q_ledger_cap = 8; // cycle/path enumeration
inline constexpr int probe_cap = 14;   // direct pair probe (no edge masks)

struct RLedger {
    int i = 0;
    int j = 0;
    double cutoff_kn = std::numeric_limits<double>::infinity();
    double r1 = 0.0, r2 = 0.0, r3 = 0.0, r4 = 0.0, r5 = 0.0, r6 = 0.0, r7 = 0.0;
    double hat_z = 1.0; // the closed-graph partition sum, kept for the identity's rhs
};

struct QLedger {
    int n = 0;
    double beta = 0.0;
    int k1 = 3;
    int k2 = 3;
    DenseMatrix q, q1, q2, q3, q4, q5;
    DenseMatrix q1_le, q1_gt, q2_le, q2_gt, q6_le, q6_gt;
};

namespace detail {

// one row per simple closed graph, weights in the tanh metric
struct TauTable {
    std::vector<std::uint64_t> emask;
    std::vector<std::uint32_t> vmask;
    std::vector<std::uint8_t> vcount;
    std::vector<double> w;
    double hat_z = 0.0;
};

inline TauTable build_tau_table(const WeightContext& ctx) {
    const int n = ctx.n();
    TauTable t;
    t.emask.reserve(std::size_t{1} << ((n - 1) * (n - 2) / 2));
    kahan_sum z;
    graph_kit::enumerate_closed_graphs(n, -1, [&](const LabeledGraph& g) {
        double w = weight_engine::graph_weight(g, ctx);
        std::uint32_t vm = g.vertex_mask();
        t.emask.push_back(g.edges);
        t.vmask.push_back(vm);
        t.vcount.push_back(static_cast<std::uint8_t>(std::popcount(vm)));
        t.w.push_back(w);
        z.add(w);
    });
    t.hat_z = z.value();
    return t;
}

// does some cycle through {i,j} inside gamma meet the rest of gamma in at
// most one vertex?  decided by exhausting the paths i -> j within gamma.
inline bool admits_split_cycle(std::uint64_t gedges, int i, int j, int n) {
    const std::uint64_t ij_bit = std::uint64_t{1} << graph_kit::edge_index(i, j, n);
    const std::uint64_t rest_edges = gedges & ~ij_bit;
    struct Frame {
        int v;
        int next;
    };
    Frame fr[graph_kit::max_graph_n + 1];
    std::uint64_t path[graph_kit::max_graph_n + 1];
    fr[0] = {i, 0};
    path[0] = 0;
    std::uint32_t visited = 1u << i;
    int depth = 0;
    while (depth >= 0) {
        Frame& top = fr[depth];
        if (top.next >= n) {
            visited &= ~(1u << top.v);
            --depth;
            continue;
        }
        int u = top.next++;
        if (visited & (1u << u)) continue;
        std::uint64_t bit = std::uint64_t{1} << graph_kit::edge_index(top.v, u, n);
        if (!(rest_edges & bit)) continue;
        if (u == j) {
            if (depth == 0) continue; // the bare edge is not a cycle
            std::uint64_t cyc = path[depth] | bit | ij_bit;
            std::uint64_t rem = gedges ^ cyc;
            std::uint32_t cvm = graph_kit::detail::vertex_mask_of(cyc, n);
            std::uint32_t rvm = graph_kit::detail::vertex_mask_of(rem, n);
            if (std::popcount(cvm & rvm) <= 1) return true;
            continue;
        }
        ++depth;
        fr[depth] = {u, 0};
        path[depth] = path[depth - 1] | bit;
        visited |= 1u << u;
    }
    return false;
}

inline RLedger r_ledger_with_table(const WeightContext& ctx, const TauTable& tab, int i, int j,
                                   double cutoff) {
    const int n = ctx.n();
    if (i == j) throw std::invalid_argument("build_r_ledger: i == j");
    if (i < 0 || j < 0 || i >= n || j >= n)
        throw std::invalid_argument("build_r_ledger: vertex out of range");
    if (!(cutoff > 0.0)) throw domain_violation_error("build_r_ledger: cutoff must be positive");
    const double t_ij = ctx.t(i, j);
    if (std::abs(t_ij) < 1e-300)
        throw degenerate_weight_error("build_r_ledger: tanh(beta g_ij) vanishes");

    RLedger led;
    led.i = i;
    led.j = j;
    led.cutoff_kn = cutoff;
    led.hat_z = tab.hat_z;
    const std::uint64_t ij_bit = std::uint64_t{1} << graph_kit::edge_index(i, j, n);
    const double kn2 = cutoff * cutoff;
    const double kn4 = kn2 * kn2;

    // r1: closed graphs through {i,j} admitting no split cycle
    kahan_sum r1;
    for (std::size_t r = 0; r < tab.emask.size(); ++r) {
        if (!(tab.emask[r] & ij_bit)) continue;
        if (admits_split_cycle(tab.emask[r], i, j, n)) continue;
        r1.add(weight_engine::detail::edge_product(tab.emask[r], n, ctx.tanh_bg, ij_bit));
    }
    led.r1 = r1.value();

    // cycles through {i,j}, grouped small/large by vertex count against the
    // cutoff; weights carry every edge except {i,j} itself
    struct Group {
        std::uint32_t vmask;
        kahan_sum w;
    };
    std::vector<Group> small, large;
    auto slot = [](std::vector<Group>& gs, std::uint32_t vm) -> kahan_sum& {
        for (Group& g : gs)
            if (g.vmask == vm) return g.w;
        gs.push_back({vm, {}});
        return gs.back().w;
    };
    kahan_sum r6, r7, large_sum;
    graph_kit::enumerate_cycles(n, std::make_pair(i, j), n, [&](const LabeledGraph& c) {
        double wot = weight_engine::detail::edge_product(c.edges, n, ctx.tanh_bg, ij_bit);
        double bprod = weight_engine::detail::edge_product(c.edges, n, ctx.bg, ij_bit);
        r6.add(bprod - wot);
        r7.add(wot);
        std::uint32_t vm = c.vertex_mask();
        if (std::popcount(vm) < kn2) {
            slot(small, vm).add(wot);
        } else {
            slot(large, vm).add(wot);
            large_sum.add(wot);
        }
    });
    led.r6 = (ctx.bg(i, j) - t_ij) + r6.value();
    led.r7 = t_ij * t_ij * r7.value();
    led.r4 = large_sum.value() * tab.hat_z;

    kahan_sum r2, r3, r5;
    for (const Group& g : small) {
        kahan_sum lo, hi;
        for (std::size_t r = 0; r < tab.vmask.size(); ++r) {
            if (std::popcount(tab.vmask[r] & g.vmask) < 2) continue;
            if (tab.vcount[r] < kn4)
                lo.add(tab.w[r]);
            else
                hi.add(tab.w[r]);
        }
        r2.add(g.w.value() * lo.value());
        r3.add(g.w.value() * hi.value());
    }
    for (const Group& g : large) {
        kahan_sum far;
        for (std::size_t r = 0; r < tab.vmask.size(); ++r)
            if (std::popcount(tab.vmask[r] & g.vmask) <= 1) far.add(tab.w[r]);
        r5.add(g.w.value() * far.value());
    }
    led.r2 = r2.value();
    led.r3 = r3.value();
    led.r5 = r5.value();
    return led;
}

} // namespace detail

inline RLedger build_r_ledger(const DisorderMatrix& g, Beta beta, int i, int j, double cutoff) {
    if (g.n > r_ledger_cap)
        throw resource_limit_error("build_r_ledger: n exceeds the closed-graph table cap");
    WeightContext ctx(g, beta);
    detail::TauTable tab = detail::build_tau_table(ctx);
    return detail::r_ledger_with_table(ctx, tab, i, j, cutoff);
}

// max over pairs of |m_ij - rhs| for the exact correlation identity
inline double verify_correlation_identity(const DisorderMatrix& g, Beta beta, double cutoff) {
    if (g.n > r_ledger_cap)
        throw resource_limit_error("verify_correlation_identity: n exceeds the closed-graph table cap");
    WeightContext ctx(g, beta);
    detail::TauTable tab = detail::build_tau_table(ctx);
    DenseMatrix m = disorder_core::gibbs_exact(g, beta).m;
    DenseMatrix p = path_resolvent::p_matrix(g, beta, path_resolvent::TruncationPolicy::exact());
    double worst = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = i + 1; j < g.n; ++j) {
            RLedger led = detail::r_ledger_with_table(ctx, tab, i, j, cutoff);
            double t = ctx.t(i, j);
            double rhs = p.a(i, j) +
                         (1.0 - t * t) / led.hat_z * (led.r1 - led.r2 - led.r3 - led.r4 + led.r5) -
                         led.r6 - led.r7;
            worst = std::max(worst, std::abs(m.a(i, j) - rhs));
        }
    }
    return worst;
}

namespace detail {

struct CycleRec {
    std::uint64_t emask;
    std::uint32_t vmask;
    int len;
    double wb; // product of beta*g over the cycle's edges
};

// zeta transform: z[A] = sum of f[S] over S subset of A, in place
inline void subset_sums(std::vector<double>& f, int n, int skip_bit) {
    for (int b = 0; b < n; ++b) {
        if (b == skip_bit) continue;
        const std::uint32_t bit = 1u << b;
        for (std::uint32_t m = 0; m < f.size(); ++m)
            if (m & bit) f[m] += f[m ^ bit];
    }
}

} // namespace detail

inline QLedger build_q_ledger(const DisorderMatrix& g, Beta beta, int k1, int k2, int loop_cap) {
    const int n = g.n;
    if (n > q_ledger_cap)
        throw resource_limit_error("build_q_ledger: n exceeds the enumeration cap");
    if (k1 < 3 || k2 < 3) throw domain_violation_error("build_q_ledger: k1, k2 must be >= 3");
    if (loop_cap > n) loop_cap = n;

    WeightContext ctx(g, beta);
    const double b2 = beta.value * beta.value;
    QLedger led;
    led.n = n;
    led.beta = beta.value;
    led.k1 = k1;
    led.k2 = k2;

    DenseMatrix p = path_resolvent::p_matrix(g, beta, path_resolvent::TruncationPolicy::exact());
    Eigen::MatrixXd a = -ctx.bg;
    a.diagonal().array() += 1.0 + b2;
    led.q.a = p.a * a;
    led.q.a.diagonal().array() -= 1.0;

    auto zeros = [n] { return DenseMatrix{Eigen::MatrixXd::Zero(n, n), false}; };
    led.q1 = zeros();
    led.q2 = zeros();
    led.q3 = zeros();
    led.q4 = zeros();
    led.q5 = zeros();
    led.q1_le = zeros();
    led.q2_le = zeros();
    led.q6_le = zeros();
    led.q6_gt = zeros();
    led.q2.symmetric = led.q4.symmetric = true;

    std::vector<detail::CycleRec> cycles;
    graph_kit::enumerate_cycles(n, std::nullopt, loop_cap, [&](const LabeledGraph& c) {
        cycles.push_back({c.edges, c.vertex_mask(), c.edge_count(),
                          weight_engine::detail::edge_product(c.edges, n, ctx.bg)});
    });

    // per-vertex cycle sums and subset tables; z_all/z_le give, for each
    // target j and allowed-vertex set A, the weight of cycles through j whose
    // other vertices stay inside A
    const std::uint32_t full = (n >= 32) ? ~0u : ((1u << n) - 1);
    std::vector<double> cyc_all(n, 0.0), cyc_le(n, 0.0);
    std::vector<std::vector<double>> z_all(n), z_le(n);
    for (int j = 0; j < n; ++j) {
        z_all[j].assign(std::size_t{1} << n, 0.0);
        z_le[j].assign(std::size_t{1} << n, 0.0);
    }
    for (const detail::CycleRec& c : cycles) {
        for (std::uint32_t vm = c.vmask; vm;) {
            int j = std::countr_zero(vm);
            vm &= vm - 1;
            cyc_all[j] += c.wb;
            z_all[j][c.vmask & ~(1u << j)] += c.wb;
            if (c.len <= k2) {
                cyc_le[j] += c.wb;
                z_le[j][c.vmask & ~(1u << j)] += c.wb;
            }
        }
    }
    for (int j = 0; j < n; ++j) {
        detail::subset_sums(z_all[j], n, j);
        detail::subset_sums(z_le[j], n, j);
        led.q2.a(j, j) = -2.0 * cyc_all[j];
        led.q2_le.a(j, j) = -2.0 * cyc_le[j];
        led.q4.a(j, j) = -b2 * ((g.entries.col(j).array().square().sum()) -
                                static_cast<double>(n - 1) / n);
    }
    led.q2_gt = DenseMatrix{led.q2.a - led.q2_le.a, true};

    // q3 walks every cycle once, charging both orientations of each edge
    for (const detail::CycleRec& c : cycles) {
        auto edges = LabeledGraph{n, c.emask}.edge_list();
        for (auto [u, v] : edges) {
            std::uint64_t bit = std::uint64_t{1} << graph_kit::edge_index(u, v, n);
            double wskip = weight_engine::detail::edge_product(c.emask, n, ctx.bg, bit);
            double sv_uv = 0.0, sv_vu = 0.0; // sum of g_kj^2 over the cycle's vertices
            for (std::uint32_t vm = c.vmask; vm;) {
                int k = std::countr_zero(vm);
                vm &= vm - 1;
                if (k != u) sv_uv += g.entries(k, v) * g.entries(k, v);
                if (k != v) sv_vu += g.entries(k, u) * g.entries(k, u);
            }
            led.q3.a(u, v) += b2 * sv_uv * wskip;
            led.q3.a(v, u) += b2 * sv_vu * wskip;
        }
    }

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) led.q5.a(i, j) = b2 * g.entries(i, j) * g.entries(i, j) * p.a(i, j);

    // one path sweep per unordered pair feeds q1 and the q6 split for both
    // orientations; the subset tables answer the disjointness constraint
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            long double q1_ij = 0, q1_ji = 0, q1le_ij = 0, q1le_ji = 0;
            long double q6le_ij = 0, q6le_ji = 0, q6gt_ij = 0, q6gt_ji = 0;
            graph_kit::enumerate_saps(i, j, n, n - 1, [&](const LabeledGraph& path) {
                double wp = weight_engine::detail::edge_product(path.edges, n, ctx.bg);
                std::uint32_t idx = full & ~path.vertex_mask();
                q1_ij += -2.0L * wp * z_all[j][idx];
                q1_ji += -2.0L * wp * z_all[i][idx];
                if (path.edge_count() <= k1) {
                    q1le_ij += -2.0L * wp * z_le[j][idx];
                    q1le_ji += -2.0L * wp * z_le[i][idx];
                    q6le_ij += -2.0L * wp * (cyc_le[j] - z_le[j][idx]);
                    q6le_ji += -2.0L * wp * (cyc_le[i] - z_le[i][idx]);
                } else {
                    q6gt_ij += -2.0L * wp * cyc_le[j];
                    q6gt_ji += -2.0L * wp * cyc_le[i];
                }
            });
            led.q1.a(i, j) = static_cast<double>(q1_ij);
            led.q1.a(j, i) = static_cast<double>(q1_ji);
            led.q1_le.a(i, j) = static_cast<double>(q1le_ij);
            led.q1_le.a(j, i) = static_cast<double>(q1le_ji);
            led.q6_le.a(i, j) = static_cast<double>(q6le_ij);
            led.q6_le.a(j, i) = static_cast<double>(q6le_ji);
            led.q6_gt.a(i, j) = static_cast<double>(q6gt_ij);
            led.q6_gt.a(j, i) = static_cast<double>(q6gt_ji);
        }
    }
    led.q1_gt = DenseMatrix{led.q1.a - led.q1_le.a, false};
    return led;
}

inline double verify_q_decomposition(const QLedger& led, const DenseMatrix& p) {
    if (p.n() != led.n) throw invalid_dimension_error("verify_q_decomposition: size mismatch");
    const double b2 = led.beta * led.beta;
    Eigen::MatrixXd rhs = (b2 / led.n) * p.a + led.q1.a + led.q2.a + led.q3.a + p.a * led.q4.a +
                          led.q5.a;
    return (led.q.a - rhs).cwiseAbs().maxCoeff();
}

inline double verify_cutoff_decomposition(const QLedger& led, const DenseMatrix& p) {
    if (p.n() != led.n) throw invalid_dimension_error("verify_cutoff_decomposition: size mismatch");
    const int n = led.n;
    const double b2 = led.beta * led.beta;
    Eigen::MatrixXd pmi = p.a - Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd split = led.q1.a -
                            (led.q1_gt.a + pmi * led.q2_le.a - led.q6_gt.a - led.q6_le.a);
    Eigen::MatrixXd inner = led.q2_le.a + led.q4.a;
    inner.diagonal().array() += b2 / n;
    Eigen::MatrixXd full = p.a * inner + led.q3.a + led.q5.a + led.q1_gt.a + led.q2_gt.a -
                           led.q6_gt.a - led.q6_le.a;
    double worst = split.cwiseAbs().maxCoeff();
    return std::max(worst, (led.q.a - full).cwiseAbs().maxCoeff());
}

// the appendix constant; algebraically zero on [0, 1)
inline double c_beta(Beta beta) {
    const double b = beta.value;
    if (b >= 1.0) throw domain_violation_error("c_beta: beta must be below 1");
    const double b2 = b * b;
    const double b4 = b2 * b2;
    const double b6 = b4 * b2;
    const double om = 1.0 - b2;
    return (1.0 + b2) * (1.0 + b2) / om + b2 / om + 3.0 * b4 + 3.0 * b6 / om + 1.0 -
           2.0 * (1.0 + b2) - 2.0 * (1.0 + b2) * (2.0 * b2 + 2.0 * b4 / om) + 2.0 * b2;
}

// scalar error probes for one pair, exact over all self-avoiding paths; cheap
// enough for Monte Carlo rate fits without any graph tables
struct PairProbe {
    double r6 = 0.0;
    double r7 = 0.0;
    double q3 = 0.0;
    double q5 = 0.0;
    double p_ij = 0.0;
};

inline PairProbe probe_pair(const DisorderMatrix& g, Beta beta, int i, int j) {
    const int n = g.n;
    if (n > probe_cap) throw resource_limit_error("probe_pair: n exceeds the probe cap");
    if (i == j || i < 0 || j < 0 || i >= n || j >= n)
        throw std::invalid_argument("probe_pair: bad pair");
    WeightContext ctx(g, beta);
    const double b2 = beta.value * beta.value;

    struct Frame {
        int v;
        int next;
        double pb, pt, sv;
    };
    std::vector<Frame> fr(static_cast<std::size_t>(n) + 1);
    fr[0] = {i, 0, 1.0, 1.0, 0.0};
    std::uint32_t visited = 1u << i;
    int depth = 0;
    long double p_sum = 0, r6_sum = 0, r7_sum = 0, q3_sum = 0;
    while (depth >= 0) {
        Frame& top = fr[depth];
        if (top.next >= n) {
            visited &= ~(1u << top.v);
            --depth;
            continue;
        }
        int u = top.next++;
        if (visited & (1u << u)) continue;
        if (u == j) {
            double pb = top.pb * ctx.bg(top.v, j);
            p_sum += pb;
            if (depth >= 1) { // closing a genuine loop through {i,j}
                double pt = top.pt * ctx.tanh_bg(top.v, j);
                r6_sum += pb - pt;
                r7_sum += pt;
                q3_sum += pb * top.sv;
            }
            continue;
        }
        double gu = g.entries(u, j);
        ++depth;
        fr[depth] = {u, 0, fr[depth - 1].pb * ctx.bg(fr[depth - 1].v, u),
                     fr[depth - 1].pt * ctx.tanh_bg(fr[depth - 1].v, u),
                     fr[depth - 1].sv + gu * gu};
        visited |= 1u << u;
    }
    PairProbe out;
    out.p_ij = static_cast<double>(p_sum);
    out.r6 = (ctx.bg(i, j) - ctx.t(i, j)) + static_cast<double>(r6_sum);
    out.r7 = ctx.t(i, j) * ctx.t(i, j) * static_cast<double>(r7_sum);
    out.q3 = b2 * static_cast<double>(q3_sum);
    out.q5 = b2 * g.entries(i, j) * g.entries(i, j) * out.p_ij;
    return out;
}

} // namespace skrl::identity_ledger
