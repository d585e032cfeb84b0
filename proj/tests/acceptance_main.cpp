// Acceptance harness: runs the twelve desk-scale checks, prints one line per
// criterion, exits nonzero if any fail. Tolerances are pinned here on purpose.
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "skrl/disorder_core.hpp"
#include "skrl/experiment_harness.hpp"
#include "skrl/graph_kit.hpp"
#include "skrl/identity_ledger.hpp"
#include "skrl/path_resolvent.hpp"
#include "skrl/weight_engine.hpp"

namespace eh = skrl::experiment_harness;
namespace gk = skrl::graph_kit;
namespace il = skrl::identity_ledger;
namespace pr = skrl::path_resolvent;
using skrl::disorder_core::Beta;
using skrl::disorder_core::gibbs_exact;
using skrl::disorder_core::sample_goe;
using skrl::hash64;

namespace {

constexpr std::uint64_t kBaseSeed = 12345;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Outcome a1_q_decomposition() {
    double worst = 0.0;
    int cells = 0;
    std::uint64_t idx = 0;
    for (int n : {5, 6, 7, 8})
        for (double b : {0.3, 0.7, 1.2})
            for (int s = 0; s < 20; ++s) {
                auto g = sample_goe(n, hash64(kBaseSeed, "a1", idx++));
                il::QLedger led = il::build_q_ledger(g, Beta(b), 3, 3, n);
                auto p = pr::p_matrix(g, Beta(b), pr::TruncationPolicy::exact());
                worst = std::max(worst, il::verify_q_decomposition(led, p));
                ++cells;
            }
    return {worst <= 1e-9, fmt("max residual %.3g over %d runs, tol 1e-9", worst, cells)};
}

Outcome a2_correlation() {
    double worst = 0.0;
    int cells = 0;
    std::uint64_t idx = 0;
    for (int n : {4, 5, 6, 7})
        for (double b : {0.4, 0.8})
            for (double cutoff : {2.0, 3.0, kInf})
                for (int s = 0; s < 10; ++s) {
                    auto g = sample_goe(n, hash64(kBaseSeed, "a2", idx++));
                    worst = std::max(worst, il::verify_correlation_identity(g, Beta(b), cutoff));
                    ++cells;
                }
    return {worst <= 1e-9, fmt("max residual %.3g over %d runs, tol 1e-9", worst, cells)};
}

Outcome a3_cutoff_split() {
    double worst = 0.0;
    int cells = 0;
    std::uint64_t idx = 0;
    for (int k : {3, 10})
        for (double b : {0.5, 1.1})
            for (int s = 0; s < 10; ++s) {
                auto g = sample_goe(6, hash64(kBaseSeed, "a3", idx++));
                il::QLedger led = il::build_q_ledger(g, Beta(b), k, k, 6);
                auto p = pr::p_matrix(g, Beta(b), pr::TruncationPolicy::exact());
                worst = std::max(worst, il::verify_cutoff_decomposition(led, p));
                ++cells;
            }
    return {worst <= 1e-9, fmt("max residual %.3g over %d runs, tol 1e-9", worst, cells)};
}

Outcome a4_closed_forms() {
    double worst = 0.0;
    std::uint64_t idx = 0;
    for (double b : {0.6, 1.0})
        for (int s = 0; s < 3; ++s) {
            Beta beta(b);
            auto g2 = sample_goe(2, hash64(kBaseSeed, "a4", idx++));
            double bg = b * g2.entries(0, 1);
            auto gs = gibbs_exact(g2, beta);
            worst = std::max(worst, std::abs(gs.m.a(0, 1) - std::tanh(bg)));

            il::QLedger led = il::build_q_ledger(g2, beta, 3, 3, 2);
            double b2 = b * b;
            double gv = g2.entries(0, 1);
            double diag = b2 - b2 * gv * gv;
            double off = b2 * b * gv;
            worst = std::max(worst, std::abs(led.q.a(0, 0) - diag));
            worst = std::max(worst, std::abs(led.q.a(1, 1) - diag));
            worst = std::max(worst, std::abs(led.q.a(0, 1) - off));
            worst = std::max(worst, std::abs(led.q.a(1, 0) - off));

            auto g3 = sample_goe(3, hash64(kBaseSeed, "a4", idx++));
            double t01 = std::tanh(b * g3.entries(0, 1));
            double t02 = std::tanh(b * g3.entries(0, 2));
            double t12 = std::tanh(b * g3.entries(1, 2));
            auto gs3 = gibbs_exact(g3, beta);
            double m01 = (t01 + t02 * t12) / (1.0 + t01 * t02 * t12);
            worst = std::max(worst, std::abs(gs3.m.a(0, 1) - m01));
        }
    return {worst <= 1e-12, fmt("max deviation %.3g, tol 1e-12", worst)};
}

Outcome a5_convergence_trend() {
    eh::ExperimentConfig cfg;
    cfg.experiment = eh::Experiment::convergence;
    cfg.n_grid = {8, 12, 16, 20};
    cfg.beta_grid = {0.5};
    cfg.seeds = 30;
    cfg.base_seed = kBaseSeed;
    // exact path sums even at n=20, so the trend measures the matrix itself
    // rather than a truncation of it
    cfg.truncation = pr::TruncationPolicy::exact();
    auto recs = eh::run(cfg);
    auto s = eh::summarize(recs, cfg);
    auto crit = s.at("criteria").at(0);
    return {s.at("pass").get<bool>(),
            fmt("op-norm ratio %.3f (need <= %.2f), op monotone %s, frob monotone %s",
                crit.at("mr_op_ratio").get<double>(), eh::trend_ratio,
                crit.at("mr_op_monotone").get<bool>() ? "yes" : "no",
                crit.at("mp_f_monotone").get<bool>() ? "yes" : "no")};
}

Outcome a6_frobenius_level() {
    eh::ExperimentConfig cfg;
    cfg.experiment = eh::Experiment::frobenius_appendix;
    cfg.n_grid = {8, 12, 16};
    cfg.beta_grid = {0.3, 0.5};
    cfg.seeds = 100;
    cfg.base_seed = kBaseSeed;
    auto recs = eh::run(cfg);
    auto s = eh::summarize(recs, cfg);
    std::ostringstream d;
    for (const auto& pb : s.at("per_beta"))
        d << fmt("beta %.1f slope %.3g level %.3g; ", pb.at("beta").get<double>(),
                 pb.at("slope").get<double>(), pb.at("mean_level").get<double>());
    d << fmt("need |slope| <= %.2f x level", eh::slope_level_ratio);
    return {s.at("pass").get<bool>(), d.str()};
}

Outcome a7_constant_vanishes() {
    double worst = 0.0;
    for (int i = 1; i <= 99; ++i)
        worst = std::max(worst, std::abs(il::c_beta(Beta(i / 100.0))));
    return {worst <= 1e-10, fmt("max |c_beta| %.3g on 99-point grid, tol 1e-10", worst)};
}

Outcome a8_resolvent_norm() {
    int hits = 0;
    double lo = kInf, hi = 0.0;
    for (int s = 0; s < 10; ++s) {
        auto g = sample_goe(400, hash64(kBaseSeed, "a8", static_cast<std::uint64_t>(s)));
        double v = pr::operator_norm(pr::resolvent(g, Beta(0.5)));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (v >= 3.6 && v <= 4.4) ++hits;
    }
    return {hits >= 9,
            fmt("%d/10 seeds in [3.6, 4.4], norms span [%.3f, %.3f], target 4.0", hits, lo, hi)};
}

Outcome a9_partition_statistics() {
    eh::ExperimentConfig cfg;
    cfg.experiment = eh::Experiment::zhat_dist;
    cfg.n_grid = {16};
    cfg.beta_grid = {0.5};
    cfg.seeds = 500;
    cfg.base_seed = kBaseSeed;
    auto recs = eh::run(cfg);
    auto s = eh::summarize(recs, cfg);
    auto cell = s.at("cells").at(0);
    return {s.at("pass").get<bool>(),
            fmt("mean %.6f +- %.6f (need within 3 se of 1), var log %.6f vs sigma^2 %.6f "
                "(need within 25%%)",
                cell.at("mean_hat_z").get<double>(), cell.at("se_hat_z").get<double>(),
                cell.at("var_log_hat_z").get<double>(), cell.at("sigma_sq").get<double>())};
}

Outcome a10_combinatorics() {
    for (int n = 3; n <= 8; ++n) {
        int dim = n * (n - 1) / 2 - n + 1;
        if (gk::count_closed_graphs(n) != (std::uint64_t{1} << dim))
            return {false, fmt("closed-graph count off at n=%d", n)};
    }
    for (int n = 3; n <= 6; ++n)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                auto rep = gk::check_phi_injectivity(i, j, n);
                if (!rep.injective)
                    return {false, fmt("phi collision at n=%d pair (%d,%d)", n, i, j)};
            }
    // one grouped pass over all (gamma, tau) pairs counts every preimage at once
    for (int n = 3; n <= 6; ++n) {
        std::vector<gk::LabeledGraph> closed;
        gk::enumerate_closed_graphs(n, -1,
                                    [&](const gk::LabeledGraph& g) { closed.push_back(g); });
        std::unordered_map<std::uint64_t, std::uint64_t> counts;
        counts.reserve(closed.size() * 4);
        for (const auto& gamma : closed)
            for (const auto& tau : closed) {
                auto sp = gk::psi_split(gamma, tau);
                counts[(sp.psi1.edges << 20) | sp.psi2.edges] += 1;
            }
        for (const auto& [key, cnt] : counts) {
            gk::LabeledGraph eta1{n, key >> 20};
            double v = eta1.vertex_count();
            double e = eta1.edge_count();
            double bound = (1.0 + v) * std::exp(2.0 * (e - v));
            if (static_cast<double>(cnt) > bound + 1e-9)
                return {false, fmt("psi preimage bound broken at n=%d (count %llu, bound %.3f)",
                                   n, static_cast<unsigned long long>(cnt), bound)};
        }
    }
    for (int n = 3; n <= 6; ++n) {
        std::string bad;
        gk::enumerate_closed_graphs(n, -1, [&](const gk::LabeledGraph& gamma) {
            if (!bad.empty()) return;
            auto parts = gk::veblen_decompose(gamma);
            std::uint64_t acc = 0;
            for (const auto& c : parts) {
                if (gk::classify(c) != gk::GraphClass::cycle && c.edges != 0)
                    bad = fmt("veblen part not a cycle at n=%d", n);
                if (acc & c.edges) bad = fmt("veblen parts share an edge at n=%d", n);
                acc ^= c.edges;
            }
            if (acc != gamma.edges) bad = fmt("veblen reassembly failed at n=%d", n);
        });
        if (!bad.empty()) return {false, bad};
    }
    return {true, "counts n<=8, injectivity, preimage bound, decomposition n<=6 all hold"};
}

Outcome a11_tail_decay() {
    double base = skrl::weight_engine::exact_tail_second_moment(8, 0, Beta(0.5));
    double worst_ratio = 0.0;
    for (int k = 3; k <= 8; ++k) {
        double tail = skrl::weight_engine::exact_tail_second_moment(8, k, Beta(0.5));
        double cap = std::pow(0.5, k) * base;
        if (tail > cap) return {false, fmt("tail at k=%d is %.3g, cap %.3g", k, tail, cap)};
        worst_ratio = std::max(worst_ratio, cap > 0.0 ? tail / cap : 0.0);
    }
    return {true, fmt("tail/cap peaks at %.3f across k in [3,8]", worst_ratio)};
}

Outcome a12_rate_probes() {
    eh::ExperimentConfig cfg;
    cfg.experiment = eh::Experiment::rate_probe;
    cfg.n_grid = {4, 6, 8, 10};
    cfg.beta_grid = {0.5};
    cfg.seeds = 500;
    cfg.base_seed = kBaseSeed;
    auto recs = eh::run(cfg);
    auto s = eh::summarize(recs, cfg);
    std::ostringstream d;
    for (const auto& q : s.at("per_beta").at(0).at("quantities"))
        d << q.at("name").get<std::string>() << " "
          << fmt("%.2f+-%.2f ", q.at("slope").get<double>(), q.at("slope_se").get<double>());
    d << fmt("(need slopes in [%.1f, %.1f])", eh::rate_slope_lo, eh::rate_slope_hi);
    return {s.at("pass").get<bool>(), d.str()};
}

} // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> table{
        {"A1", "q decomposition", a1_q_decomposition},
        {"A2", "correlation identity", a2_correlation},
        {"A3", "cutoff split", a3_cutoff_split},
        {"A4", "closed forms", a4_closed_forms},
        {"A5", "convergence trend", a5_convergence_trend},
        {"A6", "frobenius level", a6_frobenius_level},
        {"A7", "vanishing constant", a7_constant_vanishes},
        {"A8", "resolvent norm", a8_resolvent_norm},
        {"A9", "partition statistics", a9_partition_statistics},
        {"A10", "combinatorial census", a10_combinatorics},
        {"A11", "tail decay", a11_tail_decay},
        {"A12", "rate probes", a12_rate_probes},
    };
    int failures = 0;
    for (const auto& c : table) {
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        if (!out.pass) ++failures;
        std::printf("%-4s %-22s %s  %s\n", c.id, c.name, out.pass ? "PASS" : "FAIL",
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", table.size() - failures, table.size());
    return failures == 0 ? 0 : 1;
}
