#pragma once

// Disorder-averaged experiment drivers: configuration, deterministic seed
// substreams, per-record statistics, summaries with pass criteria, and
// CSV/JSON emission.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skrl/disorder_core.hpp"
#include "skrl/errors.hpp"
#include "skrl/identity_ledger.hpp"
#include "skrl/kahan.hpp"
#include "skrl/path_resolvent.hpp"
#include "skrl/pool.hpp"
#include "skrl/rng.hpp"

#ifndef SKRL_VERSION
#define SKRL_VERSION "0.1.0-untracked"
#endif

namespace skrl::experiment_harness {

using disorder_core::Beta;
using disorder_core::DisorderMatrix;
using path_resolvent::DenseMatrix;
using path_resolvent::TruncationPolicy;

inline constexpr double identity_tolerance = 1e-9;
inline constexpr double trend_ratio = 0.7;       // final/initial bound for the op-norm trend
inline constexpr double slope_level_ratio = 0.05; // |slope| <= ratio * mean level
inline constexpr double zhat_mean_ses = 3.0;
inline constexpr double zhat_var_rel = 0.25;
inline constexpr double rate_slope_lo = -2.0;
inline constexpr double rate_slope_hi = -1.0;

enum class Experiment { convergence, frobenius_appendix, zhat_dist, rate_probe, identities };

inline const char* experiment_name(Experiment e) {
    switch (e) {
        case Experiment::convergence: return "convergence";
        case Experiment::frobenius_appendix: return "frobenius_appendix";
        case Experiment::zhat_dist: return "zhat_dist";
        case Experiment::rate_probe: return "rate_probe";
        case Experiment::identities: return "identities";
    }
    return "unknown";
}

inline Experiment experiment_from_name(const std::string& s) {
    for (Experiment e : {Experiment::convergence, Experiment::frobenius_appendix,
                         Experiment::zhat_dist, Experiment::rate_probe, Experiment::identities})
        if (s == experiment_name(e)) return e;
    throw std::invalid_argument("unknown experiment: " + s);
}

struct ExperimentConfig {
    Experiment experiment = Experiment::convergence;
    std::vector<int> n_grid{8, 12, 16};
    std::vector<double> beta_grid{0.3, 0.5, 0.7};
    int seeds = 30;
    std::uint64_t base_seed = 1;
    std::optional<TruncationPolicy> truncation; // nullopt: exact up to 16, then dfs length 5
    int workers = 1;
    std::string output_path = "out";
    double cutoff = std::numeric_limits<double>::infinity(); // identities
    int k1 = 3;                                              // identities
    int k2 = 3;                                              // identities

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct RunRecord {
    std::uint64_t seed = 0;
    int n = 0;
    double beta = 0.0;
    std::string label; // identity name on identity rows, empty elsewhere
    std::vector<std::pair<std::string, double>> stats;
    double runtime_ms = 0.0; // wall clock; the one field outside the determinism contract
};

struct SigmaSquared {
    double value = 0.0;

    static SigmaSquared from_beta(Beta beta) {
        const double b2 = beta.value * beta.value;
        if (beta.value >= 1.0)
            throw domain_violation_error("SigmaSquared: beta must be below 1");
        return {-0.5 * (std::log1p(-b2) + b2 + b2 * b2 / 2.0)};
    }
};

inline TruncationPolicy policy_for(const ExperimentConfig& cfg, int n) {
    if (cfg.truncation) return *cfg.truncation;
    return n <= 16 ? TruncationPolicy::exact() : TruncationPolicy::truncated(5);
}

inline std::vector<std::string> stat_columns(Experiment e) {
    switch (e) {
        case Experiment::convergence: return {"norm_MP_F", "norm_PR_op", "norm_MR_op"};
        case Experiment::frobenius_appendix: return {"frob_sq"};
        case Experiment::zhat_dist: return {"hat_z", "log_hat_z"};
        case Experiment::rate_probe: return {"r6", "r7", "q3_01", "q5_01"};
        case Experiment::identities: return {"residual", "pass"};
    }
    return {};
}

// only the convergence schema carries wall clock; everything else stays
// byte-reproducible across reruns
inline bool schema_has_runtime(Experiment e) { return e == Experiment::convergence; }
inline bool schema_has_label(Experiment e) { return e == Experiment::identities; }

// -------- config (de)serialization --------

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"experiment", experiment_name(c.experiment)},
                       {"n_grid", c.n_grid},
                       {"beta_grid", c.beta_grid},
                       {"seeds", c.seeds},
                       {"base_seed", c.base_seed},
                       {"workers", c.workers},
                       {"output_path", c.output_path},
                       {"k1", c.k1},
                       {"k2", c.k2}};
    if (std::isinf(c.cutoff))
        j["cutoff"] = "inf";
    else
        j["cutoff"] = c.cutoff;
    if (c.truncation)
        j["truncation"] = nlohmann::json{
            {"mode", c.truncation->mode == TruncationPolicy::Mode::exact_dp ? "exact_dp"
                                                                            : "dfs_truncated"},
            {"max_path_len", c.truncation->max_path_len}};
    else
        j["truncation"] = "auto";
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c.experiment = experiment_from_name(j.at("experiment").get<std::string>());
    c.n_grid = j.at("n_grid").get<std::vector<int>>();
    c.beta_grid = j.at("beta_grid").get<std::vector<double>>();
    c.seeds = j.at("seeds").get<int>();
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    c.workers = j.at("workers").get<int>();
    c.output_path = j.at("output_path").get<std::string>();
    c.k1 = j.at("k1").get<int>();
    c.k2 = j.at("k2").get<int>();
    const nlohmann::json& cut = j.at("cutoff");
    c.cutoff = cut.is_string() ? std::numeric_limits<double>::infinity() : cut.get<double>();
    const nlohmann::json& tr = j.at("truncation");
    if (tr.is_string()) {
        c.truncation.reset();
    } else {
        TruncationPolicy p;
        p.mode = tr.at("mode").get<std::string>() == "exact_dp"
                     ? TruncationPolicy::Mode::exact_dp
                     : TruncationPolicy::Mode::dfs_truncated;
        p.max_path_len = tr.at("max_path_len").get<int>();
        c.truncation = p;
    }
}

// -------- run points and validation --------

namespace detail {

struct RunPoint {
    int n;
    double beta;
    std::uint64_t seed;
};

inline std::vector<RunPoint> run_points(const ExperimentConfig& cfg) {
    std::vector<RunPoint> pts;
    pts.reserve(cfg.n_grid.size() * cfg.beta_grid.size() * static_cast<std::size_t>(cfg.seeds));
    std::uint64_t flat = 0;
    for (int n : cfg.n_grid)
        for (double beta : cfg.beta_grid)
            for (int s = 0; s < cfg.seeds; ++s)
                pts.push_back({n, beta, hash64(cfg.base_seed, experiment_name(cfg.experiment),
                                                flat++)});
    return pts;
}

inline void validate_grids(const ExperimentConfig& cfg, int n_cap, bool beta_below_one) {
    if (cfg.seeds < 1) throw std::invalid_argument("config: seeds must be >= 1");
    if (cfg.n_grid.empty() || cfg.beta_grid.empty())
        throw std::invalid_argument("config: empty grid");
    for (int n : cfg.n_grid) {
        if (n < 2) throw std::invalid_argument("config: n must be >= 2");
        if (n > n_cap) throw resource_limit_error("config: n exceeds the experiment cap");
    }
    for (double b : cfg.beta_grid) {
        if (b < 0.0) throw std::invalid_argument("config: beta must be >= 0");
        if (beta_below_one && b >= 1.0)
            throw domain_violation_error("config: beta must be below 1 for this experiment");
    }
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline double mean(const std::vector<double>& v) {
    kahan_sum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    double m = mean(v);
    kahan_sum s;
    for (double x : v) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(v.size() - 1);
}

// least squares y = a*x + b, returns {a, b}
inline std::pair<double, double> linear_fit(const std::vector<double>& x,
                                            const std::vector<double>& y) {
    double mx = mean(x), my = mean(y);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        num += (x[k] - mx) * (y[k] - my);
        den += (x[k] - mx) * (x[k] - mx);
    }
    double a = num / den;
    return {a, my - a * mx};
}

inline double stat(const RunRecord& r, const std::string& name) {
    for (const auto& [k, v] : r.stats)
        if (k == name) return v;
    throw std::invalid_argument("record has no statistic named " + name);
}

// grid cell values in grid order, keyed by (n, beta)
template <class Pick>
std::vector<double> cell_values(const std::vector<RunRecord>& recs, int n, double beta,
                                Pick&& pick) {
    std::vector<double> out;
    for (const RunRecord& r : recs)
        if (r.n == n && r.beta == beta) out.push_back(pick(r));
    return out;
}

} // namespace detail

// -------- experiment runners --------

inline std::vector<RunRecord> run_convergence(const ExperimentConfig& cfg) {
    detail::validate_grids(cfg, 20, true);
    auto pts = detail::run_points(cfg);
    std::vector<RunRecord> recs(pts.size());
    pool::parallel_for(pts.size(), cfg.workers, [&](std::size_t k) {
        auto t0 = std::chrono::steady_clock::now();
        const auto& pt = pts[k];
        Beta beta(pt.beta);
        DisorderMatrix g = disorder_core::sample_goe(pt.n, pt.seed);
        DenseMatrix m = disorder_core::gibbs_exact(g, beta).m;
        DenseMatrix p = path_resolvent::p_matrix(g, beta, policy_for(cfg, pt.n));
        DenseMatrix r = path_resolvent::resolvent(g, beta);
        double mp = path_resolvent::frobenius_norm(DenseMatrix{m.a - p.a, true});
        double pr = path_resolvent::operator_norm(DenseMatrix{p.a - r.a, true});
        double mr = path_resolvent::operator_norm(DenseMatrix{m.a - r.a, true});
        recs[k] = RunRecord{pt.seed,
                            pt.n,
                            pt.beta,
                            "",
                            {{"norm_MP_F", mp}, {"norm_PR_op", pr}, {"norm_MR_op", mr}},
                            detail::elapsed_ms(t0)};
    });
    return recs;
}

inline std::vector<RunRecord> run_frobenius_appendix(const ExperimentConfig& cfg) {
    detail::validate_grids(cfg, 20, true);
    auto pts = detail::run_points(cfg);
    std::vector<RunRecord> recs(pts.size());
    pool::parallel_for(pts.size(), cfg.workers, [&](std::size_t k) {
        auto t0 = std::chrono::steady_clock::now();
        const auto& pt = pts[k];
        Beta beta(pt.beta);
        DisorderMatrix g = disorder_core::sample_goe(pt.n, pt.seed);
        DenseMatrix p = path_resolvent::p_matrix(g, beta, policy_for(cfg, pt.n));
        Eigen::MatrixXd a = -beta.value * g.entries;
        a.diagonal().array() += 1.0 + beta.value * beta.value;
        Eigen::MatrixXd q = p.a * a;
        q.diagonal().array() -= 1.0;
        recs[k] = RunRecord{pt.seed, pt.n,
                            pt.beta, "",
                            {{"frob_sq", q.squaredNorm()}},
                            detail::elapsed_ms(t0)};
    });
    return recs;
}

inline std::vector<RunRecord> run_zhat_distribution(const ExperimentConfig& cfg) {
    detail::validate_grids(cfg, 20, true);
    auto pts = detail::run_points(cfg);
    std::vector<RunRecord> recs(pts.size());
    pool::parallel_for(pts.size(), cfg.workers, [&](std::size_t k) {
        auto t0 = std::chrono::steady_clock::now();
        const auto& pt = pts[k];
        DisorderMatrix g = disorder_core::sample_goe(pt.n, pt.seed);
        double hz = disorder_core::gibbs_partition(g, Beta(pt.beta)).hat_z;
        recs[k] = RunRecord{pt.seed, pt.n,
                            pt.beta, "",
                            {{"hat_z", hz}, {"log_hat_z", std::log(hz)}},
                            detail::elapsed_ms(t0)};
    });
    return recs;
}

inline std::vector<RunRecord> run_rate_probe(const ExperimentConfig& cfg) {
    detail::validate_grids(cfg, 10, true); // exact ledgers stay cheap through n=10
    auto pts = detail::run_points(cfg);
    std::vector<RunRecord> recs(pts.size());
    pool::parallel_for(pts.size(), cfg.workers, [&](std::size_t k) {
        auto t0 = std::chrono::steady_clock::now();
        const auto& pt = pts[k];
        DisorderMatrix g = disorder_core::sample_goe(pt.n, pt.seed);
        auto probe = identity_ledger::probe_pair(g, Beta(pt.beta), 0, 1);
        recs[k] = RunRecord{pt.seed,
                            pt.n,
                            pt.beta,
                            "",
                            {{"r6", probe.r6},
                             {"r7", probe.r7},
                             {"q3_01", probe.q3},
                             {"q5_01", probe.q5}},
                            detail::elapsed_ms(t0)};
    });
    return recs;
}

inline std::vector<RunRecord> run_identities(const ExperimentConfig& cfg) {
    detail::validate_grids(cfg, identity_ledger::q_ledger_cap, false);
    auto pts = detail::run_points(cfg);
    // row layout per point is a pure function of (n, beta), so slots can be
    // preassigned and filled in parallel
    auto labels_for = [](int n, double beta) {
        std::vector<std::string> ls;
        if (n <= identity_ledger::r_ledger_cap && beta > 0.0) ls.push_back("correlation");
        ls.push_back("q_decomposition");
        ls.push_back("cutoff_decomposition");
        return ls;
    };
    std::vector<std::size_t> offset(pts.size() + 1, 0);
    for (std::size_t k = 0; k < pts.size(); ++k)
        offset[k + 1] = offset[k] + labels_for(pts[k].n, pts[k].beta).size();
    std::vector<RunRecord> recs(offset.back());
    pool::parallel_for(pts.size(), cfg.workers, [&](std::size_t k) {
        const auto& pt = pts[k];
        Beta beta(pt.beta);
        DisorderMatrix g = disorder_core::sample_goe(pt.n, pt.seed);
        std::size_t slot = offset[k];
        auto push = [&](const std::string& label, double residual, double ms) {
            recs[slot++] = RunRecord{pt.seed,
                                     pt.n,
                                     pt.beta,
                                     label,
                                     {{"residual", residual},
                                      {"pass", residual <= identity_tolerance ? 1.0 : 0.0}},
                                     ms};
        };
        if (pt.n <= identity_ledger::r_ledger_cap && pt.beta > 0.0) {
            auto t0 = std::chrono::steady_clock::now();
            double res = identity_ledger::verify_correlation_identity(g, beta, cfg.cutoff);
            push("correlation", res, detail::elapsed_ms(t0));
        }
        auto t1 = std::chrono::steady_clock::now();
        auto led = identity_ledger::build_q_ledger(g, beta, cfg.k1, cfg.k2, pt.n);
        DenseMatrix p = path_resolvent::p_matrix(g, beta, TruncationPolicy::exact());
        push("q_decomposition", identity_ledger::verify_q_decomposition(led, p),
             detail::elapsed_ms(t1));
        auto t2 = std::chrono::steady_clock::now();
        push("cutoff_decomposition", identity_ledger::verify_cutoff_decomposition(led, p),
             detail::elapsed_ms(t2));
    });
    return recs;
}

inline std::vector<RunRecord> run(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::convergence: return run_convergence(cfg);
        case Experiment::frobenius_appendix: return run_frobenius_appendix(cfg);
        case Experiment::zhat_dist: return run_zhat_distribution(cfg);
        case Experiment::rate_probe: return run_rate_probe(cfg);
        case Experiment::identities: return run_identities(cfg);
    }
    throw std::invalid_argument("run: unknown experiment");
}

// -------- summaries --------

inline nlohmann::json summarize_convergence(const std::vector<RunRecord>& recs,
                                            const ExperimentConfig& cfg) {
    nlohmann::json cells = nlohmann::json::array();
    std::vector<int> ns = cfg.n_grid;
    std::sort(ns.begin(), ns.end());
    bool pass = true;
    nlohmann::json criteria = nlohmann::json::array();
    for (double beta : cfg.beta_grid) {
        std::vector<double> med_mr, med_mp;
        for (int n : ns) {
            nlohmann::json cell{{"n", n}, {"beta", beta}};
            for (const char* name : {"norm_MP_F", "norm_PR_op", "norm_MR_op"}) {
                auto vals = detail::cell_values(
                    recs, n, beta, [&](const RunRecord& r) { return detail::stat(r, name); });
                cell["count"] = vals.size();
                cell[std::string("median_") + name] = detail::median(vals);
                cell[std::string("q90_") + name] = detail::quantile(vals, 0.9);
            }
            med_mr.push_back(cell["median_norm_MR_op"].get<double>());
            med_mp.push_back(cell["median_norm_MP_F"].get<double>());
            cells.push_back(std::move(cell));
        }
        bool mr_mono = true, mp_mono = true;
        for (std::size_t k = 1; k < ns.size(); ++k) {
            mr_mono = mr_mono && med_mr[k] < med_mr[k - 1];
            mp_mono = mp_mono && med_mp[k] < med_mp[k - 1];
        }
        double ratio = med_mr.front() > 0.0 ? med_mr.back() / med_mr.front() : 0.0;
        bool ratio_ok = ratio <= trend_ratio;
        bool beta_zero = beta == 0.0; // trivially flat at zero coupling
        bool ok = beta_zero || (mr_mono && mp_mono && ratio_ok);
        criteria.push_back({{"beta", beta},
                            {"mr_op_monotone", mr_mono},
                            {"mp_f_monotone", mp_mono},
                            {"mr_op_ratio", ratio},
                            {"mr_op_ratio_ok", ratio_ok},
                            {"pass", ok}});
        pass = pass && ok;
    }
    return {{"experiment", "convergence"},
            {"cells", cells},
            {"criteria", criteria},
            {"pass", pass}};
}

inline nlohmann::json summarize_frobenius_appendix(const std::vector<RunRecord>& recs,
                                                   const ExperimentConfig& cfg) {
    std::vector<int> ns = cfg.n_grid;
    std::sort(ns.begin(), ns.end());
    bool pass = true;
    nlohmann::json per_beta = nlohmann::json::array();
    for (double beta : cfg.beta_grid) {
        std::vector<double> xs, means;
        for (int n : ns) {
            auto vals = detail::cell_values(
                recs, n, beta, [](const RunRecord& r) { return detail::stat(r, "frob_sq"); });
            xs.push_back(static_cast<double>(n));
            means.push_back(detail::mean(vals));
        }
        auto [slope, intercept] = detail::linear_fit(xs, means);
        double level = detail::mean(means);
        bool ok = beta == 0.0 ? true : std::abs(slope) <= slope_level_ratio * level;
        per_beta.push_back({{"beta", beta},
                            {"mean_by_n", means},
                            {"slope", slope},
                            {"intercept", intercept},
                            {"mean_level", level},
                            {"pass", ok}});
        pass = pass && ok;
    }
    return {{"experiment", "frobenius_appendix"}, {"per_beta", per_beta}, {"pass", pass}};
}

inline nlohmann::json summarize_zhat_distribution(const std::vector<RunRecord>& recs,
                                                  const ExperimentConfig& cfg) {
    bool pass = true;
    nlohmann::json cells = nlohmann::json::array();
    for (int n : cfg.n_grid) {
        for (double beta : cfg.beta_grid) {
            auto hz = detail::cell_values(
                recs, n, beta, [](const RunRecord& r) { return detail::stat(r, "hat_z"); });
            auto lz = detail::cell_values(
                recs, n, beta, [](const RunRecord& r) { return detail::stat(r, "log_hat_z"); });
            double mean_hz = detail::mean(hz);
            double se = hz.size() > 1
                            ? std::sqrt(detail::sample_variance(hz) / static_cast<double>(hz.size()))
                            : 0.0;
            double var_lz = lz.size() > 1 ? detail::sample_variance(lz) : 0.0;
            double sigma2 = SigmaSquared::from_beta(Beta(beta)).value;
            bool mean_ok = std::abs(mean_hz - 1.0) <= zhat_mean_ses * se;
            bool var_ok = beta == 0.0 ? var_lz == 0.0
                                      : std::abs(var_lz - sigma2) <= zhat_var_rel * sigma2;
            if (beta == 0.0) mean_ok = mean_hz == 1.0;
            bool ok = mean_ok && var_ok;
            cells.push_back({{"n", n},
                             {"beta", beta},
                             {"count", hz.size()},
                             {"mean_hat_z", mean_hz},
                             {"se_hat_z", se},
                             {"mean_log_hat_z", detail::mean(lz)},
                             {"var_log_hat_z", var_lz},
                             {"sigma_sq", sigma2},
                             {"mean_ok", mean_ok},
                             {"var_ok", var_ok},
                             {"pass", ok}});
            pass = pass && ok;
        }
    }
    return {{"experiment", "zhat_dist"}, {"cells", cells}, {"pass", pass}};
}

inline nlohmann::json summarize_rate_probe(const std::vector<RunRecord>& recs,
                                           const ExperimentConfig& cfg) {
    std::vector<int> ns = cfg.n_grid;
    std::sort(ns.begin(), ns.end());
    bool pass = true;
    nlohmann::json per_beta = nlohmann::json::array();
    for (double beta : cfg.beta_grid) {
        nlohmann::json quantities = nlohmann::json::array();
        bool beta_ok = true;
        for (const char* name : {"r6", "r7", "q3_01", "q5_01"}) {
            std::vector<double> lx, ly, l2s, sy;
            for (int n : ns) {
                auto vals = detail::cell_values(
                    recs, n, beta, [&](const RunRecord& r) { return detail::stat(r, name); });
                std::vector<double> sq(vals.size());
                for (std::size_t k = 0; k < vals.size(); ++k) sq[k] = vals[k] * vals[k];
                double m2 = detail::mean(sq);
                l2s.push_back(std::sqrt(m2));
                lx.push_back(std::log(static_cast<double>(n)));
                ly.push_back(0.5 * std::log(m2));
                // delta method: sd of log L2 from the spread of the squares
                double se2 = sq.size() > 1
                                 ? std::sqrt(detail::sample_variance(sq) / sq.size())
                                 : 0.0;
                sy.push_back(m2 > 0.0 ? 0.5 * se2 / m2 : 0.0);
            }
            double slope = 0.0, slope_se = 0.0;
            if (beta != 0.0) {
                slope = detail::linear_fit(lx, ly).first;
                double mx = detail::mean(lx), den = 0.0, var = 0.0;
                for (double x : lx) den += (x - mx) * (x - mx);
                for (std::size_t k = 0; k < lx.size(); ++k) {
                    double w = (lx[k] - mx) / den;
                    var += w * w * sy[k] * sy[k];
                }
                slope_se = std::sqrt(var);
            }
            bool ok = beta == 0.0 || (slope >= rate_slope_lo && slope <= rate_slope_hi);
            quantities.push_back({{"name", name},
                                  {"l2_by_n", l2s},
                                  {"slope", slope},
                                  {"slope_se", slope_se},
                                  {"slope_ci", {slope - 1.96 * slope_se, slope + 1.96 * slope_se}},
                                  {"pass", ok}});
            beta_ok = beta_ok && ok;
        }
        per_beta.push_back({{"beta", beta}, {"quantities", quantities}, {"pass", beta_ok}});
        pass = pass && beta_ok;
    }
    return {{"experiment", "rate_probe"}, {"per_beta", per_beta}, {"pass", pass}};
}

inline nlohmann::json summarize_identities(const std::vector<RunRecord>& recs,
                                           const ExperimentConfig&) {
    double worst = 0.0;
    std::string worst_label = "none";
    bool pass = true;
    std::size_t rows = 0;
    for (const RunRecord& r : recs) {
        double res = detail::stat(r, "residual");
        if (res > worst) {
            worst = res;
            worst_label = r.label;
        }
        pass = pass && detail::stat(r, "pass") == 1.0;
        ++rows;
    }
    return {{"experiment", "identities"},
            {"rows", rows},
            {"max_residual", worst},
            {"max_residual_identity", worst_label},
            {"tolerance", identity_tolerance},
            {"pass", pass}};
}

inline nlohmann::json summarize(const std::vector<RunRecord>& recs, const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::convergence: return summarize_convergence(recs, cfg);
        case Experiment::frobenius_appendix: return summarize_frobenius_appendix(recs, cfg);
        case Experiment::zhat_dist: return summarize_zhat_distribution(recs, cfg);
        case Experiment::rate_probe: return summarize_rate_probe(recs, cfg);
        case Experiment::identities: return summarize_identities(recs, cfg);
    }
    throw std::invalid_argument("summarize: unknown experiment");
}

// -------- emission --------

namespace detail {

// shortest decimal that parses back to the same double
inline std::string format_double(double x) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

} // namespace detail

struct EmitResult {
    std::filesystem::path csv_path;
    std::filesystem::path manifest_path;
    nlohmann::json summary;
    bool pass = false;
};

inline EmitResult emit_results(const std::vector<RunRecord>& recs, const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::filesystem::path dir(cfg.output_path);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string tag = experiment_name(cfg.experiment);

    EmitResult out;
    out.csv_path = dir / (tag + ".csv");
    out.manifest_path = dir / (tag + "_manifest.json");

    std::ofstream csv(out.csv_path);
    if (!csv) throw io_error("emit_results: cannot write " + out.csv_path.string());
    csv << "seed,n,beta";
    if (schema_has_label(cfg.experiment)) csv << ",identity";
    for (const std::string& c : stat_columns(cfg.experiment)) csv << ',' << c;
    if (schema_has_runtime(cfg.experiment)) csv << ",runtime_ms";
    csv << '\n';
    kahan_sum record_ms;
    for (const RunRecord& r : recs) {
        csv << r.seed << ',' << r.n << ',' << detail::format_double(r.beta);
        if (schema_has_label(cfg.experiment)) csv << ',' << r.label;
        for (const auto& [name, value] : r.stats) {
            (void)name;
            csv << ',' << detail::format_double(value);
        }
        if (schema_has_runtime(cfg.experiment)) csv << ',' << detail::format_double(r.runtime_ms);
        csv << '\n';
        record_ms.add(r.runtime_ms);
    }
    csv.close();
    if (!csv) throw io_error("emit_results: write failed for " + out.csv_path.string());

    auto t1 = std::chrono::steady_clock::now();
    out.summary = summarize(recs, cfg);
    out.pass = out.summary.at("pass").get<bool>();

    nlohmann::json policy_by_n = nlohmann::json::object();
    if (cfg.experiment == Experiment::convergence ||
        cfg.experiment == Experiment::frobenius_appendix) {
        for (int n : cfg.n_grid) {
            TruncationPolicy p = policy_for(cfg, n);
            policy_by_n[std::to_string(n)] =
                p.mode == TruncationPolicy::Mode::exact_dp ? "exact_dp" : "dfs_truncated";
        }
    }
    nlohmann::json manifest{
        {"config", cfg},
        {"version", SKRL_VERSION},
        {"records", recs.size()},
        {"timings_ms",
         {{"records_total", record_ms.value()},
          {"summarize", std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t1)
                            .count()},
          {"wall", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             t0)
                       .count()}}},
        {"policy_by_n", policy_by_n},
        {"summary", out.summary},
        {"pass", out.pass}};
    std::ofstream mf(out.manifest_path);
    if (!mf) throw io_error("emit_results: cannot write " + out.manifest_path.string());
    mf << manifest.dump(2) << '\n';
    mf.close();
    if (!mf) throw io_error("emit_results: write failed for " + out.manifest_path.string());
    return out;
}

} // namespace skrl::experiment_harness
