#ifndef FUSEBENCH_BENCH_HPP
#define FUSEBENCH_BENCH_HPP

#include <string>
#include <variant>
#include <vector>

#include "fusebench/sim.hpp"

namespace fusebench {

/// One CSV output row: a (configuration point, method) pair.
struct ResultRow {
    int model = 0;
    int k = 0;
    int m = 0;
    double sigma2 = 0.0;
    double sigma0_2 = 0.0;  // 0 for model 1
    int n_prior = 0;
    int mc_samples = 0;
    long trials = 0;
    std::uint64_t seed = 0;
    FusionMethod method = FusionMethod::optimal;
    double mse = 0.0;
    double mse_stderr = 0.0;
    double nmse = 0.0;
};

inline constexpr const char* kCsvHeader =
    "model,k,m,sigma2,sigma0_2,n_prior,mc_samples,trials,seed,method,mse,mse_stderr,nmse";

/// A validated benchmark sweep: one base configuration plus exactly one
/// swept parameter with its value list.
struct SweepSpec {
    int model = 2;
    int k = 2;
    int m = 2;
    double sigma2 = 1.0;
    double sigma0_2 = 0.2;
    int n_gen = 0;    // model 1; 0 means default 3k at each point
    int n_prior = 0;  // 0 means default 3k at each point
    int mc_samples = 100;
    long trials = 10000;
    std::uint64_t seed = 0;
    MethodSet methods;
    std::string sweep_param;
    std::vector<double> sweep_values;
};

/// Concrete per-point configuration materialized from a SweepSpec.
using PointConfig = std::variant<Model1Config, Model2Config>;

/// Parse and validate a JSON sweep document. Defaults: m = 2,
/// mc_samples = 100, trials = 10000, n_gen = n_prior = 3k, sigma2 = 1,
/// sigma0_2 = 0.2, all methods enabled, seed = 0. Throws ParseError on
/// malformed JSON and ValidationError on schema violations (unknown or
/// model-inappropriate fields included).
SweepSpec parse_config(const std::string& text);

/// Expand the sweep into one concrete configuration per value; every point
/// is validated. Sweepable parameters: sigma2, k, mc_samples, trials,
/// n_prior, n_gen (model 1 only), sigma0_2 (model 2 only).
std::vector<PointConfig> materialize(const SweepSpec& spec);

/// Run every sweep point and emit rows in sweep order, then method order
/// (optimal, bayesian_mc, fast_ci), restricted to the requested methods.
/// Deterministic for a fixed seed regardless of the thread count.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, int threads = 0);

/// Write header plus rows; floats in shortest round-trip decimal form,
/// final line newline-terminated. Refuses an empty row set.
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);

/// Render rows as an aligned human-readable table.
std::string format_table(const std::vector<ResultRow>& rows);

} // namespace fusebench

#endif
