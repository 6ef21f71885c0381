#ifndef FUSEBENCH_SIM_HPP
#define FUSEBENCH_SIM_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "fusebench/fusion.hpp"

namespace fusebench {

/// Default generator/prior degrees of freedom for k nodes.
inline int default_dof(int k) { return 3 * k; }

/// Model 1: the joint covariance itself is Wishart. Each trial draws
/// Px ~ W_{km}(n_gen, sigma2 * I), then the stacked estimate vector from
/// N(0, Px); the true state is the zero vector.
struct Model1Config {
    int k = 2;
    int m = 2;
    double sigma2 = 1.0;
    int n_gen = 6;
    int n_prior = 6;
    int mc_samples = 100;
    long trials = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Model 2: a hierarchical draw in which every pair of nodes shares the same
/// cross covariance. Each trial draws Sigma0 ~ W_2(dof_hyper, sigma0_2 * I)
/// and Sigma_i ~ W_2(dof_hyper, sigma2 * I), then x0 ~ N(0, Sigma0) and
/// x_i ~ N(x0, Sigma_i). Node covariances are Sigma0 + Sigma_i and every
/// off-diagonal block of the joint covariance equals Sigma0. The state
/// dimension is fixed at 2.
struct Model2Config {
    static constexpr int m = 2;

    int k = 2;
    double sigma0_2 = 0.2;
    double sigma2 = 1.0;
    int dof_hyper = 3;
    int n_prior = 6;
    int mc_samples = 100;
    long trials = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One generated trial: the true state, the per-node estimates handed to the
/// fusers, and the true joint covariance (available to the optimal fuser
/// only).
struct TrialData {
    Eigen::VectorXd x0;
    std::vector<Estimate> estimates;
    JointCovariance px;
};

struct MethodSet {
    bool optimal = true;
    bool bayesian_mc = true;
    bool fast_ci = true;

    bool contains(FusionMethod method) const;
};

/// Squared estimation errors of one trial, per method.
struct TrialOutcome {
    struct Entry {
        double sq_error = 0.0;
        bool valid = false;
    };
    std::array<std::optional<Entry>, 3> entries;

    const std::optional<Entry>& entry(FusionMethod method) const;
    void set(FusionMethod method, double sq_error, bool valid);
};

struct MethodStats {
    double mse = 0.0;
    double mse_stderr = 0.0;
    double nmse = 0.0;
};

/// The configuration fields every experiment reports back with its results.
/// sigma0_2 is 0 for model 1 (not a parameter there).
struct ConfigEcho {
    int model = 0;
    int k = 0;
    int m = 0;
    double sigma2 = 0.0;
    double sigma0_2 = 0.0;
    int n_prior = 0;
    int mc_samples = 0;
    long trials = 0;
    std::uint64_t seed = 0;
};

struct AggregateResult {
    ConfigEcho config;
    long trials = 0;
    std::array<std::optional<MethodStats>, 3> per_method;

    const std::optional<MethodStats>& stats(FusionMethod method) const;
};

/// Model 1 trial generator. Consumes the stream in the order: Wishart draw
/// of Px, then the stacked Gaussian estimate vector.
TrialData gen_model1_trial(const Model1Config& cfg, RandomStream& rng);

/// Model 2 trial generator. Stream order: Sigma0, Sigma_1..Sigma_k, x0,
/// then x_1..x_k.
TrialData gen_model2_trial(const Model2Config& cfg, RandomStream& rng);

/// Fuse one generated trial with the selected methods and record squared
/// errors against the trial's true state. The optimal method sees the true
/// joint covariance; the others see only the per-node estimates. bayes_rng
/// drives the Monte Carlo fuser's internal sampling.
TrialOutcome run_trial(const TrialData& data, const MethodSet& methods, int n_prior,
                       int mc_samples, const RandomStream& bayes_rng);

/// Run cfg.trials independent trials and aggregate per-method MSE, its
/// standard error, and MSE normalized by the optimal method's MSE.
///
/// The optimal method is always computed (it is the NMSE denominator) even
/// when absent from `methods`. Trial t derives its streams from
/// RandomStream(seed).child(t): child 0 generates the data, child 1 feeds
/// the Monte Carlo fuser. Aggregation runs in trial-index order, so results
/// are identical for any thread count (threads <= 0 picks the hardware
/// concurrency).
AggregateResult run_experiment(const Model1Config& cfg, const MethodSet& methods = {},
                               int threads = 0);
AggregateResult run_experiment(const Model2Config& cfg, const MethodSet& methods = {},
                               int threads = 0);

} // namespace fusebench

#endif
