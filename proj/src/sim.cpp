#include "fusebench/sim.hpp"

#include <cmath>
#include <sstream>

#include "parallel.hpp"

namespace fusebench {

namespace {

std::size_t method_index(FusionMethod method) {
    return static_cast<std::size_t>(method);
}

void require(bool ok, const char* message) {
    if (!ok) {
        throw ValidationError(message);
    }
}

Eigen::VectorXd gaussian_vector(const Eigen::MatrixXd& covariance, RandomStream& rng) {
    Eigen::LLT<Eigen::MatrixXd> chol(covariance);
    if (chol.info() != Eigen::Success) {
        throw NotPositiveDefinite("gaussian_vector: covariance factorization failed");
    }
    const Eigen::VectorXd z = sample_gaussian_matrix(covariance.rows(), 1, rng).col(0);
    return chol.matrixL() * z;
}

MethodStats stats_from_errors(const std::vector<double>& errors) {
    MethodStats stats;
    const long n = static_cast<long>(errors.size());
    double sum = 0.0;
    for (double e : errors) {
        sum += e;
    }
    stats.mse = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double e : errors) {
            const double d = e - stats.mse;
            ss += d * d;
        }
        stats.mse_stderr = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return stats;
}

template <typename Config, typename GenFn>
AggregateResult run_experiment_impl(const Config& cfg, const MethodSet& methods, int threads,
                                    GenFn gen, ConfigEcho echo) {
    cfg.validate();
    MethodSet run_set = methods;
    run_set.optimal = true;  // NMSE denominator

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
    const RandomStream root(cfg.seed, 0);
    detail::parallel_for_index(cfg.trials, threads, [&](long t) {
        try {
            const RandomStream trial_root = root.child(static_cast<std::uint64_t>(t));
            RandomStream data_rng = trial_root.child(0);
            const TrialData data = gen(cfg, data_rng);
            outcomes[static_cast<std::size_t>(t)] =
                run_trial(data, run_set, cfg.n_prior, cfg.mc_samples, trial_root.child(1));
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "model " << echo.model << " trial " << t << " (seed " << cfg.seed
                << "): " << e.what();
            throw Error(msg.str());
        }
    });

    AggregateResult result;
    result.config = echo;
    result.trials = cfg.trials;
    const std::array<FusionMethod, 3> all{FusionMethod::optimal, FusionMethod::bayesian_mc,
                                          FusionMethod::fast_ci};
    for (FusionMethod method : all) {
        if (!run_set.contains(method)) {
            continue;
        }
        std::vector<double> errors;
        errors.reserve(outcomes.size());
        for (const auto& outcome : outcomes) {
            errors.push_back(outcome.entry(method)->sq_error);
        }
        result.per_method[method_index(method)] = stats_from_errors(errors);
    }
    const double opt_mse = result.stats(FusionMethod::optimal)->mse;
    for (FusionMethod method : all) {
        auto& stats = result.per_method[method_index(method)];
        if (stats) {
            stats->nmse = method == FusionMethod::optimal ? 1.0 : stats->mse / opt_mse;
        }
    }
    return result;
}

} // namespace

void Model1Config::validate() const {
    require(k >= 2, "model 1: k must be >= 2");
    require(m >= 1, "model 1: m must be >= 1");
    require(sigma2 > 0.0, "model 1: sigma2 must be positive");
    require(n_gen >= k * m, "model 1: n_gen must be >= k*m");
    require(n_prior >= k * m, "model 1: n_prior must be >= k*m");
    require(mc_samples >= 1, "model 1: mc_samples must be >= 1");
    require(trials >= 1, "model 1: trials must be >= 1");
}

void Model2Config::validate() const {
    require(k >= 2, "model 2: k must be >= 2");
    require(sigma0_2 > 0.0, "model 2: sigma0_2 must be positive");
    require(sigma2 > 0.0, "model 2: sigma2 must be positive");
    require(dof_hyper >= m, "model 2: dof_hyper must be >= 2");
    require(n_prior >= k * m, "model 2: n_prior must be >= k*m");
    require(mc_samples >= 1, "model 2: mc_samples must be >= 1");
    require(trials >= 1, "model 2: trials must be >= 1");
}

bool MethodSet::contains(FusionMethod method) const {
    switch (method) {
        case FusionMethod::optimal: return optimal;
        case FusionMethod::bayesian_mc: return bayesian_mc;
        case FusionMethod::fast_ci: return fast_ci;
    }
    return false;
}

const std::optional<TrialOutcome::Entry>& TrialOutcome::entry(FusionMethod method) const {
    return entries[method_index(method)];
}

void TrialOutcome::set(FusionMethod method, double sq_error, bool valid) {
    entries[method_index(method)] = Entry{sq_error, valid};
}

const std::optional<MethodStats>& AggregateResult::stats(FusionMethod method) const {
    return per_method[method_index(method)];
}

TrialData gen_model1_trial(const Model1Config& cfg, RandomStream& rng) {
    cfg.validate();
    const Eigen::Index km = static_cast<Eigen::Index>(cfg.k) * cfg.m;
    SpdMatrix px = sample_wishart(
        WishartParams{km, static_cast<double>(cfg.n_gen),
                      SpdMatrix::scaled_identity(km, cfg.sigma2)},
        rng);
    const Eigen::VectorXd x = gaussian_vector(px.matrix(), rng);
    std::vector<Estimate> estimates;
    estimates.reserve(static_cast<std::size_t>(cfg.k));
    for (int j = 0; j < cfg.k; ++j) {
        estimates.push_back(Estimate{x.segment(j * cfg.m, cfg.m),
                                     SpdMatrix(px.matrix().block(j * cfg.m, j * cfg.m, cfg.m,
                                                                 cfg.m))});
    }
    return TrialData{Eigen::VectorXd::Zero(cfg.m), std::move(estimates),
                     JointCovariance(std::move(px), cfg.k)};
}

TrialData gen_model2_trial(const Model2Config& cfg, RandomStream& rng) {
    cfg.validate();
    const Eigen::Index m = Model2Config::m;
    const WishartParams shared_params{m, static_cast<double>(cfg.dof_hyper),
                                      SpdMatrix::scaled_identity(m, cfg.sigma0_2)};
    const SpdMatrix sigma0 = sample_wishart(shared_params, rng);
    const WishartParams noise_params{m, static_cast<double>(cfg.dof_hyper),
                                     SpdMatrix::scaled_identity(m, cfg.sigma2)};
    std::vector<SpdMatrix> noise;
    noise.reserve(static_cast<std::size_t>(cfg.k));
    for (int i = 0; i < cfg.k; ++i) {
        noise.push_back(sample_wishart(noise_params, rng));
    }
    const Eigen::VectorXd x0 = gaussian_vector(sigma0.matrix(), rng);
    std::vector<Estimate> estimates;
    estimates.reserve(static_cast<std::size_t>(cfg.k));
    Eigen::MatrixXd full(cfg.k * m, cfg.k * m);
    for (int i = 0; i < cfg.k; ++i) {
        const Eigen::VectorXd xi = x0 + gaussian_vector(noise[static_cast<std::size_t>(i)].matrix(), rng);
        estimates.push_back(Estimate{
            xi, SpdMatrix(sigma0.matrix() + noise[static_cast<std::size_t>(i)].matrix())});
        for (int j = 0; j < cfg.k; ++j) {
            if (i == j) {
                full.block(i * m, i * m, m, m) = estimates.back().P.matrix();
            } else {
                full.block(i * m, j * m, m, m) = sigma0.matrix();
            }
        }
    }
    return TrialData{x0, std::move(estimates), JointCovariance(SpdMatrix(std::move(full)), cfg.k)};
}

TrialOutcome run_trial(const TrialData& data, const MethodSet& methods, int n_prior,
                       int mc_samples, const RandomStream& bayes_rng) {
    TrialOutcome outcome;
    auto record = [&](FusionMethod method, const FusedEstimate& fused) {
        const double err = (fused.x0_hat - data.x0).squaredNorm();
        outcome.set(method, err, std::isfinite(err));
    };
    if (methods.optimal) {
        record(FusionMethod::optimal, optimal_fusion(data.estimates, data.px));
    }
    if (methods.bayesian_mc) {
        record(FusionMethod::bayesian_mc,
               bayesian_mc_fusion(data.estimates, static_cast<double>(n_prior), mc_samples,
                                  bayes_rng));
    }
    if (methods.fast_ci) {
        record(FusionMethod::fast_ci,
               ci_fusion(data.estimates, fast_ci_weights(diagonal_blocks_of(data.estimates))));
    }
    return outcome;
}

AggregateResult run_experiment(const Model1Config& cfg, const MethodSet& methods, int threads) {
    ConfigEcho echo{1,          cfg.k,          cfg.m,      cfg.sigma2, 0.0,
                    cfg.n_prior, cfg.mc_samples, cfg.trials, cfg.seed};
    return run_experiment_impl(
        cfg, methods, threads,
        [](const Model1Config& c, RandomStream& rng) { return gen_model1_trial(c, rng); }, echo);
}

AggregateResult run_experiment(const Model2Config& cfg, const MethodSet& methods, int threads) {
    ConfigEcho echo{2,          cfg.k,          Model2Config::m, cfg.sigma2, cfg.sigma0_2,
                    cfg.n_prior, cfg.mc_samples, cfg.trials,      cfg.seed};
    return run_experiment_impl(
        cfg, methods, threads,
        [](const Model2Config& c, RandomStream& rng) { return gen_model2_trial(c, rng); }, echo);
}

} // namespace fusebench
