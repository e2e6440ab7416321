// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisediff/gaussian_mixture.hpp"
#include "noisediff/pf_ode.hpp"

namespace noisediff {

struct Quantiles {
    double min = 0.0, p01 = 0.0, p05 = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, p95 = 0.0, p99 = 0.0, max = 0.0;
};

/// One declared bound, checked as lo <= value <= hi.
struct Check {
    std::string name;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool passed = false;
};

struct Metric {
    std::string name;
    double value = 0.0;
};

struct StatReport {
    std::string experiment;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double mean = 0.0;
    double stddev = 0.0;
    Quantiles quantiles;
    std::vector<Metric> metrics;
    std::vector<Check> checks;

    bool passed() const;
    void add_check(std::string name, double value, double lo, double hi);
    const Check* find_check(const std::string& name) const;
    double metric(const std::string& name) const;
};

/// Fills samples, mean, sample std (n-1) and linear-interpolated quantiles.
StatReport summarize(std::string experiment, std::uint64_t seed, std::vector<double> samples);

/// Distribution of ‖X‖ - std·√n for X ~ N(0, std² I_n). Checks (n >= 100 only):
/// mean |dev| <= std and at least 99% of trials with |dev| <= 5 std.
/// Metrics: mean_abs_dev, frac_within_5, mean_norm.
StatReport norm_concentration(std::size_t n, std::size_t trials, std::uint64_t seed, double std = 1.0);

enum class PairMode { independent, identical };

/// Distribution of √n·cos(X, Y) for independent Gaussian pairs. Checks mean in [-0.1, 0.1]
/// and, for n >= 100, variance in [0.8, 1.2]. PairMode::identical uses Y = X and reports the
/// metric `independent` = 0.
StatReport orthogonality_stats(std::size_t n, std::size_t trials, std::uint64_t seed,
                               PairMode mode = PairMode::independent);

/// Distribution of ‖αv1 + βv2 + γv3‖ / (√(α²+β²+γ²)·√n) for independent standard normal vectors.
/// Checks mean in [0.99, 1.01].
StatReport weighted_norm_ratio(double alpha, double beta, double gamma, std::size_t n, std::size_t trials,
                               std::uint64_t seed);

/// Fractions of standard normal draws within 1, 2, 3 std. Checks each against
/// 0.6827 / 0.9545 / 0.9973 ± 0.002.
StatReport empirical_rule_check(std::size_t trials, std::uint64_t seed);

/// ‖latent‖ / (σ √n); 1 means the latent sits on the expected noise sphere.
double sphere_radius_diag(const Tensor& latent, double sigma);

struct MismatchLevel {
    double level = 0.0;
    StatReport mse_to_center;  ///< per-trial MSE of the decoded output to its nearest center
    double mean_mse_to_source = 0.0;
    double mean_spread_ratio = 0.0;  ///< per-pixel RMS distance to nearest center over √(δ²+σ_min²)
};

struct MismatchReport {
    double denoise_level = 0.0;
    std::vector<MismatchLevel> levels;
    StatReport summary;  ///< ordering checks
};

/// For each trial: sample x0 from the mixture and one noise draw z; for every level L form
/// x0 + L z and decode from `denoise_level`. Levels must lie in [0, sigma_max]; the
/// same (x0, z) pair is shared by all levels of a trial.
MismatchReport mismatch_experiment(const GaussianMixture& model, const std::vector<double>& levels,
                                   double denoise_level, const SigmaSchedule& schedule, std::size_t trials,
                                   std::uint64_t seed);

}  // namespace noisediff
