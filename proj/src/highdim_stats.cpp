// SPDX-License-Identifier: Apache-2.0
#include "noisediff/highdim_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "noisediff/errors.hpp"

namespace noisediff {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void require_trials(std::size_t trials, std::size_t minimum, const char* op) {
    if (trials < minimum) {
        throw ValidationError(std::string(op) + ": trials must be >= " + std::to_string(minimum));
    }
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Smallest value strictly greater than `x`; used for strict ordering checks.
double above(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

}  // namespace

bool StatReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void StatReport::add_check(std::string name, double value, double lo, double hi) {
    checks.push_back(Check{std::move(name), value, lo, hi, value >= lo && value <= hi});
}

const Check* StatReport::find_check(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

double StatReport::metric(const std::string& name) const {
    for (const auto& m : metrics) {
        if (m.name == name) return m.value;
    }
    throw ValidationError("report '" + experiment + "' has no metric '" + name + "'");
}

StatReport summarize(std::string experiment, std::uint64_t seed, std::vector<double> samples) {
    if (samples.empty()) throw ValidationError("summarize: sample count must be positive");
    StatReport r;
    r.experiment = std::move(experiment);
    r.seed = seed;
    r.samples = samples.size();
    r.mean = mean_of(samples);
    double ss = 0.0;
    for (double s : samples) ss += (s - r.mean) * (s - r.mean);
    r.stddev = samples.size() > 1 ? std::sqrt(ss / static_cast<double>(samples.size() - 1)) : 0.0;

    std::sort(samples.begin(), samples.end());
    auto& q = r.quantiles;
    q.min = samples.front();
    q.p01 = quantile_sorted(samples, 0.01);
    q.p05 = quantile_sorted(samples, 0.05);
    q.p25 = quantile_sorted(samples, 0.25);
    q.median = quantile_sorted(samples, 0.50);
    q.p75 = quantile_sorted(samples, 0.75);
    q.p95 = quantile_sorted(samples, 0.95);
    q.p99 = quantile_sorted(samples, 0.99);
    q.max = samples.back();
    return r;
}

StatReport norm_concentration(std::size_t n, std::size_t trials, std::uint64_t seed, double std) {
    if (n < 1) throw ValidationError("norm_concentration: n must be >= 1");
    require_trials(trials, 1, "norm_concentration");
    if (!(std > 0.0)) throw ValidationError("norm_concentration: std must be positive");

    const double radius = std * std::sqrt(static_cast<double>(n));
    std::vector<double> devs(trials);
    double norm_sum = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        SeededRng rng(SeededRng::derive_seed(seed, i));
        const double nrm = norm(sample_gaussian(rng, {n}, std));
        norm_sum += nrm;
        devs[i] = nrm - radius;
    }
    double abs_sum = 0.0;
    std::size_t within = 0;
    for (double d : devs) {
        abs_sum += std::abs(d);
        if (std::abs(d) <= 5.0 * std) ++within;
    }
    const double mean_abs = abs_sum / static_cast<double>(trials);
    const double frac = static_cast<double>(within) / static_cast<double>(trials);

    StatReport r = summarize("norm_concentration", seed, std::move(devs));
    r.metrics.push_back({"n", static_cast<double>(n)});
    r.metrics.push_back({"mean_abs_dev", mean_abs});
    r.metrics.push_back({"frac_within_5", frac});
    r.metrics.push_back({"mean_norm", norm_sum / static_cast<double>(trials)});
    if (n >= 100) {
        r.add_check("mean_abs_dev", mean_abs, 0.0, std);
        r.add_check("frac_within_5", frac, 0.99, 1.0);
    }
    return r;
}

StatReport orthogonality_stats(std::size_t n, std::size_t trials, std::uint64_t seed, PairMode mode) {
    if (n < 2) throw ValidationError("orthogonality_stats: n must be >= 2");
    require_trials(trials, 1, "orthogonality_stats");

    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> scaled(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        SeededRng rng(SeededRng::derive_seed(seed, i));
        const Tensor x = sample_gaussian(rng, {n});
        const Tensor y = mode == PairMode::identical ? x : sample_gaussian(rng, {n});
        const double cosine = dot(x, y) / std::sqrt(dot(x, x) * dot(y, y));
        scaled[i] = root_n * cosine;
    }
    StatReport r = summarize("orthogonality", seed, std::move(scaled));
    const double variance = r.stddev * r.stddev;
    r.metrics.push_back({"n", static_cast<double>(n)});
    r.metrics.push_back({"variance", variance});
    r.metrics.push_back({"mean_cosine", r.mean / root_n});
    r.metrics.push_back({"independent", mode == PairMode::independent ? 1.0 : 0.0});
    if (mode == PairMode::independent) {
        r.add_check("mean", r.mean, -0.1, 0.1);
        // Variance window assumes the near-normal regime; skipped below n = 100.
        if (n >= 100) r.add_check("variance", variance, 0.8, 1.2);
    }
    return r;
}

StatReport weighted_norm_ratio(double alpha, double beta, double gamma, std::size_t n, std::size_t trials,
                               std::uint64_t seed) {
    if (n < 100) throw ValidationError("weighted_norm_ratio: n must be >= 100");
    require_trials(trials, 1, "weighted_norm_ratio");
    const double weight = std::sqrt(alpha * alpha + beta * beta + gamma * gamma);
    if (!(weight > 0.0)) throw ValidationError("weighted_norm_ratio: coefficients must not all be zero");

    const double denom = weight * std::sqrt(static_cast<double>(n));
    std::vector<double> ratios(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        SeededRng rng(SeededRng::derive_seed(seed, i));
        const Tensor v1 = sample_gaussian(rng, {n});
        const Tensor v2 = sample_gaussian(rng, {n});
        const Tensor v3 = sample_gaussian(rng, {n});
        ratios[i] = norm(linear_combine({{alpha, v1}, {beta, v2}, {gamma, v3}})) / denom;
    }
    StatReport r = summarize("weighted_norm_ratio", seed, std::move(ratios));
    r.metrics.push_back({"alpha", alpha});
    r.metrics.push_back({"beta", beta});
    r.metrics.push_back({"gamma", gamma});
    r.metrics.push_back({"n", static_cast<double>(n)});
    r.add_check("mean_ratio", r.mean, 0.99, 1.01);
    return r;
}

StatReport empirical_rule_check(std::size_t trials, std::uint64_t seed) {
    require_trials(trials, 100000, "empirical_rule_check");
    SeededRng rng(seed);
    std::size_t in1 = 0, in2 = 0, in3 = 0;
    std::vector<double> draws(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        const double v = rng.normal();
        draws[i] = v;
        const double a = std::abs(v);
        if (a <= 1.0) ++in1;
        if (a <= 2.0) ++in2;
        if (a <= 3.0) ++in3;
    }
    const double total = static_cast<double>(trials);
    StatReport r = summarize("empirical_rule", seed, std::move(draws));
    const double f1 = static_cast<double>(in1) / total;
    const double f2 = static_cast<double>(in2) / total;
    const double f3 = static_cast<double>(in3) / total;
    r.metrics.push_back({"within_1sd", f1});
    r.metrics.push_back({"within_2sd", f2});
    r.metrics.push_back({"within_3sd", f3});
    r.add_check("within_1sd", f1, 0.6827 - 0.002, 0.6827 + 0.002);
    r.add_check("within_2sd", f2, 0.9545 - 0.002, 0.9545 + 0.002);
    r.add_check("within_3sd", f3, 0.9973 - 0.002, 0.9973 + 0.002);
    return r;
}

double sphere_radius_diag(const Tensor& latent, double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("sphere_radius_diag: sigma must be positive");
    return norm(latent) / (sigma * std::sqrt(static_cast<double>(latent.size())));
}

MismatchReport mismatch_experiment(const GaussianMixture& model, const std::vector<double>& levels,
                                   double denoise_level, const SigmaSchedule& schedule, std::size_t trials,
                                   std::uint64_t seed) {
    schedule.validate();
    require_trials(trials, 1, "mismatch_experiment");
    if (levels.empty()) throw ValidationError("mismatch_experiment: levels must be non-empty");
    if (!(denoise_level >= schedule.sigma_min && denoise_level <= schedule.sigma_max)) {
        throw ValidationError("mismatch_experiment: denoise_level must lie within the schedule range");
    }
    for (double l : levels) {
        if (!(l >= 0.0 && l <= schedule.sigma_max)) {
            throw ValidationError("mismatch_experiment: levels must lie in [0, sigma_max]");
        }
    }
    const OdeConfig ode{schedule, model};
    const double n = static_cast<double>(model.data_size());
    const double expected_spread = std::sqrt(model.delta() * model.delta() + schedule.sigma_min * schedule.sigma_min);

    std::vector<std::vector<double>> mse_center(levels.size(), std::vector<double>(trials));
    std::vector<double> mse_source(levels.size(), 0.0);
    std::vector<double> spread(levels.size(), 0.0);
    for (std::size_t i = 0; i < trials; ++i) {
        SeededRng rng(SeededRng::derive_seed(seed, i));
        const Tensor x0 = model.sample(rng);
        const Tensor z = sample_gaussian(rng, model.shape());
        for (std::size_t k = 0; k < levels.size(); ++k) {
            const Tensor noisy = linear_combine({{1.0, x0}, {levels[k], z}});
            const Tensor out = decode_from(noisy, denoise_level, ode);
            const Tensor& center = model.centers()[model.nearest_center(out)];
            const double mse = squared_distance(out, center) / n;
            mse_center[k][i] = mse;
            mse_source[k] += squared_distance(out, x0) / n;
            spread[k] += std::sqrt(mse) / expected_spread;
        }
    }

    MismatchReport report;
    report.denoise_level = denoise_level;
    std::size_t matched = levels.size();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        MismatchLevel row;
        row.level = levels[k];
        row.mse_to_center = summarize("mismatch_level", seed, mse_center[k]);
        row.mean_mse_to_source = mse_source[k] / static_cast<double>(trials);
        row.mean_spread_ratio = spread[k] / static_cast<double>(trials);
        row.mse_to_center.metrics.push_back({"level", levels[k]});
        row.mse_to_center.metrics.push_back({"mean_mse_to_source", row.mean_mse_to_source});
        row.mse_to_center.metrics.push_back({"mean_spread_ratio", row.mean_spread_ratio});
        report.levels.push_back(std::move(row));
        if (levels[k] == denoise_level) matched = k;
    }

    std::vector<double> means;
    for (const auto& row : report.levels) means.push_back(row.mse_to_center.mean);
    report.summary = summarize("mismatch", seed, means);
    report.summary.metrics.push_back({"denoise_level", denoise_level});
    if (matched == levels.size()) return report;

    // Ratios of each mismatched level's mean MSE to the matched one; orderings require > 1.
    const double base = report.levels[matched].mse_to_center.mean;
    double worst_under = std::numeric_limits<double>::infinity();
    double worst_over = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (k == matched) continue;
        const double ratio = report.levels[k].mse_to_center.mean / base;
        if (levels[k] < denoise_level) worst_under = std::min(worst_under, ratio);
        if (levels[k] > denoise_level) worst_over = std::min(worst_over, ratio);
    }
    report.summary.metrics.push_back({"matched_mean_mse", base});
    if (std::isfinite(worst_under)) {
        report.summary.add_check("under_noise_mse_ratio", worst_under, above(1.0),
                                 std::numeric_limits<double>::infinity());
    }
    if (std::isfinite(worst_over)) {
        report.summary.add_check("over_noise_mse_ratio", worst_over, above(1.0),
                                 std::numeric_limits<double>::infinity());
    }
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (levels[k] != 0.0) continue;
        const double ratio = report.levels[k].mean_mse_to_source / report.levels[matched].mean_mse_to_source;
        report.summary.add_check("zero_noise_source_mse_ratio", ratio, above(1.0),
                                 std::numeric_limits<double>::infinity());
    }
    return report;
}

}  // namespace noisediff
