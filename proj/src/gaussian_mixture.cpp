// SPDX-License-Identifier: Apache-2.0
#include "noisediff/gaussian_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "noisediff/errors.hpp"

namespace noisediff {

double log_sum_exp(const std::vector<double>& values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const double peak = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(peak)) return peak;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - peak);
    return peak + std::log(sum);
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Tensor> centers, double delta)
    : weights_(std::move(weights)), centers_(std::move(centers)), delta_(delta) {
    if (centers_.empty()) throw ValidationError("mixture: at least one component is required");
    if (weights_.size() != centers_.size()) {
        throw ValidationError("mixture: " + std::to_string(weights_.size()) + " weights for " +
                              std::to_string(centers_.size()) + " centers");
    }
    if (!(delta_ > 0.0) || !std::isfinite(delta_)) {
        throw ValidationError("mixture: delta must be positive and finite");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("mixture: weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("mixture: weights must sum to 1 within 1e-12, got " + std::to_string(total));
    }
    for (const auto& c : centers_) {
        require_same_shape(centers_.front(), c, "mixture centers");
        require_finite(c, "mixture centers");
    }
    log_weights_.reserve(weights_.size());
    for (double w : weights_) log_weights_.push_back(std::log(w));
}

GaussianMixture GaussianMixture::single(Tensor center, double delta) {
    std::vector<Tensor> centers;
    centers.push_back(std::move(center));
    return GaussianMixture({1.0}, std::move(centers), delta);
}

void GaussianMixture::check_input(const Tensor& x, double sigma, const char* op) const {
    require_same_shape(centers_.front(), x, op);
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ValidationError(std::string(op) + ": noise level must be finite and nonnegative");
    }
}

// log w_k - ‖x - c_k‖² / (2 s²); the shared normalizer is added by the caller.
std::vector<double> GaussianMixture::component_log_terms(const Tensor& x, double sigma) const {
    const double var = delta_ * delta_ + sigma * sigma;
    std::vector<double> terms(centers_.size());
    for (std::size_t k = 0; k < centers_.size(); ++k) {
        terms[k] = log_weights_[k] - squared_distance(x, centers_[k]) / (2.0 * var);
    }
    return terms;
}

double GaussianMixture::log_density(const Tensor& x, double sigma) const {
    check_input(x, sigma, "log_density");
    const double var = delta_ * delta_ + sigma * sigma;
    const double n = static_cast<double>(x.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi * var) + log_sum_exp(component_log_terms(x, sigma));
}

std::vector<double> GaussianMixture::responsibilities(const Tensor& x, double sigma) const {
    check_input(x, sigma, "responsibilities");
    auto terms = component_log_terms(x, sigma);
    const double lse = log_sum_exp(terms);
    for (double& t : terms) t = std::exp(t - lse);
    // Renormalize so the sum is 1 to rounding.
    const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
    for (double& t : terms) t /= total;
    return terms;
}

Tensor GaussianMixture::score(const Tensor& x, double sigma) const {
    const auto resp = responsibilities(x, sigma);
    const double inv_var = 1.0 / (delta_ * delta_ + sigma * sigma);

    Tensor posterior_mean(x.shape());
    auto pm = posterior_mean.data();
    for (std::size_t k = 0; k < centers_.size(); ++k) {
        if (resp[k] == 0.0) continue;
        auto c = centers_[k].data();
        for (std::size_t i = 0; i < pm.size(); ++i) pm[i] += resp[k] * c[i];
    }
    Tensor out(x.shape());
    auto dst = out.data();
    auto src = x.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (pm[i] - src[i]) * inv_var;
    return out;
}

std::size_t GaussianMixture::nearest_center(const Tensor& x) const {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers_.size(); ++k) {
        const double d = squared_distance(x, centers_[k]);
        if (d < best_dist) {
            best_dist = d;
            best = k;
        }
    }
    return best;
}

Tensor GaussianMixture::sample(SeededRng& rng, double sigma) const {
    std::size_t component = 0;
    return sample(rng, sigma, component);
}

Tensor GaussianMixture::sample(SeededRng& rng, double sigma, std::size_t& component) const {
    const double u = rng.uniform();
    double acc = 0.0;
    component = centers_.size() - 1;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        acc += weights_[k];
        if (u < acc) {
            component = k;
            break;
        }
    }
    const double std = std::sqrt(delta_ * delta_ + sigma * sigma);
    Tensor noise = sample_gaussian(rng, shape(), std);
    return centers_[component] + noise;
}

}  // namespace noisediff
