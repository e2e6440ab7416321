// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "noisediff/rng.hpp"
#include "noisediff/score_model.hpp"

namespace noisediff {

/// Isotropic Gaussian mixture Σ_k w_k N(c_k, δ²I) used as p_data.
///
/// Noising by N(0, σ²I) keeps it a mixture with per-component variance δ²+σ²,
/// so density, responsibilities and score are all available in closed form.
class GaussianMixture final : public ScoreModel {
public:
    static constexpr double default_delta = 0.05;

    /// Weights must be positive and sum to 1 within 1e-12; centers share one shape.
    GaussianMixture(std::vector<double> weights, std::vector<Tensor> centers, double delta = default_delta);

    /// Single component centered at `center`.
    static GaussianMixture single(Tensor center, double delta = default_delta);

    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<Tensor>& centers() const noexcept { return centers_; }
    double delta() const noexcept { return delta_; }
    const Shape& shape() const noexcept { return centers_.front().shape(); }
    std::size_t components() const noexcept { return centers_.size(); }

    double log_density(const Tensor& x, double sigma) const;

    /// Posterior component probabilities r_k(x, σ); sums to 1.
    std::vector<double> responsibilities(const Tensor& x, double sigma) const;

    /// Σ_k r_k (c_k - x) / (δ² + σ²).
    Tensor score(const Tensor& x, double sigma) const override;
    std::size_t data_size() const override { return centers_.front().size(); }

    /// Index of the center closest to x in Euclidean distance.
    std::size_t nearest_center(const Tensor& x) const;

    /// Draw from the mixture noised to level σ (σ = 0 samples p_data itself).
    Tensor sample(SeededRng& rng, double sigma = 0.0) const;
    Tensor sample(SeededRng& rng, double sigma, std::size_t& component) const;

private:
    void check_input(const Tensor& x, double sigma, const char* op) const;
    std::vector<double> component_log_terms(const Tensor& x, double sigma) const;

    std::vector<double> weights_;
    std::vector<double> log_weights_;
    std::vector<Tensor> centers_;
    double delta_;
};

/// log Σ exp(v_i), stable for large negative entries.
double log_sum_exp(const std::vector<double>& values);

}  // namespace noisediff
