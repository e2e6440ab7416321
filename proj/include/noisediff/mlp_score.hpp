// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "noisediff/rng.hpp"
#include "noisediff/score_model.hpp"

namespace noisediff {

/// Fully connected score network.
///
///   input  = [x / sqrt(data_std² + t²), sinusoidal embedding of ln t]
///   hidden = SiLU(W1 input + b1), SiLU(W2 h1 + b2)
///   out    = W3 h2 + b3
///   score  = -out / t
///
/// `out` estimates the noise z in x = x0 + t z, so the denoising score matching
/// loss t²‖score + z/t‖² reduces to ‖out - z‖² and every noise level carries
/// comparable weight.
struct ScoreNetParams {
    static constexpr std::size_t default_hidden = 128;
    static constexpr std::size_t embed_width = 16;
    static constexpr std::size_t layer_count = 3;

    struct LayerView {
        std::size_t in;
        std::size_t out;
        std::size_t weight_offset;  ///< row-major [out, in]
        std::size_t bias_offset;
    };

    std::size_t data_dim = 0;
    std::size_t hidden = default_hidden;
    double data_std = 1.0;
    std::vector<double> values;  ///< W1, b1, W2, b2, W3, b3 flattened in that order

    /// Gaussian init with std 1/sqrt(fan_in), zero biases, output layer scaled by 0.1.
    static ScoreNetParams initialize(std::size_t data_dim, double data_std, SeededRng& rng,
                                     std::size_t hidden = default_hidden);

    LayerView layer(std::size_t index) const;
    std::size_t input_width() const noexcept { return data_dim + embed_width; }
    static std::size_t parameter_count(std::size_t data_dim, std::size_t hidden);

    /// Throws ValidationError when shapes are inconsistent or NumericalError on non-finite values.
    void validate() const;
};

/// Sinusoidal features of ln t: sin(f_j ln t), cos(f_j ln t) with f_j = 0.5 (j + 1), j = 0..7.
std::vector<double> noise_embedding(double t);

class ScoreNet final : public ScoreModel {
public:
    explicit ScoreNet(ScoreNetParams params);

    const ScoreNetParams& params() const noexcept { return params_; }

    Tensor score(const Tensor& x, double sigma) const override;
    std::size_t data_size() const override { return params_.data_dim; }

private:
    ScoreNetParams params_;
};

/// Same as ScoreNet::score for an unwrapped parameter set.
Tensor net_score(const ScoreNetParams& params, const Tensor& x, double t);

/// Mean over the batch of t_i² ‖score(x_i + t_i z_i, t_i) + z_i / t_i‖², z_i ~ N(0, I) from `rng`.
double dsm_loss(const ScoreModel& model, std::span<const Tensor> batch, std::span<const double> t_samples,
                SeededRng& rng);
double dsm_loss(const ScoreNetParams& params, std::span<const Tensor> batch, std::span<const double> t_samples,
                SeededRng& rng);

/// Loss and gradient for explicit noise draws (`noise[i]` pairs with batch[i]).
struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossGradient dsm_loss_gradient(const ScoreNetParams& params, std::span<const Tensor> batch,
                               std::span<const double> t_samples, std::span<const Tensor> noise);

struct TrainConfig {
    int steps = 2000;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool linear_decay = true;  ///< learning rate falls linearly from learning_rate to 0 over `steps`
    double t_min = 1e-3;  ///< noise levels sampled log-uniformly in [t_min, t_max]
    double t_max = 80.0;
    std::uint64_t seed = 0;
    std::size_t hidden = ScoreNetParams::default_hidden;

    void validate() const;
};

/// Log-uniform draw in [t_min, t_max].
double sample_noise_level(SeededRng& rng, double t_min, double t_max);

/// Adam on the DSM loss. Initialization and all draws come from SeededRng(config.seed).
/// Throws NumericalError naming the step when the loss becomes non-finite.
ScoreNetParams train(const TrainConfig& config, std::span<const Tensor> dataset);

/// Max relative error |g - fd| / max(|g|, |fd|, 1e-6) between backprop gradients and
/// central differences (step 1e-5) of the single-sample loss at (x, t), over 32 coordinates
/// drawn from `rng` (all coordinates if fewer). The noise draw also comes from `rng`.
double grad_check(const ScoreNetParams& params, const Tensor& x, double t, SeededRng& rng);

}  // namespace noisediff
