// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "noisediff/score_model.hpp"

namespace noisediff {

/// Noise-level grid parameters. With zero drift and unit-rate noise growth the
/// marginal std at time t equals t, so the ODE is integrated directly in σ.
struct SigmaSchedule {
    double sigma_min = 1e-3;
    double sigma_max = 80.0;
    int n_steps = 64;  ///< grid points, including both endpoints
    double rho = 7.0;

    /// Throws ValidationError naming the field. sigma_min == sigma_max is accepted
    /// as a degenerate (identity) schedule; karras_grid itself rejects it.
    void validate() const;

    bool degenerate() const noexcept { return sigma_min == sigma_max; }
};

/// Karras et al. grid, strictly decreasing from sigma_max to sigma_min (both exact):
/// σ_i = (σ_max^{1/ρ} + i/(N-1) (σ_min^{1/ρ} - σ_max^{1/ρ}))^ρ.
std::vector<double> karras_grid(const SigmaSchedule& schedule);

/// One Heun step of dx/dσ = -σ ∇log p_σ(x) from sigma_from to sigma_to.
/// The trapezoidal corrector is skipped when sigma_to == 0.
Tensor heun_step(const Tensor& x, double sigma_from, double sigma_to, const ScoreModel& backend);

struct OdeConfig {
    SigmaSchedule schedule;
    const ScoreModel& backend;
};

/// Image -> latent: integrate from sigma_min up to sigma_max over the reversed grid.
Tensor encode(const Tensor& x0, const OdeConfig& config);

/// Latent at sigma_max -> image at sigma_min.
Tensor decode(const Tensor& x_t, const OdeConfig& config);

/// Decode a tensor that lives at noise level `sigma_start` (sigma_min <= sigma_start).
/// The grid is the configured one with sigma_max replaced by sigma_start.
Tensor decode_from(const Tensor& x, double sigma_start, const OdeConfig& config);

/// Encode only up to `sigma_end`.
Tensor encode_to(const Tensor& x0, double sigma_end, const OdeConfig& config);

}  // namespace noisediff
