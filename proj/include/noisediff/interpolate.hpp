// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

#include "noisediff/pf_ode.hpp"
#include "noisediff/rng.hpp"

namespace noisediff {

/// Coefficients of the noise-corrected interpolation
///   x_t = α·clip(f(a)) + β·clip(f(b)) + (μ-α)·a + (ν-β)·b + γ·ε,
/// where α weights image a (λ = 0 reproduces a). Requires α² + β² + γ² = 1.
struct InterpolationPlan {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    double mu_comp = 1.0;  ///< compensation on raw image a
    double nu_comp = 0.0;  ///< compensation on raw image b
    double lambda = 0.0;
    double clip_factor = 2.2;  ///< boundary in units of the latent noise std; +inf disables clipping
    double compensation_scale = 2.0;

    static constexpr double norm_tolerance = 1e-9;

    void validate() const;
};

/// Absolute clamp threshold.
struct ClipSpec {
    double bound = std::numeric_limits<double>::infinity();

    /// bound = k · σ.
    static ClipSpec from_factor(double k, double sigma);
};

/// Great-circle interpolation. Falls back to (1-λ)a + λb when the angle between
/// the inputs is within 1e-6 of 0 or π.
Tensor slerp(const Tensor& a, const Tensor& b, double lambda);

/// α = cos(λπ/2)·√(1-γ²), β = sin(λπ/2)·√(1-γ²), μ = c·α/(α+β), ν = c·β/(α+β).
InterpolationPlan plan_from_lambda(double lambda, double gamma, double c, double k);

/// Elementwise clamp to [-bound, bound].
Tensor clip_latent(const Tensor& x, const ClipSpec& spec);

/// Latent of the noise-injection method before decoding: slerp(a + ε_a, b + ε_b, λ)
/// with ε ~ N(0, σ²I); ε_b = ε_a when `shared_noise`.
Tensor noise_inject_latent(const Tensor& a, const Tensor& b, double lambda, double sigma, bool shared_noise,
                           SeededRng& rng);

/// noise_inject_latent followed by decoding from σ. σ must lie inside the schedule range.
Tensor noise_inject_interpolate(const Tensor& a, const Tensor& b, double lambda, double sigma, bool shared_noise,
                                SeededRng& rng, const OdeConfig& ode);

/// Combination step on already-encoded latents: clip both, combine, clip again.
/// `noise` is ε at the latent level (std σ_max), drawn by the caller.
Tensor noise_diffusion_latent(const Tensor& latent_a, const Tensor& latent_b, const Tensor& a, const Tensor& b,
                              const Tensor& noise, const InterpolationPlan& plan, const ClipSpec& clip);

struct NoiseDiffusionTrace {
    Tensor latent_a;
    Tensor latent_b;
    Tensor noise;
    Tensor latent;  ///< pre-decode latent
    Tensor output;
};

/// Full pipeline: encode both images, combine with a fresh ε ~ N(0, σ_max²I) from `rng`, decode.
NoiseDiffusionTrace noise_diffusion_trace(const Tensor& a, const Tensor& b, const InterpolationPlan& plan,
                                          SeededRng& rng, const OdeConfig& ode);

Tensor noise_diffusion_interpolate(const Tensor& a, const Tensor& b, const InterpolationPlan& plan,
                                   SeededRng& rng, const OdeConfig& ode);

/// Baseline: encode both, slerp the latents, decode.
Tensor slerp_interpolate(const Tensor& a, const Tensor& b, double lambda, const OdeConfig& ode);

}  // namespace noisediff
