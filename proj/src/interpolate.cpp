// SPDX-License-Identifier: Apache-2.0
#include "noisediff/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "noisediff/errors.hpp"

namespace noisediff {

namespace {

constexpr double half_pi = std::numbers::pi / 2.0;

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
}

}  // namespace

void InterpolationPlan::validate() const {
    check_lambda(lambda);
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("plan.alpha must be finite and >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("plan.beta must be finite and >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("plan.gamma must lie in [0, 1]");
    if (!std::isfinite(mu_comp)) throw ValidationError("plan.mu_comp must be finite");
    if (!std::isfinite(nu_comp)) throw ValidationError("plan.nu_comp must be finite");
    if (!(clip_factor > 0.0)) throw ValidationError("plan.clip_factor (k) must be positive");
    if (!(compensation_scale > 0.0) || !std::isfinite(compensation_scale)) {
        throw ValidationError("plan.compensation_scale (c) must be positive and finite");
    }
    const double total = alpha * alpha + beta * beta + gamma * gamma;
    if (std::abs(total - 1.0) > norm_tolerance) {
        throw ValidationError("plan: alpha^2 + beta^2 + gamma^2 must equal 1 within 1e-9, got " +
                              std::to_string(total));
    }
}

ClipSpec ClipSpec::from_factor(double k, double sigma) {
    if (!(k > 0.0)) throw ValidationError("clip factor k must be positive");
    if (!(sigma > 0.0)) throw ValidationError("clip noise level must be positive");
    return ClipSpec{k * sigma};
}

Tensor slerp(const Tensor& a, const Tensor& b, double lambda) {
    require_same_shape(a, b, "slerp");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw ValidationError("slerp: inputs must have nonzero norm");
    if (lambda == 0.0) return a;
    if (lambda == 1.0) return b;

    const double cos_theta = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    if (theta < 1e-6 || std::numbers::pi - theta < 1e-6) {
        return linear_combine({{1.0 - lambda, a}, {lambda, b}});
    }
    const double s = std::sin(theta);
    return linear_combine({{std::sin((1.0 - lambda) * theta) / s, a}, {std::sin(lambda * theta) / s, b}});
}

InterpolationPlan plan_from_lambda(double lambda, double gamma, double c, double k) {
    check_lambda(lambda);
    if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
    if (!(gamma < 1.0)) throw ValidationError("gamma must be < 1 (gamma = 1 leaves no style weight)");
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("c must be positive and finite");
    if (!(k > 0.0)) throw ValidationError("k must be positive");

    InterpolationPlan plan;
    const double style = std::sqrt(1.0 - gamma * gamma);
    plan.lambda = lambda;
    plan.gamma = gamma;
    plan.alpha = std::cos(lambda * half_pi) * style;
    plan.beta = std::sin(lambda * half_pi) * style;
    // cos(π/2) is not exactly zero in floating point.
    if (lambda == 1.0) plan.alpha = 0.0;
    plan.mu_comp = c * plan.alpha / (plan.alpha + plan.beta);
    plan.nu_comp = c * plan.beta / (plan.alpha + plan.beta);
    plan.clip_factor = k;
    plan.compensation_scale = c;
    plan.validate();
    return plan;
}

Tensor clip_latent(const Tensor& x, const ClipSpec& spec) {
    if (!(spec.bound > 0.0)) throw ValidationError("clip bound must be positive");
    Tensor out = x;
    for (double& v : out.data()) v = std::clamp(v, -spec.bound, spec.bound);
    return out;
}

Tensor noise_inject_latent(const Tensor& a, const Tensor& b, double lambda, double sigma, bool shared_noise,
                           SeededRng& rng) {
    require_same_shape(a, b, "noise_inject");
    check_lambda(lambda);
    const Tensor eps_a = sample_gaussian(rng, a.shape(), sigma);
    const Tensor eps_b = shared_noise ? eps_a : sample_gaussian(rng, a.shape(), sigma);
    return slerp(a + eps_a, b + eps_b, lambda);
}

Tensor noise_inject_interpolate(const Tensor& a, const Tensor& b, double lambda, double sigma, bool shared_noise,
                                SeededRng& rng, const OdeConfig& ode) {
    ode.schedule.validate();
    if (!(sigma >= ode.schedule.sigma_min && sigma <= ode.schedule.sigma_max)) {
        throw ValidationError("noise_inject: sigma must lie within the schedule range [sigma_min, sigma_max]");
    }
    Tensor latent = noise_inject_latent(a, b, lambda, sigma, shared_noise, rng);
    return decode_from(latent, sigma, ode);
}

Tensor noise_diffusion_latent(const Tensor& latent_a, const Tensor& latent_b, const Tensor& a, const Tensor& b,
                              const Tensor& noise, const InterpolationPlan& plan, const ClipSpec& clip) {
    plan.validate();
    const Tensor clipped_a = clip_latent(latent_a, clip);
    const Tensor clipped_b = clip_latent(latent_b, clip);
    Tensor mixed = linear_combine({{plan.alpha, clipped_a},
                                   {plan.beta, clipped_b},
                                   {plan.mu_comp - plan.alpha, a},
                                   {plan.nu_comp - plan.beta, b},
                                   {plan.gamma, noise}});
    return clip_latent(mixed, clip);
}

NoiseDiffusionTrace noise_diffusion_trace(const Tensor& a, const Tensor& b, const InterpolationPlan& plan,
                                          SeededRng& rng, const OdeConfig& ode) {
    plan.validate();
    require_same_shape(a, b, "noise_diffusion");
    ode.schedule.validate();
    const double top = ode.schedule.sigma_max;

    NoiseDiffusionTrace trace;
    trace.latent_a = encode(a, ode);
    trace.latent_b = encode(b, ode);
    trace.noise = sample_gaussian(rng, a.shape(), top);
    const ClipSpec clip = ClipSpec::from_factor(plan.clip_factor, top);
    trace.latent = noise_diffusion_latent(trace.latent_a, trace.latent_b, a, b, trace.noise, plan, clip);
    trace.output = decode(trace.latent, ode);
    return trace;
}

Tensor noise_diffusion_interpolate(const Tensor& a, const Tensor& b, const InterpolationPlan& plan,
                                   SeededRng& rng, const OdeConfig& ode) {
    return noise_diffusion_trace(a, b, plan, rng, ode).output;
}

Tensor slerp_interpolate(const Tensor& a, const Tensor& b, double lambda, const OdeConfig& ode) {
    return decode(slerp(encode(a, ode), encode(b, ode), lambda), ode);
}

}  // namespace noisediff
