// SPDX-License-Identifier: Apache-2.0
#include "noisediff/pf_ode.hpp"

#include <cmath>
#include <sstream>

#include "noisediff/errors.hpp"

namespace noisediff {

void SigmaSchedule::validate() const {
    if (!(sigma_min > 0.0) || !std::isfinite(sigma_min)) {
        throw ValidationError("schedule.sigma_min must be positive and finite");
    }
    if (!std::isfinite(sigma_max) || sigma_max < sigma_min) {
        throw ValidationError("schedule.sigma_max must be finite and >= sigma_min");
    }
    if (n_steps < 2) throw ValidationError("schedule.n_steps must be >= 2");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("schedule.rho must be positive");
}

std::vector<double> karras_grid(const SigmaSchedule& schedule) {
    schedule.validate();
    if (!(schedule.sigma_min < schedule.sigma_max)) {
        throw ValidationError("karras_grid: sigma_min must be < sigma_max");
    }
    const int n = schedule.n_steps;
    const double inv_rho = 1.0 / schedule.rho;
    const double hi = std::pow(schedule.sigma_max, inv_rho);
    const double lo = std::pow(schedule.sigma_min, inv_rho);

    std::vector<double> grid(static_cast<std::size_t>(n));
    grid.front() = schedule.sigma_max;
    grid.back() = schedule.sigma_min;
    for (int i = 1; i < n - 1; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
        grid[static_cast<std::size_t>(i)] = std::pow(hi + frac * (lo - hi), schedule.rho);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] < grid[i - 1])) {
            throw NumericalError("karras_grid: grid is not strictly decreasing at index " + std::to_string(i));
        }
    }
    return grid;
}

namespace {

[[noreturn]] void step_failure(double from, double to, const char* stage) {
    std::ostringstream msg;
    msg << "heun_step: non-finite " << stage << " stepping sigma " << from << " -> " << to;
    throw NumericalError(msg.str());
}

// dx/dσ = -σ ∇log p_σ(x)
Tensor drift(const Tensor& x, double sigma, const ScoreModel& backend, double from, double to, const char* stage) {
    Tensor s = backend.score(x, sigma);
    if (!s.all_finite()) step_failure(from, to, stage);
    return scale(s, -sigma);
}

Tensor combine(std::initializer_list<Term> terms, double from, double to, const char* stage) {
    try {
        return linear_combine(terms);
    } catch (const NumericalError&) {
        step_failure(from, to, stage);
    }
}

void check_backend(const Tensor& x, const ScoreModel& backend) {
    if (x.size() != backend.data_size()) {
        throw ShapeError("ode: tensor has " + std::to_string(x.size()) + " entries but backend expects " +
                         std::to_string(backend.data_size()));
    }
}

Tensor integrate(Tensor x, const std::vector<double>& sigmas, const ScoreModel& backend) {
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i) x = heun_step(x, sigmas[i], sigmas[i + 1], backend);
    return x;
}

}  // namespace

Tensor heun_step(const Tensor& x, double sigma_from, double sigma_to, const ScoreModel& backend) {
    if (!(sigma_from >= 0.0) || !(sigma_to >= 0.0) || sigma_from == sigma_to) {
        throw ValidationError("heun_step: noise levels must be nonnegative and distinct");
    }
    if (!x.all_finite()) step_failure(sigma_from, sigma_to, "input");
    const double h = sigma_to - sigma_from;

    Tensor d0 = drift(x, sigma_from, backend, sigma_from, sigma_to, "drift");
    Tensor predictor = combine({{1.0, x}, {h, d0}}, sigma_from, sigma_to, "predictor");
    if (sigma_to == 0.0) return predictor;

    Tensor d1 = drift(predictor, sigma_to, backend, sigma_from, sigma_to, "corrector drift");
    return combine({{1.0, x}, {0.5 * h, d0}, {0.5 * h, d1}}, sigma_from, sigma_to, "result");
}

Tensor encode_to(const Tensor& x0, double sigma_end, const OdeConfig& config) {
    SigmaSchedule s = config.schedule;
    s.sigma_max = sigma_end;
    s.validate();
    check_backend(x0, config.backend);
    require_finite(x0, "encode");
    if (s.degenerate()) return x0;
    auto grid = karras_grid(s);
    std::vector<double> ascending(grid.rbegin(), grid.rend());
    return integrate(x0, ascending, config.backend);
}

Tensor encode(const Tensor& x0, const OdeConfig& config) {
    return encode_to(x0, config.schedule.sigma_max, config);
}

Tensor decode_from(const Tensor& x, double sigma_start, const OdeConfig& config) {
    SigmaSchedule s = config.schedule;
    s.sigma_max = sigma_start;
    s.validate();
    check_backend(x, config.backend);
    require_finite(x, "decode");
    if (s.degenerate()) return x;
    return integrate(x, karras_grid(s), config.backend);
}

Tensor decode(const Tensor& x_t, const OdeConfig& config) {
    return decode_from(x_t, config.schedule.sigma_max, config);
}

}  // namespace noisediff
