// SPDX-License-Identifier: Apache-2.0
#include "noisediff/mlp_score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisediff/errors.hpp"

namespace noisediff {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

double silu(double a) { return a * sigmoid(a); }

double silu_grad(double a) {
    const double s = sigmoid(a);
    return s * (1.0 + a * (1.0 - s));
}

// y = W x + b for one layer.
void dense_forward(const ScoreNetParams& p, const ScoreNetParams::LayerView& l, std::span<const double> x,
                   std::span<double> y) {
    const double* w = p.values.data() + l.weight_offset;
    const double* b = p.values.data() + l.bias_offset;
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* row = w + o * l.in;
        double acc = b[o];
        for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

struct Activations {
    std::vector<double> input;
    std::vector<double> pre1, h1;
    std::vector<double> pre2, h2;
    std::vector<double> out;
};

void check_dims(const ScoreNetParams& p, const Tensor& x) {
    if (x.size() != p.data_dim) {
        throw ShapeError("score net expects " + std::to_string(p.data_dim) + " entries, got tensor of shape " +
                         shape_str(x.shape()));
    }
}

void check_level(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("score net: noise level must be positive and finite");
}

Activations forward(const ScoreNetParams& p, std::span<const double> x, double t) {
    Activations a;
    const double c_in = 1.0 / std::sqrt(p.data_std * p.data_std + t * t);
    a.input.resize(p.input_width());
    for (std::size_t i = 0; i < p.data_dim; ++i) a.input[i] = x[i] * c_in;
    const auto emb = noise_embedding(t);
    std::copy(emb.begin(), emb.end(), a.input.begin() + static_cast<std::ptrdiff_t>(p.data_dim));

    const auto l1 = p.layer(0), l2 = p.layer(1), l3 = p.layer(2);
    a.pre1.resize(l1.out);
    a.h1.resize(l1.out);
    dense_forward(p, l1, a.input, a.pre1);
    std::transform(a.pre1.begin(), a.pre1.end(), a.h1.begin(), silu);

    a.pre2.resize(l2.out);
    a.h2.resize(l2.out);
    dense_forward(p, l2, a.h1, a.pre2);
    std::transform(a.pre2.begin(), a.pre2.end(), a.h2.begin(), silu);

    a.out.resize(l3.out);
    dense_forward(p, l3, a.h2, a.out);
    return a;
}

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(out).
void backward(const ScoreNetParams& p, const Activations& a, std::span<const double> grad_out,
              std::vector<double>& grad) {
    const auto l1 = p.layer(0), l2 = p.layer(1), l3 = p.layer(2);
    const double* w3 = p.values.data() + l3.weight_offset;
    const double* w2 = p.values.data() + l2.weight_offset;

    std::vector<double> grad_h2(l3.in, 0.0);
    for (std::size_t o = 0; o < l3.out; ++o) {
        const double g = grad_out[o];
        double* gw = grad.data() + l3.weight_offset + o * l3.in;
        const double* row = w3 + o * l3.in;
        for (std::size_t i = 0; i < l3.in; ++i) {
            gw[i] += g * a.h2[i];
            grad_h2[i] += g * row[i];
        }
        grad[l3.bias_offset + o] += g;
    }

    std::vector<double> grad_h1(l2.in, 0.0);
    for (std::size_t o = 0; o < l2.out; ++o) {
        const double g = grad_h2[o] * silu_grad(a.pre2[o]);
        double* gw = grad.data() + l2.weight_offset + o * l2.in;
        const double* row = w2 + o * l2.in;
        for (std::size_t i = 0; i < l2.in; ++i) {
            gw[i] += g * a.h1[i];
            grad_h1[i] += g * row[i];
        }
        grad[l2.bias_offset + o] += g;
    }

    for (std::size_t o = 0; o < l1.out; ++o) {
        const double g = grad_h1[o] * silu_grad(a.pre1[o]);
        double* gw = grad.data() + l1.weight_offset + o * l1.in;
        for (std::size_t i = 0; i < l1.in; ++i) gw[i] += g * a.input[i];
        grad[l1.bias_offset + o] += g;
    }
}

void check_batch(std::span<const Tensor> batch, std::span<const double> t_samples) {
    if (batch.empty()) throw ValidationError("dsm_loss: batch must be non-empty");
    if (t_samples.size() != batch.size()) {
        throw ValidationError("dsm_loss: need one noise level per batch element");
    }
    for (double t : t_samples) check_level(t);
}

}  // namespace

std::vector<double> noise_embedding(double t) {
    check_level(t);
    const double u = std::log(t);
    constexpr std::size_t half = ScoreNetParams::embed_width / 2;
    std::vector<double> emb(ScoreNetParams::embed_width);
    for (std::size_t j = 0; j < half; ++j) {
        const double f = 0.5 * static_cast<double>(j + 1);
        emb[j] = std::sin(f * u);
        emb[half + j] = std::cos(f * u);
    }
    return emb;
}

std::size_t ScoreNetParams::parameter_count(std::size_t data_dim, std::size_t hidden) {
    const std::size_t in = data_dim + embed_width;
    return hidden * in + hidden + hidden * hidden + hidden + data_dim * hidden + data_dim;
}

ScoreNetParams::LayerView ScoreNetParams::layer(std::size_t index) const {
    const std::size_t in0 = input_width();
    const std::size_t ins[layer_count] = {in0, hidden, hidden};
    const std::size_t outs[layer_count] = {hidden, hidden, data_dim};
    std::size_t offset = 0;
    for (std::size_t k = 0; k < index; ++k) offset += ins[k] * outs[k] + outs[k];
    return LayerView{ins[index], outs[index], offset, offset + ins[index] * outs[index]};
}

ScoreNetParams ScoreNetParams::initialize(std::size_t data_dim, double data_std, SeededRng& rng,
                                          std::size_t hidden) {
    if (data_dim == 0 || hidden == 0) throw ValidationError("score net: dimensions must be positive");
    if (!(data_std > 0.0) || !std::isfinite(data_std)) {
        throw ValidationError("score net: data_std must be positive and finite");
    }
    ScoreNetParams p;
    p.data_dim = data_dim;
    p.hidden = hidden;
    p.data_std = data_std;
    p.values.assign(parameter_count(data_dim, hidden), 0.0);
    for (std::size_t k = 0; k < layer_count; ++k) {
        const auto l = p.layer(k);
        double std = 1.0 / std::sqrt(static_cast<double>(l.in));
        if (k + 1 == layer_count) std *= 0.1;
        for (std::size_t i = 0; i < l.in * l.out; ++i) p.values[l.weight_offset + i] = std * rng.normal();
    }
    return p;
}

void ScoreNetParams::validate() const {
    if (data_dim == 0 || hidden == 0) throw ValidationError("score net: dimensions must be positive");
    if (values.size() != parameter_count(data_dim, hidden)) {
        throw ValidationError("score net: parameter count " + std::to_string(values.size()) +
                              " inconsistent with data_dim " + std::to_string(data_dim) + " and hidden " +
                              std::to_string(hidden));
    }
    if (!(data_std > 0.0) || !std::isfinite(data_std)) throw ValidationError("score net: data_std must be positive");
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericalError("score net: non-finite parameter");
    }
}

ScoreNet::ScoreNet(ScoreNetParams params) : params_(std::move(params)) { params_.validate(); }

Tensor ScoreNet::score(const Tensor& x, double sigma) const { return net_score(params_, x, sigma); }

Tensor net_score(const ScoreNetParams& params, const Tensor& x, double t) {
    check_dims(params, x);
    check_level(t);
    const auto act = forward(params, x.data(), t);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -act.out[i] / t;
    return out;
}

double dsm_loss(const ScoreModel& model, std::span<const Tensor> batch, std::span<const double> t_samples,
                SeededRng& rng) {
    check_batch(batch, t_samples);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double t = t_samples[i];
        const Tensor z = sample_gaussian(rng, batch[i].shape());
        const Tensor noisy = linear_combine({{1.0, batch[i]}, {t, z}});
        const Tensor s = model.score(noisy, t);
        double sq = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double r = s[j] + z[j] / t;
            sq += r * r;
        }
        total += t * t * sq;
    }
    return total / static_cast<double>(batch.size());
}

double dsm_loss(const ScoreNetParams& params, std::span<const Tensor> batch, std::span<const double> t_samples,
                SeededRng& rng) {
    return dsm_loss(ScoreNet(params), batch, t_samples, rng);
}

LossGradient dsm_loss_gradient(const ScoreNetParams& params, std::span<const Tensor> batch,
                               std::span<const double> t_samples, std::span<const Tensor> noise) {
    check_batch(batch, t_samples);
    if (noise.size() != batch.size()) throw ValidationError("dsm_loss_gradient: need one noise tensor per sample");

    LossGradient result;
    result.gradient.assign(params.values.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<double> noisy(params.data_dim);
    std::vector<double> grad_out(params.data_dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_dims(params, batch[i]);
        check_dims(params, noise[i]);
        const double t = t_samples[i];
        for (std::size_t j = 0; j < params.data_dim; ++j) noisy[j] = batch[i][j] + t * noise[i][j];
        const auto act = forward(params, noisy, t);
        double sq = 0.0;
        for (std::size_t j = 0; j < params.data_dim; ++j) {
            const double r = act.out[j] - noise[i][j];
            sq += r * r;
            grad_out[j] = 2.0 * r * inv_b;
        }
        result.loss += sq * inv_b;
        backward(params, act, grad_out, result.gradient);
    }
    return result;
}

void TrainConfig::validate() const {
    if (steps < 0) throw ValidationError("train.steps must be >= 0");
    if (batch_size <= 0) throw ValidationError("train.batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ValidationError("train.learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("train.beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("train.beta2 must lie in [0, 1)");
    if (!(t_min > 0.0) || !(t_max >= t_min) || !std::isfinite(t_max)) {
        throw ValidationError("train.t_min/t_max must satisfy 0 < t_min <= t_max");
    }
    if (hidden == 0) throw ValidationError("train.hidden must be positive");
}

double sample_noise_level(SeededRng& rng, double t_min, double t_max) {
    const double lo = std::log(t_min);
    const double hi = std::log(t_max);
    return std::exp(lo + (hi - lo) * rng.uniform());
}

ScoreNetParams train(const TrainConfig& config, std::span<const Tensor> dataset) {
    config.validate();
    if (dataset.empty()) throw ValidationError("train: dataset must be non-empty");
    const std::size_t dim = dataset.front().size();
    double sum_sq = 0.0;
    for (const auto& x : dataset) {
        if (x.size() != dim) throw ShapeError("train: dataset tensors must share one size");
        require_finite(x, "train dataset");
        for (double v : x.data()) sum_sq += v * v;
    }
    const double rms = std::sqrt(sum_sq / static_cast<double>(dim * dataset.size()));
    const double data_std = rms > 0.0 ? rms : 1.0;

    SeededRng rng(config.seed);
    ScoreNetParams params = ScoreNetParams::initialize(dim, data_std, rng, config.hidden);

    std::vector<double> m(params.values.size(), 0.0);
    std::vector<double> v(params.values.size(), 0.0);
    std::vector<Tensor> batch(static_cast<std::size_t>(config.batch_size));
    std::vector<Tensor> noise(batch.size());
    std::vector<double> levels(batch.size());
    double b1_pow = 1.0, b2_pow = 1.0;

    for (int step = 0; step < config.steps; ++step) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            batch[i] = dataset[rng.below(dataset.size())];
            levels[i] = sample_noise_level(rng, config.t_min, config.t_max);
            noise[i] = sample_gaussian(rng, batch[i].shape());
        }
        const auto lg = dsm_loss_gradient(params, batch, levels, noise);
        if (!std::isfinite(lg.loss)) {
            throw NumericalError("train: loss became non-finite at step " + std::to_string(step));
        }
        const double lr = config.linear_decay
                              ? config.learning_rate * (1.0 - static_cast<double>(step) / config.steps)
                              : config.learning_rate;
        b1_pow *= config.beta1;
        b2_pow *= config.beta2;
        for (std::size_t k = 0; k < params.values.size(); ++k) {
            const double g = lg.gradient[k];
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
            const double m_hat = m[k] / (1.0 - b1_pow);
            const double v_hat = v[k] / (1.0 - b2_pow);
            params.values[k] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
    params.validate();
    return params;
}

double grad_check(const ScoreNetParams& params, const Tensor& x, double t, SeededRng& rng) {
    params.validate();
    check_dims(params, x);
    check_level(t);
    const Tensor z = sample_gaussian(rng, x.shape());
    const std::vector<Tensor> batch{x};
    const std::vector<Tensor> noise{z};
    const std::vector<double> levels{t};

    const auto analytic = dsm_loss_gradient(params, batch, levels, noise);

    const std::size_t total = params.values.size();
    std::vector<std::size_t> coords;
    if (total <= 32) {
        coords.resize(total);
        std::iota(coords.begin(), coords.end(), 0);
    } else {
        while (coords.size() < 32) {
            const std::size_t c = rng.below(total);
            if (std::find(coords.begin(), coords.end(), c) == coords.end()) coords.push_back(c);
        }
    }

    constexpr double step = 1e-5;
    ScoreNetParams probe = params;
    double worst = 0.0;
    for (std::size_t c : coords) {
        const double original = probe.values[c];
        probe.values[c] = original + step;
        const double up = dsm_loss_gradient(probe, batch, levels, noise).loss;
        probe.values[c] = original - step;
        const double down = dsm_loss_gradient(probe, batch, levels, noise).loss;
        probe.values[c] = original;
        const double fd = (up - down) / (2.0 * step);
        const double g = analytic.gradient[c];
        const double denom = std::max({std::abs(g), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(g - fd) / denom);
    }
    return worst;
}

}  // namespace noisediff
