// SPDX-License-Identifier: Apache-2.0
#include "noisediff/dataset.hpp"

#include <cmath>

#include "noisediff/errors.hpp"

namespace noisediff {

namespace {

constexpr double low = 0.1;
constexpr double high = 0.9;

// Pixel coordinates mapped to [-1, 1].
double coord(std::size_t i, std::size_t size) {
    return size == 1 ? 0.0 : 2.0 * static_cast<double>(i) / static_cast<double>(size - 1) - 1.0;
}

}  // namespace

std::string template_name(std::size_t index) {
    static const char* names[template_count] = {"square", "disc",  "plus",    "ring",
                                                "diagonal", "frame", "stripes", "gradient"};
    if (index >= template_count) throw ValidationError("template index out of range");
    return names[index];
}

Tensor make_template(std::size_t index, std::size_t size) {
    if (index >= template_count) throw ValidationError("template index out of range");
    if (size < 2) throw ValidationError("template size must be >= 2");
    Tensor t({size, size});
    for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) {
            const double y = coord(r, size);
            const double x = coord(c, size);
            const double rad = std::sqrt(x * x + y * y);
            bool on = false;
            double value = 0.0;
            switch (index) {
                case 0: on = std::abs(x) < 0.5 && std::abs(y) < 0.5; break;
                case 1: on = rad < 0.6; break;
                case 2: on = std::abs(x) < 0.25 || std::abs(y) < 0.25; break;
                case 3: on = rad > 0.45 && rad < 0.85; break;
                case 4: on = std::abs(x - y) < 0.4; break;
                case 5: on = std::abs(x) > 0.7 || std::abs(y) > 0.7; break;
                case 6: on = (c / std::max<std::size_t>(1, size / 8)) % 2 == 0; break;
                default: value = low + (high - low) * (x + 1.0) / 2.0; break;
            }
            t[r * size + c] = index == 7 ? value : (on ? high : low);
        }
    }
    return t;
}

GaussianMixture template_mixture(std::size_t size, std::size_t components, double delta) {
    if (components == 0 || components > template_count) {
        throw ValidationError("mixture components must lie in [1, " + std::to_string(template_count) + "]");
    }
    std::vector<Tensor> centers;
    std::vector<double> weights(components, 1.0 / static_cast<double>(components));
    for (std::size_t k = 0; k < components; ++k) centers.push_back(make_template(k, size));
    return GaussianMixture(std::move(weights), std::move(centers), delta);
}

Tensor checkerboard(std::size_t size, std::size_t cell) {
    if (size < 1 || cell < 1) throw ValidationError("checkerboard: size and cell must be positive");
    Tensor t({size, size});
    for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) t[r * size + c] = ((r / cell + c / cell) % 2 == 0) ? 1.0 : 0.0;
    }
    return t;
}

std::vector<Tensor> sample_dataset(const GaussianMixture& model, std::size_t count, SeededRng& rng) {
    std::vector<Tensor> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(model.sample(rng));
    return out;
}

}  // namespace noisediff
