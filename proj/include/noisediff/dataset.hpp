// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "noisediff/gaussian_mixture.hpp"

namespace noisediff {

/// Number of distinct built-in template images.
inline constexpr std::size_t template_count = 8;

/// Grayscale [size, size] template with values in [0.1, 0.9].
/// Index order: square, disc, plus, ring, diagonal, frame, stripes, gradient.
Tensor make_template(std::size_t index, std::size_t size);
std::string template_name(std::size_t index);

/// Equal-weight mixture over the first `components` templates.
GaussianMixture template_mixture(std::size_t size, std::size_t components,
                                 double delta = GaussianMixture::default_delta);

/// Alternating 0/1 cells of width `cell`; far from every template.
Tensor checkerboard(std::size_t size, std::size_t cell = 1);

/// `count` draws from `model` (noise-free data distribution).
std::vector<Tensor> sample_dataset(const GaussianMixture& model, std::size_t count, SeededRng& rng);

}  // namespace noisediff
