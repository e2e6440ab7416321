// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "noisediff/tensor.hpp"

namespace noisediff {

/// Source of ∇log p_σ(x) for the noised data marginal p_σ = p_data ⊗ N(0, σ²I).
class ScoreModel {
public:
    virtual ~ScoreModel() = default;

    virtual Tensor score(const Tensor& x, double sigma) const = 0;

    /// Number of scalar entries in one data tensor.
    virtual std::size_t data_size() const = 0;
};

/// Score identically zero; the probability flow leaves every point in place.
class ZeroScore final : public ScoreModel {
public:
    explicit ZeroScore(std::size_t size) : size_(size) {}
    Tensor score(const Tensor& x, double) const override { return Tensor(x.shape()); }
    std::size_t data_size() const override { return size_; }

private:
    std::size_t size_;
};

}  // namespace noisediff
