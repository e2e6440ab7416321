// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace noisediff {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major tensor of 64-bit reals. Shapes never broadcast.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    /// Rank-1 tensor holding `values`.
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    bool all_finite() const noexcept;

    /// Same data viewed under a new shape with equal element count.
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

struct Term {
    double coefficient;
    std::reference_wrapper<const Tensor> tensor;
};

/// Throws ShapeError naming both shapes when `a` and `b` differ.
void require_same_shape(const Tensor& a, const Tensor& b, std::string_view context);

/// Throws NumericalError when any element of `t` is NaN or infinite.
void require_finite(const Tensor& t, std::string_view context);

double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);
double squared_distance(const Tensor& a, const Tensor& b);

/// Elementwise sum of coefficient * tensor. Terms are accumulated in order.
Tensor linear_combine(std::span<const Term> terms);
Tensor linear_combine(std::initializer_list<Term> terms);

Tensor scale(const Tensor& a, double c);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);

double max_abs(const Tensor& a);

/// ‖a - b‖ / ‖b‖, with ‖b‖ = 0 falling back to the absolute distance.
double relative_error(const Tensor& a, const Tensor& b);

}  // namespace noisediff
