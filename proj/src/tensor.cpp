// SPDX-License-Identifier: Apache-2.0
#include "noisediff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "noisediff/errors.hpp"

namespace noisediff {

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (auto d : shape) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
    }
}

Tensor Tensor::vector(std::initializer_list<double> values) { return vector(std::vector<double>(values)); }

Tensor Tensor::vector(std::vector<double> values) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view context) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(context) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

void require_finite(const Tensor& t, std::string_view context) {
    if (!t.all_finite()) throw NumericalError(std::string(context) + ": non-finite value in tensor");
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double norm(const Tensor& a) {
    double sum = 0.0;
    for (double v : a.data()) sum += v * v;
    return std::sqrt(sum);
}

double squared_distance(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "squared_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

Tensor linear_combine(std::span<const Term> terms) {
    if (terms.empty()) throw ValidationError("linear_combine: empty term list");
    const Tensor& first = terms.front().tensor.get();
    for (const auto& term : terms) require_same_shape(first, term.tensor.get(), "linear_combine");

    Tensor out(first.shape());
    auto dst = out.data();
    for (const auto& term : terms) {
        auto src = term.tensor.get().data();
        const double c = term.coefficient;
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
    }
    require_finite(out, "linear_combine");
    return out;
}

Tensor linear_combine(std::initializer_list<Term> terms) {
    return linear_combine(std::span<const Term>(terms.begin(), terms.size()));
}

Tensor scale(const Tensor& a, double c) { return linear_combine({{c, a}}); }

Tensor operator+(const Tensor& a, const Tensor& b) { return linear_combine({{1.0, a}, {1.0, b}}); }

Tensor operator-(const Tensor& a, const Tensor& b) { return linear_combine({{1.0, a}, {-1.0, b}}); }

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double relative_error(const Tensor& a, const Tensor& b) {
    const double dist = std::sqrt(squared_distance(a, b));
    const double ref = norm(b);
    return ref > 0.0 ? dist / ref : dist;
}

}  // namespace noisediff
