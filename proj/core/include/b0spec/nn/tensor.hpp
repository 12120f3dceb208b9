#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace b0spec::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_string(const Shape& s);

/// Dense row-major array. Batched tensors put the sample index first.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s);
    /// Throws ShapeError if the data length disagrees with the shape.
    Tensor(Shape s, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t batch() const { return shape.empty() ? 0 : shape[0]; }
    /// Elements per sample (everything after the leading dimension).
    std::size_t sample_size() const;
    std::span<double> sample(std::size_t n);
    std::span<const double> sample(std::size_t n) const;

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
    bool all_finite() const;
    void fill(double v);
    /// Reshapes in place, keeping the allocation when it is large enough.
    /// Existing element values are unspecified afterwards.
    void resize(Shape s);
};

/// Stacks per-sample rows into a batch tensor of shape {rows.size(), sample_shape...}.
Tensor stack(const std::vector<std::span<const double>>& rows, const Shape& sample_shape);

}  // namespace b0spec::nn
