#include "b0spec/nn/tensor.hpp"

#include <cmath>
#include <cstring>

#include "b0spec/errors.hpp"

namespace b0spec::nn {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape s) : shape(std::move(s)), data(shape_size(shape), 0.0) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (shape_size(shape) != data.size()) {
        throw ShapeError("tensor shape " + shape_string(shape) + " does not hold " + std::to_string(data.size()) +
                         " values");
    }
}

std::size_t Tensor::sample_size() const { return shape.empty() || shape[0] == 0 ? 0 : data.size() / shape[0]; }

std::span<double> Tensor::sample(std::size_t n) {
    const std::size_t k = sample_size();
    return {data.data() + n * k, k};
}

std::span<const double> Tensor::sample(std::size_t n) const {
    const std::size_t k = sample_size();
    return {data.data() + n * k, k};
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

void Tensor::resize(Shape s) {
    shape = std::move(s);
    data.resize(shape_size(shape));
}

Tensor stack(const std::vector<std::span<const double>>& rows, const Shape& sample_shape) {
    Shape s{rows.size()};
    s.insert(s.end(), sample_shape.begin(), sample_shape.end());
    Tensor t(s);
    const std::size_t k = shape_size(sample_shape);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != k) {
            throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                             " values, expected " + std::to_string(k));
        }
        std::memcpy(t.data.data() + i * k, rows[i].data(), k * sizeof(double));
    }
    return t;
}

}  // namespace b0spec::nn
