#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "b0spec/nn/layers.hpp"
#include "b0spec/nn/tensor.hpp"

namespace b0spec::nn {

/// Activations recorded by a forward pass, tied to the parameter version
/// they were computed with.
struct ForwardCache {
    std::uint64_t version = 0;
    std::vector<Tensor> acts;  ///< acts[0] is the input, acts[i+1] the output of layer i
    const Tensor* side = nullptr;
    /// Reused gradient buffers; reusing one cache across steps avoids
    /// reallocating activations.
    mutable std::vector<Tensor> scratch;
};

class Network {
public:
    Network() = default;
    /// Validates the layer chain against the per-sample input shape.
    Network(std::string name, Shape input_shape, std::size_t side_features, std::vector<LayerSpec> layers);
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    static Network from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    const std::string& name() const { return name_; }
    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const { return shapes_.back(); }
    std::size_t side_features() const { return side_features_; }
    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::size_t param_count() const { return n_params_; }
    std::size_t layer_offset(std::size_t i) const { return offsets_.at(i); }

    /// Allocates and fills parameters (uniform ±√(6/(fan_in+fan_out)), zero biases).
    void init(std::uint64_t seed);
    bool initialized() const { return initialized_; }
    std::span<const double> params() const { return params_; }
    /// Mutable access invalidates existing forward caches.
    std::span<double> mutable_params();
    /// Throws ShapeError on a length mismatch.
    void set_params(std::vector<double> values);
    std::uint64_t version() const { return version_; }

    /// x has shape {N, input_shape...}; side has shape {N, side_features} when
    /// the network has a concat layer. Throws UntrainedError before init.
    Tensor forward(const Tensor& x, const Tensor* side = nullptr, ForwardCache* cache = nullptr) const;
    /// Gradients of the loss with respect to every parameter, accumulated into
    /// `grads` (length param_count()). Returns dL/dx only when `input_grad` is set.
    void backward(const ForwardCache& cache, const Tensor& grad_out, std::span<double> grads,
                  Tensor* input_grad = nullptr) const;

private:
    void build();

    std::string name_;
    Shape input_shape_;
    std::size_t side_features_ = 0;
    std::vector<LayerSpec> specs_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Shape> shapes_;  ///< shapes_[0] input, shapes_[i+1] after layer i
    std::vector<std::size_t> offsets_;
    std::size_t n_params_ = 0;
    std::vector<double> params_;
    bool initialized_ = false;
    std::uint64_t version_ = 1;
};

/// Mean of squared differences over every element, and its gradient
/// 2(y − t)/numel with respect to y.
double mse_loss(const Tensor& y, const Tensor& target, Tensor* grad = nullptr);

}  // namespace b0spec::nn
