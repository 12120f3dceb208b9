#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "b0spec/nn/tensor.hpp"

namespace b0spec::nn {

enum class LayerKind { Conv2d, Conv1d, MaxPool1d, AvgPool2d, Dense, Relu, Flatten, Concat };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

/// Declarative layer description. Unused fields stay zero.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;   ///< conv kernel side; stride is 1 and padding keeps the size
    std::size_t pool_h = 0;   ///< avgpool2d window rows (stride equals window, floor)
    std::size_t pool_w = 0;   ///< avgpool2d window cols; maxpool1d window
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    std::size_t side_features = 0;  ///< concat: width of the appended side input

    static LayerSpec conv2d(std::size_t in, std::size_t out);
    static LayerSpec conv1d(std::size_t in, std::size_t out);
    static LayerSpec avgpool2d(std::size_t h, std::size_t w);
    static LayerSpec maxpool1d(std::size_t window);
    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec relu();
    static LayerSpec flatten();
    static LayerSpec concat(std::size_t side);

    nlohmann::json to_json() const;
    static LayerSpec from_json(const nlohmann::json& j);
    bool operator==(const LayerSpec&) const = default;
};

/// Stateless layer kernel; weights live in the owning network's parameter vector.
class Layer {
public:
    explicit Layer(LayerSpec spec) : spec_(spec) {}
    virtual ~Layer() = default;

    const LayerSpec& spec() const { return spec_; }
    /// Per-sample output shape. Throws ShapeError on an incompatible input.
    virtual Shape infer(const Shape& in) const = 0;
    virtual std::size_t param_count() const { return 0; }
    virtual void init(std::span<double> /*params*/, std::mt19937_64& /*rng*/) const {}

    /// `side` is consulted only by concat layers.
    virtual void forward(const double* w, const Tensor& x, Tensor& y, const Tensor* side) const = 0;
    /// Accumulates into gw (may be null when the layer has no parameters).
    /// gx may be null when the input gradient is not needed.
    virtual void backward(const double* w, const Tensor& x, const Tensor& y, const Tensor& gy, Tensor* gx,
                          double* gw) const = 0;

private:
    LayerSpec spec_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace b0spec::nn
