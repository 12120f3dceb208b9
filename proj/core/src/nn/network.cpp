#include "b0spec/nn/network.hpp"

#include <atomic>
#include <random>

#include "b0spec/errors.hpp"

namespace b0spec::nn {

using nlohmann::json;

namespace {

// Versions are unique across all networks so a cache can never match the wrong one.
std::uint64_t next_version() {
    static std::atomic<std::uint64_t> counter{1};
    return ++counter;
}

}  // namespace

Network::Network(std::string name, Shape input_shape, std::size_t side_features, std::vector<LayerSpec> layers)
    : name_(std::move(name)),
      input_shape_(std::move(input_shape)),
      side_features_(side_features),
      specs_(std::move(layers)),
      version_(next_version()) {
    build();
}

Network::Network(const Network& other)
    : name_(other.name_),
      input_shape_(other.input_shape_),
      side_features_(other.side_features_),
      specs_(other.specs_),
      params_(other.params_),
      initialized_(other.initialized_),
      version_(other.version_) {
    build();
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network tmp(other);
        *this = std::move(tmp);
    }
    return *this;
}

void Network::build() {
    if (input_shape_.empty()) throw ConfigError("network '" + name_ + "' has no input shape");
    if (specs_.empty()) throw ConfigError("network '" + name_ + "' has no layers");
    layers_.clear();
    shapes_ = {input_shape_};
    offsets_.clear();
    n_params_ = 0;
    bool has_concat = false;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        auto layer = make_layer(specs_[i]);
        if (specs_[i].kind == LayerKind::Concat) {
            if (specs_[i].side_features != side_features_)
                throw ConfigError("network '" + name_ + "': concat width differs from side input width");
            has_concat = true;
        }
        try {
            shapes_.push_back(layer->infer(shapes_.back()));
        } catch (const ShapeError& e) {
            throw ShapeError("network '" + name_ + "' layer " + std::to_string(i) + " (" + to_string(specs_[i].kind) +
                             "): " + e.what());
        }
        offsets_.push_back(n_params_);
        n_params_ += layer->param_count();
        layers_.push_back(std::move(layer));
    }
    if (side_features_ > 0 && !has_concat)
        throw ConfigError("network '" + name_ + "' declares a side input but no concat layer");
    if (!params_.empty() && params_.size() != n_params_)
        throw ShapeError("network '" + name_ + "' parameter vector has the wrong length");
}

json Network::to_json() const {
    json layers = json::array();
    for (const auto& s : specs_) layers.push_back(s.to_json());
    return {{"name", name_}, {"input_shape", input_shape_}, {"side_features", side_features_},
            {"layers", layers}, {"param_count", n_params_}};
}

Network Network::from_json(const json& j) {
    try {
        std::vector<LayerSpec> layers;
        for (const auto& l : j.at("layers")) layers.push_back(LayerSpec::from_json(l));
        Network net(j.at("name").get<std::string>(), j.at("input_shape").get<Shape>(),
                    j.value("side_features", std::size_t{0}), std::move(layers));
        if (j.contains("param_count") && j.at("param_count").get<std::size_t>() != net.param_count()) {
            throw ConfigError("network '" + net.name() + "': declared param_count " +
                              std::to_string(j.at("param_count").get<std::size_t>()) + " but layers give " +
                              std::to_string(net.param_count()));
        }
        return net;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed network description: ") + e.what());
    }
}

void Network::init(std::uint64_t seed) {
    params_.assign(n_params_, 0.0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        std::span<double> p(params_.data() + offsets_[i], layers_[i]->param_count());
        layers_[i]->init(p, rng);
    }
    initialized_ = true;
    version_ = next_version();
}

std::span<double> Network::mutable_params() {
    version_ = next_version();
    return params_;
}

void Network::set_params(std::vector<double> values) {
    if (values.size() != n_params_) {
        throw ShapeError("network '" + name_ + "' expects " + std::to_string(n_params_) + " parameters, got " +
                         std::to_string(values.size()));
    }
    params_ = std::move(values);
    initialized_ = true;
    version_ = next_version();
}

Tensor Network::forward(const Tensor& x, const Tensor* side, ForwardCache* cache) const {
    if (!initialized_) throw UntrainedError("network '" + name_ + "' has no weights");
    Shape expect{x.batch()};
    expect.insert(expect.end(), input_shape_.begin(), input_shape_.end());
    if (x.shape != expect) {
        throw ShapeError("network '" + name_ + "' layer 0 (" +
                         (specs_.empty() ? std::string("input") : to_string(specs_[0].kind)) + "): input " +
                         shape_string(x.shape) + " does not match " + shape_string(expect));
    }
    // Inference reuses per-thread buffers; training reuses the caller's cache.
    thread_local ForwardCache scratch;
    ForwardCache& c = cache ? *cache : scratch;
    c.version = cache ? version_ : 0;
    c.side = side;
    c.acts.resize(layers_.size() + 1);
    c.acts[0].shape = x.shape;
    c.acts[0].data.assign(x.data.begin(), x.data.end());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            layers_[i]->forward(params_.data() + offsets_[i], c.acts[i], c.acts[i + 1], side);
        } catch (const ShapeError& e) {
            c.version = 0;
            throw ShapeError("network '" + name_ + "' layer " + std::to_string(i) + " (" + to_string(specs_[i].kind) +
                             "): " + e.what());
        }
    }
    return c.acts.back();
}

void Network::backward(const ForwardCache& cache, const Tensor& grad_out, std::span<double> grads,
                       Tensor* input_grad) const {
    if (cache.version != version_ || cache.acts.size() != layers_.size() + 1)
        throw CacheError("network '" + name_ + "': forward cache is stale");
    if (grads.size() != n_params_) throw ShapeError("gradient buffer has the wrong length");
    if (grad_out.shape != cache.acts.back().shape) {
        throw ShapeError("network '" + name_ + "': loss gradient " + shape_string(grad_out.shape) +
                         " does not match output " + shape_string(cache.acts.back().shape));
    }
    // scratch[i] holds dL/d(acts[i]).
    auto& buf = cache.scratch;
    buf.resize(layers_.size() + 1);
    buf.back().shape = grad_out.shape;
    buf.back().data.assign(grad_out.data.begin(), grad_out.data.end());
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const bool need_gx = i > 0 || input_grad;
        double* gw = layers_[i]->param_count() ? grads.data() + offsets_[i] : nullptr;
        layers_[i]->backward(params_.data() + offsets_[i], cache.acts[i], cache.acts[i + 1], buf[i + 1],
                             need_gx ? &buf[i] : nullptr, gw);
    }
    if (input_grad) *input_grad = buf[0];
}

double mse_loss(const Tensor& y, const Tensor& target, Tensor* grad) {
    if (y.shape != target.shape) {
        throw ShapeError("loss: prediction " + shape_string(y.shape) + " vs target " + shape_string(target.shape));
    }
    const double n = static_cast<double>(y.size());
    double s = 0.0;
    if (grad) *grad = Tensor(y.shape);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y.data[i] - target.data[i];
        s += d * d;
        if (grad) grad->data[i] = 2.0 * d / n;
    }
    return s / n;
}

}  // namespace b0spec::nn
