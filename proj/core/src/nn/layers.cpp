#include "b0spec/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "b0spec/errors.hpp"

namespace b0spec::nn {

using nlohmann::json;

namespace {

constexpr std::pair<LayerKind, const char*> kKindNames[] = {
    {LayerKind::Conv2d, "conv2d"},       {LayerKind::Conv1d, "conv1d"}, {LayerKind::MaxPool1d, "maxpool1d"},
    {LayerKind::AvgPool2d, "avgpool2d"}, {LayerKind::Dense, "dense"},   {LayerKind::Relu, "relu"},
    {LayerKind::Flatten, "flatten"},     {LayerKind::Concat, "concat"},
};

[[noreturn]] void bad_shape(const LayerSpec& s, const Shape& in, const std::string& why) {
    throw ShapeError(to_string(s.kind) + " layer: input " + shape_string(in) + " " + why);
}

void glorot(std::span<double> w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : w) v = u(rng);
}

Shape with_batch(std::size_t n, const Shape& s) {
    Shape out{n};
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Same-padded stride-1 convolution over {C, H, W} as im2col + GEMM; the 1D
// layer is the H == 1, kh == 1 case.
class ConvLayer final : public Layer {
public:
    ConvLayer(LayerSpec s, bool two_d) : Layer(s), two_d_(two_d) {
        if (s.in_channels == 0 || s.out_channels == 0) throw ConfigError("conv layer needs nonzero channels");
        if (s.kernel != 3) throw ConfigError("conv kernels are 3 wide");
    }

    Shape infer(const Shape& in) const override {
        const std::size_t rank = two_d_ ? 3 : 2;
        if (in.size() != rank) bad_shape(spec(), in, "has the wrong rank");
        if (in[0] != spec().in_channels) bad_shape(spec(), in, "channel count differs from layer");
        Shape out = in;
        out[0] = spec().out_channels;
        return out;
    }

    std::size_t param_count() const override { return n_weights() + spec().out_channels; }

    void init(std::span<double> p, std::mt19937_64& rng) const override {
        const std::size_t taps = kh() * kw();
        glorot(p.first(n_weights()), spec().in_channels * taps, spec().out_channels * taps, rng);
        std::fill(p.begin() + static_cast<std::ptrdiff_t>(n_weights()), p.end(), 0.0);
    }

    void forward(const double* w, const Tensor& x, Tensor& y, const Tensor*) const override {
        const auto [H, W] = plane(x);
        const auto HW = static_cast<Eigen::Index>(H * W);
        const auto ci_n = static_cast<Eigen::Index>(spec().in_channels);
        const auto co_n = static_cast<Eigen::Index>(spec().out_channels);
        const auto K = ci_n * static_cast<Eigen::Index>(kh() * kw());
        y.resize(with_batch(x.batch(), out_sample(x)));
        Eigen::Map<const RowMat> Wm(w, co_n, K);
        Eigen::Map<const Eigen::VectorXd> bias(w + n_weights(), co_n);
        thread_local RowMat col;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            im2col(x.ptr() + n * static_cast<std::size_t>(ci_n * HW), H, W, col);
            Eigen::Map<RowMat> Y(y.ptr() + n * static_cast<std::size_t>(co_n * HW), co_n, HW);
            Y.noalias() = Wm * col;
            Y.colwise() += bias;
        }
    }

    void backward(const double* w, const Tensor& x, const Tensor&, const Tensor& gy, Tensor* gx,
                  double* gw) const override {
        const auto [H, W] = plane(x);
        const auto HW = static_cast<Eigen::Index>(H * W);
        const auto ci_n = static_cast<Eigen::Index>(spec().in_channels);
        const auto co_n = static_cast<Eigen::Index>(spec().out_channels);
        const auto K = ci_n * static_cast<Eigen::Index>(kh() * kw());
        if (gx) {
            gx->resize(x.shape);
            gx->fill(0.0);
        }
        Eigen::Map<const RowMat> Wm(w, co_n, K);
        Eigen::Map<RowMat> GW(gw, co_n, K);
        Eigen::Map<Eigen::VectorXd> GB(gw + n_weights(), co_n);
        thread_local RowMat col;
        thread_local RowMat gcol;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            im2col(x.ptr() + n * static_cast<std::size_t>(ci_n * HW), H, W, col);
            Eigen::Map<const RowMat> G(gy.ptr() + n * static_cast<std::size_t>(co_n * HW), co_n, HW);
            GW.noalias() += G * col.transpose();
            GB += G.rowwise().sum();
            if (gx) {
                gcol.noalias() = Wm.transpose() * G;
                col2im(gcol, H, W, gx->ptr() + n * static_cast<std::size_t>(ci_n * HW));
            }
        }
    }

private:
    std::size_t kh() const { return two_d_ ? spec().kernel : 1; }
    std::size_t kw() const { return spec().kernel; }
    std::size_t n_weights() const { return spec().out_channels * spec().in_channels * kh() * kw(); }

    std::pair<std::size_t, std::size_t> plane(const Tensor& x) const {
        if (two_d_) return {x.dim(2), x.dim(3)};
        return {1, x.dim(2)};
    }
    Shape out_sample(const Tensor& x) const {
        Shape s(x.shape.begin() + 1, x.shape.end());
        s[0] = spec().out_channels;
        return s;
    }

    // Calls f(row, ci, dy, dx, y0, y1, x0, x1) for each column-matrix row with
    // the output window whose shifted input index stays inside the plane.
    template <class F>
    void for_rows(std::size_t H, std::size_t W, F&& f) const {
        const long ph = static_cast<long>(kh() / 2), pw = static_cast<long>(kw() / 2);
        const long h = static_cast<long>(H), w = static_cast<long>(W);
        for (std::size_t ci = 0; ci < spec().in_channels; ++ci) {
            for (std::size_t ky = 0; ky < kh(); ++ky) {
                const long dy = static_cast<long>(ky) - ph;
                for (std::size_t kx = 0; kx < kw(); ++kx) {
                    const long dx = static_cast<long>(kx) - pw;
                    const std::size_t row = (ci * kh() + ky) * kw() + kx;
                    f(row, ci, dy, dx, static_cast<std::size_t>(std::max(0L, -dy)),
                      static_cast<std::size_t>(std::max(0L, std::min(h, h - dy))),
                      static_cast<std::size_t>(std::max(0L, -dx)),
                      static_cast<std::size_t>(std::max(0L, std::min(w, w - dx))));
                }
            }
        }
    }

    void im2col(const double* in, std::size_t H, std::size_t W, RowMat& col) const {
        const std::size_t HW = H * W;
        col.resize(static_cast<Eigen::Index>(spec().in_channels * kh() * kw()), static_cast<Eigen::Index>(HW));
        for_rows(H, W, [&](std::size_t row, std::size_t ci, long dy, long dx, std::size_t y0, std::size_t y1,
                           std::size_t x0, std::size_t x1) {
            double* dst = col.data() + row * HW;
            const double* src = in + ci * HW;
            std::fill(dst, dst + y0 * W, 0.0);
            for (std::size_t r = y0; r < y1; ++r) {
                const double* s = src + static_cast<long>(r * W) + dy * static_cast<long>(W) + dx;
                double* d = dst + r * W;
                std::fill(d, d + x0, 0.0);
                std::copy(s + x0, s + x1, d + x0);
                std::fill(d + x1, d + W, 0.0);
            }
            std::fill(dst + y1 * W, dst + HW, 0.0);
        });
    }

    void col2im(const RowMat& col, std::size_t H, std::size_t W, double* gin) const {
        const std::size_t HW = H * W;
        for_rows(H, W, [&](std::size_t row, std::size_t ci, long dy, long dx, std::size_t y0, std::size_t y1,
                           std::size_t x0, std::size_t x1) {
            const double* src = col.data() + row * HW;
            double* dst = gin + ci * HW;
            for (std::size_t r = y0; r < y1; ++r) {
                double* d = dst + static_cast<long>(r * W) + dy * static_cast<long>(W) + dx;
                for (std::size_t c = x0; c < x1; ++c) d[c] += src[r * W + c];
            }
        });
    }

    bool two_d_;
};

class AvgPool2dLayer final : public Layer {
public:
    explicit AvgPool2dLayer(LayerSpec s) : Layer(s) {
        if (s.pool_h == 0 || s.pool_w == 0) throw ConfigError("avgpool2d needs a nonzero window");
    }

    Shape infer(const Shape& in) const override {
        if (in.size() != 3) bad_shape(spec(), in, "has the wrong rank");
        if (in[1] < spec().pool_h || in[2] < spec().pool_w) bad_shape(spec(), in, "is smaller than the window");
        return {in[0], in[1] / spec().pool_h, in[2] / spec().pool_w};
    }

    void forward(const double*, const Tensor& x, Tensor& y, const Tensor*) const override {
        const std::size_t N = x.batch(), C = x.dim(1), H = x.dim(2), W = x.dim(3);
        const std::size_t ph = spec().pool_h, pw = spec().pool_w, OH = H / ph, OW = W / pw;
        y.resize({N, C, OH, OW});
        y.fill(0.0);
        const double inv = 1.0 / static_cast<double>(ph * pw);
        for (std::size_t nc = 0; nc < N * C; ++nc) {
            const double* in = x.ptr() + nc * H * W;
            double* out = y.ptr() + nc * OH * OW;
            for (std::size_t r = 0; r < OH * ph; ++r) {
                double* orow = out + (r / ph) * OW;
                const double* irow = in + r * W;
                for (std::size_t o = 0; o < OW; ++o) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < pw; ++k) acc += irow[o * pw + k];
                    orow[o] += acc;
                }
            }
            for (std::size_t i = 0; i < OH * OW; ++i) out[i] *= inv;
        }
    }

    void backward(const double*, const Tensor& x, const Tensor&, const Tensor& gy, Tensor* gx,
                  double*) const override {
        if (!gx) return;
        const std::size_t N = x.batch(), C = x.dim(1), H = x.dim(2), W = x.dim(3);
        const std::size_t ph = spec().pool_h, pw = spec().pool_w, OH = H / ph, OW = W / pw;
        gx->resize(x.shape);
        gx->fill(0.0);
        const double inv = 1.0 / static_cast<double>(ph * pw);
        for (std::size_t nc = 0; nc < N * C; ++nc) {
            const double* g = gy.ptr() + nc * OH * OW;
            double* gin = gx->ptr() + nc * H * W;
            for (std::size_t r = 0; r < OH * ph; ++r) {
                const double* grow = g + (r / ph) * OW;
                double* girow = gin + r * W;
                for (std::size_t o = 0; o < OW; ++o) {
                    const double v = grow[o] * inv;
                    for (std::size_t k = 0; k < pw; ++k) girow[o * pw + k] = v;
                }
            }
        }
    }
};

class MaxPool1dLayer final : public Layer {
public:
    explicit MaxPool1dLayer(LayerSpec s) : Layer(s) {
        if (s.pool_w == 0) throw ConfigError("maxpool1d needs a nonzero window");
    }

    Shape infer(const Shape& in) const override {
        if (in.size() != 2) bad_shape(spec(), in, "has the wrong rank");
        if (in[1] < spec().pool_w) bad_shape(spec(), in, "is shorter than the window");
        return {in[0], in[1] / spec().pool_w};
    }

    void forward(const double*, const Tensor& x, Tensor& y, const Tensor*) const override {
        const std::size_t N = x.batch(), C = x.dim(1), L = x.dim(2), k = spec().pool_w, OL = L / k;
        y.resize({N, C, OL});
        for (std::size_t nc = 0; nc < N * C; ++nc) {
            const double* in = x.ptr() + nc * L;
            double* out = y.ptr() + nc * OL;
            for (std::size_t o = 0; o < OL; ++o) out[o] = *std::max_element(in + o * k, in + (o + 1) * k);
        }
    }

    void backward(const double*, const Tensor& x, const Tensor&, const Tensor& gy, Tensor* gx,
                  double*) const override {
        if (!gx) return;
        const std::size_t N = x.batch(), C = x.dim(1), L = x.dim(2), k = spec().pool_w, OL = L / k;
        gx->resize(x.shape);
        gx->fill(0.0);
        for (std::size_t nc = 0; nc < N * C; ++nc) {
            const double* in = x.ptr() + nc * L;
            const double* g = gy.ptr() + nc * OL;
            double* gin = gx->ptr() + nc * L;
            for (std::size_t o = 0; o < OL; ++o) {
                const double* best = std::max_element(in + o * k, in + (o + 1) * k);
                gin[best - in] += g[o];
            }
        }
    }
};

class DenseLayer final : public Layer {
public:
    explicit DenseLayer(LayerSpec s) : Layer(s) {
        if (s.in_features == 0 || s.out_features == 0) throw ConfigError("dense layer needs nonzero sizes");
    }

    Shape infer(const Shape& in) const override {
        if (in.size() != 1 || in[0] != spec().in_features) bad_shape(spec(), in, "does not match in_features");
        return {spec().out_features};
    }

    std::size_t param_count() const override { return spec().out_features * (spec().in_features + 1); }

    void init(std::span<double> p, std::mt19937_64& rng) const override {
        const std::size_t nw = spec().out_features * spec().in_features;
        glorot(p.first(nw), spec().in_features, spec().out_features, rng);
        std::fill(p.begin() + static_cast<std::ptrdiff_t>(nw), p.end(), 0.0);
    }

    void forward(const double* w, const Tensor& x, Tensor& y, const Tensor*) const override {
        const std::size_t N = x.batch(), I = spec().in_features, O = spec().out_features;
        y.resize({N, O});
        Eigen::Map<const RowMat> X(x.ptr(), N, I);
        Eigen::Map<const RowMat> Wm(w, O, I);
        Eigen::Map<const Eigen::RowVectorXd> b(w + O * I, O);
        Eigen::Map<RowMat> Y(y.ptr(), N, O);
        Y.noalias() = X * Wm.transpose();
        Y.rowwise() += b;
    }

    void backward(const double* w, const Tensor& x, const Tensor&, const Tensor& gy, Tensor* gx,
                  double* gw) const override {
        const std::size_t N = x.batch(), I = spec().in_features, O = spec().out_features;
        Eigen::Map<const RowMat> X(x.ptr(), N, I);
        Eigen::Map<const RowMat> G(gy.ptr(), N, O);
        Eigen::Map<RowMat> GW(gw, O, I);
        Eigen::Map<Eigen::RowVectorXd> GB(gw + O * I, O);
        GW.noalias() += G.transpose() * X;
        GB += G.colwise().sum();
        if (gx) {
            gx->resize(x.shape);
            Eigen::Map<const RowMat> Wm(w, O, I);
            Eigen::Map<RowMat> GX(gx->ptr(), N, I);
            GX.noalias() = G * Wm;
        }
    }

};

class ReluLayer final : public Layer {
public:
    using Layer::Layer;
    Shape infer(const Shape& in) const override { return in; }

    void forward(const double*, const Tensor& x, Tensor& y, const Tensor*) const override {
        y.resize(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    }

    void backward(const double*, const Tensor&, const Tensor& y, const Tensor& gy, Tensor* gx,
                  double*) const override {
        if (!gx) return;
        gx->resize(y.shape);
        for (std::size_t i = 0; i < y.size(); ++i) gx->data[i] = y.data[i] > 0.0 ? gy.data[i] : 0.0;
    }
};

class FlattenLayer final : public Layer {
public:
    using Layer::Layer;
    Shape infer(const Shape& in) const override { return {shape_size(in)}; }

    void forward(const double*, const Tensor& x, Tensor& y, const Tensor*) const override {
        y.shape = {x.batch(), x.sample_size()};
        y.data.assign(x.data.begin(), x.data.end());
    }

    void backward(const double*, const Tensor& x, const Tensor&, const Tensor& gy, Tensor* gx,
                  double*) const override {
        if (!gx) return;
        gx->shape = x.shape;
        gx->data.assign(gy.data.begin(), gy.data.end());
    }
};

class ConcatLayer final : public Layer {
public:
    explicit ConcatLayer(LayerSpec s) : Layer(s) {
        if (s.side_features == 0) throw ConfigError("concat layer needs a nonzero side width");
    }

    Shape infer(const Shape& in) const override {
        if (in.size() != 1) bad_shape(spec(), in, "is not flat");
        return {in[0] + spec().side_features};
    }

    void forward(const double*, const Tensor& x, Tensor& y, const Tensor* side) const override {
        const std::size_t N = x.batch(), A = x.dim(1), B = spec().side_features;
        if (!side || side->shape != Shape{N, B}) {
            throw ShapeError("concat layer: side input must have shape " + shape_string({N, B}) + ", got " +
                             (side ? shape_string(side->shape) : std::string("none")));
        }
        y.resize({N, A + B});
        for (std::size_t n = 0; n < N; ++n) {
            std::memcpy(y.ptr() + n * (A + B), x.ptr() + n * A, A * sizeof(double));
            std::memcpy(y.ptr() + n * (A + B) + A, side->ptr() + n * B, B * sizeof(double));
        }
    }

    void backward(const double*, const Tensor& x, const Tensor&, const Tensor& gy, Tensor* gx,
                  double*) const override {
        if (!gx) return;
        const std::size_t N = x.batch(), A = x.dim(1), B = spec().side_features;
        gx->resize(x.shape);
        for (std::size_t n = 0; n < N; ++n)
            std::memcpy(gx->ptr() + n * A, gy.ptr() + n * (A + B), A * sizeof(double));
    }
};

}  // namespace

std::string to_string(LayerKind k) {
    for (const auto& [kind, name] : kKindNames)
        if (kind == k) return name;
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s) {
    for (const auto& [kind, name] : kKindNames)
        if (s == name) return kind;
    throw ConfigError("unknown layer kind '" + s + "'");
}

LayerSpec LayerSpec::conv2d(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in;
    s.out_channels = out;
    return s;
}

LayerSpec LayerSpec::conv1d(std::size_t in, std::size_t out) {
    LayerSpec s = conv2d(in, out);
    s.kind = LayerKind::Conv1d;
    return s;
}

LayerSpec LayerSpec::avgpool2d(std::size_t h, std::size_t w) {
    LayerSpec s;
    s.kind = LayerKind::AvgPool2d;
    s.pool_h = h;
    s.pool_w = w;
    return s;
}

LayerSpec LayerSpec::maxpool1d(std::size_t window) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool1d;
    s.pool_w = window;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in;
    s.out_features = out;
    return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
}

LayerSpec LayerSpec::concat(std::size_t side) {
    LayerSpec s;
    s.kind = LayerKind::Concat;
    s.side_features = side;
    return s;
}

json LayerSpec::to_json() const {
    json j{{"kind", to_string(kind)}};
    switch (kind) {
        case LayerKind::Conv2d:
        case LayerKind::Conv1d:
            j["in_channels"] = in_channels;
            j["out_channels"] = out_channels;
            j["kernel"] = kernel;
            j["stride"] = 1;
            j["padding"] = "same";
            break;
        case LayerKind::AvgPool2d:
            j["window"] = {pool_h, pool_w};
            j["stride"] = {pool_h, pool_w};
            break;
        case LayerKind::MaxPool1d:
            j["window"] = pool_w;
            j["stride"] = pool_w;
            break;
        case LayerKind::Dense:
            j["in_features"] = in_features;
            j["out_features"] = out_features;
            break;
        case LayerKind::Concat:
            j["side_features"] = side_features;
            break;
        case LayerKind::Relu:
        case LayerKind::Flatten:
            break;
    }
    return j;
}

LayerSpec LayerSpec::from_json(const json& j) {
    try {
        LayerSpec s;
        s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
        switch (s.kind) {
            case LayerKind::Conv2d:
            case LayerKind::Conv1d:
                s.in_channels = j.at("in_channels").get<std::size_t>();
                s.out_channels = j.at("out_channels").get<std::size_t>();
                s.kernel = j.value("kernel", std::size_t{3});
                if (j.value("stride", 1) != 1) throw ConfigError("conv stride must be 1");
                if (j.value("padding", std::string("same")) != "same") throw ConfigError("conv padding must be same");
                break;
            case LayerKind::AvgPool2d: {
                const auto& w = j.at("window");
                s.pool_h = w.at(0).get<std::size_t>();
                s.pool_w = w.at(1).get<std::size_t>();
                break;
            }
            case LayerKind::MaxPool1d:
                s.pool_w = j.at("window").get<std::size_t>();
                break;
            case LayerKind::Dense:
                s.in_features = j.at("in_features").get<std::size_t>();
                s.out_features = j.at("out_features").get<std::size_t>();
                break;
            case LayerKind::Concat:
                s.side_features = j.at("side_features").get<std::size_t>();
                break;
            case LayerKind::Relu:
            case LayerKind::Flatten:
                break;
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed layer spec: ") + e.what());
    }
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
    switch (spec.kind) {
        case LayerKind::Conv2d: return std::make_unique<ConvLayer>(spec, true);
        case LayerKind::Conv1d: return std::make_unique<ConvLayer>(spec, false);
        case LayerKind::AvgPool2d: return std::make_unique<AvgPool2dLayer>(spec);
        case LayerKind::MaxPool1d: return std::make_unique<MaxPool1dLayer>(spec);
        case LayerKind::Dense: return std::make_unique<DenseLayer>(spec);
        case LayerKind::Relu: return std::make_unique<ReluLayer>(spec);
        case LayerKind::Flatten: return std::make_unique<FlattenLayer>(spec);
        case LayerKind::Concat: return std::make_unique<ConcatLayer>(spec);
    }
    throw ConfigError("unknown layer kind");
}

}  // namespace b0spec::nn
