#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nilm/error.hpp"
#include "nilm/rng.hpp"
#include "nilm/tensor.hpp"

namespace nilm {

enum class LayerKind { conv1d, dense, flatten, reshape, zeropad1d };
enum class LayerActivation { linear, relu };
enum class ConvPadding { valid, same };

/// One layer of the stack. Only the fields for the layer's kind are meaningful.
struct LayerSpec {
    LayerKind kind;
    LayerActivation activation = LayerActivation::linear;
    // conv1d
    std::size_t kernel = 0;
    std::size_t in_channels = 0;
    std::size_t filters = 0;
    ConvPadding padding = ConvPadding::valid;
    // dense
    std::size_t in_features = 0;
    std::size_t units = 0;
    // reshape
    std::size_t out_len = 0;
    std::size_t out_channels = 0;
    // zeropad1d
    std::size_t pad_left = 0;
    std::size_t pad_right = 0;

    bool has_params() const { return kind == LayerKind::conv1d || kind == LayerKind::dense; }

    std::size_t param_count() const {
        switch (kind) {
            case LayerKind::conv1d: return kernel * in_channels * filters + filters;
            case LayerKind::dense: return in_features * units + units;
            default: return 0;
        }
    }
};

enum class ArchKind { autoencoder, rectangles, hf_autoencoder, hf_rectangles, big_autoencoder };

inline std::string arch_kind_name(ArchKind k) {
    switch (k) {
        case ArchKind::autoencoder: return "autoencoder";
        case ArchKind::rectangles: return "rectangles";
        case ArchKind::hf_autoencoder: return "hf_autoencoder";
        case ArchKind::hf_rectangles: return "hf_rectangles";
        case ArchKind::big_autoencoder: return "big_autoencoder";
    }
    throw Error("bad ArchKind");
}

inline ArchKind arch_kind_from_name(const std::string& name) {
    for (ArchKind k : {ArchKind::autoencoder, ArchKind::rectangles, ArchKind::hf_autoencoder,
                       ArchKind::hf_rectangles, ArchKind::big_autoencoder})
        if (arch_kind_name(k) == name) return k;
    throw ValidationError("unknown architecture kind: " + name);
}

inline bool is_rectangles_family(ArchKind k) {
    return k == ArchKind::rectangles || k == ArchKind::hf_rectangles;
}

/// Per-sample shape flowing through the stack: either (len, channels) or flat units.
struct FlowShape {
    bool flat = false;
    std::size_t len = 0;
    std::size_t ch = 0;

    std::size_t units() const { return flat ? len : len * ch; }

    std::string to_string() const {
        if (flat) return "(None, " + std::to_string(len) + ")";
        return "(None, " + std::to_string(len) + ", " + std::to_string(ch) + ")";
    }
};

struct NetworkSpec {
    ArchKind kind = ArchKind::autoencoder;
    std::size_t window = 0;
    std::size_t channels = 0;
    std::vector<LayerSpec> layers;

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.param_count();
        return n;
    }

    std::size_t output_units() const { return shape_chain().back().units(); }

    /// Output shape after each layer; throws if the stack is inconsistent.
    std::vector<FlowShape> shape_chain() const {
        FlowShape s{false, window, channels};
        std::vector<FlowShape> chain;
        for (const auto& l : layers) {
            switch (l.kind) {
                case LayerKind::conv1d: {
                    if (s.flat) throw Error("conv1d on flat input");
                    if (s.ch != l.in_channels) throw Error("conv1d channel mismatch");
                    if (l.padding == ConvPadding::valid) {
                        if (s.len < l.kernel) throw Error("conv1d input shorter than kernel");
                        s.len = s.len - l.kernel + 1;
                    }
                    s.ch = l.filters;
                    break;
                }
                case LayerKind::dense: {
                    if (s.units() != l.in_features) throw Error("dense input size mismatch");
                    s = FlowShape{true, l.units, 0};
                    break;
                }
                case LayerKind::flatten: {
                    s = FlowShape{true, s.units(), 0};
                    break;
                }
                case LayerKind::reshape: {
                    if (s.units() != l.out_len * l.out_channels) throw Error("reshape size mismatch");
                    s = FlowShape{false, l.out_len, l.out_channels};
                    break;
                }
                case LayerKind::zeropad1d: {
                    if (s.flat) throw Error("zeropad1d on flat input");
                    s.len += l.pad_left + l.pad_right;
                    break;
                }
            }
            chain.push_back(s);
        }
        return chain;
    }
};

/// Layer widths for the standard architectures. Defaults reproduce the
/// published parameter counts; tests shrink them to keep exhaustive
/// finite-difference checks tractable.
struct ArchWidths {
    std::size_t ae_conv_filters = 8;
    std::size_t ae_code = 128;
    std::size_t rect_conv_filters = 16;
    std::array<std::size_t, 4> rect_dense = {4096, 3072, 2048, 512};
    std::size_t big_conv_filters = 8;
    std::size_t big_code_divisor = 10;
};

namespace detail {

inline LayerSpec conv_layer(std::size_t kernel, std::size_t in_ch, std::size_t filters,
                            ConvPadding pad, LayerActivation act) {
    LayerSpec l;
    l.kind = LayerKind::conv1d;
    l.kernel = kernel;
    l.in_channels = in_ch;
    l.filters = filters;
    l.padding = pad;
    l.activation = act;
    return l;
}

inline LayerSpec dense_layer(std::size_t in, std::size_t units, LayerActivation act) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.in_features = in;
    l.units = units;
    l.activation = act;
    return l;
}

inline LayerSpec flatten_layer() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
}

inline LayerSpec reshape_layer(std::size_t len, std::size_t ch) {
    LayerSpec l;
    l.kind = LayerKind::reshape;
    l.out_len = len;
    l.out_channels = ch;
    return l;
}

inline LayerSpec zeropad_layer(std::size_t left, std::size_t right) {
    LayerSpec l;
    l.kind = LayerKind::zeropad1d;
    l.pad_left = left;
    l.pad_right = right;
    return l;
}

}  // namespace detail

/// Builds one of the five architectures for window length W and C input channels.
/// Hidden conv/dense layers use ReLU; output layers are linear. The zero padding
/// from W-3 back to W pads 1 left / 2 right, as does the even-kernel 'same' conv.
inline NetworkSpec build_architecture(ArchKind kind, std::size_t w, std::size_t c,
                                      const ArchWidths& widths = {}) {
    if (w < 8) throw ValidationError("window length must be at least 8");
    if (c != 1 && c != 3) throw ValidationError("input channels must be 1 or 3");
    bool hf = kind == ArchKind::hf_autoencoder || kind == ArchKind::hf_rectangles;
    if (hf && c != 3) throw ValidationError("high-frequency architectures take 3 input channels");
    if (!hf && c != 1) throw ValidationError(arch_kind_name(kind) + " takes 1 input channel");

    using namespace detail;
    NetworkSpec spec;
    spec.kind = kind;
    spec.window = w;
    spec.channels = c;
    const auto relu = LayerActivation::relu;
    const auto linear = LayerActivation::linear;

    switch (kind) {
        case ArchKind::autoencoder:
        case ArchKind::hf_autoencoder: {
            std::size_t f = widths.ae_conv_filters;
            std::size_t wide = (w - 3) * f;
            spec.layers = {
                conv_layer(4, c, f, ConvPadding::valid, relu),
                flatten_layer(),
                dense_layer(wide, wide, relu),
                dense_layer(wide, widths.ae_code, relu),
                dense_layer(widths.ae_code, wide, relu),
                reshape_layer(w - 3, f),
                zeropad_layer(1, 2),
                conv_layer(4, f, 1, ConvPadding::same, linear),
            };
            break;
        }
        case ArchKind::rectangles:
        case ArchKind::hf_rectangles: {
            std::size_t f = widths.rect_conv_filters;
            auto d = widths.rect_dense;
            spec.layers = {
                conv_layer(4, c, f, ConvPadding::valid, relu),
                conv_layer(4, f, f, ConvPadding::valid, relu),
                flatten_layer(),
                dense_layer((w - 6) * f, d[0], relu),
                dense_layer(d[0], d[1], relu),
                dense_layer(d[1], d[2], relu),
                dense_layer(d[2], d[3], relu),
                dense_layer(d[3], 3, linear),
            };
            break;
        }
        case ArchKind::big_autoencoder: {
            std::size_t f = widths.big_conv_filters;
            std::size_t wide = (w - 3) * f;
            std::size_t mid = (w - 3) * 2;
            std::size_t code = static_cast<std::size_t>(
                std::lround(static_cast<double>(w) / static_cast<double>(widths.big_code_divisor)));
            if (code == 0) code = 1;
            spec.layers = {
                conv_layer(4, c, f, ConvPadding::valid, relu),
                conv_layer(4, f, f, ConvPadding::valid, relu),
                flatten_layer(),
                dense_layer((w - 6) * f, wide, relu),
                dense_layer(wide, mid, relu),
                dense_layer(mid, code, relu),
                dense_layer(code, mid, relu),
                dense_layer(mid, wide, relu),
                reshape_layer(w - 3, f),
                zeropad_layer(1, 2),
                conv_layer(4, f, 1, ConvPadding::same, linear),
            };
            break;
        }
    }
    spec.shape_chain();  // validate
    return spec;
}

// ---------------------------------------------------------------------------
// Runtime network: parameters + forward/backward
// ---------------------------------------------------------------------------

namespace detail {

// c (m x n) += a (m x k) * b (k x n)
template <typename T>
void gemm_accum(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            T av = arow[l];
            if (av == T{0}) continue;
            const T* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c (k x n) += a^T (m x k) * b (m x n)
template <typename T>
void gemm_at_b(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        const T* brow = b + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            T av = arow[l];
            if (av == T{0}) continue;
            T* crow = c + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c (m x k) += a (m x n) * b^T (k x n)
template <typename T>
void gemm_a_bt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        T* crow = c + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const T* brow = b + l * n;
            T acc{0};
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[l] += acc;
        }
    }
}

}  // namespace detail

template <typename T>
struct ForwardCache {
    std::vector<T> input;                 // (B, W, C)
    std::vector<std::vector<T>> outputs;  // post-activation output of each layer
    std::size_t batch = 0;
};

/// Weights of one architecture. Parameter tensors are ordered layer by layer,
/// weight before bias, which is also the serialization order.
template <typename T>
class Network {
public:
    NetworkSpec spec;
    std::vector<Tensor<T>> params;

    Network() = default;
    explicit Network(NetworkSpec s) : spec(std::move(s)) { allocate(); }

    /// Glorot-uniform weights, zero biases, seeded per tensor.
    static Network initialized(NetworkSpec s, std::uint64_t seed) {
        Network net(std::move(s));
        std::size_t p = 0;
        for (const auto& layer : net.spec.layers) {
            if (!layer.has_params()) continue;
            std::size_t fan_in, fan_out;
            if (layer.kind == LayerKind::conv1d) {
                fan_in = layer.kernel * layer.in_channels;
                fan_out = layer.kernel * layer.filters;
            } else {
                fan_in = layer.in_features;
                fan_out = layer.units;
            }
            double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Rng rng(derive_seed(seed, p));
            for (T& v : net.params[p].data) v = static_cast<T>(rng.uniform(-limit, limit));
            p += 2;  // bias stays zero
        }
        return net;
    }

    std::size_t param_count() const { return spec.param_count(); }

    std::vector<Tensor<T>> zero_like_params() const {
        std::vector<Tensor<T>> g;
        g.reserve(params.size());
        for (const auto& p : params) g.emplace_back(p.shape);
        return g;
    }

    /// Forward over a batch. Input is (batch, W, C) row-major; the result is the
    /// final layer's output, (batch, W) for the autoencoder family or (batch, 3)
    /// for rectangles. Deterministic: identical weights and input give
    /// bit-identical output.
    std::vector<T> forward(const std::vector<T>& input, std::size_t batch,
                           ForwardCache<T>* cache = nullptr) const {
        if (input.size() != batch * spec.window * spec.channels)
            throw ValidationError("forward: input size does not match (batch, W, C)");
        if (cache) {
            cache->input = input;
            cache->outputs.assign(spec.layers.size(), {});
            cache->batch = batch;
        }
        std::vector<T> cur = input;
        FlowShape shape{false, spec.window, spec.channels};
        std::size_t p = 0;
        for (std::size_t li = 0; li < spec.layers.size(); ++li) {
            const LayerSpec& layer = spec.layers[li];
            switch (layer.kind) {
                case LayerKind::conv1d:
                    cur = conv_forward(layer, params[p], params[p + 1], cur, batch, shape);
                    p += 2;
                    break;
                case LayerKind::dense:
                    cur = dense_forward(layer, params[p], params[p + 1], cur, batch);
                    p += 2;
                    break;
                case LayerKind::flatten:
                case LayerKind::reshape:
                    break;  // row-major: identity on data
                case LayerKind::zeropad1d:
                    cur = pad_forward(layer, cur, batch, shape);
                    break;
            }
            advance_shape(layer, shape);
            if (cache) cache->outputs[li] = cur;
        }
        return cur;
    }

    /// Mean-squared-error loss with 64-bit accumulation.
    static double mse_loss(const std::vector<T>& output, const std::vector<T>& target) {
        if (output.size() != target.size()) throw ValidationError("mse_loss: size mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < output.size(); ++i) {
            double d = static_cast<double>(output[i]) - static_cast<double>(target[i]);
            acc += d * d;
        }
        return acc / static_cast<double>(output.size());
    }

    /// Gradients of the MSE loss w.r.t. every parameter tensor.
    std::vector<Tensor<T>> backward(const ForwardCache<T>& cache, const std::vector<T>& target) const {
        const std::vector<T>& output = cache.outputs.back();
        if (output.size() != target.size()) throw ValidationError("backward: target size mismatch");
        std::vector<T> delta(output.size());
        T scale = static_cast<T>(2.0 / static_cast<double>(output.size()));
        for (std::size_t i = 0; i < output.size(); ++i) delta[i] = scale * (output[i] - target[i]);
        return backward_from(cache, std::move(delta));
    }

    /// Backpropagates an arbitrary dLoss/dOutput through the stack.
    std::vector<Tensor<T>> backward_from(const ForwardCache<T>& cache, std::vector<T> delta) const {
        std::vector<Tensor<T>> grads = zero_like_params();
        auto chain = spec.shape_chain();
        const std::size_t batch = cache.batch;

        int p = static_cast<int>(params.size());
        for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
            const LayerSpec& layer = spec.layers[static_cast<std::size_t>(li)];
            FlowShape in_shape = li > 0 ? chain[static_cast<std::size_t>(li - 1)]
                                        : FlowShape{false, spec.window, spec.channels};
            const std::vector<T>& layer_in =
                li > 0 ? cache.outputs[static_cast<std::size_t>(li - 1)] : cache.input;
            const std::vector<T>& layer_out = cache.outputs[static_cast<std::size_t>(li)];

            if (layer.activation == LayerActivation::relu && layer.has_params()) {
                for (std::size_t i = 0; i < delta.size(); ++i)
                    if (layer_out[i] <= T{0}) delta[i] = T{0};
            }

            switch (layer.kind) {
                case LayerKind::conv1d:
                    p -= 2;
                    delta = conv_backward(layer, params[static_cast<std::size_t>(p)],
                                          grads[static_cast<std::size_t>(p)],
                                          grads[static_cast<std::size_t>(p + 1)], layer_in, delta, batch,
                                          in_shape);
                    break;
                case LayerKind::dense:
                    p -= 2;
                    delta = dense_backward(layer, params[static_cast<std::size_t>(p)],
                                           grads[static_cast<std::size_t>(p)],
                                           grads[static_cast<std::size_t>(p + 1)], layer_in, delta, batch);
                    break;
                case LayerKind::flatten:
                case LayerKind::reshape:
                    break;
                case LayerKind::zeropad1d:
                    delta = pad_backward(layer, delta, batch, in_shape);
                    break;
            }
        }
        return grads;
    }

private:
    void allocate() {
        spec.shape_chain();  // validate before allocating
        for (const auto& layer : spec.layers) {
            if (!layer.has_params()) continue;
            if (layer.kind == LayerKind::conv1d) {
                params.emplace_back(std::vector<std::size_t>{layer.kernel, layer.in_channels, layer.filters});
                params.emplace_back(std::vector<std::size_t>{layer.filters});
            } else {
                params.emplace_back(std::vector<std::size_t>{layer.in_features, layer.units});
                params.emplace_back(std::vector<std::size_t>{layer.units});
            }
        }
    }

    static void advance_shape(const LayerSpec& layer, FlowShape& s) {
        switch (layer.kind) {
            case LayerKind::conv1d:
                if (layer.padding == ConvPadding::valid) s.len = s.len - layer.kernel + 1;
                s.ch = layer.filters;
                break;
            case LayerKind::dense: s = FlowShape{true, layer.units, 0}; break;
            case LayerKind::flatten: s = FlowShape{true, s.units(), 0}; break;
            case LayerKind::reshape: s = FlowShape{false, layer.out_len, layer.out_channels}; break;
            case LayerKind::zeropad1d: s.len += layer.pad_left + layer.pad_right; break;
        }
    }

    // Even kernels pad one less on the left, like Keras 'same'.
    static std::pair<std::size_t, std::size_t> same_padding(std::size_t kernel) {
        return {(kernel - 1) / 2, kernel - 1 - (kernel - 1) / 2};
    }

    static std::vector<T> pad_input(const std::vector<T>& in, std::size_t batch, std::size_t len,
                                    std::size_t ch, std::size_t pl, std::size_t pr) {
        std::size_t plen = len + pl + pr;
        std::vector<T> out(batch * plen * ch, T{0});
        for (std::size_t b = 0; b < batch; ++b)
            std::copy(in.begin() + static_cast<std::ptrdiff_t>(b * len * ch),
                      in.begin() + static_cast<std::ptrdiff_t>((b + 1) * len * ch),
                      out.begin() + static_cast<std::ptrdiff_t>((b * plen + pl) * ch));
        return out;
    }

    std::vector<T> conv_forward(const LayerSpec& layer, const Tensor<T>& w, const Tensor<T>& bias,
                                const std::vector<T>& in, std::size_t batch, const FlowShape& s) const {
        std::size_t len = s.len, ch = s.ch;
        const std::vector<T>* src = &in;
        std::vector<T> padded;
        if (layer.padding == ConvPadding::same) {
            auto [pl, pr] = same_padding(layer.kernel);
            padded = pad_input(in, batch, len, ch, pl, pr);
            src = &padded;
            len += pl + pr;
        }
        std::size_t out_len = len - layer.kernel + 1;
        std::size_t f = layer.filters;
        std::vector<T> out(batch * out_len * f);
        for (std::size_t b = 0; b < batch; ++b) {
            const T* ib = src->data() + b * len * ch;
            T* ob = out.data() + b * out_len * f;
            for (std::size_t t = 0; t < out_len; ++t) {
                T* orow = ob + t * f;
                for (std::size_t j = 0; j < f; ++j) orow[j] = bias.data[j];
                for (std::size_t dt = 0; dt < layer.kernel; ++dt) {
                    const T* irow = ib + (t + dt) * ch;
                    const T* wrow = w.data.data() + dt * ch * f;
                    for (std::size_t c = 0; c < ch; ++c) {
                        T av = irow[c];
                        if (av == T{0}) continue;
                        const T* wc = wrow + c * f;
                        for (std::size_t j = 0; j < f; ++j) orow[j] += av * wc[j];
                    }
                }
            }
        }
        if (layer.activation == LayerActivation::relu)
            for (T& v : out) v = v > T{0} ? v : T{0};
        return out;
    }

    std::vector<T> dense_forward(const LayerSpec& layer, const Tensor<T>& w, const Tensor<T>& bias,
                                 const std::vector<T>& in, std::size_t batch) const {
        std::size_t k = layer.in_features, n = layer.units;
        std::vector<T> out(batch * n);
        for (std::size_t b = 0; b < batch; ++b)
            std::copy(bias.data.begin(), bias.data.end(), out.begin() + static_cast<std::ptrdiff_t>(b * n));
        detail::gemm_accum(in.data(), w.data.data(), out.data(), batch, k, n);
        if (layer.activation == LayerActivation::relu)
            for (T& v : out) v = v > T{0} ? v : T{0};
        return out;
    }

    static std::vector<T> pad_forward(const LayerSpec& layer, const std::vector<T>& in, std::size_t batch,
                                      const FlowShape& s) {
        return pad_input(in, batch, s.len, s.ch, layer.pad_left, layer.pad_right);
    }

    static std::vector<T> pad_backward(const LayerSpec& layer, const std::vector<T>& delta,
                                       std::size_t batch, const FlowShape& in_shape) {
        std::size_t len = in_shape.len, ch = in_shape.ch;
        std::size_t plen = len + layer.pad_left + layer.pad_right;
        std::vector<T> out(batch * len * ch);
        for (std::size_t b = 0; b < batch; ++b)
            std::copy(delta.begin() + static_cast<std::ptrdiff_t>((b * plen + layer.pad_left) * ch),
                      delta.begin() + static_cast<std::ptrdiff_t>((b * plen + layer.pad_left + len) * ch),
                      out.begin() + static_cast<std::ptrdiff_t>(b * len * ch));
        return out;
    }

    std::vector<T> dense_backward(const LayerSpec& layer, const Tensor<T>& w, Tensor<T>& dw, Tensor<T>& db,
                                  const std::vector<T>& in, const std::vector<T>& delta,
                                  std::size_t batch) const {
        std::size_t k = layer.in_features, n = layer.units;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* drow = delta.data() + b * n;
            for (std::size_t j = 0; j < n; ++j) db.data[j] += drow[j];
        }
        detail::gemm_at_b(in.data(), delta.data(), dw.data.data(), batch, k, n);
        std::vector<T> dx(batch * k, T{0});
        detail::gemm_a_bt(delta.data(), w.data.data(), dx.data(), batch, n, k);
        return dx;
    }

    std::vector<T> conv_backward(const LayerSpec& layer, const Tensor<T>& w, Tensor<T>& dw, Tensor<T>& db,
                                 const std::vector<T>& in, const std::vector<T>& delta, std::size_t batch,
                                 const FlowShape& in_shape) const {
        std::size_t len = in_shape.len, ch = in_shape.ch, f = layer.filters;
        std::size_t pl = 0, pr = 0;
        const std::vector<T>* src = &in;
        std::vector<T> padded;
        if (layer.padding == ConvPadding::same) {
            auto [l, r] = same_padding(layer.kernel);
            pl = l;
            pr = r;
            padded = pad_input(in, batch, len, ch, pl, pr);
            src = &padded;
        }
        std::size_t plen = len + pl + pr;
        std::size_t out_len = plen - layer.kernel + 1;
        std::vector<T> dx_padded(batch * plen * ch, T{0});
        for (std::size_t b = 0; b < batch; ++b) {
            const T* ib = src->data() + b * plen * ch;
            const T* drow_base = delta.data() + b * out_len * f;
            T* dxb = dx_padded.data() + b * plen * ch;
            for (std::size_t t = 0; t < out_len; ++t) {
                const T* drow = drow_base + t * f;
                for (std::size_t j = 0; j < f; ++j) db.data[j] += drow[j];
                for (std::size_t dt = 0; dt < layer.kernel; ++dt) {
                    const T* irow = ib + (t + dt) * ch;
                    T* dxrow = dxb + (t + dt) * ch;
                    T* dwrow = dw.data.data() + dt * ch * f;
                    const T* wrow = w.data.data() + dt * ch * f;
                    for (std::size_t c = 0; c < ch; ++c) {
                        T iv = irow[c];
                        T acc{0};
                        T* dwc = dwrow + c * f;
                        const T* wc = wrow + c * f;
                        for (std::size_t j = 0; j < f; ++j) {
                            dwc[j] += iv * drow[j];
                            acc += wc[j] * drow[j];
                        }
                        dxrow[c] += acc;
                    }
                }
            }
        }
        if (pl == 0 && pr == 0) return dx_padded;
        std::vector<T> dx(batch * len * ch);
        for (std::size_t b = 0; b < batch; ++b)
            std::copy(dx_padded.begin() + static_cast<std::ptrdiff_t>((b * plen + pl) * ch),
                      dx_padded.begin() + static_cast<std::ptrdiff_t>((b * plen + pl + len) * ch),
                      dx.begin() + static_cast<std::ptrdiff_t>(b * len * ch));
        return dx;
    }
};

}  // namespace nilm
