#include "cednet/tensor.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cednet/kernels.hpp"

namespace cednet {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_tape_counter{1};

template <typename T>
thread_local Tape<T>* g_active_tape = nullptr;

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
    if (!finite_checks_enabled()) return;
    for (const T v : t.values()) {
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericError(std::string(op) + ": non-finite value in output");
    }
}

template <typename T>
const char* dtype_name() {
    return sizeof(T) == 4 ? "f32" : "f64";
}

} // namespace

template <typename T, typename... Args>
Tensor<T> make_tensor(Args&&... args) {
    auto impl = std::make_shared<detail::TensorImpl<T>>(std::forward<Args>(args)...);
    return Tensor<T>(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
    auto impl = std::make_shared<detail::TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data.assign(static_cast<std::size_t>(numel_of(impl->shape)), T(0));
    return Tensor<T>(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
    Tensor<T> t = zeros(std::move(shape));
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data) {
    if (numel_of(shape) != static_cast<std::int64_t>(data.size()))
        throw ShapeError("from_data: buffer length " + std::to_string(data.size()) +
                         " does not match shape " + shape_to_string(shape));
    auto impl = std::make_shared<detail::TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    return Tensor<T>(std::move(impl));
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1)
        throw ShapeError("item: tensor has " + std::to_string(numel()) + " elements");
    return impl_->data[0];
}

template <typename T>
const std::vector<T>& Tensor<T>::grad() const {
    if (impl_->grad.empty())
        throw NumericError("grad: no gradient accumulated for this tensor");
    return impl_->grad;
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
    return from_data(impl_->shape, impl_->data);
}

// --- Tape ------------------------------------------------------------------

template <typename T>
Tape<T>::Tape() : id_(g_tape_counter.fetch_add(1)) {
    if (g_active_tape<T>)
        throw NumericError("Tape: another tape is already active on this thread");
    g_active_tape<T> = this;
}

template <typename T>
Tape<T>::~Tape() {
    if (g_active_tape<T> == this) g_active_tape<T> = nullptr;
}

template <typename T>
Tape<T>* Tape<T>::active() {
    return g_active_tape<T>;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
    if (consumed_)
        throw NumericError("backward: tape already consumed; rebuild the graph to backprop again");
    if (loss.numel() != 1)
        throw ShapeError("backward: loss must be scalar, got shape " +
                         shape_to_string(loss.shape()));
    auto impl = loss.impl();
    if (!impl->tracked || impl->tape_id != id_)
        throw NumericError("backward: loss is detached from this tape");
    consumed_ = true;
    impl->ensure_grad();
    impl->grad[0] = T(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
    records_.clear();
}

namespace {

// True when the op consuming `t` must be recorded for gradients.
template <typename T>
bool needs_grad(const Tensor<T>& t) {
    auto* tape = Tape<T>::active();
    if (!tape) return false;
    if (t.requires_grad()) return true;
    return t.impl()->tracked && t.impl()->tape_id == tape->id();
}

template <typename T>
void mark_tracked(Tensor<T>& out) {
    out.impl()->tracked = true;
    out.impl()->tape_id = Tape<T>::active()->id();
}

} // namespace

// --- Ops --------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                 int stride, int padding, int dilation, int groups) {
    if (input.rank() != 4)
        throw ShapeError("conv2d: input must be rank 4, got " + shape_to_string(input.shape()));
    if (weight.rank() != 4)
        throw ShapeError("conv2d: weight must be rank 4, got " + shape_to_string(weight.shape()));
    if (stride < 1 || padding < 0 || dilation < 1 || groups < 1)
        throw ConfigError("conv2d: invalid stride/padding/dilation/groups");

    kernels::Conv2dGeom g;
    g.n = input.dim(0);
    g.c_in = input.dim(1);
    g.h_in = input.dim(2);
    g.w_in = input.dim(3);
    g.c_out = weight.dim(0);
    g.kh = weight.dim(2);
    g.kw = weight.dim(3);
    g.stride = stride;
    g.pad = padding;
    g.dil = dilation;
    g.groups = groups;

    if (g.c_in % groups != 0 || g.c_out % groups != 0)
        throw ShapeError("conv2d: channels not divisible by groups (in=" +
                         std::to_string(g.c_in) + ", out=" + std::to_string(g.c_out) +
                         ", groups=" + std::to_string(groups) + ")");
    if (weight.dim(1) != g.c_in / groups)
        throw ShapeError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                         " input channels per group, input provides " +
                         std::to_string(g.c_in / groups));
    if (bias && (bias->rank() != 1 || bias->dim(0) != g.c_out))
        throw ShapeError("conv2d: bias must have shape (" + std::to_string(g.c_out) + ")");

    g.h_out = (g.h_in + 2 * g.pad - g.dil * (g.kh - 1) - 1) / g.stride + 1;
    g.w_out = (g.w_in + 2 * g.pad - g.dil * (g.kw - 1) - 1) / g.stride + 1;
    if (g.h_in + 2 * g.pad - g.dil * (g.kh - 1) - 1 < 0 ||
        g.w_in + 2 * g.pad - g.dil * (g.kw - 1) - 1 < 0 || g.h_out <= 0 || g.w_out <= 0)
        throw ConfigError("conv2d: non-positive output size for input " +
                          shape_to_string(input.shape()) + ", kernel " +
                          shape_to_string(weight.shape()));

    Tensor<T> out = Tensor<T>::zeros({g.n, g.c_out, g.h_out, g.w_out});
    kernels::conv2d_forward(g, input.data(), weight.data(), bias ? bias->data() : nullptr,
                            out.data());
    check_finite(out, "conv2d");

    const bool gi = needs_grad(input);
    const bool gw = needs_grad(weight);
    const bool gb = bias && needs_grad(*bias);
    if (gi || gw || gb) {
        mark_tracked(out);
        auto xi = input.impl();
        auto wi = weight.impl();
        auto bi = bias ? bias->impl() : nullptr;
        auto oi = out.impl();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            if (gi) {
                xi->ensure_grad();
                kernels::conv2d_backward_input(g, oi->grad.data(), wi->data.data(),
                                               xi->grad.data());
            }
            if (gw || gb) {
                T* gwp = nullptr;
                T* gbp = nullptr;
                if (gw) {
                    wi->ensure_grad();
                    gwp = wi->grad.data();
                }
                if (gb) {
                    bi->ensure_grad();
                    gbp = bi->grad.data();
                }
                if (gwp)
                    kernels::conv2d_backward_weight(g, oi->grad.data(), xi->data.data(), gwp,
                                                    gbp);
                else if (gbp) {
                    // bias-only path: reuse the weight kernel's bias reduction
                    for (std::int64_t oc = 0; oc < g.c_out; ++oc) {
                        T acc = T(0);
                        for (std::int64_t n = 0; n < g.n; ++n)
                            for (std::int64_t i = 0; i < g.h_out * g.w_out; ++i)
                                acc += oi->grad[(n * g.c_out + oc) * g.h_out * g.w_out + i];
                        gbp[oc] += acc;
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, int scale) {
    if (input.rank() != 4)
        throw ShapeError("bilinear_upsample: input must be rank 4, got " +
                         shape_to_string(input.shape()));
    if (scale < 2) throw ConfigError("bilinear_upsample: scale must be an integer >= 2");

    const std::int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    Tensor<T> out = Tensor<T>::zeros({n, c, h * scale, w * scale});
    kernels::upsample_forward<T>(n, c, h, w, scale, input.data(), out.data());
    check_finite(out, "bilinear_upsample");

    if (needs_grad(input)) {
        mark_tracked(out);
        auto xi = input.impl();
        auto oi = out.impl();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            xi->ensure_grad();
            kernels::upsample_backward<T>(n, c, h, w, scale, oi->grad.data(), xi->grad.data());
        });
    }
    return out;
}

namespace {

// (batch, channels, spatial) view shared by the channel-axis ops.
template <typename T>
void channel_view(const Tensor<T>& t, const char* op, std::int64_t* n, std::int64_t* c,
                  std::int64_t* spatial) {
    if (t.rank() == 4) {
        *n = t.dim(0);
        *c = t.dim(1);
        *spatial = t.dim(2) * t.dim(3);
    } else if (t.rank() == 2) {
        *n = t.dim(0);
        *c = t.dim(1);
        *spatial = 1;
    } else {
        throw ShapeError(std::string(op) + ": input must be rank 2 or 4, got " +
                         shape_to_string(t.shape()));
    }
}

} // namespace

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps) {
    std::int64_t n, c, spatial;
    channel_view(input, "layer_norm", &n, &c, &spatial);
    if (eps <= 0) throw ConfigError("layer_norm: eps must be positive");
    if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c)
        throw ShapeError("layer_norm: gamma/beta must have length " + std::to_string(c) +
                         " (channel count), got " + shape_to_string(gamma.shape()) + " and " +
                         shape_to_string(beta.shape()));

    Tensor<T> out = Tensor<T>::zeros(input.shape());
    kernels::layer_norm_forward<T>(n, c, spatial, input.data(), gamma.data(), beta.data(),
                                   static_cast<T>(eps), out.data());
    check_finite(out, "layer_norm");

    const bool gi = needs_grad(input);
    const bool gg = needs_grad(gamma);
    const bool gb = needs_grad(beta);
    if (gi || gg || gb) {
        mark_tracked(out);
        auto xi = input.impl();
        auto gmi = gamma.impl();
        auto bti = beta.impl();
        auto oi = out.impl();
        const T epsT = static_cast<T>(eps);
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            T* gxp = nullptr;
            T* ggp = nullptr;
            T* gbp = nullptr;
            if (gi) {
                xi->ensure_grad();
                gxp = xi->grad.data();
            }
            if (gg) {
                gmi->ensure_grad();
                ggp = gmi->grad.data();
            }
            if (gb) {
                bti->ensure_grad();
                gbp = bti->grad.data();
            }
            kernels::layer_norm_backward<T>(n, c, spatial, oi->grad.data(), xi->data.data(),
                                            gmi->data.data(), epsT, gxp, ggp, gbp);
        });
    }
    return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& input) {
    Tensor<T> out = Tensor<T>::zeros(input.shape());
    kernels::gelu_forward<T>(input.numel(), input.data(), out.data());
    check_finite(out, "gelu");
    if (needs_grad(input)) {
        mark_tracked(out);
        auto xi = input.impl();
        auto oi = out.impl();
        const std::int64_t numel = input.numel();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            xi->ensure_grad();
            kernels::gelu_backward<T>(numel, oi->grad.data(), xi->data.data(), xi->grad.data());
        });
    }
    return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    std::int64_t n, c, spatial;
    channel_view(input, "linear", &n, &c, &spatial);
    if (weight.rank() != 2)
        throw ShapeError("linear: weight must be rank 2, got " + shape_to_string(weight.shape()));
    const std::int64_t c_out = weight.dim(0);
    if (weight.dim(1) != c)
        throw ShapeError("linear: weight expects " + std::to_string(weight.dim(1)) +
                         " input features, input has " + std::to_string(c));
    if (bias.rank() != 1 || bias.dim(0) != c_out)
        throw ShapeError("linear: bias must have shape (" + std::to_string(c_out) + ")");

    Shape out_shape = input.shape();
    out_shape[1] = c_out;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    kernels::linear_forward<T>(n, c, c_out, spatial, input.data(), weight.data(), bias.data(),
                               out.data());
    check_finite(out, "linear");

    const bool gi = needs_grad(input);
    const bool gw = needs_grad(weight);
    const bool gb = needs_grad(bias);
    if (gi || gw || gb) {
        mark_tracked(out);
        auto xi = input.impl();
        auto wi = weight.impl();
        auto bi = bias.impl();
        auto oi = out.impl();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            T* gxp = nullptr;
            T* gwp = nullptr;
            T* gbp = nullptr;
            if (gi) {
                xi->ensure_grad();
                gxp = xi->grad.data();
            }
            if (gw) {
                wi->ensure_grad();
                gwp = wi->grad.data();
            }
            if (gb) {
                bi->ensure_grad();
                gbp = bi->grad.data();
            }
            kernels::linear_backward<T>(n, c, c_out, spatial, oi->grad.data(), xi->data.data(),
                                        wi->data.data(), gxp, gwp, gbp);
        });
    }
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("add: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::add_forward<T>(a.numel(), a.data(), b.data(), out.data());
    check_finite(out, "add");
    const bool ga = needs_grad(a);
    const bool gb = needs_grad(b);
    if (ga || gb) {
        mark_tracked(out);
        auto ai = a.impl();
        auto bi = b.impl();
        auto oi = out.impl();
        const std::int64_t numel = a.numel();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            if (ga) {
                ai->ensure_grad();
                for (std::int64_t i = 0; i < numel; ++i) ai->grad[i] += oi->grad[i];
            }
            if (gb) {
                bi->ensure_grad();
                for (std::int64_t i = 0; i < numel; ++i) bi->grad[i] += oi->grad[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::mul_forward<T>(a.numel(), a.data(), b.data(), out.data());
    check_finite(out, "mul");
    const bool ga = needs_grad(a);
    const bool gb = needs_grad(b);
    if (ga || gb) {
        mark_tracked(out);
        auto ai = a.impl();
        auto bi = b.impl();
        auto oi = out.impl();
        const std::int64_t numel = a.numel();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            if (ga) {
                ai->ensure_grad();
                for (std::int64_t i = 0; i < numel; ++i) ai->grad[i] += oi->grad[i] * bi->data[i];
            }
            if (gb) {
                bi->ensure_grad();
                for (std::int64_t i = 0; i < numel; ++i) bi->grad[i] += oi->grad[i] * ai->data[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& input) {
    Tensor<T> out = Tensor<T>::zeros({1});
    T acc = T(0);
    const T* p = input.data();
    for (std::int64_t i = 0; i < input.numel(); ++i) acc += p[i];
    out.data()[0] = acc;
    check_finite(out, "sum");
    if (needs_grad(input)) {
        mark_tracked(out);
        auto xi = input.impl();
        auto oi = out.impl();
        const std::int64_t numel = input.numel();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            xi->ensure_grad();
            const T g = oi->grad[0];
            for (std::int64_t i = 0; i < numel; ++i) xi->grad[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
    if (input.rank() != 4)
        throw ShapeError("global_avg_pool: input must be rank 4, got " +
                         shape_to_string(input.shape()));
    const std::int64_t n = input.dim(0), c = input.dim(1);
    const std::int64_t spatial = input.dim(2) * input.dim(3);
    Tensor<T> out = Tensor<T>::zeros({n, c});
    kernels::global_avg_pool_forward<T>(n, c, spatial, input.data(), out.data());
    check_finite(out, "global_avg_pool");
    if (needs_grad(input)) {
        mark_tracked(out);
        auto xi = input.impl();
        auto oi = out.impl();
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            xi->ensure_grad();
            kernels::global_avg_pool_backward<T>(n, c, spatial, oi->grad.data(),
                                                 xi->grad.data());
        });
    }
    return out;
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    std::int64_t positions = 0, classes = 0, class_stride = 0;
    if (logits.rank() == 2) {
        positions = logits.dim(0);
        classes = logits.dim(1);
        class_stride = 1;
    } else if (logits.rank() == 4) {
        classes = logits.dim(1);
        class_stride = logits.dim(2) * logits.dim(3);
        positions = logits.dim(0) * class_stride;
    } else {
        throw ShapeError("softmax_cross_entropy: logits must be rank 2 or 4, got " +
                         shape_to_string(logits.shape()));
    }
    if (static_cast<std::int64_t>(labels.size()) != positions)
        throw ShapeError("softmax_cross_entropy: expected " + std::to_string(positions) +
                         " labels, got " + std::to_string(labels.size()));
    for (const int l : labels)
        if (l >= classes)
            throw ConfigError("softmax_cross_entropy: label " + std::to_string(l) +
                              " out of range for " + std::to_string(classes) + " classes");

    Tensor<T> out = Tensor<T>::zeros({1});
    const std::int64_t labeled = kernels::softmax_xent_forward<T>(
        positions, classes, class_stride, logits.data(), labels.data(), out.data());
    check_finite(out, "softmax_cross_entropy");

    if (needs_grad(logits)) {
        mark_tracked(out);
        auto zi = logits.impl();
        auto oi = out.impl();
        auto lbl = std::make_shared<std::vector<int>>(labels);
        Tape<T>::active()->record([=]() {
            if (oi->grad.empty()) return;
            zi->ensure_grad();
            kernels::softmax_xent_backward<T>(positions, classes, class_stride, zi->data.data(),
                                              lbl->data(), labeled, oi->grad[0],
                                              zi->grad.data());
        });
    }
    return out;
}

// --- Container I/O -----------------------------------------------------------

namespace {
constexpr char kTensorMagic[6] = {'C', 'T', 'N', 'S', 'R', '\n'};
}

template <typename T>
void export_tensor(std::ostream& os, const Tensor<T>& t) {
    static_assert(std::endian::native == std::endian::little,
                  "tensor container assumes a little-endian host");
    json header;
    header["version"] = 1;
    header["dtype"] = dtype_name<T>();
    header["byte_order"] = "little";
    header["shape"] = t.shape();
    const std::string hs = header.dump();
    const std::uint32_t hlen = static_cast<std::uint32_t>(hs.size());
    os.write(kTensorMagic, sizeof(kTensorMagic));
    os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(T)));
    if (!os) throw IoError("export_tensor: write failed");
}

template <typename T>
void export_tensor_file(const std::string& path, const Tensor<T>& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("export_tensor: cannot open " + path);
    export_tensor(f, t);
}

template <typename T>
Tensor<T> import_tensor(std::istream& is) {
    char magic[sizeof(kTensorMagic)];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
        throw IoError("import_tensor: bad magic; not a tensor container");
    std::uint32_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!is) throw IoError("import_tensor: truncated header length");
    std::string hs(hlen, '\0');
    is.read(hs.data(), hlen);
    if (!is) throw IoError("import_tensor: truncated header");
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw IoError(std::string("import_tensor: invalid header JSON: ") + e.what());
    }
    if (header.value("version", 0) != 1)
        throw IoError("import_tensor: unsupported container version");
    if (header.value("byte_order", "") != "little")
        throw IoError("import_tensor: unsupported byte order");
    if (header.value("dtype", "") != dtype_name<T>())
        throw IoError("import_tensor: dtype mismatch, container holds " +
                      header.value("dtype", std::string("?")));
    Shape shape = header.at("shape").get<Shape>();
    const std::int64_t n = numel_of(shape);
    std::vector<T> data(static_cast<std::size_t>(n));
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw IoError("import_tensor: truncated data");
    return Tensor<T>::from_data(std::move(shape), std::move(data));
}

template <typename T>
Tensor<T> import_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("import_tensor: cannot open " + path);
    return import_tensor<T>(f);
}

// --- Instantiations ----------------------------------------------------------

#define CEDNET_INSTANTIATE_TENSOR(T)                                                          \
    template class Tensor<T>;                                                                 \
    template class Tape<T>;                                                                   \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, int,   \
                                 int, int, int);                                              \
    template Tensor<T> bilinear_upsample<T>(const Tensor<T>&, int);                           \
    template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                     double);                                                 \
    template Tensor<T> gelu<T>(const Tensor<T>&);                                             \
    template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                            \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                            \
    template Tensor<T> sum<T>(const Tensor<T>&);                                              \
    template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                                  \
    template Tensor<T> softmax_cross_entropy<T>(const Tensor<T>&, const std::vector<int>&);   \
    template void export_tensor<T>(std::ostream&, const Tensor<T>&);                          \
    template void export_tensor_file<T>(const std::string&, const Tensor<T>&);                \
    template Tensor<T> import_tensor<T>(std::istream&);                                       \
    template Tensor<T> import_tensor_file<T>(const std::string&);

CEDNET_INSTANTIATE_TENSOR(float)
CEDNET_INSTANTIATE_TENSOR(double)

#undef CEDNET_INSTANTIATE_TENSOR

} // namespace cednet
