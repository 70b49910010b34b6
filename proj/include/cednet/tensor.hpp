#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cednet/common.hpp"

// Minimal dense tensor engine with reverse-mode autodiff. Tensors are
// shared handles over a contiguous buffer; ops record backward closures on
// the active Tape when gradients are needed. Layout for feature maps is
// (batch, channel, height, width).

namespace cednet {

namespace detail {

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    bool requires_grad = false; // leaf marker
    bool tracked = false;       // participates in the active tape's graph
    std::uint64_t tape_id = 0;
    std::vector<T> grad;        // sized lazily on first accumulation

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
};

} // namespace detail

template <typename T>
class Tensor {
public:
    Tensor() : impl_(std::make_shared<detail::TensorImpl<T>>()) {}

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, T value);
    static Tensor from_data(Shape shape, std::vector<T> data);

    const Shape& shape() const { return impl_->shape; }
    std::int64_t numel() const { return impl_->numel(); }
    std::int64_t dim(std::size_t i) const { return impl_->shape.at(i); }
    std::size_t rank() const { return impl_->shape.size(); }

    T* data() { return impl_->data.data(); }
    const T* data() const { return impl_->data.data(); }
    const std::vector<T>& values() const { return impl_->data; }
    std::vector<T>& values() { return impl_->data; }

    T item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool on) {
        impl_->requires_grad = on;
        return *this;
    }

    bool has_grad() const { return !impl_->grad.empty(); }
    const std::vector<T>& grad() const;
    void zero_grad() { impl_->grad.assign(impl_->data.size(), T(0)); }

    // Same buffer, same impl: handles compare by identity.
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    // Deep copy without grad state.
    Tensor clone() const;

    std::shared_ptr<detail::TensorImpl<T>> impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl<T>> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl<T>> impl_;

    template <typename U>
    friend class Tape;
    template <typename U, typename... Args>
    friend Tensor<U> make_tensor(Args&&...);
};

// Ordered record of executed ops. One tape may be active per thread and
// scalar losses produced under it can be backpropagated exactly once.
template <typename T>
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    // Replays recorded ops in reverse, accumulating gradients additively at
    // fan-out points. The loss must be a scalar produced under this tape.
    void backward(const Tensor<T>& loss);

    std::size_t size() const { return records_.size(); }
    std::uint64_t id() const { return id_; }

    void record(std::function<void()> fn) { records_.push_back(std::move(fn)); }

private:
    std::vector<std::function<void()>> records_;
    std::uint64_t id_ = 0;
    bool consumed_ = false;
};

// --- Primitive ops -------------------------------------------------------

// Cross-correlation (no kernel flip), zero padding. weight shape
// (out_ch, in_ch/groups, kh, kw); bias may be null.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                 int stride, int padding, int dilation = 1, int groups = 1);

// Integer-factor bilinear upsampling, half-pixel centers.
template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, int scale);

// Normalizes over channels at each spatial position (rank 4) or over the
// feature axis (rank 2); gamma/beta have length = channel count.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = 1e-6);

template <typename T>
Tensor<T> gelu(const Tensor<T>& input);

// weight (out_features, in_features); applied along the channel axis at
// every spatial position (rank 4) or to rank-2 inputs directly.
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

// Scalar sum of all elements.
template <typename T>
Tensor<T> sum(const Tensor<T>& input);

// (N, C, H, W) -> (N, C).
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

// Labels: one int per position ((N) for rank-2 logits, (N*H*W) row-major for
// rank-4); negative labels are ignored. Loss is averaged over labeled
// positions.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels);

// --- Tensor container I/O -------------------------------------------------

// Self-describing container: magic, little-endian JSON header (shape, dtype,
// byte order), raw buffer. Host must be little-endian.
template <typename T>
void export_tensor(std::ostream& os, const Tensor<T>& t);
template <typename T>
void export_tensor_file(const std::string& path, const Tensor<T>& t);

template <typename T>
Tensor<T> import_tensor(std::istream& is);
template <typename T>
Tensor<T> import_tensor_file(const std::string& path);

} // namespace cednet
