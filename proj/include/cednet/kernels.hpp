#pragma once

#include <cstdint>

// Low-level numeric kernels behind the tensor ops. Each kernel exists twice:
// the OpenMP-parallel version in cednet::kernels (the one the tensor engine
// calls) and a plain serial version in cednet::kernels::serial kept as the
// reference for tests and the kernel benchmark. Both variants accumulate in
// the same order per output element, so their results are bit-identical.
//
// Backward kernels accumulate (+=) into their destination buffers; callers
// own zero-initialization.

namespace cednet::kernels {

struct Conv2dGeom {
    std::int64_t n = 0;
    std::int64_t c_in = 0, h_in = 0, w_in = 0;
    std::int64_t c_out = 0, h_out = 0, w_out = 0;
    std::int64_t kh = 0, kw = 0;
    std::int64_t stride = 1, pad = 0, dil = 1, groups = 1;
};

// y[n, co, ho, wo] = sum_{ci in group, kh, kw} x * w (+ bias), zero padding.
template <typename T>
void conv2d_forward(const Conv2dGeom& g, const T* x, const T* w, const T* bias, T* y);

template <typename T>
void conv2d_backward_input(const Conv2dGeom& g, const T* gy, const T* w, T* gx);

template <typename T>
void conv2d_backward_weight(const Conv2dGeom& g, const T* gy, const T* x, T* gw, T* gb);

// Channel-affine map applied at every spatial position. Layout: x[n, c, s]
// with s = h*w contiguous positions (spatial == 1 covers rank-2 tensors).
template <typename T>
void linear_forward(std::int64_t n, std::int64_t c_in, std::int64_t c_out,
                    std::int64_t spatial, const T* x, const T* w, const T* b, T* y);

template <typename T>
void linear_backward(std::int64_t n, std::int64_t c_in, std::int64_t c_out,
                     std::int64_t spatial, const T* gy, const T* x, const T* w,
                     T* gx, T* gw, T* gb);

// Normalizes over the channel axis at each (n, s) position.
template <typename T>
void layer_norm_forward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                        const T* x, const T* gamma, const T* beta, T eps, T* y);

template <typename T>
void layer_norm_backward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                         const T* gy, const T* x, const T* gamma, T eps,
                         T* gx, T* ggamma, T* gbeta);

// Exact Gaussian-CDF GELU.
template <typename T>
void gelu_forward(std::int64_t numel, const T* x, T* y);

template <typename T>
void gelu_backward(std::int64_t numel, const T* gy, const T* x, T* gx);

// Integer-factor bilinear upsampling with half-pixel centers (corners not
// aligned); borders replicate. Written in lerp form a + w*(b - a) so
// constant inputs are reproduced exactly.
template <typename T>
void upsample_forward(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      std::int64_t scale, const T* x, T* y);

template <typename T>
void upsample_backward(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                       std::int64_t scale, const T* gy, T* gx);

template <typename T>
void add_forward(std::int64_t numel, const T* a, const T* b, T* y);

template <typename T>
void mul_forward(std::int64_t numel, const T* a, const T* b, T* y);

// y[n, c] = mean over spatial of x[n, c, s].
template <typename T>
void global_avg_pool_forward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                             const T* x, T* y);

template <typename T>
void global_avg_pool_backward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                              const T* gy, T* gx);

// Mean over labeled positions (label >= 0) of log-sum-exp(z) - z[label].
// Returns the number of labeled positions. Serial reduction; position count
// is tiny compared with the convolutions.
template <typename T>
std::int64_t softmax_xent_forward(std::int64_t positions, std::int64_t classes,
                                  std::int64_t class_stride, const T* logits,
                                  const int* labels, T* loss);

template <typename T>
void softmax_xent_backward(std::int64_t positions, std::int64_t classes,
                           std::int64_t class_stride, const T* logits,
                           const int* labels, std::int64_t labeled, T gy, T* gx);

namespace serial {

template <typename T>
void conv2d_forward(const Conv2dGeom& g, const T* x, const T* w, const T* bias, T* y);
template <typename T>
void conv2d_backward_input(const Conv2dGeom& g, const T* gy, const T* w, T* gx);
template <typename T>
void conv2d_backward_weight(const Conv2dGeom& g, const T* gy, const T* x, T* gw, T* gb);
template <typename T>
void linear_forward(std::int64_t n, std::int64_t c_in, std::int64_t c_out,
                    std::int64_t spatial, const T* x, const T* w, const T* b, T* y);
template <typename T>
void layer_norm_forward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                        const T* x, const T* gamma, const T* beta, T eps, T* y);
template <typename T>
void gelu_forward(std::int64_t numel, const T* x, T* y);
template <typename T>
void upsample_forward(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      std::int64_t scale, const T* x, T* y);

} // namespace serial

} // namespace cednet::kernels
