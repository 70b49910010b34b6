#include "cednet/kernels.hpp"

#include <algorithm>
#include <cmath>

// Plain single-threaded loop nests. These are the reference the OpenMP
// kernels are tested against; keep them obvious rather than fast.

namespace cednet::kernels::serial {

template <typename T>
void conv2d_forward(const Conv2dGeom& g, const T* x, const T* w, const T* bias, T* y) {
    const std::int64_t cpg_in = g.c_in / g.groups;
    const std::int64_t cpg_out = g.c_out / g.groups;
    for (std::int64_t n = 0; n < g.n; ++n)
        for (std::int64_t oc = 0; oc < g.c_out; ++oc)
            for (std::int64_t oh = 0; oh < g.h_out; ++oh)
                for (std::int64_t ow = 0; ow < g.w_out; ++ow) {
                    const std::int64_t grp = oc / cpg_out;
                    T acc = bias ? bias[oc] : T(0);
                    for (std::int64_t ic = 0; ic < cpg_in; ++ic)
                        for (std::int64_t kh = 0; kh < g.kh; ++kh)
                            for (std::int64_t kw = 0; kw < g.kw; ++kw) {
                                const std::int64_t ih = oh * g.stride - g.pad + kh * g.dil;
                                const std::int64_t iw = ow * g.stride - g.pad + kw * g.dil;
                                if (ih < 0 || ih >= g.h_in || iw < 0 || iw >= g.w_in) continue;
                                const std::int64_t xi =
                                    ((n * g.c_in + grp * cpg_in + ic) * g.h_in + ih) * g.w_in + iw;
                                const std::int64_t wi =
                                    ((oc * cpg_in + ic) * g.kh + kh) * g.kw + kw;
                                acc += x[xi] * w[wi];
                            }
                    y[((n * g.c_out + oc) * g.h_out + oh) * g.w_out + ow] = acc;
                }
}

template <typename T>
void conv2d_backward_input(const Conv2dGeom& g, const T* gy, const T* w, T* gx) {
    const std::int64_t cpg_in = g.c_in / g.groups;
    const std::int64_t cpg_out = g.c_out / g.groups;
    for (std::int64_t n = 0; n < g.n; ++n)
        for (std::int64_t ic = 0; ic < g.c_in; ++ic)
            for (std::int64_t ih = 0; ih < g.h_in; ++ih)
                for (std::int64_t iw = 0; iw < g.w_in; ++iw) {
                    const std::int64_t grp = ic / cpg_in;
                    const std::int64_t ic_g = ic % cpg_in;
                    T acc = T(0);
                    for (std::int64_t oc_g = 0; oc_g < cpg_out; ++oc_g) {
                        const std::int64_t oc = grp * cpg_out + oc_g;
                        for (std::int64_t kh = 0; kh < g.kh; ++kh)
                            for (std::int64_t kw = 0; kw < g.kw; ++kw) {
                                const std::int64_t hnum = ih + g.pad - kh * g.dil;
                                const std::int64_t wnum = iw + g.pad - kw * g.dil;
                                if (hnum < 0 || wnum < 0) continue;
                                if (hnum % g.stride != 0 || wnum % g.stride != 0) continue;
                                const std::int64_t oh = hnum / g.stride;
                                const std::int64_t ow = wnum / g.stride;
                                if (oh >= g.h_out || ow >= g.w_out) continue;
                                acc += gy[((n * g.c_out + oc) * g.h_out + oh) * g.w_out + ow] *
                                       w[((oc * cpg_in + ic_g) * g.kh + kh) * g.kw + kw];
                            }
                    }
                    gx[((n * g.c_in + ic) * g.h_in + ih) * g.w_in + iw] += acc;
                }
}

template <typename T>
void conv2d_backward_weight(const Conv2dGeom& g, const T* gy, const T* x, T* gw, T* gb) {
    const std::int64_t cpg_in = g.c_in / g.groups;
    const std::int64_t cpg_out = g.c_out / g.groups;
    for (std::int64_t oc = 0; oc < g.c_out; ++oc)
        for (std::int64_t ic_g = 0; ic_g < cpg_in; ++ic_g)
            for (std::int64_t kh = 0; kh < g.kh; ++kh)
                for (std::int64_t kw = 0; kw < g.kw; ++kw) {
                    const std::int64_t ic = (oc / cpg_out) * cpg_in + ic_g;
                    T acc = T(0);
                    for (std::int64_t n = 0; n < g.n; ++n)
                        for (std::int64_t oh = 0; oh < g.h_out; ++oh)
                            for (std::int64_t ow = 0; ow < g.w_out; ++ow) {
                                const std::int64_t ih = oh * g.stride - g.pad + kh * g.dil;
                                const std::int64_t iw = ow * g.stride - g.pad + kw * g.dil;
                                if (ih < 0 || ih >= g.h_in || iw < 0 || iw >= g.w_in) continue;
                                acc += gy[((n * g.c_out + oc) * g.h_out + oh) * g.w_out + ow] *
                                       x[((n * g.c_in + ic) * g.h_in + ih) * g.w_in + iw];
                            }
                    gw[((oc * cpg_in + ic_g) * g.kh + kh) * g.kw + kw] += acc;
                }
    if (gb)
        for (std::int64_t oc = 0; oc < g.c_out; ++oc) {
            T acc = T(0);
            for (std::int64_t n = 0; n < g.n; ++n)
                for (std::int64_t i = 0; i < g.h_out * g.w_out; ++i)
                    acc += gy[(n * g.c_out + oc) * g.h_out * g.w_out + i];
            gb[oc] += acc;
        }
}

template <typename T>
void linear_forward(std::int64_t n, std::int64_t c_in, std::int64_t c_out,
                    std::int64_t spatial, const T* x, const T* w, const T* b, T* y) {
    for (std::int64_t bi = 0; bi < n; ++bi)
        for (std::int64_t o = 0; o < c_out; ++o)
            for (std::int64_t s = 0; s < spatial; ++s) {
                T acc = b ? b[o] : T(0);
                for (std::int64_t i = 0; i < c_in; ++i)
                    acc += w[o * c_in + i] * x[(bi * c_in + i) * spatial + s];
                y[(bi * c_out + o) * spatial + s] = acc;
            }
}

template <typename T>
void layer_norm_forward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                        const T* x, const T* gamma, const T* beta, T eps, T* y) {
    for (std::int64_t bi = 0; bi < n; ++bi)
        for (std::int64_t s = 0; s < spatial; ++s) {
            T mean = T(0);
            for (std::int64_t ch = 0; ch < c; ++ch) mean += x[(bi * c + ch) * spatial + s];
            mean /= static_cast<T>(c);
            T var = T(0);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T d = x[(bi * c + ch) * spatial + s] - mean;
                var += d * d;
            }
            var /= static_cast<T>(c);
            const T rstd = T(1) / std::sqrt(var + eps);
            for (std::int64_t ch = 0; ch < c; ++ch)
                y[(bi * c + ch) * spatial + s] =
                    gamma[ch] * ((x[(bi * c + ch) * spatial + s] - mean) * rstd) + beta[ch];
        }
}

template <typename T>
void gelu_forward(std::int64_t numel, const T* x, T* y) {
    for (std::int64_t i = 0; i < numel; ++i)
        y[i] = static_cast<T>(0.5) * x[i] *
               (static_cast<T>(1) +
                static_cast<T>(std::erf(static_cast<double>(x[i]) * 0.70710678118654752440)));
}

template <typename T>
void upsample_forward(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      std::int64_t scale, const T* x, T* y) {
    const std::int64_t ho = h * scale;
    const std::int64_t wo = w * scale;
    for (std::int64_t nc = 0; nc < n * c; ++nc)
        for (std::int64_t oh = 0; oh < ho; ++oh)
            for (std::int64_t ow = 0; ow < wo; ++ow) {
                const double sh = (oh + 0.5) / scale - 0.5;
                const double sw = (ow + 0.5) / scale - 0.5;
                const std::int64_t h0 = static_cast<std::int64_t>(std::floor(sh));
                const std::int64_t w0 = static_cast<std::int64_t>(std::floor(sw));
                const T fh = static_cast<T>(sh - h0);
                const T fw = static_cast<T>(sw - w0);
                const std::int64_t h0c = std::clamp<std::int64_t>(h0, 0, h - 1);
                const std::int64_t h1c = std::clamp<std::int64_t>(h0 + 1, 0, h - 1);
                const std::int64_t w0c = std::clamp<std::int64_t>(w0, 0, w - 1);
                const std::int64_t w1c = std::clamp<std::int64_t>(w0 + 1, 0, w - 1);
                const T* xp = x + nc * h * w;
                const T a = xp[h0c * w + w0c];
                const T b = xp[h0c * w + w1c];
                const T d = xp[h1c * w + w0c];
                const T e = xp[h1c * w + w1c];
                const T top = a + fw * (b - a);
                const T bot = d + fw * (e - d);
                y[nc * ho * wo + oh * wo + ow] = top + fh * (bot - top);
            }
}

#define CEDNET_INSTANTIATE_SERIAL(T)                                                         \
    template void conv2d_forward<T>(const Conv2dGeom&, const T*, const T*, const T*, T*);    \
    template void conv2d_backward_input<T>(const Conv2dGeom&, const T*, const T*, T*);       \
    template void conv2d_backward_weight<T>(const Conv2dGeom&, const T*, const T*, T*, T*);  \
    template void linear_forward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,  \
                                    const T*, const T*, const T*, T*);                       \
    template void layer_norm_forward<T>(std::int64_t, std::int64_t, std::int64_t, const T*,  \
                                        const T*, const T*, T, T*);                          \
    template void gelu_forward<T>(std::int64_t, const T*, T*);                               \
    template void upsample_forward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,\
                                      std::int64_t, const T*, T*);

CEDNET_INSTANTIATE_SERIAL(float)
CEDNET_INSTANTIATE_SERIAL(double)

#undef CEDNET_INSTANTIATE_SERIAL

} // namespace cednet::kernels::serial
