#include "cednet/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace cednet::kernels {

namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <typename T>
inline T gelu_scalar(T x) {
    return static_cast<T>(0.5) * x *
           (static_cast<T>(1) + static_cast<T>(std::erf(static_cast<double>(x) * kSqrt1_2)));
}

template <typename T>
inline T gelu_grad_scalar(T x) {
    const double xd = static_cast<double>(x);
    const double cdf = 0.5 * (1.0 + std::erf(xd * kSqrt1_2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xd * xd);
    return static_cast<T>(cdf + xd * pdf);
}

// Half-pixel source coordinate for output index j at integer scale s.
inline double src_coord(std::int64_t j, std::int64_t s) {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(s) - 0.5;
}

// Weight with which input index i contributes to output index j along one
// axis (length = input extent). Mirrors the forward lerp exactly.
inline double axis_weight(std::int64_t j, std::int64_t i, std::int64_t extent, std::int64_t s) {
    const double src = src_coord(j, s);
    const std::int64_t i0 = static_cast<std::int64_t>(std::floor(src));
    const double f = src - static_cast<double>(i0);
    const std::int64_t lo = std::clamp<std::int64_t>(i0, 0, extent - 1);
    const std::int64_t hi = std::clamp<std::int64_t>(i0 + 1, 0, extent - 1);
    double w = 0.0;
    if (lo == i) w += 1.0 - f;
    if (hi == i) w += f;
    return w;
}

} // namespace

template <typename T>
void conv2d_forward(const Conv2dGeom& g, const T* x, const T* w, const T* bias, T* y) {
    const std::int64_t cpg_in = g.c_in / g.groups;
    const std::int64_t cpg_out = g.c_out / g.groups;
#pragma omp parallel for collapse(3) schedule(static)
    for (std::int64_t n = 0; n < g.n; ++n) {
        for (std::int64_t oc = 0; oc < g.c_out; ++oc) {
            for (std::int64_t oh = 0; oh < g.h_out; ++oh) {
                const std::int64_t grp = oc / cpg_out;
                const T* woc = w + oc * cpg_in * g.kh * g.kw;
                for (std::int64_t ow = 0; ow < g.w_out; ++ow) {
                    T acc = bias ? bias[oc] : T(0);
                    for (std::int64_t ic = 0; ic < cpg_in; ++ic) {
                        const T* xc = x + ((n * g.c_in + grp * cpg_in + ic) * g.h_in) * g.w_in;
                        const T* wk = woc + ic * g.kh * g.kw;
                        for (std::int64_t kh = 0; kh < g.kh; ++kh) {
                            const std::int64_t ih = oh * g.stride - g.pad + kh * g.dil;
                            if (ih < 0 || ih >= g.h_in) continue;
                            for (std::int64_t kw = 0; kw < g.kw; ++kw) {
                                const std::int64_t iw = ow * g.stride - g.pad + kw * g.dil;
                                if (iw < 0 || iw >= g.w_in) continue;
                                acc += xc[ih * g.w_in + iw] * wk[kh * g.kw + kw];
                            }
                        }
                    }
                    y[((n * g.c_out + oc) * g.h_out + oh) * g.w_out + ow] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const Conv2dGeom& g, const T* gy, const T* w, T* gx) {
    const std::int64_t cpg_in = g.c_in / g.groups;
    const std::int64_t cpg_out = g.c_out / g.groups;
#pragma omp parallel for collapse(3) schedule(static)
    for (std::int64_t n = 0; n < g.n; ++n) {
        for (std::int64_t ic = 0; ic < g.c_in; ++ic) {
            for (std::int64_t ih = 0; ih < g.h_in; ++ih) {
                const std::int64_t grp = ic / cpg_in;
                const std::int64_t ic_g = ic % cpg_in;
                for (std::int64_t iw = 0; iw < g.w_in; ++iw) {
                    T acc = T(0);
                    for (std::int64_t oc_g = 0; oc_g < cpg_out; ++oc_g) {
                        const std::int64_t oc = grp * cpg_out + oc_g;
                        const T* gyoc = gy + ((n * g.c_out + oc) * g.h_out) * g.w_out;
                        const T* wk = w + (oc * cpg_in + ic_g) * g.kh * g.kw;
                        for (std::int64_t kh = 0; kh < g.kh; ++kh) {
                            const std::int64_t hnum = ih + g.pad - kh * g.dil;
                            if (hnum < 0 || hnum % g.stride != 0) continue;
                            const std::int64_t oh = hnum / g.stride;
                            if (oh >= g.h_out) continue;
                            for (std::int64_t kw = 0; kw < g.kw; ++kw) {
                                const std::int64_t wnum = iw + g.pad - kw * g.dil;
                                if (wnum < 0 || wnum % g.stride != 0) continue;
                                const std::int64_t ow = wnum / g.stride;
                                if (ow >= g.w_out) continue;
                                acc += gyoc[oh * g.w_out + ow] * wk[kh * g.kw + kw];
                            }
                        }
                    }
                    gx[((n * g.c_in + ic) * g.h_in + ih) * g.w_in + iw] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weight(const Conv2dGeom& g, const T* gy, const T* x, T* gw, T* gb) {
    const std::int64_t cpg_in = g.c_in / g.groups;
    const std::int64_t cpg_out = g.c_out / g.groups;
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t oc = 0; oc < g.c_out; ++oc) {
        for (std::int64_t ic_g = 0; ic_g < cpg_in; ++ic_g) {
            const std::int64_t grp = oc / cpg_out;
            const std::int64_t ic = grp * cpg_in + ic_g;
            for (std::int64_t kh = 0; kh < g.kh; ++kh) {
                for (std::int64_t kw = 0; kw < g.kw; ++kw) {
                    T acc = T(0);
                    for (std::int64_t n = 0; n < g.n; ++n) {
                        const T* gyoc = gy + ((n * g.c_out + oc) * g.h_out) * g.w_out;
                        const T* xc = x + ((n * g.c_in + ic) * g.h_in) * g.w_in;
                        for (std::int64_t oh = 0; oh < g.h_out; ++oh) {
                            const std::int64_t ih = oh * g.stride - g.pad + kh * g.dil;
                            if (ih < 0 || ih >= g.h_in) continue;
                            for (std::int64_t ow = 0; ow < g.w_out; ++ow) {
                                const std::int64_t iw = ow * g.stride - g.pad + kw * g.dil;
                                if (iw < 0 || iw >= g.w_in) continue;
                                acc += gyoc[oh * g.w_out + ow] * xc[ih * g.w_in + iw];
                            }
                        }
                    }
                    gw[(oc * cpg_in + ic_g) * g.kh * g.kw + kh * g.kw + kw] += acc;
                }
            }
        }
    }
    if (gb) {
#pragma omp parallel for schedule(static)
        for (std::int64_t oc = 0; oc < g.c_out; ++oc) {
            T acc = T(0);
            for (std::int64_t n = 0; n < g.n; ++n) {
                const T* gyoc = gy + ((n * g.c_out + oc) * g.h_out) * g.w_out;
                for (std::int64_t i = 0; i < g.h_out * g.w_out; ++i) acc += gyoc[i];
            }
            gb[oc] += acc;
        }
    }
}

template <typename T>
void linear_forward(std::int64_t n, std::int64_t c_in, std::int64_t c_out,
                    std::int64_t spatial, const T* x, const T* w, const T* b, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t bi = 0; bi < n; ++bi) {
        for (std::int64_t o = 0; o < c_out; ++o) {
            T* yrow = y + (bi * c_out + o) * spatial;
            for (std::int64_t s = 0; s < spatial; ++s) yrow[s] = b ? b[o] : T(0);
            const T* wrow = w + o * c_in;
            for (std::int64_t i = 0; i < c_in; ++i) {
                const T wv = wrow[i];
                const T* xrow = x + (bi * c_in + i) * spatial;
                for (std::int64_t s = 0; s < spatial; ++s) yrow[s] += wv * xrow[s];
            }
        }
    }
}

template <typename T>
void linear_backward(std::int64_t n, std::int64_t c_in, std::int64_t c_out,
                     std::int64_t spatial, const T* gy, const T* x, const T* w,
                     T* gx, T* gw, T* gb) {
    if (gx) {
#pragma omp parallel for collapse(2) schedule(static)
        for (std::int64_t bi = 0; bi < n; ++bi) {
            for (std::int64_t i = 0; i < c_in; ++i) {
                T* gxrow = gx + (bi * c_in + i) * spatial;
                for (std::int64_t o = 0; o < c_out; ++o) {
                    const T wv = w[o * c_in + i];
                    const T* gyrow = gy + (bi * c_out + o) * spatial;
                    for (std::int64_t s = 0; s < spatial; ++s) gxrow[s] += wv * gyrow[s];
                }
            }
        }
    }
    if (gw) {
#pragma omp parallel for collapse(2) schedule(static)
        for (std::int64_t o = 0; o < c_out; ++o) {
            for (std::int64_t i = 0; i < c_in; ++i) {
                T acc = T(0);
                for (std::int64_t bi = 0; bi < n; ++bi) {
                    const T* gyrow = gy + (bi * c_out + o) * spatial;
                    const T* xrow = x + (bi * c_in + i) * spatial;
                    for (std::int64_t s = 0; s < spatial; ++s) acc += gyrow[s] * xrow[s];
                }
                gw[o * c_in + i] += acc;
            }
        }
    }
    if (gb) {
#pragma omp parallel for schedule(static)
        for (std::int64_t o = 0; o < c_out; ++o) {
            T acc = T(0);
            for (std::int64_t bi = 0; bi < n; ++bi) {
                const T* gyrow = gy + (bi * c_out + o) * spatial;
                for (std::int64_t s = 0; s < spatial; ++s) acc += gyrow[s];
            }
            gb[o] += acc;
        }
    }
}

template <typename T>
void layer_norm_forward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                        const T* x, const T* gamma, const T* beta, T eps, T* y) {
    const std::int64_t positions = n * spatial;
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < positions; ++p) {
        const std::int64_t bi = p / spatial;
        const std::int64_t s = p % spatial;
        const T* xp = x + bi * c * spatial + s;
        T* yp = y + bi * c * spatial + s;
        T mean = T(0);
        for (std::int64_t ch = 0; ch < c; ++ch) mean += xp[ch * spatial];
        mean /= static_cast<T>(c);
        T var = T(0);
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const T d = xp[ch * spatial] - mean;
            var += d * d;
        }
        var /= static_cast<T>(c);
        const T rstd = T(1) / std::sqrt(var + eps);
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const T xhat = (xp[ch * spatial] - mean) * rstd;
            yp[ch * spatial] = gamma[ch] * xhat + beta[ch];
        }
    }
}

template <typename T>
void layer_norm_backward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                         const T* gy, const T* x, const T* gamma, T eps,
                         T* gx, T* ggamma, T* gbeta) {
    const std::int64_t positions = n * spatial;
    if (gx) {
#pragma omp parallel for schedule(static)
        for (std::int64_t p = 0; p < positions; ++p) {
            const std::int64_t bi = p / spatial;
            const std::int64_t s = p % spatial;
            const T* xp = x + bi * c * spatial + s;
            const T* gp = gy + bi * c * spatial + s;
            T* gxp = gx + bi * c * spatial + s;
            T mean = T(0);
            for (std::int64_t ch = 0; ch < c; ++ch) mean += xp[ch * spatial];
            mean /= static_cast<T>(c);
            T var = T(0);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T d = xp[ch * spatial] - mean;
                var += d * d;
            }
            var /= static_cast<T>(c);
            const T rstd = T(1) / std::sqrt(var + eps);
            T m1 = T(0), m2 = T(0);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T h = gp[ch * spatial] * gamma[ch];
                const T xhat = (xp[ch * spatial] - mean) * rstd;
                m1 += h;
                m2 += h * xhat;
            }
            m1 /= static_cast<T>(c);
            m2 /= static_cast<T>(c);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T h = gp[ch * spatial] * gamma[ch];
                const T xhat = (xp[ch * spatial] - mean) * rstd;
                gxp[ch * spatial] += rstd * (h - m1 - xhat * m2);
            }
        }
    }
    if (ggamma || gbeta) {
#pragma omp parallel for schedule(static)
        for (std::int64_t ch = 0; ch < c; ++ch) {
            T gg = T(0), gb = T(0);
            for (std::int64_t bi = 0; bi < n; ++bi) {
                const T* xp = x + bi * c * spatial;
                const T* gp = gy + bi * c * spatial;
                for (std::int64_t s = 0; s < spatial; ++s) {
                    T mean = T(0);
                    for (std::int64_t k = 0; k < c; ++k) mean += xp[k * spatial + s];
                    mean /= static_cast<T>(c);
                    T var = T(0);
                    for (std::int64_t k = 0; k < c; ++k) {
                        const T d = xp[k * spatial + s] - mean;
                        var += d * d;
                    }
                    var /= static_cast<T>(c);
                    const T rstd = T(1) / std::sqrt(var + eps);
                    const T xhat = (xp[ch * spatial + s] - mean) * rstd;
                    gg += gp[ch * spatial + s] * xhat;
                    gb += gp[ch * spatial + s];
                }
            }
            if (ggamma) ggamma[ch] += gg;
            if (gbeta) gbeta[ch] += gb;
        }
    }
}

template <typename T>
void gelu_forward(std::int64_t numel, const T* x, T* y) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < numel; ++i) y[i] = gelu_scalar(x[i]);
}

template <typename T>
void gelu_backward(std::int64_t numel, const T* gy, const T* x, T* gx) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < numel; ++i) gx[i] += gy[i] * gelu_grad_scalar(x[i]);
}

template <typename T>
void upsample_forward(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      std::int64_t scale, const T* x, T* y) {
    const std::int64_t ho = h * scale;
    const std::int64_t wo = w * scale;
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t nc = 0; nc < n * c; ++nc) {
        for (std::int64_t oh = 0; oh < ho; ++oh) {
            const T* xp = x + nc * h * w;
            T* yp = y + nc * ho * wo;
            const double sh = src_coord(oh, scale);
            const std::int64_t h0 = static_cast<std::int64_t>(std::floor(sh));
            const T fh = static_cast<T>(sh - static_cast<double>(h0));
            const std::int64_t h0c = std::clamp<std::int64_t>(h0, 0, h - 1);
            const std::int64_t h1c = std::clamp<std::int64_t>(h0 + 1, 0, h - 1);
            for (std::int64_t ow = 0; ow < wo; ++ow) {
                const double sw = src_coord(ow, scale);
                const std::int64_t w0 = static_cast<std::int64_t>(std::floor(sw));
                const T fw = static_cast<T>(sw - static_cast<double>(w0));
                const std::int64_t w0c = std::clamp<std::int64_t>(w0, 0, w - 1);
                const std::int64_t w1c = std::clamp<std::int64_t>(w0 + 1, 0, w - 1);
                const T a = xp[h0c * w + w0c];
                const T b = xp[h0c * w + w1c];
                const T d = xp[h1c * w + w0c];
                const T e = xp[h1c * w + w1c];
                const T top = a + fw * (b - a);
                const T bot = d + fw * (e - d);
                yp[oh * wo + ow] = top + fh * (bot - top);
            }
        }
    }
}

template <typename T>
void upsample_backward(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                       std::int64_t scale, const T* gy, T* gx) {
    const std::int64_t ho = h * scale;
    const std::int64_t wo = w * scale;
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t nc = 0; nc < n * c; ++nc) {
        for (std::int64_t ih = 0; ih < h; ++ih) {
            const T* gp = gy + nc * ho * wo;
            T* gxp = gx + nc * h * w;
            const std::int64_t oh_lo = std::max<std::int64_t>(
                0, static_cast<std::int64_t>(std::floor(scale * (ih - 0.5) - 0.5)) - 1);
            const std::int64_t oh_hi = std::min<std::int64_t>(
                ho, static_cast<std::int64_t>(std::ceil(scale * (ih + 1.5) + 0.5)) + 1);
            for (std::int64_t iw = 0; iw < w; ++iw) {
                const std::int64_t ow_lo = std::max<std::int64_t>(
                    0, static_cast<std::int64_t>(std::floor(scale * (iw - 0.5) - 0.5)) - 1);
                const std::int64_t ow_hi = std::min<std::int64_t>(
                    wo, static_cast<std::int64_t>(std::ceil(scale * (iw + 1.5) + 0.5)) + 1);
                T acc = T(0);
                for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                    const double wh = axis_weight(oh, ih, h, scale);
                    if (wh == 0.0) continue;
                    for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                        const double ww = axis_weight(ow, iw, w, scale);
                        if (ww == 0.0) continue;
                        acc += static_cast<T>(wh * ww) * gp[oh * wo + ow];
                    }
                }
                gxp[ih * w + iw] += acc;
            }
        }
    }
}

template <typename T>
void add_forward(std::int64_t numel, const T* a, const T* b, T* y) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < numel; ++i) y[i] = a[i] + b[i];
}

template <typename T>
void mul_forward(std::int64_t numel, const T* a, const T* b, T* y) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < numel; ++i) y[i] = a[i] * b[i];
}

template <typename T>
void global_avg_pool_forward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                             const T* x, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t bi = 0; bi < n; ++bi) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const T* xp = x + (bi * c + ch) * spatial;
            T acc = T(0);
            for (std::int64_t s = 0; s < spatial; ++s) acc += xp[s];
            y[bi * c + ch] = acc / static_cast<T>(spatial);
        }
    }
}

template <typename T>
void global_avg_pool_backward(std::int64_t n, std::int64_t c, std::int64_t spatial,
                              const T* gy, T* gx) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t bi = 0; bi < n; ++bi) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const T g = gy[bi * c + ch] / static_cast<T>(spatial);
            T* gxp = gx + (bi * c + ch) * spatial;
            for (std::int64_t s = 0; s < spatial; ++s) gxp[s] += g;
        }
    }
}

template <typename T>
std::int64_t softmax_xent_forward(std::int64_t positions, std::int64_t classes,
                                  std::int64_t class_stride, const T* logits,
                                  const int* labels, T* loss) {
    const std::int64_t spatial = class_stride;
    T total = T(0);
    std::int64_t labeled = 0;
    for (std::int64_t p = 0; p < positions; ++p) {
        const int label = labels[p];
        if (label < 0) continue;
        const std::int64_t bi = p / spatial;
        const std::int64_t s = p % spatial;
        const T* zp = logits + bi * classes * spatial + s;
        T zmax = zp[0];
        for (std::int64_t k = 1; k < classes; ++k) zmax = std::max(zmax, zp[k * spatial]);
        T se = T(0);
        for (std::int64_t k = 0; k < classes; ++k)
            se += std::exp(zp[k * spatial] - zmax);
        total += zmax + std::log(se) - zp[static_cast<std::int64_t>(label) * spatial];
        ++labeled;
    }
    *loss = labeled > 0 ? total / static_cast<T>(labeled) : T(0);
    return labeled;
}

template <typename T>
void softmax_xent_backward(std::int64_t positions, std::int64_t classes,
                           std::int64_t class_stride, const T* logits,
                           const int* labels, std::int64_t labeled, T gy, T* gx) {
    if (labeled == 0) return;
    const std::int64_t spatial = class_stride;
    const T scale = gy / static_cast<T>(labeled);
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < positions; ++p) {
        const int label = labels[p];
        if (label < 0) continue;
        const std::int64_t bi = p / spatial;
        const std::int64_t s = p % spatial;
        const T* zp = logits + bi * classes * spatial + s;
        T* gp = gx + bi * classes * spatial + s;
        T zmax = zp[0];
        for (std::int64_t k = 1; k < classes; ++k) zmax = std::max(zmax, zp[k * spatial]);
        T se = T(0);
        for (std::int64_t k = 0; k < classes; ++k)
            se += std::exp(zp[k * spatial] - zmax);
        for (std::int64_t k = 0; k < classes; ++k) {
            const T soft = std::exp(zp[k * spatial] - zmax) / se;
            const T delta = (k == static_cast<std::int64_t>(label)) ? T(1) : T(0);
            gp[k * spatial] += (soft - delta) * scale;
        }
    }
}

#define CEDNET_INSTANTIATE_KERNELS(T)                                                        \
    template void conv2d_forward<T>(const Conv2dGeom&, const T*, const T*, const T*, T*);    \
    template void conv2d_backward_input<T>(const Conv2dGeom&, const T*, const T*, T*);       \
    template void conv2d_backward_weight<T>(const Conv2dGeom&, const T*, const T*, T*, T*);  \
    template void linear_forward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,  \
                                    const T*, const T*, const T*, T*);                       \
    template void linear_backward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t, \
                                     const T*, const T*, const T*, T*, T*, T*);              \
    template void layer_norm_forward<T>(std::int64_t, std::int64_t, std::int64_t, const T*,  \
                                        const T*, const T*, T, T*);                          \
    template void layer_norm_backward<T>(std::int64_t, std::int64_t, std::int64_t, const T*, \
                                         const T*, const T*, T, T*, T*, T*);                 \
    template void gelu_forward<T>(std::int64_t, const T*, T*);                               \
    template void gelu_backward<T>(std::int64_t, const T*, const T*, T*);                    \
    template void upsample_forward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,\
                                      std::int64_t, const T*, T*);                           \
    template void upsample_backward<T>(std::int64_t, std::int64_t, std::int64_t,             \
                                       std::int64_t, std::int64_t, const T*, T*);            \
    template void add_forward<T>(std::int64_t, const T*, const T*, T*);                      \
    template void mul_forward<T>(std::int64_t, const T*, const T*, T*);                      \
    template void global_avg_pool_forward<T>(std::int64_t, std::int64_t, std::int64_t,       \
                                             const T*, T*);                                  \
    template void global_avg_pool_backward<T>(std::int64_t, std::int64_t, std::int64_t,      \
                                              const T*, T*);                                 \
    template std::int64_t softmax_xent_forward<T>(std::int64_t, std::int64_t, std::int64_t,  \
                                                  const T*, const int*, T*);                 \
    template void softmax_xent_backward<T>(std::int64_t, std::int64_t, std::int64_t,         \
                                           const T*, const int*, std::int64_t, T, T*);

CEDNET_INSTANTIATE_KERNELS(float)
CEDNET_INSTANTIATE_KERNELS(double)

#undef CEDNET_INSTANTIATE_KERNELS

} // namespace cednet::kernels
