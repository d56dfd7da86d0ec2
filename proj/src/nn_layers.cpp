#include "bevo/nn/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace bevo::nn {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in, int out, int k, int s, int p, bool bias)
    : in_ch(in),
      out_ch(out),
      ksize(k),
      stride(s),
      pad(p),
      has_bias(bias),
      w(name + ".w", {out, static_cast<int64_t>(in) * k * k}) {
    if (bias) b = Parameter(name + ".b", {out});
}

void Conv2d::init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * ksize * ksize));
    for (int64_t i = 0; i < w.value.numel(); ++i) w.value[i] = rng.normal(0.0, stddev);
    if (has_bias) b.value.fill(0.0);
}

void Conv2d::collect(ParamRefs& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
}

static void im2col(const Tensor& x, int ksize, int stride, int pad, int64_t out_h, int64_t out_w,
                   Tensor& cols) {
    const int64_t in_ch = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
    double* dst = cols.data();
    const double* src = x.data();
    for (int64_t c = 0; c < in_ch; ++c) {
        for (int ki = 0; ki < ksize; ++ki) {
            for (int kj = 0; kj < ksize; ++kj) {
                for (int64_t ho = 0; ho < out_h; ++ho) {
                    const int64_t hi = ho * stride + ki - pad;
                    double* row = dst + ((c * ksize + ki) * ksize + kj) * (out_h * out_w) + ho * out_w;
                    if (hi < 0 || hi >= in_h) {
                        std::fill(row, row + out_w, 0.0);
                        continue;
                    }
                    const double* srow = src + (c * in_h + hi) * in_w;
                    for (int64_t wo = 0; wo < out_w; ++wo) {
                        const int64_t wi = wo * stride + kj - pad;
                        row[wo] = (wi >= 0 && wi < in_w) ? srow[wi] : 0.0;
                    }
                }
            }
        }
    }
}

static void col2im_add(const Tensor& cols, int ksize, int stride, int pad, int64_t out_h,
                       int64_t out_w, Tensor& gx) {
    const int64_t in_ch = gx.dim(0), in_h = gx.dim(1), in_w = gx.dim(2);
    const double* src = cols.data();
    double* dst = gx.data();
    for (int64_t c = 0; c < in_ch; ++c) {
        for (int ki = 0; ki < ksize; ++ki) {
            for (int kj = 0; kj < ksize; ++kj) {
                for (int64_t ho = 0; ho < out_h; ++ho) {
                    const int64_t hi = ho * stride + ki - pad;
                    if (hi < 0 || hi >= in_h) continue;
                    const double* row =
                        src + ((c * ksize + ki) * ksize + kj) * (out_h * out_w) + ho * out_w;
                    double* drow = dst + (c * in_h + hi) * in_w;
                    for (int64_t wo = 0; wo < out_w; ++wo) {
                        const int64_t wi = wo * stride + kj - pad;
                        if (wi >= 0 && wi < in_w) drow[wi] += row[wo];
                    }
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& x, Ctx& ctx) const {
    if (x.rank() != 3 || x.dim(0) != in_ch) {
        throw std::invalid_argument("Conv2d: bad input shape");
    }
    const int64_t in_h = x.dim(1), in_w = x.dim(2);
    const int64_t out_h = (in_h + 2 * pad - ksize) / stride + 1;
    const int64_t out_w = (in_w + 2 * pad - ksize) / stride + 1;
    ctx.in_h = in_h;
    ctx.in_w = in_w;
    ctx.out_h = out_h;
    ctx.out_w = out_w;

    const int64_t krows = static_cast<int64_t>(in_ch) * ksize * ksize;
    ctx.cols = Tensor({krows, out_h * out_w});
    im2col(x, ksize, stride, pad, out_h, out_w, ctx.cols);

    Tensor y({out_ch, out_h, out_w});
    ConstMatMap wm(w.value.data(), out_ch, krows);
    ConstMatMap cm(ctx.cols.data(), krows, out_h * out_w);
    MatMap ym(y.data(), out_ch, out_h * out_w);
    ym.noalias() = wm * cm;
    if (has_bias) {
        for (int64_t c = 0; c < out_ch; ++c) {
            ym.row(c).array() += b.value[c];
        }
    }
    return y;
}

Tensor Conv2d::backward(const Ctx& ctx, const Tensor& gy) {
    const int64_t krows = static_cast<int64_t>(in_ch) * ksize * ksize;
    const int64_t npix = ctx.out_h * ctx.out_w;

    ConstMatMap gym(gy.data(), out_ch, npix);
    ConstMatMap cm(ctx.cols.data(), krows, npix);
    MatMap gwm(w.grad.data(), out_ch, krows);
    gwm.noalias() += gym * cm.transpose();
    if (has_bias) {
        for (int64_t c = 0; c < out_ch; ++c) b.grad[c] += gym.row(c).sum();
    }

    Tensor gcols({krows, npix});
    ConstMatMap wm(w.value.data(), out_ch, krows);
    MatMap gcm(gcols.data(), krows, npix);
    gcm.noalias() = wm.transpose() * gym;

    Tensor gx({in_ch, ctx.in_h, ctx.in_w});
    col2im_add(gcols, ksize, stride, pad, ctx.out_h, ctx.out_w, gx);
    return gx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::string name, int in, int out)
    : in_dim(in), out_dim(out), w(name + ".w", {out, in}), b(name + ".b", {out}) {}

void Linear::init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_dim));
    for (int64_t i = 0; i < w.value.numel(); ++i) w.value[i] = rng.normal(0.0, stddev);
    b.value.fill(0.0);
}

void Linear::init_normal(Rng& rng, double stddev) {
    for (int64_t i = 0; i < w.value.numel(); ++i) w.value[i] = rng.normal(0.0, stddev);
    b.value.fill(0.0);
}

void Linear::collect(ParamRefs& out) {
    out.push_back(&w);
    out.push_back(&b);
}

Tensor Linear::forward(const Tensor& x, Ctx& ctx) const {
    if (x.numel() != in_dim) throw std::invalid_argument("Linear: bad input size");
    ctx.x = x;
    Tensor y({out_dim});
    ConstMatMap wm(w.value.data(), out_dim, in_dim);
    ConstVecMap xv(x.data(), in_dim);
    VecMap yv(y.data(), out_dim);
    yv.noalias() = wm * xv;
    yv += ConstVecMap(b.value.data(), out_dim);
    return y;
}

Tensor Linear::backward(const Ctx& ctx, const Tensor& gy) {
    ConstVecMap gyv(gy.data(), out_dim);
    ConstVecMap xv(ctx.x.data(), in_dim);
    MatMap gwm(w.grad.data(), out_dim, in_dim);
    gwm.noalias() += gyv * xv.transpose();
    VecMap(b.grad.data(), out_dim) += gyv;

    Tensor gx({in_dim});
    ConstMatMap wm(w.value.data(), out_dim, in_dim);
    VecMap(gx.data(), in_dim).noalias() = wm.transpose() * gyv;
    return gx;
}

// ---------------------------------------------------------------- GroupNorm

GroupNorm::GroupNorm(std::string name, int g, int c)
    : groups(g), channels(c), gamma(name + ".gamma", {c}), beta(name + ".beta", {c}) {
    if (c % g != 0) throw std::invalid_argument("GroupNorm: channels % groups != 0");
    gamma.value.fill(1.0);
    beta.value.fill(0.0);
}

void GroupNorm::collect(ParamRefs& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

Tensor GroupNorm::forward(const Tensor& x, Ctx& ctx) const {
    if (x.rank() != 3 || x.dim(0) != channels) throw std::invalid_argument("GroupNorm: bad shape");
    const int64_t hw = x.dim(1) * x.dim(2);
    const int64_t cpg = channels / groups;
    const int64_t m = cpg * hw;

    ctx.xhat = Tensor(x.shape());
    ctx.inv_std.assign(static_cast<size_t>(groups), 0.0);
    Tensor y(x.shape());

    for (int g = 0; g < groups; ++g) {
        const double* xs = x.data() + g * cpg * hw;
        double mean = 0.0;
        for (int64_t i = 0; i < m; ++i) mean += xs[i];
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (int64_t i = 0; i < m; ++i) {
            const double d = xs[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(m);
        const double inv_std = 1.0 / std::sqrt(var + eps);
        ctx.inv_std[static_cast<size_t>(g)] = inv_std;

        double* xh = ctx.xhat.data() + g * cpg * hw;
        double* ys = y.data() + g * cpg * hw;
        for (int64_t c = 0; c < cpg; ++c) {
            const double ga = gamma.value[g * cpg + c];
            const double be = beta.value[g * cpg + c];
            for (int64_t i = 0; i < hw; ++i) {
                const double v = (xs[c * hw + i] - mean) * inv_std;
                xh[c * hw + i] = v;
                ys[c * hw + i] = ga * v + be;
            }
        }
    }
    return y;
}

Tensor GroupNorm::backward(const Ctx& ctx, const Tensor& gy) {
    const int64_t hw = gy.dim(1) * gy.dim(2);
    const int64_t cpg = channels / groups;
    const int64_t m = cpg * hw;

    Tensor gx(gy.shape());
    for (int g = 0; g < groups; ++g) {
        const double inv_std = ctx.inv_std[static_cast<size_t>(g)];
        const double* gys = gy.data() + g * cpg * hw;
        const double* xh = ctx.xhat.data() + g * cpg * hw;
        double* gxs = gx.data() + g * cpg * hw;

        // gamma/beta grads and the two reduction terms of the norm backward
        double sum_gxhat = 0.0, sum_gxhat_xhat = 0.0;
        for (int64_t c = 0; c < cpg; ++c) {
            const double ga = gamma.value[g * cpg + c];
            double gga = 0.0, gbe = 0.0;
            for (int64_t i = 0; i < hw; ++i) {
                const double gyv = gys[c * hw + i];
                const double xhv = xh[c * hw + i];
                gga += gyv * xhv;
                gbe += gyv;
                const double gxh = gyv * ga;
                sum_gxhat += gxh;
                sum_gxhat_xhat += gxh * xhv;
            }
            gamma.grad[g * cpg + c] += gga;
            beta.grad[g * cpg + c] += gbe;
        }
        const double mean_gxhat = sum_gxhat / static_cast<double>(m);
        const double mean_gxhat_xhat = sum_gxhat_xhat / static_cast<double>(m);
        for (int64_t c = 0; c < cpg; ++c) {
            const double ga = gamma.value[g * cpg + c];
            for (int64_t i = 0; i < hw; ++i) {
                const double gxh = gys[c * hw + i] * ga;
                gxs[c * hw + i] =
                    inv_std * (gxh - mean_gxhat - xh[c * hw + i] * mean_gxhat_xhat);
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------- activations

Tensor Relu::forward(const Tensor& x, Ctx& ctx) {
    ctx.x = x;
    Tensor y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor Relu::backward(const Ctx& ctx, const Tensor& gy) {
    Tensor gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] = ctx.x[i] > 0.0 ? gy[i] : 0.0;
    return gx;
}

Tensor Sigmoid::forward(const Tensor& x, Ctx& ctx) {
    Tensor y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    ctx.y = y;
    return y;
}

Tensor Sigmoid::backward(const Ctx& ctx, const Tensor& gy) {
    Tensor gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) {
        const double y = ctx.y[i];
        gx[i] = gy[i] * y * (1.0 - y);
    }
    return gx;
}

Tensor Tanh::forward(const Tensor& x, Ctx& ctx) {
    Tensor y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
    ctx.y = y;
    return y;
}

Tensor Tanh::backward(const Ctx& ctx, const Tensor& gy) {
    Tensor gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] = gy[i] * (1.0 - ctx.y[i] * ctx.y[i]);
    return gx;
}

Tensor SoftmaxAxis0::forward(const Tensor& x, Ctx& ctx) {
    if (x.rank() != 3) throw std::invalid_argument("SoftmaxAxis0: rank-3 input required");
    const int64_t d = x.dim(0), hw = x.dim(1) * x.dim(2);
    Tensor y(x.shape());
    for (int64_t p = 0; p < hw; ++p) {
        double mx = -1e300;
        for (int64_t k = 0; k < d; ++k) mx = std::max(mx, x[k * hw + p]);
        double sum = 0.0;
        for (int64_t k = 0; k < d; ++k) {
            const double e = std::exp(x[k * hw + p] - mx);
            y[k * hw + p] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int64_t k = 0; k < d; ++k) y[k * hw + p] *= inv;
    }
    ctx.y = y;
    return y;
}

Tensor SoftmaxAxis0::backward(const Ctx& ctx, const Tensor& gy) {
    const int64_t d = gy.dim(0), hw = gy.dim(1) * gy.dim(2);
    Tensor gx(gy.shape());
    for (int64_t p = 0; p < hw; ++p) {
        double dot = 0.0;
        for (int64_t k = 0; k < d; ++k) dot += gy[k * hw + p] * ctx.y[k * hw + p];
        for (int64_t k = 0; k < d; ++k) {
            gx[k * hw + p] = ctx.y[k * hw + p] * (gy[k * hw + p] - dot);
        }
    }
    return gx;
}

}  // namespace bevo::nn
