#pragma once

#include <optional>
#include <string>

#include "bevo/nn/rng.hpp"
#include "bevo/nn/tensor.hpp"

namespace bevo::nn {

// Layers follow a functional forward/backward contract: forward fills a Ctx
// with whatever the backward pass needs, backward consumes the Ctx, adds into
// the layer's parameter gradients and returns the input gradient. Contexts
// are externally owned so the same layer instance can appear several times in
// one computation graph (the encoder runs once per frame of a pair).

struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 1;
    bool has_bias = true;
    Parameter w;  // [out_ch, in_ch*k*k]
    Parameter b;  // [out_ch]

    struct Ctx {
        Tensor cols;  // [in_ch*k*k, h_out*w_out]
        int64_t in_h = 0, in_w = 0;
        int64_t out_h = 0, out_w = 0;
    };

    Conv2d() = default;
    Conv2d(std::string name, int in, int out, int k, int s, int p, bool bias = true);

    void init_he(Rng& rng);
    void collect(ParamRefs& out);

    Tensor forward(const Tensor& x, Ctx& ctx) const;
    Tensor backward(const Ctx& ctx, const Tensor& gy);
};

struct Linear {
    int in_dim = 0, out_dim = 0;
    Parameter w;  // [out, in]
    Parameter b;  // [out]

    struct Ctx {
        Tensor x;
    };

    Linear() = default;
    Linear(std::string name, int in, int out);

    void init_he(Rng& rng);
    void init_normal(Rng& rng, double stddev);
    void collect(ParamRefs& out);

    Tensor forward(const Tensor& x, Ctx& ctx) const;
    Tensor backward(const Ctx& ctx, const Tensor& gy);
};

struct GroupNorm {
    int groups = 1, channels = 0;
    double eps = 1e-5;
    Parameter gamma;  // [channels]
    Parameter beta;   // [channels]

    struct Ctx {
        Tensor xhat;
        std::vector<double> inv_std;  // per group
    };

    GroupNorm() = default;
    GroupNorm(std::string name, int groups, int channels);

    void collect(ParamRefs& out);

    Tensor forward(const Tensor& x, Ctx& ctx) const;  // x: [C, H, W]
    Tensor backward(const Ctx& ctx, const Tensor& gy);
};

// Stateless elementwise activations.
struct Relu {
    struct Ctx {
        Tensor x;
    };
    static Tensor forward(const Tensor& x, Ctx& ctx);
    static Tensor backward(const Ctx& ctx, const Tensor& gy);
};

struct Sigmoid {
    struct Ctx {
        Tensor y;
    };
    static Tensor forward(const Tensor& x, Ctx& ctx);
    static Tensor backward(const Ctx& ctx, const Tensor& gy);
};

struct Tanh {
    struct Ctx {
        Tensor y;
    };
    static Tensor forward(const Tensor& x, Ctx& ctx);
    static Tensor backward(const Ctx& ctx, const Tensor& gy);
};

// Softmax over axis 0 of a [D, H, W] tensor (independent per pixel).
struct SoftmaxAxis0 {
    struct Ctx {
        Tensor y;
    };
    static Tensor forward(const Tensor& x, Ctx& ctx);
    static Tensor backward(const Ctx& ctx, const Tensor& gy);
};

}  // namespace bevo::nn
