#pragma once

#include <array>

#include "bevo/correlation.hpp"
#include "bevo/geometry.hpp"
#include "bevo/nn/layers.hpp"

namespace bevo {

struct DecoderConfig {
    std::vector<int> conv_channels{64, 128, 256};  // stride-2 reduction stack
    std::vector<int> hidden_sizes{256, 128};       // shared fully-connected trunk
    double t_max = 4.0;                            // meters; translation output scale
    int gn_groups = 8;

    void validate() const;
};

struct PoseDecoderOutput {
    double tx_raw = 0.0;   // all four in (-1, 1) after tanh
    double ty_raw = 0.0;
    double cos_raw = 0.0;
    double sin_raw = 0.0;
};

// Correlation volume -> conv reduction -> shared MLP trunk -> translation and
// (cos, sin) heads, tanh on every output.
class PoseDecoder {
  public:
    struct Ctx {
        std::vector<nn::Conv2d::Ctx> conv;
        std::vector<nn::GroupNorm::Ctx> gn;
        std::vector<nn::Relu::Ctx> conv_relu;
        std::vector<nn::Linear::Ctx> fc;
        std::vector<nn::Relu::Ctx> fc_relu;
        nn::Linear::Ctx t_head, r_head;
        nn::Tanh::Ctx t_tanh, r_tanh;
        std::vector<int64_t> volume_shape;
        std::vector<int64_t> flat_shape;
    };

    PoseDecoder(const DecoderConfig& config, int volume_slices, int64_t crop_rows,
                int64_t crop_cols, nn::Rng& rng);

    void collect_params(nn::ParamRefs& out);

    PoseDecoderOutput decode(const CorrelationVolume& volume, Ctx& ctx) const;

    // g_out is d(loss)/d(tx_raw, ty_raw, cos_raw, sin_raw).
    nn::Tensor backward(const Ctx& ctx, const std::array<double, 4>& g_out);

    const DecoderConfig& config() const { return config_; }

  private:
    DecoderConfig config_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::GroupNorm> gns_;
    std::vector<nn::Linear> fcs_;
    nn::Linear t_head_, r_head_;
};

SE2Pose to_relative_pose(const PoseDecoderOutput& out, double t_max);

// 2x2 planar rotation built from the normalized (cos, sin) of the pose angle.
Eigen::Matrix2d pose_to_rotation_matrix(const SE2Pose& pose);

}  // namespace bevo
