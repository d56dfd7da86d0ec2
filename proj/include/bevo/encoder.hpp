#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bevo/geometry.hpp"
#include "bevo/nn/layers.hpp"

namespace bevo {

struct DepthBinSpec {
    double d_min = 1.0;
    double d_max = 40.0;
    int count = 48;

    void validate() const;
    std::vector<double> centers() const;  // uniformly spaced, inclusive of both ends
    int nearest_bin(double depth) const;
};

struct BEVGridSpec {
    int scope = 128;          // cells per side (square)
    double resolution = 0.8;  // meters per cell
    double z_min = -2.0;
    double z_max = 4.0;
    int channels = 64;  // C_B

    void validate() const;
    double x_min() const { return -0.5 * scope * resolution; }
    double y_min() const { return -0.5 * scope * resolution; }
};

struct PVFeatureMap {
    nn::Tensor values;  // [C, H, W]
    int downsample = 1;
};

// Ego-frame coordinates for every (bin, pixel) frustum point, cached per
// (rig, bins, feature-map shape).
struct FrustumGeometry {
    nn::Tensor ego_points;  // [D, H, W, 3]
};

struct LiftedFrustum {
    nn::Tensor features;  // [C, D, H, W]
    std::shared_ptr<const nn::Tensor> ego_points;
};

struct BEVFeatureMap {
    nn::Tensor values;  // [C_B, scope, scope]; axis 1 = x (forward), axis 2 = y (left)
    BEVGridSpec grid;
};

struct PoolDiagnostics {
    int64_t pooled = 0;
    int64_t dropped = 0;
};

FrustumGeometry make_frustum_geometry(const CameraRig& rig, const DepthBinSpec& bins,
                                      int64_t feat_h, int64_t feat_w, int downsample);

// features[c,k,h,w] = channel[c,h,w] * dist[k,h,w]
LiftedFrustum lift_outer_product(const nn::Tensor& channel_features,
                                 const nn::Tensor& depth_distribution,
                                 std::shared_ptr<const nn::Tensor> ego_points);
void lift_backward(const nn::Tensor& g_features, const nn::Tensor& channel_features,
                   const nn::Tensor& depth_distribution, nn::Tensor& g_channel,
                   nn::Tensor& g_dist);

BEVFeatureMap voxel_pool(const LiftedFrustum& lifted, const BEVGridSpec& grid,
                         PoolDiagnostics* diag = nullptr);
nn::Tensor voxel_pool_backward(const nn::Tensor& g_bev, const nn::Tensor& ego_points,
                               const BEVGridSpec& grid, int64_t channels);

struct BackboneConfig {
    std::vector<int> channels{32, 64, 64, 64};
    std::vector<int> strides{2, 2, 2, 1};
};

struct EncoderConfig {
    BackboneConfig backbone;
    int se_hidden = 32;
    DepthBinSpec bins;
    BEVGridSpec grid;
    int gn_groups = 8;

    int pv_channels() const { return backbone.channels.back(); }
    int total_stride() const;
    void validate() const;
};

// Monocular image -> BEV feature map: conv backbone, camera-conditioned
// channel gating, channel/depth heads, outer-product lift, voxel pooling.
class BevEncoder {
  public:
    struct Ctx {
        std::vector<nn::Conv2d::Ctx> bb_conv;
        std::vector<nn::GroupNorm::Ctx> bb_gn;
        std::vector<nn::Relu::Ctx> bb_relu;
        nn::Linear::Ctx se_fc1, se_fc2;
        nn::Relu::Ctx se_relu;
        nn::Sigmoid::Ctx se_sig;
        nn::Tensor se_gate;      // [C]
        nn::Tensor pv_pre_gate;  // backbone output before gating
        nn::Conv2d::Ctx ch_head, d_head;
        nn::SoftmaxAxis0::Ctx softmax;
        nn::Tensor channel_features;  // [C, H, W]
        nn::Tensor depth_dist;        // [D, H, W]
        std::shared_ptr<const nn::Tensor> ego_points;
        std::optional<nn::Conv2d::Ctx> mix;
    };

    BevEncoder(const EncoderConfig& config, nn::Rng& rng);

    void collect_params(nn::ParamRefs& out);

    // Individual pipeline stages (each usable on its own in tests).
    PVFeatureMap extract_pv_features(const nn::Tensor& image, Ctx& ctx) const;
    PVFeatureMap camera_se_modulation(const PVFeatureMap& f, const CameraRig& rig, Ctx& ctx) const;
    std::pair<nn::Tensor, nn::Tensor> predict_channel_and_depth(const PVFeatureMap& f,
                                                                Ctx& ctx) const;

    BEVFeatureMap encode_bev(const nn::Tensor& image, const CameraRig& rig, Ctx& ctx,
                             PoolDiagnostics* diag = nullptr) const;

    // g_depth_dist_extra, when given, is added to the gradient arriving at the
    // depth-distribution output (depth-supervision path).
    void backward(const Ctx& ctx, const nn::Tensor& g_bev,
                  const nn::Tensor* g_depth_dist_extra = nullptr);

    const EncoderConfig& config() const { return config_; }

    static nn::Tensor camera_param_vector(const CameraRig& rig);  // [16]

  private:
    std::shared_ptr<const nn::Tensor> frustum_for(const CameraRig& rig, int64_t feat_h,
                                                  int64_t feat_w) const;

    EncoderConfig config_;
    std::vector<nn::Conv2d> bb_convs_;
    std::vector<nn::GroupNorm> bb_gns_;
    nn::Linear se_fc1_, se_fc2_;
    nn::Conv2d channel_head_;
    nn::Conv2d depth_head_;
    std::optional<nn::Conv2d> channel_mix_;  // 1x1, bias-free, only when C_B != C

    struct FrustumCacheEntry {
        CameraRig rig;
        int64_t feat_h = 0, feat_w = 0;
        std::shared_ptr<const nn::Tensor> ego_points;
    };
    mutable std::optional<FrustumCacheEntry> frustum_cache_;
};

// Largest divisor of `channels` that is <= `preferred`.
int group_count_for(int channels, int preferred);

}  // namespace bevo
