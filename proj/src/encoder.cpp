#include "bevo/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace bevo {

using nn::Tensor;

void DepthBinSpec::validate() const {
    if (!(d_min > 0.0) || !(d_max > d_min)) {
        throw std::invalid_argument("DepthBinSpec: require 0 < d_min < d_max");
    }
    if (count < 2) throw std::invalid_argument("DepthBinSpec: at least 2 bins");
}

std::vector<double> DepthBinSpec::centers() const {
    validate();
    std::vector<double> c(static_cast<size_t>(count));
    const double step = (d_max - d_min) / static_cast<double>(count - 1);
    for (int k = 0; k < count; ++k) c[static_cast<size_t>(k)] = d_min + step * k;
    return c;
}

int DepthBinSpec::nearest_bin(double depth) const {
    const double step = (d_max - d_min) / static_cast<double>(count - 1);
    const int k = static_cast<int>(std::lround((depth - d_min) / step));
    return std::clamp(k, 0, count - 1);
}

void BEVGridSpec::validate() const {
    if (scope <= 0) throw std::invalid_argument("BEVGridSpec: scope must be positive");
    if (!(resolution > 0.0)) throw std::invalid_argument("BEVGridSpec: resolution must be positive");
    if (!(z_min < z_max)) throw std::invalid_argument("BEVGridSpec: z_min < z_max required");
    if (channels <= 0) throw std::invalid_argument("BEVGridSpec: channels must be positive");
}

int EncoderConfig::total_stride() const {
    int s = 1;
    for (int st : backbone.strides) s *= st;
    return s;
}

void EncoderConfig::validate() const {
    if (backbone.channels.empty() || backbone.channels.size() != backbone.strides.size()) {
        throw std::invalid_argument("EncoderConfig: backbone channels/strides mismatch");
    }
    bins.validate();
    grid.validate();
}

int group_count_for(int channels, int preferred) {
    for (int g = std::min(channels, preferred); g >= 1; --g) {
        if (channels % g == 0) return g;
    }
    return 1;
}

FrustumGeometry make_frustum_geometry(const CameraRig& rig, const DepthBinSpec& bins,
                                      int64_t feat_h, int64_t feat_w, int downsample) {
    rig.intrinsics.validate();
    rig.extrinsics.validate();
    const std::vector<double> centers = bins.centers();
    FrustumGeometry geom;
    geom.ego_points = Tensor({bins.count, feat_h, feat_w, 3});
    for (int k = 0; k < bins.count; ++k) {
        const double depth = centers[static_cast<size_t>(k)];
        for (int64_t h = 0; h < feat_h; ++h) {
            for (int64_t w = 0; w < feat_w; ++w) {
                // frustum point at the center of the feature cell
                const double u = (static_cast<double>(w) + 0.5) * downsample;
                const double v = (static_cast<double>(h) + 0.5) * downsample;
                const Eigen::Vector3d p_cam = pinhole_backproject(u, v, depth, rig.intrinsics);
                const Eigen::Vector3d p_ego = cam_to_ego(p_cam, rig.extrinsics);
                geom.ego_points.at(k, h, w, 0) = p_ego.x();
                geom.ego_points.at(k, h, w, 1) = p_ego.y();
                geom.ego_points.at(k, h, w, 2) = p_ego.z();
            }
        }
    }
    return geom;
}

LiftedFrustum lift_outer_product(const Tensor& channel_features, const Tensor& depth_distribution,
                                 std::shared_ptr<const Tensor> ego_points) {
    if (channel_features.rank() != 3 || depth_distribution.rank() != 3 ||
        channel_features.dim(1) != depth_distribution.dim(1) ||
        channel_features.dim(2) != depth_distribution.dim(2)) {
        throw std::invalid_argument("lift_outer_product: H/W mismatch");
    }
    const int64_t c_ch = channel_features.dim(0);
    const int64_t d = depth_distribution.dim(0);
    const int64_t h = channel_features.dim(1);
    const int64_t w = channel_features.dim(2);
    if (ego_points && (ego_points->dim(0) != d || ego_points->dim(1) != h ||
                       ego_points->dim(2) != w)) {
        throw std::invalid_argument("lift_outer_product: frustum geometry shape mismatch");
    }

    LiftedFrustum out;
    out.features = Tensor({c_ch, d, h, w});
    out.ego_points = std::move(ego_points);
    const int64_t hw = h * w;
    for (int64_t c = 0; c < c_ch; ++c) {
        const double* cf = channel_features.data() + c * hw;
        for (int64_t k = 0; k < d; ++k) {
            const double* df = depth_distribution.data() + k * hw;
            double* ff = out.features.data() + (c * d + k) * hw;
            for (int64_t p = 0; p < hw; ++p) ff[p] = cf[p] * df[p];
        }
    }
    return out;
}

void lift_backward(const Tensor& g_features, const Tensor& channel_features,
                   const Tensor& depth_distribution, Tensor& g_channel, Tensor& g_dist) {
    const int64_t c_ch = channel_features.dim(0);
    const int64_t d = depth_distribution.dim(0);
    const int64_t hw = channel_features.dim(1) * channel_features.dim(2);
    g_channel = Tensor(channel_features.shape());
    g_dist = Tensor(depth_distribution.shape());
    for (int64_t c = 0; c < c_ch; ++c) {
        const double* cf = channel_features.data() + c * hw;
        double* gc = g_channel.data() + c * hw;
        for (int64_t k = 0; k < d; ++k) {
            const double* df = depth_distribution.data() + k * hw;
            const double* gf = g_features.data() + (c * d + k) * hw;
            double* gd = g_dist.data() + k * hw;
            for (int64_t p = 0; p < hw; ++p) {
                gc[p] += gf[p] * df[p];
                gd[p] += gf[p] * cf[p];
            }
        }
    }
}

// Maps an ego point to a flat cell index, or -1 when out of bounds.
static int64_t cell_index(const double* pt, const BEVGridSpec& grid) {
    const double z = pt[2];
    if (z < grid.z_min || z > grid.z_max) return -1;
    const int64_t i = static_cast<int64_t>(std::floor((pt[0] - grid.x_min()) / grid.resolution));
    const int64_t j = static_cast<int64_t>(std::floor((pt[1] - grid.y_min()) / grid.resolution));
    if (i < 0 || i >= grid.scope || j < 0 || j >= grid.scope) return -1;
    return i * grid.scope + j;
}

BEVFeatureMap voxel_pool(const LiftedFrustum& lifted, const BEVGridSpec& grid,
                         PoolDiagnostics* diag) {
    grid.validate();
    if (!lifted.ego_points) throw std::invalid_argument("voxel_pool: missing frustum geometry");
    const Tensor& pts = *lifted.ego_points;
    const int64_t c_ch = lifted.features.dim(0);
    const int64_t npts = pts.dim(0) * pts.dim(1) * pts.dim(2);
    const int64_t hw = pts.dim(1) * pts.dim(2);

    BEVFeatureMap out;
    out.grid = grid;
    out.values = Tensor({c_ch, grid.scope, grid.scope});

    int64_t pooled = 0, dropped = 0;
    const int64_t cells = static_cast<int64_t>(grid.scope) * grid.scope;
    for (int64_t p = 0; p < npts; ++p) {
        const int64_t cell = cell_index(pts.data() + p * 3, grid);
        if (cell < 0) {
            ++dropped;
            continue;
        }
        ++pooled;
        // features layout is [C, D*H*W]; point p is column p
        for (int64_t c = 0; c < c_ch; ++c) {
            out.values[c * cells + cell] += lifted.features[c * npts + p];
        }
    }
    (void)hw;
    if (diag) {
        diag->pooled = pooled;
        diag->dropped = dropped;
    }
    return out;
}

Tensor voxel_pool_backward(const Tensor& g_bev, const Tensor& ego_points, const BEVGridSpec& grid,
                           int64_t channels) {
    const int64_t npts = ego_points.dim(0) * ego_points.dim(1) * ego_points.dim(2);
    Tensor g_features({channels, ego_points.dim(0), ego_points.dim(1), ego_points.dim(2)});
    const int64_t cells = static_cast<int64_t>(grid.scope) * grid.scope;
    for (int64_t p = 0; p < npts; ++p) {
        const int64_t cell = cell_index(ego_points.data() + p * 3, grid);
        if (cell < 0) continue;
        for (int64_t c = 0; c < channels; ++c) {
            g_features[c * npts + p] = g_bev[c * cells + cell];
        }
    }
    return g_features;
}

// ---------------------------------------------------------------- BevEncoder

BevEncoder::BevEncoder(const EncoderConfig& config, nn::Rng& rng) : config_(config) {
    config_.validate();
    int in_ch = 3;
    for (size_t i = 0; i < config_.backbone.channels.size(); ++i) {
        const int out_ch = config_.backbone.channels[i];
        const int stride = config_.backbone.strides[i];
        bb_convs_.emplace_back("encoder.bb" + std::to_string(i), in_ch, out_ch, 3, stride, 1);
        bb_gns_.emplace_back("encoder.bb" + std::to_string(i) + ".gn",
                             group_count_for(out_ch, config_.gn_groups), out_ch);
        in_ch = out_ch;
    }
    const int c = config_.pv_channels();
    se_fc1_ = nn::Linear("encoder.se.fc1", 16, config_.se_hidden);
    se_fc2_ = nn::Linear("encoder.se.fc2", config_.se_hidden, c);
    channel_head_ = nn::Conv2d("encoder.channel_head", c, c, 3, 1, 1);
    depth_head_ = nn::Conv2d("encoder.depth_head", c, config_.bins.count, 3, 1, 1);
    if (config_.grid.channels != c) {
        channel_mix_ = nn::Conv2d("encoder.channel_mix", c, config_.grid.channels, 1, 1, 0,
                                  /*bias=*/false);
    }

    for (auto& conv : bb_convs_) conv.init_he(rng);
    // small weights keep the gate MLP unsaturated on raw camera parameters
    se_fc1_.init_normal(rng, 0.01);
    se_fc2_.init_normal(rng, 0.01);
    channel_head_.init_he(rng);
    depth_head_.init_he(rng);
    if (channel_mix_) channel_mix_->init_he(rng);
}

void BevEncoder::collect_params(nn::ParamRefs& out) {
    for (auto& conv : bb_convs_) conv.collect(out);
    for (auto& gn : bb_gns_) gn.collect(out);
    se_fc1_.collect(out);
    se_fc2_.collect(out);
    channel_head_.collect(out);
    depth_head_.collect(out);
    if (channel_mix_) channel_mix_->collect(out);
}

PVFeatureMap BevEncoder::extract_pv_features(const Tensor& image, Ctx& ctx) const {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw std::invalid_argument("extract_pv_features: expect [3, H, W] image tensor");
    }
    const int stride = config_.total_stride();
    if (image.dim(1) % stride != 0 || image.dim(2) % stride != 0) {
        throw std::invalid_argument("extract_pv_features: image size not divisible by stride " +
                                    std::to_string(stride));
    }
    ctx.bb_conv.resize(bb_convs_.size());
    ctx.bb_gn.resize(bb_gns_.size());
    ctx.bb_relu.resize(bb_convs_.size());
    Tensor x = image;
    for (size_t i = 0; i < bb_convs_.size(); ++i) {
        x = bb_convs_[i].forward(x, ctx.bb_conv[i]);
        x = bb_gns_[i].forward(x, ctx.bb_gn[i]);
        x = nn::Relu::forward(x, ctx.bb_relu[i]);
    }
    return PVFeatureMap{std::move(x), stride};
}

Tensor BevEncoder::camera_param_vector(const CameraRig& rig) {
    Tensor v({16});
    v[0] = rig.intrinsics.fx;
    v[1] = rig.intrinsics.fy;
    v[2] = rig.intrinsics.cx;
    v[3] = rig.intrinsics.cy;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) v[4 + r * 3 + c] = rig.extrinsics.rotation(r, c);
    }
    for (int r = 0; r < 3; ++r) v[13 + r] = rig.extrinsics.translation(r);
    return v;
}

PVFeatureMap BevEncoder::camera_se_modulation(const PVFeatureMap& f, const CameraRig& rig,
                                              Ctx& ctx) const {
    Tensor h = se_fc1_.forward(camera_param_vector(rig), ctx.se_fc1);
    h = nn::Relu::forward(h, ctx.se_relu);
    h = se_fc2_.forward(h, ctx.se_fc2);
    ctx.se_gate = nn::Sigmoid::forward(h, ctx.se_sig);
    ctx.pv_pre_gate = f.values;

    const int64_t c_ch = f.values.dim(0);
    const int64_t hw = f.values.dim(1) * f.values.dim(2);
    PVFeatureMap out;
    out.downsample = f.downsample;
    out.values = Tensor(f.values.shape());
    for (int64_t c = 0; c < c_ch; ++c) {
        const double g = ctx.se_gate[c];
        const double* src = f.values.data() + c * hw;
        double* dst = out.values.data() + c * hw;
        for (int64_t p = 0; p < hw; ++p) dst[p] = g * src[p];
    }
    return out;
}

std::pair<Tensor, Tensor> BevEncoder::predict_channel_and_depth(const PVFeatureMap& f,
                                                                Ctx& ctx) const {
    Tensor channel = channel_head_.forward(f.values, ctx.ch_head);
    Tensor logits = depth_head_.forward(f.values, ctx.d_head);
    Tensor dist = nn::SoftmaxAxis0::forward(logits, ctx.softmax);
    ctx.channel_features = channel;
    ctx.depth_dist = dist;
    return {std::move(channel), std::move(dist)};
}

std::shared_ptr<const Tensor> BevEncoder::frustum_for(const CameraRig& rig, int64_t feat_h,
                                                      int64_t feat_w) const {
    if (frustum_cache_ && frustum_cache_->feat_h == feat_h && frustum_cache_->feat_w == feat_w &&
        frustum_cache_->rig.intrinsics.fx == rig.intrinsics.fx &&
        frustum_cache_->rig.intrinsics.fy == rig.intrinsics.fy &&
        frustum_cache_->rig.intrinsics.cx == rig.intrinsics.cx &&
        frustum_cache_->rig.intrinsics.cy == rig.intrinsics.cy &&
        frustum_cache_->rig.extrinsics.rotation == rig.extrinsics.rotation &&
        frustum_cache_->rig.extrinsics.translation == rig.extrinsics.translation) {
        return frustum_cache_->ego_points;
    }
    FrustumGeometry geom =
        make_frustum_geometry(rig, config_.bins, feat_h, feat_w, config_.total_stride());
    auto pts = std::make_shared<const Tensor>(std::move(geom.ego_points));
    frustum_cache_ = FrustumCacheEntry{rig, feat_h, feat_w, pts};
    return pts;
}

BEVFeatureMap BevEncoder::encode_bev(const Tensor& image, const CameraRig& rig, Ctx& ctx,
                                     PoolDiagnostics* diag) const {
    if (rig.intrinsics.width != image.dim(2) || rig.intrinsics.height != image.dim(1)) {
        throw std::invalid_argument("encode_bev: rig image size does not match input image");
    }
    PVFeatureMap pv = extract_pv_features(image, ctx);
    pv = camera_se_modulation(pv, rig, ctx);
    auto [channel, dist] = predict_channel_and_depth(pv, ctx);
    ctx.ego_points = frustum_for(rig, channel.dim(1), channel.dim(2));
    LiftedFrustum lifted = lift_outer_product(channel, dist, ctx.ego_points);
    BEVFeatureMap bev = voxel_pool(lifted, config_.grid, diag);
    if (channel_mix_) {
        ctx.mix.emplace();
        bev.values = channel_mix_->forward(bev.values, *ctx.mix);
    }
    return bev;
}

void BevEncoder::backward(const Ctx& ctx, const Tensor& g_bev, const Tensor* g_depth_dist_extra) {
    Tensor g_pool = g_bev;
    if (channel_mix_) {
        g_pool = channel_mix_->backward(*ctx.mix, g_bev);
    }
    Tensor g_features =
        voxel_pool_backward(g_pool, *ctx.ego_points, config_.grid, ctx.channel_features.dim(0));

    Tensor g_channel, g_dist;
    lift_backward(g_features, ctx.channel_features, ctx.depth_dist, g_channel, g_dist);
    if (g_depth_dist_extra) {
        for (int64_t i = 0; i < g_dist.numel(); ++i) g_dist[i] += (*g_depth_dist_extra)[i];
    }

    Tensor g_logits = nn::SoftmaxAxis0::backward(ctx.softmax, g_dist);
    Tensor g_pv = depth_head_.backward(ctx.d_head, g_logits);
    Tensor g_pv2 = channel_head_.backward(ctx.ch_head, g_channel);
    for (int64_t i = 0; i < g_pv.numel(); ++i) g_pv[i] += g_pv2[i];

    // SE gate: out = gate[c] * in
    const int64_t c_ch = g_pv.dim(0);
    const int64_t hw = g_pv.dim(1) * g_pv.dim(2);
    Tensor g_gate({c_ch});
    Tensor g_pre(g_pv.shape());
    for (int64_t c = 0; c < c_ch; ++c) {
        const double g = ctx.se_gate[c];
        const double* gp = g_pv.data() + c * hw;
        const double* pre = ctx.pv_pre_gate.data() + c * hw;
        double* dst = g_pre.data() + c * hw;
        double acc = 0.0;
        for (int64_t p = 0; p < hw; ++p) {
            acc += gp[p] * pre[p];
            dst[p] = g * gp[p];
        }
        g_gate[c] = acc;
    }
    Tensor g_se = nn::Sigmoid::backward(ctx.se_sig, g_gate);
    g_se = se_fc2_.backward(ctx.se_fc2, g_se);
    g_se = nn::Relu::backward(ctx.se_relu, g_se);
    (void)se_fc1_.backward(ctx.se_fc1, g_se);  // input is camera constants

    Tensor g = g_pre;
    for (size_t i = bb_convs_.size(); i-- > 0;) {
        g = nn::Relu::backward(ctx.bb_relu[i], g);
        g = bb_gns_[i].backward(ctx.bb_gn[i], g);
        g = bb_convs_[i].backward(ctx.bb_conv[i], g);
    }
}

}  // namespace bevo
