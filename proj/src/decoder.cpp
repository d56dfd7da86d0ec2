#include "bevo/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace bevo {

using nn::Tensor;

void DecoderConfig::validate() const {
    if (!(t_max > 0.0)) throw std::invalid_argument("DecoderConfig: t_max must be positive");
    if (conv_channels.empty()) throw std::invalid_argument("DecoderConfig: need >= 1 conv layer");
    if (hidden_sizes.empty()) throw std::invalid_argument("DecoderConfig: need >= 1 hidden layer");
}

PoseDecoder::PoseDecoder(const DecoderConfig& config, int volume_slices, int64_t crop_rows,
                         int64_t crop_cols, nn::Rng& rng)
    : config_(config) {
    config_.validate();
    int in_ch = volume_slices;
    int64_t h = crop_rows, w = crop_cols;
    for (size_t i = 0; i < config_.conv_channels.size(); ++i) {
        const int out_ch = config_.conv_channels[i];
        convs_.emplace_back("decoder.conv" + std::to_string(i), in_ch, out_ch, 3, 2, 1);
        gns_.emplace_back("decoder.conv" + std::to_string(i) + ".gn",
                          group_count_for(out_ch, config_.gn_groups), out_ch);
        in_ch = out_ch;
        h = (h - 1) / 2 + 1;
        w = (w - 1) / 2 + 1;
    }
    int64_t flat = static_cast<int64_t>(in_ch) * h * w;
    for (size_t i = 0; i < config_.hidden_sizes.size(); ++i) {
        const int out = config_.hidden_sizes[i];
        fcs_.emplace_back("decoder.fc" + std::to_string(i), static_cast<int>(flat), out);
        flat = out;
    }
    t_head_ = nn::Linear("decoder.t_head", static_cast<int>(flat), 2);
    r_head_ = nn::Linear("decoder.r_head", static_cast<int>(flat), 2);

    for (auto& conv : convs_) conv.init_he(rng);
    for (auto& fc : fcs_) fc.init_he(rng);
    t_head_.init_normal(rng, 0.01);
    r_head_.init_normal(rng, 0.01);
    // start at the identity rotation so the (cos, sin) pair never has zero norm
    r_head_.b.value[0] = 1.0;
    r_head_.b.value[1] = 0.0;
}

void PoseDecoder::collect_params(nn::ParamRefs& out) {
    for (auto& conv : convs_) conv.collect(out);
    for (auto& gn : gns_) gn.collect(out);
    for (auto& fc : fcs_) fc.collect(out);
    t_head_.collect(out);
    r_head_.collect(out);
}

PoseDecoderOutput PoseDecoder::decode(const CorrelationVolume& volume, Ctx& ctx) const {
    ctx.conv.resize(convs_.size());
    ctx.gn.resize(gns_.size());
    ctx.conv_relu.resize(convs_.size());
    ctx.fc.resize(fcs_.size());
    ctx.fc_relu.resize(fcs_.size());
    ctx.volume_shape = volume.values.shape();

    Tensor x = volume.values;
    for (size_t i = 0; i < convs_.size(); ++i) {
        x = convs_[i].forward(x, ctx.conv[i]);
        x = gns_[i].forward(x, ctx.gn[i]);
        x = nn::Relu::forward(x, ctx.conv_relu[i]);
    }
    ctx.flat_shape = x.shape();
    x = x.reshaped({x.numel()});
    for (size_t i = 0; i < fcs_.size(); ++i) {
        x = fcs_[i].forward(x, ctx.fc[i]);
        x = nn::Relu::forward(x, ctx.fc_relu[i]);
    }
    Tensor t = nn::Tanh::forward(t_head_.forward(x, ctx.t_head), ctx.t_tanh);
    Tensor r = nn::Tanh::forward(r_head_.forward(x, ctx.r_head), ctx.r_tanh);
    return PoseDecoderOutput{t[0], t[1], r[0], r[1]};
}

Tensor PoseDecoder::backward(const Ctx& ctx, const std::array<double, 4>& g_out) {
    Tensor gt({2}), gr({2});
    gt[0] = g_out[0];
    gt[1] = g_out[1];
    gr[0] = g_out[2];
    gr[1] = g_out[3];
    gt = nn::Tanh::backward(ctx.t_tanh, gt);
    gr = nn::Tanh::backward(ctx.r_tanh, gr);
    Tensor gx = t_head_.backward(ctx.t_head, gt);
    Tensor gx2 = r_head_.backward(ctx.r_head, gr);
    for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += gx2[i];

    for (size_t i = fcs_.size(); i-- > 0;) {
        gx = nn::Relu::backward(ctx.fc_relu[i], gx);
        gx = fcs_[i].backward(ctx.fc[i], gx);
    }
    gx = gx.reshaped(ctx.flat_shape);
    for (size_t i = convs_.size(); i-- > 0;) {
        gx = nn::Relu::backward(ctx.conv_relu[i], gx);
        gx = gns_[i].backward(ctx.gn[i], gx);
        gx = convs_[i].backward(ctx.conv[i], gx);
    }
    return gx;
}

SE2Pose to_relative_pose(const PoseDecoderOutput& out, double t_max) {
    SE2Pose pose;
    pose.tx = t_max * out.tx_raw;
    pose.ty = t_max * out.ty_raw;
    pose.theta = yaw_from_cos_sin(out.cos_raw, out.sin_raw);
    return pose;
}

Eigen::Matrix2d pose_to_rotation_matrix(const SE2Pose& pose) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
}

}  // namespace bevo
