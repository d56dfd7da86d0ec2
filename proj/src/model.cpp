#include "bevo/model.hpp"

#include <stdexcept>

#include "bevo/errors.hpp"

namespace bevo {

using nn::Tensor;

void ModelConfig::validate() const {
    encoder.validate();
    crop.validate(encoder.grid.scope);
    correlation.validate();
    decoder.validate();
}

namespace {
ModelConfig validated(ModelConfig config) {
    config.validate();
    return config;
}
}  // namespace

OdometryModel::OdometryModel(const ModelConfig& config, uint64_t seed)
    : config_(validated(config)),
      init_rng_(seed),
      encoder_(config_.encoder, init_rng_),
      decoder_(config_.decoder, config_.correlation.num_shifts(), config_.crop.rows,
               config_.crop.cols, init_rng_) {}

nn::ParamRefs OdometryModel::params() {
    nn::ParamRefs refs;
    encoder_.collect_params(refs);
    decoder_.collect_params(refs);
    return refs;
}

int64_t OdometryModel::param_count() {
    int64_t n = 0;
    for (auto* p : params()) n += p->value.numel();
    return n;
}

PoseDecoderOutput OdometryModel::forward_pair(const Tensor& img_a, const Tensor& img_b,
                                              const CameraRig& rig, PairCtx& ctx) const {
    BEVFeatureMap bev_a = encoder_.encode_bev(img_a, rig, ctx.enc_a);
    BEVFeatureMap bev_b = encoder_.encode_bev(img_b, rig, ctx.enc_b);
    ctx.crop_a = crop_bev(bev_a, config_.crop);
    ctx.crop_b = crop_bev(bev_b, config_.crop);
    CorrelationVolume vol = correlation_volume(ctx.crop_a, ctx.crop_b, config_.correlation);
    return decoder_.decode(vol, ctx.dec);
}

void OdometryModel::backward_pair(const PairCtx& ctx, const std::array<double, 4>& g_out,
                                  const Tensor* g_depth_a, const Tensor* g_depth_b) {
    Tensor g_vol = decoder_.backward(ctx.dec, g_out);
    Tensor g_crop_a, g_crop_b;
    correlation_backward(g_vol, ctx.crop_a, ctx.crop_b, config_.correlation, g_crop_a, g_crop_b);
    Tensor g_bev_a = crop_bev_backward(g_crop_a, config_.encoder.grid, config_.crop);
    Tensor g_bev_b = crop_bev_backward(g_crop_b, config_.encoder.grid, config_.crop);
    // reverse order of the forward passes
    encoder_.backward(ctx.enc_b, g_bev_b, g_depth_b);
    encoder_.backward(ctx.enc_a, g_bev_a, g_depth_a);
}

SE2Pose OdometryModel::predict(const Tensor& img_a, const Tensor& img_b,
                               const CameraRig& rig) const {
    PairCtx ctx;
    const PoseDecoderOutput out = forward_pair(img_a, img_b, rig, ctx);
    return to_relative_pose(out, config_.decoder.t_max);
}

NamedTensors OdometryModel::export_params() {
    NamedTensors out;
    for (auto* p : params()) out.items.emplace_back(p->name, p->value);
    return out;
}

void OdometryModel::import_params(const NamedTensors& tensors) {
    for (auto* p : params()) {
        const Tensor* t = tensors.find(p->name);
        if (t == nullptr) {
            throw DataError("checkpoint incompatible with model config: missing " + p->name);
        }
        if (t->shape() != p->value.shape()) {
            throw DataError("checkpoint incompatible with model config: shape mismatch for " +
                            p->name);
        }
        p->value = *t;
    }
}

}  // namespace bevo
