#pragma once

#include "bevo/checkpoint.hpp"
#include "bevo/decoder.hpp"
#include "bevo/encoder.hpp"

namespace bevo {

struct ModelConfig {
    EncoderConfig encoder;
    CropSpec crop;
    CorrelationSpec correlation;
    DecoderConfig decoder;

    void validate() const;
};

// Full two-frame pipeline: encode both frames with shared weights, crop,
// correlate, decode a 3-DoF relative pose.
class OdometryModel {
  public:
    struct PairCtx {
        BevEncoder::Ctx enc_a, enc_b;
        nn::Tensor crop_a, crop_b;
        PoseDecoder::Ctx dec;
    };

    OdometryModel(const ModelConfig& config, uint64_t seed);

    const ModelConfig& config() const { return config_; }
    nn::ParamRefs params();
    int64_t param_count();

    PoseDecoderOutput forward_pair(const nn::Tensor& img_a, const nn::Tensor& img_b,
                                   const CameraRig& rig, PairCtx& ctx) const;

    // g_out = d(loss)/d(raw outputs); optional depth-distribution gradients
    // feed the depth-supervision path of each frame's encoder pass.
    void backward_pair(const PairCtx& ctx, const std::array<double, 4>& g_out,
                       const nn::Tensor* g_depth_a = nullptr,
                       const nn::Tensor* g_depth_b = nullptr);

    SE2Pose predict(const nn::Tensor& img_a, const nn::Tensor& img_b, const CameraRig& rig) const;

    NamedTensors export_params();
    void import_params(const NamedTensors& tensors);  // throws on name/shape mismatch

    BevEncoder& encoder() { return encoder_; }
    PoseDecoder& decoder() { return decoder_; }

  private:
    ModelConfig config_;
    nn::Rng init_rng_;  // consumed once, during parameter initialization
    BevEncoder encoder_;
    PoseDecoder decoder_;
};

}  // namespace bevo
