#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stda/layers.hpp"
#include "stda/stda_layers.hpp"

namespace stda {

struct NetworkConfig {
  int channels = 16;        // bottleneck width C
  int heads = 4;            // M
  int points = 12;          // K
  int frames = 3;           // T
  int residual_blocks = 3;  // per encoder/decoder stage
  double leaky_slope = 0.1;
  bool use_flow = true;     // false: no motion estimator, zero base offsets
  bool stack = false;       // five-frame cascaded model
  bool stack_shared_weights = true;

  void validate() const;
  AttentionConfig attention() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// Three stride-1/2/2 conv blocks, each followed by residual blocks.
/// [N,3,H,W] -> [N,C,H/4,W/4]; frames share weights through the batch axis.
template <typename T>
class Encoder {
 public:
  Encoder(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg);
  Tensor<T> operator()(const Tensor<T>& frames) const;

  std::vector<Conv2d<T>> convs;
  std::vector<ResidualStage<T>> stages;

 private:
  T slope_;
};

/// Four 3x3 stride-1 convs over the concatenated window features
/// (3C -> C -> C/2 -> C/4 -> 8); the last layer is linear and zero-initialised.
template <typename T>
class MotionEstimator {
 public:
  MotionEstimator(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg);
  FlowSet<T> operator()(const Tensor<T>& features /*[3,C,H,W]*/) const;

  std::vector<Conv2d<T>> convs;

 private:
  T slope_;
};

/// Two stride-2 deconv stages, a stride-1 conv stage and a zero-initialised
/// 3-channel output conv; the result is added to the blurry mid-frame.
template <typename T>
class Decoder {
 public:
  Decoder(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg);
  /// fused [C,H,W], blurry_mid [3,4H,4W] -> [3,4H,4W].
  Tensor<T> operator()(const Tensor<T>& fused, const Tensor<T>& blurry_mid) const;

  std::vector<TransposedConv2d<T>> deconvs;
  Conv2d<T> conv;
  std::vector<ResidualStage<T>> stages;
  Conv2d<T> output;

 private:
  T slope_;
};

template <typename T>
class STDANet {
 public:
  STDANet(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg);

  struct Output {
    Tensor<T> restored;     // [3,H,W], not clamped
    FlowSet<T> flows;       // at H/4 x W/4
    Tensor<T> mma_weights;  // [3HW/16, M, T, K]
    Tensor<T> msa_weights;  // [HW/16, M, T, K]
  };

  /// frames [3,3,H,W] ordered previous, mid, next; H and W divisible by 4.
  Output forward(const Tensor<T>& frames) const;

  Tensor<T> encode(const Tensor<T>& frames) const { return encoder(frames); }
  FlowSet<T> estimate_motion(const Tensor<T>& features) const;
  Tensor<T> decode(const Tensor<T>& fused, const Tensor<T>& blurry_mid) const {
    return decoder(fused, blurry_mid);
  }

  Encoder<T> encoder;
  MotionEstimator<T> motion;
  MMALayer<T> mma;
  MSALayer<T> msa;
  Decoder<T> decoder;

 private:
  NetworkConfig cfg_;
};

/// Owns the parameters of a single-pass or cascaded model.
template <typename T>
class DeblurModel {
 public:
  DeblurModel(const NetworkConfig& cfg, uint64_t seed);

  struct StackOutput {
    std::vector<typename STDANet<T>::Output> stage1;  // windows centred on i-1, i, i+1
    typename STDANet<T>::Output stage2;
  };

  /// frames [3,3,H,W].
  typename STDANet<T>::Output forward(const Tensor<T>& frames) const;
  /// frames [5,3,H,W]; stage 2 consumes the three stage-1 restorations.
  StackOutput forward_stack(const Tensor<T>& frames) const;
  /// Runs the configured mode on a [3,..] or [5,..] window and returns R_i.
  Tensor<T> restore(const Tensor<T>& frames) const;

  const NetworkConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  const STDANet<T>& stage(int index) const;

 private:
  NetworkConfig cfg_;
  ParameterSet<T> params_;
  std::vector<std::unique_ptr<STDANet<T>>> nets_;
};

}  // namespace stda
