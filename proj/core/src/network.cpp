#include "stda/network.hpp"

#include <stdexcept>

namespace stda {

void NetworkConfig::validate() const {
  if (channels < 4 || channels % 4 != 0) throw std::invalid_argument("channels must be a positive multiple of 4");
  if (heads < 1 || channels % heads != 0) throw std::invalid_argument("channels must be divisible by heads");
  if (points < 1) throw std::invalid_argument("points must be positive");
  if (frames != 3) throw std::invalid_argument("frames must be 3");
  if (residual_blocks < 0) throw std::invalid_argument("residual_blocks must be non-negative");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw std::invalid_argument("leaky_slope must lie in (0,1)");
}

AttentionConfig NetworkConfig::attention() const {
  return AttentionConfig{channels, heads, points, frames, leaky_slope};
}

template <typename T>
Encoder<T>::Encoder(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg)
    : slope_(static_cast<T>(cfg.leaky_slope)) {
  const int64_t widths[] = {3, cfg.channels / 4, cfg.channels / 2, cfg.channels};
  const int strides[] = {1, 2, 2};
  for (int b = 0; b < 3; ++b) {
    const std::string name = prefix + ".block" + std::to_string(b + 1);
    convs.push_back(Conv2d<T>::make(params, name + ".conv", widths[b], widths[b + 1], 3, strides[b], 1,
                                    cfg.leaky_slope));
    stages.push_back(make_residual_stage(params, name, widths[b + 1], cfg.residual_blocks, cfg.leaky_slope));
  }
}

template <typename T>
Tensor<T> Encoder<T>::operator()(const Tensor<T>& frames) const {
  Tensor<T> x = frames;
  for (size_t b = 0; b < convs.size(); ++b) x = stages[b](leaky_relu(convs[b](x), slope_));
  return x;
}

template <typename T>
MotionEstimator<T>::MotionEstimator(ParameterSet<T>& params, const std::string& prefix,
                                    const NetworkConfig& cfg)
    : slope_(static_cast<T>(cfg.leaky_slope)) {
  const int64_t c = cfg.channels;
  const int64_t widths[] = {3 * c, c, c / 2, c / 4, 8};
  for (int i = 0; i < 4; ++i) {
    convs.push_back(Conv2d<T>::make(params, prefix + ".conv" + std::to_string(i + 1), widths[i],
                                    widths[i + 1], 3, 1, 1, cfg.leaky_slope,
                                    i == 3 ? InitMode::zeros : InitMode::kaiming));
  }
}

template <typename T>
FlowSet<T> MotionEstimator<T>::operator()(const Tensor<T>& features) const {
  if (features.ndim() != 4 || features.dim(0) != 3) throw ShapeError("motion estimator expects [3,C,H,W]");
  const int64_t c = features.dim(1), h = features.dim(2), w = features.dim(3);
  Tensor<T> x = reshape(features, {3 * c, h, w});
  for (size_t i = 0; i < convs.size(); ++i) {
    x = convs[i](x);
    if (i + 1 < convs.size()) x = leaky_relu(x, slope_);
  }
  return FlowSet<T>::split(x);
}

template <typename T>
Decoder<T>::Decoder(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg)
    : slope_(static_cast<T>(cfg.leaky_slope)) {
  const int64_t c = cfg.channels;
  deconvs.push_back(TransposedConv2d<T>::make(params, prefix + ".block1.deconv", c, c / 2, 4, 2, 1,
                                              cfg.leaky_slope));
  stages.push_back(make_residual_stage(params, prefix + ".block1", c / 2, cfg.residual_blocks, cfg.leaky_slope));
  deconvs.push_back(TransposedConv2d<T>::make(params, prefix + ".block2.deconv", c / 2, c / 4, 4, 2, 1,
                                              cfg.leaky_slope));
  stages.push_back(make_residual_stage(params, prefix + ".block2", c / 4, cfg.residual_blocks, cfg.leaky_slope));
  conv = Conv2d<T>::make(params, prefix + ".block3.conv", c / 4, c / 4, 3, 1, 1, cfg.leaky_slope);
  stages.push_back(make_residual_stage(params, prefix + ".block3", c / 4, cfg.residual_blocks, cfg.leaky_slope));
  output = Conv2d<T>::make(params, prefix + ".output", c / 4, 3, 3, 1, 1, cfg.leaky_slope, InitMode::zeros);
}

template <typename T>
Tensor<T> Decoder<T>::operator()(const Tensor<T>& fused, const Tensor<T>& blurry_mid) const {
  Tensor<T> x = stages[0](leaky_relu(deconvs[0](fused), slope_));
  x = stages[1](leaky_relu(deconvs[1](x), slope_));
  x = stages[2](leaky_relu(conv(x), slope_));
  x = output(x);
  if (x.shape() != blurry_mid.shape()) {
    throw ShapeError("decoder output " + shape_str(x.shape()) + " does not match frame " +
                     shape_str(blurry_mid.shape()));
  }
  return add(x, blurry_mid);
}

template <typename T>
STDANet<T>::STDANet(ParameterSet<T>& params, const std::string& prefix, const NetworkConfig& cfg)
    : encoder(params, prefix + "encoder", cfg),
      motion(params, prefix + "motion", cfg),
      mma(params, prefix + "mma", cfg.attention()),
      msa(params, prefix + "msa", cfg.attention()),
      decoder(params, prefix + "decoder", cfg),
      cfg_(cfg) {}

template <typename T>
FlowSet<T> STDANet<T>::estimate_motion(const Tensor<T>& features) const {
  if (!cfg_.use_flow) return FlowSet<T>::zeros(features.dim(2), features.dim(3));
  return motion(features);
}

template <typename T>
typename STDANet<T>::Output STDANet<T>::forward(const Tensor<T>& frames) const {
  if (frames.ndim() != 4 || frames.dim(0) != 3 || frames.dim(1) != 3) {
    throw ShapeError("STDANet expects a [3,3,H,W] window, got " + shape_str(frames.shape()));
  }
  if (frames.dim(2) % 4 != 0 || frames.dim(3) % 4 != 0) {
    throw ShapeError("frame dims must be divisible by 4");
  }
  Output out;
  const Tensor<T> features = encoder(frames);
  out.flows = estimate_motion(features);
  auto coarse = mma.forward(features, out.flows);
  auto fine = msa.forward(coarse.features, out.flows);
  out.mma_weights = coarse.weights;
  out.msa_weights = fine.weights;
  out.restored = decoder(fine.fused, select(frames, 1));
  return out;
}

template <typename T>
DeblurModel<T>::DeblurModel(const NetworkConfig& cfg, uint64_t seed) : cfg_(cfg), params_(seed) {
  cfg.validate();
  nets_.push_back(std::make_unique<STDANet<T>>(params_, "", cfg));
  if (cfg.stack && !cfg.stack_shared_weights) {
    nets_.push_back(std::make_unique<STDANet<T>>(params_, "stage2.", cfg));
  }
}

template <typename T>
const STDANet<T>& DeblurModel<T>::stage(int index) const {
  if (index == 0 || nets_.size() == 1) return *nets_[0];
  return *nets_[1];
}

template <typename T>
typename STDANet<T>::Output DeblurModel<T>::forward(const Tensor<T>& frames) const {
  return nets_[0]->forward(frames);
}

template <typename T>
typename DeblurModel<T>::StackOutput DeblurModel<T>::forward_stack(const Tensor<T>& frames) const {
  if (frames.ndim() != 4 || frames.dim(0) != 5) {
    throw ShapeError("stacked model expects a [5,3,H,W] window, got " + shape_str(frames.shape()));
  }
  StackOutput out;
  std::vector<Tensor<T>> partial;
  for (int64_t start = 0; start < 3; ++start) {
    out.stage1.push_back(stage(0).forward(slice(frames, start, start + 3)));
    partial.push_back(out.stage1.back().restored);
  }
  out.stage2 = stage(1).forward(stack(partial));
  return out;
}

template <typename T>
Tensor<T> DeblurModel<T>::restore(const Tensor<T>& frames) const {
  if (cfg_.stack) return forward_stack(frames).stage2.restored;
  return forward(frames).restored;
}

#define STDA_INSTANTIATE_NETWORK(T) \
  template class Encoder<T>;        \
  template class MotionEstimator<T>; \
  template class Decoder<T>;        \
  template class STDANet<T>;        \
  template class DeblurModel<T>;

STDA_INSTANTIATE_NETWORK(float)
STDA_INSTANTIATE_NETWORK(double)

}  // namespace stda
