#pragma once

// Multi-to-multi (MMA) and multi-to-single (MSA) deformable attention layers
// over a window of three frames indexed 0 = previous, 1 = mid, 2 = next.

#include <string>

#include "stda/deform_attn.hpp"
#include "stda/layers.hpp"

namespace stda {

struct AttentionConfig {
  int channels = 16;
  int heads = 4;
  int points = 12;
  int frames = 3;
  double slope = 0.1;

  void validate() const;
};

/// The four adjacent-pair flows of a window, each [2,H,W] at feature scale.
/// `a_to_b` maps pixels of frame a to their position in frame b.
template <typename T>
struct FlowSet {
  Tensor<T> prev_to_mid, mid_to_prev, mid_to_next, next_to_mid;

  static FlowSet zeros(int64_t height, int64_t width);
  /// Channel pairs in the order prev->mid, mid->prev, mid->next, next->mid.
  static FlowSet split(const Tensor<T>& packed /*[8,H,W]*/);
  bool complete() const;
};

/// All six off-diagonal base flows: adjacent pairs directly, the two
/// non-adjacent pairs by composition through the mid frame.
template <typename T>
BaseOffsetMap<T> window_base_offsets(const FlowSet<T>& flows);

template <typename T>
class MMALayer {
 public:
  MMALayer(ParameterSet<T>& params, const std::string& prefix, const AttentionConfig& cfg);

  struct Output {
    Tensor<T> features;  // [3,C,H,W]
    Tensor<T> weights;   // [3HW,M,T,K]
    Tensor<T> offsets;   // [3HW,M,T,K,2] after base offsets
  };

  /// features [3,C,H,W].
  Output forward(const Tensor<T>& features, const FlowSet<T>& flows) const;

  const AttentionConfig& config() const { return cfg_; }

  // One conv on the (2T-1)-map conditioning tensor predicts offsets and
  // logits for all T query frames at once.
  Conv2d<T> offset_head, attention_head, value_proj, output_conv;
  Tensor<T> proj_weight, proj_bias;

 private:
  AttentionConfig cfg_;
};

template <typename T>
class MSALayer {
 public:
  MSALayer(ParameterSet<T>& params, const std::string& prefix, const AttentionConfig& cfg);

  struct Output {
    Tensor<T> fused;      // F^f [C,H,W]
    Tensor<T> projected;  // F^n [C,H,W], the attention output before the last conv
    Tensor<T> weights;    // [HW,M,T,K]
    Tensor<T> offsets;    // [HW,M,T,K,2]
  };

  Output forward(const Tensor<T>& features, const FlowSet<T>& flows) const;

  const AttentionConfig& config() const { return cfg_; }

  Conv2d<T> offset_head, attention_head, value_proj, output_conv;
  Tensor<T> proj_weight, proj_bias;

 private:
  AttentionConfig cfg_;
};

/// Per-frame attention heatmaps [T,H,W] from mid-frame query weights
/// [HW,M,T,K]: heatmap(t)(p) = sum over heads and points / M.
template <typename T>
Tensor<T> export_attention_maps(const Tensor<T>& weights, int64_t height, int64_t width);

}  // namespace stda
