#include "stda/stda_layers.hpp"

#include <array>

#include "stda/sampling.hpp"

namespace stda {

void AttentionConfig::validate() const {
  if (channels < 1 || heads < 1 || points < 1) throw std::invalid_argument("attention dims must be positive");
  if (channels % heads != 0) throw std::invalid_argument("channels must be divisible by heads");
  if (frames != 3) throw std::invalid_argument("attention layers operate on 3-frame windows");
}

template <typename T>
FlowSet<T> FlowSet<T>::zeros(int64_t height, int64_t width) {
  FlowSet f;
  f.prev_to_mid = Tensor<T>::zeros({2, height, width});
  f.mid_to_prev = Tensor<T>::zeros({2, height, width});
  f.mid_to_next = Tensor<T>::zeros({2, height, width});
  f.next_to_mid = Tensor<T>::zeros({2, height, width});
  return f;
}

template <typename T>
FlowSet<T> FlowSet<T>::split(const Tensor<T>& packed) {
  if (packed.ndim() != 3 || packed.dim(0) != 8) throw ShapeError("FlowSet::split expects [8,H,W]");
  FlowSet f;
  f.prev_to_mid = slice(packed, 0, 2);
  f.mid_to_prev = slice(packed, 2, 4);
  f.mid_to_next = slice(packed, 4, 6);
  f.next_to_mid = slice(packed, 6, 8);
  return f;
}

template <typename T>
bool FlowSet<T>::complete() const {
  return prev_to_mid.defined() && mid_to_prev.defined() && mid_to_next.defined() &&
         next_to_mid.defined();
}

template <typename T>
BaseOffsetMap<T> window_base_offsets(const FlowSet<T>& flows) {
  if (!flows.complete()) throw std::invalid_argument("flow set incomplete");
  const int64_t h = flows.prev_to_mid.dim(1), w = flows.prev_to_mid.dim(2);
  BaseOffsetMap<T> base(3, h, w);
  base.set(0, 1, flows.prev_to_mid);
  base.set(1, 0, flows.mid_to_prev);
  base.set(1, 2, flows.mid_to_next);
  base.set(2, 1, flows.next_to_mid);
  base.set(0, 2, compose_flows(flows.prev_to_mid, flows.mid_to_next));
  base.set(2, 0, compose_flows(flows.next_to_mid, flows.mid_to_prev));
  return base;
}

namespace {

// Conditioning tensor: the three frame maps followed by the two side maps
// warped onto the mid frame, [5C,H,W].
template <typename T>
Tensor<T> mid_aligned_stack(const Tensor<T>& features, const FlowSet<T>& flows) {
  const Tensor<T> prev = select(features, 0);
  const Tensor<T> mid = select(features, 1);
  const Tensor<T> next = select(features, 2);
  return concat<T>({prev, mid, next, backward_warp(prev, flows.mid_to_prev),
                    backward_warp(next, flows.mid_to_next)});
}

// Head conv output [B*per, H, W] (B query blocks) -> [B*H*W, dims...].
template <typename T>
Tensor<T> channels_to_queries(const Tensor<T>& head_out, int64_t blocks, Shape per_query) {
  const int64_t h = head_out.dim(1), w = head_out.dim(2);
  const int64_t per = shape_numel(per_query);
  Tensor<T> q = transpose_last2(reshape(head_out, {blocks, per, h * w}));
  Shape s{blocks * h * w};
  s.insert(s.end(), per_query.begin(), per_query.end());
  return reshape(q, std::move(s));
}

// [T,C,H,W] -> [T,H,W,C].
template <typename T>
Tensor<T> to_channels_last(const Tensor<T>& x) {
  const int64_t t = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  return reshape(transpose_last2(reshape(x, {t, c, h * w})), {t, h, w, c});
}

template <typename T>
void check_window(const Tensor<T>& features, const FlowSet<T>& flows, const AttentionConfig& cfg) {
  if (features.ndim() != 4 || features.dim(0) != 3 || features.dim(1) != cfg.channels) {
    throw ShapeError("attention layer expects [3,C,H,W] features with C = " +
                     std::to_string(cfg.channels) + ", got " + shape_str(features.shape()));
  }
  if (!flows.complete()) throw std::invalid_argument("flow set incomplete");
  const Shape fs{2, features.dim(2), features.dim(3)};
  for (const auto* f : {&flows.prev_to_mid, &flows.mid_to_prev, &flows.mid_to_next, &flows.next_to_mid}) {
    if (f->shape() != fs) throw ShapeError("flow dims do not match feature dims");
  }
}

// Point k of head m starts at the k-th cell of a square spiral around the base
// position, (0,0), (1,0), (1,1), (0,1), (-1,1), ..., turned by m quarter turns.
template <typename T>
void spread_offset_bias(Conv2d<T>& head, int64_t blocks, const AttentionConfig& cfg) {
  std::vector<std::array<int, 2>> spiral;
  int x = 0, y = 0, dx = 1, dy = 0, len = 1, steps = 0, turns = 0;
  for (int k = 0; k < cfg.points; ++k) {
    spiral.push_back({x, y});
    x += dx;
    y += dy;
    if (++steps == len) {
      steps = 0;
      std::swap(dx, dy);
      dx = -dx;
      if (++turns % 2 == 0) ++len;
    }
  }
  auto b = head.bias.mutable_data();
  int64_t i = 0;
  for (int64_t q = 0; q < blocks; ++q) {
    for (int m = 0; m < cfg.heads; ++m) {
      for (int t = 0; t < cfg.frames; ++t) {
        for (int k = 0; k < cfg.points; ++k) {
          auto [px, py] = spiral[static_cast<size_t>(k)];
          for (int r = 0; r < m % 4; ++r) {
            std::swap(px, py);
            px = -px;
          }
          b[i++] = static_cast<T>(px);
          b[i++] = static_cast<T>(py);
        }
      }
    }
  }
}

template <typename T>
void make_projection(ParameterSet<T>& params, const std::string& prefix, int64_t c,
                     Tensor<T>& weight, Tensor<T>& bias) {
  weight = params.create(prefix + ".proj.weight", {c, c}, kaiming_bound(c, 1.0));
  bias = params.create(prefix + ".proj.bias", {c}, 0.0);
}

}  // namespace

template <typename T>
MMALayer<T>::MMALayer(ParameterSet<T>& params, const std::string& prefix, const AttentionConfig& cfg)
    : cfg_(cfg) {
  cfg.validate();
  const int64_t c = cfg.channels;
  const int64_t slots = int64_t{cfg.frames} * cfg.heads * cfg.frames * cfg.points;
  const int64_t cond = (2 * cfg.frames - 1) * c;
  offset_head = Conv2d<T>::make(params, prefix + ".offset_head", cond, slots * 2, 3, 1, 1, cfg.slope,
                                InitMode::zeros);
  spread_offset_bias(offset_head, cfg.frames, cfg);
  attention_head = Conv2d<T>::make(params, prefix + ".attention_head", cond, slots, 3, 1, 1, cfg.slope,
                                   InitMode::zeros);
  value_proj = Conv2d<T>::make(params, prefix + ".value_proj", c, c, 3, 1, 1, cfg.slope, InitMode::linear);
  make_projection(params, prefix, c, proj_weight, proj_bias);
  output_conv = Conv2d<T>::make(params, prefix + ".output_conv", c, c, 3, 1, 1, cfg.slope, InitMode::linear);
}

template <typename T>
typename MMALayer<T>::Output MMALayer<T>::forward(const Tensor<T>& features,
                                                   const FlowSet<T>& flows) const {
  check_window(features, flows, cfg_);
  const int64_t c = cfg_.channels, h = features.dim(2), w = features.dim(3);
  const int64_t m = cfg_.heads, t = cfg_.frames, k = cfg_.points;

  const Tensor<T> cond = mid_aligned_stack(features, flows);
  const Tensor<T> raw_offsets = channels_to_queries(offset_head(cond), t, {m, t, k, 2});
  const Tensor<T> logits = channels_to_queries(attention_head(cond), t, {m, t, k});
  Output out;
  out.weights = softmax(logits, 2);
  const Tensor<T> values = to_channels_last(value_proj(features));

  const std::array<int, 3> query_frames{0, 1, 2};
  out.offsets = phi(raw_offsets, window_base_offsets(flows), std::span<const int>(query_frames));
  const Tensor<T> z = deformable_attention(out.weights, out.offsets, values, proj_weight, proj_bias);
  // [3HW, C] -> [3, C, H, W], frame-major.
  const Tensor<T> per_frame = reshape(transpose_last2(reshape(z, {t, h * w, c})), {t, c, h, w});
  out.features = output_conv(per_frame);
  return out;
}

template <typename T>
MSALayer<T>::MSALayer(ParameterSet<T>& params, const std::string& prefix, const AttentionConfig& cfg)
    : cfg_(cfg) {
  cfg.validate();
  const int64_t c = cfg.channels;
  const int64_t slots = int64_t{cfg.heads} * cfg.frames * cfg.points;
  const int64_t cond = (2 * cfg.frames - 1) * c;
  offset_head = Conv2d<T>::make(params, prefix + ".offset_head", cond, slots * 2, 3, 1, 1, cfg.slope,
                                InitMode::zeros);
  spread_offset_bias(offset_head, 1, cfg);
  attention_head = Conv2d<T>::make(params, prefix + ".attention_head", cond, slots, 3, 1, 1, cfg.slope,
                                   InitMode::zeros);
  value_proj = Conv2d<T>::make(params, prefix + ".value_proj", c, c, 3, 1, 1, cfg.slope, InitMode::linear);
  make_projection(params, prefix, c, proj_weight, proj_bias);
  output_conv = Conv2d<T>::make(params, prefix + ".output_conv", c, c, 3, 1, 1, cfg.slope, InitMode::linear);
}

template <typename T>
typename MSALayer<T>::Output MSALayer<T>::forward(const Tensor<T>& features,
                                                   const FlowSet<T>& flows) const {
  check_window(features, flows, cfg_);
  const int64_t c = cfg_.channels, h = features.dim(2), w = features.dim(3);
  const int64_t m = cfg_.heads, t = cfg_.frames, k = cfg_.points;

  const Tensor<T> cond = mid_aligned_stack(features, flows);
  const Tensor<T> raw_offsets = channels_to_queries(offset_head(cond), 1, {m, t, k, 2});
  const Tensor<T> logits = channels_to_queries(attention_head(cond), 1, {m, t, k});
  Output out;
  out.weights = softmax(logits, 2);
  const Tensor<T> values = to_channels_last(value_proj(features));

  BaseOffsetMap<T> base(3, h, w);
  base.set(1, 0, flows.mid_to_prev);
  base.set(1, 2, flows.mid_to_next);
  const std::array<int, 1> query_frames{1};
  out.offsets = phi(raw_offsets, base, std::span<const int>(query_frames));
  const Tensor<T> z = deformable_attention(out.weights, out.offsets, values, proj_weight, proj_bias);
  out.projected = reshape(transpose_last2(z), {c, h, w});
  out.fused = output_conv(out.projected);
  return out;
}

template <typename T>
Tensor<T> export_attention_maps(const Tensor<T>& weights, int64_t height, int64_t width) {
  if (weights.ndim() != 4 || weights.dim(0) != height * width) {
    throw ShapeError("export_attention_maps expects mid-frame weights [HW,M,T,K]");
  }
  const int64_t hw = weights.dim(0), m = weights.dim(1), t = weights.dim(2), k = weights.dim(3);
  auto a = weights.data();
  std::vector<T> maps(static_cast<size_t>(t * hw), T(0));
  for (int64_t p = 0; p < hw; ++p) {
    for (int64_t ti = 0; ti < t; ++ti) {
      double s = 0;
      for (int64_t mi = 0; mi < m; ++mi) {
        for (int64_t ki = 0; ki < k; ++ki) s += static_cast<double>(a[((p * m + mi) * t + ti) * k + ki]);
      }
      maps[ti * hw + p] = static_cast<T>(s / static_cast<double>(m));
    }
  }
  return Tensor<T>::from_data({t, height, width}, std::move(maps));
}

#define STDA_INSTANTIATE_STDA(T)                                             \
  template struct FlowSet<T>;                                                \
  template BaseOffsetMap<T> window_base_offsets(const FlowSet<T>&);          \
  template class MMALayer<T>;                                                \
  template class MSALayer<T>;                                                \
  template Tensor<T> export_attention_maps(const Tensor<T>&, int64_t, int64_t);

STDA_INSTANTIATE_STDA(float)
STDA_INSTANTIATE_STDA(double)

}  // namespace stda
