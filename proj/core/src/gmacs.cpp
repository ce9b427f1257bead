#include "stda/gmacs.hpp"

#include <stdexcept>

namespace stda {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::deconv: return "deconv";
    case LayerKind::attention: return "attention";
    case LayerKind::projection: return "projection";
  }
  return "?";
}

int64_t MacReport::total() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.macs;
  return n;
}

int64_t MacReport::subtotal(LayerKind kind) const {
  int64_t n = 0;
  for (const auto& l : layers) {
    if (l.kind == kind) n += l.macs;
  }
  return n;
}

int64_t conv_macs(int64_t cin, int64_t cout, int kernel, int64_t out_h, int64_t out_w) {
  return cout * cin * kernel * kernel * out_h * out_w;
}

int64_t deconv_macs(int64_t cin, int64_t cout, int kernel, int64_t in_h, int64_t in_w) {
  return cin * cout * kernel * kernel * in_h * in_w;
}

int64_t attention_macs(int64_t queries, int64_t heads, int64_t frames, int64_t points,
                       int64_t channels) {
  const int64_t per_head = channels / heads;
  return queries * heads * frames * points * (4 * per_head + per_head);
}

int64_t projection_macs(int64_t queries, int64_t channels) { return queries * channels * channels; }

namespace {

class Counter {
 public:
  explicit Counter(MacReport& r) : report_(r) {}
  void conv(const std::string& name, int64_t cin, int64_t cout, int k, int64_t oh, int64_t ow,
            int64_t repeat = 1) {
    report_.layers.push_back({name, LayerKind::conv, repeat * conv_macs(cin, cout, k, oh, ow)});
  }
  void deconv(const std::string& name, int64_t cin, int64_t cout, int k, int64_t ih, int64_t iw) {
    report_.layers.push_back({name, LayerKind::deconv, deconv_macs(cin, cout, k, ih, iw)});
  }
  void attention(const std::string& name, int64_t q, const NetworkConfig& cfg) {
    report_.layers.push_back({name + ".sampling", LayerKind::attention,
                              attention_macs(q, cfg.heads, cfg.frames, cfg.points, cfg.channels)});
    report_.layers.push_back({name + ".proj", LayerKind::projection, projection_macs(q, cfg.channels)});
  }

 private:
  MacReport& report_;
};

void count_single(Counter& n, const std::string& prefix, const NetworkConfig& cfg, int64_t h, int64_t w) {
  const int64_t c = cfg.channels;
  const int64_t t = cfg.frames;
  const int r = cfg.residual_blocks;

  // Encoder, applied to each of the T frames.
  const int64_t widths[] = {3, c / 4, c / 2, c};
  int64_t eh = h, ew = w;
  for (int b = 0; b < 3; ++b) {
    const int stride = b == 0 ? 1 : 2;
    eh = (eh + 2 - 3) / stride + 1;
    ew = (ew + 2 - 3) / stride + 1;
    const std::string name = prefix + "encoder.block" + std::to_string(b + 1);
    n.conv(name + ".conv", widths[b], widths[b + 1], 3, eh, ew, t);
    for (int i = 0; i < 2 * r; ++i) {
      n.conv(name + ".res" + std::to_string(i / 2) + ".conv" + std::to_string(i % 2 + 1), widths[b + 1],
             widths[b + 1], 3, eh, ew, t);
    }
  }
  const int64_t fh = eh, fw = ew;

  if (cfg.use_flow) {
    const int64_t mw[] = {3 * c, c, c / 2, c / 4, 8};
    for (int i = 0; i < 4; ++i) {
      n.conv(prefix + "motion.conv" + std::to_string(i + 1), mw[i], mw[i + 1], 3, fh, fw);
    }
  }

  const int64_t slots = int64_t{cfg.heads} * cfg.frames * cfg.points;
  const int64_t cond = (2 * t - 1) * c;
  const int64_t hw = fh * fw;
  n.conv(prefix + "mma.offset_head", cond, t * slots * 2, 3, fh, fw);
  n.conv(prefix + "mma.attention_head", cond, t * slots, 3, fh, fw);
  n.conv(prefix + "mma.value_proj", c, c, 3, fh, fw, t);
  n.attention(prefix + "mma", t * hw, cfg);
  n.conv(prefix + "mma.output_conv", c, c, 3, fh, fw, t);

  n.conv(prefix + "msa.offset_head", cond, slots * 2, 3, fh, fw);
  n.conv(prefix + "msa.attention_head", cond, slots, 3, fh, fw);
  n.conv(prefix + "msa.value_proj", c, c, 3, fh, fw, t);
  n.attention(prefix + "msa", hw, cfg);
  n.conv(prefix + "msa.output_conv", c, c, 3, fh, fw);

  n.deconv(prefix + "decoder.block1.deconv", c, c / 2, 4, fh, fw);
  for (int i = 0; i < 2 * r; ++i) {
    n.conv(prefix + "decoder.block1.res" + std::to_string(i / 2) + ".conv" + std::to_string(i % 2 + 1),
           c / 2, c / 2, 3, 2 * fh, 2 * fw);
  }
  n.deconv(prefix + "decoder.block2.deconv", c / 2, c / 4, 4, 2 * fh, 2 * fw);
  for (int i = 0; i < 2 * r; ++i) {
    n.conv(prefix + "decoder.block2.res" + std::to_string(i / 2) + ".conv" + std::to_string(i % 2 + 1),
           c / 4, c / 4, 3, 4 * fh, 4 * fw);
  }
  n.conv(prefix + "decoder.block3.conv", c / 4, c / 4, 3, 4 * fh, 4 * fw);
  for (int i = 0; i < 2 * r; ++i) {
    n.conv(prefix + "decoder.block3.res" + std::to_string(i / 2) + ".conv" + std::to_string(i % 2 + 1),
           c / 4, c / 4, 3, 4 * fh, 4 * fw);
  }
  n.conv(prefix + "decoder.output", c / 4, 3, 3, 4 * fh, 4 * fw);
}

}  // namespace

MacReport count_macs(const NetworkConfig& cfg, int64_t height, int64_t width) {
  cfg.validate();
  if (height % 4 != 0 || width % 4 != 0 || height < 4 || width < 4) {
    throw std::invalid_argument("frame dims must be positive multiples of 4");
  }
  MacReport report;
  Counter counter(report);
  if (!cfg.stack) {
    count_single(counter, "", cfg, height, width);
  } else {
    for (int i = 0; i < 3; ++i) count_single(counter, "stage1.window" + std::to_string(i) + ".", cfg, height, width);
    count_single(counter, "stage2.", cfg, height, width);
  }
  return report;
}

}  // namespace stda
