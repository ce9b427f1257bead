#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stda/network.hpp"

namespace stda {

enum class LayerKind { conv, deconv, attention, projection };

const char* to_string(LayerKind kind);

struct LayerMacs {
  std::string name;
  LayerKind kind;
  int64_t macs;
};

struct MacReport {
  std::vector<LayerMacs> layers;

  int64_t total() const;
  int64_t subtotal(LayerKind kind) const;
  double giga() const { return static_cast<double>(total()) * 1e-9; }
};

/// Cout * Cin * k * k * Hout * Wout.
int64_t conv_macs(int64_t cin, int64_t cout, int kernel, int64_t out_h, int64_t out_w);
/// Every input pixel scatters a Cout x k x k patch: Cin * Cout * k * k * Hin * Win.
int64_t deconv_macs(int64_t cin, int64_t cout, int kernel, int64_t in_h, int64_t in_w);
/// Bilinear gather (4 taps) and weighted blend per channel of a head:
/// Q * M * T * K * (4 * C/M + C/M).
int64_t attention_macs(int64_t queries, int64_t heads, int64_t frames, int64_t points,
                       int64_t channels);
/// Per-query C x C output projection.
int64_t projection_macs(int64_t queries, int64_t channels);

/// Analytic multiply-accumulate count of one forward pass on H x W frames.
MacReport count_macs(const NetworkConfig& cfg, int64_t height, int64_t width);

}  // namespace stda
