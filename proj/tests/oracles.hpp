#pragma once

// Brute-force reference implementations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stda/ops.hpp"
#include "support.hpp"

namespace stda::test {

struct Instance {
  int64_t h, w, c, m, t, k, query_blocks;
  Tensor<double> weights, offsets, values, proj_w, proj_b;
};

inline Instance random_instance(std::mt19937_64& rng, int64_t h, int64_t w, int64_t c, int64_t m, int64_t k,
                         int64_t query_blocks, bool requires_grad = false) {
  Instance in{h, w, c, m, 3, k, query_blocks, {}, {}, {}, {}, {}};
  const int64_t q = query_blocks * h * w;
  in.weights = softmax(random_tensor({q, m, 3, k}, rng, -2, 2, false), 2).detach();
  in.weights.set_requires_grad(requires_grad);
  in.offsets = random_tensor({q, m, 3, k, 2}, rng, -2, 2, requires_grad);
  in.values = random_tensor({3, h, w, c}, rng, -1, 1, requires_grad);
  in.proj_w = random_tensor({c, c}, rng, -1, 1, requires_grad);
  in.proj_b = random_tensor({c}, rng, -1, 1, requires_grad);
  return in;
}

// Plain clamped bilinear lookup of channel ch of frame t in [T,H,W,C] values.
inline double oracle_sample(const Tensor<double>& v, int64_t t, int64_t ch, double x, double y) {
  const int64_t h = v.dim(1), w = v.dim(2);
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int64_t x0 = static_cast<int64_t>(std::floor(x)), y0 = static_cast<int64_t>(std::floor(y));
  const int64_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double a = x - x0, b = y - y0;
  return (1 - a) * (1 - b) * v.at({t, y0, x0, ch}) + a * (1 - b) * v.at({t, y0, x1, ch}) +
         (1 - a) * b * v.at({t, y1, x0, ch}) + a * b * v.at({t, y1, x1, ch});
}

inline std::vector<double> oracle(const Instance& in, bool project) {
  const int64_t q_count = in.query_blocks * in.h * in.w, hd = in.c / in.m;
  std::vector<double> pre(static_cast<size_t>(q_count * in.c), 0.0);
  for (int64_t q = 0; q < q_count; ++q) {
    const int64_t pix = q % (in.h * in.w);
    const double qx = static_cast<double>(pix % in.w), qy = static_cast<double>(pix / in.w);
    for (int64_t m = 0; m < in.m; ++m) {
      for (int64_t t = 0; t < in.t; ++t) {
        for (int64_t k = 0; k < in.k; ++k) {
          const double a = in.weights.at({q, m, t, k});
          const double px = qx + in.offsets.at({q, m, t, k, 0}), py = qy + in.offsets.at({q, m, t, k, 1});
          for (int64_t j = 0; j < hd; ++j) {
            const int64_t ch = m * hd + j;
            pre[q * in.c + ch] += a * oracle_sample(in.values, t, ch, px, py);
          }
        }
      }
    }
  }
  if (!project) return pre;
  std::vector<double> out(pre.size());
  for (int64_t q = 0; q < q_count; ++q) {
    for (int64_t o = 0; o < in.c; ++o) {
      double s = in.proj_b.at({o});
      for (int64_t i = 0; i < in.c; ++i) s += in.proj_w.at({o, i}) * pre[q * in.c + i];
      out[q * in.c + o] = s;
    }
  }
  return out;
}


inline double ssim_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  const int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  double g[11], gs = 0;
  for (int i = 0; i < 11; ++i) gs += g[i] = std::exp(-((i - 5) * (i - 5)) / (2 * 1.5 * 1.5));
  for (double& v : g) v /= gs;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  int64_t count = 0;
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t y = 0; y + 11 <= h; ++y) {
      for (int64_t x = 0; x + 11 <= w; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int u = 0; u < 11; ++u) {
          for (int v = 0; v < 11; ++v) {
            const double wt = g[u] * g[v];
            const double pa = a.at({ch, y + u, x + v}), pb = b.at({ch, y + u, x + v});
            ma += wt * pa;
            mb += wt * pb;
            saa += wt * pa * pa;
            sbb += wt * pb * pb;
            sab += wt * pa * pb;
          }
        }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace stda::test
