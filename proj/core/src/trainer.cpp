#include "stda/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "stda/checkpoint.hpp"
#include "stda/losses.hpp"
#include "stda/metrics.hpp"
#include "stda/ops.hpp"

namespace stda {

std::string StepRecord::format() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "step=%lld mse=%.9g warp=%.9g total=%.9g psnr=%.9g ssim=%.9g",
                static_cast<long long>(step), mse, warp, total, psnr, ssim);
  return buf;
}

StepRecord StepRecord::parse(const std::string& line) {
  StepRecord r;
  long long step = 0;
  if (std::sscanf(line.c_str(), "step=%lld mse=%lf warp=%lf total=%lf psnr=%lf ssim=%lf", &step, &r.mse, &r.warp,
                  &r.total, &r.psnr, &r.ssim) != 6) {
    throw std::invalid_argument("malformed log line: " + line);
  }
  r.step = step;
  return r;
}

namespace {

struct Objective {
  Tensor<float> mse, warp;
};

Objective stage_objective(const STDANet<float>::Output& out, const Tensor<float>& sharp3, int mid_index,
                          const LossConfig& loss, int warp_border) {
  Objective o;
  o.mse = mse_loss(out.restored, select(sharp3, mid_index));
  // With gamma = 0 the warp term is neither computed nor logged.
  o.warp = loss.gamma == 0.0 ? Tensor<float>::scalar(0.0f)
                             : warp_loss(downsample_quarter(sharp3), out.flows, warp_border);
  return o;
}

Tensor<float> clamped01(const Tensor<float>& x) {
  std::vector<float> v(x.data().begin(), x.data().end());
  for (auto& e : v) e = std::clamp(e, 0.0f, 1.0f);
  return Tensor<float>::from_data(x.shape(), std::move(v));
}

}  // namespace

SampleLoss sample_loss(const DeblurModel<float>& model, const FrameWindow& window, const LossConfig& loss,
                       int warp_border) {
  const Tensor<float> blurry = window.blurry_stack();
  const Tensor<float> sharp = window.sharp_stack();
  SampleLoss s;
  if (!model.config().stack) {
    if (blurry.dim(0) != 3) throw std::invalid_argument("single-pass training needs 3-frame windows");
    const auto out = model.forward(blurry);
    const Objective o = stage_objective(out, sharp, 1, loss, warp_border);
    s.mse = o.mse;
    s.warp = o.warp;
    s.restored = out.restored;
  } else {
    if (blurry.dim(0) != 5) throw std::invalid_argument("stack training needs 5-frame windows");
    const auto out = model.forward_stack(blurry);
    std::vector<Objective> parts;
    for (int64_t j = 0; j < 3; ++j) {
      parts.push_back(stage_objective(out.stage1[j], slice(sharp, j, j + 3), 1, loss, warp_border));
    }
    parts.push_back(stage_objective(out.stage2, slice(sharp, 1, 4), 1, loss, warp_border));
    s.mse = parts[0].mse;
    s.warp = parts[0].warp;
    for (size_t j = 1; j < parts.size(); ++j) {
      s.mse = add(s.mse, parts[j].mse);
      s.warp = add(s.warp, parts[j].warp);
    }
    s.restored = out.stage2.restored;
  }
  s.total = total_loss(s.mse, s.warp, loss);
  return s;
}

Trainer::Trainer(DeblurModel<float>& model, const Dataset& data, const RunConfig& cfg)
    : model_(model), data_(data), cfg_(cfg), adam_(model.params(), cfg.optimizer), rng_(cfg.seed ^ 0x7a11ULL) {
  cfg_.validate();
  if (!(cfg_.network == model.config())) throw std::invalid_argument("run config does not match the model config");
}

FrameWindow Trainer::draw_window() {
  const size_t seq = std::uniform_int_distribution<size_t>(0, data_.sequences().size() - 1)(rng_);
  const int count = static_cast<int>(data_.sequences()[seq].blurry.size());
  const int centre = std::uniform_int_distribution<int>(0, count - 1)(rng_);
  const int length = cfg_.network.stack ? 5 : 3;
  FrameWindow w = data_.window(seq, centre, length);
  const uint64_t aug_seed = rng_();
  if (cfg_.augment) {
    w = augment(w, cfg_.crop_size, aug_seed);
  } else {
    std::mt19937_64 r(aug_seed);
    const auto& f = w.blurry.front();
    AugmentPlan p = draw_augment_plan(f.dim(1), f.dim(2), cfg_.crop_size, r);
    p.flip_horizontal = p.flip_vertical = false;
    p.quarter_turns = 0;
    w = apply_augmentation(w, p);
  }
  return w;
}

StepRecord Trainer::step() {
  model_.params().zero_grad();
  StepRecord r;
  r.step = step_ + 1;
  const float inv = 1.0f / static_cast<float>(cfg_.batch_size);
  for (int b = 0; b < cfg_.batch_size; ++b) {
    const FrameWindow w = draw_window();
    const SampleLoss s = sample_loss(model_, w, cfg_.loss, cfg_.warp_border);
    const double total = s.total.item();
    if (!std::isfinite(total)) {
      throw NumericError("non-finite loss at step " + std::to_string(r.step));
    }
    scale(s.total, inv).backward();
    r.mse += s.mse.item() / cfg_.batch_size;
    r.warp += s.warp.item() / cfg_.batch_size;
    r.total += total / cfg_.batch_size;
    const Tensor<float> restored = clamped01(s.restored);
    const Tensor<float>& target = w.sharp[static_cast<size_t>(w.mid)];
    r.psnr += psnr(restored, target) / cfg_.batch_size;
    r.ssim += ssim(restored, target) / cfg_.batch_size;
  }
  for (const auto& [name, p] : model_.params().entries()) {
    if (p.has_grad()) check_finite<float>(("gradient of " + name).c_str(), p.grad());
  }
  adam_.step();
  ++step_;
  return r;
}

std::vector<StepRecord> Trainer::run(std::ostream* log) {
  std::vector<StepRecord> records;
  auto ckpt_path = [&](int64_t s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "step_%08lld.stda", static_cast<long long>(s));
    return std::filesystem::path(cfg_.checkpoint_dir) / buf;
  };
  while (step_ < cfg_.iterations) {
    records.push_back(step());
    if (log) *log << records.back().format() << '\n' << std::flush;
    if (!cfg_.checkpoint_dir.empty() && cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) {
      save_checkpoint(ckpt_path(step_), model_, static_cast<uint64_t>(step_));
    }
  }
  if (!cfg_.checkpoint_dir.empty()) {
    save_checkpoint(std::filesystem::path(cfg_.checkpoint_dir) / "final.stda", model_, static_cast<uint64_t>(step_));
  }
  return records;
}

SequenceScore score_sequence(const std::string& name, const std::vector<Tensor<float>>& restored,
                             const std::vector<Tensor<float>>& blurry, const std::vector<Tensor<float>>& sharp) {
  if (restored.size() != sharp.size() || blurry.size() != sharp.size() || sharp.empty()) {
    throw std::invalid_argument("score_sequence needs equal, non-zero frame counts");
  }
  SequenceScore s;
  s.name = name;
  s.frames = static_cast<int>(sharp.size());
  for (size_t i = 0; i < sharp.size(); ++i) {
    s.psnr += psnr(restored[i], sharp[i]);
    s.ssim += ssim(restored[i], sharp[i]);
    s.baseline_psnr += psnr(blurry[i], sharp[i]);
    s.baseline_ssim += ssim(blurry[i], sharp[i]);
  }
  const double n = static_cast<double>(sharp.size());
  s.psnr /= n;
  s.ssim /= n;
  s.baseline_psnr /= n;
  s.baseline_ssim /= n;
  return s;
}

EvalReport aggregate_scores(std::vector<SequenceScore> sequences) {
  if (sequences.empty()) throw std::invalid_argument("no sequences to aggregate");
  EvalReport r;
  r.aggregate.name = "mean";
  for (const auto& s : sequences) {
    r.aggregate.frames += s.frames;
    r.aggregate.psnr += s.psnr;
    r.aggregate.ssim += s.ssim;
    r.aggregate.baseline_psnr += s.baseline_psnr;
    r.aggregate.baseline_ssim += s.baseline_ssim;
  }
  const double n = static_cast<double>(sequences.size());
  r.aggregate.psnr /= n;
  r.aggregate.ssim /= n;
  r.aggregate.baseline_psnr /= n;
  r.aggregate.baseline_ssim /= n;
  r.sequences = std::move(sequences);
  return r;
}

std::vector<Tensor<float>> restore_sequence(const DeblurModel<float>& model,
                                            const std::vector<Tensor<float>>& blurry,
                                            std::vector<Tensor<float>>* attention) {
  const bool stacked = model.config().stack;
  const int length = stacked ? 5 : 3;
  if (static_cast<int>(blurry.size()) < length) {
    throw std::invalid_argument("need at least " + std::to_string(length) + " frames, got " +
                                std::to_string(blurry.size()));
  }
  NoGradGuard guard;
  std::vector<Tensor<float>> out;
  const int n = static_cast<int>(blurry.size());
  for (int i = 0; i < n; ++i) {
    std::vector<Tensor<float>> frames;
    for (int k : clamped_window(n, i, length)) frames.push_back(blurry[static_cast<size_t>(k)]);
    const Tensor<float> window = stack(frames);
    STDANet<float>::Output result = stacked ? model.forward_stack(window).stage2 : model.forward(window);
    out.push_back(clamped01(result.restored));
    if (attention) {
      const int64_t h = window.dim(2) / 4, w = window.dim(3) / 4;
      attention->push_back(export_attention_maps(result.msa_weights, h, w));
    }
  }
  return out;
}

EvalReport evaluate(const DeblurModel<float>& model, const Dataset& data) {
  std::vector<SequenceScore> scores;
  for (const auto& seq : data.sequences()) {
    scores.push_back(score_sequence(seq.name, restore_sequence(model, seq.blurry), seq.blurry, seq.sharp));
  }
  return aggregate_scores(std::move(scores));
}

}  // namespace stda
