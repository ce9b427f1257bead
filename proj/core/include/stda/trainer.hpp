#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "stda/config.hpp"
#include "stda/dataset.hpp"
#include "stda/network.hpp"
#include "stda/optimizer.hpp"

namespace stda {

/// One line of the training log.
struct StepRecord {
  int64_t step = 0;
  double mse = 0, warp = 0, total = 0;
  double psnr = 0, ssim = 0;  // of the clamped training restorations

  std::string format() const;
  static StepRecord parse(const std::string& line);
};

struct SampleLoss {
  Tensor<float> mse, warp, total;
  Tensor<float> restored;  // final restoration [3,H,W]
};

/// Training objective on one window. Single-pass windows have 3 frames; stack
/// windows have 5 and sum the objective over the three stage-1 outputs and the
/// final output, each with its own warp term.
SampleLoss sample_loss(const DeblurModel<float>& model, const FrameWindow& window, const LossConfig& loss,
                       int warp_border);

class Trainer {
 public:
  Trainer(DeblurModel<float>& model, const Dataset& data, const RunConfig& cfg);

  /// One optimiser update over a batch; throws NumericError on a non-finite loss.
  StepRecord step();
  /// Runs the configured iteration count, writing log lines and checkpoints.
  std::vector<StepRecord> run(std::ostream* log = nullptr);
  int64_t steps_done() const { return step_; }

 private:
  FrameWindow draw_window();

  DeblurModel<float>& model_;
  const Dataset& data_;
  RunConfig cfg_;
  Adam<float> adam_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
};

struct SequenceScore {
  std::string name;
  int frames = 0;
  double psnr = 0, ssim = 0;
  double baseline_psnr = 0, baseline_ssim = 0;
};

struct EvalReport {
  std::vector<SequenceScore> sequences;
  SequenceScore aggregate;  // unweighted mean over sequences
};

/// Frame-averaged scores of `restored` and of `blurry` against `sharp`.
SequenceScore score_sequence(const std::string& name, const std::vector<Tensor<float>>& restored,
                             const std::vector<Tensor<float>>& blurry, const std::vector<Tensor<float>>& sharp);
EvalReport aggregate_scores(std::vector<SequenceScore> sequences);

/// Sliding-window restoration of every frame, edge frames repeated. When
/// `attention` is given it receives one [3,h,w] heatmap triple per frame.
std::vector<Tensor<float>> restore_sequence(const DeblurModel<float>& model,
                                            const std::vector<Tensor<float>>& blurry,
                                            std::vector<Tensor<float>>* attention = nullptr);

EvalReport evaluate(const DeblurModel<float>& model, const Dataset& data);

}  // namespace stda
