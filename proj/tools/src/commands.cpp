#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "scene_file.hpp"
#include "stda/checkpoint.hpp"
#include "stda/image_io.hpp"
#include "stda/ops.hpp"

namespace stda::tools {

namespace fs = std::filesystem;

std::vector<ManifestEntry> run_synth(const SynthOptions& opts, std::ostream& out) {
  const auto specs = load_scene_file(opts.spec);
  std::vector<ManifestEntry> entries;
  for (const auto& q : specs) {
    const RenderedSequence rendered = render_sequence(q.scene, q.seed);
    Sequence seq;
    seq.name = q.name;
    seq.split = q.split;
    seq.sharp = rendered.sharp_frames();
    seq.blurry = synthesize_blur(rendered, q.scene.blur_window);
    entries.push_back(write_sequence(opts.out, seq));
    out << q.name << ": " << seq.blurry.size() << " frames, blurry psnr " << entries.back().baseline_psnr << " dB\n";
  }
  write_manifest(opts.out, entries);
  return entries;
}

std::vector<StepRecord> run_train(const TrainOptions& opts, std::ostream& out) {
  RunConfig cfg = RunConfig::load(opts.config);
  if (opts.iterations) {
    cfg.iterations = *opts.iterations;
    cfg.validate();
  }
  if (cfg.dataset_root.empty()) throw std::invalid_argument("config needs dataset_root");
  const Dataset data = Dataset::load(cfg.dataset_root, cfg.split);
  DeblurModel<float> model(cfg.network, cfg.seed);
  Trainer trainer(model, data, cfg);

  std::ofstream log_file;
  if (!cfg.log_file.empty()) {
    if (fs::path(cfg.log_file).has_parent_path()) fs::create_directories(fs::path(cfg.log_file).parent_path());
    log_file.open(cfg.log_file);
    if (!log_file) throw std::runtime_error("cannot write log " + cfg.log_file);
  }
  std::vector<StepRecord> records;
  while (trainer.steps_done() < cfg.iterations) {
    records.push_back(trainer.step());
    const std::string line = records.back().format();
    out << line << '\n';
    if (log_file) log_file << line << '\n' << std::flush;
    const int64_t s = trainer.steps_done();
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && s % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "step_%08lld.stda", static_cast<long long>(s));
      save_checkpoint(fs::path(cfg.checkpoint_dir) / name, model, static_cast<uint64_t>(s));
    }
  }
  if (!cfg.checkpoint_dir.empty()) {
    save_checkpoint(fs::path(cfg.checkpoint_dir) / "final.stda", model, static_cast<uint64_t>(trainer.steps_done()));
  }
  return records;
}

namespace {

std::string fmt_metric(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

DeblurModel<float> stacked_copy(const DeblurModel<float>& single) {
  NetworkConfig cfg = single.config();
  cfg.stack = true;
  cfg.stack_shared_weights = true;
  DeblurModel<float> model(cfg, 0);
  auto& dst = model.params().entries();
  const auto& src = single.params().entries();
  for (size_t i = 0; i < dst.size(); ++i) {
    auto d = dst[i].second.mutable_data();
    auto s = src[i].second.data();
    std::copy(s.begin(), s.end(), d.begin());
  }
  return model;
}

}  // namespace

void print_report(const EvalReport& report, std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %6s %9s %7s %11s %11s\n", "sequence", "frames", "psnr", "ssim",
                "blurry_psnr", "blurry_ssim");
  out << line;
  auto row = [&](const SequenceScore& s) {
    std::snprintf(line, sizeof(line), "%-16s %6d %9s %7s %11s %11s\n", s.name.c_str(), s.frames,
                  fmt_metric(s.psnr).c_str(), fmt_metric(s.ssim).c_str(), fmt_metric(s.baseline_psnr).c_str(),
                  fmt_metric(s.baseline_ssim).c_str());
    out << line;
  };
  for (const auto& s : report.sequences) row(s);
  row(report.aggregate);
}

EvalReport run_eval(const EvalOptions& opts, std::ostream& out) {
  std::optional<NetworkConfig> expected;
  if (opts.config) expected = RunConfig::load(*opts.config).network;
  const DeblurModel<float> model = load_model(opts.checkpoint, expected ? &*expected : nullptr);
  const Dataset data = Dataset::load(opts.dataset, opts.split);
  EvalReport report = evaluate(model, data);
  print_report(report, out);
  return report;
}

void validate_heatmaps(const Tensor<float>& maps, double tolerance) {
  if (maps.ndim() != 3 || maps.dim(0) != 3) throw ShapeError("heatmaps must be [3,h,w]");
  const int64_t hw = maps.dim(1) * maps.dim(2);
  auto v = maps.data();
  for (int64_t p = 0; p < hw; ++p) {
    const double s = static_cast<double>(v[p]) + v[hw + p] + v[2 * hw + p];
    if (std::abs(s - 1.0) > tolerance) {
      throw NumericError("attention heatmaps sum to " + std::to_string(s) + " at pixel " + std::to_string(p));
    }
  }
}

int run_infer(const InferOptions& opts, std::ostream& out) {
  DeblurModel<float> model = load_model(opts.checkpoint);
  if (opts.stack && !model.config().stack) model = stacked_copy(model);
  std::vector<Tensor<float>> blurry;
  for (const auto& p : list_frames(opts.frames)) blurry.push_back(load_image(p));
  std::vector<Tensor<float>> maps;
  const auto restored = restore_sequence(model, blurry, opts.dump_attention ? &maps : nullptr);
  fs::create_directories(opts.out);
  char name[64];
  for (size_t i = 0; i < restored.size(); ++i) {
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    save_image(opts.out / name, restored[i]);
    if (opts.dump_attention) {
      validate_heatmaps(maps[i]);
      for (int64_t t = 0; t < 3; ++t) {
        std::snprintf(name, sizeof(name), "%05zu_frame%lld.png", i, static_cast<long long>(t));
        save_image(opts.out / "attention" / name, select(maps[i], t));
      }
    }
  }
  out << "restored " << restored.size() << " frames into " << opts.out.string() << "\n";
  return static_cast<int>(restored.size());
}

void print_macs(const MacReport& report, std::ostream& out) {
  char line[160];
  for (const auto& l : report.layers) {
    std::snprintf(line, sizeof(line), "%-40s %-10s %14lld\n", l.name.c_str(), to_string(l.kind),
                  static_cast<long long>(l.macs));
    out << line;
  }
  for (LayerKind k : {LayerKind::conv, LayerKind::deconv, LayerKind::attention, LayerKind::projection}) {
    std::snprintf(line, sizeof(line), "subtotal %-31s %-10s %14lld\n", to_string(k), "", 
                  static_cast<long long>(report.subtotal(k)));
    out << line;
  }
  std::snprintf(line, sizeof(line), "total %45lld (%.6f GMACs)\n", static_cast<long long>(report.total()),
                report.giga());
  out << line;
}

MacReport run_gmacs(const GmacsOptions& opts, std::ostream& out) {
  NetworkConfig cfg = opts.network;
  if (opts.config) cfg = RunConfig::load(*opts.config).network;
  cfg.validate();
  const MacReport report = count_macs(cfg, opts.height, opts.width);
  print_macs(report, out);
  return report;
}

}  // namespace stda::tools
