#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace stda::tools;
  CLI::App app{"Spatio-temporal deformable attention video deblurring"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic blurry/sharp dataset");
  synth_cmd->add_option("--spec", synth.spec, "JSON scene file")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth.out, "Dataset root")->required();

  TrainOptions train;
  int64_t iterations = 0;
  auto* train_cmd = app.add_subcommand("train", "Train from a key = value config");
  train_cmd->add_option("--config", train.config, "Run config")->required()->check(CLI::ExistingFile);
  auto* iter_opt = train_cmd->add_option("--iterations", iterations, "Override the iteration count");

  EvalOptions eval;
  std::string eval_config;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--dataset", eval.dataset)->required();
  eval_cmd->add_option("--split", eval.split, "Manifest split (default: all)");
  auto* eval_cfg_opt = eval_cmd->add_option("--config", eval_config, "Run config; must match the checkpoint");

  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "Restore a directory of frames");
  infer_cmd->add_option("--checkpoint", infer.checkpoint)->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--frames", infer.frames, "Directory of PNG frames")->required();
  infer_cmd->add_option("--out", infer.out)->required();
  infer_cmd->add_flag("--stack", infer.stack, "Five-frame cascaded restoration");
  infer_cmd->add_flag("--dump-attention", infer.dump_attention, "Write per-frame attention heatmaps");

  GmacsOptions gmacs;
  std::string gmacs_config;
  auto* gmacs_cmd = app.add_subcommand("gmacs", "Analytic multiply-accumulate count");
  auto* gmacs_cfg_opt = gmacs_cmd->add_option("--config", gmacs_config, "Run config");
  gmacs_cmd->add_option("--height", gmacs.height)->check(CLI::PositiveNumber);
  gmacs_cmd->add_option("--width", gmacs.width)->check(CLI::PositiveNumber);
  gmacs_cmd->add_option("--channels", gmacs.network.channels);
  gmacs_cmd->add_option("--heads", gmacs.network.heads);
  gmacs_cmd->add_option("--points", gmacs.network.points);
  gmacs_cmd->add_option("--residual-blocks", gmacs.network.residual_blocks);
  gmacs_cmd->add_flag("--stack", gmacs.network.stack);
  gmacs_cmd->add_flag("--no-flow", [&](int64_t) { gmacs.network.use_flow = false; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      run_synth(synth, std::cout);
    } else if (*train_cmd) {
      if (*iter_opt) train.iterations = iterations;
      run_train(train, std::cout);
    } else if (*eval_cmd) {
      if (*eval_cfg_opt) eval.config = eval_config;
      run_eval(eval, std::cout);
    } else if (*infer_cmd) {
      run_infer(infer, std::cout);
    } else if (*gmacs_cmd) {
      if (*gmacs_cfg_opt) gmacs.config = gmacs_config;
      run_gmacs(gmacs, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "stda: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
