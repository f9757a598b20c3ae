// surgiatm: batch smoke removal, synthesis, analysis and training demos.
//
//   surgiatm desmoke   --input DIR --output DIR [--truth DIR] [--method dcp|surgiatm] ...
//   surgiatm synth     --output DIR [--count N] [--seed S] ...
//   surgiatm analyze   --input DIR --truth DIR --pred DIR [--pred DIR ...] --output DIR
//   surgiatm ablate    --output DIR [--etas 0,0.1] [--zs 5,15] ...
//   surgiatm gradcheck [--seed S] [--sizes 8,16] [--corrupt-sign]
//   surgiatm train-demo --output DIR [--data DIR] [--mode surgiatm|direct] ...
//   surgiatm metrics   --input DIR --truth DIR [--output DIR]
//
// Every subcommand accepts --config FILE (flat JSON with RunConfig field
// names); flags given on the command line override values from the file.
// The default worker count comes from SURGIATM_WORKERS.

#include <functional>
#include <iostream>
#include <memory>
#include <map>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "run_config.hpp"
#include "surgiatm/parallel.hpp"

namespace {

using surgiatm::cli::RunConfig;

/// Flags for one subcommand. Values land in a staging config and are copied
/// onto the resolved config only when the flag was actually given.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config file (flat RunConfig fields)")->check(CLI::ExistingFile);
    add("--workers", &RunConfig::workers, "worker threads (default: SURGIATM_WORKERS or 1)");
    add("--seed", &RunConfig::seed, "random seed");
  }

  template <class T>
  FlagSet& add(const std::string& name, T RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app_->add_option(name, staged_.*member, help);
    if constexpr (std::is_same_v<T, std::vector<std::string>> || std::is_same_v<T, std::vector<double>> ||
                  std::is_same_v<T, std::vector<int>>) {
      opt->delimiter(',');
    }
    copies_.push_back({opt, [this, member](RunConfig& cfg) { cfg.*member = staged_.*member; }});
    return *this;
  }

  FlagSet& flag(const std::string& name, bool RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app_->add_flag(name, staged_.*member, help);
    copies_.push_back({opt, [this, member](RunConfig& cfg) { cfg.*member = staged_.*member; }});
    return *this;
  }

  FlagSet& learning_rate() {
    CLI::Option* opt = app_->add_option("--lr", lr_, "learning rate (default: per mode)");
    copies_.push_back({opt, [this](RunConfig& cfg) { cfg.learning_rate = lr_; }});
    return *this;
  }

  CLI::App* app() const { return app_; }

  /// Defaults, then the config file, then explicit flags.
  RunConfig resolve() const {
    RunConfig cfg;
    cfg.workers = surgiatm::default_workers();
    if (!config_path_.empty()) surgiatm::cli::apply_config_file(cfg, config_path_);
    for (const auto& [opt, copy] : copies_) {
      if (opt->count() > 0) copy(cfg);
    }
    return cfg;
  }

 private:
  CLI::App* app_;
  RunConfig staged_;
  double lr_ = 0.0;
  std::string config_path_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> copies_;
};

void restoration_flags(FlagSet& f) {
  f.add("--eta", &RunConfig::eta, "dark-channel smoothing factor")
      .add("-z,--window", &RunConfig::z, "dark-channel window side (odd)");
}

void synth_flags(FlagSet& f) {
  f.add("--count", &RunConfig::count, "number of frames")
      .add("--width", &RunConfig::width, "frame width")
      .add("--height", &RunConfig::height, "frame height")
      .add("--octaves", &RunConfig::octaves, "noise octaves")
      .add("--frequency", &RunConfig::base_frequency, "base lattice frequency")
      .add("--persistence", &RunConfig::persistence, "octave amplitude ratio")
      .add("--gain-min", &RunConfig::gain_min, "lowest smoke gain")
      .add("--gain-max", &RunConfig::gain_max, "highest smoke gain")
      .add("--airlight", &RunConfig::airlight, "smoke airlight")
      .flag("--zero-dark", &RunConfig::zero_dark_channel, "tissue with a dark channel of exactly 0");
}

void training_flags(FlagSet& f) {
  f.add("--data", &RunConfig::data_dir, "dataset root with smoky/ and clean/ (default: synthesize)")
      .add("--mode", &RunConfig::mode, "surgiatm | direct")
      .add("--loss", &RunConfig::loss, "l1 | l2")
      .add("--init", &RunConfig::init, "seeded | zero | identity")
      .add("--epochs", &RunConfig::epochs, "gradient-descent epochs")
      .learning_rate();
  synth_flags(f);
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = surgiatm::cli;
  CLI::App app{"Physics-guided surgical smoke removal toolkit"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<FlagSet>> sets;
  auto make = [&](const char* name, const char* help) -> FlagSet& {
    sets.push_back(std::make_unique<FlagSet>(app.add_subcommand(name, help)));
    return *sets.back();
  };

  FlagSet& desmoke = make("desmoke", "restore a directory of frames");
  desmoke.add("-i,--input", &RunConfig::input_dir, "input frames")
      .add("-o,--output", &RunConfig::output_dir, "output directory")
      .add("--truth", &RunConfig::truth_dir, "ground-truth frames (enables metrics)")
      .add("--method", &RunConfig::method, "dcp | surgiatm")
      .add("--rho-source", &RunConfig::rho_source, "constant | maps | model")
      .add("--rho", &RunConfig::rho_constant, "constant rho")
      .add("--rho-dir", &RunConfig::rho_dir, "per-frame rho maps")
      .add("--model", &RunConfig::model_path, "trained model file")
      .flag("--sigmoid", &RunConfig::apply_sigmoid, "treat rho inputs as raw logits")
      .add("--t0", &RunConfig::t0, "transmission floor (dcp)")
      .add("--airlight-fraction", &RunConfig::airlight_fraction, "airlight pixel share (dcp)")
      .add("--resize", &RunConfig::resize, "square resize side, 0 keeps native size")
      .add("--metrics", &RunConfig::metrics, "metric list");
  restoration_flags(desmoke);

  FlagSet& synth = make("synth", "generate a paired synthetic smoke dataset");
  synth.add("-o,--output", &RunConfig::output_dir, "output directory");
  synth_flags(synth);

  FlagSet& analyze = make("analyze", "error statistics and gate profiles");
  analyze.add("-i,--input", &RunConfig::input_dir, "smoky input frames")
      .add("--truth", &RunConfig::truth_dir, "ground-truth frames")
      .add("--pred", &RunConfig::pred_dirs, "prediction directory (repeatable)")
      .add("-o,--output", &RunConfig::output_dir, "output directory")
      .add("--bins", &RunConfig::bins, "dark-channel bins")
      .add("--js-bins", &RunConfig::js_bins, "histogram bins for divergences")
      .add("--min-bin-samples", &RunConfig::min_bin_samples, "samples needed for a bin fit")
      .add("--bootstrap", &RunConfig::bootstrap, "bootstrap resamples per bin, 0 disables")
      .add("-z,--window", &RunConfig::z, "dark-channel window side (odd)")
      .add("--t0", &RunConfig::t0, "transmission floor for the physics expert")
      .add("--airlight-fraction", &RunConfig::airlight_fraction, "airlight pixel share");

  FlagSet& ablate = make("ablate", "eta x z grid of toy training runs");
  ablate.add("-o,--output", &RunConfig::output_dir, "output directory")
      .add("--etas", &RunConfig::eta_values, "eta values")
      .add("--zs", &RunConfig::z_values, "window sizes");
  training_flags(ablate);

  FlagSet& gradcheck = make("gradcheck", "finite-difference check of the layer gradients");
  gradcheck.add("--sizes", &RunConfig::sizes, "square frame sides")
      .add("-o,--output", &RunConfig::output_dir, "also write the report here")
      .flag("--corrupt-sign", &RunConfig::corrupt_sign, "flip the analytic gradient (harness self-test)");

  FlagSet& train = make("train-demo", "train the toy predictor and emit traces and triptychs");
  train.add("-o,--output", &RunConfig::output_dir, "output directory")
      .add("--triptychs", &RunConfig::triptychs, "number of triptychs to write");
  restoration_flags(train);
  training_flags(train);

  FlagSet& metrics = make("metrics", "full-reference metrics of predictions against truth");
  metrics.add("-i,--input", &RunConfig::input_dir, "predicted frames")
      .add("--truth", &RunConfig::truth_dir, "ground-truth frames")
      .add("-o,--output", &RunConfig::output_dir, "output directory (default: stdout)")
      .add("--metrics", &RunConfig::metrics, "metric list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitArgument;
  }

  const std::map<std::string, std::function<int(const RunConfig&)>> commands = {
      {"desmoke", cli::cmd_desmoke},
      {"synth", cli::cmd_synth},
      {"analyze", cli::cmd_analyze},
      {"ablate", cli::cmd_ablate},
      {"gradcheck", [](const RunConfig& cfg) { return cli::cmd_gradcheck(cfg, std::cout); }},
      {"train-demo", cli::cmd_train_demo},
      {"metrics", [](const RunConfig& cfg) { return cli::cmd_metrics(cfg, std::cout); }},
  };
  for (const auto& set : sets) {
    if (!set->app()->parsed()) continue;
    const auto& run = commands.at(set->app()->get_name());
    return cli::run_guarded([&] { return run(set->resolve()); }, std::cerr);
  }
  return cli::kExitArgument;
}
