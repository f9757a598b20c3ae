#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "run_config.hpp"
#include "surgiatm/toy_train.hpp"

namespace surgiatm::cli {

/// Process exit codes, one per error class.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitArgument = 2,
  kExitPairing = 3,
  kExitIo = 4,
  kExitCheckFailed = 5,
};

/// Maps an exception to its exit-code class.
int exit_code_for(const std::exception& e) noexcept;

/// Runs `command`, reporting any exception on `err` and translating it to an exit code.
int run_guarded(const std::function<int()>& command, std::ostream& err);

// Subcommands. Each returns kExitOk or kExitCheckFailed and throws on error.
int cmd_desmoke(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);
int cmd_analyze(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out);
int cmd_train_demo(const RunConfig& cfg);
int cmd_metrics(const RunConfig& cfg, std::ostream& out);

/// Sorted filenames of the readable frames in `dir`. Missing directory -> IoError.
std::vector<std::string> list_frames(const std::filesystem::path& dir);

/// Filenames present in both directories; any name present in only one -> PairingError listing them.
std::vector<std::string> pair_frames(const std::filesystem::path& a, const std::filesystem::path& b);

/// Model file round trip (mode, layer settings and weights).
struct ModelFile {
  ToyPredictor model;
  TrainMode mode = TrainMode::kSurgiAtm;
  double eta = 0.1;
  int z = 15;
};
nlohmann::json model_to_json(const ModelFile& m);
ModelFile model_from_json(const nlohmann::json& j);

/// Outcome of one train-demo run, shared by train-demo and ablate.
struct TrainingOutcome {
  TrainResult result;
  double learning_rate = 0.0;
  double initial_rmse = 0.0;  ///< mean RMSE of the untrained predictor
  double final_rmse = 0.0;    ///< mean RMSE of the trained predictor
  double smoky_rmse = 0.0;    ///< mean RMSE of the unrestored frames
};

/// Training pairs from `data_dir` (smoky/ and clean/ subdirectories) or synthesized from the config.
std::vector<FramePair> training_pairs(const RunConfig& cfg);

TrainingOutcome run_training(const RunConfig& cfg, std::span<const FramePair> pairs);

/// Shortest round-trip decimal form of a double, as written to CSV files.
std::string format_double(double v);

}  // namespace surgiatm::cli
