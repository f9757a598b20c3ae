#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace surgiatm::cli {

/// Every setting any subcommand reads. A config file is a flat JSON object
/// whose keys are these field names; command-line flags override file values.
struct RunConfig {
  // Directories and files.
  std::string input_dir;
  std::string output_dir;
  std::string truth_dir;
  std::vector<std::string> pred_dirs;
  std::string rho_dir;
  std::string model_path;
  std::string data_dir;

  // Restoration.
  std::string method = "surgiatm";     ///< dcp | surgiatm
  std::string rho_source = "constant";  ///< constant | maps | model
  double rho_constant = 1.0;
  double eta = 0.1;
  int z = 15;
  bool apply_sigmoid = false;  ///< maps/constants are rho itself unless set
  double t0 = 0.1;
  double airlight_fraction = 0.001;
  int resize = 256;  ///< square side frames are resized to; 0 keeps native size
  std::vector<std::string> metrics{"ciede2000", "psnr", "rmse", "ssim"};

  // Analysis.
  int bins = 20;
  int js_bins = 50;
  std::size_t min_bin_samples = 100;
  int bootstrap = 0;  ///< resamples per bin for W* intervals; 0 disables

  // Synthesis.
  int count = 20;
  int width = 64;
  int height = 64;
  int octaves = 4;
  double base_frequency = 3.0;
  double persistence = 0.5;
  double gain_min = 0.3;
  double gain_max = 0.9;
  double airlight = 0.92;
  bool zero_dark_channel = false;

  // Training.
  std::string mode = "surgiatm";  ///< surgiatm | direct
  std::string loss = "l2";        ///< l1 | l2
  std::string init = "seeded";    ///< seeded | zero | identity
  std::optional<double> learning_rate;  ///< per-mode default when absent
  int epochs = 200;
  int triptychs = 4;
  std::vector<double> eta_values{0.0, 0.1};
  std::vector<int> z_values{5};

  // Gradient check.
  std::vector<int> sizes{8, 16};
  bool corrupt_sign = false;

  std::uint64_t seed = 0;
  int workers = 1;
};

/// Applies a flat JSON object onto `cfg`. Unknown keys or mistyped values -> ArgumentError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

/// Reads and applies a config file; unreadable or malformed files -> IoError / ArgumentError.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// The resolved configuration as a flat JSON object (same keys apply_json accepts).
nlohmann::json to_json(const RunConfig& cfg);

/// Learning rate used when none is configured: tuned per mode for the toy predictor.
double default_learning_rate(const std::string& mode);

}  // namespace surgiatm::cli
