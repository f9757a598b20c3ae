#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "surgiatm/errors.hpp"

namespace surgiatm::cli {

namespace {

using Field = std::function<void(RunConfig&, const nlohmann::json&)>;
using Getter = std::function<nlohmann::json(const RunConfig&)>;

struct FieldAccess {
  Field set;
  Getter get;
};

template <class T>
FieldAccess field(T RunConfig::*member) {
  return {[member](RunConfig& cfg, const nlohmann::json& v) { cfg.*member = v.get<T>(); },
          [member](const RunConfig& cfg) { return nlohmann::json(cfg.*member); }};
}

const std::map<std::string, FieldAccess>& fields() {
  static const std::map<std::string, FieldAccess> table = {
      {"input_dir", field(&RunConfig::input_dir)},
      {"output_dir", field(&RunConfig::output_dir)},
      {"truth_dir", field(&RunConfig::truth_dir)},
      {"pred_dirs", field(&RunConfig::pred_dirs)},
      {"rho_dir", field(&RunConfig::rho_dir)},
      {"model_path", field(&RunConfig::model_path)},
      {"data_dir", field(&RunConfig::data_dir)},
      {"method", field(&RunConfig::method)},
      {"rho_source", field(&RunConfig::rho_source)},
      {"rho_constant", field(&RunConfig::rho_constant)},
      {"eta", field(&RunConfig::eta)},
      {"z", field(&RunConfig::z)},
      {"apply_sigmoid", field(&RunConfig::apply_sigmoid)},
      {"t0", field(&RunConfig::t0)},
      {"airlight_fraction", field(&RunConfig::airlight_fraction)},
      {"resize", field(&RunConfig::resize)},
      {"metrics", field(&RunConfig::metrics)},
      {"bins", field(&RunConfig::bins)},
      {"js_bins", field(&RunConfig::js_bins)},
      {"min_bin_samples", field(&RunConfig::min_bin_samples)},
      {"bootstrap", field(&RunConfig::bootstrap)},
      {"count", field(&RunConfig::count)},
      {"width", field(&RunConfig::width)},
      {"height", field(&RunConfig::height)},
      {"octaves", field(&RunConfig::octaves)},
      {"base_frequency", field(&RunConfig::base_frequency)},
      {"persistence", field(&RunConfig::persistence)},
      {"gain_min", field(&RunConfig::gain_min)},
      {"gain_max", field(&RunConfig::gain_max)},
      {"airlight", field(&RunConfig::airlight)},
      {"zero_dark_channel", field(&RunConfig::zero_dark_channel)},
      {"mode", field(&RunConfig::mode)},
      {"loss", field(&RunConfig::loss)},
      {"init", field(&RunConfig::init)},
      {"learning_rate",
       {[](RunConfig& cfg, const nlohmann::json& v) {
          if (v.is_null()) {
            cfg.learning_rate.reset();
          } else {
            cfg.learning_rate = v.get<double>();
          }
        },
        [](const RunConfig& cfg) {
          return cfg.learning_rate ? nlohmann::json(*cfg.learning_rate) : nlohmann::json(nullptr);
        }}},
      {"epochs", field(&RunConfig::epochs)},
      {"triptychs", field(&RunConfig::triptychs)},
      {"eta_values", field(&RunConfig::eta_values)},
      {"z_values", field(&RunConfig::z_values)},
      {"sizes", field(&RunConfig::sizes)},
      {"corrupt_sign", field(&RunConfig::corrupt_sign)},
      {"seed", field(&RunConfig::seed)},
      {"workers", field(&RunConfig::workers)},
  };
  return table;
}

}  // namespace

void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ArgumentError("unknown config key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("config key '" + key + "': " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_json(cfg, j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, access] : fields()) j[key] = access.get(cfg);
  return j;
}

double default_learning_rate(const std::string& mode) { return mode == "direct" ? 1.0 : 100.0; }

}  // namespace surgiatm::cli
