#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <cstdio>

#include "surgiatm/atm_layer.hpp"
#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"
#include "surgiatm/gradcheck.hpp"
#include "surgiatm/image_io.hpp"
#include "surgiatm/metrics.hpp"
#include "surgiatm/moe_stats.hpp"
#include "surgiatm/parallel.hpp"
#include "surgiatm/resize.hpp"
#include "surgiatm/smoke_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace surgiatm::cli {

namespace {

// ---------------------------------------------------------------- helpers

void require(bool ok, const std::string& message) {
  if (!ok) throw ArgumentError(message);
}

fs::path require_dir(const std::string& dir, const char* what) {
  require(!dir.empty(), std::string(what) + " directory is required");
  return fs::path(dir);
}

/// Refuses to write into (or underneath) any of the input directories.
void require_distinct_output(const fs::path& out, const std::vector<std::string>& inputs) {
  const fs::path o = fs::weakly_canonical(fs::absolute(out));
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    const fs::path i = fs::weakly_canonical(fs::absolute(in));
    const auto [a, b] = std::mismatch(i.begin(), i.end(), o.begin(), o.end());
    if (a == i.end()) {
      throw ArgumentError("output directory " + out.string() + " must be distinct from input " + in);
    }
  }
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

/// Config echo for manifests; the worker count is omitted so outputs do not depend on it.
json manifest_config(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("workers");
  return j;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config"] = manifest_config(cfg);
  m["outputs"] = outputs;
  write_json(dir / "manifest.json", m);
}

ImageBuffer load_frame(const fs::path& path, int resize) {
  ImageBuffer img = load_image(path);
  if (resize > 0 && (img.width() != resize || img.height() != resize)) {
    img = resize_bilinear(img, resize, resize);
  }
  return img;
}

/// Gray maps broadcast to three channels.
Raster as_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img.raster();
  Raster out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, 0);
    }
  }
  return out;
}

ImageBuffer hconcat(const std::vector<const ImageBuffer*>& parts) {
  const int h = parts.front()->height();
  int w = 0;
  for (const auto* p : parts) {
    require(p->height() == h && p->channels() == 3, "triptych panels must share height");
    w += p->width();
  }
  Raster out(w, h, 3);
  int x0 = 0;
  for (const auto* p : parts) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < p->width(); ++x) {
        for (int c = 0; c < 3; ++c) out.at(x0 + x, y, c) = p->at(x, y, c);
      }
    }
    x0 += p->width();
  }
  return ImageBuffer(std::move(out));
}

TrainMode parse_mode(const std::string& s) {
  if (s == "surgiatm") return TrainMode::kSurgiAtm;
  if (s == "direct") return TrainMode::kDirect;
  throw ArgumentError("mode must be 'surgiatm' or 'direct', got '" + s + "'");
}

const char* mode_name(TrainMode m) { return m == TrainMode::kDirect ? "direct" : "surgiatm"; }

TrainLoss parse_loss(const std::string& s) {
  if (s == "l1") return TrainLoss::kL1;
  if (s == "l2") return TrainLoss::kL2;
  throw ArgumentError("loss must be 'l1' or 'l2', got '" + s + "'");
}

TrainInit parse_init(const std::string& s) {
  if (s == "seeded") return TrainInit::kSeeded;
  if (s == "zero") return TrainInit::kZero;
  if (s == "identity") return TrainInit::kIdentity;
  throw ArgumentError("init must be 'seeded', 'zero' or 'identity', got '" + s + "'");
}

SurgiAtmConfig layer_config(const RunConfig& cfg) {
  SurgiAtmConfig atm{cfg.eta, cfg.z, cfg.apply_sigmoid};
  atm.validate();
  return atm;
}

DcpConfig dcp_config(const RunConfig& cfg) {
  DcpConfig dcp{cfg.z, cfg.t0, cfg.airlight_fraction};
  dcp.validate();
  return dcp;
}

int workers_of(const RunConfig& cfg) {
  require(cfg.workers >= 1, "workers must be >= 1");
  return cfg.workers;
}

struct MetricToggles {
  bool ciede2000 = false, psnr = false, rmse = false, ssim = false;
};

MetricToggles metric_toggles(const std::vector<std::string>& names) {
  MetricToggles t;
  for (const auto& n : names) {
    if (n == "ciede2000") {
      t.ciede2000 = true;
    } else if (n == "psnr") {
      t.psnr = true;
    } else if (n == "rmse") {
      t.rmse = true;
    } else if (n == "ssim") {
      t.ssim = true;
    } else {
      throw ArgumentError("unknown metric '" + n + "'");
    }
  }
  return t;
}

MetricReport measure(const ImageBuffer& pred, const ImageBuffer& truth, const MetricToggles& t) {
  require_same_shape(pred, truth, "metrics");
  MetricReport r;
  if (t.ciede2000) r.ciede2000 = ciede2000(pred, truth);
  if (t.psnr) r.psnr = psnr(pred, truth);
  if (t.rmse) r.rmse = rmse(pred, truth);
  if (t.ssim) r.ssim = ssim(pred, truth);
  return r;
}

json report_json(const MetricReport& r, const MetricToggles& t) {
  json j = json::object();
  if (t.ciede2000) j["ciede2000"] = r.ciede2000;
  if (t.psnr) j["psnr"] = r.psnr;
  if (t.rmse) j["rmse"] = r.rmse;
  if (t.ssim) j["ssim"] = r.ssim;
  return j;
}

json metrics_document(const std::vector<std::string>& names, const std::vector<MetricReport>& reports,
                      const MetricToggles& t) {
  json frames = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    json f = report_json(reports[i], t);
    f["name"] = names[i];
    frames.push_back(f);
  }
  return {{"frames", frames}, {"aggregate", report_json(mean_report(reports), t)}};
}

std::string csv_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json laplace_json(const LaplaceParams& p) { return {{"mu", p.mu}, {"b", p.b}}; }
json gauss_json(const GaussParams& p) { return {{"mu", p.mu}, {"sigma", p.sigma}}; }

json fit_report_json(std::span<const double> samples, int js_bins) {
  try {
    const DistributionFitReport r = distribution_fit_report(samples, js_bins);
    return {{"samples", r.samples},      {"laplace", laplace_json(r.laplace)}, {"gauss", gauss_json(r.gauss)},
            {"js_laplace", r.js_laplace}, {"js_gauss", r.js_gauss},            {"laplace_preferred", r.js_laplace < r.js_gauss}};
  } catch (const EstimationError& e) {
    return {{"samples", samples.size()}, {"absent", e.what()}};
  }
}

}  // namespace

// ---------------------------------------------------------------- shared API

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ArgumentError*>(&e) != nullptr) return kExitArgument;
  if (dynamic_cast<const PairingError*>(&e) != nullptr) return kExitPairing;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const FormatError*>(&e) != nullptr) return kExitIo;
  return kExitOther;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::vector<std::string> list_frames(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && is_image_path(entry.path())) names.push_back(entry.path().filename().string());
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> pair_frames(const fs::path& a, const fs::path& b) {
  const auto na = list_frames(a);
  const auto nb = list_frames(b);
  std::vector<std::string> only_a, only_b;
  std::set_difference(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(only_a));
  std::set_difference(nb.begin(), nb.end(), na.begin(), na.end(), std::back_inserter(only_b));
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "unpaired frames between " + a.string() + " and " + b.string() + ":";
    for (const auto& n : only_a) msg += " " + n + " (only in " + a.string() + ")";
    for (const auto& n : only_b) msg += " " + n + " (only in " + b.string() + ")";
    throw PairingError(msg);
  }
  if (na.empty()) throw PairingError("no frames found in " + a.string());
  return na;
}

json model_to_json(const ModelFile& m) {
  json weights = json::array();
  for (const auto& row : m.model.weights) weights.push_back(std::vector<double>(row.begin(), row.end()));
  return {{"mode", mode_name(m.mode)}, {"eta", m.eta}, {"z", m.z}, {"weights", weights}};
}

ModelFile model_from_json(const json& j) {
  try {
    ModelFile m;
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.eta = j.at("eta").get<double>();
    m.z = j.at("z").get<int>();
    const auto& w = j.at("weights");
    if (!w.is_array() || w.size() != kToyOutputs) throw FormatError("model weights must have 3 rows");
    for (std::size_t c = 0; c < kToyOutputs; ++c) {
      const auto row = w[c].get<std::vector<double>>();
      if (row.size() != kToyFeatures) throw FormatError("model weight rows must have 8 entries");
      std::copy(row.begin(), row.end(), m.model.weights[c].begin());
    }
    if (!m.model.finite()) throw FormatError("model weights must be finite");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

std::vector<FramePair> training_pairs(const RunConfig& cfg) {
  std::vector<FramePair> pairs;
  if (!cfg.data_dir.empty()) {
    const fs::path root(cfg.data_dir);
    const auto names = pair_frames(root / "smoky", root / "clean");
    pairs.resize(names.size());
    parallel_for(names.size(), workers_of(cfg), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        pairs[i] = {load_image(root / "smoky" / names[i]), load_image(root / "clean" / names[i])};
      }
    });
    return pairs;
  }
  require(cfg.count >= 1, "count must be >= 1");
  SynthOptions opts{cfg.octaves, cfg.base_frequency, cfg.persistence, cfg.gain_min,
                    cfg.gain_max, cfg.airlight,       cfg.zero_dark_channel};
  for (const auto& s : make_smoke_dataset(cfg.count, cfg.width, cfg.height, cfg.seed, opts)) {
    pairs.push_back({s.smoky, s.clean});
  }
  return pairs;
}

TrainingOutcome run_training(const RunConfig& cfg, std::span<const FramePair> pairs) {
  SurgiAtmConfig atm{cfg.eta, cfg.z, true};
  atm.validate();
  TrainConfig tc;
  tc.mode = parse_mode(cfg.mode);
  tc.loss = parse_loss(cfg.loss);
  tc.init = parse_init(cfg.init);
  tc.learning_rate = cfg.learning_rate.value_or(default_learning_rate(cfg.mode));
  tc.epochs = cfg.epochs;
  tc.seed = cfg.seed;
  tc.workers = workers_of(cfg);
  tc.validate();

  const auto frames = prepare_frames(pairs, atm.z, tc.workers);
  TrainingOutcome out;
  out.learning_rate = tc.learning_rate;
  TrainConfig untrained = tc;
  untrained.epochs = 0;
  out.initial_rmse = mean_rmse(train(std::span<const PreparedFrame>(frames), untrained, atm).model, frames, tc.mode, atm);
  out.result = train(std::span<const PreparedFrame>(frames), tc, atm);
  out.final_rmse = mean_rmse(out.result.model, frames, tc.mode, atm);
  double smoky = 0.0;
  for (const auto& f : frames) smoky += rmse(f.smoky, f.clean);
  out.smoky_rmse = smoky / static_cast<double>(frames.size());
  return out;
}

// ---------------------------------------------------------------- desmoke

int cmd_desmoke(const RunConfig& cfg) {
  const fs::path in_dir = require_dir(cfg.input_dir, "input");
  const fs::path out_dir = require_dir(cfg.output_dir, "output");
  require(cfg.method == "dcp" || cfg.method == "surgiatm", "method must be 'dcp' or 'surgiatm'");
  require(cfg.resize >= 0, "resize must be >= 0");
  const int workers = workers_of(cfg);
  require_distinct_output(out_dir, {cfg.input_dir, cfg.truth_dir, cfg.rho_dir});

  const DcpConfig dcp = dcp_config(cfg);
  SurgiAtmConfig atm = layer_config(cfg);
  std::optional<ModelFile> model;
  if (cfg.method == "surgiatm") {
    if (cfg.rho_source == "constant") {
      if (!cfg.apply_sigmoid) require(cfg.rho_constant >= 0.0 && cfg.rho_constant <= 1.0, "rho_constant must lie in [0,1]");
    } else if (cfg.rho_source == "maps") {
      require_dir(cfg.rho_dir, "rho map");
    } else if (cfg.rho_source == "model") {
      require(!cfg.model_path.empty(), "model_path is required for rho_source=model");
      model = model_from_json(read_json(cfg.model_path));
      require(model->mode == TrainMode::kSurgiAtm, "desmoke needs a model trained in surgiatm mode");
      atm = {model->eta, model->z, true};
      atm.validate();
    } else {
      throw ArgumentError("rho_source must be 'constant', 'maps' or 'model'");
    }
  }
  const MetricToggles toggles = metric_toggles(cfg.metrics);

  const auto names = cfg.truth_dir.empty() ? list_frames(in_dir) : pair_frames(in_dir, cfg.truth_dir);
  if (names.empty()) throw IoError("no frames found in " + in_dir.string());
  if (cfg.method == "surgiatm" && cfg.rho_source == "maps") pair_frames(in_dir, cfg.rho_dir);
  make_dirs(out_dir);

  std::vector<ImageBuffer> outputs(names.size());
  std::vector<MetricReport> reports(names.size());
  parallel_for(names.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ImageBuffer input = load_frame(in_dir / names[i], cfg.resize);
      require_channels(input, 3, "desmoke input");
      ImageBuffer restored;
      if (cfg.method == "dcp") {
        restored = dcp_restore(input, dcp);
      } else if (model) {
        restored = restore(model->model, input, TrainMode::kSurgiAtm, atm);
      } else {
        Raster rho = cfg.rho_source == "maps"
                         ? as_rgb(load_frame(fs::path(cfg.rho_dir) / names[i], cfg.resize))
                         : Raster(input.width(), input.height(), 3, cfg.rho_constant);
        restored = forward(input, rho, atm).display();
      }
      if (!cfg.truth_dir.empty()) {
        reports[i] = measure(restored, load_frame(fs::path(cfg.truth_dir) / names[i], cfg.resize), toggles);
      }
      outputs[i] = std::move(restored);
    }
  });

  std::vector<std::string> written;
  for (std::size_t i = 0; i < names.size(); ++i) {
    save_image(outputs[i], out_dir / names[i]);
    written.push_back(names[i]);
  }
  if (!cfg.truth_dir.empty()) {
    write_json(out_dir / "metrics.json", metrics_document(names, reports, toggles));
    written.push_back("metrics.json");
  }
  write_manifest(out_dir, "desmoke", cfg, written);
  return kExitOk;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const RunConfig& cfg) {
  const fs::path out_dir = require_dir(cfg.output_dir, "output");
  require(cfg.count >= 1, "count must be >= 1");
  require(cfg.width >= 1 && cfg.height >= 1, "frame size must be positive");
  const SynthOptions opts{cfg.octaves, cfg.base_frequency, cfg.persistence, cfg.gain_min,
                          cfg.gain_max, cfg.airlight,       cfg.zero_dark_channel};
  require(cfg.airlight > 0.0 && cfg.airlight <= 1.0, "airlight must lie in (0,1]");
  PerlinSpec{0, cfg.octaves, cfg.base_frequency, cfg.persistence, 1.0}.validate();

  // Per-frame seeds come from one sequential generator, so frames match make_smoke_dataset.
  std::mt19937_64 gen(cfg.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.count));
  for (auto& s : seeds) s = gen();

  std::vector<SmokeSample> samples(seeds.size());
  parallel_for(seeds.size(), workers_of(cfg), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) samples[i] = make_smoke_sample(cfg.width, cfg.height, seeds[i], opts);
  });

  for (const char* sub : {"smoky", "clean", "density"}) make_dirs(out_dir / sub);
  json frames = json::array();
  std::vector<std::string> written;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "frame_%04zu.png", i);
    const auto& s = samples[i];
    save_image(s.smoky, out_dir / "smoky" / name);
    save_image(s.clean, out_dir / "clean" / name);
    save_image(ImageBuffer(Raster(s.density.width(), s.density.height(), 1,
                                  std::vector<double>(s.density.data().begin(), s.density.data().end()))),
               out_dir / "density" / name);
    frames.push_back({{"name", name},
                      {"frame_seed", seeds[i]},
                      {"tissue_seed", s.tissue_seed},
                      {"noise_seed", s.spec.seed},
                      {"gain", s.spec.gain},
                      {"airlight", s.airlight}});
    for (const char* sub : {"smoky/", "clean/", "density/"}) written.push_back(std::string(sub) + name);
  }
  write_json(out_dir / "frames.json", frames);
  written.push_back("frames.json");
  write_manifest(out_dir, "synth", cfg, written);
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

int cmd_analyze(const RunConfig& cfg) {
  const fs::path in_dir = require_dir(cfg.input_dir, "input");
  const fs::path truth_dir = require_dir(cfg.truth_dir, "truth");
  const fs::path out_dir = require_dir(cfg.output_dir, "output");
  require(!cfg.pred_dirs.empty(), "at least one prediction directory is required");
  require(cfg.bins >= 1 && cfg.js_bins >= 1, "bin counts must be >= 1");
  require(cfg.bootstrap >= 0, "bootstrap must be >= 0");
  std::vector<std::string> inputs{cfg.input_dir, cfg.truth_dir};
  inputs.insert(inputs.end(), cfg.pred_dirs.begin(), cfg.pred_dirs.end());
  require_distinct_output(out_dir, inputs);
  const DcpConfig dcp = dcp_config(cfg);
  const int workers = workers_of(cfg);

  std::vector<std::string> methods;
  for (const auto& d : cfg.pred_dirs) {
    std::string name = fs::path(d).lexically_normal().filename().string();
    if (name.empty()) name = fs::path(d).lexically_normal().parent_path().filename().string();
    require(std::find(methods.begin(), methods.end(), name) == methods.end(),
            "prediction directories need distinct names: " + name);
    methods.push_back(name);
  }

  const auto names = pair_frames(in_dir, truth_dir);
  for (const auto& d : cfg.pred_dirs) pair_frames(in_dir, d);

  struct FrameErrors {
    ScalarField dark;
    Raster physics;
    std::vector<Raster> learned;
  };
  std::vector<FrameErrors> per_frame(names.size());
  parallel_for(names.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ImageBuffer input = load_image(in_dir / names[i]);
      const ImageBuffer truth = load_image(truth_dir / names[i]);
      require_channels(input, 3, "analyze input");
      const Airlight a = estimate_airlight(input, dcp.z, dcp.airlight_fraction);
      FrameErrors& fe = per_frame[i];
      fe.dark = dark_channel(input, a, dcp.z);
      fe.physics = error_field(dcp_restore(input, dcp, a), truth);
      for (const auto& d : cfg.pred_dirs) fe.learned.push_back(error_field(load_image(fs::path(d) / names[i]), truth));
    }
  });

  // Ordered merge.
  ErrorBinner physics_bins(cfg.bins);
  std::vector<ErrorBinner> learned_bins(methods.size(), ErrorBinner(cfg.bins));
  std::vector<double> physics_all;
  std::vector<std::vector<double>> learned_all(methods.size());
  for (const auto& fe : per_frame) {
    physics_bins.add_frame(fe.dark, fe.physics);
    physics_all.insert(physics_all.end(), fe.physics.data().begin(), fe.physics.data().end());
    for (std::size_t m = 0; m < methods.size(); ++m) {
      learned_bins[m].add_frame(fe.dark, fe.learned[m]);
      learned_all[m].insert(learned_all[m].end(), fe.learned[m].data().begin(), fe.learned[m].data().end());
    }
  }
  per_frame.clear();

  make_dirs(out_dir);
  std::vector<std::string> written;
  const BinnedErrorStats physics_stats = physics_bins.finalize(cfg.min_bin_samples);

  json report;
  report["frames"] = names.size();
  report["bins"] = cfg.bins;
  report["physics"] = fit_report_json(physics_all, cfg.js_bins);
  report["physics"]["name"] = "dcp";
  json method_reports = json::array();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const BinnedErrorStats stats = learned_bins[m].finalize(cfg.min_bin_samples);
    const GateProfile profile = gate_profile(physics_stats, stats);

    std::string csv = "d_mid,count,mu,b,w_star";
    if (cfg.bootstrap > 0) csv += ",w_star_lo,w_star_hi";
    csv += "\n";
    for (std::size_t k = 0; k < stats.bins.size(); ++k) {
      const ErrorBin& bin = stats.bins[k];
      csv += format_double(bin.midpoint()) + "," + std::to_string(bin.count) + "," +
             csv_cell(bin.laplace ? std::optional(bin.laplace->mu) : std::nullopt) + "," +
             csv_cell(bin.laplace ? std::optional(bin.laplace->b) : std::nullopt) + "," +
             csv_cell(profile.bins[k].w_star);
      if (cfg.bootstrap > 0) {
        std::optional<std::pair<double, double>> ci;
        if (profile.bins[k].w_star) {
          ci = bootstrap_gate_interval(physics_bins.samples(static_cast<int>(k)),
                                       learned_bins[m].samples(static_cast<int>(k)), cfg.bootstrap,
                                       cfg.seed + k);
        }
        csv += "," + csv_cell(ci ? std::optional(ci->first) : std::nullopt) + "," +
               csv_cell(ci ? std::optional(ci->second) : std::nullopt);
      }
      csv += "\n";
    }
    const std::string csv_name = methods[m] + "_profile.csv";
    write_text(out_dir / csv_name, csv);
    written.push_back(csv_name);

    json r = fit_report_json(learned_all[m], cfg.js_bins);
    r["name"] = methods[m];
    r["profile_csv"] = csv_name;
    const auto points = profile.populated();
    r["populated_bins"] = points.size();
    std::vector<double> ds, ws;
    for (const auto& [d, w] : points) {
      ds.push_back(d);
      ws.push_back(w);
    }
    try {
      r["pearson_w_d"] = pearson(ws, ds);
    } catch (const Error& e) {
      r["pearson_w_d"] = nullptr;
      r["pearson_absent"] = e.what();
    }
    json absent = json::array();
    for (const auto& bin : stats.bins) {
      if (!bin.laplace) absent.push_back(bin.midpoint());
    }
    r["absent_bins"] = absent;
    method_reports.push_back(r);
  }
  report["methods"] = method_reports;
  write_json(out_dir / "analysis.json", report);
  written.push_back("analysis.json");
  write_manifest(out_dir, "analyze", cfg, written);
  return kExitOk;
}

// ---------------------------------------------------------------- training

int cmd_train_demo(const RunConfig& cfg) {
  const fs::path out_dir = require_dir(cfg.output_dir, "output");
  require_distinct_output(out_dir, {cfg.data_dir});
  require(cfg.triptychs >= 0, "triptychs must be >= 0");
  const auto pairs = training_pairs(cfg);
  const TrainingOutcome outcome = run_training(cfg, pairs);
  const TrainMode mode = parse_mode(cfg.mode);
  const SurgiAtmConfig atm{cfg.eta, cfg.z, true};

  make_dirs(out_dir / "triptychs");
  std::vector<std::string> written;
  write_json(out_dir / "model.json", model_to_json({outcome.result.model, mode, cfg.eta, cfg.z}));
  written.push_back("model.json");

  const auto smooth = smooth_trace(outcome.result.loss_trace);
  std::string csv = "epoch,loss,smoothed\n";
  for (std::size_t e = 0; e < outcome.result.loss_trace.size(); ++e) {
    csv += std::to_string(e) + "," + format_double(outcome.result.loss_trace[e]) + "," + format_double(smooth[e]) + "\n";
  }
  write_text(out_dir / "loss_trace.csv", csv);
  written.push_back("loss_trace.csv");

  const std::size_t shown = std::min(pairs.size(), static_cast<std::size_t>(cfg.triptychs));
  for (std::size_t i = 0; i < shown; ++i) {
    const ImageBuffer restored = restore(outcome.result.model, pairs[i].smoky, mode, atm);
    char name[64];
    std::snprintf(name, sizeof name, "triptychs/frame_%04zu.png", i);
    save_image(hconcat({&pairs[i].smoky, &restored, &pairs[i].clean}), out_dir / name);
    written.emplace_back(name);
  }

  json report{{"mode", cfg.mode},
              {"loss", cfg.loss},
              {"eta", cfg.eta},
              {"z", cfg.z},
              {"frames", pairs.size()},
              {"epochs", cfg.epochs},
              {"learning_rate", outcome.learning_rate},
              {"initial_loss", outcome.result.loss_trace.front()},
              {"final_loss", outcome.result.loss_trace.back()},
              {"smoky_rmse", outcome.smoky_rmse},
              {"initial_rmse", outcome.initial_rmse},
              {"final_rmse", outcome.final_rmse}};
  write_json(out_dir / "report.json", report);
  written.push_back("report.json");
  write_manifest(out_dir, "train-demo", cfg, written);
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg) {
  const fs::path out_dir = require_dir(cfg.output_dir, "output");
  require_distinct_output(out_dir, {cfg.data_dir});
  require(!cfg.eta_values.empty() && !cfg.z_values.empty(), "ablation grid must not be empty");
  for (double eta : cfg.eta_values) require(eta >= 0.0, "eta values must be >= 0");
  for (int z : cfg.z_values) require(z >= 1 && z % 2 == 1, "z values must be odd and positive");
  const auto pairs = training_pairs(cfg);

  std::string csv = "eta,z,rmse\n";
  for (double eta : cfg.eta_values) {
    for (int z : cfg.z_values) {
      RunConfig cell = cfg;
      cell.eta = eta;
      cell.z = z;
      const TrainingOutcome outcome = run_training(cell, pairs);
      csv += format_double(eta) + "," + std::to_string(z) + "," + format_double(outcome.final_rmse) + "\n";
    }
  }
  make_dirs(out_dir);
  write_text(out_dir / "ablation.csv", csv);
  write_manifest(out_dir, "ablate", cfg, {"ablation.csv"});
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  GradcheckOptions opts;
  opts.seed = cfg.seed;
  opts.sizes = cfg.sizes;
  opts.corrupt_sign = cfg.corrupt_sign;
  require(!opts.sizes.empty(), "gradcheck needs at least one size");
  for (int s : opts.sizes) require(s >= 1, "gradcheck sizes must be positive");
  const GradcheckReport r = run_gradcheck(opts);

  json failures = json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"loss", f.loss},
                        {"size", f.size},
                        {"eta", f.eta},
                        {"z", f.z},
                        {"sigmoid", f.sigmoid},
                        {"x", f.x},
                        {"y", f.y},
                        {"c", f.c},
                        {"analytic", f.analytic},
                        {"numeric", f.numeric},
                        {"rel_error", f.rel_error}});
  }
  const json report{{"passed", r.passed()},
                    {"cases", r.cases},
                    {"checked_l2", r.checked_l2},
                    {"checked_l1", r.checked_l1},
                    {"max_rel_l2", r.max_rel_l2},
                    {"max_rel_l1", r.max_rel_l1},
                    {"vanishing_cases", r.vanishing_cases},
                    {"vanishing_ok", r.vanishing_ok},
                    {"failures", failures}};
  if (!cfg.output_dir.empty()) {
    make_dirs(cfg.output_dir);
    write_json(fs::path(cfg.output_dir) / "gradcheck.json", report);
    write_manifest(cfg.output_dir, "gradcheck", cfg, {"gradcheck.json"});
  }
  out << report.dump(2) << "\n";
  return r.passed() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- metrics

int cmd_metrics(const RunConfig& cfg, std::ostream& out) {
  const fs::path pred_dir = require_dir(cfg.input_dir, "prediction");
  const fs::path truth_dir = require_dir(cfg.truth_dir, "truth");
  const MetricToggles toggles = metric_toggles(cfg.metrics);
  const auto names = pair_frames(pred_dir, truth_dir);
  std::vector<MetricReport> reports(names.size());
  parallel_for(names.size(), workers_of(cfg), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      reports[i] = measure(load_image(pred_dir / names[i]), load_image(truth_dir / names[i]), toggles);
    }
  });
  const json doc = metrics_document(names, reports, toggles);
  if (!cfg.output_dir.empty()) {
    require_distinct_output(cfg.output_dir, {cfg.input_dir, cfg.truth_dir});
    make_dirs(cfg.output_dir);
    write_json(fs::path(cfg.output_dir) / "metrics.json", doc);
    write_manifest(cfg.output_dir, "metrics", cfg, {"metrics.json"});
  } else {
    out << doc.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace surgiatm::cli
