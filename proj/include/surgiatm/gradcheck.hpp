#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surgiatm/atm_layer.hpp"

namespace surgiatm {

/// Finite-difference verification of the SurgiATM backward passes.
struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::vector<int> sizes{8, 16};        ///< square frame sides
  std::vector<double> etas{0.0, 0.1, 1.0};
  std::vector<int> windows{1, 3, 15};
  int cases_per_combo = 1;              ///< random (I, rho) draws per (size, eta, z)
  double step = 1e-5;                   ///< central-difference step on the raw output
  double l2_tolerance = 1e-5;
  double l1_tolerance = 1e-4;
  double l1_kink_margin = 1e-3;         ///< L1 checks skip |J - Jhat| below this
  bool corrupt_sign = false;            ///< self-test hook: flips the analytic gradient
};

struct GradcheckFailure {
  std::string loss;  ///< "l1" or "l2"
  int size = 0;
  double eta = 0.0;
  int z = 0;
  bool sigmoid = false;
  int x = 0;
  int y = 0;
  int c = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradcheckReport {
  std::size_t cases = 0;
  std::size_t checked_l2 = 0;
  std::size_t checked_l1 = 0;
  double max_rel_l2 = 0.0;
  double max_rel_l1 = 0.0;
  std::vector<GradcheckFailure> failures;
  /// Configurations with eta = 0 and an all-black input, whose L2 gradient
  /// must vanish identically; counted separately.
  std::size_t vanishing_cases = 0;
  bool vanishing_ok = true;

  bool passed() const noexcept { return failures.empty() && vanishing_ok; }
};

/// |a - n| / max(|a|, |n|, kRelFloor).
double gradient_rel_error(double analytic, double numeric) noexcept;
inline constexpr double kRelFloor = 1e-6;

/// One randomized configuration; appends to `report`.
void gradcheck_case(const ImageBuffer& input, const Raster& rho_raw, const ImageBuffer& target,
                    const SurgiAtmConfig& cfg, const GradcheckOptions& opts, GradcheckReport& report);

/// Sweeps sizes x etas x windows x sigmoid on/off with seeded random frames,
/// then runs the documented vanishing-gradient case.
GradcheckReport run_gradcheck(const GradcheckOptions& opts);

}  // namespace surgiatm
