#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "surgiatm/atm_layer.hpp"

namespace surgiatm {

/// Shape of an interleaved H x W x C float buffer (C = 1 for fields).
struct TensorShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  std::size_t elements() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
};

/// Opaque token for a cached forward state. `slot` indexes the registry and
/// `generation` distinguishes reuse, so stale tokens are always detected.
struct StateHandle {
  std::uint64_t slot = 0;
  std::uint64_t generation = 0;
  friend bool operator==(const StateHandle&, const StateHandle&) = default;
};

/// Owns forward states on behalf of a host framework. Thread-safe; a single
/// state is read-only once stored.
class StateRegistry {
 public:
  StateHandle store(AtmForwardState state);
  /// Shared so a concurrent release cannot free a state mid-backward.
  std::shared_ptr<const AtmForwardState> get(const StateHandle& handle) const;
  /// Unknown, stale or already-released handles -> LifecycleError.
  void release(const StateHandle& handle);
  std::size_t live() const;

 private:
  struct Entry {
    std::uint64_t generation = 0;
    std::shared_ptr<const AtmForwardState> state;
  };
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::uint64_t next_slot_ = 1;
  std::uint64_t next_generation_ = 1;
};

/// Process-wide registry used by the flat entry points.
StateRegistry& global_registry();

struct FlatForwardResult {
  std::vector<float> output;  ///< unclamped I - d_hat (1 - rho), shape of the input
  StateHandle handle;
};

enum class FlatLoss { kL1, kL2 };

/// Widens to double, runs forward(), narrows the output. Input must be
/// H x W x 3 in [0,1]; rho_raw must share its shape.
FlatForwardResult atm_forward_flat(std::span<const float> input, std::span<const float> rho_raw,
                                   const TensorShape& shape, const SurgiAtmConfig& cfg,
                                   StateRegistry& registry = global_registry());

/// Gradient of the summed L1/L2 loss against `target` w.r.t. rho_raw.
std::vector<float> atm_backward_target_flat(const StateHandle& handle, std::span<const float> target,
                                            FlatLoss loss, StateRegistry& registry = global_registry());

/// Chains an upstream dL/d(output) back to rho_raw.
std::vector<float> atm_backward_grad_flat(const StateHandle& handle, std::span<const float> grad_output,
                                          StateRegistry& registry = global_registry());

/// Airlight-free dark channel of an H x W x 3 buffer; returns H x W.
std::vector<float> denorm_dark_channel_flat(std::span<const float> input, const TensorShape& shape, int z);

}  // namespace surgiatm
