#include "surgiatm/flat_api.hpp"

#include <cmath>
#include <string>

#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace {

void require_buffer(std::span<const float> data, const TensorShape& shape, const char* what) {
  if (shape.height < 1 || shape.width < 1 || shape.channels < 1) {
    throw ShapeError(std::string(what) + ": shape must be positive");
  }
  if (data.size() != shape.elements()) {
    throw ShapeError(std::string(what) + ": buffer holds " + std::to_string(data.size()) +
                     " values, shape needs " + std::to_string(shape.elements()));
  }
}

Raster widen(std::span<const float> data, const TensorShape& shape) {
  std::vector<double> wide(data.begin(), data.end());
  for (double v : wide) {
    if (!std::isfinite(v)) throw DomainError("non-finite value in tensor");
  }
  return Raster(shape.width, shape.height, shape.channels, std::move(wide));
}

std::vector<float> narrow(const Raster& r) {
  auto d = r.data();
  return std::vector<float>(d.begin(), d.end());
}

TensorShape shape_of(const AtmForwardState& s) { return {s.input.height(), s.input.width(), s.input.channels()}; }

}  // namespace

StateHandle StateRegistry::store(AtmForwardState state) {
  auto ptr = std::make_shared<const AtmForwardState>(std::move(state));
  std::lock_guard lock(mutex_);
  const StateHandle handle{next_slot_++, next_generation_++};
  entries_.emplace(handle.slot, Entry{handle.generation, std::move(ptr)});
  return handle;
}

std::shared_ptr<const AtmForwardState> StateRegistry::get(const StateHandle& handle) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(handle.slot);
  if (it == entries_.end() || it->second.generation != handle.generation) {
    throw LifecycleError("state handle " + std::to_string(handle.slot) + " is released or unknown");
  }
  return it->second.state;
}

void StateRegistry::release(const StateHandle& handle) {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(handle.slot);
  if (it == entries_.end() || it->second.generation != handle.generation) {
    throw LifecycleError("state handle " + std::to_string(handle.slot) + " released twice or unknown");
  }
  entries_.erase(it);
}

std::size_t StateRegistry::live() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

StateRegistry& global_registry() {
  static StateRegistry registry;
  return registry;
}

FlatForwardResult atm_forward_flat(std::span<const float> input, std::span<const float> rho_raw,
                                   const TensorShape& shape, const SurgiAtmConfig& cfg,
                                   StateRegistry& registry) {
  if (shape.channels != 3) throw ShapeError("atm_forward: input must have 3 channels");
  require_buffer(input, shape, "atm_forward input");
  require_buffer(rho_raw, shape, "atm_forward rho");
  AtmForwardState state = forward(ImageBuffer(widen(input, shape)), widen(rho_raw, shape), cfg);
  FlatForwardResult result{narrow(state.output), {}};
  result.handle = registry.store(std::move(state));
  return result;
}

std::vector<float> atm_backward_target_flat(const StateHandle& handle, std::span<const float> target,
                                            FlatLoss loss, StateRegistry& registry) {
  const auto state = registry.get(handle);
  const TensorShape shape = shape_of(*state);
  require_buffer(target, shape, "atm_backward target");
  const ImageBuffer truth(widen(target, shape));
  return narrow(loss == FlatLoss::kL2 ? backward_l2(*state, truth) : backward_l1(*state, truth));
}

std::vector<float> atm_backward_grad_flat(const StateHandle& handle, std::span<const float> grad_output,
                                          StateRegistry& registry) {
  const auto state = registry.get(handle);
  const TensorShape shape = shape_of(*state);
  require_buffer(grad_output, shape, "atm_backward grad");
  return narrow(backward_from_output_grad(*state, widen(grad_output, shape)));
}

std::vector<float> denorm_dark_channel_flat(std::span<const float> input, const TensorShape& shape, int z) {
  if (shape.channels != 3) throw ShapeError("denorm_dark_channel: input must have 3 channels");
  require_buffer(input, shape, "denorm_dark_channel input");
  const ScalarField dark = denorm_dark_channel(ImageBuffer(widen(input, shape)), z);
  auto d = dark.data();
  return std::vector<float>(d.begin(), d.end());
}

}  // namespace surgiatm
