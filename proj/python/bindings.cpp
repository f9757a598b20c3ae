// Python surface of the atmospheric restoration layer: a (forward, backward)
// pair on float32 numpy arrays plus the airlight-free dark channel.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>

#include <span>
#include <string>
#include <vector>

#include "surgiatm/errors.hpp"
#include "surgiatm/flat_api.hpp"

namespace py = pybind11;
using surgiatm::StateHandle;
using surgiatm::TensorShape;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

TensorShape shape_of(const FloatArray& a, const char* what) {
  if (a.ndim() == 3) {
    return {static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
  }
  if (a.ndim() == 2) return {static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), 1};
  throw surgiatm::ShapeError(std::string(what) + " must be (H, W) or (H, W, C), got ndim=" +
                             std::to_string(a.ndim()));
}

std::span<const float> view(const FloatArray& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

FloatArray to_array(std::vector<float> values, const std::vector<py::ssize_t>& shape) {
  FloatArray out(shape);
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

std::vector<py::ssize_t> dims(const FloatArray& a) { return {a.shape(), a.shape() + a.ndim()}; }

surgiatm::FlatLoss parse_loss(const std::string& name) {
  if (name == "l1" || name == "L1") return surgiatm::FlatLoss::kL1;
  if (name == "l2" || name == "L2") return surgiatm::FlatLoss::kL2;
  throw surgiatm::ArgumentError("loss must be 'l1' or 'l2', got '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_surgiatm, m) {
  m.doc() = "Atmospheric restoration layer with analytic gradients";

  py::register_exception<surgiatm::LifecycleError>(m, "LifecycleError", PyExc_RuntimeError);
  py::register_exception<surgiatm::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<surgiatm::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<surgiatm::ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  py::class_<StateHandle>(m, "StateHandle")
      .def_readonly("slot", &StateHandle::slot)
      .def_readonly("generation", &StateHandle::generation)
      .def("__eq__", [](const StateHandle& a, const StateHandle& b) { return a == b; })
      .def("__repr__", [](const StateHandle& h) {
        return "StateHandle(slot=" + std::to_string(h.slot) + ", generation=" + std::to_string(h.generation) + ")";
      });

  m.def(
      "atm_forward",
      [](const FloatArray& input, const FloatArray& rho_raw, double eta, int z, bool apply_sigmoid) {
        const TensorShape shape = shape_of(input, "input");
        if (dims(input) != dims(rho_raw)) throw surgiatm::ShapeError("rho_raw must match the input shape");
        surgiatm::SurgiAtmConfig cfg;
        cfg.eta = eta;
        cfg.z = z;
        cfg.apply_sigmoid = apply_sigmoid;
        surgiatm::FlatForwardResult result;
        {
          py::gil_scoped_release unlocked;
          result = surgiatm::atm_forward_flat(view(input), view(rho_raw), shape, cfg);
        }
        return py::make_tuple(to_array(std::move(result.output), dims(input)), result.handle);
      },
      py::arg("input"), py::arg("rho_raw"), py::arg("eta") = 0.1, py::arg("z") = 15,
      py::arg("apply_sigmoid") = true,
      "Restore an (H, W, 3) frame in [0, 1]; returns (output, handle).");

  m.def(
      "atm_backward",
      [](const StateHandle& handle, const FloatArray& grad_out) {
        std::vector<float> grad;
        {
          py::gil_scoped_release unlocked;
          grad = surgiatm::atm_backward_grad_flat(handle, view(grad_out));
        }
        return to_array(std::move(grad), dims(grad_out));
      },
      py::arg("handle"), py::arg("grad_out"),
      "Chain an upstream gradient on the output back to rho_raw.");

  m.def(
      "atm_backward_target",
      [](const StateHandle& handle, const FloatArray& target, const std::string& loss) {
        const surgiatm::FlatLoss kind = parse_loss(loss);
        std::vector<float> grad;
        {
          py::gil_scoped_release unlocked;
          grad = surgiatm::atm_backward_target_flat(handle, view(target), kind);
        }
        return to_array(std::move(grad), dims(target));
      },
      py::arg("handle"), py::arg("target"), py::arg("loss") = "l2",
      "Gradient of the summed L1/L2 loss against target, w.r.t. rho_raw.");

  m.def(
      "release", [](const StateHandle& handle) { surgiatm::global_registry().release(handle); },
      py::arg("handle"), "Free a forward state; reuse afterwards raises LifecycleError.");

  m.def("live_states", [] { return surgiatm::global_registry().live(); });

  m.def(
      "denorm_dark_channel",
      [](const FloatArray& input, int z) {
        const TensorShape shape = shape_of(input, "input");
        std::vector<float> dark;
        {
          py::gil_scoped_release unlocked;
          dark = surgiatm::denorm_dark_channel_flat(view(input), shape, z);
        }
        return to_array(std::move(dark), {input.shape(0), input.shape(1)});
      },
      py::arg("input"), py::arg("z") = 15, "Airlight-free dark channel of an (H, W, 3) frame.");
}
