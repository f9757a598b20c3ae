"""Atmospheric restoration layer for smoke removal.

The layer maps a smoky frame ``I`` and a predicted normalized radiance
``rho`` to ``I - D_hat * (1 - rho)``, where ``D_hat`` is the smoothed
dark channel of ``I``. ``atm_forward`` returns the output together with an
opaque handle; pass the handle to ``atm_backward`` and ``release`` it when
done. ``AtmLayerFunction`` wraps the pair as a torch autograd function when
torch is importable.
"""

from ._surgiatm import (
    ArgumentError,
    DomainError,
    LifecycleError,
    ShapeError,
    StateHandle,
    atm_backward,
    atm_backward_target,
    atm_forward,
    denorm_dark_channel,
    live_states,
    release,
)

__all__ = [
    "ArgumentError",
    "DomainError",
    "LifecycleError",
    "ShapeError",
    "StateHandle",
    "atm_backward",
    "atm_backward_target",
    "atm_forward",
    "denorm_dark_channel",
    "live_states",
    "release",
]

try:
    import torch as _torch
except ImportError:  # torch is optional
    _torch = None


class _OwnedState:
    """Releases a forward state exactly once: after backward, or when the
    autograd graph holding it is dropped without a backward pass."""

    __slots__ = ("handle",)

    def __init__(self, handle):
        self.handle = handle

    def take(self):
        handle, self.handle = self.handle, None
        return handle

    def __del__(self):
        if self.handle is not None:
            release(self.take())


if _torch is not None:

    class AtmLayerFunction(_torch.autograd.Function):
        """Differentiable w.r.t. ``rho_raw`` only; ``input`` is treated as data.

        Tensors are (H, W, 3) float32 on the CPU.
        """

        @staticmethod
        def forward(ctx, input, rho_raw, eta=0.1, z=15, apply_sigmoid=True):
            frame = input.detach().cpu().numpy()
            rho = rho_raw.detach().cpu().numpy()
            output, handle = atm_forward(frame, rho, eta, z, apply_sigmoid)
            ctx.state = _OwnedState(handle)
            return _torch.from_numpy(output).to(rho_raw.device)

        @staticmethod
        def backward(ctx, grad_output):
            handle = ctx.state.take()
            if handle is None:
                raise LifecycleError("backward called twice on the same forward state")
            try:
                grad = atm_backward(handle, grad_output.detach().cpu().numpy())
            finally:
                release(handle)
            return None, _torch.from_numpy(grad).to(grad_output.device), None, None, None

    def atm_layer(input, rho_raw, eta=0.1, z=15, apply_sigmoid=True):
        return AtmLayerFunction.apply(input, rho_raw, eta, z, apply_sigmoid)

    __all__ += ["AtmLayerFunction", "atm_layer"]
