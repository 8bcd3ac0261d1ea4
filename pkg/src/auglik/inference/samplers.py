"""Langevin samplers with a cyclical step-size schedule.

Both samplers consume the gradient of the *tempered* log-posterior
``g = grad log p(w)^{1/T}`` (see :func:`~auglik.inference.posterior.temper`).

SGLD
    ``w <- w + (eps/2) g + sqrt(eps) * eta``. The stationary density is the
    tempered posterior because ``g`` already carries ``1/T``.

GGMC
    Underdamped Langevin with unit mass, integrated in the symmetric order
    refresh / half kick / drift / half kick / refresh. The refresh is
    ``m <- sqrt(1-gamma) m + sqrt(gamma T) eta`` and kicks use ``T * g``, so
    the stationary density is ``p(w)^{1/T} N(m; 0, T I)`` and the mean of
    ``|m|^2 / d`` (the kinetic temperature) is ``T``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError, ContractError, DivergenceError
from .posterior import TemperingSpec

__all__ = [
    "CyclicalSchedule",
    "SamplerState",
    "ChainResult",
    "sgld_step",
    "ggmc_step",
    "kinetic_temperature",
    "kinetic_temperature_groups",
    "init_state",
    "run_chain",
]


@dataclass(frozen=True)
class CyclicalSchedule:
    """Cosine step-size cycles with snapshots at the end of each cycle.

    Within a cycle of ``L = epochs_per_cycle * steps_per_epoch`` steps the
    step size at in-cycle step ``j`` is ``base_step/2 * (1 + cos(pi j / L))``.
    A sample is stored at the end of each of the last ``samples_per_cycle``
    epochs of every cycle.
    """

    cycles: int = 1
    epochs_per_cycle: int = 1
    samples_per_cycle: int = 1
    base_step: float = 1e-2
    steps_per_epoch: int = 1
    shape: str = "cosine"

    def __post_init__(self):
        if self.cycles < 1 or self.epochs_per_cycle < 1 or self.steps_per_epoch < 1:
            raise ConfigurationError("cycles, epochs_per_cycle and steps_per_epoch must be >= 1")
        if not 0 <= self.samples_per_cycle <= self.epochs_per_cycle:
            raise ConfigurationError("samples_per_cycle must lie in [0, epochs_per_cycle]")
        if not self.base_step > 0:
            raise ConfigurationError("base_step must be positive")
        if self.shape not in ("cosine", "constant"):
            raise ConfigurationError(f"unknown schedule shape {self.shape!r}")

    @property
    def total_epochs(self):
        return self.cycles * self.epochs_per_cycle

    @property
    def total_steps(self):
        return self.total_epochs * self.steps_per_epoch

    @property
    def n_samples(self):
        return self.cycles * self.samples_per_cycle

    def step_size(self, step):
        """Step size for global step index ``step`` (0-based)."""
        if self.shape == "constant":
            return self.base_step
        L = self.epochs_per_cycle * self.steps_per_epoch
        j = step % L
        return 0.5 * self.base_step * (1.0 + math.cos(math.pi * j / L))

    def is_sample_epoch(self, epoch):
        """Whether a snapshot is taken at the end of global epoch ``epoch`` (1-based)."""
        within = (epoch - 1) % self.epochs_per_cycle + 1
        return within > self.epochs_per_cycle - self.samples_per_cycle

    def sample_epochs(self):
        return [e for e in range(1, self.total_epochs + 1) if self.is_sample_epoch(e)]

    def phase(self, step):
        """Position of global step ``step`` as a dict (for checkpoints)."""
        epoch, in_epoch = divmod(step, self.steps_per_epoch)
        cycle, in_cycle = divmod(epoch, self.epochs_per_cycle)
        return {"step": step, "cycle": cycle, "epoch_in_cycle": in_cycle, "step_in_epoch": in_epoch}

    def to_dict(self):
        return {
            "cycles": self.cycles,
            "epochs_per_cycle": self.epochs_per_cycle,
            "samples_per_cycle": self.samples_per_cycle,
            "base_step": self.base_step,
            "steps_per_epoch": self.steps_per_epoch,
            "shape": self.shape,
        }


@dataclass
class SamplerState:
    """Full state of one chain.

    ``grad`` caches the tempered log-posterior gradient at ``w`` so GGMC
    needs one gradient evaluation per step.
    """

    w: np.ndarray
    m: np.ndarray
    step_size: float
    tempering: TemperingSpec
    rng: np.random.Generator
    step: int = 0
    grad: np.ndarray = None
    preconditioner: np.ndarray = None

    def __post_init__(self):
        if self.m is not None and np.shape(self.m) != np.shape(self.w):
            raise ContractError("momentum layout does not match parameters")
        if not self.step_size > 0:
            raise ContractError(f"step size must be positive, got {self.step_size}")


def _check_finite(state, *arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise DivergenceError("non-finite sampler state", step=state.step)


def init_state(w0, tempering, rng, step_size=1e-2, momentum=True, preconditioner=None):
    """Chain state with momentum drawn from its stationary law ``N(0, T M)``."""
    w0 = np.array(w0, dtype=np.float64)
    m = None
    if momentum:
        scale = math.sqrt(tempering.temperature)
        m = scale * rng.standard_normal(w0.shape)
        if preconditioner is not None:
            m = m / np.sqrt(preconditioner)
    return SamplerState(w0, m, step_size, tempering, rng, preconditioner=preconditioner)


def sgld_step(state, grad):
    """One Langevin step given the tempered log-posterior gradient at ``state.w``."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite gradient", step=state.step)
    eps = state.step_size
    w = state.w + 0.5 * eps * grad + math.sqrt(eps) * state.rng.standard_normal(state.w.shape)
    new = replace(state, w=w, step=state.step + 1, grad=None)
    _check_finite(new, w)
    return new


def ggmc_step(state, grad_fn, friction=0.1):
    """One underdamped Langevin step (symmetric splitting).

    ``grad_fn(w)`` returns the tempered log-posterior gradient.
    ``state.preconditioner``, if set, is a diagonal inverse mass; the default
    is unit mass.
    """
    if not 0 < friction <= 1:
        raise ContractError(f"friction must lie in (0, 1], got {friction}")
    T = state.tempering.temperature
    h = state.step_size
    P = 1.0 if state.preconditioner is None else state.preconditioner
    rng = state.rng
    a = math.sqrt(1.0 - friction)
    b = np.sqrt(friction * T / P)

    g = state.grad
    if g is None:
        g = np.asarray(grad_fn(state.w), dtype=np.float64)
        _check_finite(state, g)
    m = a * state.m + b * rng.standard_normal(state.m.shape)
    m = m + 0.5 * h * T * g
    w = state.w + h * P * m
    g = np.asarray(grad_fn(w), dtype=np.float64)
    new = replace(state, step=state.step + 1)
    _check_finite(new, w, g)
    m = m + 0.5 * h * T * g
    m = a * m + b * rng.standard_normal(m.shape)
    new.w, new.m, new.grad = w, m, g
    _check_finite(new, m)
    return new


def kinetic_temperature(m, preconditioner=None):
    """``|m|^2 / d`` (``m^T P m / d`` with a diagonal inverse mass ``P``)."""
    m = np.asarray(m, dtype=np.float64)
    if m.size < 1:
        raise ContractError("kinetic temperature needs at least one coordinate")
    if preconditioner is None:
        return float(np.dot(m, m) / m.size)
    return float(np.sum(preconditioner * m * m) / m.size)


def kinetic_temperature_groups(m, model):
    """Kinetic temperature per parameter block of an MLP plus ``"global"``."""
    out = {name: kinetic_temperature(m[a:b]) for name, a, b, _ in model.segments}
    out["global"] = kinetic_temperature(m)
    return out


@dataclass
class ChainResult:
    samples: list = field(default_factory=list)
    sample_epochs: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    final_state: SamplerState = None
    forward_passes: int = 0


def run_chain(target, w0, schedule, sampler="ggmc", rng=None, friction=0.1, state=None, on_epoch=None):
    """Run one chain over the whole cyclical schedule.

    ``target.value_and_grad(w, rng)`` supplies the tempered log-posterior
    gradient (a minibatch estimate is fine). The returned trace has one entry
    per epoch with the step size, the end-of-epoch kinetic temperature and
    its mean over the epoch's steps (``None`` for SGLD, which has no
    momentum). On divergence a :class:`DivergenceError` is raised whose
    ``partial`` attribute holds the result accumulated so far.
    """
    if sampler not in ("sgld", "ggmc"):
        raise ConfigurationError(f"unknown sampler {sampler!r}")
    if rng is None:
        raise ContractError("run_chain needs an explicit rng stream")
    tempering = target.tempering
    if state is None:
        state = init_state(w0, tempering, rng, schedule.step_size(0), momentum=sampler == "ggmc")
    result = ChainResult()
    start_fp = getattr(target, "forward_passes", 0)

    def grad_fn(w):
        return target.value_and_grad(w, state.rng)[1]

    try:
        for epoch in range(1, schedule.total_epochs + 1):
            kt_sum = 0.0
            for _ in range(schedule.steps_per_epoch):
                state.step_size = schedule.step_size(state.step)
                if sampler == "sgld":
                    state = sgld_step(state, grad_fn(state.w))
                else:
                    state = ggmc_step(state, grad_fn, friction)
                    kt_sum += kinetic_temperature(state.m, state.preconditioner)
            record = {
                "epoch": epoch,
                "cycle": (epoch - 1) // schedule.epochs_per_cycle + 1,
                "step_size": state.step_size,
                "kinetic_temperature": None,
                "kinetic_temperature_mean": None,
            }
            if sampler == "ggmc":
                record["kinetic_temperature"] = kinetic_temperature(state.m, state.preconditioner)
                record["kinetic_temperature_mean"] = kt_sum / schedule.steps_per_epoch
            result.trace.append(record)
            if schedule.is_sample_epoch(epoch):
                result.samples.append(state.w.copy())
                result.sample_epochs.append(epoch)
            if on_epoch is not None:
                on_epoch(record, state)
    except DivergenceError as exc:
        result.final_state = state
        result.forward_passes = getattr(target, "forward_passes", 0) - start_fp
        exc.partial = result
        raise
    result.final_state = state
    result.forward_passes = getattr(target, "forward_passes", 0) - start_fp
    return result
