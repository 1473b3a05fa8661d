"""Comparator fits: classical kernel ridge and backwards KOMP.

Both place kernels of a single width at the sample points.  KOMP starts
from all samples and greedily removes the kernel whose removal (followed
by a least-squares refit of the survivors) raises the training error the
least, until the stop criterion trips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .datasets import SampleSet
from .errors import ConfigError
from .kernels import KernelSpec
from .models import DiscreteModel

# tiny ridge keeping elimination scores well defined on degenerate Grams
_KOMP_RIDGE = 1e-10


@dataclass(frozen=True)
class KompConfig:
    """Stop rule plus the elimination scoring mode.

    With ``refit`` (pre-fitting), each candidate removal is scored by the
    training error after a least-squares refit of the survivors.  Without
    it, the kernel with the smallest current amplitude is dropped; the
    survivors are still refit after every removal.
    """

    stop: str  # "error_target" | "kernel_count"
    value: float
    refit: bool = True

    def __post_init__(self):
        if self.stop not in ("error_target", "kernel_count"):
            raise ConfigError(f"unknown stop criterion {self.stop!r}")
        if self.stop == "error_target" and self.value < 0:
            raise ConfigError("error target must be nonnegative")
        if self.stop == "kernel_count" and int(self.value) < 1:
            raise ConfigError("kernel count must be >= 1")


def ridge_fit(samples: SampleSet, kernel: KernelSpec, w0: float, reg: float) -> DiscreteModel:
    """Kernel ridge with centers at all samples: solve (K + reg I) a = y."""
    if not reg > 0:
        raise ConfigError("reg must be positive")
    K = kernels.gram(kernel, samples.X, w0)
    amps = np.linalg.solve(K + reg * np.eye(samples.n), samples.y)
    return DiscreteModel(amps, samples.X, np.full(samples.n, float(w0)))


def _sse(y, Gm, b, active, amps) -> float:
    r = float(y @ y - 2.0 * amps @ b[active] + amps @ Gm[np.ix_(active, active)] @ amps)
    return max(r, 0.0)


def _refit(Gm, b, active):
    A = np.linalg.inv(Gm[np.ix_(active, active)] + _KOMP_RIDGE * np.eye(len(active)))
    return A, A @ b[active]


def komp_fit_with_path(
    samples: SampleSet, kernel: KernelSpec, w0: float, cfg: KompConfig
):
    """Backwards elimination; returns (model, path of (n_kernels, train MSE)).

    Elimination scores come from the regressor-deletion identity on the
    refit normal equations, so the chosen removal matches an exhaustive
    refit of every candidate; ties break toward the lowest sample index.
    """
    y = samples.y
    n = samples.n
    if cfg.stop == "kernel_count" and int(cfg.value) > n:
        raise ConfigError(f"kernel_count {int(cfg.value)} exceeds sample count {n}")
    Phi = kernels.gram(kernel, samples.X, w0)
    Gm = Phi.T @ Phi
    b = Phi.T @ y

    active = list(range(n))
    A, amps = _refit(Gm, b, active)
    mse = _sse(y, Gm, b, active, amps) / n
    path = [(len(active), mse)]

    while active:
        if cfg.stop == "kernel_count" and len(active) <= int(cfg.value):
            break
        if len(active) == 1:
            cand_mse = float(y @ y) / n
            pos = 0
        elif cfg.refit:
            scores = amps**2 / np.diag(A)
            pos = int(np.argmin(scores))
            trial = active[:pos] + active[pos + 1 :]
            _, amps_t = _refit(Gm, b, trial)
            cand_mse = _sse(y, Gm, b, trial, amps_t) / n
        else:
            # magnitude scoring: drop the weakest current coefficient
            pos = int(np.argmin(np.abs(amps)))
            trial = active[:pos] + active[pos + 1 :]
            _, amps_t = _refit(Gm, b, trial)
            cand_mse = _sse(y, Gm, b, trial, amps_t) / n
        if cfg.stop == "error_target" and cand_mse > cfg.value:
            break
        active = active[:pos] + active[pos + 1 :]
        if active:
            A, amps = _refit(Gm, b, active)
            mse = _sse(y, Gm, b, active, amps) / n
        else:
            amps = np.zeros(0)
            mse = float(y @ y) / n
        path.append((len(active), mse))

    if not active:
        return DiscreteModel.empty(samples.dim), path
    model = DiscreteModel(np.asarray(amps), samples.X[active], np.full(len(active), float(w0)))
    return model, path


def komp_fit(samples: SampleSet, kernel: KernelSpec, w0: float, cfg: KompConfig) -> DiscreteModel:
    model, _ = komp_fit_with_path(samples, kernel, w0, cfg)
    return model
