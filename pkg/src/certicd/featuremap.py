"""Grid Gaussian feature map over the unit cube.

The cube is split into ``n^d`` half-open cells of side ``1/n``. A
configuration is mapped to the vector of Gaussian responses
``exp(-||center_i - x||^2 / sigma^2)`` to every cell centre. Entries are
ordered row-major over 1-based cell indices (last axis varies fastest).

Because the Gaussian factorises over coordinates, ``phi`` is built as an
outer product of per-axis responses instead of a full distance matrix.
"""

import math
import os
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
from scipy.stats import qmc

from .scenes import FORBIDDEN, FREE

DEFAULT_FEATURE_CAP = 10**6
FEATURE_CAP_ENV = "CERTICD_FEATURE_CAP"

# Slack when rounding sqrt(d)/delta up, so exact ratios such as
# sqrt(2) / (sqrt(2)/2) do not round to 3 through float noise.
_CEIL_SLACK = 1e-9


class FeatureCapError(MemoryError):
    """Raised when ``n^d`` would exceed the configured feature-dimension cap."""

    def __init__(self, n, d, cap):
        super().__init__(f"feature dimension n^d = {n}^{d} exceeds the cap of {cap} "
                         f"(set {FEATURE_CAP_ENV} to raise it)")
        self.n, self.d, self.cap = n, d, cap


class MixedCellError(RuntimeError):
    """A grid cell holds both free and forbidden delta-interior probes."""


def feature_cap():
    """The active feature-dimension cap, honouring ``CERTICD_FEATURE_CAP``."""
    raw = os.environ.get(FEATURE_CAP_ENV)
    return int(raw) if raw else DEFAULT_FEATURE_CAP


@dataclass(frozen=True)
class FeatureMapParams:
    d: int
    n: int
    sigma: float
    delta: float = math.nan

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be positive")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    @property
    def dim(self):
        return self.n ** self.d

    @cached_property
    def axis_centers(self):
        return (np.arange(1, self.n + 1) - 0.5) / self.n

    def cell_of(self, x):
        """1-based cell index of configuration ``x``; the top face joins cell ``n``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected a configuration of dimension {self.d}")
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("configuration must lie in [0, 1]^d")
        idx = np.minimum(np.floor(x * self.n).astype(int) + 1, self.n)
        return tuple(int(i) for i in idx)

    def cell_center(self, index):
        index = tuple(int(i) for i in index)
        if len(index) != self.d or any(not 1 <= i <= self.n for i in index):
            raise IndexError(f"cell index {index} out of range for n={self.n}, d={self.d}")
        return (np.asarray(index, dtype=float) - 0.5) / self.n

    def flat_index(self, index):
        return int(np.ravel_multi_index(tuple(i - 1 for i in index), (self.n,) * self.d))

    def centers(self):
        """All cell centres, shape ``(n^d, d)``, in feature order."""
        grids = np.meshgrid(*([self.axis_centers] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def phi(self, x):
        """Feature vector(s): shape ``(n^d,)`` for one configuration, ``(m, n^d)`` for a batch."""
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        batch = arr.reshape(1, -1) if single else arr
        if batch.ndim != 2 or batch.shape[1] != self.d:
            raise ValueError(f"expected configurations of dimension {self.d}, got shape {arr.shape}")
        inv_s2 = 1.0 / (self.sigma * self.sigma)
        out = np.ones((len(batch), 1))
        for j in range(self.d):
            resp = np.exp(-((batch[:, j:j + 1] - self.axis_centers[None, :]) ** 2) * inv_s2)
            out = (out[:, :, None] * resp[:, None, :]).reshape(len(batch), -1)
        return out[0] if single else out

    def margin_lower_bound(self):
        return margin_lower_bound(self.n, self.d)


def derive_params(d, delta, cap=None):
    """Resolution and width for clearance ``delta``.

    ``n = ceil(sqrt(d) / delta)`` keeps the cell diagonal at most ``delta``;
    ``sigma^2 = 2 delta^2 / ln(9 n^d)`` uses the caller's delta, not the one
    implied by the rounded n.
    """
    d = int(d)
    delta = float(delta)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not 0.0 < delta <= math.sqrt(d):
        raise ValueError(f"delta must lie in (0, sqrt(d)] = (0, {math.sqrt(d):.6g}], got {delta!r}")
    cap = feature_cap() if cap is None else int(cap)
    ratio = math.sqrt(d) / delta
    n = max(1, math.ceil(ratio - _CEIL_SLACK * ratio))
    if d * math.log(n) > math.log(cap) + 1e-12:
        raise FeatureCapError(n, d, cap)
    sigma = math.sqrt(2.0 * delta * delta / (d * math.log(n) + math.log(9.0)))
    return FeatureMapParams(d=d, n=n, sigma=sigma, delta=delta)


def margin_lower_bound(n, d):
    """Guaranteed normalised feature-space margin ``8 / (9^(9/8) n^(5d/8))``."""
    return 8.0 / (9.0 ** 1.125 * float(n) ** (0.625 * d))


def phi(params, x):
    return params.phi(x)


def cell_of(params, x):
    return params.cell_of(x)


def cell_center(params, index):
    return params.cell_center(index)


@dataclass(frozen=True)
class ReferenceSeparator:
    """Cell labelling ``g`` in {-1, 0, +1} used as a fixed separating direction."""

    alpha: np.ndarray
    params: FeatureMapParams
    probes_per_cell: int

    @property
    def norm(self):
        return float(np.linalg.norm(self.alpha))

    @property
    def unit(self):
        return self.alpha / self.norm

    def normalized_margins(self, x, labels):
        """``f(x) * (alpha_hat . phi(x))`` for a batch of configurations."""
        return np.asarray(labels) * (self.params.phi(x) @ self.unit)


def _cell_probe_offsets(d, count):
    """Offsets in [0, 1)^d: the cell centre, then unscrambled Halton points."""
    offsets = [np.full(d, 0.5)]
    if count > 1:
        offsets.extend(qmc.Halton(d=d, scramble=False).random(count))
        offsets = offsets[:1] + [o for o in offsets[1:] if np.any(o != 0.0)][:count - 1]
    return np.array(offsets)


def build_reference_separator(scene, params, delta=None, probes_per_cell=9):
    """Label every grid cell from probes and return the reference separator.

    A cell gets +1 if some probe lies in the forbidden delta-interior, -1 if
    some probe lies in the free delta-interior, and 0 otherwise. Probes are
    the cell centre plus ``probes_per_cell - 1`` Halton points. A cell with
    interior probes of both labels raises ``MixedCellError``.
    """
    delta = params.delta if delta is None else float(delta)
    if not delta > 0.0:
        raise ValueError("a positive delta is required to build the separator")
    if probes_per_cell < 1:
        raise ValueError("probes_per_cell must be >= 1")
    d, n = params.d, params.n
    offsets = _cell_probe_offsets(d, probes_per_cell)
    corners = np.array(list(product(range(n), repeat=d)), dtype=float)
    probes = (corners[:, None, :] + offsets[None, :, :]) / n
    flat = probes.reshape(-1, d)
    labels, clearance = scene.label_and_clearance(flat)
    interior = (clearance >= delta).reshape(len(corners), -1)
    labels = labels.reshape(len(corners), -1)
    has_forb = np.any(interior & (labels == FORBIDDEN), axis=1)
    has_free = np.any(interior & (labels == FREE), axis=1)
    mixed = np.flatnonzero(has_forb & has_free)
    if mixed.size:
        cell = tuple(int(c) + 1 for c in corners[mixed[0]])
        raise MixedCellError(f"cell {cell} holds free and forbidden delta-interior probes "
                             f"(delta={delta}, n={n})")
    alpha = np.where(has_forb, 1, np.where(has_free, -1, 0)).astype(np.int8)
    if not np.any(alpha):
        raise ValueError("no cell touches the delta-interior; separator would be zero")
    return ReferenceSeparator(alpha=alpha, params=params, probes_per_cell=probes_per_cell)
