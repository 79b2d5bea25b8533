"""Fourier analysis on the n-torus and on SO(3).

A band-limited function on a compact group is stored by its Peter-Weyl
coefficients: one d x d complex block per irreducible representation.  Blocks
are kept flattened into a single complex vector so that Fourier multipliers,
norms and the per-mode propagators act entrywise.

The Haar measure is normalized to total mass one, so the coefficient of the
trivial representation is the mean of the function.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .wigner import wigner_d_table

TORUS = "torus"
SO3 = "so3"


@dataclass(frozen=True)
class GroupSpec:
    """Group kind plus dual truncation.

    ``kind`` is ``"torus"`` (with dimension ``n``) or ``"so3"``.  ``bandlimit``
    is the largest |k|_inf on the torus, the largest degree l on SO(3).
    ``oversample`` refines the quadrature grid (used when evaluating |u|^p).
    """

    kind: str
    bandlimit: int
    n: int = 1
    oversample: float = 1.0

    def __post_init__(self):
        if self.kind not in (TORUS, SO3):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == TORUS and self.n < 1:
            raise ValueError("torus dimension must be >= 1")
        if self.kind == SO3 and self.n != 3:
            object.__setattr__(self, "n", 3)
        if self.bandlimit < 1:
            raise ValueError("bandlimit must be >= 1")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")

    @classmethod
    def torus(cls, n, bandlimit, oversample=1.0):
        return cls(TORUS, bandlimit, n, oversample)

    @classmethod
    def so3(cls, bandlimit, oversample=1.0):
        return cls(SO3, bandlimit, 3, oversample)

    @property
    def dimension(self):
        """Topological dimension."""
        return self.n

    def with_oversample(self, oversample):
        return GroupSpec(self.kind, self.bandlimit, self.n, oversample)

    @property
    def name(self):
        return f"torus{self.n}" if self.kind == TORUS else "so3"


@dataclass(frozen=True)
class RepIndex:
    """One irreducible representation: label, dimension and Casimir eigenvalue."""

    label: tuple
    dim: int
    casimir: float

    @property
    def is_trivial(self):
        return self.casimir == 0


def _ceil_mul(oversample, count):
    # exact rational arithmetic so e.g. 2 * 5 stays 10
    return math.ceil(Fraction(oversample).limit_denominator(10**6) * count)


def enumerate_dual(group: GroupSpec) -> list[RepIndex]:
    """Representations up to the bandlimit, sorted by Casimir then label."""
    K = group.bandlimit
    if group.kind == TORUS:
        axes = [np.arange(-K, K + 1)] * group.n
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, group.n)
        reps = [RepIndex(tuple(int(v) for v in k), 1, float(np.dot(k, k))) for k in pts]
    else:
        reps = [RepIndex((l,), 2 * l + 1, float(l * (l + 1))) for l in range(K + 1)]
    return sorted(reps, key=lambda r: (r.casimir, r.label))


def casimir_eigenvalue(rep: RepIndex) -> float:
    return rep.casimir


class Dual:
    """Enumerated dual together with the flat layout of coefficient blocks."""

    def __init__(self, group: GroupSpec):
        self.group = group
        self.reps = enumerate_dual(group)
        sizes = np.array([r.dim ** 2 for r in self.reps])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.size = int(self.offsets[-1])
        self.entry_casimir = np.repeat([r.casimir for r in self.reps], sizes)
        self.entry_dim = np.repeat([r.dim for r in self.reps], sizes).astype(float)
        self._index = {r.label: i for i, r in enumerate(self.reps)}

    def __eq__(self, other):
        return isinstance(other, Dual) and self.group.kind == other.group.kind \
            and self.group.n == other.group.n and self.group.bandlimit == other.group.bandlimit

    def __hash__(self):
        return hash((self.group.kind, self.group.n, self.group.bandlimit))

    def __len__(self):
        return len(self.reps)

    def rep(self, label) -> RepIndex:
        return self.reps[self._index[tuple(np.atleast_1d(label).tolist())]]

    def block_slice(self, label):
        i = self._index[tuple(np.atleast_1d(label).tolist())]
        return slice(self.offsets[i], self.offsets[i + 1])

    @cached_property
    def torus_labels(self):
        return np.array([r.label for r in self.reps], dtype=int)

    @cached_property
    def conjugate_map(self):
        """Permutation and sign taking coeffs of f to coeffs of conj(f) (before conj)."""
        perm = np.empty(self.size, dtype=int)
        sign = np.ones(self.size)
        if self.group.kind == TORUS:
            for i, r in enumerate(self.reps):
                perm[self.offsets[i]] = self.offsets[self._index[tuple(-v for v in r.label)]]
        else:
            for i, r in enumerate(self.reps):
                d = r.dim
                idx = np.arange(d * d).reshape(d, d)
                perm[self.offsets[i]:self.offsets[i + 1]] = self.offsets[i] + idx[::-1, ::-1].ravel()
                a, b = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
                sign[self.offsets[i]:self.offsets[i + 1]] = np.where((a - b) % 2, -1.0, 1.0).ravel()
        return perm, sign


_DUALS: dict = {}


def get_dual(group: GroupSpec) -> Dual:
    key = (group.kind, group.n, group.bandlimit)
    if key not in _DUALS:
        _DUALS[key] = Dual(group)
    return _DUALS[key]


@dataclass
class SpectralField:
    """Peter-Weyl coefficients over a truncated dual, stored flat."""

    dual: Dual
    data: np.ndarray
    real: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.dual.size,):
            raise ValueError(f"expected {self.dual.size} coefficients, got {self.data.shape}")

    @classmethod
    def zeros(cls, dual, real=False):
        return cls(dual, np.zeros(dual.size, dtype=complex), real)

    def block(self, label) -> np.ndarray:
        rep = self.dual.rep(label)
        return self.data[self.dual.block_slice(label)].reshape(rep.dim, rep.dim)

    def set_block(self, label, value):
        rep = self.dual.rep(label)
        self.data[self.dual.block_slice(label)] = np.broadcast_to(value, (rep.dim, rep.dim)).ravel()

    def trivial(self) -> complex:
        return complex(self.data[0])

    def copy(self):
        return SpectralField(self.dual, self.data.copy(), self.real)

    def _like(self, data, real=None):
        return SpectralField(self.dual, data, self.real if real is None else real)

    def __add__(self, other):
        _check_same(self, other)
        return self._like(self.data + other.data, self.real and other.real)

    def __sub__(self, other):
        _check_same(self, other)
        return self._like(self.data - other.data, self.real and other.real)

    def __mul__(self, scalar):
        return self._like(self.data * scalar, self.real and np.isrealobj(scalar))

    __rmul__ = __mul__

    def enforce_reality(self):
        """Project onto coefficients of real-valued functions."""
        perm, sign = self.dual.conjugate_map
        mirrored = sign * np.conj(self.data[perm])
        return SpectralField(self.dual, 0.5 * (self.data + mirrored), True)

    # -- serialization --
    def to_json(self):
        entries = []
        for r in self.dual.reps:
            blk = self.block(r.label)
            entries.append({"label": list(r.label), "re": blk.real.tolist(), "im": blk.imag.tolist()})
        g = self.dual.group
        return json.dumps({"group": g.name, "bandlimit": g.bandlimit, "real": self.real,
                           "entries": entries})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        group = parse_group(obj["group"], obj["bandlimit"])
        out = cls.zeros(get_dual(group), obj.get("real", False))
        for e in obj["entries"]:
            out.set_block(e["label"], np.array(e["re"]) + 1j * np.array(e["im"]))
        return out


def _check_same(a, b):
    if a.dual != b.dual:
        raise ValueError("spectral fields live on different duals")


def parse_group(name, bandlimit, oversample=1.0) -> GroupSpec:
    """``torus2`` / ``torus:2`` / ``so3`` to a GroupSpec."""
    name = name.strip().lower()
    if name == SO3:
        return GroupSpec.so3(bandlimit, oversample)
    if name.startswith(TORUS):
        rest = name[len(TORUS):].lstrip(":") or "1"
        return GroupSpec.torus(int(rest), bandlimit, oversample)
    raise ValueError(f"unknown group {name!r}")


@dataclass
class QuadratureGrid:
    """Tensor-product quadrature for the normalized Haar measure.

    ``nodes`` has one row per grid point (angles); ``shape`` is the tensor
    shape used by the fast transforms (C order).
    """

    group: GroupSpec
    shape: tuple
    axes: list
    weights: np.ndarray
    nodes: np.ndarray = field(repr=False)

    @property
    def size(self):
        return int(np.prod(self.shape))


def build_grid(group: GroupSpec) -> QuadratureGrid:
    K = group.bandlimit
    if group.kind == TORUS:
        N = _ceil_mul(group.oversample, 2 * K + 1)
        ax = 2 * np.pi * np.arange(N) / N
        axes = [ax] * group.n
        shape = (N,) * group.n
        weights = np.full(N ** group.n, 1.0 / N ** group.n)
    else:
        B = _ceil_mul(group.oversample, K + 1)
        x, w = np.polynomial.legendre.leggauss(B)
        # descending x gives ascending beta
        beta = np.arccos(x[::-1])
        wb = w[::-1] / 2
        ang = 2 * np.pi * np.arange(2 * B) / (2 * B)
        axes = [ang, beta, ang]
        shape = (2 * B, B, 2 * B)
        weights = (np.ones(2 * B)[:, None, None] * wb[None, :, None]
                   * np.ones(2 * B)[None, None, :]).ravel() / (2 * B) ** 2
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    return QuadratureGrid(group, shape, axes, weights, nodes)


@dataclass
class GridField:
    """Samples of a function at the nodes of a quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.size,):
            raise ValueError(f"grid has {self.grid.size} nodes, got values of shape {self.values.shape}")

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(*angles)``; angles are arrays of node coordinates."""
        return cls(grid, np.asarray(func(*grid.nodes.T)) * np.ones(grid.size))

    def integral(self):
        return complex(np.sum(self.grid.weights * self.values))

    def save_csv(self, path):
        np.savetxt(path, self.values.real if np.isrealobj(self.values) else
                   np.column_stack([self.values.real, self.values.imag]), delimiter=",")

    @classmethod
    def load_csv(cls, grid, path):
        raw = np.loadtxt(path, delimiter=",", ndmin=1)
        return cls(grid, raw[:, 0] + 1j * raw[:, 1] if raw.ndim == 2 else raw)

    def save_binary(self, path):
        np.asarray(self.values, dtype=complex).tofile(path)

    @classmethod
    def load_binary(cls, grid, path):
        return cls(grid, np.fromfile(path, dtype=complex))


class _SO3Tables:
    def __init__(self, grid, K):
        self.d = wigner_d_table(K, grid.axes[1])
        self.nbeta = len(grid.axes[1])
        self.wb = grid.weights.reshape(grid.shape)[0, :, 0] * grid.shape[0] * grid.shape[2]
        self.nang = grid.shape[0]


_SO3_CACHE: dict = {}


def _so3_tables(grid, K):
    key = (grid.shape, K)
    if key not in _SO3_CACHE:
        _SO3_CACHE[key] = _SO3Tables(grid, K)
    return _SO3_CACHE[key]


def _torus_index(dual, grid):
    N = grid.shape[0]
    if N < 2 * dual.group.bandlimit + 1:
        raise ValueError("grid too coarse for the dual band")
    labels = dual.torus_labels % N
    return np.ravel_multi_index(labels.T, grid.shape)


def analyze(field: GridField, grid: QuadratureGrid = None, dual: Dual = None, real=None) -> SpectralField:
    """Forward transform: hat f(xi) = sum_nodes w f(x) xi(x)^*."""
    grid = grid or field.grid
    if field.values.shape != (grid.size,):
        raise ValueError("field is not aligned with the grid")
    dual = dual or get_dual(grid.group)
    if real is None:
        real = np.isrealobj(field.values)
    f = field.values.reshape(grid.shape)
    if dual.group.kind == TORUS:
        F = np.fft.fftn(f) / f.size
        return SpectralField(dual, F.ravel()[_torus_index(dual, grid)], real)
    K = dual.group.bandlimit
    tab = _so3_tables(grid, K)
    nang = tab.nang
    if nang < 2 * K + 1:
        raise ValueError("grid too coarse for the dual band")
    # F[m, beta, n] = mean over (alpha, gamma) of f exp(i m alpha + i n gamma)
    F = np.fft.ifft2(f, axes=(0, 2))
    out = np.empty(dual.size, dtype=complex)
    for i, r in enumerate(dual.reps):
        l = r.label[0]
        idx = np.arange(-l, l + 1) % nang
        sub = F[idx][:, :, idx]  # (b, beta, a)
        # hat u_{ab} = sum_beta wb d_{ba}(beta) F[b, beta, a]
        blk = np.einsum("bak,bka,k->ab", tab.d[l], sub, tab.wb)
        out[dual.offsets[i]:dual.offsets[i + 1]] = blk.ravel()
    return SpectralField(dual, out, real)


def synthesize(spec: SpectralField, grid: QuadratureGrid) -> GridField:
    """Inverse transform: f(x) = sum_xi d_xi Tr(xi(x) hat f(xi))."""
    dual = spec.dual
    if dual.group.kind == TORUS:
        G = np.zeros(grid.size, dtype=complex)
        G[_torus_index(dual, grid)] = spec.data
        f = np.fft.ifftn(G.reshape(grid.shape)) * grid.size
    else:
        K = dual.group.bandlimit
        tab = _so3_tables(grid, K)
        nang = tab.nang
        if nang < 2 * K + 1:
            raise ValueError("grid too coarse for the dual band")
        H = np.zeros((nang, tab.nbeta, nang), dtype=complex)
        for i, r in enumerate(dual.reps):
            l = r.label[0]
            blk = spec.data[dual.offsets[i]:dual.offsets[i + 1]].reshape(r.dim, r.dim)
            # G[m, beta, n] = d_l * d^l_{mn}(beta) * hat u_{nm}
            g = r.dim * tab.d[l] * blk.T[:, :, None]
            idx = np.arange(-l, l + 1) % nang
            H[np.ix_(idx, np.arange(tab.nbeta), idx)] += g.transpose(0, 2, 1)
        f = np.fft.fft2(H, axes=(0, 2))
    f = f.ravel()
    if spec.real:
        f = f.real.copy()
    return GridField(grid, f)


def plancherel_norm(spec: SpectralField) -> float:
    return float(np.sqrt(np.sum(spec.dual.entry_dim * np.abs(spec.data) ** 2)))


def fractional_multiplier(dual: Dual, s) -> np.ndarray:
    """Per-entry multiplier (lambda^2)^(s/2); zero on the trivial block."""
    return dual.entry_casimir ** (s / 2)


def apply_fractional_laplacian(spec: SpectralField, s) -> SpectralField:
    if s <= 0:
        raise ValueError("order must be positive")
    return SpectralField(spec.dual, spec.data * fractional_multiplier(spec.dual, s), spec.real)


def sobolev_norm(spec: SpectralField, alpha) -> float:
    return plancherel_norm(spec) + plancherel_norm(apply_fractional_laplacian(spec, alpha))


def lq_norm(field: GridField, q, grid: QuadratureGrid = None) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    grid = grid or field.grid
    return float(np.sum(grid.weights * np.abs(field.values) ** q) ** (1.0 / q))


def random_band_limited(dual: Dual, seed, decay_rate=0.0, real=True) -> SpectralField:
    """Gaussian coefficients scaled by (1 + lambda^2)^(-decay_rate)."""
    if decay_rate < 0:
        raise ValueError("decay_rate must be >= 0")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal(dual.size) + 1j * rng.standard_normal(dual.size)) / np.sqrt(2)
    spec = SpectralField(dual, z * (1 + dual.entry_casimir) ** (-decay_rate))
    return spec.enforce_reality() if real else spec


def character(dual: Dual, l, amplitude=1.0) -> SpectralField:
    """Coefficients of amplitude * chi_l on SO(3): block I/d at degree l."""
    out = SpectralField.zeros(dual, real=True)
    d = 2 * l + 1
    out.set_block((l,), amplitude * np.eye(d) / d)
    return out


def torus_mode(dual: Dual, k, amplitude=1.0, real=False) -> SpectralField:
    """amplitude * exp(i k.x), or amplitude * cos(k.x) when ``real``."""
    out = SpectralField.zeros(dual, real=real)
    k = tuple(np.atleast_1d(k).tolist())
    if real:
        out.data[dual.block_slice(k)] += amplitude / 2
        out.data[dual.block_slice(tuple(-v for v in k))] += amplitude / 2
    else:
        out.data[dual.block_slice(k)] = amplitude
    return out
