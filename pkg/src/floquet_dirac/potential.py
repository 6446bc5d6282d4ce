"""Periodic block potentials built from symmetric trigonometric polynomials.

A potential is determined by the N x N symmetric matrix function
v(t) = sum_m C_m exp(2 pi i m t), |m| <= M, through the self-adjoint block

    V(t) = [[0, v(t)], [v(t)*, 0]]   (2N x 2N, * = conjugate transpose).

Coefficients are stored as a (2M+1, N, N) complex array indexed by m + M.
Exact coefficient algebra supplies the quadratic integrals (second moment,
channel weights nu_j, trace invariants); only the quartic invariant falls
back to uniform-grid quadrature, which is still exact for trigonometric
polynomials once the grid resolves degree 4M.

File format (JSON, documented here and in the README):

    {"schema_version": 1, "n": 2,
     "entries": {"1,2": [[m, re, im], ...], ...}}     explicit coefficients
    {"schema_version": 1, "builtin": "example_4x4",
     "params": {"a": 7.0, "tau": 0.05, "nu": 0.05}}   named builder

Entry keys are 1-based "j,k" with j <= k (symmetry fills the mirror).
Floats are serialized with full repr so coefficients round-trip bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

MAX_CHANNELS = 16
SCHEMA_VERSION = 1


class PotentialError(ValueError):
    """Invalid potential data (asymmetry, bad shapes, failed preconditions)."""


def _symmetry_defect(coeffs: np.ndarray) -> float:
    return float(np.max(np.abs(coeffs - np.swapaxes(coeffs, -1, -2)), initial=0.0))


@dataclass(frozen=True)
class PeriodicPotential:
    """Symmetric trigonometric-polynomial potential of the block Dirac system."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 3 or c.shape[0] % 2 != 1 or c.shape[1] != c.shape[2]:
            raise PotentialError(f"coefficient array has shape {c.shape}, "
                                 "expected (2M+1, N, N)")
        if not 1 <= c.shape[1] <= MAX_CHANNELS:
            raise PotentialError(f"channel count {c.shape[1]} outside [1, {MAX_CHANNELS}]")
        if not np.all(np.isfinite(c.view(np.float64))):
            raise PotentialError("coefficients contain non-finite values")
        scale = max(float(np.max(np.abs(c), initial=0.0)), 1.0)
        defect = _symmetry_defect(c)
        if defect > 1e-12 * scale:
            raise PotentialError(f"v(t) must be symmetric, defect {defect:.3g}")
        # exact symmetrization so downstream algebra sees v = v^T identically
        c = 0.5 * (c + np.swapaxes(c, -1, -2))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        """Channel count N; the full system is 2N-dimensional."""
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.degree, self.degree + 1)

    @property
    def norm2(self) -> float:
        """Squared norm ||V||^2 = Tr integral V(t)^2 dt = 2 sum_m ||C_m||_F^2."""
        return float(2.0 * np.sum(np.abs(self.coeffs) ** 2))

    def v_at(self, t) -> np.ndarray:
        """Evaluate v(t); t scalar or array, result (..., N, N)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        phases = np.exp(2j * np.pi * np.outer(t_arr, self.modes))
        out = np.tensordot(phases, self.coeffs, axes=(1, 0))
        return out[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else out

    def big_v_at(self, t) -> np.ndarray:
        """Evaluate the full block V(t) = [[0, v], [v*, 0]], result (..., 2N, 2N)."""
        v = self.v_at(t)
        squeeze = v.ndim == 2
        if squeeze:
            v = v.reshape(1, self.n, self.n)
        k, n = v.shape[0], self.n
        big = np.zeros((k, 2 * n, 2 * n), dtype=np.complex128)
        big[:, :n, n:] = v
        big[:, n:, :n] = np.conj(np.swapaxes(v, -1, -2))
        return big[0] if squeeze else big

    def derivative_coeffs(self) -> np.ndarray:
        """Fourier coefficients of v'(t)."""
        return self.coeffs * (2j * np.pi * self.modes)[:, None, None]

    def derivative(self) -> "PeriodicPotential":
        return PeriodicPotential(self.derivative_coeffs())

    def coeff(self, m: int) -> np.ndarray:
        """C_m, zero matrix when |m| exceeds the degree."""
        if abs(m) > self.degree:
            return np.zeros((self.n, self.n), dtype=np.complex128)
        return self.coeffs[m + self.degree]

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        flipped = np.conj(self.coeffs[::-1])
        return bool(np.max(np.abs(self.coeffs - flipped), initial=0.0) <= tol)


@dataclass
class PotentialMoments:
    """Quadratic and quartic integral invariants of a potential.

    v2 is the 2N x 2N matrix integral of V(t)^2 over a period; nu are the
    ascending eigenvalues of its upper-left block (the channel weights);
    h0 = Tr v2, h1 = Tr integral(-i J1 V' V), h2 = Tr integral(V'^2 + V^4).
    """

    v2: np.ndarray
    nu: np.ndarray
    norm2: float
    h0: float
    h1: float
    h2: float


def moments(p: PeriodicPotential) -> PotentialMoments:
    c = p.coeffs
    # integral v v* and v* v are mode-diagonal sums of coefficient products
    v1 = np.einsum("mjk,mlk->jl", c, np.conj(c))
    v1t = np.einsum("mkj,mkl->jl", np.conj(c), c)
    n = p.n
    v2 = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    v2[:n, :n] = v1
    v2[n:, n:] = v1t
    nu = np.linalg.eigvalsh(0.5 * (v1 + v1.conj().T))

    weights = np.sum(np.abs(c) ** 2, axis=(1, 2))
    m_vec = p.modes.astype(np.float64)
    h0 = float(2.0 * np.sum(weights))
    h1 = float(4.0 * np.pi * np.sum(m_vec * weights))
    tr_vp2 = float(2.0 * np.sum((2.0 * np.pi * m_vec) ** 2 * weights))

    # quartic term: Tr integral V^4 = 2 Tr integral (v v*)^2; a uniform grid
    # beyond degree 4M integrates the trigonometric polynomial exactly
    k_nodes = max(64, 4 * p.degree + 8)
    t_grid = np.arange(k_nodes) / k_nodes
    v_vals = p.v_at(t_grid)
    h_vals = np.matmul(v_vals, np.conj(np.swapaxes(v_vals, -1, -2)))
    tr_v4 = float(2.0 * np.mean(np.sum(np.abs(h_vals) ** 2, axis=(1, 2))))

    return PotentialMoments(v2=v2, nu=nu, norm2=p.norm2, h0=h0, h1=h1,
                            h2=tr_vp2 + tr_v4)


@dataclass
class FourierData:
    """Twisted Fourier data of v' at integer frequency n.

    vhat_prime is the N x N coefficient integral v'(t) exp(-2 pi i n t) dt;
    big_vhat_prime embeds it in the 2N x 2N block [[0, w], [w*, 0]].
    """

    n: int
    vhat_prime: np.ndarray
    big_vhat_prime: np.ndarray


def fourier_data(p: PeriodicPotential, n: int) -> FourierData:
    w = 2j * np.pi * n * p.coeff(n)
    nn = p.n
    big = np.zeros((2 * nn, 2 * nn), dtype=np.complex128)
    big[:nn, nn:] = w
    big[nn:, :nn] = w.conj().T
    return FourierData(n=n, vhat_prime=w, big_vhat_prime=big)


def integral_abs_v(p: PeriodicPotential) -> float:
    """Integral over one period of the operator norm |V(t)| (= |v(t)|_2)."""
    k_nodes = max(256, 8 * (p.degree + 1))
    t_grid = np.arange(k_nodes) / k_nodes
    v_vals = p.v_at(t_grid).reshape(k_nodes, p.n, p.n)
    norms = [np.linalg.norm(v_vals[i], 2) for i in range(k_nodes)]
    return float(np.mean(norms))


# ---------------------------------------------------------------------------
# builders


def zero_potential(n: int) -> PeriodicPotential:
    return PeriodicPotential(np.zeros((1, n, n), dtype=np.complex128))


def constant_potential(v0) -> PeriodicPotential:
    m = np.asarray(v0, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PotentialError(f"constant block must be square, got {m.shape}")
    return PeriodicPotential(m[None, :, :])


def diagonal_potential(values) -> PeriodicPotential:
    vals = np.asarray(values, dtype=np.complex128)
    if vals.ndim != 1 or len(vals) < 1:
        raise PotentialError("diagonal builder expects a flat list of constants")
    return constant_potential(np.diag(vals))


def bump_coeffs(nu: float, degree: int | None = None) -> np.ndarray:
    """Fourier coefficients of the periodized unit-mass Gaussian bump.

    Centered at t = 1/2 with width nu; coefficient at mode m is
    (-1)^m exp(-2 pi^2 m^2 nu^2). The zero mode is exactly 1, so truncation
    never disturbs the unit mass.
    """
    if nu <= 0:
        raise PotentialError("bump width must be positive")
    m_deg = int(math.ceil(6.0 / nu)) if degree is None else degree
    modes = np.arange(-m_deg, m_deg + 1)
    return ((-1.0) ** modes) * np.exp(-2.0 * np.pi ** 2 * modes ** 2 * nu ** 2)


def example_4x4(a: float, tau: float, nu: float = 0.05) -> PeriodicPotential:
    """Two-channel potential v = -[[a, tau b_nu], [tau b_nu, 0]].

    The coupling b_nu is the periodized Gaussian bump from bump_coeffs. At
    tau = 0 the system splits into a constant-mass channel and a free one;
    small tau couples them and bifurcates the real branch-point pairs.
    """
    if tau == 0:
        return constant_potential(np.array([[-a, 0.0], [0.0, 0.0]]))
    b_hat = bump_coeffs(nu)
    m_deg = len(b_hat) // 2
    coeffs = np.zeros((2 * m_deg + 1, 2, 2), dtype=np.complex128)
    coeffs[m_deg, 0, 0] = -a
    coeffs[:, 0, 1] = -tau * b_hat
    coeffs[:, 1, 0] = -tau * b_hat
    return PeriodicPotential(coeffs)


def from_entries(n: int, entries: Mapping) -> PeriodicPotential:
    """Build from a mapping of 1-based "j,k" (or (j, k)) to (m, re, im) triples."""
    parsed: dict[tuple[int, int], list] = {}
    max_mode = 0
    for key, triples in entries.items():
        if isinstance(key, str):
            j_s, k_s = key.split(",")
            j, k = int(j_s), int(k_s)
        else:
            j, k = int(key[0]), int(key[1])
        if not (1 <= j <= n and 1 <= k <= n):
            raise PotentialError(f"entry index ({j},{k}) outside 1..{n}")
        parsed[(j, k)] = list(triples)
        for m, _re, _im in triples:
            max_mode = max(max_mode, abs(int(m)))
    coeffs = np.zeros((2 * max_mode + 1, n, n), dtype=np.complex128)
    for (j, k), triples in parsed.items():
        for m, re_part, im_part in triples:
            val = complex(float(re_part), float(im_part))
            idx = int(m) + max_mode
            coeffs[idx, j - 1, k - 1] += val
            if j != k:
                coeffs[idx, k - 1, j - 1] += val
    return PeriodicPotential(coeffs)


_BUILTINS = {
    "zero": lambda params: zero_potential(int(params.get("n", 2))),
    "constant": lambda params: constant_potential(params["v0"]),
    "diagonal": lambda params: diagonal_potential(params["values"]),
    "example_4x4": lambda params: example_4x4(float(params["a"]),
                                              float(params["tau"]),
                                              float(params["nu"])),
}


def build_potential(spec: Mapping) -> PeriodicPotential:
    """Dispatch a parsed potential description (builtin or explicit entries)."""
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in _BUILTINS:
            raise PotentialError(f"unknown builtin '{name}', "
                                 f"available: {sorted(_BUILTINS)}")
        return _BUILTINS[name](spec.get("params", {}))
    if "entries" in spec:
        if "n" not in spec:
            raise PotentialError("explicit entries require a channel count 'n'")
        return from_entries(int(spec["n"]), spec["entries"])
    raise PotentialError("potential spec needs either 'builtin' or 'entries'")


# ---------------------------------------------------------------------------
# serialization


def potential_to_dict(p: PeriodicPotential) -> dict:
    entries: dict[str, list] = {}
    m_deg = p.degree
    for j in range(p.n):
        for k in range(j, p.n):
            triples = []
            for mi in range(2 * m_deg + 1):
                val = p.coeffs[mi, j, k]
                if val != 0:
                    triples.append([mi - m_deg, float(val.real), float(val.imag)])
            if triples:
                entries[f"{j + 1},{k + 1}"] = triples
    return {"schema_version": SCHEMA_VERSION, "n": p.n, "entries": entries}


def save_potential(p: PeriodicPotential, path) -> None:
    Path(path).write_text(json.dumps(potential_to_dict(p), indent=1, sort_keys=True))


def load_potential(path) -> PeriodicPotential:
    spec = json.loads(Path(path).read_text())
    version = spec.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise PotentialError(f"unsupported potential schema version {version}")
    return build_potential(spec)


# ---------------------------------------------------------------------------
# normal form


def _normalize_core(omega: np.ndarray) -> tuple[PeriodicPotential, np.ndarray]:
    """Diagonalize integral(omega omega*) by a constant unitary E.

    Returns the potential with coefficients E* W_m conj(E) (still symmetric)
    and E itself; the full 2N transform is E (+) conj(E).
    """
    v1 = np.einsum("mjk,mlk->jl", omega, np.conj(omega))
    v1 = 0.5 * (v1 + v1.conj().T)
    nu, e_mat = np.linalg.eigh(v1)
    scale = max(float(np.max(np.abs(v1), initial=0.0)), 1.0)
    if nu[0] < -1e-10 * scale:
        raise PotentialError(f"second moment not positive semidefinite "
                             f"(min eigenvalue {nu[0]:.3g})")
    new_coeffs = np.einsum("ja,mjk,kb->mab", np.conj(e_mat), omega, np.conj(e_mat))
    return PeriodicPotential(new_coeffs), e_mat


def normalize(p: PeriodicPotential) -> tuple[PeriodicPotential, np.ndarray]:
    """Rotate a potential into normal form: integral(v v*) diagonal ascending.

    Returns (normalized potential, E) with the constant N x N unitary E such
    that the new v is E* v conj(E); monodromy traces are preserved because
    the full transform E (+) conj(E) commutes with the system structure.
    """
    return _normalize_core(np.array(p.coeffs))


def normalize_omega(omega1: np.ndarray, omega2: np.ndarray
                    ) -> tuple[PeriodicPotential, np.ndarray]:
    """Normal form for a general self-adjoint first-order perturbation.

    omega1/omega2 are (2M+1, N, N) Fourier coefficients of real self-adjoint
    matrix functions (the diagonal and skew blocks of the first-order term).
    The combined symmetric matrix omega = -omega2 + i omega1 is brought to
    normal form exactly as a potential is.
    """
    w1 = np.asarray(omega1, dtype=np.complex128)
    w2 = np.asarray(omega2, dtype=np.complex128)
    if w1.shape != w2.shape or w1.ndim != 3 or w1.shape[0] % 2 != 1:
        raise PotentialError("omega blocks must share an odd-length (2M+1, N, N) shape")
    for name, w in (("omega1", w1), ("omega2", w2)):
        scale = max(float(np.max(np.abs(w), initial=0.0)), 1.0)
        if np.max(np.abs(w - np.conj(w[::-1])), initial=0.0) > 1e-12 * scale:
            raise PotentialError(f"{name} must be real-valued "
                                 "(coefficient conjugate symmetry fails)")
        herm_defect = np.max(np.abs(w - np.conj(np.swapaxes(w[::-1], 1, 2))),
                             initial=0.0)
        if herm_defect > 1e-12 * scale:
            raise PotentialError(f"{name} must take self-adjoint values "
                                 f"(defect {herm_defect:.3g})")
    return _normalize_core(-w2 + 1j * w1)
