"""Few-photon Fock-space states and linear-optical mode transforms.

Creation operators transform as ``a†_i -> sum_j M[j, i] a†_j``. Transition
amplitudes between number states are matrix permanents of M with rows and
columns repeated by occupation. Couplers use the symmetric convention where
the cross port picks up a factor ``i``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

N_MAX = 4
UNITARY_TOL = 1e-12

Occupation = tuple[int, ...]


class FockError(ValueError):
    """Invalid state, transform or pattern."""


class CutoffError(FockError):
    """Photon number above the configured cutoff."""


def _as_occupation(occ: Iterable[int]) -> Occupation:
    out = tuple(int(n) for n in occ)
    if any(n < 0 for n in out):
        raise FockError(f"negative occupation in {out}")
    return out


@dataclass(frozen=True)
class StateVector:
    """Pure state as sparse amplitudes over lexicographically ordered Fock kets.

    ``success_probability`` accumulates the norm removed by subunitary
    transforms (loss / post-selection); amplitudes are always renormalized.
    """

    modes: int
    occupations: tuple[Occupation, ...]
    amplitudes: np.ndarray
    success_probability: float = 1.0
    n_max: int = N_MAX

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if len(amps) != len(self.occupations):
            raise FockError("amplitudes and basis differ in length")
        if len(set(self.occupations)) != len(self.occupations):
            raise FockError("basis states must be distinct")
        for occ in self.occupations:
            if len(occ) != self.modes:
                raise FockError(f"ket {occ} does not have {self.modes} modes")
            if sum(occ) > self.n_max:
                raise CutoffError(f"ket {occ} exceeds cutoff N_max={self.n_max}")
        if not 0.0 <= self.success_probability <= 1.0 + 1e-12:
            raise FockError("success_probability outside [0, 1]")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "success_probability", min(float(self.success_probability), 1.0))

    @classmethod
    def from_dict(
        cls,
        terms: Mapping[Sequence[int], complex],
        modes: int | None = None,
        success_probability: float = 1.0,
        n_max: int = N_MAX,
        normalize: bool = True,
    ) -> "StateVector":
        """Build a state from ``{occupation: amplitude}``; zero terms are dropped."""
        merged: dict[Occupation, complex] = {}
        for occ, amp in terms.items():
            key = _as_occupation(occ)
            merged[key] = merged.get(key, 0j) + complex(amp)
        if modes is None:
            if not merged:
                raise FockError("cannot infer mode count from an empty state")
            modes = len(next(iter(merged)))
        keys = sorted(k for k, v in merged.items() if v != 0)
        amps = np.array([merged[k] for k in keys], dtype=complex)
        norm = float(np.sqrt(np.sum(np.abs(amps) ** 2)))
        if normalize:
            if norm == 0.0:
                raise FockError("state has zero norm")
            amps = amps / norm
        return cls(modes, tuple(keys), amps, success_probability, n_max)

    @classmethod
    def basis(cls, occ: Sequence[int], n_max: int = N_MAX) -> "StateVector":
        occ = _as_occupation(occ)
        return cls(len(occ), (occ,), np.array([1.0 + 0j]), 1.0, n_max)

    def as_dict(self) -> dict[Occupation, complex]:
        return {occ: complex(a) for occ, a in zip(self.occupations, self.amplitudes)}

    def amplitude(self, occ: Sequence[int]) -> complex:
        return self.as_dict().get(_as_occupation(occ), 0j)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def photon_numbers(self) -> set[int]:
        return {sum(o) for o in self.occupations}

    def probabilities(self) -> dict[Occupation, float]:
        return {occ: float(abs(a) ** 2) for occ, a in zip(self.occupations, self.amplitudes)}

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if other.modes != self.modes:
            raise FockError("mode count mismatch")
        mine = self.as_dict()
        return sum(np.conj(mine.get(o, 0j)) * a for o, a in other.as_dict().items())

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(self.overlap(other)) ** 2)

    def with_global_phase(self, theta: float) -> "StateVector":
        return StateVector(
            self.modes, self.occupations, self.amplitudes * np.exp(1j * theta),
            self.success_probability, self.n_max,
        )

    def to_json(self) -> str:
        terms = [
            {"occ": list(occ), "re": float(a.real), "im": float(a.imag)}
            for occ, a in zip(self.occupations, self.amplitudes)
        ]
        return json.dumps({"modes": self.modes, "terms": terms, "success_p": self.success_probability})

    @classmethod
    def from_json(cls, text: str, n_max: int = N_MAX) -> "StateVector":
        doc = json.loads(text)
        terms = {tuple(t["occ"]): complex(t["re"], t["im"]) for t in doc["terms"]}
        return cls.from_dict(terms, modes=doc["modes"], success_probability=doc["success_p"],
                             n_max=n_max, normalize=False)


@dataclass(frozen=True)
class ModeTransform:
    """Square transfer matrix on optical modes (``kind``: unitary or subunitary)."""

    matrix: np.ndarray
    kind: str = "unitary"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise FockError(f"transform must be square, got shape {m.shape}")
        if self.kind == "unitary":
            err = np.max(np.abs(m.conj().T @ m - np.eye(len(m))))
            if err > UNITARY_TOL:
                raise FockError(f"matrix is not unitary (max |M†M - I| = {err:.3g})")
        elif self.kind == "subunitary":
            if np.linalg.svd(m, compute_uv=False).max() > 1 + UNITARY_TOL:
                raise FockError("subunitary transform has a singular value above 1")
        else:
            raise FockError(f"unknown transform kind {self.kind!r}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def infer(cls, matrix) -> "ModeTransform":
        m = np.asarray(matrix, dtype=complex)
        unitary = np.max(np.abs(m.conj().T @ m - np.eye(len(m)))) <= UNITARY_TOL
        return cls(m, "unitary" if unitary else "subunitary")

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "ModeTransform") -> "ModeTransform":
        return ModeTransform.infer(self.matrix @ other.matrix)


def coupler(cross_ratio: float) -> ModeTransform:
    """2x2 directional coupler with power cross-coupling ``cross_ratio``."""
    if not 0.0 <= cross_ratio <= 1.0:
        raise FockError("coupler ratio must lie in [0, 1]")
    t = math.sqrt(1.0 - cross_ratio)
    r = math.sqrt(cross_ratio)
    return ModeTransform(np.array([[t, 1j * r], [1j * r, t]]))


def attenuator(transmissions: Sequence[float]) -> ModeTransform:
    """Diagonal amplitude loss; ``transmissions`` are power transmissions."""
    amps = np.sqrt(np.asarray(transmissions, dtype=float))
    if np.any(amps > 1.0) or np.any(amps < 0.0):
        raise FockError("power transmission must lie in [0, 1]")
    return ModeTransform(np.diag(amps).astype(complex), "subunitary")


def permanent(a: np.ndarray) -> complex:
    """Ryser's formula; the empty matrix has permanent 1."""
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for subset in range(1, 1 << n):
        cols = [j for j in range(n) if subset >> j & 1]
        rowsums = a[:, cols].sum(axis=1)
        total += (-1) ** len(cols) * np.prod(rowsums)
    return (-1) ** n * total


def _repeat_indices(occ: Occupation) -> list[int]:
    return [i for i, n in enumerate(occ) for _ in range(n)]


def _compositions(total: int, modes: int):
    """All occupation tuples with ``modes`` entries summing to ``total``."""
    for cut in itertools.combinations(range(total + modes - 1), modes - 1):
        bounds = (-1,) + cut + (total + modes - 1,)
        yield tuple(bounds[k + 1] - bounds[k] - 1 for k in range(modes))


def _check_dims(state: StateVector, m: ModeTransform):
    if m.modes != state.modes:
        raise FockError(f"transform acts on {m.modes} modes, state has {state.modes}")


def _finish(state: StateVector, out: dict[Occupation, complex], m: ModeTransform) -> StateVector:
    amps = np.array(list(out.values()))
    norm2 = float(np.sum(np.abs(amps) ** 2)) if len(amps) else 0.0
    if m.kind == "unitary":
        return StateVector.from_dict(out, state.modes, state.success_probability, state.n_max, normalize=False)
    if norm2 == 0.0:
        raise FockError("transform annihilated the state (zero success probability)")
    return StateVector.from_dict(out, state.modes, state.success_probability * norm2, state.n_max)


def apply_mode_transform(state: StateVector, m: ModeTransform) -> StateVector:
    """Propagate ``state`` through the linear network ``m``.

    Subunitary transforms post-select on no photon lost: the result is
    renormalized and its success probability multiplied by the surviving norm.
    """
    _check_dims(state, m)
    mat = m.matrix
    out: dict[Occupation, complex] = {}
    for occ_in, amp in zip(state.occupations, state.amplitudes):
        cols = _repeat_indices(occ_in)
        in_norm = math.prod(math.factorial(n) for n in occ_in)
        for occ_out in _compositions(len(cols), state.modes):
            rows = _repeat_indices(occ_out)
            sub = mat[np.ix_(rows, cols)]
            out_norm = math.prod(math.factorial(n) for n in occ_out)
            value = amp * permanent(sub) / math.sqrt(in_norm * out_norm)
            if value != 0:
                out[occ_out] = out.get(occ_out, 0j) + value
    return _finish(state, out, m)


def brute_force_oracle(state: StateVector, m: ModeTransform) -> StateVector:
    """Reference propagation by expanding the substituted creation-operator polynomial.

    Each ket is written as prod_i (a†_i)^n_i / sqrt(n_i!), every a†_i is replaced
    by its image, and the product is multiplied out monomial by monomial. Used
    to cross-check :func:`apply_mode_transform` in tests.
    """
    _check_dims(state, m)
    k = state.modes
    mat = m.matrix
    images = [{tuple(int(j == jj) for jj in range(k)): mat[j, i] for j in range(k)} for i in range(k)]
    out: dict[Occupation, complex] = {}
    for occ_in, amp in zip(state.occupations, state.amplitudes):
        poly: dict[Occupation, complex] = {(0,) * k: complex(amp)}
        for i, n in enumerate(occ_in):
            for _ in range(n):
                nxt: dict[Occupation, complex] = {}
                for mono, c in poly.items():
                    for step, coeff in images[i].items():
                        key = tuple(a + b for a, b in zip(mono, step))
                        nxt[key] = nxt.get(key, 0j) + c * coeff
                poly = nxt
            poly = {mono: c / math.sqrt(math.factorial(n)) for mono, c in poly.items()}
        for mono, c in poly.items():
            # (a†)^n |0> = sqrt(n!) |n>
            ket_amp = c * math.sqrt(math.prod(math.factorial(n) for n in mono))
            if sum(mono) > state.n_max:
                raise CutoffError("transform produced a state above the cutoff")
            if ket_amp != 0:
                out[mono] = out.get(mono, 0j) + ket_amp
    return _finish(state, out, m)


def apply_phase(state: StateVector, mode: int, phase: float) -> StateVector:
    """Phase shifter on one mode: each ket picks up exp(i * n_mode * phase)."""
    if not 0 <= mode < state.modes:
        raise FockError(f"mode {mode} out of range for {state.modes}-mode state")
    factors = np.array([np.exp(1j * occ[mode] * phase) for occ in state.occupations])
    return StateVector(state.modes, state.occupations, state.amplitudes * factors,
                       state.success_probability, state.n_max)


def pattern_probability(state: StateVector, pattern: Sequence[int], unconditional: bool = False) -> float:
    """Born-rule probability of a detection pattern.

    With ``unconditional`` the post-selected probability is multiplied by the
    state's success probability.
    """
    occ = _as_occupation(pattern)
    if len(occ) != state.modes:
        raise FockError(f"pattern {occ} does not match {state.modes} modes")
    p = abs(state.amplitude(occ)) ** 2
    return p * state.success_probability if unconditional else p
