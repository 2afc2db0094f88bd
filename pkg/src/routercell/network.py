"""Multiport scattering algebra for a cell embedded between measurement lines.

The measured response of the four-port cell is not the cell itself: each
waveguide port sits behind a two-port input or output line (attenuators,
connectors, cable runs).  This module composes the cell S-matrix with the
four line matrices into the effective S-matrix seen by the instrument,
either exactly (block elimination of the internal waves) or as a truncated
multiple-reflection series, and provides the simplified scalar forward map
used when line reflections are negligible.

Port order of every 4x4 matrix is (A-in, A-out, B-in, B-out).  Two-port
line matrices are oriented so port 1 faces the instrument for input lines
and the cell for output lines; the ``S21`` entry (row 2, column 1) is
therefore always the transmission in the propagation direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "PortMatrix",
    "LineModel",
    "CompositionResult",
    "SingularNetworkError",
    "DivergenceError",
    "permutation_matrix",
    "complementary_blocks",
    "compose_exact",
    "compose_neumann",
    "simplified_forward",
    "isolation_from_hd",
    "ideal_lines",
]

#: Regularization added to a singular cell matrix before inversion.
SINGULAR_EPS = 1e-12


class SingularNetworkError(RuntimeError):
    """Raised when the internal-wave elimination hits a singular system."""

    def __init__(self, message: str, condition_number: float = np.inf):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class DivergenceError(RuntimeError):
    """Raised when the reflection series cannot converge."""


@dataclass(frozen=True)
class PortMatrix:
    """Square complex scattering matrix with a fixed port count."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"port matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("port matrix entries must be finite")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_passive(self, tol: float = 1e-9) -> bool:
        """True if the largest singular value does not exceed 1 + tol."""
        return bool(np.linalg.norm(self.entries, 2) <= 1.0 + tol)

    def __array__(self, dtype=None):
        return np.asarray(self.entries, dtype=dtype)


def _as_matrix(m) -> np.ndarray:
    return np.asarray(getattr(m, "entries", m), dtype=complex)


@dataclass(frozen=True)
class LineModel:
    """Two-port models of the four measurement lines plus stray coupling.

    Each line matrix has shape (2, 2) for frequency-independent lines or
    (n, 2, 2) for per-frequency data; ``isolation`` is the residual direct
    wave amplitude between the two waveguides bypassing the cell (a scalar,
    or length-n array for per-frequency lines).
    """

    s_in_a: np.ndarray
    s_out_a: np.ndarray
    s_in_b: np.ndarray
    s_out_b: np.ndarray
    isolation: complex | np.ndarray = 0.0

    def __post_init__(self):
        for name in ("s_in_a", "s_out_a", "s_in_b", "s_out_b"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.shape[-2:] != (2, 2) or m.ndim not in (2, 3):
                raise ValueError(f"{name} must have shape (2, 2) or (n, 2, 2)")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} entries must be finite")
            object.__setattr__(self, name, m)

    @property
    def matrices(self) -> tuple[np.ndarray, ...]:
        return (self.s_in_a, self.s_out_a, self.s_in_b, self.s_out_b)

    @property
    def n_points(self) -> int | None:
        """Number of frequency points, or None for frequency-independent lines."""
        for m in self.matrices:
            if m.ndim == 3:
                return m.shape[0]
        return None

    def at(self, i: int) -> "LineModel":
        """Single-frequency slice of per-frequency line data."""
        iso = self.isolation
        if np.ndim(iso) > 0:
            iso = complex(np.asarray(iso)[i])
        picked = (m[i] if m.ndim == 3 else m for m in self.matrices)
        return LineModel(*picked, isolation=iso)

    def is_passive(self, tol: float = 1e-9) -> bool:
        for m in self.matrices:
            stack = m.reshape(-1, 2, 2)
            if np.any(np.linalg.norm(stack, 2, axis=(1, 2)) > 1.0 + tol):
                return False
        return True


@dataclass(frozen=True)
class CompositionResult:
    """Effective measured S-matrix with composition diagnostics."""

    s_meas: PortMatrix
    order_used: int | str
    truncation_error: float
    regularized: bool = False


def ideal_lines(isolation: complex = 0.0) -> LineModel:
    """Reflectionless unit-transmission lines (identity de-embedding)."""
    swap = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return LineModel(swap, swap, swap, swap, isolation=isolation)


def permutation_matrix() -> PortMatrix:
    """Fixed 8x8 permutation mapping natural wave order to (external, internal).

    Natural order stacks the two-port waves as (a_A, a_GA, a_B, a_GB); the
    permuted order groups the measurable waves first and the waves
    circulating between the lines and the cell last.
    """
    order = [0, 3, 4, 7, 1, 2, 5, 6]
    p = np.zeros((8, 8))
    for row, col in enumerate(order):
        p[row, col] = 1.0
    return PortMatrix(p)


def complementary_blocks(lines: LineModel) -> dict[str, np.ndarray]:
    """4x4 diagonal blocks of the permuted block-diagonal line matrix.

    Builds the 8x8 block diagonal of the four two-port matrices in natural
    order, conjugates by the permutation that separates external from
    internal waves, and returns the four 4x4 corner blocks ``s11`` (external
    to external), ``s12``, ``s21`` and ``s22`` (internal to internal).
    """
    if lines.n_points is not None:
        raise ValueError("complementary_blocks expects single-frequency lines; use LineModel.at")
    full = np.zeros((8, 8), dtype=complex)
    for k, m in enumerate(lines.matrices):
        full[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = m
    p = permutation_matrix().entries
    comp = p @ full @ p.T
    return {
        "s11": comp[:4, :4],
        "s12": comp[:4, 4:],
        "s21": comp[4:, :4],
        "s22": comp[4:, 4:],
    }


def _invert_cell(cell: np.ndarray) -> tuple[np.ndarray, bool]:
    cond = np.linalg.cond(cell)
    regularized = not np.isfinite(cond) or cond > 1.0 / SINGULAR_EPS
    if regularized:
        cell = cell + SINGULAR_EPS * np.eye(cell.shape[0])
    return np.linalg.inv(cell), regularized


def compose_exact(cell, lines: LineModel) -> CompositionResult:
    """Measured S-matrix with the internal waves eliminated exactly.

    Solves ``s_meas = S11 + S12 (S^-1 - S22)^-1 S21`` where S is the cell
    matrix and the Sij are the complementary line blocks.  A singular cell
    is regularized by ``SINGULAR_EPS * I`` and flagged in the result.
    """
    s = _as_matrix(cell)
    if s.shape != (4, 4):
        raise ValueError("cell must be a 4-port matrix")
    blocks = complementary_blocks(lines)
    s_inv, regularized = _invert_cell(s)
    core = s_inv - blocks["s22"]
    cond = np.linalg.cond(core)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularNetworkError("internal-wave system is singular", cond)
    s_meas = blocks["s11"] + blocks["s12"] @ np.linalg.inv(core) @ blocks["s21"]
    return CompositionResult(PortMatrix(s_meas), "exact", 0.0, regularized)


def compose_neumann(cell, lines: LineModel, order: int) -> CompositionResult:
    """Measured S-matrix from the truncated multiple-reflection series.

    ``order`` counts the retained series terms: order 0 keeps only the
    direct line response S11, order 1 adds the single cell passage
    ``S12 S S21``, and each further order adds one internal round trip
    through ``S S22``.  The truncation error against the exact composition
    is recorded as the maximum entry magnitude of the difference.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    s = _as_matrix(cell)
    blocks = complementary_blocks(lines)
    x = s @ blocks["s22"]
    radius = float(np.max(np.abs(np.linalg.eigvals(x))))
    if radius >= 1.0:
        raise DivergenceError(
            f"reflection series diverges: spectral radius {radius:.6f} >= 1"
        )
    partial = np.zeros((4, 4), dtype=complex)
    term = np.eye(4, dtype=complex)
    for _ in range(order):
        partial = partial + term
        term = x @ term
    s_meas = blocks["s11"] + blocks["s12"] @ partial @ s @ blocks["s21"]
    exact = compose_exact(cell, lines)
    err = float(np.max(np.abs(exact.s_meas.entries - s_meas)))
    return CompositionResult(PortMatrix(s_meas), order, err, exact.regularized)


def _transmissions(lines: LineModel) -> tuple[np.ndarray, ...]:
    return tuple(m[..., 1, 0] for m in lines.matrices)


def simplified_forward(cell_coeffs: Mapping[str, complex | np.ndarray],
                       lines: LineModel) -> dict[str, np.ndarray]:
    """Measured four-channel coefficients with line reflections neglected.

    Through channels pick up the product of the input and output line
    transmissions; cross channels additionally carry the stray isolation
    wave added to the cell coefficient.  Valid when the line reflections
    are small (the truncated series keeps only the direct passage).
    """
    sa, ga, sb, gb = _transmissions(lines)
    iso = np.asarray(lines.isolation)
    return {
        "AA": sa * np.asarray(cell_coeffs["AA"]) * ga,
        "BB": sb * np.asarray(cell_coeffs["BB"]) * gb,
        "AB": sa * (np.asarray(cell_coeffs["AB"]) + iso) * gb,
        "BA": sb * (np.asarray(cell_coeffs["BA"]) + iso) * ga,
    }


def isolation_from_hd(hd: Mapping[str, complex | np.ndarray]) -> complex | np.ndarray:
    """Stray coupling amplitude recovered from high-drive reference traces.

    With the emitter saturated, the cross references are pure isolation
    leakage through the lines, so ``sqrt((AB * BA) / (AA * BB))`` cancels
    every line factor (principal square-root branch).
    """
    aa = np.asarray(hd["AA"])
    bb = np.asarray(hd["BB"])
    if np.any(np.abs(aa) == 0) or np.any(np.abs(bb) == 0):
        raise ValueError("through high-drive references must be nonzero")
    out = np.sqrt((np.asarray(hd["AB"]) * np.asarray(hd["BA"])) / (aa * bb))
    if out.ndim == 0:
        return complex(out)
    return out
