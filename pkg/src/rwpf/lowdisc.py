"""Randomized low-discrepancy point sets in [0,1)^d.

The base construction is a digital (t,s)-sequence in base 2 built from a
bundled table of primitive polynomials and initial direction numbers
(Joe-Kuo D6 style, dimensions 2..64; dimension 1 is the van der Corput
sequence). Points are produced in natural index order: the binary digits
of the point index select which direction integers get XORed together,
so index 0 is the origin. Randomization (digital shift by default, nested
uniform scrambling opt-in) makes every point marginally uniform while
preserving the digital-net structure.

Points are held both as floats and as 53-bit integers; all randomization
happens on the integer form, so regenerating with the same
(dimension, count, scheme, seed) is bit-identical.
"""

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.stats import chi2

from .errors import UnsupportedDimensionError

MAX_DIMENSION = 64
N_BITS = 53
_SCALE = float(2**N_BITS)

SCHEME_NONE = "none"
SCHEME_DIGITAL_SHIFT = "digital-shift"
SCHEME_OWEN = "owen-scramble"
_SCHEMES = (SCHEME_DIGITAL_SHIFT, SCHEME_OWEN)

_MAX_COUNT = 2**31  # index arithmetic stays comfortably inside 53 bits


@dataclass(frozen=True, eq=False)
class PointSet:
    """An M x d point set in [0,1)^d with its exact 53-bit integer form."""

    dimension: int
    count: int
    points: np.ndarray          # (M, d) float64
    randomization: str
    seed: int | None
    ipoints: np.ndarray         # (M, d) uint64, points * 2**53


@dataclass
class ProjectionReport:
    """Chi-square uniformity statistics of all 2D coordinate projections."""

    count: int
    dimension: int
    grid: int                                   # cells per axis
    pair_stats: dict[tuple[int, int], float]    # (i, j) -> chi-square
    dof: int
    threshold_999: float
    insufficient_points: bool

    @property
    def max_stat(self) -> float:
        return max(self.pair_stats.values()) if self.pair_stats else 0.0


@lru_cache(maxsize=1)
def _direction_table() -> dict[int, tuple[int, int, list[int]]]:
    """Parse the bundled table: dimension -> (degree s, coeffs a, m_1..m_s)."""
    text = resources.files("rwpf.data").joinpath("joe-kuo-d6-64.txt").read_text()
    table = {}
    for line in text.splitlines()[1:]:
        parts = line.split()
        if not parts:
            continue
        d, s, a = int(parts[0]), int(parts[1]), int(parts[2])
        m = [int(tok) for tok in parts[3:]]
        assert len(m) == s
        table[d] = (s, a, m)
    return table


@lru_cache(maxsize=MAX_DIMENSION)
def _direction_integers(dimension: int) -> np.ndarray:
    """53-bit direction integers v_1..v_53 for one coordinate (1-based dim)."""
    if dimension == 1:
        m = [1] * N_BITS
    else:
        s, a, m_init = _direction_table()[dimension]
        m = list(m_init)
        for k in range(s, N_BITS):
            # m_k = m_{k-s} ^ 2^s m_{k-s} ^ XOR_{i<s} a_i 2^i m_{k-i}
            new = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= m[k - i] << i
            m.append(new)
    v = [m[k] << (N_BITS - (k + 1)) for k in range(N_BITS)]
    return np.array(v, dtype=np.uint64)


def _to_floats(ipoints: np.ndarray) -> np.ndarray:
    return ipoints.astype(np.float64) / _SCALE


def generate_base(dimension: int, count: int) -> PointSet:
    """First ``count`` points of the base-2 digital sequence, unrandomized.

    Point i is the XOR of the direction integers selected by the binary
    digits of i (natural order, so the ordering convention pinned by the
    tests is x_0=0, x_1=0.5, x_2=0.25, ... in one dimension).
    """
    if not 1 <= dimension <= MAX_DIMENSION:
        raise UnsupportedDimensionError(
            f"dimension {dimension} outside supported range 1..{MAX_DIMENSION}"
        )
    if not 1 <= count <= _MAX_COUNT:
        raise ValueError(f"count must be in 1..{_MAX_COUNT}, got {count}")

    v = np.stack([_direction_integers(j + 1) for j in range(dimension)])  # (d, 53)
    idx = np.arange(count, dtype=np.uint64)
    ipoints = np.zeros((count, dimension), dtype=np.uint64)
    for b in range(max(int(count - 1).bit_length(), 1)):
        hit = (idx >> np.uint64(b)) & np.uint64(1) == 1
        ipoints[hit] ^= v[:, b]
    return PointSet(dimension, count, _to_floats(ipoints), SCHEME_NONE, None, ipoints)


def apply_digital_shift(base: PointSet, shifts: np.ndarray) -> PointSet:
    """XOR every point with one 53-bit shift integer per coordinate."""
    shifts = np.asarray(shifts, dtype=np.uint64)
    if shifts.shape != (base.dimension,):
        raise ValueError(f"need {base.dimension} shifts, got shape {shifts.shape}")
    ipoints = base.ipoints ^ shifts[None, :]
    return PointSet(base.dimension, base.count, _to_floats(ipoints),
                    SCHEME_DIGITAL_SHIFT, base.seed, ipoints)


def shift_from_floats(values) -> np.ndarray:
    """Convert shift coordinates in [0,1) to their 53-bit integer form."""
    arr = np.asarray(values, dtype=np.float64)
    return (arr * _SCALE).astype(np.uint64)


def _owen_scramble(ipoints: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Nested uniform scrambling: one random bit flip per node of the dyadic
    tree of each coordinate, applied by original-prefix grouping."""
    out = ipoints.copy()
    for j in range(ipoints.shape[1]):
        x = ipoints[:, j]
        acc = np.zeros_like(x)
        for level in range(N_BITS):
            prefixes = x >> np.uint64(N_BITS - level)
            uniq, inverse = np.unique(prefixes, return_inverse=True)
            flips = rng.integers(0, 2, size=uniq.shape[0], dtype=np.uint64)
            acc ^= flips[inverse] << np.uint64(N_BITS - 1 - level)
        out[:, j] = x ^ acc
    return out


def randomize(base: PointSet, scheme: str, seed: int) -> PointSet:
    """Seed-deterministic randomization of an unrandomized point set."""
    if base.randomization != SCHEME_NONE:
        raise ValueError("randomize expects an unrandomized base point set")
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown randomization scheme {scheme!r}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    if scheme == SCHEME_DIGITAL_SHIFT:
        shifts = rng.integers(0, 2**N_BITS, size=base.dimension, dtype=np.uint64)
        ps = apply_digital_shift(base, shifts)
    else:
        ipoints = _owen_scramble(base.ipoints, rng)
        ps = PointSet(base.dimension, base.count, _to_floats(ipoints),
                      SCHEME_OWEN, None, ipoints)
    return PointSet(ps.dimension, ps.count, ps.points, scheme, int(seed), ps.ipoints)


def projection_quality(ps: PointSet, grid: int = 16) -> ProjectionReport:
    """Chi-square statistic of every 2D projection over a grid x grid mesh.

    A base-2 digital net whose cells are elementary dyadic boxes scores 0;
    i.i.d. uniforms score around the dof. Flagged insufficient below 16
    points (one per grid row), where the statistic is meaningless.
    """
    dof = grid * grid - 1
    threshold = float(chi2.ppf(0.999, dof))
    insufficient = ps.count < grid
    stats: dict[tuple[int, int], float] = {}
    if not insufficient:
        expected = ps.count / (grid * grid)
        cells = np.minimum((ps.points * grid).astype(np.int64), grid - 1)
        for i in range(ps.dimension):
            for j in range(i + 1, ps.dimension):
                flat = cells[:, i] * grid + cells[:, j]
                counts = np.bincount(flat, minlength=grid * grid)
                stats[(i, j)] = float(np.sum((counts - expected) ** 2) / expected)
    return ProjectionReport(ps.count, ps.dimension, grid, stats, dof,
                            threshold, insufficient)
