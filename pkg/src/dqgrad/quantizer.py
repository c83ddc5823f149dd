"""Bounded-domain vector quantizers and bit-exact index coding.

The only constructed family is the scalar uniform quantizer: per axis,
2**R equal cells centered on [-r, r], reconstruction at cell centers.
Its covering efficiency is sqrt(n): image size (2**R)**n, worst-case
reconstruction error r*sqrt(n)*2**-R over the cube domain, dynamic range
r. Near-optimal vector quantizers (covering efficiency -> 1) exist but
are non-constructive and out of scope here.

Cell geometry is fixed once and rescaled per iteration: the quantizer
used at scale r maps u to r * q(u/r), so every iteration shares one
lattice shape at a different resolution. Boundary ties round toward +inf
for deterministic reproducibility.
"""

from dataclasses import dataclass, field

import numpy as np


class RangeViolationError(Exception):
    """Quantizer input left the cube domain [-r, r]^n.

    Carries the first offending coordinate; in a DQ run this signals a bug
    in the dynamic-range schedule, not in the data.
    """

    def __init__(self, coord, value, r):
        super().__init__(
            f"input coordinate {coord} = {value!r} outside [-{r!r}, {r!r}]"
        )
        self.coord = coord
        self.value = value
        self.r = r


class EncodingError(Exception):
    pass


@dataclass(frozen=True)
class QuantizerSpec:
    """Scalar uniform quantizer of dimension n and rate R bits/dimension.

    R = 0 is the degenerate one-point quantizer (reconstruction 0, zero
    payload bits); it is what a silent worker in a multi-worker rate
    allocation uses.
    """

    n: int
    R: int
    kind: str = "scalar-uniform"

    def __post_init__(self):
        if self.kind != "scalar-uniform":
            raise ValueError(f"unknown quantizer kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.R < 0 or self.R != int(self.R):
            raise ValueError("rate must be a nonnegative integer")

    @property
    def levels(self):
        return 1 << self.R

    @property
    def image_size(self):
        return 1 << (self.n * self.R)

    def scaled(self, r, saturate=False):
        return ScaledQuantizer(self, r, saturate)


def covering_radius(spec, r):
    """Worst-case reconstruction error over the cube domain at scale r."""
    if r < 0:
        raise ValueError("scale must be nonnegative")
    return r * np.sqrt(spec.n) * 2.0 ** (-spec.R)


def covering_efficiency(spec):
    """image_size**(1/n) * covering_radius / dynamic_range = sqrt(n)."""
    return float(np.sqrt(spec.n))


@dataclass(frozen=True)
class ScaledQuantizer:
    """`base` rescaled to the cube [-r, r]^n.

    With saturate=True, out-of-domain coordinates clamp to the boundary
    cell instead of raising. That mode exists for schedule variants whose
    input-containment guarantee is only empirical (heavy ball with the
    subexponential exponent set to 0); everything else should keep the
    strict domain check.
    """

    base: QuantizerSpec
    r: float
    saturate: bool = False

    def quantize(self, u):
        """Map u to (cell indices, reconstruction).

        Cell i on an axis spans [-r + i*w, -r + (i+1)*w), w = 2r/2**R, with
        reconstruction at the center; boundary values belong to the upper
        cell (round half toward +inf).
        """
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.base.n,):
            raise ValueError(f"expected shape ({self.base.n},), got {u.shape}")
        if self.r == 0.0:
            if not self.saturate and np.any(u != 0.0):
                bad = int(np.argmax(u != 0.0))
                raise RangeViolationError(bad, float(u[bad]), 0.0)
            return np.zeros(self.base.n, dtype=np.int64), np.zeros(self.base.n)
        if self.r < 0:
            raise ValueError("scale must be nonnegative")
        if not self.saturate:
            over = np.abs(u) > self.r
            if np.any(over):
                bad = int(np.argmax(over))
                raise RangeViolationError(bad, float(u[bad]), float(self.r))
        nlev = self.base.levels
        if nlev == 1:
            return np.zeros(self.base.n, dtype=np.int64), np.zeros(self.base.n)
        width = 2.0 * self.r / nlev
        if width == 0.0:  # r underflowed below the resolvable cell size
            return np.zeros(self.base.n, dtype=np.int64), np.zeros(self.base.n)
        cells = np.floor((u + self.r) / width)
        idx = np.clip(cells, 0, nlev - 1).astype(np.int64)  # clip before cast
        recon = reconstruct(self.base, self.r, idx)
        return idx, recon

    def quantize_payload(self, iteration, u):
        idx, recon = self.quantize(u)
        return Payload.from_indices(iteration, idx, self.base.R), recon


def reconstruct(spec, r, indices):
    """Cell centers for integer indices; shared verbatim by both channel ends."""
    if spec.levels == 1:
        return np.zeros(spec.n)
    width = 2.0 * r / spec.levels
    return -r + (np.asarray(indices, dtype=np.float64) + 0.5) * width


def encode_payload(indices, R):
    """Pack indices into a coordinate-major, MSB-first bit string.

    Returns (buf, nbits) with nbits = len(indices)*R exactly; the final
    byte is zero-padded on the right.
    """
    nbits = len(indices) * R
    acc = 0
    for ix in indices:
        ix = int(ix)
        if not 0 <= ix < (1 << R) or (R == 0 and ix != 0):
            raise EncodingError(f"index {ix} does not fit in {R} bits")
        acc = (acc << R) | ix
    pad = (-nbits) % 8
    buf = (acc << pad).to_bytes((nbits + pad) // 8, "big")
    return buf, nbits


def decode_payload(buf, nbits, n, R):
    if nbits != n * R:
        raise EncodingError(f"expected {n * R} bits, got {nbits}")
    nbytes = (nbits + 7) // 8
    if len(buf) != nbytes:
        raise EncodingError(f"expected {nbytes} bytes, got {len(buf)}")
    acc = int.from_bytes(buf, "big") >> ((-nbits) % 8)
    out = np.zeros(n, dtype=np.int64)
    mask = (1 << R) - 1
    for i in range(n - 1, -1, -1):
        out[i] = acc & mask
        acc >>= R
    return out


@dataclass(frozen=True)
class Payload:
    """One uplink message: n cell indices packed into exactly n*R bits."""

    iteration: int
    indices: tuple
    bits: bytes = field(repr=False)
    nbits: int

    @classmethod
    def from_indices(cls, iteration, indices, R):
        buf, nbits = encode_payload(indices, R)
        return cls(iteration, tuple(int(i) for i in indices), buf, nbits)

    def decode(self, n, R):
        return decode_payload(self.bits, self.nbits, n, R)
