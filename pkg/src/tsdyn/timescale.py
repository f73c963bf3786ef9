"""Geometry of a periodic time scale made of evenly spaced closed intervals.

The scale is the union of intervals ``[endpoint(2k-1), endpoint(2k)]`` where

    endpoint(2k-1) = anchor + gap + (k - 1) * period
    endpoint(2k)   = anchor + k * period

so each interval has length ``period - gap`` and consecutive intervals are
separated by a hole of length ``gap``.  The psi substitution removes the
holes, mapping the scale (minus its left endpoints) bijectively onto the
real line; the images of the right endpoints are the impulse moments

    impulse_point(k) = anchor + k * (period - gap).

All boundary classification uses a relative tolerance of 2**-40 so that
floating-point noise cannot flip a point across an interval edge; a point
within tolerance of an edge is treated as being exactly on the edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import TimeScaleDomainError

# Boundary snap: points within 2**-40 * max(1, |t|) of an interval edge are
# treated as the edge itself.  Indices are capped so k * period stays exact.
_BOUNDARY_RTOL = 2.0 ** -40
_MAX_INDEX = 2 ** 52

# Location codes returned by TimeScaleSpec.locate.
LEFT_ENDPOINT = "left_endpoint"
INTERIOR = "interior"
RIGHT_ENDPOINT = "right_endpoint"
GAP = "gap"


def _edge_tol(t: float) -> float:
    return _BOUNDARY_RTOL * max(1.0, abs(t))


def _snapped_ceil(u: float) -> int:
    """ceil(u), treating values within tolerance of an integer as exact."""
    r = round(u)
    if abs(u - r) <= _BOUNDARY_RTOL * max(1.0, abs(u)):
        return int(r)
    return int(math.ceil(u))


@dataclass(frozen=True)
class PointClass:
    """Density/scatter flags of a time-scale point on each side."""

    right_dense: bool
    right_scattered: bool
    left_dense: bool
    left_scattered: bool

    def __post_init__(self) -> None:
        if self.right_dense == self.right_scattered:
            raise ValueError("exactly one of right_dense/right_scattered must hold")
        if self.left_dense == self.left_scattered:
            raise ValueError("exactly one of left_dense/left_scattered must hold")


@dataclass(frozen=True)
class JumpInfo:
    """Forward/backward jump values together with the point classification."""

    sigma: float
    rho: float
    point_class: PointClass


@dataclass(frozen=True)
class TimeScaleSpec:
    """Parameters (anchor, period, gap) of the periodic interval time scale.

    Invariants enforced at construction:

    * ``0 < gap < period`` (holes are nondegenerate and shorter than a period);
    * the normalization ``anchor + gap - period < 0 <= anchor`` placing zero
      inside the half-open interval indexed by ``k = 0``.  Downstream index
      bookkeeping (``psi(0) == 0`` in particular) relies on it, so violating
      specs are rejected rather than re-anchored.

    Instances are immutable and every method is a pure function, so a spec
    may be shared freely across threads.
    """

    anchor: float
    period: float
    gap: float

    def __post_init__(self) -> None:
        for name in ("anchor", "period", "gap"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite real number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not (0.0 < self.gap < self.period):
            raise ValueError(
                f"requires 0 < gap < period, got gap={self.gap}, period={self.period}"
            )
        if not (self.anchor + self.gap - self.period < 0.0 <= self.anchor):
            raise ValueError(
                "normalization anchor + gap - period < 0 <= anchor violated "
                f"(anchor={self.anchor}, period={self.period}, gap={self.gap})"
            )
        # Boundary classification needs edges separated by much more than the
        # snap tolerance to stay unambiguous.
        scale = _edge_tol(abs(self.anchor) + self.period)
        if self.gap <= 16.0 * scale or self.stride <= 16.0 * scale:
            raise ValueError("gap and period - gap must exceed the boundary tolerance")

    @property
    def stride(self) -> float:
        """Interval length and impulse spacing: ``period - gap``."""
        return self.period - self.gap

    # ------------------------------------------------------------------
    # endpoints and membership

    def endpoint(self, k: int) -> float:
        """Interval endpoint with signed index ``k`` (odd: left, even: right)."""
        k = _checked_index(k)
        if k % 2 == 0:
            return self.anchor + (k // 2) * self.period
        j = (k + 1) // 2  # k = 2j - 1
        return self.anchor + self.gap + (j - 1) * self.period

    def locate(self, t: float) -> tuple[int, str]:
        """Classify ``t`` against the scale.

        Returns ``(k, code)`` where ``code`` is one of ``LEFT_ENDPOINT``,
        ``INTERIOR``, ``RIGHT_ENDPOINT`` (``k`` indexes the containing
        interval ``[endpoint(2k-1), endpoint(2k)]``) or ``GAP`` (``k`` indexes
        the interval immediately to the right of the hole).
        """
        if not math.isfinite(t):
            raise ValueError(f"t must be finite, got {t!r}")
        tol = _edge_tol(t)
        kc = math.floor((t - self.anchor) / self.period)
        for k in (kc, kc + 1):
            left = self.anchor + self.gap + (k - 1) * self.period
            right = self.anchor + k * self.period
            if abs(t - left) <= tol:
                return k, LEFT_ENDPOINT
            if abs(t - right) <= tol:
                return k, RIGHT_ENDPOINT
            if left < t < right:
                return k, INTERIOR
        return kc + 1, GAP

    def contains(self, t: float) -> bool:
        """True iff ``t`` belongs to the time scale."""
        return self.locate(t)[1] != GAP

    def interval_index(self, t: float) -> int:
        """Index ``k`` of the closed interval containing ``t``."""
        k, code = self.locate(t)
        if code == GAP:
            raise TimeScaleDomainError(f"t={t!r} lies in a hole of the time scale")
        return k

    # ------------------------------------------------------------------
    # jump operators

    def jump_operators(self, t: float) -> JumpInfo:
        """Forward/backward jump values and the point classification at ``t``.

        Interior points are dense on both sides.  Right endpoints are
        right-scattered (sigma jumps over the hole) and left-dense; left
        endpoints are left-scattered and right-dense.
        """
        k, code = self.locate(t)
        if code == GAP:
            raise TimeScaleDomainError(f"t={t!r} is not in the time scale")
        if code == RIGHT_ENDPOINT:
            return JumpInfo(
                sigma=self.endpoint(2 * k + 1),
                rho=t,
                point_class=PointClass(False, True, True, False),
            )
        if code == LEFT_ENDPOINT:
            return JumpInfo(
                sigma=t,
                rho=self.endpoint(2 * k - 2),
                point_class=PointClass(True, False, False, True),
            )
        return JumpInfo(sigma=t, rho=t, point_class=PointClass(True, False, True, False))

    # ------------------------------------------------------------------
    # psi substitution

    def psi(self, t: float) -> float:
        """Collapse ``t`` onto the real line by removing the holes left of it.

        Defined for ``t`` in the scale minus its left endpoints, using the
        half-open membership ``endpoint(2k-1) < t <= endpoint(2k)``; the value
        is ``t - k * gap``.  Left endpoints (where psi is undefined) raise.
        """
        k, code = self.locate(t)
        if code == GAP:
            raise TimeScaleDomainError(f"t={t!r} is not in the time scale")
        if code == LEFT_ENDPOINT:
            raise TimeScaleDomainError(
                f"psi is undefined at left endpoints (t={t!r} = endpoint({2 * k - 1}))"
            )
        return t - k * self.gap

    def psi_inv(self, s: float) -> float:
        """Inverse of :meth:`psi`; defined on all of the real line.

        Uses the half-open membership ``impulse_point(k-1) < s <=
        impulse_point(k)`` and returns ``s + k * gap``.  Left-continuous at
        impulse points, with a right jump of size ``gap``.
        """
        if not math.isfinite(s):
            raise ValueError(f"s must be finite, got {s!r}")
        k = _checked_index(_snapped_ceil((s - self.anchor) / self.stride))
        return s + k * self.gap

    # ------------------------------------------------------------------
    # impulse moments

    def impulse_point(self, k: int) -> float:
        """k-th impulse moment ``anchor + k * (period - gap)`` on the line."""
        return self.anchor + _checked_index(k) * self.stride

    def impulse_index_below(self, s: float) -> int:
        """Largest ``k`` with ``impulse_point(k) < s`` (strict, snapped)."""
        return _checked_index(_snapped_ceil((s - self.anchor) / self.stride) - 1)

    def count_impulses(self, r: float, s: float) -> int:
        """Number of impulse moments in the half-open interval ``[r, s)``."""
        if r > s:
            raise ValueError(f"requires r <= s, got r={r!r}, s={s!r}")
        lo = _snapped_ceil((r - self.anchor) / self.stride)
        hi = _snapped_ceil((s - self.anchor) / self.stride)
        return hi - lo


def _checked_index(k: int) -> int:
    k = int(k)
    if abs(k) > _MAX_INDEX:
        raise ValueError(f"index {k} exceeds the exact floating-point range")
    return k
