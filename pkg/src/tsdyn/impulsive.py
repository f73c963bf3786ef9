"""Linear impulsive system obtained from the time-scale equation by the psi
substitution: transition matrices, spectral assumption checks, exponential
decay certificates, forward integration, and the bounded two-sided solution
with its periodic/sequence split.

Between impulse moments the state obeys ``x' = A x + u(s)`` where ``u``
collects the collapsed periodic forcing and the piecewise-constant sequence
forcing; at each impulse moment the state jumps by
``gap * (A x + f(psi_inv(s_k)) + term_k)``.

Because every factor appearing in the transition matrix is a function of the
single matrix ``A``, matrix exponentials and jump factors commute; the
bounded-solution evaluator exploits this to reduce the convolution over the
infinite past to one reusable per-gap quadrature plus a per-call partial
segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matrixkit
from .errors import AssumptionError, ConvergenceError, HorizonError, MissingSampleError
from .forcing import PoissonSequence, TrigForcing
from .timescale import TimeScaleSpec

_DET_FLOOR = 1e-10
_RADIUS_MARGIN = 1e-10
_DECAY_SAFETY = 0.9
_ABSCISSA_RTOL = 2.0 ** -40


@dataclass(frozen=True, eq=False)
class ImpulsiveModel:
    """Constant-matrix linear model on a periodic interval time scale."""

    matrix: np.ndarray
    ts: TimeScaleSpec
    forcing: TrigForcing
    sequence: PoissonSequence

    def __post_init__(self) -> None:
        A = np.asarray(self.matrix, dtype=float).copy()
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"system matrix must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("system matrix must have finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        m = A.shape[0]
        if self.forcing.dimension != m:
            raise ValueError(
                f"forcing dimension {self.forcing.dimension} != system dimension {m}"
            )
        if self.sequence.dimension != m:
            raise ValueError(
                f"sequence dimension {self.sequence.dimension} != system dimension {m}"
            )
        if self.forcing.period != self.ts.period:
            raise ValueError("forcing period must equal the time-scale period")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def jump_factor(self) -> np.ndarray:
        """Matrix ``I + gap * A`` applied by each impulse."""
        return np.eye(self.dimension) + self.ts.gap * self.matrix


class AssumptionCheck(NamedTuple):
    passed: bool
    value: float


def check_invertible_jump(model: ImpulsiveModel) -> AssumptionCheck:
    """First assumption: the jump factor ``I + gap*A`` is invertible."""
    value = float(matrixkit.det(model.jump_factor))
    return AssumptionCheck(passed=bool(abs(value) > _DET_FLOOR), value=value)


def check_contractive_period(model: ImpulsiveModel) -> AssumptionCheck:
    """Second assumption: the one-period transition matrix is a contraction.

    The matrix is ``expm(stride * A) @ (I + gap*A)``; all its eigenvalues
    must lie strictly inside the unit circle.
    """
    B = matrixkit.expm(model.ts.stride * model.matrix) @ model.jump_factor
    radius = float(matrixkit.spectral_radius(B))
    return AssumptionCheck(passed=bool(radius < 1.0 - _RADIUS_MARGIN), value=radius)


# Aliases matching the customary (A1)/(A2) labels used in reports.
check_A1 = check_invertible_jump
check_A2 = check_contractive_period


@dataclass(frozen=True)
class StabilityCert:
    """Certified exponential decay of the transition matrices.

    Guarantees ``||U(s, r)|| <= prefactor * exp(-decay_rate * (s - r))`` for
    all ``s >= r``; ``floquet_radius`` is the spectral radius of the
    one-period transition matrix and ``decay_rate`` is 90% of the exact
    Floquet rate, leaving margin for the finite-grid prefactor estimate.
    """

    floquet_radius: float
    decay_rate: float
    prefactor: float
    grid_resolution: int

    def __post_init__(self) -> None:
        if not (0.0 < self.floquet_radius < 1.0):
            raise ValueError("certificate requires a contractive period map")
        if self.decay_rate <= 0.0 or self.prefactor < 1.0:
            raise ValueError("certificate requires decay_rate > 0 and prefactor >= 1")


def certify(model: ImpulsiveModel, grid_resolution: int = 201) -> StabilityCert:
    """Produce a decay certificate from the spectral assumptions.

    The decay rate is ``0.9 * (-ln rho) / stride``.  The prefactor is built
    from a grid maximum of ``||U(r+q, r)|| * exp(rate*q)`` over gaps ``q`` up
    to two periods (the impulse count over a window of length ``q`` takes
    only the two integer values bracketing ``q/stride``, so the supremum over
    ``r`` is exact), a Lipschitz inflation covering off-grid gaps, and a
    whole-period factor ``sup_j ||B^j|| exp(rate*j*stride)`` through which
    transitions over longer gaps factor.
    """
    a1 = check_invertible_jump(model)
    if not a1.passed:
        raise AssumptionError(f"jump factor is singular (det = {a1.value:.3e})")
    a2 = check_contractive_period(model)
    if not a2.passed:
        raise AssumptionError(
            f"period map is not a contraction (spectral radius = {a2.value:.10f})"
        )
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be at least 8")

    A = model.matrix
    stride = model.ts.stride
    rho = a2.value
    rate = _DECAY_SAFETY * (-math.log(rho)) / stride
    Q = model.jump_factor

    qs = np.linspace(0.0, 2.0 * stride, grid_resolution)
    grid_max = 0.0
    for q in qs:
        E = matrixkit.expm(q * A)
        ratio = q / stride
        counts = {int(math.floor(ratio)), int(math.ceil(ratio))}
        for i in counts:
            norm = matrixkit.spectral_norm(E @ matrixkit.int_power(Q, i))
            grid_max = max(grid_max, norm * math.exp(rate * q))
    h = 2.0 * stride / (grid_resolution - 1)
    a_norm = matrixkit.spectral_norm(A)
    grid_max *= math.exp((a_norm + rate) * h)

    # sup over j of ||B^j|| e^{rate*j*stride}; the summand decays like
    # rho^(0.1 j) asymptotically, so the running maximum freezes quickly.
    B = matrixkit.expm(stride * A) @ Q
    growth = math.exp(rate * stride)
    power = np.eye(model.dimension)
    period_factor = 1.0
    weight = 1.0
    for j in range(1, 5000):
        power = power @ B
        weight *= growth
        c = matrixkit.spectral_norm(power) * weight
        period_factor = max(period_factor, c)
        if c < 1e-9 * period_factor and j >= 8:
            break
    else:
        raise ConvergenceError("whole-period factor did not stabilize")

    prefactor = max(1.0, grid_max ** 3 * period_factor)
    return StabilityCert(
        floquet_radius=rho,
        decay_rate=rate,
        prefactor=prefactor,
        grid_resolution=int(grid_resolution),
    )


def matriciant(model: ImpulsiveModel, s: float, r: float) -> np.ndarray:
    """Transition matrix ``U(s, r)`` of the homogeneous impulsive system.

    Equals ``expm(A*(s-r))`` times the jump factor raised to the number of
    impulse moments in ``[r, s)``; ``U(s, s)`` is the identity.
    """
    if s < r:
        raise ValueError(f"matriciant requires s >= r, got s={s!r} < r={r!r}")
    count = model.ts.count_impulses(r, s)
    E = matrixkit.expm((s - r) * model.matrix)
    return E @ matrixkit.int_power(model.jump_factor, count)


# ----------------------------------------------------------------------
# forward integration


@dataclass(frozen=True)
class JumpRecord:
    """State values on both sides of one impulse."""

    index: int
    s: float
    before: np.ndarray
    after: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of the impulsive system on the line.

    ``s`` holds strictly increasing sample abscissae carrying the
    left-limit value at impulse moments; ``jumps`` records both one-sided
    values at every impulse crossed.
    """

    s: np.ndarray
    x: np.ndarray
    jumps: tuple[JumpRecord, ...]

    def __post_init__(self) -> None:
        if np.any(np.diff(self.s) <= 0.0):
            raise ValueError("sample abscissae must be strictly increasing")

    def value(self, s: float) -> np.ndarray:
        """Sample value at abscissa ``s`` (must match a stored mesh point)."""
        idx = int(np.searchsorted(self.s, s))
        for i in (idx - 1, idx, idx + 1):
            if 0 <= i < self.s.size and abs(self.s[i] - s) <= _ABSCISSA_RTOL * max(
                1.0, abs(s)
            ):
                return self.x[i]
        raise MissingSampleError(f"no sample stored at s={s!r}")


def _rk4_segment(A, u_half_nodes, h, n, y0, record=None):
    """Classical RK4 for ``y' = A y + u`` with forcing pre-tabulated at the
    half-step mesh (2n+1 nodes).  Appends every post-step state to record."""
    y = y0
    for i in range(n):
        u0 = u_half_nodes[2 * i]
        um = u_half_nodes[2 * i + 1]
        u1 = u_half_nodes[2 * i + 2]
        k1 = A @ y + u0
        k2 = A @ (y + 0.5 * h * k1) + um
        k3 = A @ (y + 0.5 * h * k2) + um
        k4 = A @ (y + h * k3) + u1
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record is not None:
            record.append(y)
    return y


def _collapsed_forcing_nodes(model: ImpulsiveModel, a: float, b: float, n: int, k: int):
    """Forcing ``f(psi_inv(s)) + term_k`` tabulated at the half-step mesh of
    an impulse-free segment ``[a, b]`` inside gap index ``k``."""
    nodes = a + (b - a) * np.arange(2 * n + 1) / (2.0 * n)
    fvals = model.forcing.value_many(nodes + k * model.ts.gap)
    return fvals + model.sequence.term(k)


def integrate(
    model: ImpulsiveModel,
    x0,
    s0: float,
    s1: float,
    step: float,
) -> Trajectory:
    """Integrate the impulsive system from ``s0`` to ``s1``.

    Classical fixed-step fourth-order integration on each impulse-free
    segment, with the mesh split exactly at every impulse moment where the
    state jump ``gap * (A x + f(psi_inv(s_k)) + term_k)`` is applied.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    if s1 < s0:
        raise ValueError(f"requires s0 <= s1, got s0={s0!r}, s1={s1!r}")
    A = model.matrix
    ts = model.ts
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (model.dimension,):
        raise ValueError(f"x0 must have shape ({model.dimension},)")

    ss: list[float] = [s0]
    xs: list[np.ndarray] = [x]
    jumps: list[JumpRecord] = []
    f_at_right = model.forcing.value(ts.anchor)  # f(psi_inv(s_k)) for every k

    cursor = s0
    k = ts.impulse_index_below(s0) + 1  # gap index containing (cursor, next impulse]
    while cursor < s1 - _ABSCISSA_RTOL * max(1.0, abs(s1)):
        seg_end = min(ts.impulse_point(k), s1)
        length = seg_end - cursor
        if length > _ABSCISSA_RTOL * max(1.0, abs(seg_end)):
            n = max(1, math.ceil(length / step))
            u = _collapsed_forcing_nodes(model, cursor, seg_end, n, k)
            rec: list[np.ndarray] = []
            x = _rk4_segment(A, u, length / n, n, x, rec)
            h = length / n
            ss.extend(cursor + h * (i + 1) for i in range(n - 1))
            ss.append(seg_end)  # last abscissa written exactly
            xs.extend(rec)
        sk = ts.impulse_point(k)
        if abs(seg_end - sk) <= _ABSCISSA_RTOL * max(1.0, abs(sk)) and sk < s1:
            before = x
            x = x + ts.gap * (A @ x + f_at_right + model.sequence.term(k))
            jumps.append(JumpRecord(index=k, s=sk, before=before, after=x))
            k += 1
        cursor = seg_end
    return Trajectory(s=np.asarray(ss), x=np.vstack(xs), jumps=tuple(jumps))


# ----------------------------------------------------------------------
# bounded solution


class BoundedSolutionEvaluator:
    """Evaluator of the unique bounded solution via truncated convolution.

    The solution at ``s`` is the integral of ``U(s, r)`` against the total
    forcing over ``(-inf, s]`` plus the impulse sum over moments below ``s``.
    The infinite past is truncated at a horizon where the certified
    exponential tail drops below half the requested tolerance, and the
    integral is evaluated by composite Simpson quadrature per impulse-free
    gap with a node count derived from a fourth-derivative bound so the
    quadrature error stays below the other half.

    Since all transition factors commute, each full gap contributes the same
    two precomputed quadratures (one for the periodic forcing, one matrix
    applied to the gap's sequence term), so a call costs one partial-segment
    quadrature plus a short product recursion over whole gaps.

    ``include_periodic`` / ``include_sequence`` select which forcing parts
    enter, yielding the periodic component, the sequence-driven component,
    or (both) the full bounded solution.  Instances are immutable after
    construction and safe for concurrent evaluation.
    """

    def __init__(
        self,
        model: ImpulsiveModel,
        cert: StabilityCert,
        tol: float = 1e-8,
        include_periodic: bool = True,
        include_sequence: bool = True,
    ) -> None:
        if tol <= 0.0:
            raise ValueError(f"tol must be positive, got {tol!r}")
        self.model = model
        self.cert = cert
        self.tol = float(tol)
        self.include_periodic = bool(include_periodic)
        self.include_sequence = bool(include_sequence)

        ts = model.ts
        A = model.matrix
        self._stride = ts.stride
        self._gap = ts.gap
        self._jump = model.jump_factor
        self._step_matrix = matrixkit.expm(self._stride * A)
        self._f_at_right = model.forcing.value(ts.anchor)

        self._sup_periodic = model.forcing.sup_norm(ts)
        self._sup_sequence = _sequence_ceiling(model.sequence)
        rate, N = cert.decay_rate, cert.prefactor
        self._geometry_factor = 1.0 / rate + self._gap / (
            1.0 - math.exp(-rate * self._stride)
        )
        total = self._sup_periodic + self._sup_sequence
        self.sup_bound = N * total * self._geometry_factor
        if total > 0.0:
            self.horizon = max(
                self._stride, math.log(2.0 * self.sup_bound / self.tol) / rate
            )
        else:
            self.horizon = self._stride

        self._gap_nodes = _gap_node_count(model, cert, self.tol, self._sup_sequence)
        taus = self._stride * np.arange(self._gap_nodes + 1) / self._gap_nodes
        stack = _expm_stack(A, self._stride / self._gap_nodes, self._gap_nodes)
        w = _simpson_weights(self._gap_nodes, self._stride / self._gap_nodes)
        # per-gap quadratures: periodic part of int_0^stride e^{A tau} u dtau
        fvals = model.forcing.value_many(ts.anchor - taus)
        self._gap_periodic = np.einsum("n,nij,nj->i", w, stack, fvals)
        self._gap_kernel = np.einsum("n,nij->ij", w, stack)

    # -- public API ----------------------------------------------------

    def value(self, s: float) -> np.ndarray:
        """Bounded-solution value at ``s`` (left limit at impulse moments)."""
        model = self.model
        ts = model.ts
        A = model.matrix
        k_hi = ts.impulse_index_below(s)
        # deepest gap covered is (impulse_point(k_lo), ...): the dropped tail
        # then lies at distance >= horizon from s
        k_lo = ts.impulse_index_below(s - self.horizon)
        if self.include_sequence:
            min_needed = k_lo + 1
            seq_min = model.sequence.min_index()
            if min_needed < seq_min:
                raise HorizonError(
                    f"truncation horizon needs sequence index {min_needed} but the "
                    f"sequence starts at {seq_min}; deepen the seed index"
                )

        # partial segment (impulse k_hi, s], carrying sequence index k_hi + 1
        L = s - ts.impulse_point(k_hi)
        n = max(2, 2 * math.ceil(self._gap_nodes * L / (2.0 * self._stride)))
        stack = _expm_stack(A, L / n, n)
        w = _simpson_weights(n, L / n)
        acc = np.zeros(model.dimension)
        if self.include_periodic:
            taus = L * np.arange(n + 1) / n
            fvals = model.forcing.value_many((s - taus) + (k_hi + 1) * self._gap)
            acc += np.einsum("n,nij,nj->i", w, stack, fvals)
        if self.include_sequence:
            kernel = np.einsum("n,nij->ij", w, stack)
            acc += kernel @ model.sequence.term(k_hi + 1)

        # whole gaps and impulses, walking backward from k_hi
        M = stack[-1]  # e^{A L} = U(s, s_{k_hi}+)
        for k in range(k_hi, k_lo, -1):
            pulse = np.zeros(model.dimension)
            if self.include_periodic:
                pulse = pulse + self._f_at_right
            if self.include_sequence:
                pulse = pulse + model.sequence.term(k)
            acc += self._gap * (M @ pulse)
            MQ = M @ self._jump  # U(s, s_k)
            if self.include_periodic:
                acc += MQ @ self._gap_periodic
            if self.include_sequence:
                acc += (MQ @ self._gap_kernel) @ model.sequence.term(k)
            M = MQ @ self._step_matrix  # U(s, s_{k-1}+)
        return acc

    def right_limit(self, k: int) -> np.ndarray:
        """Right-limit value just after the impulse at ``impulse_point(k)``."""
        return self.jump_image(k, self.value(self.model.ts.impulse_point(k)))

    def jump_image(self, k: int, x: np.ndarray) -> np.ndarray:
        """Apply the impulse-k jump to ``x``, restricted to the included parts."""
        pulse = self.model.matrix @ x
        if self.include_periodic:
            pulse = pulse + self._f_at_right
        if self.include_sequence:
            pulse = pulse + self.model.sequence.term(k)
        return x + self._gap * pulse


def bounded_solution(model, cert, s, tol=1e-8) -> np.ndarray:
    """Bounded-solution value at ``s``; see :class:`BoundedSolutionEvaluator`."""
    return BoundedSolutionEvaluator(model, cert, tol).value(s)


def periodic_component(model, cert, s, tol=1e-8) -> np.ndarray:
    """Part of the bounded solution driven by the periodic forcing alone."""
    return BoundedSolutionEvaluator(
        model, cert, tol, include_sequence=False
    ).value(s)


def poisson_component(model, cert, s, tol=1e-8) -> np.ndarray:
    """Part of the bounded solution driven by the sequence forcing alone."""
    return BoundedSolutionEvaluator(
        model, cert, tol, include_periodic=False
    ).value(s)


# ----------------------------------------------------------------------
# helpers


def _sequence_ceiling(seq: PoissonSequence) -> float:
    if hasattr(seq, "max_index"):
        return seq.sup_norm(seq.min_index(), seq.max_index()).ceiling
    return seq.sup_norm(seq.min_index(), seq.min_index()).ceiling


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n % 2 or n < 2:
        raise ValueError("Simpson rule needs an even node count >= 2")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _expm_stack(A: np.ndarray, h: float, n: int) -> np.ndarray:
    """Matrices ``expm(A * i * h)`` for ``i = 0..n`` via cumulative products."""
    m = A.shape[0]
    E = matrixkit.expm(h * A)
    out = np.empty((n + 1, m, m))
    out[0] = np.eye(m)
    for i in range(1, n + 1):
        out[i] = out[i - 1] @ E
    return out


def _gap_node_count(
    model: ImpulsiveModel, cert: StabilityCert, tol: float, sup_sequence: float
) -> int:
    """Even Simpson node count per gap meeting the quadrature error budget.

    Composite Simpson error over a gap is bounded by
    ``stride * h^4 / 180`` times a bound on the fourth derivative of
    ``expm(A tau) (f + term)``; weighting the per-gap errors by the decay
    certificate turns half the tolerance into a per-gap budget.
    """
    ts = model.ts
    A = model.matrix
    stride = ts.stride
    a_norm = matrixkit.spectral_norm(A)
    sample = np.linspace(0.0, stride, 33)
    max_e = max(matrixkit.spectral_norm(matrixkit.expm(t * A)) for t in sample)
    max_e *= math.exp(a_norm * stride / 32.0)

    fourth = 0.0
    for j in range(5):
        fourth += math.comb(4, j) * a_norm ** j * model.forcing.derivative_bound(4 - j)
    fourth += a_norm ** 4 * sup_sequence
    fourth *= max_e

    rate, N = cert.decay_rate, cert.prefactor
    budget = (tol / 2.0) / (N / (1.0 - math.exp(-rate * stride)) + 1.0)
    n_width = math.ceil(stride / min(0.1, stride / 50.0))
    if fourth > 0.0:
        n_acc = math.ceil((stride ** 5 * fourth / (180.0 * budget)) ** 0.25)
    else:
        n_acc = 2
    n = max(n_width, n_acc, 2)
    n += n % 2
    if n > 2_000_000:
        raise ValueError(f"tolerance {tol} needs an impractically fine quadrature")
    return n
