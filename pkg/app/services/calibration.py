"""
S-field parameter inference from spacing samples.

The log-likelihood of a sample set is the sum of ln(1 - r) over samples,
r being the S-field risk of the sample's kind. Shape factors maximize the
likelihood; scale factors minimize its second derivative with respect to
the scale, located with a log-spaced coarse grid refined by golden-section
search.
"""
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.models.calibration import Axis, FieldShape, InferenceResult, LineFit, SpacingKind, SpacingSample
from app.utils.exceptions import CalibrationError, InsufficientDataError

LIKELIHOOD_FLOOR = 1e-12
BETA_BOUNDS = (2.0, 20.0)
GAMMA_BOUNDS = (0.05, 200.0)
BETA_GRID_POINTS = 181  # 0.1 spacing over [2, 20]
GAMMA_GRID_POINTS = 400
TOLERANCE = 1e-3
MAX_SWEEPS = 20
FLAT_TOLERANCE = 1e-10
GRID_CHUNK_ELEMENTS = 2_000_000

_KIND_CODES = {SpacingKind.VEHICLE: 0, SpacingKind.LANE_MARKER: 1, SpacingKind.BOUNDARY: 2}
GOLDEN = (5 ** 0.5 - 1) / 2  # ~0.618


@dataclass(frozen=True)
class SpacingArrays:
    """Column view of a sample list: absolute distances and kind codes"""
    dx: np.ndarray
    dy: np.ndarray
    kind: np.ndarray

    def __len__(self) -> int:
        return int(self.dx.size)

    def scaled(self, factor: float) -> "SpacingArrays":
        return SpacingArrays(self.dx * factor, self.dy * factor, self.kind)


Samples = Union[Sequence[SpacingSample], SpacingArrays]


def as_arrays(samples: Samples) -> SpacingArrays:
    if isinstance(samples, SpacingArrays):
        return samples
    samples = list(samples)
    return SpacingArrays(
        dx=np.abs(np.fromiter((s.dx for s in samples), dtype=float, count=len(samples))),
        dy=np.abs(np.fromiter((s.dy for s in samples), dtype=float, count=len(samples))),
        kind=np.fromiter((_KIND_CODES[SpacingKind(s.kind)] for s in samples), dtype=np.int8, count=len(samples)),
    )


def _log_tolerance(z: np.ndarray) -> np.ndarray:
    """ln(1 - exp(-z)) with 1 - r floored at LIKELIHOOD_FLOOR."""
    return np.log(np.maximum(-np.expm1(-z), LIKELIHOOD_FLOOR))


def _check_shape(gamma: float, beta: float) -> None:
    if not gamma > 0 or not beta >= 2:
        raise CalibrationError(f"Parameter constraint violated: gamma={gamma} must be > 0, beta={beta} must be >= 2")


def log_likelihood(samples: Samples, gamma_x: float, beta_x: float, gamma_y: float, beta_y: float,
                   shape: Optional[FieldShape] = None) -> float:
    """
    Joint log-likelihood of the samples. Vehicle samples use the
    (gamma_x, beta_x, gamma_y, beta_y) arguments; lane-marker and boundary
    samples use the line parameters of `shape` (published values by default).
    """
    for gamma, beta in ((gamma_x, beta_x), (gamma_y, beta_y)):
        _check_shape(gamma, beta)
    shape = shape or FieldShape()
    arrays = as_arrays(samples)
    if len(arrays) == 0:
        return 0.0

    z = np.zeros(len(arrays))
    vehicle = arrays.kind == 0
    with np.errstate(over="ignore"):
        z[vehicle] = (arrays.dx[vehicle] / gamma_x) ** beta_x + (arrays.dy[vehicle] / gamma_y) ** beta_y
        for code, (gamma, beta) in ((1, (shape.gamma_l, shape.beta_l)), (2, (shape.gamma_b, shape.beta_b))):
            mask = arrays.kind == code
            if mask.any():
                _check_shape(gamma, beta)
                z[mask] = (arrays.dy[mask] / gamma) ** beta
    return float(np.sum(_log_tolerance(z)))


class AxisProblem:
    """
    The part of the log-likelihood that depends on one (gamma, beta) pair,
    with every other parameter held at `shape`. Samples at zero distance on
    the axis only add a constant and are left out.
    """

    def __init__(self, samples: Samples, axis: Axis, shape: Optional[FieldShape] = None):
        arrays = as_arrays(samples)
        shape = shape or FieldShape()
        self.axis = axis

        if axis == Axis.LONGITUDINAL:
            mask = arrays.kind == 0
            distance = arrays.dx[mask]
            with np.errstate(over="ignore"):
                fixed = (arrays.dy[mask] / shape.gamma_y) ** shape.beta_y
        elif axis == Axis.LATERAL:
            mask = arrays.kind == 0
            distance = arrays.dy[mask]
            with np.errstate(over="ignore"):
                fixed = (arrays.dx[mask] / shape.gamma_x) ** shape.beta_x
        else:
            code = 1 if axis == Axis.LANE_MARKER else 2
            mask = arrays.kind == code
            distance = arrays.dy[mask]
            fixed = np.zeros(int(mask.sum()))

        self.n_samples = int(distance.size)
        keep = distance > 0
        self.log_distance = np.log(distance[keep])
        self.fixed = fixed[keep]
        self.positive_distances = distance[keep]

    @property
    def empty(self) -> bool:
        return self.n_samples == 0

    @property
    def degenerate(self) -> bool:
        """Every sample sits at zero distance on this axis"""
        return self.n_samples > 0 and self.positive_distances.size == 0

    def loglik(self, gamma, beta) -> np.ndarray:
        """Axis log-likelihood; gamma and beta broadcast as arrays."""
        gamma = np.asarray(gamma, dtype=float)[..., None]
        beta = np.asarray(beta, dtype=float)[..., None]
        with np.errstate(over="ignore"):
            z = np.exp(beta * (self.log_distance - np.log(gamma))) + self.fixed
        return np.sum(_log_tolerance(z), axis=-1)

    def curvature(self, gamma, beta) -> np.ndarray:
        """Central finite-difference d2 lnL / d gamma2 with step max(0.01, 0.01 gamma)."""
        gamma = np.asarray(gamma, dtype=float)
        h = np.maximum(0.01, 0.01 * gamma)
        return (self.loglik(gamma + h, beta) - 2.0 * self.loglik(gamma, beta) + self.loglik(gamma - h, beta)) / h ** 2


def golden_section_minimize(f: Callable[[float], float], a: float, b: float,
                            tol: float = TOLERANCE, max_iter: int = 200) -> float:
    """
    Bounded golden-section search; returns the midpoint of the final bracket.
    Ties keep the left point so flat stretches resolve towards `a`.
    """
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)

    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)

    return 0.5 * (a + b)


def _bracket(grid: np.ndarray, index: int) -> Tuple[float, float]:
    return float(grid[max(index - 1, 0)]), float(grid[min(index + 1, grid.size - 1)])


def beta_objective(samples: Samples, gamma: float, axis: Axis, shape: Optional[FieldShape] = None) -> Callable:
    """Log-likelihood as a function of beta, the quantity infer_beta maximizes."""
    problem = AxisProblem(samples, axis, shape)
    return lambda beta: problem.loglik(gamma, beta)


def gamma_objective(samples: Samples, beta: float, axis: Axis, shape: Optional[FieldShape] = None) -> Callable:
    """Second derivative of the log-likelihood in gamma, the quantity infer_gamma minimizes."""
    problem = AxisProblem(samples, axis, shape)
    return lambda gamma: problem.curvature(gamma, beta)


def _evaluate_grid(fn: Callable, grid: np.ndarray, n_samples: int) -> np.ndarray:
    """Evaluate a vectorised objective over a grid in chunks of bounded size."""
    n_chunks = max(1, int(np.ceil(grid.size * max(n_samples, 1) / GRID_CHUNK_ELEMENTS)))
    return np.concatenate([np.atleast_1d(fn(chunk)) for chunk in np.array_split(grid, n_chunks)])


def _infer_beta(problem: AxisProblem, gamma: float, fallback: float = BETA_BOUNDS[0],
                tol: float = TOLERANCE) -> Tuple[float, bool]:
    """Best beta and whether the samples informed it; uninformed searches return `fallback`."""
    lo, hi = BETA_BOUNDS
    if problem.positive_distances.size == 0:
        return fallback, False
    grid = np.linspace(lo, hi, BETA_GRID_POINTS)
    values = _evaluate_grid(lambda chunk: problem.loglik(gamma, chunk), grid, problem.positive_distances.size)
    if np.ptp(values) <= FLAT_TOLERANCE * max(1.0, float(np.max(np.abs(values)))):
        return fallback, False
    a, b = _bracket(grid, int(np.argmax(values)))
    beta = golden_section_minimize(lambda x: -float(problem.loglik(gamma, x)), a, b, tol)
    return float(min(max(beta, lo), hi)), True


def _infer_gamma(problem: AxisProblem, beta: float, fallback: float = GAMMA_BOUNDS[0],
                 tol: float = TOLERANCE) -> Tuple[float, bool]:
    """Best gamma and whether the samples informed it; a flat objective returns `fallback`."""
    lo, hi = GAMMA_BOUNDS
    if problem.positive_distances.size == 0:
        return fallback, False
    grid = np.geomspace(lo, hi, GAMMA_GRID_POINTS)
    values = _evaluate_grid(lambda chunk: problem.curvature(chunk, beta), grid, problem.positive_distances.size)
    if np.ptp(values) <= FLAT_TOLERANCE * max(1.0, float(np.max(np.abs(values)))):
        return fallback, False
    a, b = _bracket(grid, int(np.argmin(values)))
    gamma = golden_section_minimize(lambda x: float(problem.curvature(x, beta)), a, b, tol)
    return float(min(max(gamma, lo), hi)), True


def infer_beta(samples: Samples, gamma: float, axis: Axis = Axis.LONGITUDINAL,
               shape: Optional[FieldShape] = None, tol: float = TOLERANCE) -> float:
    """argmax over beta in [2, 20] of the log-likelihood, gamma fixed. A flat likelihood gives 2."""
    if not gamma > 0:
        raise CalibrationError(f"gamma must be positive, got {gamma}")
    problem = AxisProblem(samples, axis, shape)
    if problem.empty:
        raise InsufficientDataError(f"No samples inform axis '{axis.value}'")
    return _infer_beta(problem, gamma, tol=tol)[0]


def infer_gamma(samples: Samples, beta: float, axis: Axis = Axis.LONGITUDINAL,
                shape: Optional[FieldShape] = None, tol: float = TOLERANCE) -> float:
    """argmin over gamma in [0.05, 200] of d2 lnL / d gamma2, beta fixed. A flat objective gives 0.05."""
    if not beta >= 2:
        raise CalibrationError(f"beta must be >= 2, got {beta}")
    problem = AxisProblem(samples, axis, shape)
    if problem.empty:
        raise InsufficientDataError(f"No samples inform axis '{axis.value}'")
    return _infer_gamma(problem, beta, tol=tol)[0]


def _initial_gamma(samples: SpacingArrays, axis: Axis) -> float:
    problem = AxisProblem(samples, axis, FieldShape())
    if problem.positive_distances.size == 0:
        return GAMMA_BOUNDS[0]
    return float(np.clip(np.median(problem.positive_distances), *GAMMA_BOUNDS))


def _relative_change(new: Iterable[float], old: Iterable[float]) -> float:
    return max(abs(n - o) / max(abs(o), 1e-12) for n, o in zip(new, old))


def infer_params(samples: Samples, max_sweeps: int = MAX_SWEEPS, rtol: float = TOLERANCE,
                 shape: Optional[FieldShape] = None) -> InferenceResult:
    """
    Alternate gamma/beta inference over the vehicle samples, sweeping
    gamma_x, beta_x, gamma_y, beta_y until every relative change falls
    below `rtol` or `max_sweeps` is reached.

    An axis whose objective is flat (the other axis's fixed term saturates
    every sample) keeps its current values and is reported in
    `degenerate_axes` together with axes that have no non-zero distance.
    """
    arrays = as_arrays(samples)
    if not np.any(arrays.kind == 0):
        raise InsufficientDataError("Parameter inference needs vehicle spacing samples")

    current = (shape or FieldShape()).model_copy(update={
        "gamma_x": _initial_gamma(arrays, Axis.LONGITUDINAL), "beta_x": 2.0,
        "gamma_y": _initial_gamma(arrays, Axis.LATERAL), "beta_y": 2.0,
    })

    degenerate = [
        axis for axis in (Axis.LONGITUDINAL, Axis.LATERAL)
        if AxisProblem(arrays, axis, current).degenerate
    ]
    active = [axis for axis in (Axis.LONGITUDINAL, Axis.LATERAL) if axis not in degenerate]

    converged = False
    sweeps = 0
    uninformed: List[Axis] = []
    for sweeps in range(1, max_sweeps + 1):
        previous = [current.gamma_x, current.beta_x, current.gamma_y, current.beta_y]
        uninformed = []
        for axis in active:
            gamma, beta = current.pair(axis)
            gamma, gamma_informed = _infer_gamma(AxisProblem(arrays, axis, current), beta, fallback=gamma)
            current = current.with_pair(axis, gamma=gamma)
            beta, beta_informed = _infer_beta(AxisProblem(arrays, axis, current), gamma, fallback=beta)
            current = current.with_pair(axis, beta=beta)
            if not (gamma_informed and beta_informed):
                uninformed.append(axis)
        updated = [current.gamma_x, current.beta_x, current.gamma_y, current.beta_y]
        if _relative_change(updated, previous) < rtol:
            converged = True
            break

    return InferenceResult(
        gamma_x=current.gamma_x, beta_x=current.beta_x,
        gamma_y=current.gamma_y, beta_y=current.beta_y,
        converged=converged and len(uninformed) < len(active), sweeps=sweeps,
        degenerate_axes=degenerate + uninformed,
    )


def infer_line_params(samples: Samples, kind: SpacingKind, max_sweeps: int = MAX_SWEEPS,
                      rtol: float = TOLERANCE) -> LineFit:
    """Pooled (gamma, beta) inference for lane-marker or boundary samples."""
    if kind == SpacingKind.VEHICLE:
        raise CalibrationError("Use infer_params for vehicle samples")
    axis = Axis.LANE_MARKER if kind == SpacingKind.LANE_MARKER else Axis.BOUNDARY
    arrays = as_arrays(samples)
    problem = AxisProblem(arrays, axis)
    if problem.empty:
        raise InsufficientDataError(f"No {kind.value} samples to calibrate")

    gamma = _initial_gamma(arrays, axis)
    beta = 2.0
    converged = False
    informed = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        previous = (gamma, beta)
        gamma, gamma_informed = _infer_gamma(problem, beta, fallback=gamma)
        beta, beta_informed = _infer_beta(problem, gamma, fallback=beta)
        informed = gamma_informed and beta_informed
        if _relative_change((gamma, beta), previous) < rtol:
            converged = True
            break

    return LineFit(kind=kind, gamma=gamma, beta=beta, converged=converged and informed,
                   sweeps=sweeps, n_samples=problem.n_samples)
