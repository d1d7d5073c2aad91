import math
from collections import defaultdict
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from app.config import settings
from app.models.calibration import (
    BinResult,
    BinStatus,
    CalibrationBin,
    CalibrationReport,
    SpacingKind,
    SpacingSample,
)
from app.models.dataset import Dataset
from app.models.fields import FieldParameterSet, SFieldParams
from app.services.calibration import SpacingArrays, as_arrays, infer_line_params, infer_params
from app.services.geometry import gap_vector, nearest_lines
from app.services.scenes import SceneBuilder
from app.utils.exceptions import CalibrationError, InsufficientDataError
from app.utils.logger import get_logger

logger = get_logger(__name__)

PARAMETERS = ("gamma_x", "beta_x", "gamma_y", "beta_y")


def collect_spacings(dataset: Dataset, window: Optional[float] = None, lane_span: Optional[int] = None,
                     id_offset: int = 0) -> List[SpacingSample]:
    """
    Spacing samples of every vehicle frame: one vehicle sample per perceived
    neighbor (edge-to-edge gap), one lane-marker sample per nearest marker on
    each side and one boundary sample for the nearest road boundary
    (center-based lateral distance).
    """
    builder = SceneBuilder(dataset, window=window, lane_span=lane_span)
    samples: List[SpacingSample] = []
    for vehicle_id in dataset.vehicle_ids:
        owner = vehicle_id + id_offset
        for scene in builder.scenes(vehicle_id):
            ego = scene.ego
            speed = ego.speed
            for other in scene.neighbors:
                gap = gap_vector(ego, other)
                samples.append(SpacingSample(dx=gap.dx, dy=gap.dy, kind=SpacingKind.VEHICLE,
                                             ego_velocity=speed, vehicle_id=owner))
            markers, boundaries = nearest_lines(ego.y, scene.lanes)
            for dy in markers:
                samples.append(SpacingSample(dx=0.0, dy=dy, kind=SpacingKind.LANE_MARKER,
                                             ego_velocity=speed, vehicle_id=owner))
            for dy in boundaries:
                samples.append(SpacingSample(dx=0.0, dy=dy, kind=SpacingKind.BOUNDARY,
                                             ego_velocity=speed, vehicle_id=owner))
    return samples


def velocity_bin(velocity: float) -> int:
    """Nearest integer velocity, halves rounded up (19.5 <= v < 20.5 -> 20)."""
    return int(math.floor(velocity + 0.5))


def bin_by_velocity(samples: Sequence[SpacingSample], min_samples: Optional[int] = None,
                    min_vehicles: Optional[int] = None) -> List[CalibrationBin]:
    """
    Group vehicle spacing samples by integer ego velocity. Lane-marker and
    boundary samples are pooled across velocities and are not binned.
    """
    min_samples = settings.MIN_BIN_SAMPLES if min_samples is None else min_samples
    min_vehicles = settings.MIN_BIN_VEHICLES if min_vehicles is None else min_vehicles

    grouped: Dict[int, List[SpacingSample]] = defaultdict(list)
    for sample in samples:
        if sample.kind == SpacingKind.VEHICLE:
            grouped[velocity_bin(sample.ego_velocity)].append(sample)

    bins = []
    for velocity in sorted(grouped):
        members = grouped[velocity]
        n_vehicles = len({s.vehicle_id for s in members})
        if len(members) < min_samples:
            status = BinStatus.INSUFFICIENT_SAMPLES
        elif n_vehicles < min_vehicles:
            status = BinStatus.INSUFFICIENT_VEHICLES
        else:
            status = BinStatus.OK
        bins.append(CalibrationBin(velocity=velocity, samples=members, n_vehicles=n_vehicles, status=status))
    return bins


def bootstrap_draws(n_vehicles: int, frac: float) -> int:
    # tolerance keeps exact products such as 0.85 * 100 from rounding up
    return max(1, math.ceil(frac * n_vehicles - 1e-9))


def bootstrap_bin(bin: CalibrationBin, n_iter: Optional[int] = None, frac: Optional[float] = None,
                  seed: Optional[int] = None) -> BinResult:
    """
    Resample vehicles with replacement and rerun the inference per iteration.
    Iteration k of bin v draws from a generator seeded by (seed, v, k), so
    iterations are independent of scheduling and of input ordering.
    """
    n_iter = settings.BOOTSTRAP_ITERATIONS if n_iter is None else n_iter
    frac = settings.BOOTSTRAP_FRACTION if frac is None else frac
    seed = settings.RANDOM_SEED if seed is None else seed
    if not bin.sufficient:
        raise InsufficientDataError(f"Velocity bin {bin.velocity} is not sufficient ({bin.status.value})")
    if n_iter < 1 or not 0 < frac <= 1:
        raise CalibrationError(f"Invalid bootstrap protocol: n_iter={n_iter}, frac={frac}")

    by_vehicle: Dict[int, List[SpacingSample]] = defaultdict(list)
    for sample in bin.samples:
        by_vehicle[sample.vehicle_id].append(sample)
    vehicle_ids = np.array(sorted(by_vehicle))
    per_vehicle = {vid: as_arrays(by_vehicle[vid]) for vid in vehicle_ids.tolist()}
    n_draws = bootstrap_draws(vehicle_ids.size, frac)

    estimates = {name: [] for name in PARAMETERS}
    n_converged = 0
    for iteration in range(n_iter):
        rng = np.random.default_rng([seed, bin.velocity, iteration])
        drawn = rng.choice(vehicle_ids, size=n_draws, replace=True)
        pooled = [per_vehicle[int(vid)] for vid in drawn]
        arrays = SpacingArrays(
            dx=np.concatenate([a.dx for a in pooled]),
            dy=np.concatenate([a.dy for a in pooled]),
            kind=np.concatenate([a.kind for a in pooled]),
        )
        result = infer_params(arrays)
        n_converged += int(result.converged)
        for name in PARAMETERS:
            estimates[name].append(getattr(result, name))
        logger.debug(f"Bin {bin.velocity} iteration {iteration + 1}/{n_iter}: "
                     f"gamma_x={result.gamma_x:.4f} beta_x={result.beta_x:.4f} converged={result.converged}")

    means = {name: float(np.mean(values)) for name, values in estimates.items()}
    stds = {f"std_{name}": float(np.std(values)) for name, values in estimates.items()}
    return BinResult(
        velocity=bin.velocity,
        **means,
        **stds,
        n_iterations=n_iter,
        n_converged=n_converged,
        n_samples=bin.n_samples,
        n_vehicles=bin.n_vehicles,
        draws_per_iteration=n_draws,
        status=BinStatus.OK if n_converged > 0 else BinStatus.NON_CONVERGED,
    )


def fit_velocity_polynomials(results: Sequence[BinResult], degree: int = 3,
                             template: Optional[SFieldParams] = None) -> SFieldParams:
    """
    Least-squares polynomials of gamma_x and beta_x over bin velocity;
    gamma_y and beta_y become unweighted means across bins. Line and kappa
    parameters are carried over from `template`.
    """
    usable = [r for r in results if r.status == BinStatus.OK]
    if len(usable) < degree + 1:
        raise InsufficientDataError(
            f"A degree-{degree} fit needs at least {degree + 1} calibrated bins, got {len(usable)}"
        )
    velocities = np.array([r.velocity for r in usable], dtype=float)
    gamma_x_poly = P.polyfit(velocities, [r.gamma_x for r in usable], degree)
    beta_x_poly = P.polyfit(velocities, [r.beta_x for r in usable], degree)

    template = template or SFieldParams()
    return template.model_copy(update={
        "gamma_x_poly": [float(c) for c in gamma_x_poly],
        "beta_x_poly": [float(c) for c in beta_x_poly],
        "gamma_y": float(np.mean([r.gamma_y for r in usable])),
        "beta_y": float(np.mean([r.beta_y for r in usable])),
    })


class CalibrationPipeline:
    """
    Coordinates the full S-field calibration:
    1. Spacing collection over every recording
    2. Velocity binning
    3. Per-bin bootstrap inference
    4. Pooled lane-marker and boundary inference
    5. Polynomial fit over velocity
    """

    def __init__(self, window: Optional[float] = None, lane_span: Optional[int] = None,
                 min_samples: Optional[int] = None, min_vehicles: Optional[int] = None,
                 n_iter: Optional[int] = None, frac: Optional[float] = None,
                 seed: Optional[int] = None, degree: int = 3):
        self.logger = logger
        self.window = window
        self.lane_span = lane_span
        self.min_samples = settings.MIN_BIN_SAMPLES if min_samples is None else min_samples
        self.min_vehicles = settings.MIN_BIN_VEHICLES if min_vehicles is None else min_vehicles
        self.n_iter = settings.BOOTSTRAP_ITERATIONS if n_iter is None else n_iter
        self.frac = settings.BOOTSTRAP_FRACTION if frac is None else frac
        self.seed = settings.RANDOM_SEED if seed is None else seed
        self.degree = degree

    def collect(self, datasets: Sequence[Dataset]) -> List[SpacingSample]:
        samples: List[SpacingSample] = []
        # vehicle ids are only unique within a recording
        id_stride = 10 ** int(math.ceil(math.log10(max(
            [max(d.vehicle_ids, default=0) for d in datasets] + [1]) + 1)))
        for index, dataset in enumerate(datasets):
            collected = collect_spacings(dataset, self.window, self.lane_span, id_offset=index * id_stride)
            self.logger.info(f"   ✅ Recording {dataset.meta.recording_id}: {len(collected)} spacing samples "
                             f"from {dataset.n_states} vehicle states")
            samples.extend(collected)
        return samples

    def run(self, datasets: Sequence[Dataset],
            template: Optional[SFieldParams] = None) -> Tuple[FieldParameterSet, CalibrationReport]:
        start_time = datetime.now()
        template = template or SFieldParams()
        self.logger.info("🚀 Starting S-field calibration pipeline")

        self.logger.info("📋 Phase 1: Collecting spacing samples")
        samples = self.collect(datasets)
        if not samples:
            raise InsufficientDataError("No spacing samples found in the input recordings")

        self.logger.info("📋 Phase 2: Binning vehicle samples by velocity")
        bins = bin_by_velocity(samples, self.min_samples, self.min_vehicles)
        sufficient = [b for b in bins if b.sufficient]
        self.logger.info(f"   {len(sufficient)}/{len(bins)} velocity bins have enough data")
        for b in bins:
            if not b.sufficient:
                self.logger.warning(f"   ⏭️ Bin {b.velocity} m/s skipped: {b.status.value} "
                                    f"({b.n_samples} samples, {b.n_vehicles} vehicles)")

        self.logger.info(f"📋 Phase 3: Bootstrapping {self.n_iter} iterations at {self.frac:.0%} per bin")
        results = []
        for b in sufficient:
            result = bootstrap_bin(b, self.n_iter, self.frac, self.seed)
            if result.status == BinStatus.NON_CONVERGED:
                self.logger.warning(f"   ⚠️ Bin {b.velocity} m/s: no bootstrap iteration converged")
            self.logger.info(f"   ✅ Bin {b.velocity} m/s: gamma_x={result.gamma_x:.3f}±{result.std_gamma_x:.3f} "
                             f"beta_x={result.beta_x:.3f}±{result.std_beta_x:.3f}")
            results.append(result)

        self.logger.info("📋 Phase 4: Pooled lane-marker and boundary inference")
        line_fits = {}
        for kind in (SpacingKind.LANE_MARKER, SpacingKind.BOUNDARY):
            pooled = [s for s in samples if s.kind == kind]
            if not pooled:
                self.logger.warning(f"   No {kind.value} samples, keeping template parameters")
                continue
            line_fits[kind] = infer_line_params(pooled, kind)
            self.logger.info(f"   ✅ {kind.value}: gamma={line_fits[kind].gamma:.3f} beta={line_fits[kind].beta:.3f}")

        updates = {}
        if SpacingKind.LANE_MARKER in line_fits:
            updates.update(gamma_l=line_fits[SpacingKind.LANE_MARKER].gamma, beta_l=line_fits[SpacingKind.LANE_MARKER].beta)
        if SpacingKind.BOUNDARY in line_fits:
            updates.update(gamma_b=line_fits[SpacingKind.BOUNDARY].gamma, beta_b=line_fits[SpacingKind.BOUNDARY].beta)

        self.logger.info(f"📋 Phase 5: Fitting degree-{self.degree} polynomials over velocity")
        s_params = fit_velocity_polynomials(results, self.degree, template.model_copy(update=updates))

        report = CalibrationReport(
            bins=bins,
            results=results,
            lane_marker=line_fits.get(SpacingKind.LANE_MARKER),
            boundary=line_fits.get(SpacingKind.BOUNDARY),
            n_samples=len(samples),
        )
        total_time = (datetime.now() - start_time).total_seconds()
        self.logger.info(f"🎉 Calibration completed in {total_time:.2f} seconds")
        return FieldParameterSet(s_field=s_params), report
