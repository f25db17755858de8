"""Color transfer by semi-relaxed OT between k-means color models.

Rows of the transport plan are reference colors (relaxed marginal ``a``),
columns are source colors (hard marginal ``b``), so every source pixel's
mass is transported and gets a new color.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from PIL import Image
from sklearn.cluster import KMeans

from .core import Problem, TransportPlan
from .errors import ConfigError, InputError
from .registry import AnyConfig, run
from .solvers import SolveResult, SolverConfig

logger = logging.getLogger(__name__)


@dataclass
class ColorModel:
    centroids: np.ndarray  # (k, 3) RGB in [0, 1]
    weights: np.ndarray  # (k,) pixel fractions, sum to 1
    assignment: np.ndarray  # (H, W) centroid index per pixel

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def render(self, colors: Optional[np.ndarray] = None) -> np.ndarray:
        """Image with every pixel replaced by its centroid (or by ``colors[centroid]``)."""
        colors = self.centroids if colors is None else colors
        return colors[self.assignment]


@dataclass
class TransferConfig:
    k_source: int = 32
    k_reference: int = 32
    lam: float = 1e-9
    solver: AnyConfig = field(default_factory=lambda: SolverConfig("bcfw", stepsize="decay"))
    kmeans_seed: int = 0
    kmeans_max_iters: int = 100
    snapshot_iterations: Sequence[int] = ()

    def __post_init__(self):
        if self.k_source < 1 or self.k_reference < 1:
            raise ConfigError("cluster counts must be at least 1")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if any(k < 0 for k in self.snapshot_iterations):
            raise ConfigError("snapshot iterations must be nonnegative")


def load_image(path) -> np.ndarray:
    """Read an image as float RGB in [0, 1], shape (H, W, 3)."""
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc
    return rgb / 255.0


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def save_image(path, image: np.ndarray) -> None:
    """Write float RGB in [0, 1] as 8-bit PNG, or a 2-D uint8 array as grayscale."""
    image = np.asarray(image)
    if image.ndim == 2 and image.dtype == np.uint8:
        Image.fromarray(image, mode="L").save(path, format="PNG")
    else:
        Image.fromarray(to_uint8(image), mode="RGB").save(path, format="PNG")


def quantize(image: np.ndarray, k: int, seed: int = 0, max_iters: int = 100) -> ColorModel:
    """k-means (k-means++ seeding) color model of an RGB image."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] * image.shape[1] == 0:
        raise InputError(f"expected a nonempty (H, W, 3) image, got shape {image.shape}")
    pixels = image.reshape(-1, 3)
    distinct = np.unique(pixels, axis=0).shape[0]
    if k > distinct:
        warnings.warn(f"k={k} exceeds the {distinct} distinct colors; using k={distinct}",
                      stacklevel=2)
        k = distinct
    km = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=max_iters,
                random_state=seed, algorithm="lloyd")
    labels = km.fit_predict(pixels)
    centroids = np.clip(km.cluster_centers_, 0.0, 1.0)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    return ColorModel(centroids, counts / counts.sum(), labels.reshape(image.shape[:2]))


def build_cost(source: ColorModel, reference: ColorModel) -> np.ndarray:
    """Squared RGB distances, rows = reference centroids, columns = source centroids."""
    diff = reference.centroids[:, None, :] - source.centroids[None, :, :]
    return np.einsum("jik,jik->ji", diff, diff)


def build_problem(source: ColorModel, reference: ColorModel, lam: float) -> Problem:
    return Problem(build_cost(source, reference), reference.weights, source.weights, lam)


def mapped_colors(source: ColorModel, reference: ColorModel, plan: TransportPlan) -> np.ndarray:
    """Barycentric projection of each source centroid through the plan."""
    T = plan.entries if isinstance(plan, TransportPlan) else np.asarray(plan)
    if T.shape != (reference.k, source.k):
        raise InputError(f"plan has shape {T.shape}, expected ({reference.k}, {source.k})")
    mass = T.sum(axis=0)
    out = source.centroids.copy()
    live = mass > 0
    out[live] = (T[:, live].T @ reference.centroids) / mass[live, None]
    return np.clip(out, 0.0, 1.0)


def recolor(image: np.ndarray, source: ColorModel, reference: ColorModel,
            plan: TransportPlan) -> np.ndarray:
    """Recolor the source image: each pixel takes its centroid's transported color."""
    if np.asarray(image).shape[:2] != source.assignment.shape:
        raise InputError("image does not match the source color model")
    return source.render(mapped_colors(source, reference, plan))


def heatmap(plan: TransportPlan) -> np.ndarray:
    """Row-normalized plan as 8-bit grayscale (zero rows stay black)."""
    T = plan.entries if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    sums = T.sum(axis=1, keepdims=True)
    norm = np.divide(T, sums, out=np.zeros_like(T), where=sums > 0)
    return np.clip(np.rint(norm * 255.0), 0, 255).astype(np.uint8)


@dataclass
class TransferResult:
    source_model: ColorModel
    reference_model: ColorModel
    problem: Problem
    solve: SolveResult
    recolored: np.ndarray
    snapshots: dict = field(default_factory=dict)  # iteration -> TransportPlan


def color_transfer(source_image: np.ndarray, reference_image: np.ndarray,
                   cfg: TransferConfig) -> TransferResult:
    source = quantize(source_image, cfg.k_source, cfg.kmeans_seed, cfg.kmeans_max_iters)
    reference = quantize(reference_image, cfg.k_reference, cfg.kmeans_seed, cfg.kmeans_max_iters)
    problem = build_problem(source, reference, cfg.lam)
    wanted = set(int(k) for k in cfg.snapshot_iterations)
    snapshots = {}

    def keep(k, plan):
        if k in wanted and k not in snapshots:
            snapshots[k] = plan.copy()

    result = run(problem, cfg.solver, callback=keep, checkpoints=sorted(wanted))
    missed = sorted(wanted - snapshots.keys())
    if missed:
        logger.warning("solver stopped at iteration %d before snapshots %s",
                       result.trace[-1].iteration, missed)
    recolored = recolor(source_image, source, reference, result.plan)
    return TransferResult(source, reference, problem, result, recolored, snapshots)
