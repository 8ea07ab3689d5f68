"""Layer-level profiling of a feature-hierarchy DNN and the linear cost/quality fit.

A network is described by an ordered list of convolution layers plus the
indices (1-based, as in the usual layer numbering of detection backbones) of
the layers that emit each feature scale and of the first layer of each
inference block.  From that we derive per-class loads and fit

    fn_flops = L0 + c1 * d,   in_flops = c2 * d,   quality = delta_s * d

where ``d`` is the communication load (feature bytes) of the class.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from fhei.errors import DegenerateSamples, FeatureTooLarge, OutOfRangeClass


@dataclass(frozen=True)
class ConvLayerSpec:
    filter_size: int
    output_size: int
    in_channels: int
    out_channels: int
    output_bytes: int

    def __post_init__(self):
        for name, value in asdict(self).items():
            if int(value) != value or value <= 0:
                raise ValueError(f"ConvLayerSpec.{name} must be a positive integer, got {value!r}")


def layer_flops(layer: ConvLayerSpec) -> int:
    """FLOPs of one convolution layer, ``k^2 m^2 h_in h_out``."""
    k, m = layer.filter_size, layer.output_size
    return k * k * m * m * layer.in_channels * layer.out_channels


@dataclass(frozen=True)
class HierarchyProfile:
    layers: tuple[ConvLayerSpec, ...]
    feature_layers: tuple[int, ...]
    inference_starts: tuple[int, ...]
    inference_block_len: int
    # measured quality per class (e.g. mAP); optional, only needed for fitting
    class_quality: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "feature_layers", tuple(int(i) for i in self.feature_layers))
        object.__setattr__(self, "inference_starts", tuple(int(i) for i in self.inference_starts))
        n = len(self.layers)
        if len(self.feature_layers) != len(self.inference_starts):
            raise ValueError("need one inference start per feature scale")
        if not self.feature_layers:
            raise ValueError("profile needs at least one feature scale")
        if any(b <= a for a, b in zip(self.feature_layers, self.feature_layers[1:])):
            raise ValueError("feature layer indices must be strictly increasing")
        if self.inference_block_len < 1:
            raise ValueError("inference_block_len must be >= 1")
        for i in self.feature_layers:
            if not 1 <= i <= n:
                raise ValueError(f"feature layer {i} outside 1..{n}")
        for i in self.inference_starts:
            if not (1 <= i and i + self.inference_block_len - 1 <= n):
                raise ValueError(f"inference block starting at {i} runs past layer {n}")
        if self.class_quality is not None:
            object.__setattr__(self, "class_quality", tuple(float(q) for q in self.class_quality))
            if len(self.class_quality) != self.num_scales:
                raise ValueError("class_quality needs one entry per scale")

    @property
    def num_scales(self) -> int:
        return len(self.feature_layers)

    def _check_class(self, k: int):
        if not 1 <= k <= self.num_scales:
            raise OutOfRangeClass(f"class {k} outside 1..{self.num_scales}")


def class_loads(profile: HierarchyProfile, k: int) -> tuple[int, int]:
    """FN and IN FLOPs of a class-``k`` inference."""
    profile._check_class(k)
    flops = [layer_flops(layer) for layer in profile.layers]
    fn = sum(flops[: profile.feature_layers[k - 1]])
    start = profile.inference_starts[k - 1] - 1
    return fn, sum(flops[start : start + profile.inference_block_len])


def comm_load(profile: HierarchyProfile, k: int) -> int:
    """Bytes of features of scales 1..k."""
    profile._check_class(k)
    return sum(profile.layers[i - 1].output_bytes for i in profile.feature_layers[:k])


def class_samples(profile: HierarchyProfile) -> list[tuple[float, float, float, float]]:
    """``(comm_bytes, fn_flops, in_flops, quality)`` for every class of the profile."""
    if profile.class_quality is None:
        raise ValueError("profile has no class_quality; cannot build fit samples")
    rows = []
    for k in range(1, profile.num_scales + 1):
        fn, inf = class_loads(profile, k)
        rows.append((float(comm_load(profile, k)), float(fn), float(inf), profile.class_quality[k - 1]))
    return rows


@dataclass(frozen=True)
class NetCostModel:
    """Linear DNN cost model. Defaults are the YOLO v3 constants used throughout the experiments."""

    L0: float = 14.527e9
    c1: float = 12.59e3
    c2: float = 5.664e3
    delta_s: float = 12.0 / 1e6
    scale_sizes: tuple[float, ...] = (2.8e6, 1.6e6, 1.6e6)

    def __post_init__(self):
        object.__setattr__(self, "scale_sizes", tuple(float(s) for s in self.scale_sizes))
        if self.L0 < 0:
            raise ValueError("L0 must be non-negative")
        if not (self.c1 > 0 and self.c2 > 0 and self.delta_s > 0):
            raise ValueError("c1, c2 and delta_s must be strictly positive")
        if any(s <= 0 for s in self.scale_sizes):
            raise ValueError("scale sizes must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scale_sizes"] = list(self.scale_sizes)
        return d


def scale_for_feature_size(model: NetCostModel, d: float) -> int:
    """Smallest class k whose cumulative feature size covers ``d`` bytes."""
    total = 0.0
    for k, size in enumerate(model.scale_sizes, start=1):
        total += size
        if d <= total:
            return k
    raise FeatureTooLarge(f"{d} bytes exceeds the {total} bytes of all scales")


def _slope_through_origin(x: np.ndarray, y: np.ndarray) -> float:
    return float(x @ y / (x @ x))


def fit_cost_model(
    samples: Iterable[Sequence[float]],
    scale_sizes: Sequence[float] | None = None,
) -> NetCostModel:
    """Least-squares fit of the linear cost model.

    ``samples`` holds ``(comm_bytes, fn_flops, in_flops, quality)`` rows. The FN
    fit keeps an intercept; the IN and quality fits are forced through the
    origin. When ``scale_sizes`` is omitted the per-scale sizes are taken as the
    successive differences of the sorted distinct comm loads.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[1] != 4 or len(data) < 2:
        raise DegenerateSamples("need at least two (comm, fn, in, quality) samples")
    d, fn, inf, q = data.T
    if np.ptp(d) == 0:
        raise DegenerateSamples("all samples have the same communication load")

    # centred normal equations for the FN line
    dc = d - d.mean()
    c1 = float(dc @ (fn - fn.mean()) / (dc @ dc))
    L0 = float(fn.mean() - c1 * d.mean())
    if L0 < 0:
        # a zero intercept comes back as round-off of either sign
        if -L0 > 1e-9 * abs(c1) * float(np.abs(d).max()):
            raise DegenerateSamples(f"fitted FN intercept is negative ({L0:.6g} FLOPs)")
        L0 = 0.0

    if scale_sizes is None:
        cum = np.unique(d)
        scale_sizes = np.diff(np.concatenate(([0.0], cum)))
    return NetCostModel(
        L0=L0,
        c1=c1,
        c2=_slope_through_origin(d, inf),
        delta_s=_slope_through_origin(d, q),
        scale_sizes=tuple(scale_sizes),
    )


# -- file formats -------------------------------------------------------------
#
# Layer-spec file (JSON):
#   {"layers": [{"filter_size": 3, "output_size": 416, "in_channels": 3,
#                "out_channels": 32, "output_bytes": 22151168}, ...],
#    "feature_layers": [37, 62, 75], "inference_starts": [76, 88, 100],
#    "inference_block_len": 7, "class_quality": [33.6, 52.8, 72.0]}
#
# Model file (JSON): {"L0": ..., "c1": ..., "c2": ..., "delta_s": ..., "scale_sizes": [...]}


def load_profile(path: str | Path) -> HierarchyProfile:
    raw = json.loads(Path(path).read_text())
    return HierarchyProfile(
        layers=tuple(ConvLayerSpec(**layer) for layer in raw["layers"]),
        feature_layers=tuple(raw["feature_layers"]),
        inference_starts=tuple(raw["inference_starts"]),
        inference_block_len=int(raw["inference_block_len"]),
        class_quality=raw.get("class_quality"),
    )


def dump_profile(profile: HierarchyProfile, path: str | Path) -> None:
    raw = {
        "layers": [asdict(layer) for layer in profile.layers],
        "feature_layers": list(profile.feature_layers),
        "inference_starts": list(profile.inference_starts),
        "inference_block_len": profile.inference_block_len,
    }
    if profile.class_quality is not None:
        raw["class_quality"] = list(profile.class_quality)
    Path(path).write_text(json.dumps(raw, indent=1) + "\n")


def load_model(path: str | Path) -> NetCostModel:
    return NetCostModel(**json.loads(Path(path).read_text()))


def dump_model(model: NetCostModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def bundled_profile_path() -> Path:
    return Path(__file__).with_name("data") / "yolo_like_profile.json"


def bundled_profile() -> HierarchyProfile:
    """Synthetic 106-layer stand-in for YOLO v3, calibrated to the default NetCostModel."""
    return load_profile(bundled_profile_path())
