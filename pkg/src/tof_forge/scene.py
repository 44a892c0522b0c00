"""Target geometry and its discrete range response.

A target is a weighted point cloud. Posing rotates it about the x- and
z-axes, projection collapses it onto the viewing axis into a set of
reflecting surfaces (distance, coefficient), and discretization deposits
those surfaces onto a fixed time-bin grid as the target's impulse response.
No hidden-surface removal is applied: every point contributes its weight
regardless of occlusion (documented simplification).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DepthGridError, OutOfWindowError

C_LIGHT = 299792458.0  # m/s

_TWO_PI = 2.0 * math.pi

# relative point budget per part; renormalized over the enabled subset.
# rotors dominate: hub/motor assemblies are the strongest compact reflectors
_PART_FRACTIONS = {
    "body": 0.24,
    "arm_fl": 0.04, "arm_fr": 0.04, "arm_rl": 0.04, "arm_rr": 0.04,
    "rotor_fl": 0.15, "rotor_fr": 0.15, "rotor_rl": 0.15, "rotor_rr": 0.15,
}

_ARM_KEYS = ("fl", "fr", "rl", "rr")
# unit xy directions of the four arms (45-degree diagonals, front = +y)
_ARM_DIRS = {
    "fl": (-math.sqrt(0.5), math.sqrt(0.5)),
    "fr": (math.sqrt(0.5), math.sqrt(0.5)),
    "rl": (-math.sqrt(0.5), -math.sqrt(0.5)),
    "rr": (math.sqrt(0.5), -math.sqrt(0.5)),
}


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Weighted 3D points in meters; weights are dimensionless reflectivities."""

    points: np.ndarray   # (N, 3)
    weights: np.ndarray  # (N,), all > 0

    def __post_init__(self):
        pts = _readonly(self.points)
        w = _readonly(self.weights)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise ConfigError("points must be a non-empty (N, 3) array")
        if w.shape != (pts.shape[0],):
            raise ConfigError("weights must be one value per point")
        if not np.all(np.isfinite(pts)):
            raise ConfigError("point coordinates must be finite")
        if not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise ConfigError("weights must be finite and > 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class Pose:
    """Rotation angles about the x-axis and z-axis, radians in [0, 2*pi)."""

    theta_x: float
    theta_z: float

    def __post_init__(self):
        for name, v in (("theta_x", self.theta_x), ("theta_z", self.theta_z)):
            if not (0.0 <= v < _TWO_PI):
                raise ConfigError(f"{name}={v} outside [0, 2*pi)")

    @classmethod
    def from_degrees(cls, theta_x_deg, theta_z_deg):
        """Build a pose from degrees, wrapping into [0, 360)."""
        return cls(math.radians(theta_x_deg % 360.0), math.radians(theta_z_deg % 360.0))


@dataclass(frozen=True, eq=False)
class SurfaceSet:
    """Reflecting surfaces as (distance_i meters, coefficient_i >= 0) pairs.

    reference_distance is the system-to-centroid range; individual distances
    are reference_distance plus each point's axial offset from the centroid.
    """

    distances: np.ndarray
    coefficients: np.ndarray
    reference_distance: float

    def __post_init__(self):
        d = _readonly(self.distances)
        a = _readonly(self.coefficients)
        if d.ndim != 1 or d.shape != a.shape or d.shape[0] == 0:
            raise ConfigError("distances and coefficients must be matching 1D arrays")
        if np.any(d < 0):
            raise ConfigError("surface distances must be >= 0")
        if np.any(a < 0) or not np.isfinite(a.sum()) or not np.any(a > 0):
            raise ConfigError("need finite coefficients >= 0 with at least one > 0")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "coefficients", a)

    def __len__(self):
        return self.distances.shape[0]


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """Discrete target response: per-bin deposited coefficient mass.

    origin_time is the absolute time of bin 0 relative to pulse emission.
    """

    bins: np.ndarray
    bin_width: float
    origin_time: float = 0.0

    def __post_init__(self):
        b = _readonly(self.bins)
        if b.ndim != 1 or b.shape[0] == 0:
            raise ConfigError("bins must be a non-empty 1D array")
        if np.any(b < 0) or not b.sum() > 0:
            raise ConfigError("bins must be >= 0 with positive total mass")
        if not self.bin_width > 0:
            raise ConfigError("bin_width must be > 0")
        object.__setattr__(self, "bins", b)

    def __len__(self):
        return self.bins.shape[0]


@dataclass(frozen=True)
class MockDroneSpec:
    """Procedural quadrotor stand-in: body box + four arms + four rotor discs.

    The default airframe is deliberately chiral (per-arm lengths, rotor radii
    and rotor heights all differ). A mirror- or 180-degree-symmetric frame
    would alias poses: (theta_x, theta_z) and (theta_x, -theta_z) produce
    identical range profiles for any left/right-symmetric target, collapsing
    the pose classes.

    Dimensions in meters. Arm order is (front-left, front-right, rear-left,
    rear-right); arms run diagonally from the body edge, rotors are flat
    discs centered on the arm tips.
    """

    body: tuple = (0.10, 0.14, 0.045)
    arm_lengths: tuple = (0.13, 0.11, 0.078, 0.094)
    rotor_radii: tuple = (0.060, 0.050, 0.038, 0.047)
    rotor_lifts: tuple = (0.044, 0.011, 0.028, 0.060)
    arm_jitter: float = 0.004
    rotor_hub_bias: float = 4.0  # exponent on u in r = R*u**bias; 0.5 = uniform disc
    total_points: int = 2000
    parts: tuple = ("body", "arm_fl", "arm_fr", "arm_rl", "arm_rr",
                    "rotor_fl", "rotor_fr", "rotor_rl", "rotor_rr")
    seed: int = 0

    def __post_init__(self):
        dims = (*self.body, *self.arm_lengths, *self.rotor_radii)
        if len(self.body) != 3 or any(len(t) != 4 for t in
                                      (self.arm_lengths, self.rotor_radii, self.rotor_lifts)):
            raise ConfigError("body needs 3 dims; per-arm tuples need 4 entries")
        if any(d <= 0 for d in dims):
            raise ConfigError("all drone dimensions must be > 0")
        if self.arm_jitter < 0:
            raise ConfigError("arm_jitter must be >= 0")
        if not self.rotor_hub_bias > 0:
            raise ConfigError("rotor_hub_bias must be > 0")
        unknown = set(self.parts) - set(_PART_FRACTIONS)
        if unknown or not self.parts:
            raise ConfigError(f"unknown or empty parts selection: {sorted(unknown)}")
        if self.total_points < len(self.parts):
            raise ConfigError("total_points must allow >= 1 sample per part")

    def nominal_bounds(self):
        """Analytic (min_xyz, max_xyz) of the airframe, excluding arm jitter."""
        bx, by, bz = self.body
        lo = np.array([-bx / 2, -by / 2, -bz / 2])
        hi = np.array([bx / 2, by / 2, bz / 2])
        for k, L, R, z in zip(_ARM_KEYS, self.arm_lengths, self.rotor_radii,
                              self.rotor_lifts):
            ux, uy = _ARM_DIRS[k]
            cx, cy = ux * L, uy * L
            if "rotor_" + k in self.parts:
                lo = np.minimum(lo, [cx - R, cy - R, min(-bz / 2, z)])
                hi = np.maximum(hi, [cx + R, cy + R, max(bz / 2, z)])
            if "arm_" + k in self.parts:
                lo = np.minimum(lo, [min(cx, 0), min(cy, 0), -bz / 2])
                hi = np.maximum(hi, [max(cx, 0), max(cy, 0), bz / 2])
        return lo, hi


def _allocate_points(spec):
    """Largest-remainder split of total_points over enabled parts, each >= 1."""
    fracs = np.array([_PART_FRACTIONS[p] for p in spec.parts])
    fracs = fracs / fracs.sum()
    quota = fracs * (spec.total_points - len(spec.parts))
    counts = np.floor(quota).astype(int)
    rem = spec.total_points - len(spec.parts) - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:rem]] += 1
    return counts + 1


def make_mock_drone(spec: MockDroneSpec) -> PointCloud:
    """Sample the procedural drone into a point cloud.

    Deterministic given the spec (the sampling seed is a spec field); emits
    exactly spec.total_points points with unit weights. Body points fill the
    box volume, arm points follow the arm segment with gaussian jitter,
    rotor points cover the disc area uniformly.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    counts = _allocate_points(spec)
    bx, by, bz = spec.body
    arm_of = dict(zip(_ARM_KEYS, spec.arm_lengths))
    rad_of = dict(zip(_ARM_KEYS, spec.rotor_radii))
    lift_of = dict(zip(_ARM_KEYS, spec.rotor_lifts))
    chunks = []
    for part, n in zip(spec.parts, counts):
        if part == "body":
            chunks.append((rng.random((n, 3)) - 0.5) * np.array([bx, by, bz]))
        elif part.startswith("arm_"):
            k = part[4:]
            ux, uy = _ARM_DIRS[k]
            x0, y0 = ux * bx / 2, uy * by / 2
            x1, y1 = ux * arm_of[k], uy * arm_of[k]
            t = rng.random(n)
            seg = np.stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0), np.zeros(n)], axis=1)
            chunks.append(seg + rng.normal(0.0, spec.arm_jitter, (n, 3)))
        else:
            k = part[6:]
            ux, uy = _ARM_DIRS[k]
            r = rad_of[k] * rng.random(n) ** spec.rotor_hub_bias
            th = rng.random(n) * _TWO_PI
            chunks.append(np.stack([ux * arm_of[k] + r * np.cos(th),
                                    uy * arm_of[k] + r * np.sin(th),
                                    np.full(n, lift_of[k])], axis=1))
    pts = np.concatenate(chunks)
    return PointCloud(pts, np.ones(len(pts)))


def load_depth_grid(text: str) -> PointCloud:
    """Parse a depth-grid text into a point cloud.

    Format: whitespace-separated reals, one row per line; lines starting
    with '#' are comments; sentinel -1 marks background cells; an optional
    leading 'pitch <meters>' line sets the pixel pitch (default 0.01 m).
    Cell (row, col) with depth z becomes point (col*pitch, row*pitch, z)
    with weight 1.
    """
    pitch = 0.01
    rows = []
    saw_pitch = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "pitch":
            if saw_pitch or rows:
                raise DepthGridError(f"line {lineno}: pitch header must come first")
            try:
                pitch = float(tokens[1])
            except (IndexError, ValueError):
                raise DepthGridError(f"line {lineno}: malformed pitch header") from None
            if pitch <= 0:
                raise DepthGridError(f"line {lineno}: pitch must be > 0")
            saw_pitch = True
            continue
        vals = []
        for col, tok in enumerate(tokens):
            try:
                v = float(tok)
            except ValueError:
                raise DepthGridError(
                    f"row {len(rows)}, column {col}: non-numeric cell {tok!r}") from None
            if not math.isfinite(v):
                raise DepthGridError(f"row {len(rows)}, column {col}: non-finite cell")
            vals.append(v)
        if rows and len(vals) != len(rows[0]):
            raise DepthGridError(
                f"row {len(rows)}: expected {len(rows[0])} values, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise DepthGridError("no data rows found")
    grid = np.array(rows)
    rr, cc = np.nonzero(grid != -1.0)
    if rr.size == 0:
        raise DepthGridError("empty target: every cell is background")
    pts = np.stack([cc * pitch, rr * pitch, grid[rr, cc]], axis=1)
    return PointCloud(pts, np.ones(len(rr)))


def rotate(cloud: PointCloud, pose: Pose) -> PointCloud:
    """Apply the rigid rotation Rz(theta_z) . Rx(theta_x) to every point."""
    cx, sx = math.cos(pose.theta_x), math.sin(pose.theta_x)
    cz, sz = math.cos(pose.theta_z), math.sin(pose.theta_z)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return PointCloud(cloud.points @ (rz @ rx).T, cloud.weights)


_AXES = {"x": 0, "y": 1, "z": 2}


def _axis_vector(view_axis):
    s = view_axis.strip().lower()
    sign = 1.0
    if s[0] in "+-":
        sign = -1.0 if s[0] == "-" else 1.0
        s = s[1:]
    if s not in _AXES:
        raise ConfigError(f"view_axis must be one of +/-x, +/-y, +/-z, got {view_axis!r}")
    return _AXES[s], sign


def project_to_surfaces(cloud: PointCloud, range_d: float,
                        view_axis: str = "+y") -> SurfaceSet:
    """Collapse a posed cloud onto the viewing axis.

    Each point becomes one surface at distance range_d plus its axial offset
    from the cloud's weighted centroid; its weight becomes the surface
    coefficient (uniform falloff across surfaces). No occlusion handling.
    """
    if not range_d > 0:
        raise ConfigError("range_d must be > 0")
    axis, sign = _axis_vector(view_axis)
    axial = sign * cloud.points[:, axis]
    centroid = float(np.average(axial, weights=cloud.weights))
    return SurfaceSet(range_d + (axial - centroid), cloud.weights, range_d)


def first_return_window_start(surfaces: SurfaceSet, bin_width: float,
                              anchor_bin: int) -> float:
    """Window start that puts the earliest return at the anchor bin's center."""
    t_first = 2.0 * float(surfaces.distances.min()) / C_LIGHT
    return t_first - (anchor_bin + 0.5) * bin_width


def discretize_response(surfaces: SurfaceSet, num_bins: int, bin_width: float,
                        window_start: float) -> ImpulseResponse:
    """Deposit each surface's coefficient into the bin holding its delay.

    Bin index is floor((2*d/c - window_start)/bin_width); a surface outside
    [window_start, window_start + num_bins*bin_width) raises OutOfWindowError
    listing the offending distances. Total deposited mass equals the
    coefficient sum.
    """
    if num_bins <= 0:
        raise ConfigError("num_bins must be > 0")
    if not bin_width > 0:
        raise ConfigError("bin_width must be > 0")
    delays = 2.0 * surfaces.distances / C_LIGHT
    idx = np.floor((delays - window_start) / bin_width)
    bad = (idx < 0) | (idx >= num_bins)
    if np.any(bad):
        offenders = surfaces.distances[bad]
        shown = ", ".join(f"{d:.6g}" for d in offenders[:5])
        raise OutOfWindowError(
            f"{bad.sum()} surface(s) outside the {num_bins}-bin window "
            f"(distances: {shown}{'...' if bad.sum() > 5 else ''})",
            offending_distances=offenders)
    bins = np.zeros(num_bins)
    np.add.at(bins, idx.astype(np.int64), surfaces.coefficients)
    return ImpulseResponse(bins, bin_width, origin_time=window_start)
