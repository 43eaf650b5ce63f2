"""

RbxEngine: conditional averaging of an estimator over the level sets of a
sufficient statistic, on a tensor-product grid of intervals, plus orbit
averaging by quadrature and the checks that the averaged estimator is never
worse than the one it was built from.

An estimator is any callable mapping a 2D array of samples (one state per row)
to an array of predictions, shape (n,) for one output or (n, m).

>>> import numpy as np
>>> grid = BinGrid([Axis(0.0, 1.0, 2)])
>>> stat = StatisticFn("x", 1, lambda w: w[:, 0])
>>> samples = np.array([[0.1, 0.0], [0.2, 1.0], [0.7, 5.0]])
>>> rb = rao_blackwellize_empirical(lambda w: w[:, 1], stat, samples, grid)
>>> rb.bin_values[:, 0].tolist()
[0.5, 5.0]
>>> rb.occupancy.tolist()
[2, 1]

"""

import collections
import json
import logging
import math

import numpy as np
from scipy.spatial import cKDTree

from .common import RbxError

logger = logging.getLogger(__name__)

class GridError(RbxError):
    pass

class OutOfGridError(GridError):
    pass

class EmptySampleError(RbxError):
    pass

class QuadratureError(RbxError):
    pass

class InequalityViolationError(RbxError):
    pass

def _as_rows(a, n=None):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    if n is not None and len(a) != n:
        raise RbxError("expected %d rows, got %d" % (n, len(a)))
    return a

def _samples(samples):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(1, -1)
    if len(samples) == 0:
        raise EmptySampleError("no samples")
    return samples

class StatisticFn(object):
    """
    A named map from states (rows) to statistic vectors of size dimension.
    """

    def __init__(self, name, dimension, fn):
        if int(dimension) < 1:
            raise GridError("statistic dimension must be >= 1, got %r" % dimension)
        self.name = name
        self.dimension = int(dimension)
        self.fn = fn

    def __repr__(self):
        return "StatisticFn(%r, %d)" % (self.name, self.dimension)

    def __call__(self, samples):
        samples = _samples(samples)
        return _as_rows(self.fn(samples), len(samples)).reshape(len(samples), self.dimension)

class Axis(collections.namedtuple("Axis", "s_min s_max n_intervals")):
    __slots__ = ()

    def __new__(cls, s_min, s_max, n_intervals):
        s_min, s_max, n_intervals = float(s_min), float(s_max), int(n_intervals)
        if not (math.isfinite(s_min) and math.isfinite(s_max) and s_min < s_max):
            raise GridError("need finite s_min < s_max, got %r, %r" % (s_min, s_max))
        if n_intervals < 1:
            raise GridError("n_intervals must be >= 1, got %d" % n_intervals)
        return super().__new__(cls, s_min, s_max, n_intervals)

    @property
    def width(self):
        return (self.s_max - self.s_min) / self.n_intervals

    def centers(self):
        return self.s_min + (np.arange(self.n_intervals) + 0.5) * self.width

class BinGrid(object):
    """
    Left-closed, right-open intervals per axis; s = s_max falls in the last
    interval so the grid partitions the closed box.

    >>> g = BinGrid([Axis(0.0, 1.0, 10)])
    >>> g.bin_of(0.35), g.bin_of(0.0), g.bin_of(1.0)
    ((3,), (0,), (9,))
    >>> g.bin_of(1.5)
    Traceback (most recent call last):
    ...
    rbx.engine.OutOfGridError: statistic outside the grid on axis 0: 1.5
    """

    def __init__(self, axes, clamp=False):
        self.axes = tuple(a if isinstance(a, Axis) else Axis(*a) for a in axes)
        if not self.axes:
            raise GridError("a grid needs at least one axis")
        self.clamp = bool(clamp)

    def __repr__(self):
        return "BinGrid(%r, clamp=%r)" % (list(self.axes), self.clamp)

    def __eq__(self, other):
        return isinstance(other, BinGrid) and self.axes == other.axes and self.clamp == other.clamp

    @property
    def shape(self):
        return tuple(a.n_intervals for a in self.axes)

    @property
    def dimension(self):
        return len(self.axes)

    @property
    def n_bins(self):
        return int(np.prod(self.shape))

    @classmethod
    def aligned(cls, s_max, n_max, edge, clamp=False):
        """
        One axis from 0 with at most n_max intervals and an interval boundary
        just above edge, so states with s <= edge and states with s > edge
        never share a bin.

        >>> g = BinGrid.aligned(3.0, 30, 1.0)
        >>> g.shape
        (30,)
        >>> g.bin_of(1.0)[0] < g.bin_of(1.0 + 1e-6)[0]
        True
        """
        if not 0.0 < edge < s_max:
            raise GridError("edge %r must lie inside (0, %r)" % (edge, s_max))
        below = int(math.floor(n_max * edge / s_max))
        if below < 1:
            raise GridError("n_max=%d is too small to place an edge at %r" % (n_max, edge))
        h = edge * (1.0 + 1e-9) / below
        n = int(math.ceil(s_max / h))
        return cls([Axis(0.0, n * h, n)], clamp)

    def indices(self, s):
        """Multi-indices (n, d) for statistic rows s (n, d)."""
        s = _as_rows(s)
        if s.shape[1] != self.dimension:
            raise GridError("statistic of dimension %d on a %d-D grid" % (s.shape[1], self.dimension))
        out = np.empty(s.shape, dtype=np.int64)
        for j, a in enumerate(self.axes):
            col = s[:, j]
            outside = (col < a.s_min) | (col > a.s_max) | ~np.isfinite(col)
            if outside.any():
                if not self.clamp or not np.all(np.isfinite(col)):
                    raise OutOfGridError("statistic outside the grid on axis %d: %r" % (j, float(col[outside][0])))
                col = np.clip(col, a.s_min, a.s_max)
            idx = np.floor((col - a.s_min) / (a.s_max - a.s_min) * a.n_intervals).astype(np.int64)
            out[:, j] = np.clip(idx, 0, a.n_intervals - 1)
        return out

    def flat_index(self, s):
        return np.ravel_multi_index(self.indices(s).T, self.shape)

    def bin_of(self, s):
        s = np.asarray(s, dtype=float).reshape(1, -1)
        return tuple(int(i) for i in self.indices(s)[0])

    def centers(self):
        """Bin centers, shape grid.shape + (d,)."""
        mesh = np.meshgrid(*[a.centers() for a in self.axes], indexing="ij")
        return np.stack(mesh, -1)

def bin_means(flat, values, n_bins):
    """
    Per-bin arithmetic means of values (n, m) grouped by flat bin index;
    returns (means (n_bins, m), counts). Empty bins hold nan.
    """
    values = _as_rows(values, len(flat))
    counts = np.bincount(flat, minlength=n_bins)
    means = np.full((n_bins, values.shape[1]), np.nan)
    occupied = counts > 0
    for j in range(values.shape[1]):
        sums = np.bincount(flat, weights=values[:, j], minlength=n_bins)
        mean = np.zeros(n_bins)
        mean[occupied] = sums[occupied] / counts[occupied]
        # second pass on the residuals
        resid = np.bincount(flat, weights=values[:, j] - mean[flat], minlength=n_bins)
        mean[occupied] += resid[occupied] / counts[occupied]
        means[occupied, j] = mean[occupied]
    return means, counts

def _fill_empty(grid, means, counts):
    occupied = np.flatnonzero(counts > 0)
    empty = np.flatnonzero(counts == 0)
    if len(occupied) == 0:
        raise EmptySampleError("all %d bins are empty" % grid.n_bins)
    if len(empty) == 0:
        return means
    filled = means.copy()
    if grid.dimension == 1:
        for j in range(means.shape[1]):
            filled[empty, j] = np.interp(empty, occupied, means[occupied, j])
        return filled
    occ_coords = np.array(np.unravel_index(occupied, grid.shape)).T
    emp_coords = np.array(np.unravel_index(empty, grid.shape)).T
    tree = cKDTree(occ_coords)
    dist, _ = tree.query(emp_coords)
    for k, (coords, d) in enumerate(zip(emp_coords, dist)):
        # ties go to the lowest flat index
        candidates = tree.query_ball_point(coords, d * (1.0 + 1e-9) + 1e-12)
        filled[empty[k]] = means[occupied[min(candidates)]]
    return filled

class RBEstimator(object):
    """
    The conditionally averaged estimator: one value vector per bin of grid,
    looked up through the statistic.
    """

    def __init__(self, grid, statistic, bin_values, occupancy):
        self.grid = grid
        self.statistic = statistic
        bin_values = np.asarray(bin_values, dtype=float)
        if bin_values.ndim == grid.dimension:
            bin_values = bin_values[..., None]
        self.bin_values = bin_values.reshape(grid.shape + (-1,))
        self.occupancy = np.asarray(occupancy, dtype=np.int64).reshape(grid.shape)
        if statistic.dimension != grid.dimension:
            raise GridError("%r does not match a %d-D grid" % (statistic, grid.dimension))
        if not np.all(np.isfinite(self.bin_values)):
            raise GridError("non-finite bin values")

    @property
    def n_outputs(self):
        return self.bin_values.shape[-1]

    @property
    def n_samples(self):
        return int(self.occupancy.sum())

    @property
    def n_empty_bins(self):
        return int((self.occupancy == 0).sum())

    def __call__(self, samples):
        return evaluate(self, samples)

    def to_json(self):
        return {
            "format": "rbx-estimator",
            "version": 1,
            "statistic": self.statistic.name,
            "axes": [{"s_min": a.s_min, "s_max": a.s_max, "n_intervals": a.n_intervals} for a in self.grid.axes],
            "clamp": self.grid.clamp,
            "n_outputs": self.n_outputs,
            "bin_values": self.bin_values.reshape(-1).tolist(),
            "occupancy": self.occupancy.reshape(-1).tolist(),
        }

    @classmethod
    def from_json(cls, obj, statistic):
        if obj.get("format") != "rbx-estimator" or obj.get("version") != 1:
            raise GridError("not an rbx-estimator version 1 document")
        if obj["statistic"] != statistic.name:
            raise GridError("estimator was built over %r, not %r" % (obj["statistic"], statistic.name))
        grid = BinGrid([Axis(a["s_min"], a["s_max"], a["n_intervals"]) for a in obj["axes"]], obj["clamp"])
        values = np.asarray(obj["bin_values"], dtype=float).reshape(grid.shape + (obj["n_outputs"],))
        return cls(grid, statistic, values, obj["occupancy"])

    def save(self, path):
        with open(path, "w") as ofs:
            json.dump(self.to_json(), ofs)

    @classmethod
    def load(cls, path, statistic):
        with open(path) as ifs:
            return cls.from_json(json.load(ifs), statistic)

def rao_blackwellize_empirical(theta0, stat, samples, grid):
    """
    Replace theta0 by its mean over the samples falling in each bin of the
    statistic; empty bins are interpolated (1D) or copied from the nearest
    occupied bin (multi-D).
    """
    samples = _samples(samples)
    values = _as_rows(theta0(samples), len(samples))
    flat = grid.flat_index(stat(samples))
    means, counts = bin_means(flat, values, grid.n_bins)
    filled = _fill_empty(grid, means, counts)
    logger.debug("averaged %d samples into %d bins (%d empty)" % (
        len(samples), grid.n_bins, int((counts == 0).sum())))
    return RBEstimator(grid, stat, filled.reshape(grid.shape + (values.shape[1],)), counts)

def evaluate(rb, samples):
    """
    Bin value at the statistic of each sample. A single state (1D array)
    gives a float for a one-output estimator.
    """
    single = np.ndim(samples) == 1
    samples = _samples(samples)
    flat = rb.grid.flat_index(rb.statistic(samples))
    out = rb.bin_values.reshape(rb.grid.n_bins, rb.n_outputs)[flat]
    if rb.n_outputs == 1:
        out = out[:, 0]
    if single:
        return float(out[0]) if rb.n_outputs == 1 else out[0]
    return out

class QuadratureRule(collections.namedtuple("QuadratureRule", "nodes weights")):
    """
    Nodes (k, p) with strictly positive weights, normalized to sum to one.
    """
    __slots__ = ()

    def __new__(cls, nodes, weights):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes.reshape(-1, 1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(weights) == 0 or len(weights) != len(nodes):
            raise QuadratureError("%d nodes but %d weights" % (len(nodes), len(weights)))
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise QuadratureError("quadrature weights must be finite and positive")
        return super().__new__(cls, nodes, weights / weights.sum())

def sphere_product_rule(n_theta, n_phi):
    """
    Gauss-Legendre in cos(theta) times the trapezoid rule in phi: nodes are
    (theta, phi) pairs whose weights average over the unit sphere.

    >>> rule = sphere_product_rule(2, 4)
    >>> rule.nodes.shape, round(float(rule.weights.sum()), 12)
    ((8, 2), 1.0)
    """
    if n_theta < 1 or n_phi < 1:
        raise QuadratureError("need n_theta, n_phi >= 1, got %r, %r" % (n_theta, n_phi))
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(0.5 * w, np.full(n_phi, 1.0 / n_phi))
    return QuadratureRule(np.column_stack([T.ravel(), P.ravel()]), W.ravel())

def rao_blackwellize_quadrature(theta0, orbit, rule):
    """
    Weighted average of theta0 over the orbit states orbit(rule.nodes).
    """
    if not isinstance(rule, QuadratureRule):
        rule = QuadratureRule(*rule)
    states = _samples(orbit(rule.nodes))
    values = _as_rows(theta0(states), len(rule.weights))
    avg = rule.weights @ values
    return float(avg[0]) if len(avg) == 1 else avg

def mse_over_domain(est, truth, samples):
    """
    >>> mse_over_domain(lambda w: w[:, 0], lambda w: 0.0 * w[:, 0], [[1.0], [3.0]])
    5.0
    """
    samples = _samples(samples)
    diff = _as_rows(est(samples), len(samples)) - _as_rows(truth(samples), len(samples))
    return float(np.mean(np.sum(diff * diff, axis=1)))

class ImprovementReport(collections.namedtuple("ImprovementReport", [
        "mse_before", "mse_after", "factor", "n_bins", "n_empty_bins", "n_samples",
        "cross_term", "exact", "truth_projected", "holdout_before", "holdout_after"])):
    """
    exact tells whether truth was constant in every occupied bin, in which
    case mse_after <= mse_before has been asserted.
    """
    __slots__ = ()

    def to_json(self):
        return dict(self._asdict())

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)

def _improvement_factor(before, after):
    if after == before:
        return 1.0
    return before / max(after, 1e-300)

def verify_inequality(theta0, stat, samples, grid, truth, project_truth=False, holdout=None, tol=1e-12):
    """
    Build the averaged estimator on samples and compare both MSEs against
    truth on the same samples. With project_truth, truth is first replaced
    by its per-bin mean.

    >>> import numpy as np
    >>> w = np.array([[0.1], [0.2], [0.6], [0.9]])
    >>> stat = StatisticFn("x", 1, lambda w: w[:, 0])
    >>> truth = lambda w: (w[:, 0] >= 0.5).astype(float)
    >>> noisy = lambda w: truth(w) + np.array([0.25, -0.25, 0.25, -0.25])
    >>> r = verify_inequality(noisy, stat, w, BinGrid([Axis(0.0, 1.0, 2)]), truth)
    >>> r.exact, r.mse_after, r.mse_before > 0
    (True, 0.0, True)
    """
    samples = _samples(samples)
    rb = rao_blackwellize_empirical(theta0, stat, samples, grid)
    n = len(samples)
    t0 = _as_rows(theta0(samples), n)
    t1 = _as_rows(rb(samples), n)
    tr = _as_rows(truth(samples), n)
    flat = grid.flat_index(stat(samples))
    means, counts = bin_means(flat, tr, grid.n_bins)
    if project_truth:
        tr = means[flat]
        exact = True
    else:
        spread = float(np.max(np.abs(tr - means[flat])))
        exact = spread <= 1e-12 * max(1.0, float(np.max(np.abs(tr))))
    before = float(np.mean(np.sum((t0 - tr) ** 2, axis=1)))
    after = float(np.mean(np.sum((t1 - tr) ** 2, axis=1)))
    cross = float(np.sum((t0 - t1) * (t1 - tr)))
    if exact and after > before + tol:
        raise InequalityViolationError("averaged estimator is worse: %r > %r" % (after, before))
    if not exact:
        logger.info("truth is not constant per bin; inequality reported, not asserted")
    holdout_before = holdout_after = None
    if holdout is not None:
        holdout_before = mse_over_domain(theta0, truth, holdout)
        holdout_after = mse_over_domain(rb, truth, holdout)
    return ImprovementReport(before, after, _improvement_factor(before, after), grid.n_bins,
                             rb.n_empty_bins, n, cross, exact, bool(project_truth),
                             holdout_before, holdout_after)

def round_to_class(value, threshold=0.5):
    """
    >>> round_to_class(0.2), round_to_class(0.5), round_to_class(0.8)
    (0, 1, 1)
    """
    out = np.where(np.asarray(value) < threshold, 0, 1)
    if out.ndim == 0:
        return int(out)
    return out

def idempotency_deviation(rb, samples):
    """Max change of the bin values when rb is averaged again on samples."""
    again = rao_blackwellize_empirical(rb, rb.statistic, samples, rb.grid)
    return float(np.max(np.abs(again.bin_values - rb.bin_values)))
