"""

RbxDatagen: synthetic data sets for the examples and the three ways of
improving a data set: noise injection, augmentation (rotation,
homogenization, compression extension) and, as a cautionary counterpart,
truncation filtering of lateral strain readings.

Every generator draws from numpy's PCG64 (``np.random.default_rng(seed)``),
so a data set is reproduced bit for bit from its seed.

"""

import collections
import logging
import math

import numpy as np

from .common import RbxError
from .mechanics import PrincipalStress2, Rotation2, SymTensor2, rotate, von_mises_phi
from .nnet import Dataset
from .oracles import YIELD_STRESS, ElasticConstants, damage_targets, yield_labels

logger = logging.getLogger(__name__)

class DatagenError(RbxError):
    pass

class InconsistentGroupError(DatagenError):
    pass

class RegressionError(DatagenError):
    pass

TAGS = ("train", "validation", "test")

YIELD_COLUMNS = ("sigma1", "sigma2", "label")
DAMAGE_COLUMNS = ("eps_xx", "eps_yy", "eps_xy", "psi_D", "psi_R")
PAIR_COLUMNS = ("step", "sigma_xx", "sigma_yy", "sigma_xy", "eps_xx", "eps_yy", "eps_xy")
DIC_COLUMNS = ("step", "eps_xx", "eps_yy")

def save_csv(path, columns, table):
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != len(columns):
        raise DatagenError("table of shape %r does not match columns %r" % (table.shape, columns))
    np.savetxt(path, table, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")

def load_csv(path):
    """Returns (column names, 2D array)."""
    with open(path) as ifs:
        columns = tuple(ifs.readline().strip().split(","))
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return columns, table

class LabeledGrid(collections.namedtuple("LabeledGrid", "dataset tag seed columns")):
    __slots__ = ()

    def __new__(cls, dataset, tag, seed=None, columns=None):
        if tag not in TAGS:
            raise DatagenError("tag must be one of %r, got %r" % (TAGS, tag))
        if np.isnan(dataset.inputs).any() or np.isnan(dataset.targets).any():
            raise DatagenError("NaN in %s set" % tag)
        if columns is None:
            columns = tuple("x%d" % i for i in range(dataset.inputs.shape[1])) + \
                      tuple("y%d" % i for i in range(dataset.targets.shape[1]))
        return super().__new__(cls, dataset, tag, seed, tuple(columns))

    @property
    def inputs(self):
        return self.dataset.inputs

    @property
    def targets(self):
        return self.dataset.targets

    def __len__(self):
        return len(self.dataset)

    def to_csv(self, path):
        save_csv(path, self.columns, np.hstack([self.inputs, self.targets]))

    @classmethod
    def from_csv(cls, path, n_inputs, tag, seed=None):
        columns, table = load_csv(path)
        return cls(Dataset(table[:, :n_inputs], table[:, n_inputs:]), tag, seed, columns)

class StressStrainPair(collections.namedtuple("StressStrainPair", "sigma eps step")):
    __slots__ = ()

    def __new__(cls, sigma, eps, step=0):
        if not isinstance(sigma, SymTensor2):
            sigma = SymTensor2(*sigma)
        if not isinstance(eps, SymTensor2):
            eps = SymTensor2(*eps)
        return super().__new__(cls, sigma, eps, int(step))

    def row(self):
        return [self.step] + list(self.sigma) + list(self.eps)

def pairs_table(pairs):
    return np.array([p.row() for p in pairs], dtype=float).reshape(-1, len(PAIR_COLUMNS))

def pairs_from_table(table):
    table = np.atleast_2d(np.asarray(table, dtype=float))
    return [StressStrainPair(r[1:4], r[4:7], int(r[0])) for r in table]

def yield_training_set(half_width=1.75, n_points=1000, noise_band=0.03, seed=0, tag="train"):
    """
    Uniform stress pairs on [-half_width, half_width]^2 labeled by the von
    Mises criterion; points within noise_band of the yield surface get a
    fair-coin label instead.
    """
    if n_points < 1:
        raise DatagenError("n_points must be >= 1, got %r" % n_points)
    rng = np.random.default_rng(seed)
    points = rng.uniform(-half_width, half_width, size=(n_points, 2))
    coins = rng.integers(0, 2, size=n_points).astype(float)
    labels = yield_labels(points)
    if noise_band > 0:
        phi = von_mises_phi(PrincipalStress2(points[:, 0], points[:, 1]), YIELD_STRESS)
        band = np.abs(phi) <= noise_band
        labels[band] = coins[band]
        logger.debug("%d of %d labels drawn at random" % (int(band.sum()), n_points))
    return LabeledGrid(Dataset(points, labels), tag, seed, YIELD_COLUMNS)

def _lattice_count(width, step):
    if not step > 0:
        raise DatagenError("step must be positive, got %r" % step)
    n = int(round(width / step))
    if n < 1 or abs(n * step - width) > 1e-9 * width:
        raise DatagenError("step %r does not divide %r" % (step, width))
    return n

def yield_test_grid(half_width=1.75, step=0.01):
    """
    Full lattice of spacing step over [-half_width, half_width]^2 with exact
    labels.

    >>> len(yield_test_grid(1.75, 1.75))
    9
    """
    n = _lattice_count(2.0 * half_width, step)
    axis = (np.arange(n + 1) - 0.5 * n) * step
    s1, s2 = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([s1.ravel(), s2.ravel()])
    return LabeledGrid(Dataset(points, yield_labels(points)), "test", None, YIELD_COLUMNS)

def damage_training_set(box, n_points, k, seed=0, tag="train"):
    """
    Plane strains uniform in [-box, box]^3 with their exact (psi_D, psi_R).
    """
    if not box > 0 or n_points < 1:
        raise DatagenError("need box > 0 and n_points >= 1, got %r, %r" % (box, n_points))
    rng = np.random.default_rng(seed)
    rows = rng.uniform(-box, box, size=(n_points, 3))
    return LabeledGrid(Dataset(rows, damage_targets(rows, k)), tag, seed, DAMAGE_COLUMNS)

def damage_test_grid(box, step, k):
    """
    >>> len(damage_test_grid(0.1, 0.1, ElasticConstants()))
    27
    """
    n = _lattice_count(2.0 * box, step)
    axis = (np.arange(n + 1) - 0.5 * n) * step
    mesh = np.meshgrid(axis, axis, axis, indexing="ij")
    rows = np.column_stack([m.ravel() for m in mesh])
    return LabeledGrid(Dataset(rows, damage_targets(rows, k)), "test", None, DAMAGE_COLUMNS)

def rotate_augment(pairs, step=math.pi / 18):
    """
    2 pi / step rotated copies of every pair, the identity included.
    """
    n = _lattice_count(2.0 * math.pi, step)
    out = []
    for p in pairs:
        for k in range(n):
            q = Rotation2(k * step)
            out.append(StressStrainPair(rotate(p.sigma, q), rotate(p.eps, q), p.step))
    return out

def homogenize(groups):
    """
    One pair per group: the group's common stress with the mean strain.
    """
    out = []
    for group in groups:
        group = list(group)
        if not group:
            raise DatagenError("empty load-step group")
        sigmas = np.array([list(p.sigma) for p in group])
        scale = max(1.0, float(np.max(np.abs(sigmas))))
        if not np.allclose(sigmas, sigmas[0], rtol=1e-12, atol=1e-12 * scale):
            raise InconsistentGroupError("stresses differ within load step %d" % group[0].step)
        eps = np.mean(np.array([list(p.eps) for p in group]), axis=0)
        out.append(StressStrainPair(group[0].sigma, eps, group[0].step))
    return out

def group_by_step(pairs):
    groups = collections.OrderedDict()
    for p in pairs:
        groups.setdefault(p.step, []).append(p)
    return list(groups.values())

def _through_origin(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise RegressionError("need at least 2 points, got %d" % len(x))
    sxx = float(np.dot(x, x))
    if sxx == 0.0:
        raise RegressionError("all abscissae are zero")
    return float(np.dot(x, y)) / sxx

def compression_extend(pairs, max_compression=0.01016, cutoff=0.02, n_points=8):
    """
    Mirror uniaxial tension pairs into compression: slope and lateral ratio
    are fitted through the origin on the pairs with 0 < eps_xx <= cutoff and
    n_points compression states down to -max_compression are put on them.
    """
    linear = [p for p in pairs if 0.0 < p.eps.xx <= cutoff * (1.0 + 1e-9)]
    x = np.array([p.eps.xx for p in linear])
    if len(x) >= 2 and np.ptp(x) == 0.0:
        raise RegressionError("degenerate regression: all %d strains equal" % len(x))
    slope = _through_origin(x, [p.sigma.xx for p in linear])
    nu = -_through_origin(x, [p.eps.yy for p in linear])
    logger.debug("compression extension: E=%g nu=%g from %d pairs" % (slope, nu, len(linear)))
    out = []
    for k in range(1, n_points + 1):
        c = -max_compression * k / n_points
        out.append(StressStrainPair((slope * c, 0.0, 0.0), (c, -nu * c, 0.0), -k))
    return out

class DicCloud(collections.namedtuple("DicCloud", "points step levels")):
    """
    Lateral strain readings: points (n, 2) of (eps_xx, eps_yy), the load step
    of every point, and the nominal eps_xx of every load step.
    """
    __slots__ = ()

    def __new__(cls, points, step, levels):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        step = np.asarray(step, dtype=np.int64).reshape(-1)
        if len(step) != len(points):
            raise DatagenError("%d points but %d step ids" % (len(points), len(step)))
        return super().__new__(cls, points, step, np.asarray(levels, dtype=float))

    def __len__(self):
        return len(self.points)

    def subset(self, mask):
        return DicCloud(self.points[mask], self.step[mask], self.levels)

    def to_csv(self, path):
        save_csv(path, DIC_COLUMNS, np.column_stack([self.step, self.points]))

def dic_cloud(nu_true=0.45, n_steps=20, n_regions=275, noise_sd=0.03, seed=0, max_strain=0.2):
    """
    eps_yy = -nu_true eps_xx + N(0, noise_sd) for n_regions readings at each
    of n_steps equally spaced levels up to max_strain.
    """
    if not 0.0 < nu_true < 0.5:
        raise DatagenError("nu_true must lie in (0, 0.5), got %r" % nu_true)
    if noise_sd < 0:
        raise DatagenError("noise_sd must be >= 0, got %r" % noise_sd)
    if n_steps < 1 or n_regions < 1:
        raise DatagenError("need n_steps, n_regions >= 1")
    rng = np.random.default_rng(seed)
    levels = np.linspace(max_strain / n_steps, max_strain, n_steps)
    xx = np.repeat(levels, n_regions)
    yy = -nu_true * xx + rng.normal(0.0, noise_sd, size=xx.size) if noise_sd > 0 else -nu_true * xx
    step = np.repeat(np.arange(n_steps), n_regions)
    return DicCloud(np.column_stack([xx, yy]), step, levels)

def _cloud_xy(cloud):
    if isinstance(cloud, DicCloud):
        return cloud.points[:, 0], cloud.points[:, 1]
    pts = np.asarray(cloud, dtype=float).reshape(-1, 2)
    return pts[:, 0], pts[:, 1]

def truncation_filter(cloud):
    """
    Keep readings with -0.5 eps_xx <= eps_yy <= 0.

    >>> truncation_filter([[0.1, -0.03], [0.1, 0.01], [0.1, -0.06]]).tolist()
    [[0.1, -0.03]]
    """
    x, y = _cloud_xy(cloud)
    keep = (y <= 0.0) & (y >= -0.5 * x)
    if isinstance(cloud, DicCloud):
        return cloud.subset(keep)
    return np.column_stack([x, y])[keep]

def fit_poisson(cloud):
    """
    Negated through-origin least-squares slope of eps_yy on eps_xx.
    """
    x, y = _cloud_xy(cloud)
    return -_through_origin(x, y)

def rubber_pairs(cloud, E):
    """
    Uniaxial stress-strain pairs from a cloud: the stress of a load step is
    E times its nominal strain.
    """
    out = []
    for (xx, yy), step in zip(cloud.points, cloud.step):
        out.append(StressStrainPair((E * cloud.levels[step], 0.0, 0.0), (xx, yy, 0.0), int(step)))
    return out
