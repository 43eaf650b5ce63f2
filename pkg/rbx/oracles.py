"""

RbxOracles: analytic ground truths for the examples (yield labels, the
micro-sphere closed form, the damage energy split and the steel bar master
curve), a brute-force reference for the energy split, and the named
statistics the examples average over.

Strain states of the damage example are rows (eps_xx, eps_yy, eps_xy) of a
plane strain.

"""

import collections
import logging
import math

import numpy as np

from .common import RbxError
from .engine import StatisticFn
from .mechanics import (PrincipalStress2, Rotation3, SymTensor2, SymTensor3, Embedding,
                        deviator, dev_norm, dev_stress_norm, rotate, trace, von_mises_phi)

logger = logging.getLogger(__name__)

class OracleError(RbxError):
    pass

YIELD_STRESS = 1.0

# synthetic master curve of the steel bar, F* = C0 (1 - x)(1 + C1 x)
STEELBAR_C0 = 4.0e-3
STEELBAR_C1 = 0.15

class ElasticConstants(collections.namedtuple("ElasticConstants", "kappa mu gamma")):
    __slots__ = ()

    def __new__(cls, kappa=3.0, mu=2.0, gamma=1.0):
        kappa, mu, gamma = float(kappa), float(mu), float(gamma)
        if not (kappa > 0 and mu > 0 and gamma >= 0) or not all(map(math.isfinite, (kappa, mu, gamma))):
            raise OracleError("need kappa > 0, mu > 0, gamma >= 0; got %r, %r, %r" % (kappa, mu, gamma))
        return super().__new__(cls, kappa, mu, gamma)

EnergySplit = collections.namedtuple("EnergySplit", "psi_R psi_D psi_0 eta_bar")

class BarGeometry(collections.namedtuple("BarGeometry", "w d")):
    """
    >>> BarGeometry(4.0, 5.0)
    Traceback (most recent call last):
    ...
    rbx.oracles.OracleError: need 0 < w <= 8 and 0 < d < w, got w=4.0, d=5.0
    """
    __slots__ = ()

    def __new__(cls, w, d):
        w = np.asarray(w, dtype=float)
        d = np.asarray(d, dtype=float)
        if not np.all((w > 0) & (w <= 8.0) & (d > 0) & (d < w)):
            raise OracleError("need 0 < w <= 8 and 0 < d < w, got w=%s, d=%s" % (w, d))
        if w.ndim == 0 and d.ndim == 0:
            return super().__new__(cls, float(w), float(d))
        return super().__new__(cls, w, d)

    @property
    def ratio(self):
        return np.asarray(self.d) / np.asarray(self.w)

def _out(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a

def _strain_rows(eps):
    if isinstance(eps, SymTensor2):
        return eps
    rows = np.asarray(eps, dtype=float)
    return SymTensor2(rows[..., 0], rows[..., 1], rows[..., 2])

def yield_truth(s):
    """
    0 (elastic) where the von Mises function is <= 0, else 1.

    >>> yield_truth(PrincipalStress2(0.5, 0.5)), yield_truth(PrincipalStress2(1.5, 0.0)), yield_truth(PrincipalStress2(1.0, 0.0))
    (0, 1, 0)
    """
    label = np.where(np.asarray(von_mises_phi(s, YIELD_STRESS)) > 0.0, 1, 0)
    return int(label) if label.ndim == 0 else label

def yield_labels(rows):
    """yield_truth for stress rows (sigma1, sigma2)."""
    rows = np.asarray(rows, dtype=float)
    return yield_truth(PrincipalStress2(rows[:, 0], rows[:, 1])).astype(float)

yield_statistic = StatisticFn("dev_stress_norm", 1,
                              lambda rows: dev_stress_norm(PrincipalStress2(rows[:, 0], rows[:, 1])))

def microsphere_truth(c):
    """
    >>> microsphere_truth(SymTensor3(4.0, 1.0, 1.0, 0.0, 0.0, 0.0))
    2.0
    """
    return _out(trace(c) / 3.0)

def microsphere_orbit(c):
    """
    The orbit of c under the rotations taking e1 to each (theta, phi) node;
    states are rows (xx, yy, zz, xy, yz, xz) of Q^T c Q.
    """
    def orbit(nodes):
        nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
        return np.array([list(rotate(c, Rotation3(theta, phi))) for theta, phi in nodes])
    return orbit

def fiber_stretch(states):
    """e1 . C . e1 of each state row."""
    return np.asarray(states)[:, 0]

def damage_split_closed(eps, k):
    """
    Minimize kappa/2 tr(eps - eta)^2 + mu |eps_dev - eta_dev|^2 over the cone
    tr(eta) >= gamma |eta_dev|. psi_R is the minimum, psi_D = psi_0 - psi_R.

    >>> s = damage_split_closed(SymTensor2(0.01, 0.01, 0.0), ElasticConstants(3.0, 2.0, 1.0))
    >>> s.psi_R
    0.0
    """
    eps = _strain_rows(eps)
    T = np.asarray(trace(eps))
    edev = deviator(eps, Embedding.PLANE_STRAIN)
    D = np.asarray(dev_norm(eps, Embedding.PLANE_STRAIN))
    kappa, mu, gamma = k
    psi_0 = 0.5 * kappa * T ** 2 + mu * D ** 2

    r_star = (gamma * kappa * T + 2.0 * mu * D) / (gamma ** 2 * kappa + 2.0 * mu)
    interior = T >= gamma * D
    on_apex = ~interior & (r_star <= 0.0)
    r = np.where(interior, D, np.where(on_apex, 0.0, r_star))
    t = np.where(interior, T, np.where(on_apex, np.maximum(T, 0.0), gamma * r_star))

    psi_R = np.where(interior, 0.0, 0.5 * kappa * (T - t) ** 2 + mu * (D - r) ** 2)
    psi_R = np.clip(psi_R, 0.0, psi_0)
    psi_D = psi_0 - psi_R

    scale = np.divide(r, D, out=np.zeros_like(D, dtype=float), where=D > 0)
    third = t / 3.0
    eta = SymTensor3(scale * edev.xx + third, scale * edev.yy + third, scale * edev.zz + third,
                     scale * edev.xy, scale * edev.yz, scale * edev.xz)
    return EnergySplit(_out(psi_R), _out(psi_D), _out(psi_0), eta)

def _bruteforce_axes(eps, k, resolution):
    if int(resolution) < 2:
        raise OracleError("resolution must be >= 2, got %r" % resolution)
    T = float(trace(eps))
    D = float(dev_norm(eps, Embedding.PLANE_STRAIN))
    t_max = abs(T) + k.gamma * D
    t = np.linspace(0.0, t_max, resolution)
    u = np.linspace(0.0, 1.0, resolution)
    alpha = np.linspace(0.0, math.pi, resolution)
    return T, D, t_max, t, u, alpha

def _deviatoric_frame(eps):
    edev = deviator(eps, Embedding.PLANE_STRAIN).matrix
    D = np.linalg.norm(edev)
    if D > 0:
        e = edev / D
    else:
        e = np.diag([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    # a unit deviatoric direction orthogonal to e
    f = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) / math.sqrt(2.0)
    f = f - np.sum(f * e) * e
    if np.linalg.norm(f) < 1e-8:
        f = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]) / math.sqrt(2.0)
        f = f - np.sum(f * e) * e
    return edev, e, f / np.linalg.norm(f)

def bruteforce_candidates(eps, k, resolution):
    """
    The admissible eta tensors searched by damage_split_bruteforce, as an
    array of 3x3 matrices: tr(eta) = t on [0, |T| + gamma D], |eta_dev| = r
    with r = u t / gamma (u on [0, 1]; r = u D when gamma = 0), and eta_dev
    turned by alpha on [0, pi] away from eps_dev.
    """
    eps = _strain_rows(eps)
    T, D, t_max, t, u, alpha = _bruteforce_axes(eps, k, resolution)
    edev, e, f = _deviatoric_frame(eps)
    tt, uu, aa = np.meshgrid(t, u, alpha, indexing="ij")
    if k.gamma > 0:
        rr = uu * tt / k.gamma
    else:
        rr = uu * D
    eta = (rr[..., None, None] * (np.cos(aa)[..., None, None] * e + np.sin(aa)[..., None, None] * f)
           + (tt / 3.0)[..., None, None] * np.eye(3))
    return eta.reshape(-1, 3, 3)

def damage_split_bruteforce(eps, k, resolution=21):
    """
    Exhaustive minimum of the damage objective over bruteforce_candidates.
    Grids at resolution n are contained in those at 2n - 1.
    """
    eps = _strain_rows(eps)
    T = float(trace(eps))
    edev, e, f = _deviatoric_frame(eps)
    eta = bruteforce_candidates(eps, k, resolution)
    tr_eta = np.trace(eta, axis1=1, axis2=2)
    eta_dev = eta - (tr_eta / 3.0)[:, None, None] * np.eye(3)
    r = np.sqrt(np.sum(eta_dev * eta_dev, axis=(1, 2)))
    violation = k.gamma * r - tr_eta
    if np.max(violation) > 1e-10 * max(1.0, abs(T)):
        raise OracleError("brute-force candidate outside the cone by %g" % np.max(violation))
    diff = edev[None] - eta_dev
    objective = 0.5 * k.kappa * (T - tr_eta) ** 2 + k.mu * np.sum(diff * diff, axis=(1, 2))
    best = int(np.argmin(objective))
    D = float(np.linalg.norm(edev))
    psi_0 = 0.5 * k.kappa * T ** 2 + k.mu * D ** 2
    psi_R = min(float(objective[best]), psi_0)
    return EnergySplit(psi_R, psi_0 - psi_R, psi_0, SymTensor3.from_matrix(eta[best]))

def bruteforce_bound(eps, k, resolution):
    """
    Upper bound on damage_split_bruteforce(...).psi_R - damage_split_closed(...).psi_R;
    it shrinks with the square of the grid steps.
    """
    eps = _strain_rows(eps)
    T, D, t_max, t, u, alpha = _bruteforce_axes(eps, k, resolution)
    h_t = t_max / (resolution - 1)
    h_u = 1.0 / (resolution - 1)
    if k.gamma > 0:
        return (0.5 * k.kappa * h_t ** 2 + k.mu * (t_max * h_u / k.gamma) ** 2
                + 0.5 * (k.gamma ** 2 * k.kappa + 2.0 * k.mu) * (h_t / k.gamma) ** 2)
    return 0.5 * k.kappa * h_t ** 2 + k.mu * (D * h_u) ** 2

def _strain_rows_array(rows):
    rows = np.asarray(rows, dtype=float)
    return SymTensor2(rows[:, 0], rows[:, 1], rows[:, 2])

def damage_D(rows):
    return dev_norm(_strain_rows_array(rows), Embedding.PLANE_STRAIN)

def damage_T(rows):
    return trace(_strain_rows_array(rows))

S1 = StatisticFn("S1", 1, lambda rows: damage_D(rows))
S2 = StatisticFn("S2", 2, lambda rows: np.column_stack([damage_D(rows), damage_T(rows)]))
S3 = StatisticFn("S3", 3, lambda rows: np.column_stack([damage_D(rows), damage_T(rows), np.asarray(rows)[:, 0]]))
S4 = StatisticFn("S4", 3, lambda rows: np.asarray(rows, dtype=float)[:, :3])

DAMAGE_STATISTICS = {"S1": S1, "S2": S2, "S3": S3, "S4": S4}

def damage_targets(rows, k):
    """(psi_D, psi_R) per strain row."""
    split = damage_split_closed(_strain_rows_array(rows), k)
    return np.column_stack([split.psi_D, split.psi_R])

def damage_sufficiency_witness(eps_a, eps_b, k, statistic=S2):
    """
    False iff the two strains share the statistic but not the energy split,
    i.e. the pair witnesses that statistic is not sufficient.
    """
    rows = np.array([list(_strain_rows(eps_a)), list(_strain_rows(eps_b))], dtype=float)
    s = statistic(rows)
    same_stat = np.allclose(s[0], s[1], rtol=1e-12, atol=1e-12)
    split = damage_targets(rows, k)
    same_split = np.allclose(split[0], split[1], rtol=0.0, atol=1e-10)
    return bool(not (same_stat and not same_split))

def resample_level_set(eps, angles):
    """
    Plane strains with the same trace and deviatoric norm as each row of eps,
    obtained by turning the in-plane deviatoric part by each angle. The
    output holds len(angles) rows per input row, input-major.
    """
    rows = np.atleast_2d(np.asarray(eps, dtype=float))[:, :3]
    angles = np.asarray(angles, dtype=float).reshape(-1)
    half_trace = 0.5 * (rows[:, 0] + rows[:, 1])
    a = 0.5 * (rows[:, 0] - rows[:, 1])
    rho = np.hypot(a, rows[:, 2])
    base = np.arctan2(rows[:, 2], a)
    turned = base[:, None] + angles[None, :]
    xx = half_trace[:, None] + rho[:, None] * np.cos(turned)
    yy = half_trace[:, None] - rho[:, None] * np.cos(turned)
    xy = rho[:, None] * np.sin(turned)
    return np.column_stack([xx.ravel(), yy.ravel(), xy.ravel()])

def steelbar_master_curve(x, c0=STEELBAR_C0, c1=STEELBAR_C1):
    """
    >>> steelbar_master_curve(0.0)
    0.004
    """
    x = np.asarray(x, dtype=float)
    return _out(c0 * (1.0 - x) * (1.0 + c1 * x))

def steelbar_surrogate(g, E, c0=STEELBAR_C0, c1=STEELBAR_C1):
    """
    Ultimate force E w^2 F*(d/w) of a drilled bar.
    """
    if not E > 0:
        raise OracleError("E must be positive, got %r" % E)
    w = np.asarray(g.w, dtype=float)
    return _out(E * w ** 2 * np.asarray(steelbar_master_curve(g.ratio, c0, c1)))
