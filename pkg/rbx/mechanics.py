"""

RbxMechanics: symmetric tensors, their invariants, rotations and the von Mises
yield function shared by every example.

Tensor fields may be scalars or numpy arrays of a common shape; every function
here then works element-wise, so a whole data set can be processed at once.

>>> t = SymTensor3(4.0, 1.0, 1.0, 0.0, 0.0, 0.0)
>>> trace(t)
6.0
>>> I1, I2, I3 = invariants3(t)
>>> (I1, I2, I3)
(6.0, 9.0, 4.0)

"""

import collections
import enum
import logging
import math

import numpy as np

from .common import RbxError

logger = logging.getLogger(__name__)

class MechanicsError(RbxError):
    pass

def _field(name, value):
    a = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(a)):
        raise MechanicsError("non-finite component %s=%r" % (name, value))
    if a.ndim == 0:
        return float(a)
    return a

def _out(a):
    a = np.asarray(a)
    if a.ndim == 0:
        return float(a)
    return a

class Embedding(enum.Enum):
    """How a 2D tensor is completed to 3D. Both complete with zz = 0; the
    names record whether the 2D state is a plane strain or the in-plane part
    of a plane stress."""
    PLANE_STRAIN = "plane_strain"
    PLANE_STRESS = "plane_stress"

class SymTensor2(collections.namedtuple("SymTensor2", "xx yy xy")):
    """
    >>> SymTensor2(1.0, 2.0, float("nan"))
    Traceback (most recent call last):
    ...
    rbx.mechanics.MechanicsError: non-finite component xy=nan
    """
    __slots__ = ()

    def __new__(cls, xx, yy, xy):
        return super().__new__(cls, _field("xx", xx), _field("yy", yy), _field("xy", xy))

    @property
    def matrix(self):
        xx, yy, xy = np.broadcast_arrays(self.xx, self.yy, self.xy)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[..., 0, 0], m[..., 1, 1], 0.5 * (m[..., 0, 1] + m[..., 1, 0]))

    def embed(self, embedding=Embedding.PLANE_STRAIN):
        Embedding(embedding)
        zero = 0.0 * np.asarray(self.xx)
        return SymTensor3(self.xx, self.yy, zero, self.xy, zero, zero)

class SymTensor3(collections.namedtuple("SymTensor3", "xx yy zz xy yz xz")):
    __slots__ = ()

    def __new__(cls, xx, yy, zz, xy, yz, xz):
        return super().__new__(cls, _field("xx", xx), _field("yy", yy), _field("zz", zz),
                               _field("xy", xy), _field("yz", yz), _field("xz", xz))

    @classmethod
    def identity(cls):
        return cls(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)

    @property
    def matrix(self):
        xx, yy, zz, xy, yz, xz = np.broadcast_arrays(*self)
        return np.stack([np.stack([xx, xy, xz], -1),
                         np.stack([xy, yy, yz], -1),
                         np.stack([xz, yz, zz], -1)], -2)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[..., 0, 0], m[..., 1, 1], m[..., 2, 2],
                   0.5 * (m[..., 0, 1] + m[..., 1, 0]),
                   0.5 * (m[..., 1, 2] + m[..., 2, 1]),
                   0.5 * (m[..., 0, 2] + m[..., 2, 0]))

class PrincipalStress2(collections.namedtuple("PrincipalStress2", "s1 s2")):
    __slots__ = ()

    def __new__(cls, s1, s2):
        return super().__new__(cls, _field("s1", s1), _field("s2", s2))

class Rotation2(collections.namedtuple("Rotation2", "theta")):
    """In-plane rotation by theta (radians)."""
    __slots__ = ()

    def __new__(cls, theta):
        theta = float(theta)
        if not math.isfinite(theta):
            raise MechanicsError("non-finite rotation angle %r" % theta)
        return super().__new__(cls, theta)

    @property
    def matrix(self):
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

class Rotation3(collections.namedtuple("Rotation3", "theta phi psi")):
    """
    Rotation taking e1 to the direction with polar angle theta and azimuth
    phi, followed by a spin psi about that direction.

    >>> q = Rotation3(math.pi / 2, 0.0)
    >>> np.allclose(q.matrix @ [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    True
    """
    __slots__ = ()

    def __new__(cls, theta, phi, psi=0.0):
        angles = (float(theta), float(phi), float(psi))
        if not all(math.isfinite(a) for a in angles):
            raise MechanicsError("non-finite rotation angles %r" % (angles,))
        return super().__new__(cls, *angles)

    @property
    def matrix(self):
        a = self.theta - 0.5 * math.pi
        ca, sa = math.cos(a), math.sin(a)
        cp, sp = math.cos(self.phi), math.sin(self.phi)
        cs, ss = math.cos(self.psi), math.sin(self.psi)
        rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
        ry = np.array([[ca, 0.0, sa], [0.0, 1.0, 0.0], [-sa, 0.0, ca]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cs, -ss], [0.0, ss, cs]])
        return rz @ ry @ rx

def trace(t):
    """
    >>> trace(SymTensor2(1.0, 2.0, 5.0))
    3.0
    """
    if isinstance(t, SymTensor3):
        return _out(t.xx + t.yy + t.zz)
    return _out(t.xx + t.yy)

def deviator(t, embedding=Embedding.PLANE_STRAIN):
    """
    3D deviator dev(T) = T - tr(T)/3 I; a SymTensor2 is first embedded.

    >>> d = deviator(SymTensor2(1.0, 1.0, 0.0))
    >>> print(round(d.xx, 12), round(d.yy, 12), round(d.zz, 12))
    0.333333333333 0.333333333333 -0.666666666667
    """
    if isinstance(t, SymTensor2):
        t = t.embed(embedding)
    mean = (t.xx + t.yy + t.zz) / 3.0
    return SymTensor3(t.xx - mean, t.yy - mean, t.zz - mean, t.xy, t.yz, t.xz)

def _frobenius(t):
    return np.sqrt(t.xx ** 2 + t.yy ** 2 + t.zz ** 2 + 2.0 * (t.xy ** 2 + t.yz ** 2 + t.xz ** 2))

def dev_norm(t, embedding=Embedding.PLANE_STRAIN):
    """
    Frobenius norm of the deviator.

    >>> print(round(dev_norm(SymTensor3(2.0, -1.0, -1.0, 0.0, 0.0, 0.0)) ** 2, 12))
    6.0
    """
    return _out(_frobenius(deviator(t, embedding)))

def invariants3(t):
    if not isinstance(t, SymTensor3):
        raise MechanicsError("invariants3 needs a SymTensor3, got %s" % type(t).__name__)
    I1 = t.xx + t.yy + t.zz
    trT2 = t.xx ** 2 + t.yy ** 2 + t.zz ** 2 + 2.0 * (t.xy ** 2 + t.yz ** 2 + t.xz ** 2)
    I2 = 0.5 * (I1 ** 2 - trT2)
    I3 = (t.xx * (t.yy * t.zz - t.yz ** 2)
          - t.xy * (t.xy * t.zz - t.yz * t.xz)
          + t.xz * (t.xy * t.yz - t.yy * t.xz))
    return _out(I1), _out(I2), _out(I3)

def rotate(t, q):
    """
    Similarity transform Q^T T Q.

    >>> r = rotate(SymTensor2(1.0, 0.0, 0.0), Rotation2(math.pi / 2))
    >>> print(round(r.xx, 12) + 0.0, round(r.yy, 12), round(r.xy, 12) + 0.0)
    0.0 1.0 0.0
    """
    if isinstance(t, SymTensor2):
        if not isinstance(q, Rotation2):
            raise MechanicsError("a SymTensor2 needs a Rotation2, got %s" % type(q).__name__)
    elif isinstance(t, SymTensor3):
        if not isinstance(q, Rotation3):
            raise MechanicsError("a SymTensor3 needs a Rotation3, got %s" % type(q).__name__)
    else:
        raise MechanicsError("cannot rotate %s" % type(t).__name__)
    Q = q.matrix
    m = np.einsum("ji,...jk,kl->...il", Q, t.matrix, Q)
    return type(t).from_matrix(m)

def von_mises_phi(s, sigma_y):
    """
    >>> von_mises_phi(PrincipalStress2(1.0, 0.0), 1.0)
    0.0
    """
    if not sigma_y > 0:
        raise MechanicsError("yield stress must be positive, got %r" % sigma_y)
    return _out(dev_stress_norm(s) - sigma_y)

def dev_stress_norm(s):
    """
    sqrt(s1^2 + s2^2 - s1 s2); the radicand is never negative.

    This is the von Mises equivalent stress, sqrt(3/2) times the
    Frobenius norm of the plane-stress deviator.

    >>> dev_stress_norm(PrincipalStress2(1.0, 1.0))
    1.0
    """
    return _out(np.sqrt(np.maximum(s.s1 * s.s1 + s.s2 * s.s2 - s.s1 * s.s2, 0.0)))
