"""Minimal cones over products of round spheres: link spectra, stability,
indicial exponents, and Jacobi fields in the radial class.

The link of the cone over S^p(a) x S^q(b) has squared second fundamental form
p + q when a, b are the minimality radii sqrt(p/(p+q)), sqrt(q/(p+q)).  The
link operator is the Laplacian plus that constant, so its spectrum separates
into sphere harmonics; everything here rests on that closed form.  Eigenvalue
coincidences are decided exactly over the rationals, never by float equality.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import UsageError


@dataclass(frozen=True)
class CliffordCone:
    """Cone over S^p(a) x S^q(b) inside the unit sphere of R^(p+q+2)."""

    p: int
    q: int
    n: int
    a: float
    b: float
    A2: float


def make_cone(p, q):
    """The minimal product-sphere cone for sphere dimensions p, q >= 1."""
    if int(p) != p or int(q) != q or p < 1 or q < 1:
        raise UsageError(f"sphere dimensions must be integers >= 1, got {p}, {q}")
    p, q = int(p), int(q)
    a2 = Fraction(p, p + q)
    b2 = Fraction(q, p + q)
    curv2 = p * b2 / a2 + q * a2 / b2
    if not (a2 + b2 == 1 and curv2 == p + q):
        raise UsageError("link radii lost minimality, this is a bug")
    return CliffordCone(p, q, p + q + 1, math.sqrt(p / (p + q)),
                        math.sqrt(q / (p + q)), float(p + q))


def _sphere_mult(p, i):
    """Dimension of the degree-i harmonics on S^p."""
    if i == 0:
        return 1
    return math.comb(i + p, p) - math.comb(i + p - 2, p)


@dataclass(frozen=True)
class SpectralData:
    """Leading spectrum of minus the link operator, smallest first.

    eigenvalues repeats each value according to multiplicity, so entry k is
    the k-th eigenvalue of the spectral sequence; multiplicities[k] is the
    total multiplicity of that entry's value.  gamma_minus/gamma_plus are the
    indicial exponents, present only when the cone is stable.
    """

    eigenvalues: tuple
    multiplicities: tuple
    gamma_minus: float
    gamma_plus: float
    stable: bool


def link_spectrum(cone, K):
    """First K eigenvalues (with multiplicity) of minus the link operator.

    Separated form: a harmonic of degree i on the first factor and j on the
    second contributes i(i+p-1)/a^2 + j(j+q-1)/b^2 - (p+q), with multiplicity
    the product of the harmonic space dimensions.
    """
    if int(K) != K or K < 1:
        raise UsageError(f"need K >= 1 eigenvalues, got {K}")
    K = int(K)
    p, q = cone.p, cone.q
    inv_a2 = Fraction(p + q, p)
    inv_b2 = Fraction(p + q, q)

    def mu(i, j):
        return (i * (i + p - 1) * inv_a2 + j * (j + q - 1) * inv_b2
                - (p + q))

    M = 8
    while True:
        groups = {}
        for i in range(M + 1):
            for j in range(M + 1):
                groups.setdefault(mu(i, j), 0)
                groups[mu(i, j)] += _sphere_mult(p, i) * _sphere_mult(q, j)
        distinct = sorted(groups)
        total = 0
        cutoff = None
        for v in distinct:
            total += groups[v]
            if total >= K:
                cutoff = v
                break
        # Everything at indices > M is larger than mu(M+1, 0) and mu(0, M+1);
        # below that bound the enumeration is complete.
        safe = min(mu(M + 1, 0), mu(0, M + 1))
        if cutoff is not None and cutoff < safe:
            break
        M *= 2

    evs, mults = [], []
    for v in distinct:
        m = groups[v]
        for _ in range(m):
            evs.append(float(v))
            mults.append(m)
            if len(evs) == K:
                break
        if len(evs) == K:
            break

    stable = stability(cone)
    gm = gp = None
    if stable:
        gm, gp = gamma_pm(cone)
    return SpectralData(tuple(evs), tuple(mults), gm, gp, stable)


def stability(cone):
    """Whether the first-eigenvalue defect fits under the Hardy threshold:
    max(-lambda_1, 0) <= (n-2)^2 / 4, decided in integers."""
    s = cone.p + cone.q
    return 4 * s <= (s - 1) ** 2


def indicial_exponents(n, lambda1):
    """Roots gamma of gamma^2 - (n-2) gamma - lambda1 = 0, smaller first.

    These are the decay rates r^(-gamma) of radial Jacobi fields; lambda1 = 0
    is the hyperplane case with exponents (0, n-2).
    """
    half = (n - 2) / 2.0
    disc = half * half + lambda1
    if disc < 0:
        raise UsageError(
            "indicial roots are complex: stability inequality "
            f"max(-lambda_1, 0) <= (n-2)^2/4 fails ({-lambda1} > {half * half})")
    s = math.sqrt(disc)
    return (half - s, half + s)


def gamma_pm(cone):
    """Indicial exponent pair (gamma_minus, gamma_plus) of a stable cone."""
    if not stability(cone):
        raise UsageError(
            f"cone ({cone.p},{cone.q}) is unstable: max(-lambda_1, 0) = "
            f"{cone.A2} exceeds (n-2)^2/4 = {(cone.n - 2) ** 2 / 4}")
    return indicial_exponents(cone.n, -cone.A2)


def jacobi_eval(cone, c1, c2, r):
    """Positive radial Jacobi field c1 r^(-gamma_plus) + c2 r^(-gamma_minus),
    with the constant link eigenfunction normalized to 1."""
    if c1 < 0 or c2 < 0:
        raise UsageError("mode coefficients must be nonnegative")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise UsageError("radius must be positive and finite")
    gm, gp = gamma_pm(cone)
    out = c1 * r ** -gp + c2 * r ** -gm
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Samples on a log-uniform radial grid, angular part fixed to the
    constant link eigenfunction."""

    r_min: float
    r_max: float
    values: np.ndarray

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise UsageError(
                f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) < 2:
            raise UsageError("need a 1-D array of at least 2 samples")
        if not np.all(np.isfinite(vals)):
            raise UsageError("samples must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "r_min", float(self.r_min))
        object.__setattr__(self, "r_max", float(self.r_max))

    @classmethod
    def from_callable(cls, fn, r_min, r_max, n):
        r = np.geomspace(r_min, r_max, n)
        return cls(r_min, r_max, np.asarray(fn(r), dtype=float))

    @property
    def n_nodes(self):
        return len(self.values)

    @property
    def r(self):
        return np.geomspace(self.r_min, self.r_max, self.n_nodes)

    @property
    def dt(self):
        """Log-grid spacing."""
        return (math.log(self.r_max) - math.log(self.r_min)) / (self.n_nodes - 1)


def lc_residual(cone, f):
    """Max interior node value of the cone-linearized operator applied to f.

    On the log grid t = log r the operator acts as
    (g'' + (n-2) g' + A2 g) / r^2; second-order central differences.
    """
    if f.n_nodes < 16:
        raise UsageError(f"need at least 16 radial nodes, got {f.n_nodes}")
    g = f.values
    dt = f.dt
    gdd = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / dt**2
    gd = (g[2:] - g[:-2]) / (2.0 * dt)
    rin = f.r[1:-1]
    val = (gdd + (cone.n - 2) * gd + cone.A2 * g[1:-1]) / rin**2
    return float(np.max(np.abs(val)))


def classify_positive_jacobi(cone, f):
    """Two-mode representation of a positive radial Jacobi field.

    Fits f against r^(-gamma_plus), r^(-gamma_minus) by least squares in
    relative terms; fit_error is the max relative deviation.  A field is a
    genuine positive Jacobi field exactly when both coefficients come out
    nonnegative and the error is at stencil level.
    """
    if np.any(f.values <= 0):
        raise UsageError("classification needs strictly positive samples")
    gm, gp = gamma_pm(cone)
    r = f.r
    A = np.stack([r ** -gp / f.values, r ** -gm / f.values], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.ones(f.n_nodes), rcond=None)
    fit_error = float(np.max(np.abs(A @ coef - 1.0)))
    return float(coef[0]), float(coef[1]), fit_error
