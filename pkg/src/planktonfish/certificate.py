"""Construction of the Lyapunov-Krasovskii stability certificate.

Builds, for a parameter set with the plankton-only point asymptotically
stable independent of the delays, the weight matrix H, the exponential
delay kernels K1(s), K2(s), the matrix L, and the scalar constants
(sigma, mu1, mu2, epsilon, q) that drive the decay estimates.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificateError, DomainError
from .model import LinearizedSystem, ModelParams, linearize
from .symmat import SymMatrix, is_positive_definite, inv_sqrt, sym_eigen


@dataclass(frozen=True)
class CertificateOptions:
    """Tunable choices within the admissible family (defaults are one point).

    ``m_fraction`` scales m1, m2 relative to the supremum allowed by their
    defining inequalities; ``mu_fraction`` sets mu1 = mu2 = mu_fraction * sigma
    (must stay below 1/2); ``h33_factor`` multiplies the lower bound forced
    by det L > 0.
    """

    alpha: float = 1.0
    m_fraction: float = 0.5
    mu_fraction: float = 0.25
    h33_factor: float = 2.0


@dataclass(frozen=True)
class LKCertificate:
    """All constructed certificate data; immutable after construction."""

    params: ModelParams
    lin: LinearizedSystem
    x0: float
    y0: float
    alpha: float
    beta: float
    m1: float
    m2: float
    mu1: float
    mu2: float
    h11: float
    h12: float
    h22: float
    h33: float
    H: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    Htilde1: np.ndarray
    Htilde2: np.ndarray
    L: np.ndarray
    sigma: float
    epsilon: float
    q: float

    @property
    def minor(self) -> float:
        """h11*h22 - h12^2 (positive for a valid certificate)."""
        return self.h11 * self.h22 - self.h12 * self.h12

    def report(self) -> str:
        """Full-precision structured text dump for audit."""
        out = io.StringIO()
        out.write("LK certificate (defaults are one admissible choice,\n"
                  "not optimized over m1, m2, mu, h33, alpha)\n")
        for name in ("x0", "y0", "alpha", "beta", "m1", "m2", "mu1", "mu2",
                     "h11", "h12", "h22", "h33", "sigma", "epsilon", "q"):
            out.write(f"{name} = {getattr(self, name):.17g}\n")
        out.write(f"minor h11*h22-h12^2 = {self.minor:.17g}\n")
        for name in ("H", "L"):
            out.write(f"{name} =\n")
            for row in getattr(self, name):
                out.write("  " + "  ".join(f"{v:.17g}" for v in row) + "\n")
        return out.getvalue()


@dataclass
class BlockMatrixReport:
    """Assembled 9x9 matrix with its definiteness diagnostics.

    The delay kernels are singular in the coordinates they do not act on,
    so the full matrix always has structurally zero rows; positive
    definiteness is decided on the supported subspace (the complement of
    those rows).
    """

    C: SymMatrix
    positive_definite: bool
    min_eig_supported: float
    min_eig_full: float
    zero_rows: list[int]


@dataclass
class GenericCheckResult:
    ok: bool
    failure: str | None


def _stability_margins(p: ModelParams, lin: LinearizedSystem) -> tuple[float, float]:
    """The two gaps of the delay-independent stability inequalities."""
    a = p.r * lin.x0 / p.K
    gap1 = min(p.c1 * lin.y0, 2.0 * a - p.c1 * lin.y0)
    gap2 = min(p.e2 * p.c2 * lin.y0, p.d2 - p.e2 * p.c2 * lin.y0)
    return gap1, gap2


def choose_rates(p: ModelParams,
                 options: CertificateOptions | None = None) -> tuple[float, float]:
    """Exponential kernel rates m1, m2, strictly inside their admissible range.

    m2 comes from requiring e2*c2*y0*exp(m2*tau2/2) < d2; m1 from the pair
    of inequalities bounding exp(-m1*tau1) from below.  Defaults take half
    the supremum of each.
    """
    options = options or CertificateOptions()
    lin = linearize(p)
    gap1, gap2 = _stability_margins(p, lin)
    if gap1 <= 0.0 or gap2 <= 0.0:
        failed = ("0 < c1*y0 < 2*r*x0/K" if gap1 <= 0.0
                  else "0 < e2*c2*y0 < d2")
        raise CertificateError(
            f"certificate inapplicable: inequality {failed} fails")
    if p.tau1 == 0.0 or p.tau2 == 0.0:
        raise DomainError(
            "certificate construction requires tau1 > 0 and tau2 > 0; "
            "pass a small positive delay to approximate the zero-delay case")
    a = p.r * lin.x0 / p.K
    rho = max(((a - p.c1 * lin.y0) / a) ** 2,
              p.d1 ** 2 / (a * a + p.d1 ** 2))
    m1 = -options.m_fraction * math.log(rho) / p.tau1
    m2 = 2.0 * options.m_fraction * math.log(
        p.d2 / (p.e2 * p.c2 * lin.y0)) / p.tau2
    return m1, m2


def build_certificate(p: ModelParams,
                      options: CertificateOptions | None = None) -> LKCertificate:
    """Construct the full certificate for a delay-independent stable set."""
    options = options or CertificateOptions()
    if not 0.0 < options.mu_fraction < 0.5:
        raise DomainError("mu_fraction must lie in (0, 1/2)")
    if not 0.0 < options.m_fraction < 1.0:
        raise DomainError("m_fraction must lie in (0, 1)")
    m1, m2 = choose_rates(p, options)
    lin = linearize(p)
    x0, y0 = lin.x0, lin.y0
    a = p.r * x0 / p.K
    alpha = options.alpha
    em1 = math.exp(-m1 * p.tau1)

    h22 = alpha * (a + p.d1) * em1
    l22 = alpha * ((a * a + p.d1 ** 2) * em1 - p.d1 ** 2)
    h11 = (p.e1 / p.d1) ** 2 * (a * l22 + alpha * p.c1 * y0 * p.d1 ** 2)
    h12 = alpha * (p.e1 / p.d1) * a * a * em1
    l11 = (p.e1 * a / p.d1) ** 2 * l22 + alpha * p.e1 ** 2 * (
        a * a * em1 - (a - p.c1 * y0) ** 2)
    l12 = (p.e1 / p.d1) * a * l22
    l13 = alpha * p.c2 * y0 * (p.e1 / p.d1) * a * a * em1
    l23 = alpha * p.c2 * y0 * (a + p.d1) * em1

    gap33 = p.d2 - p.e2 * p.c2 * y0 * math.exp(m2 * p.tau2 / 2.0)
    minor = l11 * l22 - l12 * l12
    corner = l11 * l23 ** 2 + l22 * l13 ** 2 - 2.0 * l12 * l13 * l23
    h33 = options.h33_factor * corner / (2.0 * gap33 * minor)
    l33 = 2.0 * h33 * gap33
    beta = h33 * math.exp(m2 * p.tau2 / 2.0) / (p.e2 * p.c2 * y0)

    H = np.array([[h11, h12, 0.0], [h12, h22, 0.0], [0.0, 0.0, h33]])
    H1 = np.array([[h11, h12, 0.0], [h12, h22, 0.0], [0.0, 0.0, 0.0]])
    H2 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, h33]])
    Ht1 = np.zeros((3, 3))
    Ht1[1, 0], Ht1[1, 1] = h12, h22
    Ht2 = np.zeros((3, 3))
    Ht2[2, 2] = h33
    L = np.array([[l11, l12, l13], [l12, l22, l23], [l13, l23, l33]])

    def _fail(item: str):
        raise CertificateError(f"certificate invariant violated: {item}")

    # Sylvester chain for L, in the paper's order
    if not l11 > 0.0:
        _fail("l11 > 0")
    if not minor > 0.0:
        _fail("l11*l22 - l12^2 > 0")
    if not np.linalg.det(L) > 0.0:
        _fail("det L > 0")
    if not (h11 > 0.0 and h22 > 0.0 and h33 > 0.0
            and h11 * h22 - h12 * h12 > 0.0):
        _fail("H positive definite (Sylvester chain)")

    hs = inv_sqrt(H).array()
    sigma_eigs, _ = sym_eigen(hs @ L @ hs)
    sigma = float(sigma_eigs[0])
    if not sigma > 0.0:
        _fail("sigma > 0")
    residual = L - sigma * H
    res_eigs, _ = sym_eigen(residual)
    if res_eigs[0] < -1e-10 * np.linalg.norm(L):
        _fail("L - sigma*H positive semidefinite")

    mu1 = mu2 = options.mu_fraction * sigma
    epsilon = min(sigma - 2.0 * max(mu1, mu2), m1, m2)
    if not epsilon > 0.0:
        _fail("epsilon > 0")

    one = 1.0 - h12 / math.sqrt(h11 * h22)
    q = (2.0 / math.sqrt(one)) * max(
        math.sqrt((p.r / p.K) ** 2 + p.c1 ** 2)
        / (min(math.sqrt(h11), math.sqrt(h22)) * math.sqrt(one)),
        p.c2 / math.sqrt(h33))

    # re-check the defining inequalities for the chosen rates
    if not p.e2 * p.c2 * y0 * math.exp(m2 * p.tau2 / 2.0) < p.d2:
        _fail("m2 inequality")
    if not (a * a * em1 > (a - p.c1 * y0) ** 2
            and (a * a + p.d1 ** 2) * em1 > p.d1 ** 2):
        _fail("m1 inequalities")

    return LKCertificate(
        params=p, lin=lin, x0=x0, y0=y0, alpha=alpha, beta=beta,
        m1=m1, m2=m2, mu1=mu1, mu2=mu2,
        h11=h11, h12=h12, h22=h22, h33=h33,
        H=H, H1=H1, H2=H2, Htilde1=Ht1, Htilde2=Ht2, L=L,
        sigma=sigma, epsilon=epsilon, q=q)


def eval_K(cert: LKCertificate, which: int, s: float) -> np.ndarray:
    """Delay kernel K1(s) or K2(s) as a symmetric 3x3 matrix."""
    p = cert.params
    if which == 1:
        tau, m = p.tau1, cert.m1
        base = cert.alpha * cert.lin.B1.T @ cert.lin.B1 + cert.mu1 * cert.H1
    elif which == 2:
        tau, m = p.tau2, cert.m2
        base = cert.beta * cert.lin.B2.T @ cert.lin.B2 + cert.mu2 * cert.H2
    else:
        raise DomainError("which must be 1 or 2")
    if not 0.0 <= s <= tau:
        raise DomainError(f"s = {s!r} outside [0, {tau}]")
    return math.exp(-m * s) * base


def _supported_submatrix(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    scale = max(np.abs(a).max(), 1e-300)
    zero = [i for i in range(a.shape[0]) if np.abs(a[i]).max() <= 1e-14 * scale]
    keep = [i for i in range(a.shape[0]) if i not in zero]
    return a[np.ix_(keep, keep)], zero


def assemble_C(cert: LKCertificate,
               lin: LinearizedSystem | None = None) -> BlockMatrixReport:
    """The 9x9 block matrix whose definiteness certifies decay.

    Rows corresponding to coordinates that the delay kernels do not act on
    are identically zero, so the PD verdict refers to the supported
    subspace; the full-spectrum minimum eigenvalue is reported alongside.
    """
    lin = lin or cert.lin
    p = cert.params
    H = cert.H
    K10 = eval_K(cert, 1, 0.0)
    K20 = eval_K(cert, 2, 0.0)
    K1t = eval_K(cert, 1, p.tau1)
    K2t = eval_K(cert, 2, p.tau2)
    Z = np.zeros((3, 3))
    C = -np.block([
        [H @ lin.A + lin.A.T @ H + K10 + K20, H @ lin.B1, H @ lin.B2],
        [lin.B1.T @ H, -K1t, Z],
        [lin.B2.T @ H, Z, -K2t],
    ])
    C = 0.5 * (C + C.T)
    sub, zero_rows = _supported_submatrix(C)
    pd, min_sub = is_positive_definite(sub)
    _, min_full = is_positive_definite(C)
    return BlockMatrixReport(C=SymMatrix.from_array(C), positive_definite=pd,
                             min_eig_supported=min_sub, min_eig_full=min_full,
                             zero_rows=zero_rows)


def check_generic_certificate(A, B1, B2, H, K1_samples,
                              K2_samples) -> GenericCheckResult:
    """Check a user-supplied certificate for the general two-delay system.

    ``K1_samples`` and ``K2_samples`` are the kernels on uniform grids over
    their delay windows (first sample at s = 0, last at s = tau).  Kernels
    may be singular in unused coordinates; definiteness and strict decrease
    are checked on the supported subspace.
    """
    A, B1, B2, H = (np.asarray(m, dtype=float) for m in (A, B1, B2, H))
    n = A.shape[0]
    for name, m in (("A", A), ("B1", B1), ("B2", B2), ("H", H)):
        if m.shape != (n, n):
            raise DomainError(f"matrix {name} has shape {m.shape}, expected {(n, n)}")
    samples = [("K1", [np.asarray(k, dtype=float) for k in K1_samples]),
               ("K2", [np.asarray(k, dtype=float) for k in K2_samples])]
    for name, ks in samples:
        if len(ks) < 2:
            raise DomainError(f"{name} needs at least two samples")
        for k in ks:
            if k.shape != (n, n):
                raise DomainError(f"{name} sample has shape {k.shape}")
    pd, _ = is_positive_definite(H)
    if not pd:
        return GenericCheckResult(False, "H not positive definite")
    for name, ks in samples:
        for i, k in enumerate(ks):
            sub, _ = _supported_submatrix(k)
            pd = sub.size > 0 and is_positive_definite(sub)[0]
            if not pd:
                return GenericCheckResult(
                    False, f"{name}({i}) not positive definite on its support")
        for i in range(len(ks) - 1):
            diff = ks[i] - ks[i + 1]
            sub, _ = _supported_submatrix(ks[i])
            dsub, _ = _supported_submatrix(diff)
            if dsub.shape != sub.shape:
                return GenericCheckResult(
                    False, f"{name} not strictly decreasing at sample {i}")
            pd, _ = is_positive_definite(dsub)
            if not pd:
                return GenericCheckResult(
                    False, f"{name} not strictly decreasing at sample {i}")
    Z = np.zeros((n, n))
    C = -np.block([
        [H @ A + A.T @ H + samples[0][1][0] + samples[1][1][0], H @ B1, H @ B2],
        [B1.T @ H, -samples[0][1][-1], Z],
        [B2.T @ H, Z, -samples[1][1][-1]],
    ])
    C = 0.5 * (C + C.T)
    sub, _ = _supported_submatrix(C)
    pd, _ = is_positive_definite(sub)
    if not pd:
        return GenericCheckResult(False, "C not positive definite on its support")
    return GenericCheckResult(True, None)
