"""Randomized property suites for the structural inequalities the analysis relies on.

Every suite returns :class:`SuiteResult` records: how many cases were drawn,
how many violated the bound, and the worst ratio ``lhs / bound``.  Pointwise
checks allow a roundoff slack of a few ulps of the quantities that cancel in
the left-hand side; nothing else is relaxed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import observables as obs
from .grid import ComplexField, Grid
from .noise import GFamily, GKind
from .regularization import Family, f_eps_prime, f_values, RegKind

ULP = np.finfo(float).eps
SLACK = 64.0 * ULP

DEFAULT_EPSILONS = (0.5, 0.1, 0.01, 1e-4)
DEFAULT_INTERP = ((1.0, 0.25), (0.5, 0.2))


@dataclass(frozen=True)
class SuiteResult:
    name: str
    params: str
    n: int
    violations: int
    worst_ratio: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return asdict(self)


def _result(name, params, lhs, bound, slack) -> SuiteResult:
    lhs = np.asarray(lhs, dtype=float)
    bound = np.asarray(bound, dtype=float)
    viol = int(np.count_nonzero(lhs > bound + slack))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(bound > 0, lhs / bound, np.where(lhs > slack, np.inf, 0.0))
    return SuiteResult(name, params, int(lhs.size), viol, float(np.max(r)))


def random_complex_pairs(n: int, rng: np.random.Generator, radius: float = 10.0):
    """Pairs with ``|x| <= radius``: a third uniform in the disc, a third with
    log-uniform moduli down to ``1e-6``, a third of near-coincident pairs."""
    k = n // 3
    parts = []
    m = np.sqrt(rng.uniform(0, 1, (k, 2))) * radius
    parts.append(m * np.exp(2j * np.pi * rng.uniform(0, 1, (k, 2))))
    m = 10.0 ** rng.uniform(-6, np.log10(radius), (k, 2))
    parts.append(m * np.exp(2j * np.pi * rng.uniform(0, 1, (k, 2))))
    r = n - 2 * k
    x1 = 10.0 ** rng.uniform(-4, np.log10(radius), r) * np.exp(2j * np.pi * rng.uniform(0, 1, r))
    d = 10.0 ** rng.uniform(-8, 0, r) * np.exp(2j * np.pi * rng.uniform(0, 1, r)) * np.abs(x1)
    x2 = x1 + d
    x2 = np.where(np.abs(x2) > radius, x2 * radius / np.abs(x2), x2)
    parts.append(np.stack([x1, x2], axis=1))
    p = np.concatenate(parts)
    return p[:, 0], p[:, 1]


def _one_sided(family: Family, eps: float, x1, x2):
    f1 = f_values(np.abs(x1) ** 2, family, eps)
    f2 = f_values(np.abs(x2) ** 2, family, eps)
    a, b = f1 * x1, f2 * x2
    lhs = np.abs(np.imag((a - b) * np.conj(x1 - x2)))
    slack = SLACK * (np.abs(a) + np.abs(b)) * np.abs(x1 - x2)
    return lhs, slack


def regularization_suite(n: int = 100_000, epsilons=DEFAULT_EPSILONS, seed: int = 0) -> list:
    """One-sided Lipschitz bounds for both families, plus the bounded family's
    sup and derivative bounds."""
    rng = np.random.default_rng(seed)
    out = []
    for eps in epsilons:
        x1, x2 = random_complex_pairs(n, rng)
        d2 = np.abs(x1 - x2) ** 2
        p = f"eps={eps:g}"

        lhs, slack = _one_sided(Family.LOG_SHIFT, eps, x1, x2)
        out.append(_result("log_shift_one_sided", p, lhs, 4.0 * d2, slack))

        lhs, slack = _one_sided(Family.LOG_RATIONAL, eps, x1, x2)
        out.append(_result("log_rational_one_sided", p, lhs, 4.0 * (1 - eps * eps) * d2, slack))

        rho = np.concatenate([np.abs(x1) ** 2, np.abs(x2) ** 2, [0.0, 1e300]])
        fv = np.abs(f_values(rho, Family.LOG_RATIONAL, eps))
        out.append(_result("log_rational_sup", p, fv, np.full_like(fv, abs(np.log(eps))),
                           SLACK * abs(np.log(eps))))

        # derivative in |x| by complex step, independent of the closed-form f'
        r = np.abs(x1)
        h = 1e-20 * np.maximum(r, 1e-3)
        rc = r + 1j * h
        fc = np.log(rc * rc + eps) - np.log(1 + eps * rc * rc)
        deriv = np.abs(fc.imag / h)
        bound = 2 * (1 - eps * eps) * r / ((eps + r * r) * (1 + eps * r * r))
        out.append(_result("log_rational_derivative", p, deriv, bound, SLACK * bound + 1e-300))
    return out


def eps_difference_suite(pairs=((1e-1, 1e-3), (1e-2, 1e-5), (0.5, 0.4)), n: int = 100_001) -> list:
    """``sup_rho (e_m - e_n) sqrt(rho) / (e_m + rho) <= (e_m - e_n) / (2 sqrt(e_m))``."""
    rho = np.concatenate([[0.0], np.logspace(-14, 6, n)])
    out = []
    for em, en in pairs:
        lhs = (em - en) * np.sqrt(rho) / (em + rho)
        b1 = (em - en) / (2 * np.sqrt(em))
        out.append(_result("eps_difference", f"em={em:g},en={en:g}", lhs, np.full_like(lhs, b1),
                           SLACK * b1))
        out.append(_result("eps_difference_coarse", f"em={em:g}", np.array([b1]),
                           np.array([np.sqrt(em) / 2]), 0.0))
    return out


BOUNDED_FAMILIES = (
    GKind(GFamily.ONE),
    GKind(GFamily.INVERSE_SHIFT, 1.0),
    GKind(GFamily.RATIONAL, 1.0),
    GKind(GFamily.RATIONAL_SQ, 1.0),
    GKind(GFamily.LOG_RATIONAL, 0.5),
)


def _random_nonneg_pairs(n, rng):
    k = n // 2
    a = 10.0 ** rng.uniform(-6, 3, (k, 2))
    x = 10.0 ** rng.uniform(-4, 3, n - k)
    y = x * (1 + 10.0 ** rng.uniform(-8, 0, n - k) * rng.choice([-1, 1], n - k))
    both = np.concatenate([a, np.stack([x, np.abs(y)], axis=1)])
    return both[:, 0], both[:, 1]


def g_catalog_suite(n: int = 100_000, kinds=BOUNDED_FAMILIES, seed: int = 1) -> list:
    """Monotonicity-type condition and the complex one-sided Lipschitz condition
    for every bounded diffusion function, against its computed ``C_g``."""
    rng = np.random.default_rng(seed)
    out = []
    for g in kinds:
        cg = g.C_g
        p = f"{g.family.value}(c={g.c:g}),C_g={cg:.6g}"
        x, y = _random_nonneg_pairs(n, rng)
        gx, gy = g.value(x * x), g.value(y * y)
        lhs = (x + y) * (gx - gy)
        slack = SLACK * (x + y) * (np.abs(gx) + np.abs(gy))
        out.append(_result("con_g", p, lhs, cg * np.abs(x - y), slack))

        z1, z2 = random_complex_pairs(n, rng)

        def phi(z):
            s = np.abs(z) ** 2
            return g.prime(s) * g.value(s) * s * z

        a, b = phi(z1), phi(z2)
        lhs = np.abs(np.conj(z2 - z1) * (a - b))
        slack = SLACK * (np.abs(a) + np.abs(b)) * np.abs(z1 - z2)
        out.append(_result("con_g1", p, lhs, cg * np.abs(z1 - z2) ** 2, slack))
    return out


def random_envelope_fields(grid: Grid, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian envelopes with random centre, width and amplitude, modulated by a
    random trigonometric polynomial with complex coefficients."""
    x = grid.x
    centre = rng.uniform(-0.3, 0.3, (n, 1)) * grid.length
    width = 10.0 ** rng.uniform(-0.5, 0.8, (n, 1))
    amp = 10.0 ** rng.uniform(-2, 2, (n, 1))
    env = amp * np.exp(-((x - centre) ** 2) / (2 * width ** 2))
    modes = 6
    k = rng.uniform(0, 3, (n, modes))
    c = rng.normal(size=(n, modes)) + 1j * rng.normal(size=(n, modes))
    mod = 1.0 + 0.5 * np.einsum("nm,nmj->nj", c, np.exp(1j * k[:, :, None] * x))
    return env * mod


def interpolation_suite(n: int = 10_000, params=DEFAULT_INTERP, seed: int = 2,
                        grid: Grid | None = None) -> list:
    """Ratio of ``||v||_{L^{2-2eta}}`` to ``||v||^{1-theta} ||v||_{L2_alpha}^theta``
    against the constant from the splitting argument."""
    grid = grid or Grid(1, 40.0, 512)
    rng = np.random.default_rng(seed)
    out = []
    for alpha, eta in params:
        v = random_envelope_fields(grid, n, rng)
        theta = obs.interpolation_exponent(grid.dim, alpha, eta)
        q = 2.0 - 2.0 * eta
        lhs = grid.integrate(np.abs(v) ** q) ** (1.0 / q)
        l2 = np.sqrt(grid.l2sq(v))
        wn = np.sqrt(grid.l2sq(grid.weight(alpha) * v))
        rhs = l2 ** (1 - theta) * wn ** theta
        C = obs.interpolation_constant(grid.dim, alpha, eta)
        out.append(_result("weighted_interpolation", f"alpha={alpha:g},eta={eta:g},C={C:.6g}",
                           lhs / rhs, np.full(n, C), SLACK * C))
    return out


def run_all(scale: float = 1.0) -> list:
    """Every suite; ``scale`` multiplies the sample counts."""
    n = max(int(100_000 * scale), 30)
    return (regularization_suite(n) + eps_difference_suite() + g_catalog_suite(n)
            + interpolation_suite(max(int(10_000 * scale), 10)))
