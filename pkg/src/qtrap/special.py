"""Real special functions built from scratch: Bessel J_m, its derivative and
positive zeros, the Gamma function, and a guarded generalized hypergeometric
series.

Everything in this module is pure and reentrant.  No caching happens here;
callers that want tables cache them themselves.

Supported envelope: integer order 0 <= m <= 50, argument 0 <= x <= 1e4.
Within it, absolute error <= 1e-13 for x <= 50 and relative error <= 1e-11
beyond, which is what the quadrature and spectral layers budget for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "NumericError",
    "CancellationError",
    "NonConvergence",
    "BesselZeroTable",
    "bessel_j",
    "bessel_j_prime",
    "bessel_zeros",
    "gamma_fn",
    "log_gamma",
    "pfq",
]

M_MAX = 50
X_MAX = 1.0e4

# Ascending series is used while its largest term stays below exp(SERIES_LOG_CAP).
# long double keeps ~1.1e-19; e^11.4 ~ 9e4 worst-term cancellation => ~1e-14 abs.
SERIES_LOG_CAP = 11.4

# Hankel asymptotics are only trusted for orders 0 and 1; every other point
# that the series cannot reach goes through Miller downward recurrence, whose
# start offset sqrt(40*top) keeps the seeded growth inside long double range.


class DomainError(ValueError):
    """Argument outside the supported envelope."""


class NumericError(RuntimeError):
    """An iteration failed to meet its own stopping criterion."""


class CancellationError(NumericError):
    """Alternating series lost too many digits; caller should fall back."""


class NonConvergence(NumericError):
    """Series did not converge within the term budget."""


# --------------------------------------------------------------------------
# Gamma machinery (needed by the series eligibility test and by pfq callers)

# Lanczos g = 7, 9-term coefficients.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def log_gamma(z):
    """ln Gamma(z) for real z >= 0.5 (scalar or ndarray), Lanczos form."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.5):
        raise DomainError("log_gamma requires z >= 0.5")
    zm1 = z - 1.0
    acc = np.full_like(zm1, _LANCZOS[0])
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc = acc + c / (zm1 + i)
    t = zm1 + _LANCZOS_G + 0.5
    out = 0.5 * math.log(2.0 * math.pi) + (zm1 + 0.5) * np.log(t) - t + np.log(acc)
    return out if out.ndim else float(out)


def gamma_fn(z: float) -> float:
    """Gamma(z) for real 0 < z <= 170, relative error <= 1e-12."""
    z = float(z)
    if not z > 0.0:
        raise DomainError(f"gamma_fn requires z > 0, got {z}")
    if z > 170.0:
        raise DomainError(f"gamma_fn overflows past z = 170, got {z}")
    if z == math.floor(z):
        return float(math.factorial(int(z) - 1))
    if z < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.pi / (math.sin(math.pi * z) * gamma_fn(1.0 - z))
    return float(math.exp(log_gamma(z)))


# --------------------------------------------------------------------------
# Bessel J_m

def _series_eligible(m: int, x: np.ndarray) -> np.ndarray:
    """Mask of arguments whose ascending series keeps cancellation bounded."""
    with np.errstate(divide="ignore", invalid="ignore"):
        kstar = 0.5 * (-m + np.sqrt(m * m + x * x))
        log_tmax = (
            (m + 2.0 * kstar) * np.log(x / 2.0)
            - log_gamma(kstar + 1.0)
            - log_gamma(m + kstar + 1.0)
        )
    # x < 2 makes log(x/2) negative, so tiny arguments are always eligible
    return np.where(x > 0.0, log_tmax <= SERIES_LOG_CAP, True)


def _jm_series(m: int, x: np.ndarray) -> np.ndarray:
    """Ascending power series in long double."""
    xl = x.astype(np.longdouble)
    q = (0.5 * xl) ** 2
    with np.errstate(divide="ignore"):
        logt0 = m * np.log(0.5 * xl) - math.lgamma(m + 1)
    term = np.where(xl > 0.0, np.exp(logt0.astype(np.longdouble)), 1.0 if m == 0 else 0.0)
    term = term.astype(np.longdouble)
    total = term.copy()
    tiny = np.longdouble(1e-25)
    for k in range(400):
        term = -term * q / np.longdouble((k + 1.0) * (k + 1.0 + m))
        total += term
        if not np.any(np.abs(term) > tiny * (np.abs(total) + tiny)):
            break
    else:
        raise NonConvergence("Bessel series did not settle in 400 terms")
    return total.astype(float)


def _hankel_pq(m01: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P, Q asymptotic sums for order 0 or 1, truncated at the smallest term."""
    mu = 4.0 * m01 * m01
    xl = x.astype(np.longdouble)
    p = np.ones_like(xl)
    q = np.zeros_like(xl)
    term = np.ones_like(xl)
    prev = np.full_like(xl, np.inf)
    alive = np.ones(x.shape, dtype=bool)
    for j in range(1, 40):
        term = term * np.longdouble(mu - (2.0 * j - 1.0) ** 2) / (np.longdouble(8.0) * xl * j)
        # once terms grow the expansion has bottomed out; freeze those entries
        alive &= np.abs(term) < prev
        if not np.any(alive):
            break
        prev = np.where(alive, np.abs(term), prev)
        sgn = -1.0 if (j // 2) % 2 else 1.0
        if j % 2:  # odd terms feed Q
            q = np.where(alive, q + sgn * term, q)
        else:
            p = np.where(alive, p + sgn * term, p)
    return p.astype(float), q.astype(float)


def _jm_asymptotic(m01: int, x: np.ndarray) -> np.ndarray:
    """Hankel expansion, orders 0 and 1 only."""
    xl = x.astype(np.longdouble)
    p, q = _hankel_pq(m01, x)
    chi = xl - (0.5 * m01 + 0.25) * np.longdouble(math.pi)
    amp = np.sqrt(np.longdouble(2.0) / (np.longdouble(math.pi) * xl))
    return (amp * (p * np.cos(chi) - q * np.sin(chi))).astype(float)


def _jm_miller(m: int, x: np.ndarray) -> np.ndarray:
    """Downward recurrence normalized by J_0 + 2*sum J_2k = 1.

    Each element gets its own start index: seeding everything at the global
    maximum would let entries with small x grow through long double range
    before their own scale is reached.
    """
    xl = x.astype(np.longdouble)
    top = np.maximum(float(m), x)
    start = (top + np.sqrt(40.0 * top) + 12.0).astype(int)
    start += start % 2  # even start keeps the normalization sum aligned
    seed = np.longdouble(1e-300)
    jp1 = np.zeros_like(xl)
    jk = np.zeros_like(xl)
    norm = np.zeros_like(xl)
    saved = np.zeros_like(xl)
    for k in range(int(start.max()), 0, -1):
        fresh = start == k
        if np.any(fresh):
            jk[fresh] = seed
            jp1[fresh] = 0.0
        jm1 = (2.0 * k / xl) * jk - jp1
        jp1, jk = jk, jm1
        # jk now holds J_{k-1}
        if (k - 1) == m:
            saved = jk.copy()
        if (k - 1) > 0 and (k - 1) % 2 == 0:
            norm += jk
    norm = 2.0 * norm + jk
    return (saved / norm).astype(float)


def _validate_order(m, limit: int = M_MAX) -> int:
    if not float(m).is_integer() or m < 0:
        raise DomainError(f"order must be a nonnegative integer, got {m}")
    if m > limit:
        raise DomainError(f"order {m} above supported maximum {limit}")
    return int(m)


def bessel_j(m, x):
    """Bessel function of the first kind, J_m(x).

    `x` may be a scalar or an ndarray (any shape); negative arguments and
    arguments beyond the envelope raise DomainError.  Orders up to 51 are
    accepted so that the derivative recurrence stays inside the engine.
    """
    m = _validate_order(m, limit=M_MAX + 1)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel()
    if flat.size and not (np.min(flat) >= 0.0 and np.max(flat) <= X_MAX):
        raise DomainError("argument outside [0, 1e4]")  # rejects NaN too

    out = np.empty_like(flat)
    zero = flat == 0.0
    out[zero] = 1.0 if m == 0 else 0.0

    rest = ~zero
    xs = flat[rest]
    if xs.size:
        res = np.empty_like(xs)
        ser = _series_eligible(m, xs)
        if np.any(ser):
            res[ser] = _jm_series(m, xs[ser])
        hard = ~ser
        if np.any(hard):
            xh = xs[hard]
            if m <= 1:
                res[hard] = _jm_asymptotic(m, xh)
            else:
                res[hard] = _jm_miller(m, xh)
        out[rest] = res

    out = out.reshape(arr.shape)
    return float(out) if scalar else out


def bessel_j_prime(m, x):
    """dJ_m/dx via the recurrence J'_m = (J_{m-1} - J_{m+1})/2."""
    m = _validate_order(m)
    if m == 0:
        jm1 = bessel_j(1, x)
        return -jm1 if np.ndim(jm1) else -float(jm1)
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


# --------------------------------------------------------------------------
# Zeros

@dataclass(frozen=True)
class BesselZeroTable:
    """Ordered positive zeros x_mn of J_m, n = 1..N.

    The trivial zero at the origin for m > 0 is excluded.  Zeros are strictly
    increasing and each satisfies |J_m(zero)| < 1e-12.
    """

    m: int
    zeros: np.ndarray = field(repr=False)

    def __post_init__(self):
        z = np.asarray(self.zeros, dtype=float)
        z.setflags(write=False)
        object.__setattr__(self, "zeros", z)
        if z.size == 0:
            raise DomainError("zero table must hold at least one zero")
        if not np.all(np.diff(z) > 0.0):
            raise NumericError("zeros are not strictly increasing")
        resid = np.abs(bessel_j(self.m, z))
        if np.max(resid) >= 1e-12:
            raise NumericError(f"stored zero fails residual check: {np.max(resid):.3e}")

    def __len__(self) -> int:
        return int(self.zeros.size)

    def __getitem__(self, n: int) -> float:
        """1-based access: table[n] is x_mn."""
        if not 1 <= n <= len(self):
            raise IndexError(f"zero index {n} outside 1..{len(self)}")
        return float(self.zeros[n - 1])


_SCAN_STEP = math.pi / 4.0


def bessel_zeros(m: int, count: int) -> BesselZeroTable:
    """First `count` positive zeros of J_m.

    Brackets come from a sign scan with step pi/4 starting just above m
    (the first zero of J_m exceeds m); each bracket is polished by Newton
    iteration to |dx| < 1e-13.
    """
    m = _validate_order(m)
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")

    zeros = []
    x0 = m + 1.8
    f0 = bessel_j(m, x0)
    budget = 16 * count + 400
    for _ in range(budget):
        x1 = x0 + _SCAN_STEP
        f1 = bessel_j(m, x1)
        if f0 == 0.0:
            zeros.append(x0)
        elif f0 * f1 < 0.0:
            zeros.append(_newton_zero(m, x0, x1))
        if len(zeros) >= count:
            return BesselZeroTable(m=m, zeros=np.array(zeros[:count]))
        x0, f0 = x1, f1
    raise NumericError(f"failed to bracket {count} zeros of J_{m} within scan budget")


def _newton_zero(m: int, lo: float, hi: float) -> float:
    x = 0.5 * (lo + hi)
    for _ in range(60):
        f = bessel_j(m, x)
        df = bessel_j_prime(m, x)
        step = f / df
        x_new = x - step
        if not lo - 1.0 < x_new < hi + 1.0:  # fall back to bisection on escape
            fl = bessel_j(m, lo)
            if fl * f < 0.0:
                hi = x
            else:
                lo = x
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-13:
            return x_new
        x = x_new
    raise NumericError(f"Newton polish stalled for J_{m} zero near {x:.6f}")


# --------------------------------------------------------------------------
# Generalized hypergeometric series

_PFQ_GUARD = 1e8
_PFQ_BUDGET = 50_000
_PFQ_OVERFLOW = np.longdouble("1e4000")


def pfq(a, b, z: float) -> float:
    """Partial-sum evaluation of pFq(a; b; z) for p <= 3, q <= 4.

    Terms are accumulated in long double with a running cancellation guard:
    if (max partial term)/|sum| exceeds 1e8 the value cannot be trusted and
    CancellationError is raised so the caller can fall back to quadrature.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if len(a) > 3 or len(b) > 4:
        raise DomainError(f"pfq supports p <= 3, q <= 4, got p={len(a)}, q={len(b)}")
    for bi in b:
        if bi <= 0.0 and bi == math.floor(bi):
            raise DomainError(f"lower parameter {bi} is a nonpositive integer (pole)")
    z = float(z)
    if z == 0.0:
        return 1.0

    zl = np.longdouble(z)
    term = np.longdouble(1.0)
    total = np.longdouble(1.0)
    max_term = np.longdouble(1.0)
    settled = 0
    for k in range(_PFQ_BUDGET):
        num = np.longdouble(1.0)
        for ai in a:
            num *= np.longdouble(ai + k)
        den = np.longdouble(k + 1.0)
        for bi in b:
            den *= np.longdouble(bi + k)
        term = term * num / den * zl
        total += term
        at = abs(term)
        if at > max_term:
            max_term = at
        if at > _PFQ_OVERFLOW:
            raise CancellationError("hypergeometric terms overflow long double range")
        if at <= np.longdouble(1e-24) * max(abs(total), np.longdouble(1e-300)):
            settled += 1
            if settled >= 3:
                break
        else:
            settled = 0
    else:
        raise NonConvergence(f"pfq did not converge within {_PFQ_BUDGET} terms")

    if abs(total) == 0.0 or max_term / abs(total) > _PFQ_GUARD:
        raise CancellationError(
            f"cancellation guard tripped: max term / |sum| = {float(max_term / max(abs(total), np.longdouble(1e-300))):.3e}"
        )
    return float(total)
