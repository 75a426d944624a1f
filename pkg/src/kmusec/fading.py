"""The kappa-mu channel model.

Parameter container, SNR PDF/CDF, envelope PDF, random sampling and the
special-case factories (Rayleigh, Rice, Nakagami-m, One-Sided Gaussian).
SNR is linear throughout; gamma_bar is the mean SNR.
"""
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from kmusec import specfun
from kmusec._backend import kernels as _k
from kmusec.specfun import DEFAULT_CONTROL

#: stand-in for kappa -> 0 limits in series paths; the exact kappa = 0
#: PDF/CDF take the gamma-distribution fast path instead
EPSILON_KAPPA = 1e-9

#: scenario tags shared with the CLI
SPECIAL_CASES = ("rayleigh", "rice", "nakagami_m", "one_sided_gaussian", "kappa_mu")


@dataclass(frozen=True)
class KappaMuParams:
    """One channel's fading triple: dominant-to-scattered power ratio
    kappa >= 0, cluster parameter mu > 0, mean SNR gamma_bar > 0 (linear)."""

    kappa: float
    mu: float
    gamma_bar: float = 1.0

    def __post_init__(self):
        if not self.kappa >= 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.gamma_bar > 0.0:
            raise ValueError(f"gamma_bar must be > 0, got {self.gamma_bar}")

    def with_kappa_floor(self, floor=EPSILON_KAPPA):
        """Copy with kappa raised to the documented epsilon stand-in,
        for series paths that require kappa > 0."""
        if self.kappa >= floor:
            return self
        return dataclasses.replace(self, kappa=floor)


@dataclass(frozen=True)
class PropCoefficients:
    """Rate/shape coefficients of the wiretap survival series: a = 1/gbar_M,
    b = 1/gbar_E, alpha = kappa*mu and beta = (1+kappa)*mu/gbar per channel."""

    a: float
    b: float
    alpha_m: float
    alpha_e: float
    beta_m: float
    beta_e: float

    @classmethod
    def from_channels(cls, main, eve):
        a = 1.0 / main.gamma_bar
        b = 1.0 / eve.gamma_bar
        return cls(
            a=a,
            b=b,
            alpha_m=main.kappa * main.mu,
            alpha_e=eve.kappa * eve.mu,
            beta_m=(main.kappa + 1.0) * a * main.mu,
            beta_e=(eve.kappa + 1.0) * b * eve.mu,
        )


@dataclass(frozen=True)
class ClusterSpec:
    """In-phase/quadrature cluster construction for integer cluster
    counts: mu_int clusters of scattered power sigma^2 each, with
    per-cluster dominant means p[i], q[i]."""

    mu_int: int
    sigma: float
    p: tuple
    q: tuple

    def __post_init__(self):
        if self.mu_int < 1:
            raise ValueError("mu_int must be a positive integer")
        if len(self.p) != self.mu_int or len(self.q) != self.mu_int:
            raise ValueError("p and q must each have mu_int entries")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    @property
    def d_squared(self):
        return float(sum(pi * pi for pi in self.p) + sum(qi * qi for qi in self.q))

    @property
    def kappa(self):
        return self.d_squared / (2.0 * self.mu_int * self.sigma ** 2)

    @property
    def gamma_bar(self):
        # total mean power in SNR-normalized units
        return self.d_squared + 2.0 * self.mu_int * self.sigma ** 2

    @classmethod
    def from_params(cls, params):
        """Cluster construction reproducing ``params`` (integer mu only).

        The dominant power is split evenly, p_i = q_i = d / sqrt(2 mu);
        any placement with the same total d^2 yields the same envelope law.
        """
        mu_int = int(round(params.mu))
        if abs(params.mu - mu_int) > 1e-9 or mu_int < 1:
            raise ValueError("cluster construction requires a positive integer mu")
        sigma2 = params.gamma_bar / (2.0 * mu_int * (1.0 + params.kappa))
        d2 = 2.0 * params.kappa * mu_int * sigma2
        comp = math.sqrt(d2 / (2.0 * mu_int))
        return cls(
            mu_int=mu_int,
            sigma=math.sqrt(sigma2),
            p=(comp,) * mu_int,
            q=(comp,) * mu_int,
        )

    def sample_snr(self, n, seed):
        """Draw n SNR values through the Gaussian cluster construction."""
        rng = np.random.Generator(np.random.Philox(key=seed))
        x = rng.normal(0.0, self.sigma, size=(n, self.mu_int)) + np.asarray(self.p)
        y = rng.normal(0.0, self.sigma, size=(n, self.mu_int)) + np.asarray(self.q)
        return (x * x + y * y).sum(axis=1)


def _snr_logpdf(kappa, mu, gamma_bar, g):
    # log of the kappa-mu SNR density, scaled-Bessel form
    arg = 2.0 * mu * math.sqrt(kappa * (1.0 + kappa) * g / gamma_bar)
    lf = (math.log(mu)
          + 0.5 * (mu + 1.0) * (math.log1p(kappa) - math.log(gamma_bar))
          + 0.5 * (mu - 1.0) * (math.log(g) - math.log(kappa))
          - mu * kappa
          - mu * (1.0 + kappa) * g / gamma_bar
          + arg)
    ie = _k.bessel_ie(mu - 1.0, arg)
    if ie <= 0.0:
        return -math.inf
    return lf + math.log(ie)


def _snr_pdf_scalar(params, g):
    if g < 0.0:
        raise ValueError(f"snr_pdf requires gamma >= 0, got {g}")
    kappa, mu, gbar = params.kappa, params.mu, params.gamma_bar
    if g == 0.0:
        if mu < 1.0:
            raise ValueError("the density diverges at gamma = 0 for mu < 1; "
                             "evaluate at gamma > 0")
        if mu > 1.0:
            return 0.0
        # mu = 1: finite limit
        return (1.0 + kappa) * math.exp(-kappa) / gbar if kappa > 0.0 else 1.0 / gbar
    if kappa == 0.0:
        # exact kappa -> 0 limit: gamma distribution with shape mu, mean gbar
        lf = (mu * math.log(mu) + (mu - 1.0) * math.log(g)
              - mu * g / gbar - math.lgamma(mu) - mu * math.log(gbar))
        return math.exp(lf)
    lf = _snr_logpdf(kappa, mu, gbar, g)
    return math.exp(lf) if lf > -745.0 else 0.0


def snr_pdf(params, gamma):
    """SNR density of a kappa-mu channel at ``gamma`` (scalar or array)."""
    arr = np.asarray(gamma, dtype=float)
    if arr.ndim == 0:
        return _snr_pdf_scalar(params, float(arr))
    flat = [_snr_pdf_scalar(params, float(g)) for g in arr.ravel()]
    return np.asarray(flat).reshape(arr.shape)


def snr_cdf(params, gamma, ctl=None):
    """SNR distribution function, 1 - Q_mu(sqrt(2 kappa mu),
    sqrt(2 (1+kappa) mu gamma / gamma_bar))."""
    ctl = ctl or DEFAULT_CONTROL
    g = float(gamma)
    if g < 0.0:
        raise ValueError(f"snr_cdf requires gamma >= 0, got {g}")
    if g == 0.0:
        return 0.0
    kappa, mu, gbar = params.kappa, params.mu, params.gamma_bar
    if kappa == 0.0:
        return 1.0 - _k.gammainc_upper_reg(mu, mu * g / gbar)
    value, _, _ = _k.marcum_q_series(
        mu,
        math.sqrt(2.0 * kappa * mu),
        math.sqrt(2.0 * (1.0 + kappa) * mu * g / gbar),
        ctl.abs_tol,
        ctl.max_terms,
    )
    return min(max(1.0 - value, 0.0), 1.0)


def sample_snr(params, n, seed):
    """Draw ``n`` i.i.d. SNR values; deterministic for a fixed seed.

    Uses the Poisson/gamma mixture equivalent of the cluster model:
    P ~ Poisson(kappa mu), G ~ Gamma(mu + P, scale 2), and
    gamma = gamma_bar G / (2 mu (1 + kappa)), whose distribution function
    is exactly the Marcum-Q complement for any real mu > 0.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    return _sample_snr_with(rng, params, n)


def _sample_snr_with(rng, params, n):
    kappa, mu, gbar = params.kappa, params.mu, params.gamma_bar
    pois = rng.poisson(kappa * mu, size=n)
    g = rng.gamma(shape=mu + pois, scale=2.0)
    return gbar * g / (2.0 * mu * (1.0 + kappa))


def envelope_pdf(params, r, r_hat=1.0):
    """Envelope density at level ``r`` for RMS level ``r_hat``, obtained
    from the SNR density through r = sqrt(gamma r_hat^2 / gamma_bar)."""
    arr = np.asarray(r, dtype=float)
    scalar = arr.ndim == 0

    kappa, mu = params.kappa, params.mu
    if not r_hat > 0.0:
        raise ValueError("r_hat must be positive")

    def one(rv):
        if rv < 0.0:
            raise ValueError("envelope level must be >= 0")
        if rv == 0.0:
            if mu < 0.5:
                raise ValueError("the envelope density diverges at r = 0 for mu < 0.5")
            if mu > 0.5:
                return 0.0
            return _envelope_pdf_at_origin(kappa, mu, r_hat)
        rho = rv / r_hat
        if kappa == 0.0:
            lf = (math.log(2.0) + mu * math.log(mu) + (2.0 * mu - 1.0) * math.log(rho)
                  - mu * rho * rho - math.lgamma(mu) - math.log(r_hat))
            return math.exp(lf)
        arg = 2.0 * mu * math.sqrt(kappa * (1.0 + kappa)) * rho
        lf = (math.log(2.0 * mu)
              + 0.5 * (mu + 1.0) * math.log1p(kappa)
              + mu * math.log(rho)
              - mu * (1.0 + kappa) * rho * rho
              - 0.5 * (mu - 1.0) * math.log(kappa)
              - mu * kappa
              - math.log(r_hat)
              + arg)
        ie = _k.bessel_ie(mu - 1.0, arg)
        if ie <= 0.0:
            return 0.0
        return math.exp(lf + math.log(ie))

    if scalar:
        return one(float(arr))
    return np.asarray([one(float(rv)) for rv in arr.ravel()]).reshape(arr.shape)


def _envelope_pdf_at_origin(kappa, mu, r_hat):
    # finite r -> 0 limit, only reached for mu exactly 0.5 where the
    # density behaves like r^(2 mu - 1); leading Bessel series term
    if kappa == 0.0:
        lf = math.log(2.0) + mu * math.log(mu) - math.lgamma(mu) - math.log(r_hat)
        return math.exp(lf)
    lf = (math.log(2.0 * mu) + 0.5 * (mu + 1.0) * math.log1p(kappa)
          - 0.5 * (mu - 1.0) * math.log(kappa) - mu * kappa - math.log(r_hat)
          + (mu - 1.0) * math.log(mu * math.sqrt(kappa * (1.0 + kappa)))
          - math.lgamma(mu))
    return math.exp(lf)


def make_special_case(name, *, K=None, m=None, kappa=None, mu=None, gamma_bar=1.0):
    """Parameter triple for a named special case of the model.

    rice(K) -> (kappa=K, mu=1); nakagami_m(m) -> (kappa=eps, mu=m);
    rayleigh -> (kappa=eps, mu=1); one_sided_gaussian -> (kappa=eps,
    mu=0.5); kappa_mu passes (kappa, mu) through. eps is the documented
    kappa -> 0 stand-in.
    """
    if name == "rayleigh":
        return KappaMuParams(EPSILON_KAPPA, 1.0, gamma_bar)
    if name == "rice":
        if K is None or K <= 0.0:
            raise ValueError("rice requires a positive K factor")
        return KappaMuParams(float(K), 1.0, gamma_bar)
    if name == "nakagami_m":
        if m is None or m <= 0.0:
            raise ValueError("nakagami_m requires a positive m")
        return KappaMuParams(EPSILON_KAPPA, float(m), gamma_bar)
    if name == "one_sided_gaussian":
        return KappaMuParams(EPSILON_KAPPA, 0.5, gamma_bar)
    if name == "kappa_mu":
        if kappa is None or mu is None:
            raise ValueError("kappa_mu requires kappa and mu")
        if kappa <= 0.0 or mu <= 0.0:
            raise ValueError("kappa_mu requires positive kappa and mu")
        return KappaMuParams(float(kappa), float(mu), gamma_bar)
    raise ValueError(f"unknown scenario tag {name!r}; expected one of {SPECIAL_CASES}")
