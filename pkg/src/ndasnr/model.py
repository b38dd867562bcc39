"""Channel parameterization, synthetic BPSK/AWGN blocks and the sample file format.

Observables follow ``y = mu * x + sigma * w`` with ``x`` in {-1, +1} and ``w``
standard normal.  Randomness comes from a keyed counter-based hash, so a block
is a pure function of ``(params, n, seed)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import kernels

MASK64 = (1 << 64) - 1


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(snr: float) -> float:
    return 10.0 * math.log10(snr) if snr > 0 else -math.inf


@dataclass(frozen=True)
class ChannelParams:
    """True channel state, stored canonically as ``(mu, sigma, prior_q)``.

    ``gamma`` (linear SNR ``mu**2 / (2 sigma**2)``) and ``lam`` (reliability
    ``2 mu / sigma**2``) are derived on access.  ``sigma == 0`` is allowed for
    noiseless test blocks; reading ``gamma`` or ``lam`` then raises.
    """

    mu: float
    sigma: float
    prior_q: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError("mu and sigma must be finite")
        if self.mu < 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not 0.0 <= self.prior_q <= 1.0:
            raise ValueError(f"prior_q must lie in [0, 1], got {self.prior_q}")

    def _need_noise(self):
        if self.sigma <= 0:
            raise ValueError("derived quantity undefined for a noiseless channel (sigma=0)")

    @property
    def gamma(self) -> float:
        self._need_noise()
        return self.mu**2 / (2.0 * self.sigma**2)

    @property
    def gamma_db(self) -> float:
        return linear_to_db(self.gamma)

    @property
    def lam(self) -> float:
        self._need_noise()
        return 2.0 * self.mu / self.sigma**2

    @property
    def es(self) -> float:
        return self.mu**2

    @property
    def n0(self) -> float:
        return 2.0 * self.sigma**2

    @property
    def m2(self) -> float:
        return self.mu**2 + self.sigma**2


def params_from(
    *,
    mu: float | None = None,
    sigma: float | None = None,
    gamma: float | None = None,
    gamma_db: float | None = None,
    m2_scale: float = 1.0,
    prior_q: float = 0.5,
) -> ChannelParams:
    """Build :class:`ChannelParams` from exactly one parameterization.

    Accepted forms are ``(mu, sigma)``, ``(gamma, m2_scale)`` and
    ``(gamma_db, m2_scale)``.  In the SNR forms ``m2_scale`` fixes the
    absolute level ``mu**2 + sigma**2`` (default 1).
    """
    given = [mu is not None or sigma is not None, gamma is not None, gamma_db is not None]
    if sum(given) != 1:
        raise ValueError("give exactly one of (mu, sigma), gamma or gamma_db")
    if not 0.0 <= prior_q <= 1.0:
        raise ValueError(f"prior_q must lie in [0, 1], got {prior_q}")
    if given[0]:
        if mu is None or sigma is None:
            raise ValueError("both mu and sigma are required")
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if mu < 0:
            raise ValueError(f"mu must be non-negative, got {mu}")
        return ChannelParams(float(mu), float(sigma), float(prior_q))
    if gamma_db is not None:
        gamma = db_to_linear(gamma_db)
    if gamma < 0 or not math.isfinite(gamma):
        raise ValueError(f"gamma must be a finite non-negative number, got {gamma}")
    if m2_scale <= 0:
        raise ValueError(f"m2_scale must be positive, got {m2_scale}")
    # mu^2 = 2 gamma sigma^2 and mu^2 + sigma^2 = m2_scale
    sigma2 = m2_scale / (1.0 + 2.0 * gamma)
    return ChannelParams(
        math.sqrt(2.0 * gamma * sigma2), math.sqrt(sigma2), float(prior_q)
    )


@dataclass(frozen=True)
class SampleBlock:
    """``n`` real observables plus the seed and truth that produced them."""

    samples: np.ndarray
    seed: int | None = None
    truth: ChannelParams | None = None
    n: int = field(init=False)

    def __post_init__(self):
        y = np.array(self.samples, dtype=np.float64).ravel()
        if y.size < 1:
            raise ValueError("a sample block needs at least one observable")
        if not np.all(np.isfinite(y)):
            raise ValueError("sample values must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "samples", y)
        object.__setattr__(self, "n", int(y.size))

    def __len__(self):
        return self.n


def _fmix64(x: int) -> int:
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & MASK64
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & MASK64
    x ^= x >> 33
    return x


def derive_key(*words: int) -> int:
    """Fold integer words into one 64-bit key (order sensitive)."""
    h = 0x6A09E667F3BCC908
    for w in words:
        h = _fmix64(h ^ _fmix64((int(w) * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03) & MASK64))
    return h


def float_word(x: float) -> int:
    """IEEE-754 bit pattern of ``x`` as an unsigned 64-bit integer."""
    return int(np.float64(x).view(np.uint64))


def generate_rows(params: ChannelParams, n: int, seeds) -> np.ndarray:
    """One block of ``n`` samples per seed, as a ``(len(seeds), n)`` array."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    keys = np.asarray(seeds, dtype=np.uint64)
    return kernels.generate(keys, int(n), params.mu, params.sigma, params.prior_q)


def generate_block(params: ChannelParams, n: int, seed: int) -> SampleBlock:
    """Draw ``n`` observables deterministically from ``seed``.

    Symbol ``k`` is +1 when the uniform drawn at counter ``2k`` falls below
    ``prior_q``; its noise is the inverse-normal transform of counter ``2k+1``.
    """
    seed = int(seed) & MASK64
    y = generate_rows(params, n, [seed])[0]
    return SampleBlock(y, seed=seed, truth=params)


def write_samples(path, block: SampleBlock) -> None:
    """Write one observable per line, truth metadata as ``# key=value`` comments."""
    lines = []
    if block.seed is not None:
        lines.append(f"# seed={block.seed}")
    if block.truth is not None:
        t = block.truth
        lines += [f"# mu={t.mu!r}", f"# sigma={t.sigma!r}", f"# prior_q={t.prior_q!r}"]
    lines += [repr(float(v)) for v in block.samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_samples(path) -> SampleBlock:
    """Parse the plain-text sample format written by :func:`write_samples`."""
    meta = {}
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].partition("=")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    if not values:
        raise ValueError(f"{path}: no observables found")
    truth = None
    if "mu" in meta and "sigma" in meta:
        truth = ChannelParams(
            float(meta["mu"]), float(meta["sigma"]), float(meta.get("prior_q", 0.5))
        )
    seed = int(meta["seed"]) if "seed" in meta else None
    return SampleBlock(np.array(values), seed=seed, truth=truth)
