"""Entropy, Lyapunov exponents and the projected-measure dimension estimate.

Lyapunov exponents come from QR-renormalized random products averaged over
independent chains.  The renormalization cadence adapts to the letter
norms: the triangular factor's diagonal spread grows like the product of
letter norms, and once it passes 1/eps the two small exponents drown in
rounding, so the cadence keeps the per-block growth safely inside double
precision (large subsystem letters need renormalizing every few steps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BadVector, DegenerateSpectrum, DomainError
from .linalg import opnorm_fast
from .rng import make_rng
from .pressure import DimensionEstimate
from .projective import frame_for_plane, project_measure_samples
from .semigroup import SystemSpec, require_positive_like

LOG2 = math.log(2.0)


def shannon_entropy(p: Sequence) -> float:
    """``-sum p_i log p_i`` in nats; rejects non-probability vectors."""
    vals = [Fraction(x) if not isinstance(x, float) else x for x in p]
    if not vals:
        raise BadVector("empty probability vector")
    total = sum(vals)
    if isinstance(total, Fraction):
        if total != 1:
            raise BadVector("probabilities must sum to 1")
    elif abs(total - 1.0) > 1e-12:
        raise BadVector("probabilities must sum to 1")
    if any(x <= 0 for x in vals):
        raise BadVector("probabilities must be strictly positive")
    return -math.fsum(float(x) * math.log(float(x)) for x in vals)


@dataclass(frozen=True)
class LyapunovStats:
    chi1: float
    chi2: float
    chi3: float
    stderr1: float
    stderr2: float
    stderr3: float
    steps: int
    seed: object = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def chis(self) -> tuple[float, float, float]:
        return self.chi1, self.chi2, self.chi3

    @property
    def stderrs(self) -> tuple[float, float, float]:
        return self.stderr1, self.stderr2, self.stderr3


def _renorm_cadence(sys: SystemSpec) -> int:
    kappa = max(math.log(max(opnorm_fast(m), 1.0 + 1e-12)) for m in sys.letters_float)
    return max(1, min(20, int(16.0 / max(kappa, 1e-9))))


def lyapunov_exponents(sys: SystemSpec, steps: int, seed=0,
                       chains: int = 32) -> LyapunovStats:
    """Monte-Carlo Lyapunov spectrum with chain-wise standard errors."""
    if steps < 1000:
        raise DomainError("lyapunov_exponents needs steps >= 1000")
    k = len(sys)
    letters = sys.letters_float
    p = sys.probabilities_float
    cadence = _renorm_cadence(sys)
    rng = make_rng(seed)
    idx = rng.choice(k, size=(steps, chains), p=p)
    q = np.broadcast_to(np.eye(3), (chains, 3, 3)).copy()
    acc = np.zeros((chains, 3))
    for t in range(steps):
        q = letters[idx[t]] @ q
        if (t + 1) % cadence == 0:
            q, r = np.linalg.qr(q)
            acc += np.log(np.abs(np.diagonal(r, axis1=-2, axis2=-1)))
    q, r = np.linalg.qr(q)
    acc += np.log(np.abs(np.diagonal(r, axis1=-2, axis2=-1)))
    per = acc / steps
    chi = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(chains)
    return LyapunovStats(
        float(chi[0]), float(chi[1]), float(chi[2]),
        float(se[0]), float(se[1]), float(se[2]),
        steps=steps, seed=seed,
        diagnostics={"chains": chains, "renorm_cadence": cadence},
    )


def lyapunov_dimension(entropy: float, stats: LyapunovStats) -> float:
    """Dimension from entropy and the Lyapunov spectrum, clamped to [0, 2].

    Piecewise in the entropy: a ratio against the top gap up to dimension
    one, then one plus the excess against the full gap, saturating at two.
    """
    if entropy < 0:
        raise DomainError("entropy must be nonnegative")
    g12 = stats.chi1 - stats.chi2
    g13 = stats.chi1 - stats.chi3
    if g12 <= 0 or stats.chi2 - stats.chi3 <= 0:
        raise DegenerateSpectrum(f"need chi1 > chi2 > chi3, got {stats.chis}")
    if entropy <= g12:
        return min(2.0, entropy / g12)
    if entropy <= g12 + g13:
        return min(2.0, 1.0 + (entropy - g12) / g13)
    return 2.0


def furstenberg_plane_sample(sys: SystemSpec, steps: int, seed=0) -> np.ndarray:
    """One sample of the stationary plane, returned as a unit normal.

    Pushing a plane through the transposed letters moves its normal by the
    letter inverses, so the chain iterates ``n <- A^-1 n`` from a fixed
    initial plane and returns the terminal unit normal with a deterministic
    sign (largest coordinate positive).
    """
    if steps < 100:
        raise DomainError("furstenberg_plane_sample needs steps >= 100")
    inv = sys.letters_inverse_float
    rng = make_rng(seed)
    idx = rng.choice(len(sys), size=steps, p=sys.probabilities_float)
    n = np.array([0.0, -1.0, 1.0]) / math.sqrt(2.0)  # normal of span{e1, (1,1,1)}
    for t in idx:
        n = inv[t] @ n
        n /= np.linalg.norm(n)
    imax = int(np.argmax(np.abs(n)))
    return n if n[imax] > 0 else -n


def dyadic_entropy(samples, n: int) -> float:
    """Plug-in entropy of the sample histogram on cells of side ``2^-n``.

    Binning commutes with dyadic scaling exactly: scaling samples by
    ``2^k`` and evaluating at resolution ``n + k`` reproduces resolution
    ``n`` bit for bit.
    """
    vals = np.asarray(samples, dtype=float)
    if vals.size == 0:
        raise BadVector("dyadic_entropy needs samples")
    bins = np.floor(vals * (2.0 ** n)).astype(np.int64)
    _, counts = np.unique(bins, return_counts=True)
    qf = counts / counts.sum()
    return float(-(qf * np.log(qf)).sum())


def empirical_delta(sys: SystemSpec, planes: int = 32, samples: int = 100_000,
                    n: int = 12, seed=0, lyap_steps: int = 20_000) -> DimensionEstimate:
    """Monte-Carlo dimension of typical plane projections of the measure.

    For each sampled stationary plane the projected measure's entropy slope
    between resolutions ``n-4`` and ``n`` estimates the local dimension; the
    plane average is reported next to the theoretical target
    ``min(1, H / (chi1 - chi2))`` computed from the same run's exponents.
    """
    if n < 5:
        raise DomainError("resolution must be at least 5")
    require_positive_like(sys, "empirical_delta")
    stats = lyapunov_exponents(sys, lyap_steps, seed=(seed, 0xABCD))
    entropy = shannon_entropy(sys.probabilities)
    target = min(1.0, entropy / (stats.chi1 - stats.chi2))

    ests = []
    normals = []
    for w in range(planes):
        normal = furstenberg_plane_sample(sys, 300, seed=(seed, 1, w))
        frame = frame_for_plane(normal)
        vals = project_measure_samples(sys, frame, samples, seed=(seed, 2, w))
        est = (dyadic_entropy(vals, n) - dyadic_entropy(vals, n - 4)) / (4 * LOG2)
        ests.append(est)
        normals.append([float(x) for x in normal])
    value = float(np.mean(ests))
    spread = float(np.std(ests, ddof=1)) if planes > 1 else 0.0
    return DimensionEstimate(
        value=value,
        bracket_lo=value - spread,
        bracket_hi=value + spread,
        depth=n,
        method="empirical_entropy",
        diagnostics={
            "target": target,
            "entropy": entropy,
            "chi": list(stats.chis),
            "chi_stderr": list(stats.stderrs),
            "plane_estimates": ests,
            "plane_normals": normals,
            "planes": planes,
            "samples": samples,
        },
    )
