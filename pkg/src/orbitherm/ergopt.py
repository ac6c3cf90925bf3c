"""Ergodic optimization over periodic-orbit ensembles.

beta(phi) is bounded below by the best periodic average; beta_inf(phi) is
probed two ways: through the tilt curve t -> beta(phi - t psi) with psi > 0
vanishing at infinity, and through explicit cusp-escaping orbits p^n h.
"""
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FamilyError, InvalidSpecError, NotClosedGeodesicError
from .geometry import Kind, classify_isometry
from .potentials import Sampler, closed_geodesic_from_word, eval_on_samples
from .words import letter_key, parse_word, word_str

DEFAULT_MARGIN = 0.05


class Verdict(str, Enum):
    MAXIMIZER_EXPECTED = "MaximizerExpected"
    FULL_ESCAPE_EXPECTED = "FullEscapeExpected"
    INCONCLUSIVE = "Inconclusive"


TIE_TOL = 1e-12


def _tie_key(w):
    return (len(w), letter_key(w))


@dataclass
class BetaLower:
    value: float
    argmax_class: tuple
    per_length_maxima: list


def beta_lower(table, phi, n_max=None):
    """Best periodic average over classes of word length <= n_max.

    Ties go to the shortest, then lexicographically least, word."""
    n_max = n_max or table.n_max
    best, arg, per = -math.inf, None, []
    for n in range(table.n_min, n_max + 1):
        if not table.classes[n]:
            continue
        av = table.averages(phi, n)
        m = float(av.max())
        i = min(np.nonzero(av >= m - TIE_TOL)[0], key=lambda j: _tie_key(table.classes[n][j].word))
        per.append({"n": n, "max": m, "class": word_str(table.classes[n][i].word)})
        best = max(best, m)
    # a proper power repeats its root's average up to rounding: keep the root
    arg = min((parse_word(r["class"]) for r in per if r["max"] >= best - TIE_TOL), key=_tie_key, default=None)
    return BetaLower(best, arg, per)


@dataclass
class OrbitEnsemble:
    """Flat list of (word, period, integral of phi, integral of psi)."""
    words: list
    ell: np.ndarray
    iphi: np.ndarray
    ipsi: np.ndarray


def ensemble_from_table(table, phi, psi, n_max=None):
    n_max = n_max or table.n_max
    words, ell, a, b = [], [], [], []
    for n in range(table.n_min, n_max + 1):
        words += [c.word for c in table.classes[n]]
        ell.append(table.ell[n])
        a.append(table.integrals(phi, n))
        b.append(table.integrals(psi, n))
    return OrbitEnsemble(words, np.concatenate(ell), np.concatenate(a), np.concatenate(b))


def ensemble_from_words(words, group, phi, psi, sampler):
    ell, a, b = [], [], []
    for w in words:
        o = closed_geodesic_from_word(w, group, sampler.step, sampler.cap)
        ell.append(o.periods[0])
        a.append(math.fsum(o.qweights * eval_on_samples(phi, sampler, o.z0, o.z1)))
        b.append(math.fsum(o.qweights * eval_on_samples(psi, sampler, o.z0, o.z1)))
    return OrbitEnsemble(list(words), np.array(ell), np.array(a), np.array(b))


def merge_ensembles(*ens):
    return OrbitEnsemble(sum((e.words for e in ens), []), np.concatenate([e.ell for e in ens]),
                         np.concatenate([e.iphi for e in ens]), np.concatenate([e.ipsi for e in ens]))


@dataclass
class TiltCurve:
    t: list
    beta_tilted: list
    argmax: list
    plateau: float
    plateau_spread: float

    def rows(self):
        return [[t, b] for t, b in zip(self.t, self.beta_tilted)]


def tilted_beta_curve(ensemble, t_grid):
    """t -> max over the ensemble of (I_phi - t I_psi) / l."""
    if np.any(ensemble.ipsi <= 0):
        raise InvalidSpecError("tilt potential must be positive on every orbit")
    aphi = ensemble.iphi / ensemble.ell
    apsi = ensemble.ipsi / ensemble.ell
    ts, vals, args = [], [], []
    for t in t_grid:
        v = aphi - float(t) * apsi
        m = float(v.max())
        i = min(np.nonzero(v >= m - TIE_TOL)[0], key=lambda j: _tie_key(ensemble.words[j]))
        ts.append(float(t))
        vals.append(m)
        args.append(word_str(ensemble.words[i]))
    spread = abs(vals[-1] - vals[-2]) if len(vals) > 1 else 0.0
    return TiltCurve(ts, vals, args, vals[-1], spread)


def escaping_word(p, h, n):
    return tuple([p] * n + [h])


@dataclass
class EscapeFamily:
    n: list
    averages: list
    skipped: list = field(default_factory=list)


def escaping_family_averages(group, phi, n_list, p=1, h=2, sampler=None):
    """Orbit averages of phi along the closed geodesics of p^n h."""
    sampler = sampler or Sampler(group)
    gen_p = group.letter(p)
    if classify_isometry(gen_p).kind != Kind.PARABOLIC:
        raise FamilyError("escaping family needs a parabolic letter p")
    ns, avs, skipped = [], [], []
    for n in n_list:
        w = escaping_word(p, h, int(n))
        try:
            o = closed_geodesic_from_word(w, group, sampler.step, sampler.cap)
        except NotClosedGeodesicError as exc:
            skipped.append({"n": int(n), "reason": str(exc)})
            continue
        f = eval_on_samples(phi, sampler, o.z0, o.z1)
        ns.append(int(n))
        avs.append(math.fsum(o.qweights * f) / o.periods[0])
    if not ns:
        raise FamilyError("no hyperbolic member in the escaping family")
    return EscapeFamily(ns, avs, skipped)


@dataclass
class BetaReport:
    beta_lower: float
    argmax_class: str
    per_length_maxima: list
    beta_inf_estimate: float
    verdict: Verdict
    beta_inf_applicable: bool = True
    margin: float = DEFAULT_MARGIN

    def to_json(self):
        return {"beta_lower": self.beta_lower, "argmax_class": self.argmax_class,
                "per_length_maxima": self.per_length_maxima,
                "beta_inf_estimate": self.beta_inf_estimate,
                "beta_inf_applicable": self.beta_inf_applicable,
                "verdict": self.verdict.value, "margin": self.margin}


def decide(beta, beta_inf, family, margin):
    """Verdict as a pure function of the report numbers."""
    if beta_inf is None:
        return Verdict.MAXIMIZER_EXPECTED
    if beta_inf < beta - margin:
        return Verdict.MAXIMIZER_EXPECTED
    rising = family is not None and len(family.averages) >= 2 and family.averages[-1] > family.averages[0]
    if rising and beta_inf > beta - margin:
        return Verdict.FULL_ESCAPE_EXPECTED
    return Verdict.INCONCLUSIVE


def gap_test(table, phi, n_max=None, margin=DEFAULT_MARGIN, family_n=None, p=1, h=2):
    """Gap verdict.  Convex-cocompact groups have no vanishing sequences, so
    beta_inf is not applicable and a maximizer is expected.  In extended mode
    beta_inf is estimated by the last escaping-family average."""
    bl = beta_lower(table, phi, n_max)
    group = table.group
    if not getattr(group, "extended", False):
        return BetaReport(bl.value, word_str(bl.argmax_class), bl.per_length_maxima, None,
                          Verdict.MAXIMIZER_EXPECTED, False, margin)
    fam = escaping_family_averages(group, phi, family_n or [5, 10, 20, 30], p, h, table.sampler)
    est = fam.averages[-1]
    return BetaReport(bl.value, word_str(bl.argmax_class), bl.per_length_maxima, est,
                      decide(bl.value, est, fam, margin), True, margin)
