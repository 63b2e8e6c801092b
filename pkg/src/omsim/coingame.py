"""One-round coin-flipping game with a hiding adversary.

k players each draw a value from their own finite distribution; a public
function f maps the (possibly partially hidden) value vector to a bit. The
adversary sees all values and may hide a bounded number of them to bias
the outcome. Exact oracles enumerate hiding subsets and outcome vectors;
Monte-Carlo variants cover larger games.

Hidden entries are passed to f as None; built-in outcome functions ignore
them, custom ones may interpret them however they like (f must be total).
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .engine import BudgetExceeded, ConfigError

UNBIASABLE = math.inf

UNIFORM_BIT = ((0, Fraction(1, 2)), (1, Fraction(1, 2)))


@dataclass(frozen=True)
class CoinGame:
    k: int
    f: object                       # callable: tuple (values or None) -> bit
    domains: tuple = ()             # per-player ((value, prob), ...); uniform bits if empty

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("need at least one player")
        if self.domains and len(self.domains) != self.k:
            raise ConfigError("domains must have length k")
        for dom in self.domains:
            if sum(Fraction(p) for _, p in dom) != 1:
                raise ConfigError("distribution not normalized")

    def domain(self, i):
        return self.domains[i] if self.domains else UNIFORM_BIT

    def outcomes(self):
        """Iterate (y, probability) over the full product space."""
        doms = [self.domain(i) for i in range(self.k)]
        for combo in itertools.product(*doms):
            y = tuple(v for v, _ in combo)
            pr = math.prod((Fraction(p) for _, p in combo), start=Fraction(1))
            yield y, pr


# --- built-in outcome functions ------------------------------------------

def majority_ties_zero(values):
    ones = sum(1 for v in values if v == 1)
    zeros = sum(1 for v in values if v == 0)
    return 1 if ones > zeros else 0


def parity(values):
    """Parity of the visible ones; hidden entries drop out."""
    return sum(1 for v in values if v == 1) % 2


def threshold(c):
    def fn(values):
        return 1 if sum(1 for v in values if v == 1) >= c else 0
    fn.__name__ = "threshold_%d" % c
    return fn


BUILTIN_F = {
    "majority": majority_ties_zero,
    "parity": parity,
}


# --- oracles --------------------------------------------------------------

def hide(y, subset):
    return tuple(None if i in subset else v for i, v in enumerate(y))


def min_hiding(game, y, v, cap=None, budget=20):
    """Exact minimum number of hidden players forcing f to v on y.

    Enumerates subsets by increasing size, lexicographic within a size;
    returns (size, witness) or (UNBIASABLE, None). `cap` bounds the subset
    size searched (UNBIASABLE then means "not within cap")."""
    k = game.k
    if k > budget:
        raise BudgetExceeded("k=%d exceeds enumeration budget %d" % (k, budget))
    top = k if cap is None else min(cap, k)
    idx = range(k)
    for size in range(0, top + 1):
        for H in itertools.combinations(idx, size):
            if game.f(hide(y, set(H))) == v:
                return size, H
    return UNBIASABLE, None


def bias_probability(game, v, B, mode="exact", trials=20000, seed=0, budget=20):
    """Pr over y that the adversary can force f to v hiding at most B
    players. Exact mode returns a Fraction; Monte-Carlo a float."""
    if mode == "exact":
        total = Fraction(0)
        for y, pr in game.outcomes():
            size, _ = min_hiding(game, y, v, cap=B, budget=budget)
            if size <= B:
                total += pr
        return total
    rng = np.random.default_rng(seed)
    hits = 0
    doms = [game.domain(i) for i in range(game.k)]
    values = [[val for val, _ in d] for d in doms]
    probs = [[float(p) for _, p in d] for d in doms]
    for _ in range(trials):
        y = tuple(values[i][rng.choice(len(values[i]), p=probs[i])]
                  for i in range(game.k))
        size, _ = min_hiding(game, y, v, cap=B, budget=budget)
        if size <= B:
            hits += 1
    return hits / trials


def hiding_budget(k, alpha, coeff=8.0, log_base=math.e):
    """The hiding allowance sufficient to bias with probability 1 - alpha."""
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    return math.ceil(coeff * math.sqrt(k * math.log(1 / alpha, log_base)))


@dataclass
class BiasReport:
    k: int
    alpha: float
    budget: int
    probability: dict = field(default_factory=dict)   # v -> Pr[biasable within budget]
    mode: str = "exact"

    def to_dict(self):
        return {"k": self.k, "alpha": self.alpha, "budget": self.budget,
                "mode": self.mode,
                "probability": {str(v): float(p) for v, p in self.probability.items()}}


def bias_report(game, alpha, coeff=8.0, log_base=math.e, mode="exact", **kw):
    B = hiding_budget(game.k, alpha, coeff=coeff, log_base=log_base)
    rep = BiasReport(k=game.k, alpha=alpha, budget=B, mode=mode)
    for v in (0, 1):
        rep.probability[v] = bias_probability(game, v, B, mode=mode, **kw)
    return rep


def anti_concentration_check(n, tau, trials=10 ** 6, seed=0):
    """Estimate Pr(X - n/2 >= tau * sqrt(n)) for X a sum of n fair bits and
    return it next to the analytic lower bound exp(-4(tau+1)^2)/sqrt(2*pi).
    The bound only claims validity for tau <= sqrt(n)/8."""
    if tau > math.sqrt(n) / 8:
        raise ConfigError("tau exceeds sqrt(n)/8")
    rng = np.random.default_rng(seed)
    x = rng.binomial(n, 0.5, size=trials)
    estimate = float(np.mean(x - n / 2 >= tau * math.sqrt(n)))
    bound = math.exp(-4 * (tau + 1) ** 2) / math.sqrt(2 * math.pi)
    return estimate, bound
