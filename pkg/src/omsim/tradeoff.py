"""Round-robin consensus trading rounds for randomness, t < n / 60.

Processes split into x super-processes of near-equal size. Phases run
round-robin: the current super-process runs the main protocol among its own
members, truncated right after its dissemination round, while everybody
else idles the published budget; the phase result (or a null marker for
the uninformed) then floods over a global sparse graph for a logarithmic
number of rounds. After all phases, one exchange of candidate bits and the
usual threshold test either decides outright or drops the stragglers into
the deterministic chain-flooding fallback.

Operative status here is governed solely by the flooding delivery rule;
whatever the truncated inner runs conclude about their private operative
flags stays inside them.
"""

from .engine import ConfigError, log2_ceil
from .consensus import main_core
from .fallback import run_fallback
from .graphs import GraphConfig, generate
from .groups import Instance, ProtoState
from .params import Constants


def split_super_processes(n, x):
    """x contiguous blocks covering 1..n, sizes within one of n // x."""
    base, extra = divmod(n, x)
    blocks = []
    at = 1
    for i in range(x):
        size = base + (1 if i < extra else 0)
        blocks.append(tuple(range(at, at + size)))
        at += size
    return [b for b in blocks if b]


class TradeoffConsensus:
    name = "tradeoff"

    def __init__(self, config, x=1, provenance=False):
        constants = config.params if config.params is not None else Constants()
        n, t = config.n, config.t
        if t * constants.tradeoff_fault_bound >= n:
            raise ConfigError(
                "fault bound violated: need t < n/%d, got t=%d n=%d"
                % (constants.tradeoff_fault_bound, t, n))
        if not 1 <= x <= n:
            raise ConfigError("x must be in [1, n]")
        self.config = config
        self.constants = constants
        self.x = x
        self.supers = split_super_processes(n, x)

        # each inner run is a private, untracked main-protocol instance on
        # its super-process, with the fault budget scaled to the block size
        self.inner = []
        for i, block in enumerate(self.supers, start=1):
            t_inner = max(0, min(t, len(block) // constants.main_fault_bound - 1))
            self.inner.append(Instance(block, t_inner, config.seed, constants,
                                       provenance=provenance, graph_tag=i,
                                       tracked=False))
        self.inner_rounds = [inst.epochs * inst.epoch_rounds + 1 for inst in self.inner]

        L = log2_ceil(n)
        self.flooding_rounds = max(1, int(-(-constants.flooding_coeff * L // 1)))
        self.delta = min(max(1, int(round(constants.delta_coeff * L))), n - 1)
        if n > 1:
            g = generate(GraphConfig(n=n, delta=self.delta,
                                     seed=(config.seed * 1000003) & (2 ** 63 - 1)))
            self.neighbors = {p: g.neighbors(p) for p in range(1, n + 1)}
        else:
            self.neighbors = {1: ()}

        self.phase_budgets = [r + self.flooding_rounds for r in self.inner_rounds]
        self.closed_form_T = sum(self.phase_budgets) + 3

    def meta(self):
        boundaries = []
        offset = 0
        phase_starts = []
        for inst, budget in zip(self.inner, self.phase_budgets):
            phase_starts.append(offset + 1)
            boundaries.extend(offset + e * inst.epoch_rounds
                              for e in range(1, inst.epochs + 1))
            offset += budget
        return {
            "protocol": self.name,
            "x": self.x,
            "super_sizes": [len(b) for b in self.supers],
            "phase_budgets": list(self.phase_budgets),
            "phase_starts": phase_starts,
            "flooding_rounds": self.flooding_rounds,
            "delta": self.delta,
            "epoch_boundaries": boundaries,
            "closed_form_T": self.closed_form_T,
        }

    def max_rounds(self):
        return self.closed_form_T + self.config.t + 8

    def run(self, ctx):
        ctx.state["operative"] = True
        ctx.state["b"] = ctx.input
        st = ProtoState(ctx.input)
        divisor = self.constants.inoperative_divisor
        active = list(self.neighbors[ctx.pid])
        # capped by the actual degree, as in the gossip delivery rule
        threshold = min(self.delta, len(active))

        for inst, inner_rounds in zip(self.inner, self.inner_rounds):
            if st.operative and ctx.pid in inst.member_set:
                ist = ProtoState(st.b)
                informed = yield from main_core(inst, ctx, ist)
                cd = ist.b if (ist.decided or informed) else None
            else:
                for _ in range(inner_rounds):
                    yield
                cd = None

            for _ in range(self.flooding_rounds):
                if not st.operative:
                    yield
                    continue
                ctx.broadcast(active, ("fl", cd), 0 if cd is None else 1)
                inbox = yield
                got = set()
                best = None   # lowest-sender non-null value
                for s, payload in inbox:
                    if payload[0] != "fl" or s in st.disregarded:
                        continue
                    got.add(s)
                    if payload[1] is not None and best is None:
                        best = (s, payload[1])
                if len(got) < len(active):
                    for q in active:
                        if q not in got:
                            st.disregarded.add(q)
                    active = [q for q in active if q in got]
                if best is not None:
                    if cd is None:
                        cd = best[1]
                    elif cd != best[1]:
                        # conflicting non-null decisions only show up in
                        # failure analyses; resolve by lowest carrier id
                        ctx.note("flood_conflict", True)
                        if best[0] < ctx.pid:
                            cd = best[1]
                if len(got) * divisor < threshold:
                    st.operative = False
                    ctx.mark_inoperative()
            if st.operative and cd is not None:
                st.b = cd
                ctx.state["b"] = st.b

        # safety rule: one exchange of candidate bits among the operative
        others = [q for q in range(1, ctx.n + 1) if q != ctx.pid]
        if st.operative:
            ctx.broadcast(others, ("sv", st.b), 1)
        inbox = yield
        decided = False
        if st.operative:
            ones = sum(1 for _, pl in inbox if pl[0] == "sv" and pl[1] == 1)
            zeros = sum(1 for _, pl in inbox if pl[0] == "sv" and pl[1] == 0)
            total = ones + zeros
            if total:
                c = self.constants
                if ones * c.set_one[1] > c.set_one[0] * total:
                    st.b = 1
                elif ones * c.set_zero[1] < c.set_zero[0] * total:
                    st.b = 0
                decided = (ones * c.decide_hi[1] > c.decide_hi[0] * total
                           or ones * c.decide_lo[1] < c.decide_lo[0] * total)
                ctx.state["b"] = st.b
                ctx.state["decided"] = decided

        if st.operative and decided:
            ctx.broadcast(others, ("dv", st.b), 1)
        inbox = yield
        informed = False
        if not decided:
            for s, payload in inbox:
                if payload[0] == "dv":
                    st.b = payload[1]
                    informed = True
                    break
        if decided:
            ctx.decide(st.b)
            return
        if not st.operative:
            if informed:
                ctx.decide(st.b)
                return
            for _ in range(self.config.t + 3):
                inbox = yield
                for s, payload in inbox:
                    if payload[0] == "fd":
                        ctx.decide(payload[1])
                        return
            return

        ctx.note("fallback", True)
        value = yield from run_fallback(ctx, st.b, self.config.t, others)
        ctx.broadcast(others, ("fd", value), 1)
        ctx.decide(value)
