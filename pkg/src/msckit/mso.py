"""
Monadic second-order logic over finite MSCs, evaluated by brute force.

Formulas are built from event relations (process successor, message
matching), label tests, equality, set membership, boolean connectives,
and first/second-order quantification.  Transitive closures of definable
binary relations are first-class: by default they are interpreted
natively as graph closure, and a ``subset`` evaluation mode replaces
every closure atom by its second-order encoding (forward-closed sets)
for cross-validation.  Second-order quantification iterates all event
subsets, so formulas containing it are guarded by a configurable event
cap.

ASCII surface syntax (see :func:`parse_formula`):

    ~E x. (send(x) & ~matched(x))          no unmatched send events
    E x. mbp(x, x)                          a mailbox-order cycle
    A x. A y. x -> y => x < y               successors are ordered

Quantifiers are `E`/`A`; a variable starting with an uppercase letter is
second-order.  Infix atoms: `x -> y`, `x ->+ y`, `x ->* y`, `x = y`,
`x != y`, `x <= y`, `x < y` (happens-before), `x in X`.  Connectives
`~ & | => <=>`.  Named relation atoms take two arguments and accept a
closure suffix, e.g. `mb(x,y)`, `bowtie+(x,y)`, `prox*(x,y)`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations

from . import relations
from .classify import crown_digraph
from .core import Action, Msc, MscError, recv, require_valid, send

DEFAULT_SO_LIMIT = 12


class MsoSyntaxError(MscError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"at position {pos}: {message}")
        self.pos = pos


class SoLimitError(MscError):
    pass


# -- abstract syntax ----------------------------------------------------------


class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True, slots=True)
class NotF(Formula):
    body: Formula


@dataclass(frozen=True, slots=True)
class OrF(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class AndF(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class ImpliesF(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class IffF(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class ExistsF(Formula):
    var: str
    second_order: bool
    body: Formula


@dataclass(frozen=True, slots=True)
class ForallF(Formula):
    var: str
    second_order: bool
    body: Formula


@dataclass(frozen=True, slots=True)
class EqF(Formula):
    left: str
    right: str


@dataclass(frozen=True, slots=True)
class InF(Formula):
    element: str
    setvar: str


@dataclass(frozen=True, slots=True)
class LabelF(Formula):
    var: str
    action: Action


@dataclass(frozen=True, slots=True)
class PredF(Formula):
    """Finite label disjunctions kept primitive: send/recv tests and the
    same-channel / same-endpoint guards used by the model formulas."""

    name: str
    args: tuple[str, ...]


class RelExpr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class PrimRel(RelExpr):
    name: str  # succ | msg


@dataclass(frozen=True, slots=True)
class NamedRel(RelExpr):
    """Relation computed by the relations module (fast path)."""

    name: str
    k: int | None = None


@dataclass(frozen=True, slots=True)
class DefRel(RelExpr):
    """Binary relation defined by a formula with two marked free variables."""

    xvar: str
    yvar: str
    body: Formula


@dataclass(frozen=True, slots=True)
class UnionRel(RelExpr):
    parts: tuple[RelExpr, ...]


@dataclass(frozen=True, slots=True)
class ClosureRel(RelExpr):
    inner: RelExpr
    reflexive: bool


@dataclass(frozen=True, slots=True)
class RelF(Formula):
    rel: RelExpr
    left: str
    right: str


# -- free variables -----------------------------------------------------------


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, TrueF):
        return frozenset()
    if isinstance(f, NotF):
        return free_vars(f.body)
    if isinstance(f, (OrF, AndF, ImpliesF, IffF)):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (ExistsF, ForallF)):
        return free_vars(f.body) - {f.var}
    if isinstance(f, EqF):
        return frozenset((f.left, f.right))
    if isinstance(f, InF):
        return frozenset((f.element, f.setvar))
    if isinstance(f, LabelF):
        return frozenset((f.var,))
    if isinstance(f, PredF):
        return frozenset(f.args)
    if isinstance(f, RelF):
        return rel_free_vars(f.rel) | {f.left, f.right}
    raise TypeError(f"unknown formula node {f!r}")


def rel_free_vars(r: RelExpr) -> frozenset[str]:
    if isinstance(r, (PrimRel, NamedRel)):
        return frozenset()
    if isinstance(r, DefRel):
        return free_vars(r.body) - {r.xvar, r.yvar}
    if isinstance(r, UnionRel):
        out: frozenset[str] = frozenset()
        for p in r.parts:
            out |= rel_free_vars(p)
        return out
    if isinstance(r, ClosureRel):
        return rel_free_vars(r.inner)
    raise TypeError(f"unknown relation node {r!r}")


def _has_so(f: Formula) -> bool:
    if isinstance(f, (ExistsF, ForallF)):
        return f.second_order or _has_so(f.body)
    if isinstance(f, NotF):
        return _has_so(f.body)
    if isinstance(f, (OrF, AndF, ImpliesF, IffF)):
        return _has_so(f.left) or _has_so(f.right)
    if isinstance(f, RelF):
        return _rel_has_so(f.rel)
    return False


def _rel_has_so(r: RelExpr) -> bool:
    if isinstance(r, DefRel):
        return _has_so(r.body)
    if isinstance(r, UnionRel):
        return any(_rel_has_so(p) for p in r.parts)
    if isinstance(r, ClosureRel):
        return _rel_has_so(r.inner)
    return False


def _has_closure(f: Formula) -> bool:
    if isinstance(f, NotF):
        return _has_closure(f.body)
    if isinstance(f, (OrF, AndF, ImpliesF, IffF)):
        return _has_closure(f.left) or _has_closure(f.right)
    if isinstance(f, (ExistsF, ForallF)):
        return _has_closure(f.body)
    if isinstance(f, RelF):
        return _rel_closed(f.rel)
    return False


def _rel_closed(r: RelExpr) -> bool:
    if isinstance(r, ClosureRel):
        return True
    if isinstance(r, UnionRel):
        return any(_rel_closed(p) for p in r.parts)
    if isinstance(r, DefRel):
        return _has_closure(r.body)
    return False


# -- evaluation ----------------------------------------------------------------


class Evaluator:
    def __init__(self, msc: Msc, so_limit: int = DEFAULT_SO_LIMIT, closure_mode: str = "native"):
        if closure_mode not in ("native", "subset"):
            raise ValueError(f"unknown closure mode {closure_mode!r}")
        require_valid(msc)
        self.msc = msc
        self.events = list(msc.events)
        self.so_limit = so_limit
        self.closure_mode = closure_mode
        self._named: dict[tuple[str, int | None], frozenset[tuple[int, int]]] = {}
        self._materialized: dict[tuple, frozenset[tuple[int, int]]] = {}

    # named relations delegate to the relations module
    def named_edges(self, name: str, k: int | None) -> frozenset[tuple[int, int]]:
        key = (name, k)
        if key not in self._named:
            msc = self.msc
            if name == "mb":
                edges = relations.mb_rel(msc).edges
            elif name == "onen":
                edges = relations.onen_rel(msc).edges
            elif name == "bowtie":
                edges = relations.nn_bowtie(msc).edges
            elif name == "nnrel":
                edges = relations.nn_rel(msc).edges
            elif name == "mbp":
                edges = relations.mb_partial(msc).edges
            elif name == "onenp":
                edges = relations.onen_partial(msc).edges
            elif name == "relb":
                edges = relations.relb(msc, k or 1).edges
            elif name == "relbasy":
                edges = relations.relb_asy(msc, k or 1).edges
            elif name == "prox":
                edges = crown_digraph(msc).edges
            else:
                raise MscError(f"unknown named relation {name!r}")
            self._named[key] = edges
        return self._named[key]

    def check(self, formula: Formula, env: dict | None = None) -> bool:
        env = dict(env or {})
        missing = free_vars(formula) - set(env)
        if missing:
            raise MscError(f"unassigned free variables: {sorted(missing)}")
        if _has_so(formula) or (self.closure_mode == "subset" and _has_closure(formula)):
            if len(self.events) > self.so_limit:
                raise SoLimitError(
                    f"{len(self.events)} events exceed the second-order cap {self.so_limit}"
                )
        return self._eval(formula, env)

    def _eval(self, f: Formula, env: dict) -> bool:
        if isinstance(f, TrueF):
            return True
        if isinstance(f, NotF):
            return not self._eval(f.body, env)
        if isinstance(f, OrF):
            return self._eval(f.left, env) or self._eval(f.right, env)
        if isinstance(f, AndF):
            return self._eval(f.left, env) and self._eval(f.right, env)
        if isinstance(f, ImpliesF):
            return (not self._eval(f.left, env)) or self._eval(f.right, env)
        if isinstance(f, IffF):
            return self._eval(f.left, env) == self._eval(f.right, env)
        if isinstance(f, ExistsF):
            return self._quant(f.var, f.second_order, f.body, env, any_of=True)
        if isinstance(f, ForallF):
            return self._quant(f.var, f.second_order, f.body, env, any_of=False)
        if isinstance(f, EqF):
            return env[f.left] == env[f.right]
        if isinstance(f, InF):
            return env[f.element] in env[f.setvar]
        if isinstance(f, LabelF):
            return self.msc.labels[env[f.var]] == f.action
        if isinstance(f, PredF):
            return self._pred(f, env)
        if isinstance(f, RelF):
            return self._rel_holds(f.rel, env[f.left], env[f.right], env)
        raise TypeError(f"unknown formula node {f!r}")

    def _quant(self, var: str, second_order: bool, body: Formula, env: dict, any_of: bool) -> bool:
        saved = env.get(var, _MISSING)
        try:
            if second_order:
                domain = self._subsets()
            else:
                domain = self.events
            for value in domain:
                env[var] = value
                result = self._eval(body, env)
                if result == any_of:
                    return any_of
            return not any_of
        finally:
            if saved is _MISSING:
                env.pop(var, None)
            else:
                env[var] = saved

    def _subsets(self):
        for size in range(len(self.events) + 1):
            for combo in combinations(self.events, size):
                yield frozenset(combo)

    def _pred(self, f: PredF, env: dict) -> bool:
        labels = [self.msc.labels[env[v]] for v in f.args]
        name = f.name
        if name == "send":
            return labels[0].is_send
        if name == "recv":
            return not labels[0].is_send
        a, b = labels
        if name == "both_sends":
            return a.is_send and b.is_send
        if name == "both_receives":
            return not a.is_send and not b.is_send
        if name == "same_channel_sends":
            return a.is_send and b.is_send and a.channel == b.channel
        if name == "same_receiver_sends":
            return a.is_send and b.is_send and a.receiver == b.receiver
        if name == "same_sender_sends":
            return a.is_send and b.is_send and a.sender == b.sender
        if name == "same_sender_receives":
            return not a.is_send and not b.is_send and a.sender == b.sender
        raise MscError(f"unknown predicate {name!r}")

    # -- binary relations ------------------------------------------------

    def _rel_holds(self, r: RelExpr, e1: int, e2: int, env: dict) -> bool:
        if isinstance(r, PrimRel):
            if r.name == "succ":
                return (e1, e2) in self.msc.succ_edges
            return (e1, e2) in self.msc.msg_edges
        if isinstance(r, NamedRel):
            return (e1, e2) in self.named_edges(r.name, r.k)
        if isinstance(r, DefRel):
            savedx = env.get(r.xvar, _MISSING)
            savedy = env.get(r.yvar, _MISSING)
            env[r.xvar], env[r.yvar] = e1, e2
            try:
                return self._eval(r.body, env)
            finally:
                for var, saved in ((r.xvar, savedx), (r.yvar, savedy)):
                    if saved is _MISSING:
                        env.pop(var, None)
                    else:
                        env[var] = saved
        if isinstance(r, UnionRel):
            return any(self._rel_holds(p, e1, e2, env) for p in r.parts)
        if isinstance(r, ClosureRel):
            if self.closure_mode == "subset":
                return self._closure_by_subsets(r, e1, e2, env)
            return (e1, e2) in self._closure_edges(r, env)
        raise TypeError(f"unknown relation node {r!r}")

    def _env_signature(self, r: RelExpr, env: dict) -> tuple:
        fv = sorted(rel_free_vars(r))
        return tuple((v, env[v]) for v in fv)

    def _edges_of(self, r: RelExpr, env: dict) -> frozenset[tuple[int, int]]:
        key = (r, self._env_signature(r, env))
        if key not in self._materialized:
            edges = frozenset(
                (a, b)
                for a in self.events
                for b in self.events
                if self._rel_holds(r, a, b, env)
            )
            self._materialized[key] = edges
        return self._materialized[key]

    def _closure_edges(self, r: ClosureRel, env: dict) -> frozenset[tuple[int, int]]:
        key = (r, self._env_signature(r, env))
        if key not in self._materialized:
            base = self._edges_of(r.inner, env)
            from .core import RelationGraph

            closed = relations.transitive_closure(
                RelationGraph.of(self.events, base), reflexive=r.reflexive
            ).edges
            self._materialized[key] = closed
        return self._materialized[key]

    def _closure_by_subsets(self, r: ClosureRel, e1: int, e2: int, env: dict) -> bool:
        """The second-order encoding: e2 belongs to every forward-closed
        set that contains e1 (reflexive case) or all successors reached
        from e1 (strict case)."""
        edges = self._edges_of(r.inner, env)
        for X in self._subsets():
            if r.reflexive:
                if e1 not in X:
                    continue
                closed = all(t in X for (z, t) in edges if z in X)
            else:
                closed = all(t in X for (z, t) in edges if z in X or z == e1)
            if closed and e2 not in X:
                return False
        return True


class _Missing:
    pass


_MISSING = _Missing()


def evaluate(
    msc: Msc,
    formula: Formula,
    env: dict | None = None,
    so_limit: int = DEFAULT_SO_LIMIT,
    closure_mode: str = "native",
) -> bool:
    """Satisfaction of `formula` on `msc` under `env` (which must cover
    all free variables)."""
    return Evaluator(msc, so_limit=so_limit, closure_mode=closure_mode).check(formula, env)


# -- formula construction helpers ----------------------------------------------

SUCC = PrimRel("succ")
MSG = PrimRel("msg")
HB = ClosureRel(UnionRel((SUCC, MSG)), reflexive=True)
HB_STRICT = ClosureRel(UnionRel((SUCC, MSG)), reflexive=False)

_fresh_counter = 0


def _fresh(prefix: str = "v") -> str:
    global _fresh_counter
    _fresh_counter += 1
    return f"_{prefix}{_fresh_counter}"


def matched_f(x: str) -> Formula:
    y = _fresh("m")
    return ExistsF(y, False, RelF(MSG, x, y))


def _exists(names: list[str], body: Formula) -> Formula:
    for n in reversed(names):
        body = ExistsF(n, False, body)
    return body


def _and(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = AndF(out, f)
    return out


def _or(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = OrF(out, f)
    return out


def no_unmatched_f() -> Formula:
    x = _fresh("u")
    return NotF(ExistsF(x, False, AndF(PredF("send", (x,)), NotF(matched_f(x)))))


def _receives_reversed(s1: str, s2: str) -> Formula:
    """Both matched with receives in the opposite order."""
    r1, r2 = _fresh("r"), _fresh("r")
    return _exists(
        [r1, r2],
        _and(
            RelF(MSG, s1, r1),
            RelF(MSG, s2, r2),
            RelF(ClosureRel(SUCC, False), r2, r1),
        ),
    )


def _first_unmatched(s1: str, s2: str) -> Formula:
    return AndF(NotF(matched_f(s1)), matched_f(s2))


def mb_edge_rel() -> DefRel:
    x, y = "_mbx", "_mby"
    x2, y2 = _fresh("x"), _fresh("y")
    ordered = _exists(
        [x2, y2],
        _and(RelF(MSG, x, x2), RelF(MSG, y, y2), RelF(ClosureRel(SUCC, False), x2, y2)),
    )
    body = AndF(
        PredF("same_receiver_sends", (x, y)),
        OrF(AndF(matched_f(x), NotF(matched_f(y))), ordered),
    )
    return DefRel(x, y, body)


def onen_edge_rel() -> DefRel:
    x, y = "_onx", "_ony"
    x2, y2 = _fresh("x"), _fresh("y")
    first = _and(PredF("same_sender_sends", (x, y)), matched_f(x), NotF(matched_f(y)))
    second = AndF(
        PredF("same_sender_receives", (x, y)),
        _exists(
            [x2, y2],
            _and(RelF(MSG, x2, x), RelF(MSG, y2, y), RelF(ClosureRel(SUCC, False), x2, y2)),
        ),
    )
    return DefRel(x, y, OrF(first, second))


def nn_rel_expr() -> ClosureRel:
    return ClosureRel(UnionRel((SUCC, MSG, mb_edge_rel(), onen_edge_rel())), reflexive=False)


def bowtie_rel() -> DefRel:
    x, y = "_btx", "_bty"
    nn = nn_rel_expr()
    x2, y2 = _fresh("x"), _fresh("y")
    psi3 = _and(
        PredF("both_receives", (x, y)),
        _exists(
            [x2, y2],
            _and(RelF(MSG, x2, x), RelF(MSG, y2, y), RelF(nn, x2, y2)),
        ),
        NotF(RelF(nn, x, y)),
    )
    x3, y3 = _fresh("x"), _fresh("y")
    psi4 = _and(
        PredF("both_sends", (x, y)),
        _exists(
            [x3, y3],
            _and(RelF(MSG, x, x3), RelF(MSG, y, y3), RelF(nn, x3, y3)),
        ),
        NotF(RelF(nn, x, y)),
    )
    rule4 = _and(PredF("both_sends", (x, y)), matched_f(x), NotF(matched_f(y)))
    return DefRel(x, y, _or(RelF(nn, x, y), rule4, psi3, psi4))


def prox_rel() -> DefRel:
    """One message sent strictly before another is received; chains of
    this relation closing into a cycle are crowns."""
    x, y = "_pxx", "_pxy"
    r2 = _fresh("r")
    body = _and(
        PredF("send", (x,)),
        NotF(EqF(x, y)),
        ExistsF(r2, False, AndF(RelF(HB_STRICT, x, r2), RelF(MSG, y, r2))),
    )
    return DefRel(x, y, body)


def builtin(model: str, delegated: bool = False) -> Formula:
    """The defining formula of a model class.

    With ``delegated=True`` the auxiliary orderings appear as named
    atoms computed by the relations module; by default they are spelled
    out as defined sub-formulas, mirroring their definitions.
    """
    if model == "asy":
        return TrueF()
    if model == "p2p":
        s1, s2 = _fresh("s"), _fresh("s")
        return NotF(
            _exists(
                [s1, s2],
                _and(
                    PredF("same_channel_sends", (s1, s2)),
                    RelF(ClosureRel(SUCC, False), s1, s2),
                    OrF(_receives_reversed(s1, s2), _first_unmatched(s1, s2)),
                ),
            )
        )
    if model == "co":
        s1, s2 = _fresh("s"), _fresh("s")
        return NotF(
            _exists(
                [s1, s2],
                _and(
                    PredF("same_receiver_sends", (s1, s2)),
                    RelF(HB, s1, s2),
                    OrF(_receives_reversed(s1, s2), _first_unmatched(s1, s2)),
                ),
            )
        )
    if model == "mb":
        x = _fresh("x")
        rel = (
            ClosureRel(UnionRel((SUCC, MSG, NamedRel("mb"))), False)
            if delegated
            else ClosureRel(UnionRel((SUCC, MSG, mb_edge_rel())), False)
        )
        return NotF(ExistsF(x, False, RelF(rel, x, x)))
    if model == "onen":
        x = _fresh("x")
        rel = (
            ClosureRel(UnionRel((SUCC, MSG, NamedRel("onen"))), False)
            if delegated
            else ClosureRel(UnionRel((SUCC, MSG, onen_edge_rel())), False)
        )
        return NotF(ExistsF(x, False, RelF(rel, x, x)))
    if model == "nn":
        x = _fresh("x")
        rel = (
            ClosureRel(NamedRel("bowtie"), False)
            if delegated
            else ClosureRel(bowtie_rel(), False)
        )
        return NotF(ExistsF(x, False, RelF(rel, x, x)))
    if model == "rsc":
        s1, s2 = _fresh("s"), _fresh("s")
        prox = NamedRel("prox") if delegated else prox_rel()
        crown = _exists(
            [s1, s2],
            AndF(RelF(prox, s1, s2), RelF(ClosureRel(prox, True), s2, s1)),
        )
        # the class additionally forbids unmatched sends; a lone
        # unmatched send forms no crown, so the conjunct is not redundant
        return AndF(no_unmatched_f(), NotF(crown))
    raise ValueError(f"unknown model {model!r}")


def relb_rel(k: int) -> DefRel:
    """Under FIFO channels: the i-th receive must precede the (i+k)-th
    send of its channel.  Expressed with k chained same-channel sends."""
    x, y = f"_rbx{k}", f"_rby{k}"
    if k == 0:
        return DefRel(x, y, RelF(MSG, y, x))
    ss = [_fresh("s") for _ in range(k)]
    chain = []
    hops = ss + [y]
    for a, b in zip(hops, hops[1:]):
        chain.append(RelF(ClosureRel(SUCC, False), a, b))
        chain.append(PredF("same_channel_sends", (a, b)))
    body = _exists(ss, _and(*chain, RelF(MSG, ss[0], x)))
    return DefRel(x, y, body)


def relb_asy_rel(k: int) -> DefRel:
    """k+1 chained same-channel sends, one of them matched, whose first
    receive is the left endpoint."""
    x, y = f"_rax{k}", f"_ray{k}"
    ss = [_fresh("s") for _ in range(k)]
    hops = ss + [y]
    parts: list[Formula] = []
    for a, b in zip(hops, hops[1:]):
        parts.append(RelF(ClosureRel(SUCC, False), a, b))
        parts.append(PredF("same_channel_sends", (a, b)))
    if k == 0:
        parts.append(PredF("send", (y,)))
    hits = [RelF(MSG, e, x) for e in hops]
    parts.append(_or(*hits))
    for e in hops:
        f = _fresh("f")
        parts.append(
            ImpliesF(
                matched_f(e),
                ExistsF(
                    f, False, AndF(RelF(MSG, e, f), RelF(ClosureRel(SUCC, True), x, f))
                ),
            )
        )
    return DefRel(x, y, _exists(ss, _and(*parts)))


def _all_unmatched_chain(k: int) -> Formula:
    """k+1 chained same-channel sends, all unmatched."""
    ss = [_fresh("s") for _ in range(k + 1)]
    parts: list[Formula] = []
    for a, b in zip(ss, ss[1:]):
        parts.append(RelF(ClosureRel(SUCC, False), a, b))
        parts.append(PredF("same_channel_sends", (a, b)))
    if k == 0:
        parts.append(PredF("send", (ss[0],)))
    for s in ss:
        parts.append(NotF(matched_f(s)))
    return _exists(ss, _and(*parts))


def builtin_bounded(model: str, k: int, universal: bool = False) -> Formula:
    """Formulas for existential/universal k-boundedness per model; the
    model membership formula is conjoined so the result is meaningful on
    arbitrary MSCs."""
    x = _fresh("x")
    if model == "asy":
        ra = relb_asy_rel(k)
        cap = NotF(_all_unmatched_chain(k))
        if universal:
            r, s = _fresh("r"), _fresh("s")
            incl = NotF(_exists([r, s], AndF(RelF(ra, r, s), NotF(RelF(HB, r, s)))))
            return AndF(incl, cap)
        acyclic = NotF(
            ExistsF(x, False, RelF(ClosureRel(UnionRel((SUCC, MSG, ra)), False), x, x))
        )
        return AndF(acyclic, cap)

    member = builtin(model)
    rb = relb_rel(k)
    cap = NotF(_all_unmatched_chain(k))
    if model in ("p2p", "co"):
        schedule: RelExpr = UnionRel((SUCC, MSG))
        witness: RelExpr = HB
    elif model == "mb":
        schedule = UnionRel((SUCC, MSG, mb_edge_rel()))
        witness = ClosureRel(schedule, True)
    elif model == "onen":
        schedule = UnionRel((SUCC, MSG, onen_edge_rel()))
        witness = ClosureRel(schedule, True)
    elif model == "nn":
        schedule = bowtie_rel()
        witness = ClosureRel(schedule, False)
    else:
        raise ValueError(f"unknown model {model!r}")
    if universal:
        r, s = _fresh("r"), _fresh("s")
        incl = NotF(_exists([r, s], AndF(RelF(rb, r, s), NotF(RelF(witness, r, s)))))
        return _and(member, incl, cap)
    acyclic = NotF(
        ExistsF(x, False, RelF(ClosureRel(UnionRel((schedule, rb)), False), x, x))
    )
    return _and(member, acyclic, cap)


# -- parser --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<iff><=>)
  | (?P<implies>=>)
  | (?P<arrowplus>->\+)
  | (?P<arrowstar>->\*)
  | (?P<arrow>->)
  | (?P<le><=)
  | (?P<lt><)
  | (?P<neq>!=)
  | (?P<eq>=)
  | (?P<not>~)
  | (?P<and>&)
  | (?P<or>\|)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<dot>\.)
  | (?P<comma>,)
  | (?P<plus>\+)
  | (?P<star>\*)
  | (?P<bang>!)
  | (?P<quest>\?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_NAMED_RELS = ("mb", "onen", "bowtie", "nnrel", "mbp", "onenp", "prox")
_PRED_ALIASES = {
    "samechan": "same_channel_sends",
    "samerecv": "same_receiver_sends",
    "samesender": "same_sender_sends",
    "recvsamesender": "same_sender_receives",
    "bothsends": "both_sends",
    "bothrecvs": "both_receives",
}
_BUILTIN_NAMES = {
    "phi_asy": "asy",
    "phi_pp": "p2p",
    "phi_co": "co",
    "phi_mb": "mb",
    "phi_1n": "onen",
    "phi_nn": "nn",
    "phi_rsc": "rsc",
}


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise MsoSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup or ""
        if kind != "ws":
            out.append(_Token(kind, m.group(), i))
        i = m.end()
    out.append(_Token("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise MsoSyntaxError(f"expected {kind}, found {tok.text!r}", tok.pos)
        return tok

    def parse(self) -> Formula:
        f = self.formula()
        tok = self.peek()
        if tok.kind != "eof":
            raise MsoSyntaxError(f"trailing input {tok.text!r}", tok.pos)
        return f

    def formula(self) -> Formula:
        left = self.implication()
        while self.peek().kind == "iff":
            self.next()
            left = IffF(left, self.implication())
        return left

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "implies":
            self.next()
            return ImpliesF(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek().kind == "or":
            self.next()
            left = OrF(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek().kind == "and":
            self.next()
            left = AndF(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "not":
            self.next()
            return NotF(self.unary())
        if tok.kind == "name" and tok.text in ("E", "A") and self.peek(1).kind == "name":
            # quantifier if followed by `var .`
            if self.peek(2).kind == "dot":
                self.next()
                var = self.next().text
                self.next()  # dot
                body = self.formula()
                second = var[0].isupper()
                return ExistsF(var, second, body) if tok.text == "E" else ForallF(var, second, body)
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "lpar":
            self.next()
            f = self.formula()
            self.expect("rpar")
            return f
        if tok.kind != "name":
            raise MsoSyntaxError(f"expected an atom, found {tok.text!r}", tok.pos)
        name = tok.text
        if name == "true":
            self.next()
            return TrueF()
        if name == "false":
            self.next()
            return NotF(TrueF())
        if name in _BUILTIN_NAMES:
            self.next()
            return builtin(_BUILTIN_NAMES[name])
        if self._call_ahead():
            return self.call()
        return self.infix_atom()

    def _call_ahead(self) -> bool:
        nxt = self.peek(1)
        if nxt.kind == "lpar":
            return True
        return nxt.kind in ("plus", "star") and self.peek(2).kind == "lpar"

    def call(self) -> Formula:
        name_tok = self.expect("name")
        name = name_tok.text
        closure = None
        if self.peek().kind in ("plus", "star"):
            closure = self.next().kind
        self.expect("lpar")
        args = [self.expect("name").text]
        while self.peek().kind == "comma":
            self.next()
            args.append(self.expect("name").text)
        self.expect("rpar")

        if name == "label":
            if closure or len(args) != 1:
                raise MsoSyntaxError("label takes one variable", name_tok.pos)
            self.expect("eq")
            return LabelF(args[0], self.action_literal())
        if name == "matched":
            if closure or len(args) != 1:
                raise MsoSyntaxError("matched takes one variable", name_tok.pos)
            return matched_f(args[0])
        if name == "unmatched":
            if closure or len(args) != 1:
                raise MsoSyntaxError("unmatched takes one variable", name_tok.pos)
            return AndF(PredF("send", (args[0],)), NotF(matched_f(args[0])))
        if name in ("send", "recv"):
            if closure or len(args) != 1:
                raise MsoSyntaxError(f"{name} takes one variable", name_tok.pos)
            return PredF(name, tuple(args))
        if name in _PRED_ALIASES:
            if closure or len(args) != 2:
                raise MsoSyntaxError(f"{name} takes two variables", name_tok.pos)
            return PredF(_PRED_ALIASES[name], tuple(args))
        if len(args) != 2:
            raise MsoSyntaxError(f"relation {name} takes two variables", name_tok.pos)
        rel = self._rel_by_name(name, name_tok.pos)
        if closure:
            rel = ClosureRel(rel, reflexive=(closure == "star"))
        return RelF(rel, args[0], args[1])

    def _rel_by_name(self, name: str, pos: int) -> RelExpr:
        if name == "msg":
            return MSG
        if name == "succ":
            return SUCC
        if name in _NAMED_RELS:
            return NamedRel(name)
        m = re.fullmatch(r"(relb|relbasy)(\d+)", name)
        if m:
            return NamedRel(m.group(1), int(m.group(2)))
        raise MsoSyntaxError(f"unknown relation {name!r}", pos)

    def action_literal(self) -> Action:
        tok = self.next()
        if tok.kind not in ("bang", "quest"):
            raise MsoSyntaxError("expected an action literal !(p,q,m) or ?(p,q,m)", tok.pos)
        self.expect("lpar")
        p = self.expect("name").text
        self.expect("comma")
        q = self.expect("name").text
        self.expect("comma")
        m = self.expect("name").text
        self.expect("rpar")
        return send(p, q, m) if tok.kind == "bang" else recv(p, q, m)

    def infix_atom(self) -> Formula:
        left = self.expect("name").text
        op = self.next()
        if op.kind == "arrow":
            return RelF(SUCC, left, self.expect("name").text)
        if op.kind == "arrowplus":
            return RelF(ClosureRel(SUCC, False), left, self.expect("name").text)
        if op.kind == "arrowstar":
            return RelF(ClosureRel(SUCC, True), left, self.expect("name").text)
        if op.kind == "le":
            return RelF(HB, left, self.expect("name").text)
        if op.kind == "lt":
            return RelF(HB_STRICT, left, self.expect("name").text)
        if op.kind == "eq":
            return EqF(left, self.expect("name").text)
        if op.kind == "neq":
            return NotF(EqF(left, self.expect("name").text))
        if op.kind == "name" and op.text == "in":
            return InF(left, self.expect("name").text)
        raise MsoSyntaxError(f"expected a relation after {left!r}", op.pos)


def parse_formula(text: str) -> Formula:
    """Parse the ASCII surface syntax into an AST; raises
    :class:`MsoSyntaxError` with the offending position."""
    return _Parser(text).parse()
