"""Free-variable, occurrence, and binding-group analyses."""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    App,
    AtomExpr,
    BindGroup,
    Cardinality,
    Case,
    Expr,
    Lambda,
    Let,
    PrimApp,
    Program,
    Rhs,
    THUNK_CARD,
    Thunk,
    TopBind,
    Var,
)


def _atom_vars(atoms) -> frozenset[str]:
    return frozenset(a.name for a in atoms if isinstance(a, Var))


def free_vars(node: Expr | Rhs) -> frozenset[str]:
    """Variables occurring free in an expression or right-hand side.

    Group binders are treated as bound in all right-hand sides of their let
    (candidate-recursive scoping).  Top-level names are *not* filtered here;
    callers that need closure contents use :func:`closure_slot_fvs`.
    """
    if isinstance(node, Lambda):
        return free_vars(node.body) - frozenset(node.params)
    if isinstance(node, Thunk):
        return free_vars(node.body)
    if isinstance(node, AtomExpr):
        return _atom_vars((node.atom,))
    if isinstance(node, App):
        return frozenset({node.head}) | _atom_vars(node.args)
    if isinstance(node, PrimApp):
        return _atom_vars(node.args)
    if isinstance(node, Let):
        acc = free_vars(node.body)
        for _, rhs in node.group.binds:
            acc |= free_vars(rhs)
        return acc - frozenset(node.group.binders())
    if isinstance(node, Case):
        acc = free_vars(node.scrutinee)
        for _, body in node.alts:
            acc |= free_vars(body)
        dname, dbody = node.default
        return acc | (free_vars(dbody) - {dname})
    raise AssertionError(node)


def closure_slot_fvs(
    binder: str, rhs: Rhs, top_names: frozenset[str]
) -> frozenset[str]:
    """Variables a closure allocated for ``binder`` actually stores.

    Self-references go through the closure pointer and top-level names need
    no slot, so both are excluded.
    """
    return free_vars(rhs) - {binder} - top_names


def cardinality(rhs: Rhs) -> Cardinality:
    """Entry bounds per allocation: a thunk is entered at most once."""
    if isinstance(rhs, Thunk):
        return THUNK_CARD
    return rhs.card


# ---------------------------------------------------------------------------
# Occurrence facts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinderFacts:
    occurs_as_argument: bool
    is_known_function: bool
    arity: int
    all_occurrences_saturated_calls: bool


def occurrence_facts(p: Program) -> dict[str, BinderFacts]:
    """Per let-bound binder: argument occurrences and known-call shape.

    A binder occurs as an argument when it appears in a non-head atom
    position of an application or primop.  Case scrutinee variables count as
    head-position uses.
    """
    arity: dict[str, int] = {}
    known: dict[str, bool] = {}
    as_arg: set[str] = set()
    unsaturated: set[str] = set()

    def see_arg(a) -> None:
        if isinstance(a, Var) and a.name in arity:
            as_arg.add(a.name)
            unsaturated.add(a.name)

    def walk_expr(e: Expr) -> None:
        if isinstance(e, AtomExpr):
            if isinstance(e.atom, Var) and e.atom.name in arity:
                unsaturated.add(e.atom.name)
        elif isinstance(e, App):
            if e.head in arity and len(e.args) != arity[e.head]:
                unsaturated.add(e.head)
            for a in e.args:
                see_arg(a)
        elif isinstance(e, PrimApp):
            for a in e.args:
                see_arg(a)
        elif isinstance(e, Let):
            for name, rhs in e.group.binds:
                known[name] = isinstance(rhs, Lambda)
                arity[name] = len(rhs.params) if isinstance(rhs, Lambda) else 0
            for _, rhs in e.group.binds:
                walk_expr(rhs.body)
            walk_expr(e.body)
        elif isinstance(e, Case):
            walk_expr(e.scrutinee)
            for _, body in e.alts:
                walk_expr(body)
            walk_expr(e.default[1])
        else:
            raise AssertionError(e)

    for tb in p.top_binds:
        walk_expr(tb.body)
    walk_expr(p.main)
    return {
        name: BinderFacts(
            occurs_as_argument=name in as_arg,
            is_known_function=known[name],
            arity=arity[name],
            all_occurrences_saturated_calls=name not in unsaturated,
        )
        for name in arity
    }


# ---------------------------------------------------------------------------
# SCC splitting of binding groups
# ---------------------------------------------------------------------------


def _scc_components(
    binds: tuple[tuple[str, Rhs], ...]
) -> list[list[tuple[str, Rhs]]]:
    """Tarjan over the intra-group reference graph, sinks popped first."""
    names = [name for name, _ in binds]
    index_of = {name: i for i, name in enumerate(names)}
    succs: list[list[int]] = []
    for _, rhs in binds:
        fvs = free_vars(rhs)
        succs.append([index_of[n] for n in names if n in fvs])

    n = len(binds)
    index = [0] * n
    low = [0] * n
    on_stack = [False] * n
    visited = [False] * n
    stack: list[int] = []
    counter = [0]
    comps: list[list[int]] = []

    def dfs(v: int) -> None:
        visited[v] = True
        counter[0] += 1
        index[v] = low[v] = counter[0]
        stack.append(v)
        on_stack[v] = True
        for w in succs[v]:
            if not visited[w]:
                dfs(w)
                low[v] = min(low[v], low[w])
            elif on_stack[w]:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack[w] = False
                comp.append(w)
                if w == v:
                    break
            comps.append(sorted(comp))

    for v in range(n):
        if not visited[v]:
            dfs(v)
    return [[binds[i] for i in comp] for comp in comps]


def _group_is_recursive(binds: list[tuple[str, Rhs]]) -> bool:
    if len(binds) > 1:
        return True
    name, rhs = binds[0]
    return name in free_vars(rhs)


def split_groups(p: Program) -> Program:
    """Decompose every let group into minimal strongly connected components.

    Components are emitted as nested lets, dependencies outermost, and each
    group's ``recursive`` flag is made accurate.  Semantics and allocation
    totals are preserved.
    """

    def split_expr(e: Expr) -> Expr:
        if isinstance(e, (AtomExpr, App, PrimApp)):
            return e
        if isinstance(e, Case):
            scrut = split_expr(e.scrutinee)
            alts = tuple((pat, split_expr(b)) for pat, b in e.alts)
            dname, dbody = e.default
            return Case(scrut, alts, (dname, split_expr(dbody)))
        if isinstance(e, Let):
            binds = tuple((name, split_rhs(rhs)) for name, rhs in e.group.binds)
            body = split_expr(e.body)
            result = body
            # Tarjan pops dependencies first; wrap in reverse so they end up
            # outermost and stay in scope for their dependents.
            for comp in reversed(_scc_components(binds)):
                group = BindGroup(_group_is_recursive(comp), tuple(comp))
                result = Let(group, result)
            return result
        raise AssertionError(e)

    def split_rhs(r: Rhs) -> Rhs:
        if isinstance(r, Lambda):
            return Lambda(r.card, r.params, split_expr(r.body))
        return Thunk(split_expr(r.body))

    tops = tuple(
        TopBind(tb.name, tb.params, split_expr(tb.body)) for tb in p.top_binds
    )
    return Program(tops, split_expr(p.main))
