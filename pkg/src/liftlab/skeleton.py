"""Allocation skeletons and the closure-growth estimate.

A skeleton abstracts an expression down to what matters for allocation:
which closures exist (with their captured variable sets), how regions are
sequenced or branch against each other, and how often right-hand-side
regions are entered per allocation.  ``closure_growth`` evaluates the net
heap effect, in words, of adding one variable set to and removing another
from every closure that mentions a removed variable.  Results live in
the integers extended with infinity: positive growth in a region that may
be entered arbitrarily often is infinite.

``closure_growth_direct`` computes the same quantity by direct recursion
over the expression tree; it exists as an independent cross-check for the
skeleton route and both must agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .analysis import cardinality, closure_slot_fvs
from .syntax import (
    App,
    AtomExpr,
    Cardinality,
    Case,
    Expr,
    INF,
    Let,
    PrimApp,
    Rhs,
)

GrowthValue = int | float  # int, or INF


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Closure:
    fvs: frozenset[str]


@dataclass(frozen=True)
class Seq:
    left: "Skeleton"
    right: "Skeleton"


@dataclass(frozen=True)
class Alt:
    left: "Skeleton"
    right: "Skeleton"


@dataclass(frozen=True)
class Scaled:
    card: Cardinality
    inner: "Skeleton"


Skeleton = Nil | Closure | Seq | Alt | Scaled

NIL = Nil()


def rhs_region(rhs: Rhs, top_names: frozenset[str]) -> Skeleton:
    """The entry-scaled skeleton of a right-hand side's body."""
    return Scaled(cardinality(rhs), skeletonize(rhs.body, top_names))


def skeletonize(e: Expr, top_names: frozenset[str]) -> Skeleton:
    """Abstract an expression to its allocation skeleton.

    Atoms and applications do not allocate.  A let contributes one closure
    per binding followed by the entry-scaled region of its body; case
    sequences the scrutinee before the branch choice.
    """
    if isinstance(e, (AtomExpr, App, PrimApp)):
        return NIL
    if isinstance(e, Let):
        parts = [
            Seq(Closure(closure_slot_fvs(name, rhs, top_names)), rhs_region(rhs, top_names))
            for name, rhs in e.group.binds
        ]
        return Seq(reduce(Seq, parts), skeletonize(e.body, top_names))
    if isinstance(e, Case):
        branches = [skeletonize(body, top_names) for _, body in e.alts]
        branches.append(skeletonize(e.default[1], top_names))
        return Seq(skeletonize(e.scrutinee, top_names), reduce(Alt, branches))
    raise AssertionError(e)


def _scale(n: GrowthValue, card: Cardinality) -> GrowthValue:
    # Negative growth may only be counted as often as the region is surely
    # entered; positive growth as often as it possibly is.  A region that is
    # never entered contributes nothing, even to an infinite inner value.
    if n < 0:
        return n if card.min_entries == 1 else 0
    if card.max_entries == 0:
        return 0
    if card.max_entries == 1:
        return n
    return 0 if n == 0 else INF


def _closure_delta(
    fvs: frozenset[str], added: frozenset[str], removed: frozenset[str]
) -> GrowthValue:
    hits = len(fvs & removed)
    if hits == 0:
        return 0
    return len(added - fvs) - hits


def closure_growth(
    added: frozenset[str], removed: frozenset[str], skel: Skeleton
) -> GrowthValue:
    """Net word change over a skeleton; ``added`` and ``removed`` must be disjoint."""
    if added & removed:
        raise ValueError("added and removed variable sets overlap")
    return _growth(added, removed, skel)


def _growth(
    added: frozenset[str], removed: frozenset[str], skel: Skeleton
) -> GrowthValue:
    if isinstance(skel, Nil):
        return 0
    if isinstance(skel, Closure):
        return _closure_delta(skel.fvs, added, removed)
    if isinstance(skel, Seq):
        return _growth(added, removed, skel.left) + _growth(added, removed, skel.right)
    if isinstance(skel, Alt):
        return max(
            _growth(added, removed, skel.left), _growth(added, removed, skel.right)
        )
    if isinstance(skel, Scaled):
        return _scale(_growth(added, removed, skel.inner), skel.card)
    raise AssertionError(skel)


def closure_growth_direct(
    added: frozenset[str],
    removed: frozenset[str],
    e: Expr,
    top_names: frozenset[str],
) -> GrowthValue:
    """Reference recursion over the expression tree; oracle for ``closure_growth``."""
    if added & removed:
        raise ValueError("added and removed variable sets overlap")
    return _direct(added, removed, e, top_names)


def _direct(added, removed, e, top_names) -> GrowthValue:
    if isinstance(e, (AtomExpr, App, PrimApp)):
        return 0
    if isinstance(e, Let):
        total: GrowthValue = 0
        for name, rhs in e.group.binds:
            fvs = closure_slot_fvs(name, rhs, top_names)
            total += _closure_delta(fvs, added, removed)
            total += _scale(
                _direct(added, removed, rhs.body, top_names), cardinality(rhs)
            )
        return total + _direct(added, removed, e.body, top_names)
    if isinstance(e, Case):
        branches = [_direct(added, removed, body, top_names) for _, body in e.alts]
        branches.append(_direct(added, removed, e.default[1], top_names))
        return _direct(added, removed, e.scrutinee, top_names) + max(branches)
    raise AssertionError(e)


def skeleton_sexpr(skel: Skeleton) -> str:
    """Debug rendering, e.g. ``(seq (closure f x) (scaled {0,*} nil))``."""
    if isinstance(skel, Nil):
        return "nil"
    if isinstance(skel, Closure):
        names = " ".join(sorted(skel.fvs))
        return f"(closure{' ' + names if names else ''})"
    if isinstance(skel, Seq):
        return f"(seq {skeleton_sexpr(skel.left)} {skeleton_sexpr(skel.right)})"
    if isinstance(skel, Alt):
        return f"(alt {skeleton_sexpr(skel.left)} {skeleton_sexpr(skel.right)})"
    if isinstance(skel, Scaled):
        return f"(scaled {skel.card} {skeleton_sexpr(skel.inner)})"
    raise AssertionError(skel)
