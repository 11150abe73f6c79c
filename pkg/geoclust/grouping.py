"""
Balanced grouping of partition parts by their u-values.

A part's u-value is its local facility count minus its global facility and net point
count. `group_parts` collects parts into groups of at most l parts each having a
nonnegative total u-value.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .exceptions import GroupingError, InvalidInputError
from .log import get_logger
from .partition import Part, PartitionOutput

logger = get_logger(__name__)


@dataclass(frozen=True)
class SignedPart:
    part_ref: int
    u: int


@dataclass(frozen=True)
class GroupedCollection:
    groups: Tuple[Tuple[SignedPart, ...], ...]
    l: int  # noqa: E741
    invariant_trace: Tuple[Tuple[int, int, float], ...] = ()
    psi_trace: Tuple[int, ...] = ()

    def group_u(self, i: int) -> int:
        return sum(p.u for p in self.groups[i])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "l": self.l,
            "groups": [[p.part_ref for p in g] for g in self.groups],
            "group_u": [self.group_u(i) for i in range(len(self.groups))],
            "invariant_trace": [list(t) for t in self.invariant_trace],
        }


def u_value(part: Part) -> int:
    """|L n R_j| - |(O u T) n R_j| with (O u T) n R_j = O_j u T_j u ZB_j"""
    return len(part.L) - len(part.O) - part.net_size


def signed_parts(out: PartitionOutput) -> List[SignedPart]:
    return [SignedPart(part_ref=p.index, u=u_value(p)) for p in out.parts]


def group_size_limit(out: PartitionOutput, beta: Optional[float] = None) -> int:
    """l = 2*beta/eps^d rounded up to an even integer; beta measured when not given"""
    eps_d = out.epsilon ** out.d
    if beta is None:
        beta = out.beta if out.beta is not None else max(p.size for p in out.parts) * eps_d
    l = max(2, math.ceil(2.0 * beta / eps_d - 1e-9))  # noqa: E741
    return l + (l % 2)


def _first(R: List[SignedPart], positive: bool) -> Optional[int]:
    for pos, r in enumerate(R):
        if (r.u > 0) if positive else (r.u < 0):
            return pos
    return None


def group_parts(parts: Sequence[SignedPart], l: int) -> GroupedCollection:  # noqa: E741
    """Group parts into collections of at most l parts with nonnegative u"""
    if l < 2 or l % 2:
        raise InvalidInputError(f"group size limit l must be an even integer >= 2, got {l}")
    half = l // 2
    too_big = [p.part_ref for p in parts if abs(p.u) > half]
    if too_big:
        raise GroupingError(f"parts {too_big} have |u| > l/2 = {half}")

    groups: List[Tuple[SignedPart, ...]] = [(p,) for p in parts if p.u == 0]
    R = [p for p in parts if p.u != 0]
    u_R = sum(p.u for p in R)
    I = len(parts)  # noqa: E741
    required = (2.0 * I / l + 1.0) * l / 2.0

    invariant_trace: List[Tuple[int, int, float]] = []
    psi_trace: List[int] = []

    if len(R) <= l:
        if R:
            if u_R < 0:
                raise GroupingError(f"insufficient surplus u(R): {u_R} < 0")
            groups.append(tuple(R))
        return GroupedCollection(groups=tuple(groups), l=l)

    if u_R < required:
        raise GroupingError(f"insufficient surplus u(R): {u_R} < {required:g}")

    j = 0
    while len(R) > l:
        j += 1
        pos = _first(R, positive=True)
        if pos is None:
            raise GroupingError("insufficient surplus u(R): no positive part left")
        psi = [R.pop(pos)]
        psi_u = psi[0].u
        psi_trace.append(psi_u)

        flushed = False
        left_u = 0
        for _ in range(half - 1):
            if psi_u >= 0:
                pos = _first(R, positive=False)
                if pos is None:
                    # everything left is positive
                    left_u = sum(r.u for r in R)
                    groups.append(tuple(psi))
                    groups.extend((r,) for r in R)
                    R = []
                    flushed = True
                    break
            else:
                pos = _first(R, positive=True)
                if pos is None:
                    raise GroupingError("insufficient surplus u(R): no positive part left")
            psi.append(R.pop(pos))
            psi_u += psi[-1].u
            psi_trace.append(psi_u)

        if not flushed:
            while psi_u < 0:
                pos = _first(R, positive=True)
                if pos is None:
                    raise GroupingError("insufficient surplus u(R): cannot balance group")
                psi.append(R.pop(pos))
                psi_u += psi[-1].u
            groups.append(tuple(psi))

        remaining = left_u if flushed else sum(r.u for r in R)
        invariant_trace.append((j, remaining, required - j * half))
        logger.debug("grouping iteration", iteration=j, group_size=len(psi), u_remaining=remaining)

    if R:
        groups.append(tuple(R))
    return GroupedCollection(
        groups=tuple(groups),
        l=l,
        invariant_trace=tuple(invariant_trace),
        psi_trace=tuple(psi_trace),
    )


@dataclass
class GroupingReport:
    cover_ok: bool = True
    disjoint_ok: bool = True
    size_violations: List[int] = field(default_factory=list)
    negative_groups: List[int] = field(default_factory=list)
    stale_u: List[int] = field(default_factory=list)
    invariant_ok: bool = True

    @property
    def passed(self) -> bool:
        return (self.cover_ok and self.disjoint_ok and not self.size_violations
                and not self.negative_groups and not self.stale_u and self.invariant_ok)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "cover_ok": self.cover_ok,
            "disjoint_ok": self.disjoint_ok,
            "size_violations": self.size_violations,
            "negative_groups": self.negative_groups,
            "stale_u": self.stale_u,
            "invariant_ok": self.invariant_ok,
        }


def verify_grouping(g: GroupedCollection, parts: Sequence[Union[Part, SignedPart, int]]) -> GroupingReport:
    """Check cover, size and sign of every group, recomputing u from the parts"""
    truth: List[int] = []
    for p in parts:
        if isinstance(p, Part):
            truth.append(u_value(p))
        elif isinstance(p, SignedPart):
            truth.append(p.u)
        else:
            truth.append(int(p))

    report = GroupingReport()
    seen: List[int] = [sp.part_ref for group in g.groups for sp in group]
    report.disjoint_ok = len(seen) == len(set(seen))
    report.cover_ok = set(seen) == set(range(1, len(truth) + 1))

    for i, group in enumerate(g.groups):
        if len(group) > g.l:
            report.size_violations.append(i)
        total = 0
        for sp in group:
            if not 1 <= sp.part_ref <= len(truth):
                report.cover_ok = False
                continue
            actual = truth[sp.part_ref - 1]
            if actual != sp.u:
                report.stale_u.append(sp.part_ref)
            total += actual
        if total < 0:
            report.negative_groups.append(i)

    report.invariant_ok = all(u >= bound for _, u, bound in g.invariant_trace)
    if not report.passed:
        logger.warning("grouping verification failed", **{k: v for k, v in report.to_dict().items() if k != "passed"})
    return report


def surplus_precondition(parts: Sequence[SignedPart], l: int, k: Optional[int] = None,  # noqa: E741
                         epsilon: Optional[float] = None) -> Dict[str, Any]:
    """u(R) against (2I/l + 1)l/2 and, when k and epsilon are given, against 3*eps*k"""
    u_R = sum(p.u for p in parts)
    required = (2.0 * len(parts) / l + 1.0) * l / 2.0
    result: Dict[str, Any] = {"u_R": u_R, "required": required, "holds": u_R >= required}
    if k is not None and epsilon is not None:
        result["three_eps_k"] = 3.0 * epsilon * k
        result["surplus_holds"] = u_R >= 3.0 * epsilon * k
    return result
