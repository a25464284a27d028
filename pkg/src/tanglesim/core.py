"""Append-only transaction DAG ("tangle") with incremental cumulative weights.

Every transaction approves two existing transactions (three when a rescue
parent is added); genesis (id 0) approves nothing. Ids are dense and assigned
in attach order, so ascending id order is always a topological order. The
cumulative weight of a transaction is its own weight (fixed at 1) plus the
number of distinct transactions that approve it directly or indirectly; the
index is maintained incrementally by walking the new transaction's past cone
once per attach.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterator

import numpy as np

from . import _kernels as K
from .errors import ConflictViolation, IoFailure, UnknownParent, UnknownTransaction

HONEST = "honest"
ADVERSARY = "adversary"
GENESIS = 0

SNAPSHOT_HEADER = "tangle-snapshot v1"

_ISSUER_CODE = {HONEST: 0, ADVERSARY: 1}
_ISSUER_NAME = {0: HONEST, 1: ADVERSARY}


@dataclass(frozen=True)
class Transaction:
    """Read-only record of one transaction."""

    id: int
    parents: tuple[int, ...]
    issue_time: float
    visible_time: float
    issuer: str
    conflict_set: str | None
    own_weight: int = 1


class EdgeStore:
    """Child adjacency as growable linked-list arrays (newest edge first).

    head[x] is the index of the last edge added for parent x (-1 if none);
    child[e]/nxt[e] store the approver id and the previous edge index.
    """

    __slots__ = ("head", "child", "nxt", "n_edges")

    def __init__(self, node_cap: int = 1024, edge_cap: int = 4096):
        self.head = np.full(node_cap, -1, dtype=np.int64)
        self.child = np.empty(edge_cap, dtype=np.int64)
        self.nxt = np.empty(edge_cap, dtype=np.int64)
        self.n_edges = 0

    def ensure_nodes(self, n: int) -> None:
        if n > self.head.shape[0]:
            cap = max(n, 2 * self.head.shape[0])
            head = np.full(cap, -1, dtype=np.int64)
            head[: self.head.shape[0]] = self.head
            self.head = head

    def add(self, parent: int, approver: int) -> None:
        e = self.n_edges
        if e == self.child.shape[0]:
            cap = 2 * e
            self.child = np.resize(self.child, cap)
            self.nxt = np.resize(self.nxt, cap)
        self.child[e] = approver
        self.nxt[e] = self.head[parent]
        self.head[parent] = e
        self.n_edges = e + 1

    def children(self, x: int) -> Iterator[int]:
        e = int(self.head[x])
        while e >= 0:
            yield int(self.child[e])
            e = int(self.nxt[e])


class ConflictRegistry:
    """Named conflict sets. A transaction belongs to at most one set."""

    def __init__(self) -> None:
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._members: list[list[int]] = []

    def __len__(self) -> int:
        return len(self._names)

    def index_of(self, name: str) -> int | None:
        return self._index.get(name)

    def name_of(self, idx: int) -> str:
        return self._names[idx]

    def ensure(self, name: str) -> int:
        if not name or any(c in name for c in ",\n\r "):
            raise ValueError(f"conflict set name invalid: {name!r}")
        idx = self._index.get(name)
        if idx is None:
            idx = len(self._names)
            self._names.append(name)
            self._index[name] = idx
            self._members.append([])
        return idx

    def members(self, name: str) -> tuple[int, ...]:
        idx = self._index.get(name)
        return tuple(self._members[idx]) if idx is not None else ()

    @property
    def sets(self) -> dict[str, tuple[int, ...]]:
        return {n: tuple(m) for n, m in zip(self._names, self._members)}


@dataclass
class TangleView:
    """A read-only slice of a tangle, as one node sees it at a moment.

    Walks and tip selection operate on views. The engine keeps a live view
    that tracks network visibility; `full_view`/`visible_view` build static
    ones. Arrays are shared with their owner, never copied.
    """

    n: int
    head: np.ndarray
    echild: np.ndarray
    enext: np.ndarray
    cw: np.ndarray
    is_tip: np.ndarray
    tip_count: int
    now: float
    issue_t: np.ndarray
    par1: np.ndarray
    par2: np.ndarray
    par3: np.ndarray
    visible: np.ndarray | None  # None means every id < n is visible

    def children_of(self, x: int) -> list[int]:
        out = []
        e = int(self.head[x])
        while e >= 0:
            out.append(int(self.echild[e]))
            e = int(self.enext[e])
        return out

    def tip_ids(self) -> np.ndarray:
        return np.flatnonzero(self.is_tip[: self.n] != 0)

    def is_visible(self, x: int) -> bool:
        return x < self.n and (self.visible is None or bool(self.visible[x]))


def _grown(arr: np.ndarray, cap: int, fill=None) -> np.ndarray:
    if fill is None:
        new = np.empty(cap, dtype=arr.dtype)
    else:
        new = np.full(cap, fill, dtype=arr.dtype)
    new[: arr.shape[0]] = arr
    return new


class TangleState:
    """The tangle itself: append-only, conflict-aware, weight-indexed."""

    def __init__(self, genesis_time: float = 0.0):
        cap = 1024
        self._par1 = np.full(cap, -1, dtype=np.int64)
        self._par2 = np.full(cap, -1, dtype=np.int64)
        self._par3 = np.full(cap, -1, dtype=np.int64)
        self._issue = np.zeros(cap, dtype=np.float64)
        self._visible = np.zeros(cap, dtype=np.float64)
        self._issuer = np.zeros(cap, dtype=np.uint8)
        self._tag = np.full(cap, -1, dtype=np.int64)
        self._cw = np.zeros(cap, dtype=np.int64)
        self.edges = EdgeStore(cap, 4 * cap)
        self.registry = ConflictRegistry()
        self.tips: set[int] = {GENESIS}
        self._n = 1
        self._issue[GENESIS] = genesis_time
        self._visible[GENESIS] = genesis_time
        self._cw[GENESIS] = 1

    # -- basic accessors ----------------------------------------------------

    def __len__(self) -> int:
        return self._n

    @property
    def n(self) -> int:
        return self._n

    @property
    def approved_count(self) -> int:
        return self._n - len(self.tips)

    @property
    def edge_count(self) -> int:
        return self.edges.n_edges

    def _check_id(self, tx: int) -> None:
        if tx < 0 or tx >= self._n:
            raise UnknownTransaction(f"no transaction with id {tx}")

    def cumulative_weight(self, tx: int) -> int:
        """Own weight plus the number of distinct direct/indirect approvers."""
        self._check_id(tx)
        return int(self._cw[tx])

    def parents_of(self, tx: int) -> tuple[int, ...]:
        self._check_id(tx)
        ps = []
        for arr in (self._par1, self._par2, self._par3):
            p = int(arr[tx])
            if p >= 0:
                ps.append(p)
        return tuple(ps)

    def transaction(self, tx: int) -> Transaction:
        self._check_id(tx)
        t = int(self._tag[tx])
        return Transaction(
            id=tx,
            parents=self.parents_of(tx),
            issue_time=float(self._issue[tx]),
            visible_time=float(self._visible[tx]),
            issuer=_ISSUER_NAME[int(self._issuer[tx])],
            conflict_set=self.registry.name_of(t) if t >= 0 else None,
        )

    def transactions(self) -> Iterator[Transaction]:
        for tx in range(self._n):
            yield self.transaction(tx)

    # -- growth -------------------------------------------------------------

    def _ensure(self, n: int) -> None:
        if n > self._par1.shape[0]:
            cap = max(n, 2 * self._par1.shape[0])
            self._par1 = _grown(self._par1, cap, -1)
            self._par2 = _grown(self._par2, cap, -1)
            self._par3 = _grown(self._par3, cap, -1)
            self._issue = _grown(self._issue, cap)
            self._visible = _grown(self._visible, cap)
            self._issuer = _grown(self._issuer, cap)
            self._tag = _grown(self._tag, cap, -1)
            self._cw = _grown(self._cw, cap)
        self.edges.ensure_nodes(n)

    # -- conflict checks ----------------------------------------------------

    def _cone_tag_counts(self, s1: int, s2: int, s3: int) -> np.ndarray:
        counts = np.zeros(len(self.registry), dtype=np.int64)
        sc = K.local_scratch(self._n)
        K.cone_tag_counts(
            self._par1, self._par2, self._par3, s1, s2, s3,
            self._tag, counts, sc.stamp, sc.stack, sc.next_epoch(self._n),
        )
        return counts

    def pair_conflicts(self, t1: int, t2: int, third: int = -1,
                       new_tag: str | None = None) -> bool:
        """Would a transaction approving these tips break conflict exclusion?

        True if the combined past cone (tips included) holds two members of
        one conflict set, or any member of `new_tag`'s set when the issuer
        itself is tagged.
        """
        if not len(self.registry):
            return False
        idx = self.registry.index_of(new_tag) if new_tag is not None else None
        counts = self._cone_tag_counts(t1, t2, third)
        if bool((counts >= 2).any()):
            return True
        return idx is not None and bool(counts[idx] >= 1)

    def cone_contains(self, tx: int, target: int) -> bool:
        """True if `target` is `tx` or is (in)directly approved by `tx`."""
        self._check_id(tx)
        self._check_id(target)
        sc = K.local_scratch(self._n)
        return bool(K.cone_contains(
            self._par1, self._par2, self._par3, tx, target,
            sc.stamp, sc.stack, sc.next_epoch(self._n),
        ))

    def declare_conflict(self, tx: int, set_name: str) -> None:
        """Place an existing transaction into a conflict set."""
        self._check_id(tx)
        if int(self._tag[tx]) >= 0:
            raise ConflictViolation(
                f"transaction {tx} already belongs to a conflict set")
        idx_existing = self.registry.index_of(set_name)
        if idx_existing is not None and len(self.registry._members[idx_existing]):
            # joining a populated set: tx must not approve a member
            counts = self._cone_tag_counts(tx, -1, -1)
            if counts[idx_existing] >= 1:
                raise ConflictViolation(
                    f"transaction {tx} approves a member of {set_name!r}")
        idx = self.registry.ensure(set_name)
        self._tag[tx] = idx
        self.registry._members[idx].append(tx)

    # -- attach -------------------------------------------------------------

    def attach(self, parents, *, issue_time: float = 0.0,
               visible_time: float | None = None, issuer: str = HONEST,
               conflict_set: str | None = None) -> int:
        """Append a transaction approving the given parents.

        Parents form a multiset of size 2 (or 3 with a rescue parent); the
        same id may appear twice. On success every distinct ancestor's
        cumulative weight rises by exactly 1 and the new id is returned.
        Raises without mutating on unknown parents or conflict violations.
        """
        ps = [int(p) for p in parents]
        if len(ps) not in (2, 3):
            raise ValueError("a transaction approves 2 parents (3 in rescue mode)")
        n = self._n
        for p in ps:
            if p < 0 or p >= n:
                raise UnknownParent(f"parent {p} not in tangle of size {n}")
        if visible_time is None:
            visible_time = issue_time
        if issuer not in _ISSUER_CODE:
            raise ValueError(f"unknown issuer kind {issuer!r}")

        distinct = list(dict.fromkeys(ps))
        d = distinct + [-1] * (3 - len(distinct))
        if len(self.registry):
            idx = (self.registry.index_of(conflict_set)
                   if conflict_set is not None else None)
            counts = self._cone_tag_counts(d[0], d[1], d[2])
            if bool((counts >= 2).any()) or (idx is not None and counts[idx] >= 1):
                raise ConflictViolation(
                    f"approving {tuple(ps)} would join conflicting spends")

        tx = n
        self._ensure(n + 1)
        self._par1[tx] = ps[0]
        self._par2[tx] = ps[1]
        self._par3[tx] = ps[2] if len(ps) == 3 else -1
        self._issue[tx] = issue_time
        self._visible[tx] = visible_time
        self._issuer[tx] = _ISSUER_CODE[issuer]
        self._cw[tx] = 1
        self._n = n + 1
        for p in distinct:
            self.edges.add(p, tx)
            self.tips.discard(p)
        self.tips.add(tx)

        sc = K.local_scratch(self._n)
        K.bump_cone(
            self._par1, self._par2, self._par3, d[0], d[1], d[2],
            self._cw, sc.stamp, sc.stack, sc.next_epoch(self._n),
        )
        if conflict_set is not None:
            idx = self.registry.ensure(conflict_set)
            self._tag[tx] = idx
            self.registry._members[idx].append(tx)
        return tx

    # -- views --------------------------------------------------------------

    def full_view(self) -> TangleView:
        """View of the whole tangle (every transaction visible)."""
        n = self._n
        is_tip = np.zeros(n, dtype=np.uint8)
        if self.tips:
            is_tip[np.fromiter(self.tips, dtype=np.int64)] = 1
        return TangleView(
            n=n, head=self.edges.head, echild=self.edges.child,
            enext=self.edges.nxt, cw=self._cw, is_tip=is_tip,
            tip_count=len(self.tips), now=math.inf, issue_t=self._issue,
            par1=self._par1, par2=self._par2, par3=self._par3, visible=None,
        )

    # -- diagnostics ----------------------------------------------------------

    def heights(self) -> np.ndarray:
        """Longest oriented path length from each transaction down to genesis."""
        n = self._n
        h = np.zeros(n, dtype=np.int64)
        for x in range(1, n):
            best = 0
            for p in self.parents_of(x):
                if h[p] > best:
                    best = int(h[p])
            h[x] = best + 1
        return h

    def depths(self) -> np.ndarray:
        """Longest reverse-oriented path length from each transaction up to a tip."""
        n = self._n
        d = np.zeros(n, dtype=np.int64)
        for x in range(n - 1, -1, -1):
            best = -1
            for c in self.edges.children(x):
                if d[c] > best:
                    best = int(d[c])
            d[x] = best + 1 if best >= 0 else 0
        return d

    def height(self) -> int:
        return int(self.heights().max())

    def depth(self) -> int:
        return int(self.depths().max())

    # -- serialization --------------------------------------------------------

    def snapshot_text(self) -> str:
        lines = [SNAPSHOT_HEADER]
        for tx in range(self._n):
            ps = [int(self._par1[tx]), int(self._par2[tx]), int(self._par3[tx])]
            cols = [str(tx)]
            cols += [str(p) if p >= 0 else "-" for p in ps]
            cols.append(repr(float(self._issue[tx])))
            cols.append(repr(float(self._visible[tx])))
            cols.append(_ISSUER_NAME[int(self._issuer[tx])])
            t = int(self._tag[tx])
            cols.append(self.registry.name_of(t) if t >= 0 else "-")
            lines.append(",".join(cols))
        return "\n".join(lines) + "\n"

    def export_snapshot(self, path) -> None:
        """Write the line-oriented snapshot; round-trips byte-identically."""
        try:
            with open(path, "w", encoding="utf-8") as f:
                f.write(self.snapshot_text())
        except OSError as e:
            raise IoFailure(f"cannot write snapshot: {e}") from e

    @classmethod
    def from_snapshot_text(cls, text: str) -> "TangleState":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != SNAPSHOT_HEADER:
            raise IoFailure("not a tangle snapshot (bad header)")
        tangle: TangleState | None = None
        for i, ln in enumerate(lines[1:]):
            cols = ln.split(",")
            if len(cols) != 8:
                raise IoFailure(f"snapshot line {i + 2}: expected 8 fields")
            try:
                tx = int(cols[0])
                parents = [int(c) for c in cols[1:4] if c != "-"]
                issue_t = float(cols[4])
                visible_t = float(cols[5])
            except ValueError as e:
                raise IoFailure(f"snapshot line {i + 2}: {e}") from e
            issuer = cols[6]
            tag = cols[7] if cols[7] != "-" else None
            if tx != i:
                raise IoFailure(f"snapshot line {i + 2}: ids must be dense")
            if tx == 0:
                if parents:
                    raise IoFailure("genesis row must have no parents")
                tangle = cls(genesis_time=issue_t)
                tangle._visible[0] = visible_t
                continue
            assert tangle is not None
            tangle.attach(parents, issue_time=issue_t, visible_time=visible_t,
                          issuer=issuer, conflict_set=tag)
        if tangle is None:
            raise IoFailure("snapshot has no genesis row")
        return tangle

    @classmethod
    def import_snapshot(cls, path) -> "TangleState":
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise IoFailure(f"cannot read snapshot: {e}") from e
        return cls.from_snapshot_text(text)

    def to_dot(self) -> str:
        """Graphviz digraph; one edge per distinct parent, approver -> parent."""
        out = ["digraph tangle {", "  rankdir=RL;"]
        for tx in sorted(self.tips):
            out.append(f"  {tx} [shape=box];")
        for tx in range(1, self._n):
            for p in dict.fromkeys(self.parents_of(tx)):
                out.append(f"  {tx} -> {p};")
        out.append("}")
        return "\n".join(out) + "\n"

    def export_dot(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8") as f:
                f.write(self.to_dot())
        except OSError as e:
            raise IoFailure(f"cannot write DOT file: {e}") from e


def new_tangle(genesis_time: float = 0.0) -> TangleState:
    return TangleState(genesis_time=genesis_time)


def import_snapshot(path) -> TangleState:
    return TangleState.import_snapshot(path)


def visible_view(tangle: TangleState, now: float) -> TangleView:
    """Static sub-tangle of transactions with visible_time <= now.

    Genesis is always visible. Cumulative weights and tips are recomputed
    within the view, so a transaction's weight here counts only approvers
    the network has seen by `now`.
    """
    n = tangle.n
    visible = np.zeros(n, dtype=bool)
    np.less_equal(tangle._visible[:n], now, out=visible)
    visible[GENESIS] = True
    edges = EdgeStore(n, max(8, 3 * n))
    cw = np.zeros(n, dtype=np.int64)
    sc = K.local_scratch(n)
    p1, p2, p3 = tangle._par1, tangle._par2, tangle._par3
    for x in range(n):
        if not visible[x]:
            continue
        cw[x] = 1
        if x == GENESIS:
            continue
        ps = list(dict.fromkeys(tangle.parents_of(x)))
        for p in ps:
            edges.add(p, x)
        d = ps + [-1] * (3 - len(ps))
        K.bump_cone(p1, p2, p3, d[0], d[1], d[2], cw,
                    sc.stamp, sc.stack, sc.next_epoch(n))
    is_tip = np.zeros(n, dtype=np.uint8)
    for x in range(n):
        if visible[x] and edges.head[x] < 0:
            is_tip[x] = 1
    return TangleView(
        n=n, head=edges.head, echild=edges.child, enext=edges.nxt, cw=cw,
        is_tip=is_tip, tip_count=int(is_tip.sum()), now=now,
        issue_t=tangle._issue, par1=p1, par2=p2, par3=p3, visible=visible,
    )
