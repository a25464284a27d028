"""Pure-Python kernel backend.

Mirrors the compiled backend operation for operation: the same pass structure,
the same truncation rules, and libm exp via math.exp, so that a walk driven by
the same uniform draws picks the same child in both backends, bit for bit.
Slow by design; the benchmark module quantifies the gap.
"""
from __future__ import annotations

import math

BACKEND = "python"


def walk_step(head, nxt, child, cw, current, alpha, u):
    """One transition of a weighted walk over the child adjacency.

    Transition probability to approver y is proportional to
    exp(alpha * cumulative_weight(y)), evaluated in shifted-exponent form.
    alpha == 0 short-circuits to a uniform pick with no weight reads.
    Returns the chosen child id, or -1 if `current` has no children.
    """
    e = int(head[current])
    if e < 0:
        return -1
    # pass 1: count children, find the maximum weight for the shift
    c = 0
    mh = None
    while e >= 0:
        y = int(child[e])
        c += 1
        w = int(cw[y])
        if mh is None or w > mh:
            mh = w
        e = int(nxt[e])

    if alpha == 0.0:
        k = int(u * c)
        if k >= c:
            k = c - 1
        e = int(head[current])
        while k > 0:
            e = int(nxt[e])
            k -= 1
        return int(child[e])

    # pass 2: normalizer
    total = 0.0
    e = int(head[current])
    while e >= 0:
        total += math.exp(alpha * float(int(cw[int(child[e])]) - mh))
        e = int(nxt[e])
    # pass 3: inverse-CDF pick
    thr = u * total
    cum = 0.0
    e = int(head[current])
    last = -1
    while e >= 0:
        y = int(child[e])
        cum += math.exp(alpha * float(int(cw[y]) - mh))
        last = y
        if cum > thr:
            return y
        e = int(nxt[e])
    return last


def bump_cone(par1, par2, par3, s1, s2, s3, out, stamp, stack, epoch):
    """Add 1 to out[x] for every distinct x reachable from the start ids
    (inclusive) by following parent links. Returns the visit count.

    Visited bookkeeping is epoch-stamped: the caller supplies a fresh epoch
    value per call and the stamp array is never cleared.
    """
    sp = 0
    visited = 0
    for s in (s1, s2, s3):
        if s >= 0 and int(stamp[s]) != epoch:
            stamp[s] = epoch
            out[s] += 1
            visited += 1
            stack[sp] = s
            sp += 1
    while sp > 0:
        sp -= 1
        x = int(stack[sp])
        for p in (int(par1[x]), int(par2[x]), int(par3[x])):
            if p >= 0 and int(stamp[p]) != epoch:
                stamp[p] = epoch
                out[p] += 1
                visited += 1
                stack[sp] = p
                sp += 1
    return visited


def cone_tag_counts(par1, par2, par3, s1, s2, s3, tag, counts, stamp, stack, epoch):
    """Count conflict-set members in the combined past cone of the starts
    (inclusive). counts[k] += 1 for each distinct transaction tagged k."""
    sp = 0
    for s in (s1, s2, s3):
        if s >= 0 and int(stamp[s]) != epoch:
            stamp[s] = epoch
            t = int(tag[s])
            if t >= 0:
                counts[t] += 1
            stack[sp] = s
            sp += 1
    while sp > 0:
        sp -= 1
        x = int(stack[sp])
        for p in (int(par1[x]), int(par2[x]), int(par3[x])):
            if p >= 0 and int(stamp[p]) != epoch:
                stamp[p] = epoch
                t = int(tag[p])
                if t >= 0:
                    counts[t] += 1
                stack[sp] = p
                sp += 1


def cone_contains(par1, par2, par3, start, target, stamp, stack, epoch):
    """True if `target` is in the past cone of `start` (inclusive)."""
    if start == target:
        return True
    sp = 0
    stamp[start] = epoch
    stack[sp] = start
    sp += 1
    while sp > 0:
        sp -= 1
        x = int(stack[sp])
        for p in (int(par1[x]), int(par2[x]), int(par3[x])):
            if p >= 0 and int(stamp[p]) != epoch:
                if p == target:
                    return True
                stamp[p] = epoch
                stack[sp] = p
                sp += 1
    return False
