# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Arithmetic must stay in lockstep with pyfallback.py: identical pass order,
identical truncation, libc exp. Any change here needs the mirror change there,
and the parity tests will catch a drift.
"""
from libc.math cimport exp

BACKEND = "compiled"


def walk_step(const long long[::1] head, const long long[::1] nxt,
              const long long[::1] child, const long long[::1] cw,
              long long current, double alpha, double u):
    cdef long long e, y, c, mh, k, last
    cdef double total, thr, cum
    e = head[current]
    if e < 0:
        return -1
    c = 0
    mh = 0
    while e >= 0:
        y = child[e]
        if c == 0 or cw[y] > mh:
            mh = cw[y]
        c += 1
        e = nxt[e]

    if alpha == 0.0:
        k = <long long>(u * c)
        if k >= c:
            k = c - 1
        e = head[current]
        while k > 0:
            e = nxt[e]
            k -= 1
        return child[e]

    total = 0.0
    e = head[current]
    while e >= 0:
        total += exp(alpha * <double>(cw[child[e]] - mh))
        e = nxt[e]
    thr = u * total
    cum = 0.0
    e = head[current]
    last = -1
    while e >= 0:
        y = child[e]
        cum += exp(alpha * <double>(cw[y] - mh))
        last = y
        if cum > thr:
            return y
        e = nxt[e]
    return last


def bump_cone(const long long[::1] par1, const long long[::1] par2,
              const long long[::1] par3, long long s1, long long s2,
              long long s3, long long[::1] out, long long[::1] stamp,
              long long[::1] stack, long long epoch):
    cdef long long sp = 0, visited = 0, x, p, s, i
    cdef long long starts[3]
    starts[0] = s1
    starts[1] = s2
    starts[2] = s3
    with nogil:
        for i in range(3):
            s = starts[i]
            if s >= 0 and stamp[s] != epoch:
                stamp[s] = epoch
                out[s] += 1
                visited += 1
                stack[sp] = s
                sp += 1
        while sp > 0:
            sp -= 1
            x = stack[sp]
            p = par1[x]
            if p >= 0 and stamp[p] != epoch:
                stamp[p] = epoch
                out[p] += 1
                visited += 1
                stack[sp] = p
                sp += 1
            p = par2[x]
            if p >= 0 and stamp[p] != epoch:
                stamp[p] = epoch
                out[p] += 1
                visited += 1
                stack[sp] = p
                sp += 1
            p = par3[x]
            if p >= 0 and stamp[p] != epoch:
                stamp[p] = epoch
                out[p] += 1
                visited += 1
                stack[sp] = p
                sp += 1
    return visited


def cone_tag_counts(const long long[::1] par1, const long long[::1] par2,
                    const long long[::1] par3, long long s1, long long s2,
                    long long s3, const long long[::1] tag,
                    long long[::1] counts, long long[::1] stamp,
                    long long[::1] stack, long long epoch):
    cdef long long sp = 0, x, p, s, t, i
    cdef long long starts[3]
    starts[0] = s1
    starts[1] = s2
    starts[2] = s3
    with nogil:
        for i in range(3):
            s = starts[i]
            if s >= 0 and stamp[s] != epoch:
                stamp[s] = epoch
                t = tag[s]
                if t >= 0:
                    counts[t] += 1
                stack[sp] = s
                sp += 1
        while sp > 0:
            sp -= 1
            x = stack[sp]
            p = par1[x]
            if p >= 0 and stamp[p] != epoch:
                stamp[p] = epoch
                t = tag[p]
                if t >= 0:
                    counts[t] += 1
                stack[sp] = p
                sp += 1
            p = par2[x]
            if p >= 0 and stamp[p] != epoch:
                stamp[p] = epoch
                t = tag[p]
                if t >= 0:
                    counts[t] += 1
                stack[sp] = p
                sp += 1
            p = par3[x]
            if p >= 0 and stamp[p] != epoch:
                stamp[p] = epoch
                t = tag[p]
                if t >= 0:
                    counts[t] += 1
                stack[sp] = p
                sp += 1


def cone_contains(const long long[::1] par1, const long long[::1] par2,
                  const long long[::1] par3, long long start,
                  long long target, long long[::1] stamp,
                  long long[::1] stack, long long epoch):
    cdef long long sp = 0, x, p
    cdef bint found = 0
    if start == target:
        return True
    with nogil:
        stamp[start] = epoch
        stack[sp] = start
        sp += 1
        while sp > 0 and not found:
            sp -= 1
            x = stack[sp]
            p = par1[x]
            if p >= 0 and stamp[p] != epoch:
                if p == target:
                    found = 1
                    break
                stamp[p] = epoch
                stack[sp] = p
                sp += 1
            p = par2[x]
            if p >= 0 and stamp[p] != epoch:
                if p == target:
                    found = 1
                    break
                stamp[p] = epoch
                stack[sp] = p
                sp += 1
            p = par3[x]
            if p >= 0 and stamp[p] != epoch:
                if p == target:
                    found = 1
                    break
                stamp[p] = epoch
                stack[sp] = p
                sp += 1
    return bool(found)
