"""Compiled inner loops shared by the morphology and k-MS modules.

Conventions: ``flat`` is a label grid raveled in row-major order, ``fidx`` /
``fy`` / ``fx`` list the foreground cells in raster order (flat index, row,
column), ``dys`` / ``dxs`` are unscaled structuring-element offsets and
``delta`` their scale. A probe from ``(y, x)`` reads ``(y + delta*dy,
x + delta*dx)``; under clamp, probes leaving the grid are skipped, under wrap
both axes fold modulo the grid size.

Probes do not consult the mask: background cells hold -1, which loses every
max against a real label, and only foreground cells are ever written.
"""

import numpy as np
from numba import njit, prange

BG = -1


@njit(cache=True, inline="always")
def _probe_max(flat, h, w, y, x, dys, dxs, delta, wrap, best):
    for o in range(dys.shape[0]):
        yy = y + delta * dys[o]
        xx = x + delta * dxs[o]
        if wrap:
            yy %= h
            xx %= w
        elif yy < 0 or yy >= h or xx < 0 or xx >= w:
            continue
        v = flat[yy * w + xx]
        if v > best:
            best = v
    return best


@njit(cache=True)
def inplace_sweep(flat, fidx, fy, fx, h, w, dys, dxs, delta, wrap):
    """One raster-order pass over the foreground, updating labels as it goes."""
    changed = False
    for t in range(fidx.shape[0]):
        p = fidx[t]
        old = flat[p]
        best = _probe_max(flat, h, w, fy[t], fx[t], dys, dxs, delta, wrap, old)
        if best != old:
            flat[p] = best
            changed = True
    return changed


@njit(cache=True)
def sync_sweep(src, dst, fidx, fy, fx, h, w, dys, dxs, delta, wrap):
    """One double-buffered pass: reads only ``src``, writes the foreground of ``dst``."""
    changed = False
    for t in range(fidx.shape[0]):
        p = fidx[t]
        old = src[p]
        best = _probe_max(src, h, w, fy[t], fx[t], dys, dxs, delta, wrap, old)
        dst[p] = best
        if best != old:
            changed = True
    return changed


@njit(cache=True, inline="always")
def _move(counts, ndistinct, old, new):
    # ``new`` was read from a live cell, so its count is already positive.
    counts[old] -= 1
    if counts[old] == 0:
        ndistinct[0] -= 1
    counts[new] += 1


@njit(cache=True)
def kms_pass(flat, fidx, fy, fx, h, w, dys, dxs, delta, wrap,
             seen, stamp, karray, cap, changed_buf, counts, ndistinct):
    """Fused dilation and bounded cluster count over the foreground.

    Every cell is dilated. Counting stops for the rest of the sweep as soon
    as one label changed, and membership tests stop once more than ``cap``
    distinct labels were seen. ``seen[label] == stamp`` marks labels already
    stored in ``karray`` during this pass. Flat indices of changed cells are
    written to ``changed_buf``. ``counts[label]`` (cells per label) and
    ``ndistinct[0]`` are kept up to date.

    Returns ``(idempotent, overflowed, stored, n_changed)``.
    """
    idempotent = True
    overflowed = False
    n = 0
    nchanged = 0
    for t in range(fidx.shape[0]):
        p = fidx[t]
        old = flat[p]
        best = _probe_max(flat, h, w, fy[t], fx[t], dys, dxs, delta, wrap, old)
        if best != old:
            flat[p] = best
            changed_buf[nchanged] = p
            nchanged += 1
            _move(counts, ndistinct, old, best)
        if not idempotent:
            continue
        if best != old:
            idempotent = False
        if overflowed:
            continue
        if seen[best] != stamp:
            if n == cap:
                overflowed = True
            else:
                seen[best] = stamp
                karray[n] = best
                n += 1
    return idempotent, overflowed, n, nchanged


@njit(cache=True)
def unit_closure(flat, h, w, dys, dxs, wrap, queue, queued, starts, nstarts,
                 counts, ndistinct):
    """Propagate labels at scale 1 until nothing changes.

    Seeded with the cells in ``starts[:nstarts]`` (those whose label just
    rose), a FIFO worklist pushes every increase to the cells that probe it,
    i.e. ``q = p - b``. The fixed point reached is the one repeated unit-scale
    sweeps would reach, since max-propagation is order-independent. Label
    counts are maintained as in :func:`kms_pass`. Returns the number of label
    updates made.
    """
    cap = queue.shape[0]
    head = 0
    tail = 0
    size = 0
    for i in range(nstarts):
        p = starts[i]
        if not queued[p]:
            queued[p] = True
            queue[tail] = p
            tail += 1
            if tail == cap:
                tail = 0
            size += 1
    updates = 0
    while size > 0:
        p = queue[head]
        head += 1
        if head == cap:
            head = 0
        size -= 1
        queued[p] = False
        v = flat[p]
        y = p // w
        x = p - y * w
        for o in range(dys.shape[0]):
            yy = y - dys[o]
            xx = x - dxs[o]
            if wrap:
                yy %= h
                xx %= w
            elif yy < 0 or yy >= h or xx < 0 or xx >= w:
                continue
            q = yy * w + xx
            c = flat[q]
            if c != BG and c < v:
                flat[q] = v
                _move(counts, ndistinct, c, v)
                updates += 1
                if not queued[q]:
                    queued[q] = True
                    queue[tail] = q
                    tail += 1
                    if tail == cap:
                        tail = 0
                    size += 1
    return updates


@njit(cache=True)
def label_counts(flat, fidx, counts):
    """Fill ``counts[label]`` with cells per label; returns the distinct count."""
    n = 0
    for t in range(fidx.shape[0]):
        v = flat[fidx[t]]
        if counts[v] == 0:
            n += 1
        counts[v] += 1
    return n


@njit(cache=True)
def distinct_exceeds(flat, fidx, seen, stamp, cap):
    """Whether the foreground holds more than ``cap`` distinct labels (stops early)."""
    n = 0
    for t in range(fidx.shape[0]):
        v = flat[fidx[t]]
        if seen[v] != stamp:
            if n == cap:
                return True
            seen[v] = stamp
            n += 1
    return False


@njit(cache=True, parallel=True)
def band_pass(src, dst, mask, h, w, row_bounds, dys, dxs, delta, wrap,
              band_changed, band_overflowed, band_stored, band_karray, cap):
    """Synchronous pass split into horizontal bands, one worker per band.

    Each band keeps its own bounded label array (linear membership) with the
    two early breaks applied per band; the caller reduces flags and arrays.
    """
    nbands = row_bounds.shape[0] - 1
    for b in prange(nbands):
        changed = False
        overflowed = False
        n = 0
        last = 0
        for y in range(row_bounds[b], row_bounds[b + 1]):
            for x in range(w):
                p = y * w + x
                if not mask[p]:
                    continue
                old = src[p]
                best = _probe_max(src, h, w, y, x, dys, dxs, delta, wrap, old)
                dst[p] = best
                if changed:
                    continue
                if best != old:
                    changed = True
                if overflowed:
                    continue
                if n > 0 and band_karray[b, last] == best:
                    continue
                found = False
                for s in range(n):
                    if band_karray[b, s] == best:
                        last = s
                        found = True
                        break
                if not found:
                    if n == cap:
                        overflowed = True
                    else:
                        band_karray[b, n] = best
                        last = n
                        n += 1
        band_changed[b] = changed
        band_overflowed[b] = overflowed
        band_stored[b] = n


@njit(cache=True, parallel=True)
def rowclass_inplace_pass(flat, mask, h, w, dys, dxs, delta, wrap):
    """Raster-order in-place pass, parallel over row residues mod ``delta``.

    Every probe moves by a multiple of ``delta`` rows, so under clamp (or
    under wrap when the height is a multiple of ``delta``) rows in different
    residue classes never read each other and each class can be swept on its
    own in ascending order. The result equals one sequential raster sweep.
    """
    nclass = min(delta, h)
    for r0 in prange(nclass):
        for y in range(r0, h, delta):
            for x in range(w):
                p = y * w + x
                if not mask[p]:
                    continue
                old = flat[p]
                best = _probe_max(flat, h, w, y, x, dys, dxs, delta, wrap, old)
                if best != old:
                    flat[p] = best


@njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def component_roots(mask, dys, dxs, wrap):
    """Union-find over foreground cells linked by ``p ~ p + b``.

    Returns an ``(h, w)`` array holding each foreground cell's component root
    (a flat index) and -1 on background, plus the component count.
    """
    h, w = mask.shape
    parent = np.arange(h * w)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            p = y * w + x
            for o in range(dys.shape[0]):
                yy = y + dys[o]
                xx = x + dxs[o]
                if wrap:
                    yy %= h
                    xx %= w
                elif yy < 0 or yy >= h or xx < 0 or xx >= w:
                    continue
                if not mask[yy, xx]:
                    continue
                ra = _find(parent, p)
                rb = _find(parent, yy * w + xx)
                if ra != rb:
                    parent[ra] = rb
    roots = np.full((h, w), -1, dtype=np.int64)
    count = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                r = _find(parent, y * w + x)
                roots[y, x] = r
                if r == y * w + x:
                    count += 1
    return roots, count
