"""Pure-Python/numpy implementations of the hot groupoid kernels.

These are the reference versions.  ``_ckernels.pyx`` mirrors them operation
for operation: complex products are written out in real arithmetic (numpy's
vectorised complex multiply may fuse operations differently from scalar C),
and terms are accumulated in plan order.  The two backends therefore agree
bit-for-bit on complex128 input.  Object arrays (ints, ``Fraction``) take the
generic path for exact arithmetic.
"""

from __future__ import annotations

import numpy as np


def _accumulate(px, re, im, n):
    out_re = np.zeros(n)
    out_im = np.zeros(n)
    np.add.at(out_re, px, re)
    np.add.at(out_im, px, im)
    return out_re + 1j * out_im


def _cmul(ar, ai, br, bi):
    return ar * br - ai * bi, ar * bi + ai * br


def convolve(px, pa, pb, pw, f, g, n):
    """Accumulate ``out[px[k]] += (f[pa[k]] * g[pb[k]]) * pw[k]`` over the plan."""
    if f.dtype == object or g.dtype == object:
        prod = (f[pa] * g[pb]) * pw
        out = np.empty(n, dtype=object)
        out[:] = 0
        np.add.at(out, px, prod)
        return out
    fa, gb = f[pa], g[pb]
    re, im = _cmul(fa.real, fa.imag, gb.real, gb.imag)
    return _accumulate(px, re * pw, im * pw, n)


def convolve_twisted(px, pa, pb, pw, ps, f, g, n):
    """As :func:`convolve` with each term multiplied by ``ps[k]`` before the weight."""
    if f.dtype == object or g.dtype == object:
        prod = ((f[pa] * g[pb]) * ps) * pw
        out = np.empty(n, dtype=object)
        out[:] = 0
        np.add.at(out, px, prod)
        return out
    fa, gb = f[pa], g[pb]
    re, im = _cmul(fa.real, fa.imag, gb.real, gb.imag)
    re, im = _cmul(re, im, ps.real, ps.imag)
    return _accumulate(px, re * pw, im * pw, n)


def associativity_violation(comp):
    """Return the first triple ``(x, y, z)`` with ``(xy)z != x(yz)``, else ``None``.

    ``comp[x, y]`` is the index of ``xy`` or -1 when the pair is not composable.
    A triple also counts as a violation when exactly one bracketing is defined.
    """
    comp = np.asarray(comp)
    n = comp.shape[0]
    for x in range(n):
        for y in np.nonzero(comp[x] >= 0)[0]:
            xy = comp[x, y]
            yz = comp[y]
            left = comp[xy]
            right = np.where(yz >= 0, comp[x, np.where(yz >= 0, yz, 0)], -1)
            bad = np.nonzero(left != right)[0]
            if len(bad):
                return int(x), int(y), int(bad[0])
    return None


def cocycle_defect(comp, sigma):
    """Largest ``|s(x,y)s(xy,z) - s(x,yz)s(y,z)|`` over composable triples.

    Returns ``(defect, (x, y, z))`` with the witness of the largest defect, or
    ``(0.0, None)`` when there are no composable triples.
    """
    comp = np.asarray(comp)
    n = comp.shape[0]
    worst = 0.0
    witness = None
    for x in range(n):
        for y in np.nonzero(comp[x] >= 0)[0]:
            xy = comp[x, y]
            zs = np.nonzero(comp[y] >= 0)[0]
            if not len(zs):
                continue
            yz = comp[y, zs]
            d = np.abs(sigma[x, y] * sigma[xy, zs] - sigma[x, yz] * sigma[y, zs])
            k = int(np.argmax(d))
            if witness is None or d[k] > worst:
                worst = float(d[k])
                witness = (int(x), int(y), int(zs[k]))
    return worst, witness
