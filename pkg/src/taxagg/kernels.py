"""Hot loops for exact inference, each in a numba and a pure-numpy flavour.

The numba versions are used when numba imports and ``TAXAGG_DISABLE_NUMBA``
is unset (or ``0``).  Both flavours share one calling convention so tests
and the benchmark can run them side by side.

Layout conventions
------------------
Clique potentials live in one flat float64 buffer; clique ``q`` occupies
``pot[pot_off[q] : pot_off[q] + pot_len[q]]`` and bit ``b`` of a local index
is the state of the clique's ``b``-th variable.  For junction-tree edge
``e`` (child ``e_child[e]`` -> parent ``e_parent[e]``) the arrays
``maps[cmap_off[e]:...]`` and ``maps[pmap_off[e]:...]`` send each local
configuration of child / parent to its separator configuration.  Edges are
stored in collect order (leaves first); distribution walks them backwards.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _numba_requested() -> bool:
    return os.environ.get("TAXAGG_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _numba_requested()


def _maybe_njit(func):
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True, nogil=True)(func)
    return func


# ---------------------------------------------------------------------------
# junction tree calibration
# ---------------------------------------------------------------------------


def _calibrate_batch_py(
    base_pot, pot_off, pot_len,
    e_child, e_parent, cmap_off, pmap_off, sep_off, sep_len, maps,
    inj_clique, inj_bit, read_clique, read_bit,
    lik0, lik1,
):
    """Reference loop body, compiled by numba for the fast path.

    ``lik0``/``lik1`` are ``(n, V)`` scaled likelihoods for the ``V``
    variables carrying evidence slots.  Returns ``(marginals, log_z)`` with
    ``marginals`` shaped ``(n, R)`` for the ``R`` read-out variables.
    """
    n = lik0.shape[0]
    n_inj = inj_clique.shape[0]
    n_read = read_clique.shape[0]
    n_edges = e_child.shape[0]
    n_cliques = pot_off.shape[0]
    total_sep = 0
    for e in range(n_edges):
        total_sep += sep_len[e]
    marg = np.empty((n, n_read))
    log_z = np.empty(n)
    pot = np.empty_like(base_pot)
    seps = np.empty(max(total_sep, 1))
    for k in range(n):
        pot[:] = base_pot
        for v in range(n_inj):
            q = inj_clique[v]
            b = inj_bit[v]
            a0 = lik0[k, v]
            a1 = lik1[k, v]
            if a0 == 1.0 and a1 == 1.0:
                continue
            off = pot_off[q]
            for i in range(pot_len[q]):
                if (i >> b) & 1:
                    pot[off + i] *= a1
                else:
                    pot[off + i] *= a0
        lz = 0.0
        failed = False
        # collect: leaves towards the root
        for e in range(n_edges):
            c = e_child[e]
            p = e_parent[e]
            so = sep_off[e]
            sl = sep_len[e]
            for s in range(sl):
                seps[so + s] = 0.0
            co = pot_off[c]
            cm = cmap_off[e]
            for i in range(pot_len[c]):
                seps[so + maps[cm + i]] += pot[co + i]
            tot = 0.0
            for s in range(sl):
                tot += seps[so + s]
            if tot <= 0.0:
                failed = True
                break
            lz += np.log(tot)
            for s in range(sl):
                seps[so + s] /= tot
            po = pot_off[p]
            pm = pmap_off[e]
            for i in range(pot_len[p]):
                pot[po + i] *= seps[so + maps[pm + i]]
        if not failed:
            # every clique not appearing as a child is a root; there is one
            root = 0
            if n_edges > 0:
                root = e_parent[n_edges - 1]
            ro = pot_off[root]
            tot = 0.0
            for i in range(pot_len[root]):
                tot += pot[ro + i]
            if tot <= 0.0:
                failed = True
            else:
                lz += np.log(tot)
                for i in range(pot_len[root]):
                    pot[ro + i] /= tot
        if failed:
            log_z[k] = -np.inf
            for r in range(n_read):
                marg[k, r] = np.nan
            continue
        # distribute: root towards the leaves
        for e in range(n_edges - 1, -1, -1):
            c = e_child[e]
            p = e_parent[e]
            so = sep_off[e]
            sl = sep_len[e]
            new = np.zeros(sl)
            po = pot_off[p]
            pm = pmap_off[e]
            for i in range(pot_len[p]):
                new[maps[pm + i]] += pot[po + i]
            co = pot_off[c]
            cm = cmap_off[e]
            tot = 0.0
            for i in range(pot_len[c]):
                old = seps[so + maps[cm + i]]
                if old > 0.0:
                    pot[co + i] *= new[maps[cm + i]] / old
                else:
                    pot[co + i] = 0.0
                tot += pot[co + i]
            for i in range(pot_len[c]):
                pot[co + i] /= tot
        for r in range(n_read):
            q = read_clique[r]
            b = read_bit[r]
            off = pot_off[q]
            one = 0.0
            zero = 0.0
            for i in range(pot_len[q]):
                if (i >> b) & 1:
                    one += pot[off + i]
                else:
                    zero += pot[off + i]
            # one / (one + zero) cannot round above 1
            marg[k, r] = one / (one + zero)
        log_z[k] = lz
    return marg, log_z


_calibrate_batch_numba = _maybe_njit(_calibrate_batch_py) if NUMBA_AVAILABLE else None


def calibrate_batch_numpy(
    base_pot, pot_off, pot_len,
    e_child, e_parent, cmap_off, pmap_off, sep_off, sep_len, maps,
    inj_clique, inj_bit, read_clique, read_bit,
    lik0, lik1,
):
    """Vectorised numpy version of the calibration loop."""
    n = lik0.shape[0]
    n_edges = len(e_child)
    slices = [slice(int(o), int(o + l)) for o, l in zip(pot_off, pot_len)]
    cmaps = [maps[cmap_off[e]: cmap_off[e] + pot_len[e_child[e]]] for e in range(n_edges)]
    pmaps = [maps[pmap_off[e]: pmap_off[e] + pot_len[e_parent[e]]] for e in range(n_edges)]
    inj_sel = [((np.arange(pot_len[q]) >> b) & 1).astype(bool) for q, b in zip(inj_clique, inj_bit)]
    read_sel = [((np.arange(pot_len[q]) >> b) & 1).astype(bool) for q, b in zip(read_clique, read_bit)]
    root = int(e_parent[-1]) if n_edges else 0
    marg = np.empty((n, len(read_clique)))
    log_z = np.empty(n)
    for k in range(n):
        pots = [base_pot[s].copy() for s in slices]
        for v, (q, sel) in enumerate(zip(inj_clique, inj_sel)):
            pots[q] *= np.where(sel, lik1[k, v], lik0[k, v])
        lz = 0.0
        msgs = []
        ok = True
        for e in range(n_edges):
            msg = np.bincount(cmaps[e], weights=pots[e_child[e]], minlength=sep_len[e])
            tot = msg.sum()
            if tot <= 0.0:
                ok = False
                break
            lz += np.log(tot)
            msg /= tot
            msgs.append(msg)
            pots[e_parent[e]] *= msg[pmaps[e]]
        if ok:
            tot = pots[root].sum()
            ok = tot > 0.0
            if ok:
                lz += np.log(tot)
                pots[root] /= tot
        if not ok:
            marg[k] = np.nan
            log_z[k] = -np.inf
            continue
        for e in range(n_edges - 1, -1, -1):
            new = np.bincount(pmaps[e], weights=pots[e_parent[e]], minlength=sep_len[e])
            old = msgs[e]
            ratio = np.divide(new, old, out=np.zeros_like(new), where=old > 0.0)
            c = e_child[e]
            pots[c] *= ratio[cmaps[e]]
            pots[c] /= pots[c].sum()
        for r, (q, sel) in enumerate(zip(read_clique, read_sel)):
            one = pots[q][sel].sum()
            marg[k, r] = one / (one + pots[q][~sel].sum())
        log_z[k] = lz
    return marg, log_z


def calibrate_batch_numba(*args):
    if _calibrate_batch_numba is None:  # pragma: no cover
        raise RuntimeError("numba is not available")
    return _calibrate_batch_numba(*args)


# ---------------------------------------------------------------------------
# brute-force enumeration oracle
# ---------------------------------------------------------------------------


def _enumerate_py(par_ptr, par_idx, leak, lik0, lik1):
    """Sum the joint over all ``2**V`` configurations.

    A node whose BN parent set is non-empty and has some parent on must be on
    (leaky deterministic OR); otherwise it is on with probability ``leak``.
    Returns ``(unnormalised marginal mass per node, total mass)``.
    """
    nv = leak.shape[0]
    acc = np.zeros(nv)
    total = 0.0
    for cfg in range(1 << nv):
        w = 1.0
        for v in range(nv):
            z = (cfg >> v) & 1
            any_on = False
            for t in range(par_ptr[v], par_ptr[v + 1]):
                if (cfg >> par_idx[t]) & 1:
                    any_on = True
                    break
            if any_on:
                if z == 0:
                    w = 0.0
                    break
            elif z == 1:
                w *= leak[v]
            else:
                w *= 1.0 - leak[v]
            if z == 1:
                w *= lik1[v]
            else:
                w *= lik0[v]
        if w == 0.0:
            continue
        total += w
        for v in range(nv):
            if (cfg >> v) & 1:
                acc[v] += w
    return acc, total


_enumerate_numba = _maybe_njit(_enumerate_py) if NUMBA_AVAILABLE else None


def enumerate_numpy(par_ptr, par_idx, leak, lik0, lik1, chunk: int = 1 << 16):
    nv = leak.shape[0]
    acc = np.zeros(nv)
    total = 0.0
    shifts = np.arange(nv)
    n_cfg = 1 << nv
    for start in range(0, n_cfg, chunk):
        cfg = np.arange(start, min(n_cfg, start + chunk))
        bits = ((cfg[:, None] >> shifts[None, :]) & 1).astype(bool)
        w = np.ones(len(cfg))
        for v in range(nv):
            ps = par_idx[par_ptr[v]: par_ptr[v + 1]]
            z = bits[:, v]
            if len(ps):
                any_on = bits[:, ps].any(axis=1)
            else:
                any_on = np.zeros(len(cfg), dtype=bool)
            cpd = np.where(any_on, z.astype(float), np.where(z, leak[v], 1.0 - leak[v]))
            w *= cpd * np.where(z, lik1[v], lik0[v])
        total += w.sum()
        acc += w @ bits
    return acc, total


def enumerate_numba(*args):
    if _enumerate_numba is None:  # pragma: no cover
        raise RuntimeError("numba is not available")
    return _enumerate_numba(*args)


def calibrate_batch(*args):
    if USE_NUMBA:
        return calibrate_batch_numba(*args)
    return calibrate_batch_numpy(*args)


def enumerate_configs(*args):
    if USE_NUMBA:
        return enumerate_numba(*args)
    return enumerate_numpy(*args)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
