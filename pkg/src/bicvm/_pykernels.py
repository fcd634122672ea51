"""Pure numpy fallback for the compiled training epoch."""
import numpy as np


def _gather(ptr, ids, sents):
    lengths = ptr[sents + 1] - ptr[sents]
    flat = np.concatenate([ids[ptr[s] : ptr[s + 1]] for s in sents])
    return flat, lengths


def train_epoch(W, G, ptr, ids, a_sent, b_sent, noise_b, noise_a, margin, reg_lambda, step_size, eps):
    """Run per-pair AdaGrad updates over the scheduled pairs, in place.

    ``W`` and ``G`` are the concatenated parameter and squared-gradient
    matrices; sentences are CSR rows ``ids[ptr[s]:ptr[s+1]]`` of global row
    ids. ``noise_b[p]`` are contrasted against sentence ``a_sent[p]`` and
    ``noise_a[p]`` against ``b_sent[p]``. Rows that receive an update are
    those of the pair's own two sentences plus those of noise sentences whose
    hinge is active; each gets ``reg_lambda * row`` added to its gradient.
    Returns the summed hinge loss.
    """
    d = W.shape[1]
    total = 0.0
    for p in range(len(a_sent)):
        a = ids[ptr[a_sent[p]] : ptr[a_sent[p] + 1]]
        b = ids[ptr[b_sent[p]] : ptr[b_sent[p] + 1]]
        ra = W[a].sum(axis=0)
        rb = W[b].sum(axis=0)
        dab = float((ra - rb) @ (ra - rb))
        parts = [a, b]
        scatter_rows = []
        scatter_vals = []
        ga = np.zeros(d)
        gb = np.zeros(d)
        active = False
        for noise, anchor, sign_a in ((noise_b[p], ra, True), (noise_a[p], rb, False)):
            if not len(noise):
                continue
            flat, lengths = _gather(ptr, ids, noise)
            starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
            rn = np.add.reduceat(W[flat], starts, axis=0)
            diff = anchor - rn
            h = margin + dab - np.einsum("ij,ij->i", diff, diff)
            on = h > 0
            if not on.any():
                continue
            active = True
            total += float(h[on].sum())
            n_on = int(on.sum())
            if sign_a:
                ga += 2.0 * (rn[on] - rb).sum(axis=0)
                gb += 2.0 * n_on * (rb - ra)
            else:
                ga += 2.0 * n_on * (ra - rb)
                gb += 2.0 * (rn[on] - ra).sum(axis=0)
            keep = np.repeat(on, lengths)
            parts.append(flat[keep])
            scatter_rows.append(flat[keep])
            scatter_vals.append(np.repeat(2.0 * diff[on], lengths[on], axis=0))

        touched = np.unique(np.concatenate(parts))
        grad = np.zeros((len(touched), d))
        if active:
            for rows, vals in zip(scatter_rows, scatter_vals):
                np.add.at(grad, np.searchsorted(touched, rows), vals)
            np.add.at(grad, np.searchsorted(touched, a), ga)
            np.add.at(grad, np.searchsorted(touched, b), gb)
        g = grad + reg_lambda * W[touched]
        G[touched] += g * g
        W[touched] -= step_size * g / (np.sqrt(G[touched]) + eps)
    return total
