"""Independent reference computations used by the test suite."""
import numpy as np

LD = np.longdouble


def _root(rows, sent):
    out = np.zeros(rows.shape[1], dtype=LD)
    for w in sent:
        out = out + rows[int(w)]
    return out


def _sq(v):
    return sum(x * x for x in v)


def loss_oracle(rows_a, rows_b, a, b, noise, margin, noise_a=()):
    """Plain-loop hinge loss in extended precision."""
    ra, rb = _root(rows_a, a), _root(rows_b, b)
    dab = _sq(ra - rb)
    total = LD(0)
    for n in noise:
        total += max(LD(0), LD(margin) + dab - _sq(ra - _root(rows_b, n)))
    for m in noise_a:
        total += max(LD(0), LD(margin) + dab - _sq(rb - _root(rows_a, m)))
    return total


def min_abs_hinge(rows_a, rows_b, a, b, noise, margin, noise_a=()):
    ra, rb = _root(rows_a, a), _root(rows_b, b)
    dab = _sq(ra - rb)
    hs = [LD(margin) + dab - _sq(ra - _root(rows_b, n)) for n in noise]
    hs += [LD(margin) + dab - _sq(rb - _root(rows_a, m)) for m in noise_a]
    return min((abs(h) for h in hs), default=np.inf)


def finite_difference(rows_a, rows_b, a, b, noise, margin, side, w, j, h=1e-5, noise_a=()):
    """Central difference of :func:`loss_oracle` w.r.t. one embedding entry."""
    A = rows_a.astype(LD)
    B = rows_b.astype(LD)
    target = A if side == "a" else B
    orig = target[w, j]
    target[w, j] = orig + LD(h)
    up = loss_oracle(A, B, a, b, noise, margin, noise_a)
    target[w, j] = orig - LD(h)
    down = loss_oracle(A, B, a, b, noise, margin, noise_a)
    target[w, j] = orig
    return float((up - down) / (2 * LD(h)))


def relative_error(x, y):
    den = max(abs(x), abs(y))
    return 0.0 if den == 0 else abs(x - y) / den


def noise_replay(seed, size, excluded, k):
    """Replay the documented sampler procedure entry by entry."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, np.array([[size]]), size=(1, k))[0].tolist()
    while True:
        bad = [c for c in range(k) if idx[c] == excluded]
        if not bad:
            return idx
        redraw = rng.integers(0, np.array([size] * len(bad)))
        for c, v in zip(bad, redraw):
            idx[c] = int(v)


def perceptron_snapshot_oracle(xs, ys, classes, epochs, seed):
    """Averaged perceptron by explicitly storing the weights after every step."""
    X = np.hstack([np.asarray(xs, dtype=float), np.ones((len(xs), 1))])
    w = np.zeros((classes, X.shape[1]))
    snaps = []
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        for i in rng.permutation(len(xs)):
            scores = [float(w[c] @ X[i]) for c in range(classes)]
            guess = max(range(classes), key=lambda c: (scores[c], -c))
            if guess != ys[i]:
                w[ys[i]] += X[i]
                w[guess] -= X[i]
            snaps.append(w.copy())
    return w, (np.mean(snaps, axis=0) if snaps else w.copy())
