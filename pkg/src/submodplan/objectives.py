"""Monotone submodular set functions over ground-set indices.

Three families: log-determinant of summed PSD reward matrices, additive
weights, and weighted coverage.  Sets are given as iterables of dense
ground-set indices.  All objectives are pure and immutable, so they can be
evaluated concurrently.
"""

from __future__ import annotations

import numpy as np

SYM_ATOL = 1e-9
PSD_ATOL = 1e-9


class Objective:
    """Contract: evaluate(indices) -> float, plus optional exact capabilities.

    `has_exact_gradient` advertises a closed-form partial derivative of the
    multilinear extension, `has_exact_extension` a closed-form extension
    value.  Both are construction-time facts, never estimates.
    """

    is_monotone = True
    is_submodular = True
    has_exact_gradient = False
    has_exact_extension = False

    def __init__(self, size):
        self.size = int(size)

    def evaluate(self, elements) -> float:
        raise NotImplementedError

    def empty_value(self) -> float:
        return self.evaluate(())

    def marginal_gain(self, elements, e) -> float:
        """evaluate(S + e) - evaluate(S - e)."""
        s = set(int(i) for i in elements)
        return self.evaluate(s | {int(e)}) - self.evaluate(s - {int(e)})

    def exact_gradient(self, x, coords) -> np.ndarray:
        raise RuntimeError(f"no exact gradient for {type(self).__name__}")

    def extension_value(self, x) -> float:
        raise RuntimeError(f"no exact extension value for {type(self).__name__}")

    # Batched hooks used by the Monte-Carlo estimators; subclasses override
    # these with vectorized versions where the structure allows it.

    def evaluate_sets(self, inclusion: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(np.flatnonzero(row)) for row in inclusion])

    def gains_on_sets(self, inclusion: np.ndarray, coords) -> np.ndarray:
        out = np.empty((inclusion.shape[0], len(coords)))
        for r, row in enumerate(inclusion):
            base = set(np.flatnonzero(row).tolist())
            for j, e in enumerate(coords):
                out[r, j] = self.marginal_gain(base, e)
        return out


class AdditiveObjective(Objective):
    """f(S) = sum of fixed non-negative per-element weights (a modular function)."""

    has_exact_gradient = True
    has_exact_extension = True

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be a 1-d array")
        if np.any(weights < 0):
            raise ValueError("additive weights must be non-negative")
        super().__init__(weights.size)
        self.weights = weights
        self.weights.setflags(write=False)

    def evaluate(self, elements) -> float:
        idx = np.fromiter((int(i) for i in elements), dtype=int)
        return float(self.weights[idx].sum()) if idx.size else 0.0

    def marginal_gain(self, elements, e) -> float:
        return float(self.weights[int(e)])

    def exact_gradient(self, x, coords) -> np.ndarray:
        # The extension is linear, so the gradient is constant in x.
        return self.weights[np.asarray(coords, dtype=int)].copy()

    def extension_value(self, x) -> float:
        return float(np.dot(np.asarray(x, dtype=float), self.weights))

    def evaluate_sets(self, inclusion) -> np.ndarray:
        return inclusion.astype(float) @ self.weights

    def gains_on_sets(self, inclusion, coords) -> np.ndarray:
        g = self.weights[np.asarray(coords, dtype=int)]
        return np.broadcast_to(g, (inclusion.shape[0], g.size)).copy()


class LogDetObjective(Objective):
    """f(S) = ln det(sum of reward matrices over S + lam * I).

    Rewards are symmetric PSD d x d matrices, one per ground-set element;
    pass an (m, d) array for the all-diagonal case or (m, d, d) for dense.
    Tiny negative eigenvalues (>= -1e-9) are clipped to zero; anything worse
    is rejected.
    """

    def __init__(self, rewards, lam):
        rewards = np.asarray(rewards, dtype=float)
        if lam <= 0:
            raise ValueError(f"lam must be positive, got {lam}")
        if rewards.ndim == 2:
            if np.any(rewards < -PSD_ATOL):
                raise ValueError("diagonal rewards must be PSD (entries >= -1e-9)")
            self.diagonal = True
            self.diags = np.clip(rewards, 0.0, None)
            self.diags.setflags(write=False)
            m, d = rewards.shape
        elif rewards.ndim == 3:
            m, d, d2 = rewards.shape
            if d != d2:
                raise ValueError("reward matrices must be square")
            mats = np.empty_like(rewards)
            for k in range(m):
                a = rewards[k]
                if np.max(np.abs(a - a.T)) > SYM_ATOL:
                    raise ValueError(f"reward matrix {k} is not symmetric")
                vals, vecs = np.linalg.eigh(a)
                if vals.min() < -PSD_ATOL:
                    raise ValueError(
                        f"reward matrix {k} is not PSD (min eigenvalue {vals.min():.3e})"
                    )
                mats[k] = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
            self.diagonal = False
            self.mats = mats
            self.mats.setflags(write=False)
        else:
            raise ValueError("rewards must have shape (m, d) or (m, d, d)")
        super().__init__(m)
        self.dim = d
        self.lam = float(lam)

    def evaluate(self, elements) -> float:
        idx = np.fromiter((int(i) for i in elements), dtype=int)
        if self.diagonal:
            total = self.diags[idx].sum(axis=0) if idx.size else np.zeros(self.dim)
            return float(np.log(total + self.lam).sum())
        total = self.mats[idx].sum(axis=0) if idx.size else np.zeros((self.dim, self.dim))
        total = total + self.lam * np.eye(self.dim)
        try:
            chol = np.linalg.cholesky(total)
        except np.linalg.LinAlgError:
            raise RuntimeError("singular regularized matrix") from None
        return float(2.0 * np.log(np.diag(chol)).sum())

    def evaluate_sets(self, inclusion) -> np.ndarray:
        if not self.diagonal:
            return super().evaluate_sets(inclusion)
        sums = inclusion.astype(float) @ self.diags + self.lam
        return np.log(sums).sum(axis=1)

    def gains_on_sets(self, inclusion, coords) -> np.ndarray:
        if not self.diagonal:
            return super().gains_on_sets(inclusion, coords)
        coords = np.asarray(coords, dtype=int)
        sums = inclusion.astype(float) @ self.diags + self.lam        # (R, d)
        picked = self.diags[coords]                                   # (k, d)
        # Diagonal sum with the coordinate forced out, then back in.
        without = sums[:, None, :] - picked[None, :, :] * inclusion[:, coords, None]
        return (np.log(without + picked[None, :, :]) - np.log(without)).sum(axis=2)


class CoverageObjective(Objective):
    """Weighted coverage: f(S) = total weight of the universe items covered by S."""

    has_exact_gradient = True
    has_exact_extension = True

    def __init__(self, cover, universe_weights):
        universe_weights = np.asarray(universe_weights, dtype=float)
        if np.any(universe_weights < 0):
            raise ValueError("universe weights must be non-negative")
        matrix = np.zeros((len(cover), universe_weights.size), dtype=bool)
        for e, items in enumerate(cover):
            for u in items:
                matrix[e, int(u)] = True
        super().__init__(len(cover))
        self.cover_matrix = matrix
        self.cover_matrix.setflags(write=False)
        self.universe_weights = universe_weights
        self.universe_weights.setflags(write=False)

    def evaluate(self, elements) -> float:
        idx = np.fromiter((int(i) for i in elements), dtype=int)
        if not idx.size:
            return 0.0
        covered = self.cover_matrix[idx].any(axis=0)
        return float(self.universe_weights[covered].sum())

    def extension_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        # P(item uncovered) = prod over covering elements of (1 - x_e).
        uncovered = np.prod(np.where(self.cover_matrix, (1.0 - x)[:, None], 1.0), axis=0)
        return float(np.dot(self.universe_weights, 1.0 - uncovered))

    def exact_gradient(self, x, coords) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        one_minus = np.where(self.cover_matrix, (1.0 - x)[:, None], 1.0)
        out = np.empty(len(coords))
        for j, e in enumerate(coords):
            e = int(e)
            cols = np.flatnonzero(self.cover_matrix[e])
            if not cols.size:
                out[j] = 0.0
                continue
            mask = np.ones(self.size, dtype=bool)
            mask[e] = False
            probs = np.prod(one_minus[mask][:, cols], axis=0)
            out[j] = float(np.dot(self.universe_weights[cols], probs))
        return out

    def evaluate_sets(self, inclusion) -> np.ndarray:
        counts = inclusion.astype(int) @ self.cover_matrix.astype(int)   # (R, U)
        return (counts > 0).astype(float) @ self.universe_weights

    def gains_on_sets(self, inclusion, coords) -> np.ndarray:
        counts = inclusion.astype(int) @ self.cover_matrix.astype(int)   # (R, U)
        out = np.empty((inclusion.shape[0], len(coords)))
        for j, e in enumerate(coords):
            e = int(e)
            row = self.cover_matrix[e].astype(int)
            without = counts - np.outer(inclusion[:, e].astype(int), row)
            newly = (without == 0) & self.cover_matrix[e]
            out[:, j] = newly.astype(float) @ self.universe_weights
        return out


class OffsetObjective(Objective):
    """A constant shift of a base objective: f'(S) = f(S) + offset.

    Shifting changes no marginal gain, no gradient, and no argmax; it is
    used to move f(empty) to zero so the approximation guarantees that
    require a non-negative objective apply.
    """

    def __init__(self, base: Objective, offset=None):
        super().__init__(base.size)
        self.base = base
        self.offset = float(-base.empty_value() if offset is None else offset)
        self.has_exact_gradient = base.has_exact_gradient
        self.has_exact_extension = base.has_exact_extension

    def evaluate(self, elements) -> float:
        return self.base.evaluate(elements) + self.offset

    def marginal_gain(self, elements, e) -> float:
        return self.base.marginal_gain(elements, e)

    def exact_gradient(self, x, coords) -> np.ndarray:
        return self.base.exact_gradient(x, coords)

    def extension_value(self, x) -> float:
        # E[f(S) + c] = F(x) + c for any inclusion probabilities x.
        return self.base.extension_value(x) + self.offset

    def evaluate_sets(self, inclusion) -> np.ndarray:
        return self.base.evaluate_sets(inclusion) + self.offset

    def gains_on_sets(self, inclusion, coords) -> np.ndarray:
        return self.base.gains_on_sets(inclusion, coords)


# ---------------------------------------------------------------------------
# Reward-matrix file format: one line per element,
#   elem <index> diag <v1> ... <vd>
#   elem <index> dense <d*d values, row major>
# Blank lines and ';' comments are ignored.  Every element 0..m-1 must appear
# exactly once and all elements must share the dimension d.
# ---------------------------------------------------------------------------


def dumps_rewards(obj: LogDetObjective) -> str:
    lines = []
    for e in range(obj.size):
        if obj.diagonal:
            vals = " ".join(repr(float(v)) for v in obj.diags[e])
            lines.append(f"elem {e} diag {vals}")
        else:
            vals = " ".join(repr(float(v)) for v in obj.mats[e].ravel())
            lines.append(f"elem {e} dense {vals}")
    return "\n".join(lines) + "\n"


def loads_rewards(text: str):
    """Parse reward matrices; returns an (m, d) or (m, d, d) float array."""
    entries = {}
    dense_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        tokens = line.split()
        if tokens[0] != "elem" or len(tokens) < 4:
            raise ValueError(f"line {lineno}: expected 'elem <i> diag|dense <values>'")
        idx = int(tokens[1])
        kind = tokens[2]
        vals = np.array([float(t) for t in tokens[3:]])
        if kind == "dense":
            d = int(round(np.sqrt(vals.size)))
            if d * d != vals.size:
                raise ValueError(f"line {lineno}: dense matrix needs d*d values")
            entries[idx] = vals.reshape(d, d)
            dense_seen = True
        elif kind == "diag":
            entries[idx] = vals
        else:
            raise ValueError(f"line {lineno}: unknown reward kind {kind!r}")
    if not entries:
        raise ValueError("no reward entries found")
    m = max(entries) + 1
    if sorted(entries) != list(range(m)):
        raise ValueError("reward element indices must cover 0..m-1")
    dims = {e.shape[-1] for e in entries.values()}
    if len(dims) != 1:
        raise ValueError(f"inconsistent reward dimensions {sorted(dims)}")
    d = dims.pop()
    if dense_seen:
        out = np.empty((m, d, d))
        for i in range(m):
            e = entries[i]
            out[i] = np.diag(e) if e.ndim == 1 else e
    else:
        out = np.empty((m, d))
        for i in range(m):
            out[i] = entries[i]
    return out


def save_rewards(obj: LogDetObjective, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_rewards(obj))


def load_rewards(path):
    with open(path) as fh:
        return loads_rewards(fh.read())
