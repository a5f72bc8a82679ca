"""Experiment instance builders: the n x n right/down grid, the synthetic
diagonal-reward generator, navigation maps with visibility-based rewards,
and the single-state-per-level MDP that encodes cardinality-constrained
selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .mdp import LeveledMdp
from .objectives import CoverageObjective, LogDetObjective
from .rng import derive_rng


def cell_id(i: int, j: int) -> str:
    return f"{i},{j}"


def parse_cell(sid: str) -> tuple:
    i, j = sid.split(",")
    return int(i), int(j)


def build_grid(n: int) -> LeveledMdp:
    """n x n grid with moves R (column + 1) and D (row + 1).

    Cell (i, j) sits at level i + j - 1; the walk starts at (1, 1) and every
    trajectory ends at the non-acting corner (n, n) after 2n - 2 moves.
    """
    if n < 2:
        raise ValueError(f"grid side must be >= 2, got {n}")
    states = []
    actions = {}
    transitions = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            sid = cell_id(i, j)
            acting = not (i == n and j == n)
            states.append((sid, i + j - 1, acting))
            if not acting:
                continue
            acts = []
            if j < n:
                acts.append("R")
                transitions[(sid, "R")] = {cell_id(i, j + 1): 1.0}
            if i < n:
                acts.append("D")
                transitions[(sid, "D")] = {cell_id(i + 1, j): 1.0}
            actions[sid] = acts
    return LeveledMdp(2 * n - 1, states, actions, transitions, cell_id(1, 1))


# ---------------------------------------------------------------------------
# Synthetic diagonal log-det instances.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Grid size n, reward dimension d (even), sparse multiplicity t, and
    the log-det regularizer."""

    n: int = 10
    d: int = 10
    t: int = 2
    lam: float = 1e-5
    seed: int = 0

    def check(self):
        if self.d % 2 != 0 or self.d <= 0:
            raise ValueError("reward dimension d must be a positive even number")
        if self.t < 1:
            raise ValueError("sparse multiplicity t must be >= 1")


def build_synthetic(spec: SyntheticSpec) -> tuple:
    """Grid MDP plus diagonal rewards: the first d/2 diagonal entries of
    every pair are i.i.d. uniform on {0..10}, the rest are zero; then for
    each sparse coordinate i, t pairs at distinct states have their whole
    matrix replaced by the single-entry indicator at (i, i).

    Deterministic given spec.seed.  Returns (mdp, objective).
    """
    spec.check()
    mdp = build_grid(spec.n)
    gs = mdp.ground_set
    rng = derive_rng(spec.seed)
    half = spec.d // 2
    diags = np.zeros((gs.size, spec.d))
    diags[:, :half] = rng.integers(0, 11, size=(gs.size, half)).astype(float)
    # Replacement sites: states where the full action set {R, D} is legal,
    # distinct across sparse coordinates too.  Every state therefore keeps at
    # least one unreplaced action and no corridor is ever forced through a
    # replaced pair.
    candidates = [sid for sid in mdp.state_ids if len(mdp.actions[sid]) >= 2]
    if spec.t * half > len(candidates):
        raise ValueError(
            f"{spec.t * half} sparse replacements exceed the {len(candidates)} "
            "states with a full action set"
        )
    chosen = rng.choice(len(candidates), size=spec.t * half, replace=False)
    for offset, i in enumerate(range(half, spec.d)):
        for s_idx in chosen[offset * spec.t:(offset + 1) * spec.t]:
            sid = candidates[int(s_idx)]
            acts = mdp.actions[sid]
            act = acts[int(rng.integers(len(acts)))]
            row = np.zeros(spec.d)
            row[i] = 1.0
            diags[gs.index[(sid, act)]] = row
    return mdp, LogDetObjective(diags, spec.lam)


# ---------------------------------------------------------------------------
# Navigation maps.
#
# ASCII format, one row per line: '#' obstacle, '.' navigable, 'E' navigable
# explore target, 'S' navigable start override.  Lines starting with ';' are
# comments; an optional header line 'targets: (r,c) (r,c) ...' adds targets
# at arbitrary cells (also obstacles).  Coordinates are 1-based (row, col).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NavMap:
    """Occupancy grid with explore targets; `navigable` is indexed [r-1, c-1]."""

    navigable: np.ndarray
    targets: tuple = ()
    start: tuple = (1, 1)
    vision_range: float = 3.0
    cell_size_cm: float = 20.0
    name: str = ""

    def __post_init__(self):
        self.navigable.setflags(write=False)
        rows, cols = self.navigable.shape
        for r, c in self.targets:
            if not (1 <= r <= rows and 1 <= c <= cols):
                raise ValueError(f"target ({r}, {c}) outside the {rows}x{cols} map")

    @property
    def side(self) -> int:
        rows, cols = self.navigable.shape
        if rows != cols:
            raise ValueError("map is not square")
        return rows

    def is_navigable(self, r: int, c: int) -> bool:
        return bool(self.navigable[r - 1, c - 1])


def parse_map(text: str, name: str = "") -> NavMap:
    rows = []
    targets = []
    start = None
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        if line.lstrip().startswith("targets:"):
            spec = line.split(":", 1)[1]
            for tok in spec.replace("(", " ").replace(")", " ").split():
                r, c = tok.split(",")
                targets.append((int(r), int(c)))
            continue
        rows.append(line.strip())
    if not rows:
        raise ValueError("map has no grid rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("map rows have inconsistent widths")
    nav = np.zeros((len(rows), width), dtype=bool)
    for r, row in enumerate(rows, start=1):
        for c, ch in enumerate(row, start=1):
            if ch == "#":
                continue
            elif ch in ".ES":
                nav[r - 1, c - 1] = True
                if ch == "E":
                    targets.append((r, c))
                elif ch == "S":
                    if start is not None:
                        raise ValueError("multiple start cells")
                    start = (r, c)
            else:
                raise ValueError(f"unknown map character {ch!r} at row {r}")
    return NavMap(nav, tuple(dict.fromkeys(targets)), start or (1, 1), name=name)


def format_map(nav_map: NavMap) -> str:
    rows, cols = nav_map.navigable.shape
    target_set = set(nav_map.targets)
    lines = []
    extra_targets = [t for t in nav_map.targets if not nav_map.navigable[t[0] - 1, t[1] - 1]]
    if extra_targets:
        lines.append("targets: " + " ".join(f"({r},{c})" for r, c in extra_targets))
    for r in range(1, rows + 1):
        chars = []
        for c in range(1, cols + 1):
            if not nav_map.navigable[r - 1, c - 1]:
                chars.append("#")
            elif (r, c) == nav_map.start and nav_map.start != (1, 1):
                chars.append("S")
            elif (r, c) in target_set:
                chars.append("E")
            else:
                chars.append(".")
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"


def load_map(path) -> NavMap:
    with open(path) as fh:
        return parse_map(fh.read(), name=str(path))


def save_map(nav_map: NavMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_map(nav_map))


def packaged_map_names() -> tuple:
    return ("nav_a", "nav_b", "nav_c")


def packaged_map(name: str) -> NavMap:
    """One of the bundled procedural stand-in maps (not derived from any
    real-world reconstruction)."""
    if name not in packaged_map_names():
        raise ValueError(f"unknown packaged map {name!r}; have {packaged_map_names()}")
    text = resources.files("submodplan").joinpath(f"maps/{name}.map").read_text()
    return parse_map(text, name=name)


def resolve_map(spec: str) -> NavMap:
    """A packaged map name or a filesystem path."""
    if spec in packaged_map_names():
        return packaged_map(spec)
    return load_map(spec)


# ---------------------------------------------------------------------------
# Visibility.  A target cell is visible from a source cell when they are
# 4-adjacent, or when the center distance is strictly below the vision range
# and every cell the connecting segment passes through (the supercover of
# the segment, endpoints excluded) is navigable, including the target cell.
# All geometry uses doubled integer coordinates so the test is exact and
# symmetric in the two cells.
# ---------------------------------------------------------------------------


def _segment_hits_square(p0, p1, r: int, c: int) -> bool:
    # Cell (r, c) occupies [2r-2, 2r] x [2c-2, 2c] in doubled coordinates.
    x_lo, x_hi = 2 * r - 2, 2 * r
    y_lo, y_hi = 2 * c - 2, 2 * c
    if max(p0[0], p1[0]) < x_lo or min(p0[0], p1[0]) > x_hi:
        return False
    if max(p0[1], p1[1]) < y_lo or min(p0[1], p1[1]) > y_hi:
        return False
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    signs = set()
    for corner in ((x_lo, y_lo), (x_lo, y_hi), (x_hi, y_lo), (x_hi, y_hi)):
        cross = dx * (corner[1] - p0[1]) - dy * (corner[0] - p0[0])
        signs.add(0 if cross == 0 else (1 if cross > 0 else -1))
    return not (signs == {1} or signs == {-1})


def cells_between(a: tuple, b: tuple) -> list:
    """Cells the center-to-center segment passes through, excluding a and b."""
    p0 = (2 * a[0] - 1, 2 * a[1] - 1)
    p1 = (2 * b[0] - 1, 2 * b[1] - 1)
    out = []
    for r in range(min(a[0], b[0]), max(a[0], b[0]) + 1):
        for c in range(min(a[1], b[1]), max(a[1], b[1]) + 1):
            if (r, c) in (a, b):
                continue
            if _segment_hits_square(p0, p1, r, c):
                out.append((r, c))
    return out


def visibility(nav_map: NavMap, source: tuple, target: tuple) -> bool:
    rows, cols = nav_map.navigable.shape
    for r, c in (source, target):
        if not (1 <= r <= rows and 1 <= c <= cols):
            raise ValueError(f"cell ({r}, {c}) outside the map")
    if abs(source[0] - target[0]) + abs(source[1] - target[1]) == 1:
        return True
    dist_sq = (source[0] - target[0]) ** 2 + (source[1] - target[1]) ** 2
    if dist_sq >= nav_map.vision_range**2:
        return False
    if not nav_map.is_navigable(*target):
        return False
    return all(nav_map.is_navigable(r, c) for r, c in cells_between(source, target))


def build_nav(nav_map: NavMap, lam: float = 1e-5, targets=None) -> tuple:
    """Grid MDP restricted to navigable cells reaching the bottom-right
    corner, with diagonal 0/1 rewards marking which targets are visible from
    each state.  Returns (mdp, objective)."""
    n = nav_map.side
    targets = tuple(targets if targets is not None else nav_map.targets)
    if not targets:
        raise ValueError("navigation instance needs at least one explore target")
    start = nav_map.start
    goal = (n, n)
    if not nav_map.is_navigable(*start) or not nav_map.is_navigable(*goal):
        raise ValueError("goal unreachable under R/D moves: start or goal not navigable")

    def moves(cell):
        r, c = cell
        out = []
        if c < n and nav_map.is_navigable(r, c + 1):
            out.append(("R", (r, c + 1)))
        if r < n and nav_map.is_navigable(r + 1, c):
            out.append(("D", (r + 1, c)))
        return out

    # Forward reachability from the start, then backward pruning to the goal.
    forward = {start}
    frontier = [start]
    while frontier:
        cell = frontier.pop()
        for _, nxt in moves(cell):
            if nxt not in forward:
                forward.add(nxt)
                frontier.append(nxt)
    if goal not in forward:
        raise ValueError("goal unreachable under R/D moves")
    keep = {goal}
    order = sorted(forward, key=lambda rc: -(rc[0] + rc[1]))
    for cell in order:
        if cell == goal:
            continue
        if any(nxt in keep for _, nxt in moves(cell)):
            keep.add(cell)
    if start not in keep:
        raise ValueError("goal unreachable under R/D moves")

    base_level = start[0] + start[1] - 1
    states = []
    actions = {}
    transitions = {}
    for cell in sorted(keep):
        r, c = cell
        sid = cell_id(r, c)
        acting = cell != goal
        states.append((sid, r + c - 1 - base_level + 1, acting))
        if not acting:
            continue
        acts = []
        for act, nxt in moves(cell):
            if nxt in keep:
                acts.append(act)
                transitions[(sid, act)] = {cell_id(*nxt): 1.0}
        actions[sid] = acts
    levels = (n - start[0]) + (n - start[1]) + 1
    mdp = LeveledMdp(levels, states, actions, transitions, cell_id(*start))

    gs = mdp.ground_set
    vis_by_state = {}
    diags = np.zeros((gs.size, len(targets)))
    for e, (sid, _act) in enumerate(gs.pairs):
        if sid not in vis_by_state:
            cell = parse_cell(sid)
            vis_by_state[sid] = np.array(
                [1.0 if visibility(nav_map, cell, t) else 0.0 for t in targets]
            )
        diags[e] = vis_by_state[sid]
    return mdp, LogDetObjective(diags, lam)


def sample_targets(nav_map: NavMap, count: int, seed=0) -> tuple:
    """`count` distinct navigable cells, uniformly at random."""
    cells = [
        (r, c)
        for r in range(1, nav_map.navigable.shape[0] + 1)
        for c in range(1, nav_map.navigable.shape[1] + 1)
        if nav_map.is_navigable(r, c)
    ]
    if count > len(cells):
        raise ValueError(f"cannot place {count} targets on {len(cells)} navigable cells")
    rng = derive_rng(seed)
    chosen = rng.choice(len(cells), size=count, replace=False)
    return tuple(cells[int(i)] for i in chosen)


def make_standin_map(index: int, side: int = 21, seed_base: int = 7321) -> NavMap:
    """Procedural stand-in navigation map: random obstacle blocks with two
    carved monotone corridors so the bottom-right corner stays reachable.

    These are synthetic layouts bundled for benchmarking; they do not
    reproduce any particular real-world floor plan.
    """
    rng = derive_rng(seed_base, index)
    nav = np.ones((side, side), dtype=bool)
    n_blocks = 14 + 2 * index
    for _ in range(n_blocks):
        h = int(rng.integers(1, 5))
        w = int(rng.integers(1, 5))
        r0 = int(rng.integers(0, side - h + 1))
        c0 = int(rng.integers(0, side - w + 1))
        nav[r0:r0 + h, c0:c0 + w] = False

    def carve(path_rng):
        moves = ["R"] * (side - 1) + ["D"] * (side - 1)
        path_rng.shuffle(moves)
        r = c = 0
        nav[r, c] = True
        for mv in moves:
            if mv == "R":
                c += 1
            else:
                r += 1
            nav[r, c] = True

    carve(derive_rng(seed_base, index, 1))
    carve(derive_rng(seed_base, index, 2))
    targets = sample_targets(NavMap(nav.copy(), name="tmp"), 10, seed=(seed_base, index, 3))
    return NavMap(nav, targets, name=f"nav_{'abc'[index]}")


# ---------------------------------------------------------------------------
# Cardinality-constrained selection as a leveled MDP: one state per level,
# one action per selectable element, k acting levels.
# ---------------------------------------------------------------------------


def build_cardinality_mdp(n: int, k: int) -> LeveledMdp:
    if n < 1 or k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    states = [(f"L{h}", h, h <= k) for h in range(1, k + 2)]
    actions = {f"L{h}": [str(a) for a in range(1, n + 1)] for h in range(1, k + 1)}
    transitions = {
        (f"L{h}", str(a)): {f"L{h + 1}": 1.0}
        for h in range(1, k + 1)
        for a in range(1, n + 1)
    }
    return LeveledMdp(k + 1, states, actions, transitions, "L1")


def coverage_on_mdp(mdp: LeveledMdp, element_cover, universe_weights) -> CoverageObjective:
    """Lift a per-action coverage function to the MDP's ground set: the pair
    (state, action a) covers exactly what element a covers."""
    cover = []
    for _sid, act in mdp.ground_set.pairs:
        cover.append(element_cover[int(act) - 1])
    return CoverageObjective(cover, universe_weights)


def random_cardinality_instance(n: int, k: int, universe: int, seed=0,
                                density: float = 0.35) -> tuple:
    """Random weighted-coverage selection instance; returns
    (mdp, objective, per-element covers, universe weights)."""
    rng = derive_rng(seed)
    mdp = build_cardinality_mdp(n, k)
    element_cover = []
    for _ in range(n):
        items = np.flatnonzero(rng.random(universe) < density)
        if not items.size:
            items = np.array([int(rng.integers(universe))])
        element_cover.append(items.tolist())
    weights = rng.uniform(0.5, 1.5, size=universe)
    obj = coverage_on_mdp(mdp, element_cover, weights)
    return mdp, obj, element_cover, weights


# ---------------------------------------------------------------------------
# Coverage objective file format (for cardinality experiments):
#   universe <size>
#   uweight <item> <weight>          (optional; default weight 1)
#   cover <element 1..n> <item> ...  (one line per selectable element)
# ---------------------------------------------------------------------------


def loads_coverage(text: str) -> tuple:
    universe = None
    weights = {}
    covers = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        tokens = line.split()
        if tokens[0] == "universe":
            universe = int(tokens[1])
        elif tokens[0] == "uweight":
            weights[int(tokens[1])] = float(tokens[2])
        elif tokens[0] == "cover":
            covers[int(tokens[1])] = [int(t) for t in tokens[2:]]
        else:
            raise ValueError(f"line {lineno}: unknown directive {tokens[0]!r}")
    if universe is None:
        raise ValueError("missing 'universe' header")
    n = max(covers) if covers else 0
    if sorted(covers) != list(range(1, n + 1)):
        raise ValueError("cover lines must number elements 1..n")
    w = np.ones(universe)
    for u, val in weights.items():
        w[u] = val
    return [covers[i] for i in range(1, n + 1)], w


def load_coverage(path) -> tuple:
    with open(path) as fh:
        return loads_coverage(fh.read())
