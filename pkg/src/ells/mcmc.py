"""Metropolis-Hastings sampling of partitions under the macrocanonical and elliptic weights.

Moves add or remove a single corner box. From a diagram with ``d`` distinct
parts there are ``d + 1`` addable and ``d`` removable corners, and one of the
``2d + 1`` moves is proposed uniformly. Weight ratios are incremental: adding
box ``(i, j)`` changes hooks only in row ``i`` left of ``j`` and in column ``j``
above ``i``.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .errors import DomainError
from .measures import EnsembleParams, MeasureKind, weight
from .partitions import Partition, boundary_boxes, enumerate_partitions

__all__ = [
    "ChainConfig",
    "ChainTrace",
    "EmpiricalProfile",
    "propose_move",
    "move_count",
    "weight_ratio",
    "transition_matrix",
    "detailed_balance_defect",
    "run_chain",
    "run_chains",
    "empirical_profile",
    "empirical_vs_analytic",
    "visit_frequencies",
    "mean_size",
    "y_fluctuation",
    "worker_count",
]

_KIND_CODE = {MeasureKind.MACROCANONICAL: 0, MeasureKind.ELLIPTIC: 1}


def worker_count() -> int:
    """Thread cap from ``ELLS_THREADS``, else the CPU count."""
    env = os.environ.get("ELLS_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"ELLS_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise DomainError("ELLS_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ChainConfig:
    params: EnsembleParams
    kind: MeasureKind
    steps: int
    burn_in: int = 0
    seed: int = 0
    thinning: int = 1000
    x_grid: tuple[float, ...] = ()
    y_points: tuple[float, ...] = ()
    max_size: int = -1
    record_states: bool = False

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise DomainError(f"sampling supports macrocanonical and elliptic weights, not {self.kind}")
        if not self.steps > self.burn_in >= 0:
            raise DomainError("need steps > burn_in >= 0")
        if self.thinning < 1:
            raise DomainError("thinning must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.record_states and not 0 <= self.max_size <= 12:
            raise DomainError("state recording needs a truncation 0 <= max_size <= 12")


# ---------------------------------------------------------------------------
# reference (pure Python) moves and ratios


def move_count(lam: Partition) -> int:
    return 2 * len(set(lam.rows)) + 1


def propose_move(lam: Partition, rng: np.random.Generator) -> tuple[Partition, float, float]:
    """Uniform corner move; returns ``(lam', P(lam -> lam'), P(lam' -> lam))``."""
    addable, removable = boundary_boxes(lam)
    moves = [lam.add_box(b.i) for b in addable] + [lam.remove_box(b.i) for b in removable]
    new = moves[int(rng.integers(len(moves)))]
    return new, 1.0 / len(moves), 1.0 / move_count(new)


def _g(h: int, p: EnsembleParams, kind: MeasureKind) -> float:
    if kind is MeasureKind.ELLIPTIC:
        return 1.0 + (p.M / (p.hbar * h)) ** 2
    return 1.0 / (h * h)


def _add_ratio(lam: Partition, i: int, p: EnsembleParams, kind: MeasureKind) -> float:
    j = lam.row(i) + 1
    if kind is MeasureKind.ELLIPTIC:
        r = p.q * _g(1, p, kind)
    else:
        r = p.Q
    for k in range(1, j):
        h = lam.row(i) - k + lam.col(k) - i + 1
        r *= _g(h + 1, p, kind) / _g(h, p, kind)
    for k in range(1, i):
        h = lam.row(k) - j + lam.col(j) - k + 1
        r *= _g(h + 1, p, kind) / _g(h, p, kind)
    return r


def weight_ratio(lam: Partition, new: Partition, p: EnsembleParams, kind: MeasureKind) -> float:
    """``w(new) / w(lam)`` for diagrams differing by one box."""
    if kind not in _KIND_CODE:
        raise DomainError(f"unsupported kind {kind}")
    diff = [a - b for a, b in zip(new.rows + (0,) * len(lam), lam.rows + (0,) * len(new))]
    nz = [(k, d) for k, d in enumerate(diff) if d]
    if len(nz) != 1 or abs(nz[0][1]) != 1:
        raise DomainError(f"{lam} and {new} do not differ by one box")
    i, d = nz[0][0] + 1, nz[0][1]
    if d == 1:
        return _add_ratio(lam, i, p, kind)
    return 1.0 / _add_ratio(new, i, p, kind)


def transition_matrix(
    p: EnsembleParams, kind: MeasureKind, max_size: int
) -> tuple[list[Partition], np.ndarray, np.ndarray]:
    """Exact kernel on ``|lam| <= max_size`` (adds beyond the cap are rejected).

    Returns ``(states, P, w)`` with ``w`` the unnormalized target weights.
    """
    states = list(enumerate_partitions(max_size))
    index = {s: k for k, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for s in states:
        a = index[s]
        addable, removable = boundary_boxes(s)
        moves = [s.add_box(b.i) for b in addable] + [s.remove_box(b.i) for b in removable]
        for new in moves:
            if new.size > max_size:
                continue
            acc = min(1.0, weight_ratio(s, new, p, kind) * len(moves) / move_count(new))
            P[a, index[new]] += acc / len(moves)
        P[a, a] = 1.0 - P[a].sum()
    w = np.array([float(weight(kind, s, p)) for s in states])
    return states, P, w


def detailed_balance_defect(P: np.ndarray, w: np.ndarray) -> float:
    """``max |w_a P_ab - w_b P_ba| / max(w_a P_ab)``."""
    flow = w[:, None] * P
    return float(np.max(np.abs(flow - flow.T)) / np.max(flow))


# ---------------------------------------------------------------------------
# compiled kernel


@numba.njit(cache=True, nogil=True)
def _gfun(h, kind, a):
    if kind == 1:
        return 1.0 + a / (h * h)
    return 1.0 / (h * h)


@numba.njit(cache=True, nogil=True)
def _add_ratio_nb(rows, cols, ii, kind, a, boxw):
    # 0-based row ii gains the box at column jj
    jj = rows[ii]
    r = boxw
    for k in range(jj):
        h = rows[ii] - k + cols[k] - ii - 1
        r *= _gfun(h + 1, kind, a) / _gfun(h, kind, a)
    for k in range(ii):
        h = rows[k] - jj + ii - k - 1
        r *= _gfun(h + 1, kind, a) / _gfun(h, kind, a)
    return r


@numba.njit(cache=True, nogil=True)
def _distinct(rows, nrows):
    d = 0
    for k in range(nrows):
        if k == nrows - 1 or rows[k] != rows[k + 1]:
            d += 1
    return d


@numba.njit(cache=True, nogil=True)
def _profile_nb(rows, nrows, xs, hbar, out):
    for g in range(xs.shape[0]):
        u = xs[g] / hbar
        v = abs(u)
        for k in range(nrows):
            r = rows[k]
            v += abs(u - (r - k)) - abs(u - (r - k - 1)) + abs(u + k + 1) - abs(u + k)
        out[g] = v * hbar


@numba.njit(cache=True, nogil=True)
def _y_nb(rows, nrows, ys, hbar, out):
    # addable corner of row k sits at content k - rows[k] (0-based k); removable at k - rows[k] + 1
    for g in range(ys.shape[0]):
        x = ys[g]
        v = 1.0
        for k in range(nrows + 1):
            r = rows[k] if k < nrows else 0
            if k == 0 or rows[k - 1] > r:
                v *= x - hbar * (k - r)
            if r > 0 and (k == nrows - 1 or rows[k + 1] < r):
                v /= x - hbar * (k - r + 1)
        out[g] = v


@numba.njit(cache=True, nogil=True)
def _encode(rows, nrows, base):
    code = 0
    mult = 1
    for k in range(nrows):
        code += rows[k] * mult
        mult *= base
    return code


@numba.njit(cache=True, nogil=True)
def _run_block(
    rows, cols, st, u, kind, a, boxw, max_size, burn_in, thinning,
    xs, ys, hbar, sizes, accepts, prof, yv, snap_steps, codes, record_states,
):
    """Advance ``len(u)//2`` steps. ``st = [nrows, size, step, n_snap, n_accept]``.

    Returns 0 when done, 1 when the arrays need to grow.
    """
    nrows, size, step, nsnap, nacc = st[0], st[1], st[2], st[3], st[4]
    cap = rows.shape[0]
    nsteps = u.shape[0] // 2
    for s in range(nsteps):
        if nrows + 2 >= cap or (nrows > 0 and rows[0] + 2 >= cap):
            st[0], st[1], st[2], st[3], st[4] = nrows, size, step, nsnap, nacc
            return 1
        d = _distinct(rows, nrows)
        nmoves = 2 * d + 1
        pick = int(u[2 * s] * nmoves)
        if pick >= nmoves:
            pick = nmoves - 1
        # locate the corner: addable corners are indexed 0..d, removable d+1..2d
        target_row = -1
        adding = pick <= d
        cnt = 0
        for k in range(nrows + 1):
            r = rows[k] if k < nrows else 0
            if adding:
                if k == 0 or rows[k - 1] > r:
                    if cnt == pick:
                        target_row = k
                        break
                    cnt += 1
            else:
                if r > 0 and (k == nrows - 1 or rows[k + 1] < r):
                    if cnt == pick - d - 1:
                        target_row = k
                        break
                    cnt += 1
        accepted = 0
        if adding:
            if max_size < 0 or size < max_size:
                ratio = _add_ratio_nb(rows, cols, target_row, kind, a, boxw)
                # apply, then correct by the reverse move count
                jj = rows[target_row]
                rows[target_row] += 1
                cols[jj] += 1
                new_nrows = nrows + 1 if target_row == nrows else nrows
                d2 = _distinct(rows, new_nrows)
                acc = ratio * nmoves / (2 * d2 + 1)
                if acc >= 1.0 or u[2 * s + 1] < acc:
                    nrows = new_nrows
                    size += 1
                    accepted = 1
                else:
                    rows[target_row] -= 1
                    cols[jj] -= 1
        else:
            jj = rows[target_row] - 1
            rows[target_row] -= 1
            cols[jj] -= 1
            new_nrows = nrows - 1 if rows[target_row] == 0 else nrows
            ratio = 1.0 / _add_ratio_nb(rows, cols, target_row, kind, a, boxw)
            d2 = _distinct(rows, new_nrows)
            acc = ratio * nmoves / (2 * d2 + 1)
            if acc >= 1.0 or u[2 * s + 1] < acc:
                nrows = new_nrows
                size -= 1
                accepted = 1
            else:
                rows[target_row] += 1
                cols[jj] += 1
        nacc += accepted
        sizes[step] = size
        accepts[step] = accepted
        if record_states:
            codes[step] = _encode(rows, nrows, max_size + 1)
        step += 1
        if step > burn_in and (step - burn_in) % thinning == 0 and nsnap < prof.shape[0]:
            _profile_nb(rows, nrows, xs, hbar, prof[nsnap])
            _y_nb(rows, nrows, ys, hbar, yv[nsnap])
            snap_steps[nsnap] = step
            nsnap += 1
    st[0], st[1], st[2], st[3], st[4] = nrows, size, step, nsnap, nacc
    return 0


@dataclass
class ChainTrace:
    """One chain's output; ``profiles[k]`` and ``y_values[k]`` are taken at ``snapshot_steps[k]``."""

    config: ChainConfig
    chain: int
    sizes: np.ndarray
    accepts: np.ndarray
    snapshot_steps: np.ndarray
    profiles: np.ndarray
    y_values: np.ndarray
    final: Partition
    states: np.ndarray | None = field(default=None, repr=False)

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepts.mean())

    def to_csv(self, path, header: dict | None = None, every: int = 1) -> Path:
        """``step,size,accept`` rows for every ``every``-th step, after a ``#`` JSON header line."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write("# " + json.dumps(header if header is not None else {"seed": self.config.seed, "chain": self.chain}) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "size", "accept"])
            for k in range(every, len(self.sizes) + 1, every):
                w.writerow([k, int(self.sizes[k - 1]), int(self.accepts[k - 1])])
        return path

    def save_profiles(self, path) -> Path:
        path = Path(path)
        np.savez(
            path,
            x=np.asarray(self.config.x_grid),
            step=self.snapshot_steps,
            profile=self.profiles,
            y_points=np.asarray(self.config.y_points),
            y=self.y_values,
        )
        return path


_CHUNK = 1 << 18


def run_chain(cfg: ChainConfig, chain: int = 0) -> ChainTrace:
    """Run one chain from the empty diagram; deterministic in ``(cfg.seed, chain)``."""
    p = cfg.params
    kind = _KIND_CODE[cfg.kind]
    if cfg.kind is MeasureKind.ELLIPTIC:
        a = (p.M / p.hbar) ** 2
        boxw = p.q * (1.0 + a)
    else:
        a = 0.0
        boxw = p.Q
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(chain,))))
    cap = 256
    rows = np.zeros(cap, dtype=np.int64)
    cols = np.zeros(cap, dtype=np.int64)
    st = np.zeros(5, dtype=np.int64)
    sizes = np.zeros(cfg.steps, dtype=np.int32)
    accepts = np.zeros(cfg.steps, dtype=np.uint8)
    n_snap = (cfg.steps - cfg.burn_in) // cfg.thinning
    xs = np.asarray(cfg.x_grid, dtype=float)
    ys = np.asarray(cfg.y_points, dtype=float)
    prof = np.zeros((n_snap, len(xs)))
    yv = np.zeros((n_snap, len(ys)))
    snap_steps = np.zeros(n_snap, dtype=np.int64)
    codes = np.zeros(cfg.steps if cfg.record_states else 1, dtype=np.int64)
    while st[2] < cfg.steps:
        chunk_start = int(st[2])
        n = min(_CHUNK, cfg.steps - chunk_start)
        u = rng.random(2 * n)
        while True:
            done = int(st[2]) - chunk_start
            status = _run_block(
                rows, cols, st, u[2 * done :], kind, a, boxw, cfg.max_size, cfg.burn_in, cfg.thinning,
                xs, ys, p.hbar, sizes, accepts, prof, yv, snap_steps, codes, cfg.record_states,
            )
            if status == 0:
                break
            rows = np.concatenate([rows, np.zeros(cap, dtype=np.int64)])
            cols = np.concatenate([cols, np.zeros(cap, dtype=np.int64)])
            cap *= 2
    final = Partition(tuple(int(r) for r in rows[: st[0]]))
    return ChainTrace(
        cfg, chain, sizes, accepts, snap_steps, prof, yv, final, codes if cfg.record_states else None
    )


def run_chains(cfg: ChainConfig, n_chains: int, workers: int | None = None) -> list[ChainTrace]:
    """Independent chains on a thread pool; results ordered by chain index."""
    if n_chains < 1:
        raise DomainError("need at least one chain")
    workers = min(n_chains, worker_count() if workers is None else workers)
    if workers == 1:
        return [run_chain(cfg, k) for k in range(n_chains)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda k: run_chain(cfg, k), range(n_chains)))


# ---------------------------------------------------------------------------
# estimators


def _batch_stderr(series: np.ndarray, n_batches: int = 50) -> float:
    """Standard error of the mean from non-overlapping batch means."""
    n = len(series) // n_batches
    if n < 1:
        raise DomainError("series too short for batch means")
    means = series[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def mean_size(traces: Sequence[ChainTrace]) -> tuple[float, float]:
    """Post-burn-in mean of ``|lam|`` and its batch-means standard error (pooled over chains)."""
    per_chain = [t.sizes[t.config.burn_in :].astype(float) for t in traces]
    means = np.array([c.mean() for c in per_chain])
    errs = np.array([_batch_stderr(c) for c in per_chain])
    return float(means.mean()), float(math.sqrt(np.sum(errs**2)) / len(traces))


def visit_frequencies(trace: ChainTrace, n_batches: int = 50) -> dict[Partition, tuple[float, float]]:
    """Empirical post-burn-in frequency of each visited state with a batch-means standard error."""
    if trace.states is None:
        raise DomainError("chain was run without state recording")
    cfg = trace.config
    codes = trace.states[cfg.burn_in :]
    base = cfg.max_size + 1
    out = {}
    for lam in enumerate_partitions(cfg.max_size):
        code = sum(r * base**k for k, r in enumerate(lam.rows))
        hits = (codes == code).astype(float)
        out[lam] = (float(hits.mean()), _batch_stderr(hits, n_batches))
    return out


@dataclass
class EmpiricalProfile:
    """Mean rescaled profile over all snapshots of all chains.

    ``stderr`` treats chain means as independent; ``variance`` is the
    single-snapshot fluctuation ``Var[f_lam(x)]``.
    """

    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    variance: np.ndarray
    samples: int
    params: EnsembleParams


def empirical_profile(traces: Sequence[ChainTrace]) -> EmpiricalProfile:
    if not traces:
        raise DomainError("no traces")
    cfg = traces[0].config
    if any(t.config.params != cfg.params or t.config.x_grid != cfg.x_grid for t in traces):
        raise DomainError("traces disagree on parameters or grid")
    allp = np.concatenate([t.profiles for t in traces])
    if len(allp) == 0:
        raise DomainError("no profile snapshots recorded")
    chain_means = np.array([t.profiles.mean(axis=0) for t in traces])
    if len(traces) > 1:
        se = chain_means.std(axis=0, ddof=1) / math.sqrt(len(traces))
    else:
        se = np.full(len(cfg.x_grid), np.nan)
    return EmpiricalProfile(
        np.asarray(cfg.x_grid), allp.mean(axis=0), se, allp.var(axis=0), len(allp), cfg.params
    )


@dataclass
class ProfileComparison:
    sup_distance: float
    l2_distance: float
    x_star: float
    max_stderr: float

    @property
    def relative_sup(self) -> float:
        return self.sup_distance / self.x_star

    def to_dict(self) -> dict:
        return {
            "sup_distance": self.sup_distance,
            "l2_distance": self.l2_distance,
            "x_star": self.x_star,
            "relative_sup": self.relative_sup,
            "max_stderr": self.max_stderr,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def empirical_vs_analytic(emp: EmpiricalProfile, shape) -> ProfileComparison:
    """Sup and L2 distance between the mean sampled profile and a solved limit shape."""
    p = emp.params
    if not (math.isclose(p.q, shape.q, rel_tol=1e-12) and math.isclose(p.M, shape.M, rel_tol=1e-12)):
        raise DomainError("sampled and analytic parameters differ")
    diff = emp.mean - np.asarray(shape.profile(emp.x))
    l2 = math.sqrt(float(np.trapezoid(diff**2, emp.x)))
    return ProfileComparison(float(np.max(np.abs(diff))), l2, shape.x_star, float(np.nanmax(emp.stderr)))


def y_fluctuation(traces: Sequence[ChainTrace]) -> np.ndarray:
    """``|<Y^2> - <Y>^2| / <Y>^2`` at each recorded point."""
    y = np.concatenate([t.y_values for t in traces])
    m = y.mean(axis=0)
    return np.abs((y * y).mean(axis=0) - m * m) / (m * m)
