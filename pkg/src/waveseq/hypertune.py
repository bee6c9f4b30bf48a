"""Bayesian hyperparameter search over a discrete grid.

A Gaussian process with a Matern 5/2 kernel models validation MAAPE as a
function of normalised grid indices; the next candidate maximises expected
improvement. Kernel hyperparameters are picked by marginal likelihood over a
fixed candidate set, so the whole search is deterministic given a seed.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr

logger = logging.getLogger(__name__)

PENALTY = math.pi / 2  # MAAPE upper bound, charged to failed evaluations
JITTER = 1e-6
N_RANDOM = 5
N_SAMPLES = 10_000

Candidate = Tuple[int, ...]


class GridExhausted(RuntimeError):
    pass


class GPFitError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ParamGrid:
    names: Tuple[str, ...]
    values: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.names) != len(self.values) or not self.names:
            raise ValueError("names and values must be non-empty and of equal length")
        for n, v in zip(self.names, self.values):
            if not v:
                raise ValueError(f"dimension {n!r} has no values")
            if list(v) != sorted(v):
                raise ValueError(f"dimension {n!r} values must be sorted")

    @classmethod
    def from_dict(cls, dims: Dict[str, Sequence[float]]) -> "ParamGrid":
        return cls(tuple(dims), tuple(tuple(v) for v in dims.values()))

    @classmethod
    def default(cls) -> "ParamGrid":
        """The seven-dimensional sequence-to-sequence search space."""
        return cls.from_dict({
            "hidden": (32, 64),
            "T": (10, 20, 30, 40, 50, 60),
            "batch_size": (16, 32, 64, 128, 256),
            "lr": tuple(round(0.001 * i, 3) for i in range(1, 11)),
            "layers": (1, 2, 4),
            "l2": tuple(round(0.001 * i, 3) for i in range(1, 11)),
            "k_fraction": tuple(round(0.1 * i, 1) for i in range(1, 11)),
        })

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(v) for v in self.values)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def __len__(self) -> int:
        return self.size

    def check(self, c: Candidate) -> Candidate:
        c = tuple(int(i) for i in c)
        if len(c) != len(self.shape) or any(not 0 <= i < n for i, n in zip(c, self.shape)):
            raise ValueError(f"candidate {c} out of range for grid shape {self.shape}")
        return c

    def values_of(self, c: Candidate) -> Dict[str, float]:
        c = self.check(c)
        return {n: v[i] for n, v, i in zip(self.names, self.values, c)}

    def index_of(self, values: Dict[str, float]) -> Candidate:
        out = []
        for n, v in zip(self.names, self.values):
            hits = [i for i, x in enumerate(v) if math.isclose(x, values[n], rel_tol=1e-9, abs_tol=1e-12)]
            if not hits:
                raise ValueError(f"{n}={values[n]} is not a grid value")
            out.append(hits[0])
        return tuple(out)

    def flat(self, c: Candidate) -> int:
        return int(np.ravel_multi_index(self.check(c), self.shape))

    def unflat(self, k) -> Candidate:
        return tuple(int(i) for i in np.unravel_index(int(k), self.shape))

    def candidates(self) -> List[Candidate]:
        return [self.unflat(k) for k in range(self.size)]


def normalize(c: Candidate, grid: ParamGrid) -> np.ndarray:
    """Map indices into the unit cube (``index / (len - 1)``; single-value dims map to 0)."""
    c = grid.check(c)
    return np.array([i / (n - 1) if n > 1 else 0.0 for i, n in zip(c, grid.shape)])


def _normalize_flat(ks: np.ndarray, grid: ParamGrid) -> np.ndarray:
    idx = np.stack(np.unravel_index(ks, grid.shape), axis=1).astype(float)
    den = np.array([max(n - 1, 1) for n in grid.shape], dtype=float)
    return idx / den


def matern52(A: np.ndarray, B: np.ndarray, lengthscales, signal: float) -> np.ndarray:
    ls = np.asarray(lengthscales, dtype=float)
    d = (A[:, None, :] - B[None, :, :]) / ls
    r = np.sqrt(np.sum(d * d, axis=-1))
    s5 = math.sqrt(5.0) * r
    return signal * (1.0 + s5 + 5.0 / 3.0 * r * r) * np.exp(-s5)


LENGTHSCALES = (0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2)
SIGNALS = (0.25, 1.0, 4.0)
NOISES = (1e-6, 1e-4, 1e-2, 1e-1)


@dataclass
class GPSurrogate:
    X: np.ndarray
    y: np.ndarray
    lengthscales: np.ndarray
    signal: float
    noise: float
    y_mean: float
    y_scale: float
    chol: tuple
    alpha: np.ndarray
    log_ml: float

    def predict(self, Xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation of the latent function, in input units."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        Ks = matern52(Xs, self.X, self.lengthscales, self.signal)
        mu = Ks @ self.alpha
        v = cho_solve(self.chol, Ks.T)
        var = np.maximum(self.signal - np.sum(Ks * v.T, axis=1), 0.0)
        return self.y_mean + self.y_scale * mu, self.y_scale * np.sqrt(var)


def _factor(X, z, ls, signal, noise):
    K = matern52(X, X, ls, signal)
    K[np.diag_indices_from(K)] += noise + JITTER
    try:
        chol = cho_factor(K, lower=True)
    except np.linalg.LinAlgError as exc:
        raise GPFitError("kernel matrix not positive definite after jitter") from exc
    alpha = cho_solve(chol, z)
    log_ml = -0.5 * float(z @ alpha) - float(np.sum(np.log(np.diag(chol[0])))) - 0.5 * len(z) * math.log(2 * math.pi)
    return chol, alpha, log_ml


def gp_posterior(X, y, lengthscales, signal: float, noise: float) -> GPSurrogate:
    """GP regression on standardised ``y`` with fixed kernel hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 2 or X.shape[0] != len(y):
        raise ValueError("need at least two observations with matching inputs")
    mean = float(y.mean())
    scale = float(y.std()) or 1.0
    z = (y - mean) / scale
    ls = np.broadcast_to(np.asarray(lengthscales, dtype=float), (X.shape[1],)).copy()
    chol, alpha, log_ml = _factor(X, z, ls, signal, noise)
    return GPSurrogate(X, y, ls, signal, noise, mean, scale, chol, alpha, log_ml)


def gp_fit(X, y) -> GPSurrogate:
    """Marginal-likelihood choice of kernel hyperparameters, then posterior.

    A shared lengthscale, signal and noise variance are chosen jointly from
    fixed candidate lists; each dimension's lengthscale is then refined in
    turn with the others held fixed.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    best = None
    for ls in LENGTHSCALES:
        for sig in SIGNALS:
            for noise in NOISES:
                try:
                    gp = gp_posterior(X, y, ls, sig, noise)
                except GPFitError:
                    continue
                if best is None or gp.log_ml > best.log_ml + 1e-12:
                    best = gp
    if best is None:
        raise GPFitError("no kernel hyperparameters gave a positive definite matrix")
    for dim in range(X.shape[1]):
        for ls in LENGTHSCALES:
            trial = best.lengthscales.copy()
            trial[dim] = ls
            try:
                gp = gp_posterior(X, y, trial, best.signal, best.noise)
            except GPFitError:
                continue
            if gp.log_ml > best.log_ml + 1e-12:
                best = gp
    return best


def expected_improvement(mu, sigma, best: float):
    """EI for minimisation, ``sigma * (z Phi(z) + phi(z))`` with ``z = (best - mu) / sigma``.

    Zero wherever ``sigma`` is zero.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    z = (best - mu) / safe
    ei = safe * (z * ndtr(z) + np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi))
    out = np.where(pos, np.maximum(ei, 0.0), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class Observation:
    candidate: Candidate
    value: float
    status: str = "ok"
    wall_time: float = 0.0


@dataclass
class TuneState:
    grid: ParamGrid
    budget: int
    observations: List[Observation] = field(default_factory=list)

    @property
    def observed(self) -> set:
        return {o.candidate for o in self.observations}

    @property
    def incumbent(self) -> Optional[Observation]:
        if not self.observations:
            return None
        return min(self.observations, key=lambda o: o.value)

    def incumbent_trace(self) -> List[float]:
        return list(np.minimum.accumulate([o.value for o in self.observations]))

    def header(self) -> List[str]:
        return (["eval"] + [f"idx_{n}" for n in self.grid.names] + list(self.grid.names)
                + ["maape", "status", "wall_time"])

    def to_csv(self, path, wall_time: bool = True) -> None:
        head = self.header()
        if not wall_time:
            head = head[:-1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            for k, o in enumerate(self.observations):
                w.writerow(self._row(k, o, wall_time))

    def _row(self, k: int, o: Observation, wall_time: bool = True) -> list:
        vals = self.grid.values_of(o.candidate)
        row = [k] + list(o.candidate) + [repr(v) for v in vals.values()] + [repr(o.value), o.status]
        return row + ([f"{o.wall_time:.3f}"] if wall_time else [])

    @classmethod
    def from_csv(cls, path, grid: ParamGrid, budget: int) -> "TuneState":
        state = cls(grid, budget)
        with open(path, newline="") as fh:
            r = csv.DictReader(fh)
            expected = [f"idx_{n}" for n in grid.names]
            if r.fieldnames is None or any(e not in r.fieldnames for e in expected):
                raise ValueError(f"{path}: ledger columns do not match the grid")
            for row in r:
                c = grid.check(tuple(int(row[e]) for e in expected))
                for n, v in grid.values_of(c).items():
                    if not math.isclose(float(row[n]), v, rel_tol=1e-9, abs_tol=1e-12):
                        raise ValueError(f"{path}: ledger value {n}={row[n]} disagrees with the grid")
                state.observations.append(
                    Observation(c, float(row["maape"]), row.get("status", "ok"), float(row.get("wall_time") or 0.0))
                )
        return state


def _fit_state(state: TuneState) -> GPSurrogate:
    X = np.array([normalize(o.candidate, state.grid) for o in state.observations])
    y = np.array([o.value for o in state.observations])
    return gp_fit(X, y)


def _unobserved_pool(grid: ParamGrid, observed: set, rng, n_samples: int) -> np.ndarray:
    taken = np.array(sorted(grid.flat(c) for c in observed), dtype=np.int64)
    free = grid.size - len(taken)
    if free <= 0:
        raise GridExhausted("every grid candidate has been evaluated")
    if free <= n_samples:
        mask = np.ones(grid.size, dtype=bool)
        mask[taken] = False
        return np.flatnonzero(mask)
    pool = rng.choice(grid.size, size=min(grid.size, n_samples + len(taken)), replace=False)
    pool = pool[~np.isin(pool, taken)][:n_samples]
    return np.sort(pool)


def suggest_next(gp: Optional[GPSurrogate], grid: ParamGrid, state: TuneState, rng,
                 count: int = 1, n_samples: int = N_SAMPLES) -> List[Candidate]:
    """Next ``count`` candidates: random before a GP exists, otherwise top expected improvement.

    Ties in EI go to the lowest flat grid index.
    """
    pool = _unobserved_pool(grid, state.observed, rng, n_samples)
    count = min(count, len(pool))
    if gp is None:
        pick = rng.choice(pool, size=count, replace=False)
        return [grid.unflat(k) for k in pick]
    mu, sigma = gp.predict(_normalize_flat(pool, grid))
    ei = expected_improvement(mu, sigma, state.incumbent.value)
    order = np.lexsort((pool, -ei))[:count]
    return [grid.unflat(pool[i]) for i in order]


def _evaluate(objective, c: Candidate) -> Observation:
    t0 = time.perf_counter()
    try:
        value = float(objective(c))
        status = "ok" if math.isfinite(value) else "nonfinite"
    except Exception as exc:  # a failed run is a data point, not a crash
        logger.warning("objective failed for %s: %s", c, exc)
        value, status = float("nan"), f"failed:{type(exc).__name__}"
    if status != "ok":
        value = PENALTY
    return Observation(c, value, status, time.perf_counter() - t0)


def tune(objective: Callable[[Candidate], float], grid: ParamGrid, budget: int = 100, seed: int = 0,
         jobs: int = 1, ledger=None, n_samples: int = N_SAMPLES) -> Tuple[Candidate, TuneState]:
    """Minimise ``objective`` over ``grid`` within ``budget`` evaluations.

    With ``ledger`` the state is appended to that CSV after every round and
    an existing ledger is resumed. Suggestions in round ``r`` use a generator
    seeded by ``(seed, r)``, so an interrupted run resumes on the same path.
    ``jobs > 1`` evaluates the top ``jobs`` suggestions of a round in
    parallel threads.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    jobs = max(1, int(jobs))
    if ledger is not None and Path(ledger).exists():
        state = TuneState.from_csv(ledger, grid, budget)
        logger.info("resuming from %s with %d evaluations", ledger, len(state.observations))
    else:
        state = TuneState(grid, budget)
    budget = min(budget, grid.size)
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        while len(state.observations) < budget:
            n = len(state.observations)
            rng = np.random.default_rng((seed, n))
            gp = _fit_state(state) if n >= N_RANDOM else None
            want = min(jobs, budget - n, N_RANDOM - n if gp is None else jobs)
            batch = suggest_next(gp, grid, state, rng, count=want, n_samples=n_samples)
            if pool is None:
                results = [_evaluate(objective, c) for c in batch]
            else:
                results = list(pool.map(lambda c: _evaluate(objective, c), batch))
            state.observations.extend(results)
            for o in results:
                logger.info("eval %d %s -> %.6g (%s)", len(state.observations), grid.values_of(o.candidate),
                            o.value, o.status)
            if ledger is not None:
                state.to_csv(ledger)
    finally:
        if pool is not None:
            pool.shutdown()
    return state.incumbent.candidate, state
