"""Best classical and quantum strategies, batch searches, and gap metrics.

The classical optimum is exact: all 2**(2n) deterministic strategies are
enumerated.  The quantum optimum is a multi-start local ascent over the 6n
gate angles; every reported quantum gain is the re-evaluated win probability
of the returned strategy, so it is always an achievable lower bound.

Batch searches derive one seed per function from (master seed, function
index), which makes results independent of worker count and schedule.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .boolfn import GameEquation, TruthTable
from .quantum import FOUR_PI, GainKernel, QuantumStrategy, StateVector, win_probability

logger = logging.getLogger(__name__)

#: Fixed default master seed so reproduction runs are deterministic out of the box.
DEFAULT_SEED = 1729

#: Strict threshold on (quantum - classical) for a game to count as advantaged.
GAP_THRESHOLD = 0.01


@dataclass(frozen=True)
class ClassicalStrategy:
    """Deterministic per-player answers encoded in 2n bits.

    Player 1's pair is most significant; within a pair the answer to
    question 0 is the more significant bit.
    """

    n: int
    encoding: int

    def __post_init__(self):
        if not 0 <= self.encoding < (1 << (2 * self.n)):
            raise ValueError(f"encoding needs exactly {2 * self.n} bits")

    def answer(self, player: int, question_bit: int) -> int:
        shift = 2 * (self.n - 1 - player) + (1 - (question_bit & 1))
        return (self.encoding >> shift) & 1

    def answers(self, question: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.answer(i, q) for i, q in enumerate(question))

    @classmethod
    def from_answer_bits(cls, pairs: Sequence[tuple[int, int]]) -> "ClassicalStrategy":
        enc = 0
        for h0, h1 in pairs:
            enc = (enc << 2) | ((h0 & 1) << 1) | (h1 & 1)
        return cls(len(pairs), enc)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 20
    max_evals: int = 5000
    tol: float = 1e-6
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.restarts <= 0 or self.max_evals <= 0 or self.tol <= 0:
            raise ValueError("restarts, max_evals and tol must all be positive")


@dataclass
class GameResult:
    """Outcome of one game: exact classical optimum and best-found quantum gain."""

    equation: GameEquation
    classical_gain: float
    classical_strategy: ClassicalStrategy | None
    quantum_gain: float
    quantum_strategy: QuantumStrategy | None
    gap: float
    state: str
    config: OptimizerConfig | None
    seed: int
    elapsed_ms: float | None = None

    def to_json_dict(self, include_timing: bool = False) -> dict:
        strategy = None
        if self.quantum_strategy is not None:
            strategy = {"angles": self.quantum_strategy.reduced_angles().tolist()}
        return {
            "f": self.equation.f.to_text(),
            "g": self.equation.g.to_text(),
            "classical": self.classical_gain,
            "quantum": self.quantum_gain,
            "gap": self.gap,
            "strategy": strategy,
            "state": self.state,
            "seed": self.seed,
            "elapsed_ms": self.elapsed_ms if include_timing else None,
        }

    @classmethod
    def from_json_dict(cls, record: dict) -> "GameResult":
        strategy = None
        if record.get("strategy") is not None:
            strategy = QuantumStrategy(np.array(record["strategy"]["angles"]))
        return cls(
            equation=GameEquation(
                TruthTable.from_text(record["f"]), TruthTable.from_text(record["g"])
            ),
            classical_gain=record["classical"],
            classical_strategy=None,
            quantum_gain=record["quantum"],
            quantum_strategy=strategy,
            gap=record["gap"],
            state=record["state"],
            config=None,
            seed=record["seed"],
            elapsed_ms=record.get("elapsed_ms"),
        )


# --- Classical search -----------------------------------------------------------

def _answer_index_table(n: int) -> np.ndarray:
    """(2**2n, 2**n) matrix: answer index produced by strategy s on question q."""
    strategies = np.arange(1 << (2 * n))[:, None]
    questions = np.arange(1 << n)[None, :]
    answers = np.zeros((1 << (2 * n), 1 << n), dtype=np.int64)
    for i in range(n):
        qbit = (questions >> (n - 1 - i)) & 1
        hbit = (strategies >> (2 * (n - 1 - i) + (1 - qbit))) & 1
        answers |= hbit << (n - 1 - i)
    return answers


_ANSWER_TABLE_CACHE: dict[int, np.ndarray] = {}


def classical_best(eq: GameEquation) -> tuple[float, list[ClassicalStrategy]]:
    """Exhaustive exact optimum over all deterministic strategies.

    Returns the best gain (an integer multiple of 2**-n) and every
    maximizing strategy in increasing encoding order.
    """
    n = eq.arity
    if n not in _ANSWER_TABLE_CACHE:
        _ANSWER_TABLE_CACHE[n] = _answer_index_table(n)
    answers = _ANSWER_TABLE_CACHE[n]
    size = 1 << n
    f_vals = np.array([eq.f.value(q) for q in range(size)])
    g_vals = np.array([eq.g.value(a) for a in range(size)])
    wins = (g_vals[answers] == f_vals[None, :]).sum(axis=1)
    best = int(wins.max())
    maximizers = np.flatnonzero(wins == best)
    return best / size, [ClassicalStrategy(n, int(s)) for s in maximizers]


# --- Quantum search -------------------------------------------------------------

_FD_STEP = 1e-6


def _objective_with_gradient(kernel: GainKernel, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Negated gain and its central finite-difference gradient, one batched call."""
    d = x.size
    batch = np.tile(x, (2 * d + 1, 1))
    idx = np.arange(d)
    batch[1 + idx, idx] += _FD_STEP
    batch[1 + d + idx, idx] -= _FD_STEP
    gains = kernel.gains(batch)
    grad = (gains[1 : d + 1] - gains[d + 1 :]) / (2.0 * _FD_STEP)
    return -float(gains[0]), -grad


def optimize_quantum(
    psi: StateVector,
    eq: GameEquation,
    cfg: OptimizerConfig | None = None,
    extra_starts: Sequence[np.ndarray] = (),
) -> tuple[float, QuantumStrategy]:
    """Multi-start finite-difference gradient ascent over the 6n angles.

    Each restart draws a start uniformly from [0, 4pi)^{6n} and runs a
    deterministic quasi-Newton ascent with batched central-difference
    gradients until the gain improves by less than ``cfg.tol``.  The
    evaluation budget per restart (``cfg.max_evals``) counts every
    win-probability evaluation, finite-difference probes included.
    ``extra_starts`` adds warm starts after the random restarts (used for
    sweep chaining).  The returned gain is re-evaluated from the returned
    strategy, never taken from the optimizer state.
    """
    if psi.n != eq.arity:
        raise ValueError(f"state has {psi.n} qubits but the equation arity is {eq.arity}")
    cfg = cfg or OptimizerConfig()
    kernel = GainKernel(psi, eq)
    dim = 6 * psi.n
    rng = np.random.default_rng(cfg.seed)
    starts = [rng.uniform(0.0, FOUR_PI, dim) for _ in range(cfg.restarts)]
    starts.extend(np.asarray(s, dtype=float).reshape(dim) for s in extra_starts)
    max_calls = max(1, cfg.max_evals // (2 * dim + 1))

    best_gain, best_x = -1.0, starts[0]
    for x0 in starts:
        res = minimize(
            lambda x: _objective_with_gradient(kernel, x),
            x0,
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": max_calls, "ftol": cfg.tol, "gtol": 1e-12},
        )
        gain = float(kernel.gains(res.x.reshape(1, -1))[0])
        if gain > best_gain:
            best_gain, best_x = gain, res.x
    strategy = QuantumStrategy(best_x.reshape(psi.n, 2, 3))
    return win_probability(psi, strategy, eq), strategy


# --- Batch search over a function space ------------------------------------------

def derive_task_seed(master_seed: int, index: int) -> int:
    """Stable per-task seed; independent of execution order and worker count."""
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1)[0])


def _run_game(
    f: TruthTable,
    g: TruthTable,
    psi: StateVector,
    cfg: OptimizerConfig,
    state_descriptor: str,
    task_seed: int,
) -> GameResult:
    t0 = time.perf_counter()
    eq = GameEquation(f, g)
    classical_gain, maximizers = classical_best(eq)
    quantum_gain, strategy = optimize_quantum(psi, eq, replace(cfg, seed=task_seed))
    return GameResult(
        equation=eq,
        classical_gain=classical_gain,
        classical_strategy=maximizers[0],
        quantum_gain=quantum_gain,
        quantum_strategy=strategy,
        gap=quantum_gain - classical_gain,
        state=state_descriptor,
        config=cfg,
        seed=task_seed,
        elapsed_ms=(time.perf_counter() - t0) * 1000.0,
    )


_WORKER_CONTEXT: dict = {}


def _worker_init(g_text: str, amplitudes: np.ndarray, cfg: OptimizerConfig, descriptor: str):
    _WORKER_CONTEXT["g"] = TruthTable.from_text(g_text)
    _WORKER_CONTEXT["psi"] = StateVector(amplitudes)
    _WORKER_CONTEXT["cfg"] = cfg
    _WORKER_CONTEXT["descriptor"] = descriptor


def _worker_task(args: tuple[int, int, int]) -> tuple[int, GameResult]:
    index, f_bits, task_seed = args
    ctx = _WORKER_CONTEXT
    g: TruthTable = ctx["g"]
    f = TruthTable(g.arity, f_bits)
    result = _run_game(f, g, ctx["psi"], ctx["cfg"], ctx["descriptor"], task_seed)
    return index, result


def search_space(
    g: TruthTable,
    psi: StateVector,
    cfg: OptimizerConfig,
    functions: Iterable[TruthTable],
    workers: int | None = None,
    state_descriptor: str = "custom",
    progress: Callable[[int, int], None] | None = None,
) -> list[GameResult]:
    """One GameResult per candidate f, in input order.

    Tasks are independent and seeded from (cfg.seed, index), so the output
    is identical for any worker count.  ``progress`` (done, total) is called
    from the coordinating process.
    """
    if g.arity != psi.n:
        raise ValueError(f"g has arity {g.arity} but the state has {psi.n} qubits")
    tables = list(functions)
    total = len(tables)
    tasks = [(i, t.bits, derive_task_seed(cfg.seed, i)) for i, t in enumerate(tables)]
    workers = workers or os.cpu_count() or 1
    results: list[GameResult | None] = [None] * total

    def note_progress(done: int):
        if progress is not None:
            progress(done, total)
        elif done == total or done % 250 == 0:
            logger.info("search progress: %d/%d functions", done, total)

    if workers <= 1 or total <= 1:
        _worker_init(g.to_text(), psi.amplitudes, cfg, state_descriptor)
        for i, f_bits, task_seed in tasks:
            _, results[i] = _worker_task((i, f_bits, task_seed))
            note_progress(i + 1)
    else:
        chunk = max(1, total // (workers * 8))
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_worker_init,
            initargs=(g.to_text(), psi.amplitudes, cfg, state_descriptor),
        ) as pool:
            done = 0
            for index, result in pool.map(_worker_task, tasks, chunksize=chunk):
                results[index] = result
                done += 1
                note_progress(done)
    return results  # type: ignore[return-value]


def game_score(results: Sequence[GameResult]) -> float:
    """Fraction of games whose quantum-classical gap strictly exceeds 1%."""
    if not results:
        raise ValueError("game_score needs a non-empty result list")
    hits = sum(1 for r in results if r.gap > GAP_THRESHOLD)
    return hits / len(results)


def average_gap(results: Sequence[GameResult]) -> float:
    """Mean gap over the games that qualify for the game score."""
    if not results:
        raise ValueError("average_gap needs a non-empty result list")
    gaps = [r.gap for r in results if r.gap > GAP_THRESHOLD]
    if not gaps:
        raise ValueError("no result exceeds the gap threshold")
    return sum(gaps) / len(gaps)


def stratified_subsample(
    functions: Sequence[TruthTable], size: int, seed: int
) -> list[TruthTable]:
    """Deterministic stratified pick: one seeded draw per contiguous stratum.

    Functions are taken in sorted table order and divided into ``size``
    near-equal strata; the seeded generator picks one member per stratum.
    """
    tables = sorted(functions, key=lambda t: (t.arity, t.bits))
    if size >= len(tables):
        return tables
    if size <= 0:
        raise ValueError("subsample size must be positive")
    rng = np.random.default_rng(np.random.SeedSequence((seed, len(tables), size)))
    edges = np.linspace(0, len(tables), size + 1).astype(int)
    return [tables[int(rng.integers(lo, hi))] for lo, hi in zip(edges[:-1], edges[1:])]
