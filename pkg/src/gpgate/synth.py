"""Derivative-free synthesis of gate parameters.

The search runs over ``(alpha, tau_final, V00, V01, V10)`` with ``V11 = 0``
as the energy reference. The objective is the worst per-case readout
deviation at a coarse time step. The search screens seeded uniform
samples, then runs Nelder-Mead descents from the most promising ones.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .constants import PAPER_DTAU
from .gate import GateReport, GateSpec, gate_error, initial_state
from .integrator import DEFAULT_SCHEME, SplittingScheme, propagate_final
from .lattice import EvolutionParams, SystemParams

PARAM_NAMES = ("alpha", "tau_final", "v00", "v01", "v10")
THREADS_ENV = "GPGATE_THREADS"


def worker_count() -> int:
    """Workers allowed by ``GPGATE_THREADS``; 1 (sequential) when unset."""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    return max(1, int(raw))


@dataclass(frozen=True)
class SearchSpace:
    """Closed per-parameter intervals, in :data:`PARAM_NAMES` order."""

    lower: tuple[float, ...] = (0.0, 1.0, -3.0, -3.0, -3.0)
    upper: tuple[float, ...] = (5.0, 12.0, 3.0, 3.0, 3.0)

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != (5,) or hi.shape != (5,):
            raise ValueError("bounds need exactly five entries")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("every lower bound must be <= its upper bound")
        if lo[1] <= 0:
            raise ValueError("tau_final lower bound must be positive")
        object.__setattr__(self, "lower", tuple(lo))
        object.__setattr__(self, "upper", tuple(hi))

    @classmethod
    def from_dict(cls, bounds: dict) -> "SearchSpace":
        default = cls()
        lo, hi = list(default.lower), list(default.upper)
        for name, (a, b) in bounds.items():
            i = PARAM_NAMES.index(name)
            lo[i], hi[i] = a, b
        return cls(tuple(lo), tuple(hi))

    def to_dict(self) -> dict:
        return {n: [a, b] for n, a, b in zip(PARAM_NAMES, self.lower, self.upper)}

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    def clamp(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, float), self.lo, self.hi)

    def penalty(self, x) -> float:
        """Width-normalized distance outside the box; 0 inside."""
        x = np.asarray(x, float)
        width = np.maximum(self.hi - self.lo, 1e-12)
        excess = np.maximum(self.lo - x, 0) + np.maximum(x - self.hi, 0)
        return float(np.sum(excess / width))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, 5))


@dataclass(frozen=True)
class SynthesisConfig:
    restarts: int = 150
    max_evaluations: int = 50_000
    target_error: float = 0.05
    rng_seed: int = 1
    screen_samples: int = 10_000
    coarse_dtau: float = 5e-3
    fine_dtau: float = PAPER_DTAU
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    tolerance: float = 1e-7
    initial_step: float = 0.05
    smooth_power: float = 8.0
    descent_evaluations: int = 250
    polish_threshold: float = 0.08
    polish_evaluations: int = 1_500
    scheme: SplittingScheme = DEFAULT_SCHEME

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be a positive integer")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be a positive integer")
        if not 0 < self.target_error <= 1:
            raise ValueError("target_error must lie in (0, 1]")
        if self.screen_samples < 0 or self.descent_evaluations < 1 or self.polish_evaluations < 1:
            raise ValueError("screen_samples must be >= 0 and descent/polish budgets >= 1")
        if not (self.coarse_dtau > 0 and self.fine_dtau > 0):
            raise ValueError("time steps must be positive")
        if not (self.reflection > 0 and self.expansion > 1 and 0 < self.contraction < 1 and 0 < self.shrink < 1):
            raise ValueError("simplex coefficients out of range")
        if not (self.tolerance > 0 and self.initial_step > 0 and self.smooth_power >= 1):
            raise ValueError("tolerance, initial_step and smooth_power must be positive")
        object.__setattr__(self, "scheme", SplittingScheme.parse(self.scheme))


# -- objective -----------------------------------------------------------------


def split_vector(x) -> tuple[SystemParams, float]:
    alpha, tau_final, v00, v01, v10 = (float(v) for v in x)
    return SystemParams(alpha, (v00, v01, v10, 0.0)), tau_final


def case_deviations(x, spec: GateSpec, evo_step: float, scheme=DEFAULT_SCHEME) -> np.ndarray:
    """Per-case ``|readout - target|`` at an in-bounds parameter vector."""
    params, tau_final = split_vector(x)
    evo = EvolutionParams(evo_step, tau_final)
    final = propagate_final([initial_state(c) for c in spec.cases], params, evo, scheme)
    amp = final[:, spec.readout_site.linear]
    p = amp.real**2 + amp.imag**2
    if not np.all(np.isfinite(p)):
        return np.ones(4)
    return np.abs(p - np.array(spec.targets, float))


def objective(candidate, spec: GateSpec, evo_step: float, scheme=DEFAULT_SCHEME, space: SearchSpace | None = None) -> float:
    """Worst-case readout deviation; out-of-bounds points are clamped and penalized."""
    space = space or SearchSpace()
    x = np.asarray(candidate, float)
    if not np.all(np.isfinite(x)):
        return 1.0
    clamped = space.clamp(x)
    return float(case_deviations(clamped, spec, evo_step, scheme).max()) + space.penalty(x)


# -- Nelder-Mead -----------------------------------------------------------------


class NelderMeadResult(NamedTuple):
    x: np.ndarray
    fun: float
    evaluations: int
    trace: list


def nelder_mead(
    func: Callable[[np.ndarray], float],
    start,
    config: SynthesisConfig = SynthesisConfig(),
    step=None,
    budget: int | None = None,
    target: float | None = None,
) -> NelderMeadResult:
    """Minimize ``func`` with the Nelder-Mead simplex method.

    The initial simplex offsets each coordinate of ``start`` by ``step``
    (default ``config.initial_step``), scaled by a seeded jitter in
    [0.9, 1.1] so that restarts from the same point do not retrace each
    other. Stops when the simplex spread (max vertex distance to the best
    vertex, inf-norm) drops below ``config.tolerance``, when the best value
    reaches ``target``, or when ``budget`` evaluations are spent.

    ``trace`` lists the best value after every iteration.
    """
    x0 = np.asarray(start, float)
    n = x0.size
    budget = config.max_evaluations if budget is None else budget
    rng = np.random.default_rng(config.rng_seed)
    step = np.broadcast_to(np.asarray(config.initial_step if step is None else step, float), (n,))
    step = step * rng.uniform(0.9, 1.1, size=n)

    rho, chi, gamma, sigma = config.reflection, config.expansion, config.contraction, config.shrink
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        return float(func(x))

    pts = [x0.copy()]
    for i in range(n):
        x = x0.copy()
        x[i] += step[i]
        pts.append(x)
    pts = np.array(pts)
    vals = np.empty(n + 1)
    for i in range(n + 1):
        if evals >= budget:
            vals[i:] = np.inf
            break
        vals[i] = f(pts[i])

    trace = []
    while True:
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        trace.append(vals[0])
        if evals >= budget:
            break
        if target is not None and vals[0] <= target:
            break
        if np.max(np.abs(pts[1:] - pts[0])) < config.tolerance:
            break

        centroid = pts[:-1].mean(axis=0)
        worst = pts[-1]
        xr = centroid + rho * (centroid - worst)
        fr = f(xr)
        if fr < vals[0]:
            xe = centroid + chi * (xr - centroid)
            fe = f(xe) if evals < budget else np.inf
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if evals >= budget:
            continue
        if fr < vals[-1]:
            xc = centroid + gamma * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                pts[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + gamma * (worst - centroid)
            fc = f(xc)
            if fc < vals[-1]:
                pts[-1], vals[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            if evals >= budget:
                break
            pts[i] = pts[0] + sigma * (pts[i] - pts[0])
            vals[i] = f(pts[i])

    best = int(np.argmin(vals))
    return NelderMeadResult(pts[best].copy(), float(vals[best]), evals, trace)


# -- driver --------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    best_vector: np.ndarray
    best_params: SystemParams
    tau_final: float
    best_report: GateReport
    fine_report: GateReport
    evaluations_used: int
    history: tuple[tuple[int, float], ...]
    target_met: bool
    config: SynthesisConfig = field(repr=False)

    @property
    def budget_exhausted(self) -> bool:
        return not self.target_met

    def to_dict(self) -> dict:
        return {
            "target_met": self.target_met,
            "best": dict(zip(PARAM_NAMES, (float(v) for v in self.best_vector))),
            "potential": [float(v) for v in self.best_params.potential],
            "evaluations_used": self.evaluations_used,
            "coarse_dtau": self.config.coarse_dtau,
            "fine_dtau": self.config.fine_dtau,
            "coarse_report": self.best_report.to_dict(),
            "fine_report": self.fine_report.to_dict(),
            "history": [{"restart": r, "best_error": e} for r, e in self.history],
        }


class _Tracker:
    """Counts evaluations and keeps the best in-bounds point by (error, index)."""

    def __init__(self, spec, space, config):
        self.spec, self.space, self.config = spec, space, config
        self.count = 0
        self.best_err = np.inf
        self.best_x = None
        self.seen: dict[bytes, float] = {}

    def record(self, clamped, devs):
        err = float(devs.max())
        if err < self.best_err:
            self.best_err, self.best_x = err, clamped.copy()
        self.count += 1

    def deviations(self, x):
        clamped = self.space.clamp(x)
        devs = case_deviations(clamped, self.spec, self.config.coarse_dtau, self.config.scheme)
        return clamped, devs

    def evaluate(self, x, power=None):
        x = np.asarray(x, float)
        if not np.all(np.isfinite(x)):
            self.count += 1
            return 1.0
        clamped, devs = self.deviations(x)
        self.record(clamped, devs)
        self.seen[x.tobytes()] = float(devs.max())
        base = devs.max() if power is None else np.sum(devs**power) ** (1.0 / power)
        return float(base) + self.space.penalty(x)

    @property
    def remaining(self):
        return self.config.max_evaluations - self.count

    @property
    def done(self):
        return self.best_err <= self.config.target_error or self.remaining <= 0


def synthesize(
    spec: GateSpec | None = None,
    space: SearchSpace | None = None,
    config: SynthesisConfig | None = None,
) -> SynthesisResult:
    """Search for parameters realizing ``spec`` within ``space``.

    1. Screen ``screen_samples`` seeded uniform points (parallel when
       ``GPGATE_THREADS`` > 1; results are merged in sample order).
    2. For each of ``restarts`` starts, taken from the best screened points
       in order, run a short Nelder-Mead descent on a smooth p-norm of the
       case deviations. Descents ending below ``polish_threshold`` are then
       polished on the max deviation itself, re-seeding the simplex at the
       incumbent until progress stalls.
    3. Stop as soon as the best max deviation reaches ``target_error``.

    The winner is re-scored at ``fine_dtau`` for confirmation. When the
    budget runs out without meeting the target, the result is still
    returned, with ``target_met`` False.
    """
    spec = spec or GateSpec.nor()
    space = space or SearchSpace()
    config = config or SynthesisConfig()
    rng = np.random.default_rng(config.rng_seed)
    track = _Tracker(spec, space, config)
    history: list[tuple[int, float]] = []
    widths = space.hi - space.lo

    n_screen = min(config.screen_samples, config.max_evaluations)
    screen = space.sample(rng, n_screen)
    extra = space.sample(rng, max(0, config.restarts - n_screen))
    if n_screen:
        errs = _screen(track, screen)
        ranked = screen[np.lexsort((np.arange(n_screen), errs))]
        history.append((-1, track.best_err))
    else:
        ranked = screen
    starts = np.vstack([ranked, extra])

    for r in range(config.restarts):
        if track.done or r >= len(starts):
            break
        x = starts[r]
        sub = replace(config, rng_seed=config.rng_seed + 7919 * (r + 1))
        res = nelder_mead(
            lambda v: track.evaluate(v, config.smooth_power), x, sub,
            step=config.initial_step * widths,
            budget=min(config.descent_evaluations, track.remaining),
            target=None,
        )
        if track.seen.get(res.x.tobytes(), np.inf) > config.polish_threshold:
            history.append((r, track.best_err))
            continue
        x, prev = res.x, np.inf
        scale = config.initial_step
        while not track.done:
            res = nelder_mead(
                track.evaluate, x, sub, step=scale * widths,
                budget=min(config.polish_evaluations, track.remaining),
                target=config.target_error,
            )
            if res.fun > prev - 1e-5:
                break
            x, prev = res.x, res.fun
            scale *= 0.5
        history.append((r, track.best_err))

    best_x = track.best_x
    params, tau_final = split_vector(best_x)
    coarse = gate_error(params, EvolutionParams(config.coarse_dtau, tau_final), spec, config.scheme,
                        threshold=config.target_error)
    fine = gate_error(params, EvolutionParams(config.fine_dtau, tau_final), spec, config.scheme,
                      threshold=config.target_error)
    return SynthesisResult(
        best_vector=best_x,
        best_params=params,
        tau_final=tau_final,
        best_report=coarse,
        fine_report=fine,
        evaluations_used=track.count,
        history=tuple(history),
        target_met=bool(coarse.passed),
        config=config,
    )


def _screen(track: _Tracker, points: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate screening points, stopping early once the target is met."""
    workers = worker_count()
    errs = np.full(len(points), np.inf)
    if workers == 1:
        for i, x in enumerate(points):
            clamped, devs = track.deviations(x)
            track.record(clamped, devs)
            errs[i] = devs.max()
            if track.done:
                break
        return errs
    chunk = 256
    with ThreadPoolExecutor(workers) as pool:
        for start in range(0, len(points), chunk):
            block = points[start:start + chunk]
            results = list(pool.map(track.deviations, block))
            for i, (clamped, devs) in enumerate(results):
                track.record(clamped, devs)
                errs[start + i] = devs.max()
                if track.done:
                    return errs
    return errs
