"""Command line entry point.

    gpgate simulate      --case 00 --out traj.csv
    gpgate verify-paper  --out report.json
    gpgate synthesize    --config run.json --out synth.json
    gpgate search-demo   --n-bits 8 --seed 7 --rule minimize

Exit codes: 0 success, 1 numerical or verification failure, 2 configuration
error, 3 synthesis budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import constants
from .gate import GateCase, GateSpec, initial_state, potential_permutation_scan, verify_paper_parameters
from .integrator import NonFiniteState, NormDrift, SplittingScheme, evolve
from .lattice import SITE_LABELS, EvolutionParams, NormError, StateVector, SystemParams
from .search import (
    MAX_OPTIMUM_BITS,
    CandidateSpace,
    ReductionRule,
    apply_oracle,
    brute_force_optimum,
    determine_optimum,
    direct_combiner_value,
    operation_count,
    physical_combiner,
    random_oracle,
    reduce_to_value,
    uniform_superposition,
)
from .synth import PARAM_NAMES, SearchSpace, SynthesisConfig, synthesize

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
MAX_PHYSICAL_BITS = 6


class ConfigError(Exception):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GateConfig(_Strict):
    targets: tuple[int, int, int, int] = (1, 0, 0, 0)
    readout_site: str = "11"

    @field_validator("targets")
    @classmethod
    def _bits(cls, v):
        if set(v) - {0, 1}:
            raise ValueError("targets must be 0 or 1")
        return v

    @field_validator("readout_site")
    @classmethod
    def _site(cls, v):
        if v not in SITE_LABELS:
            raise ValueError(f"readout_site must be one of {SITE_LABELS}")
        return v


class SynthesisSection(_Strict):
    restarts: int = Field(150, ge=1)
    max_evaluations: int = Field(50_000, ge=1)
    target_error: float = Field(0.05, gt=0, le=1)
    seed: int = 1
    screen_samples: int = Field(10_000, ge=0)
    coarse_dtau: float = Field(5e-3, gt=0)
    fine_dtau: float = Field(constants.PAPER_DTAU, gt=0)
    reflection: float = Field(1.0, gt=0)
    expansion: float = Field(2.0, gt=1)
    contraction: float = Field(0.5, gt=0, lt=1)
    shrink: float = Field(0.5, gt=0, lt=1)
    tolerance: float = Field(1e-7, gt=0)
    initial_step: float = Field(0.05, gt=0)
    smooth_power: float = Field(8.0, ge=1)
    descent_evaluations: int = Field(250, ge=1)
    polish_threshold: float = Field(0.08, gt=0)
    polish_evaluations: int = Field(1_500, ge=1)
    bounds: dict[str, tuple[float, float]] = Field(default_factory=dict)

    @field_validator("bounds")
    @classmethod
    def _names(cls, v):
        unknown = set(v) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown bound names {sorted(unknown)}")
        return v


class SearchSection(_Strict):
    n_bits: int = Field(8, ge=1)
    seed: int = 7
    rule: Literal["minimize", "maximize", "nor"] = "minimize"
    mode: Literal["ideal", "physical"] = "ideal"
    oracle_file: Optional[str] = None


class RunConfig(_Strict):
    alpha: float = constants.PAPER_ALPHA
    potential: tuple[float, float, float, float] = constants.PAPER_POTENTIAL
    tau_final: float = Field(constants.PAPER_TAU_FINAL, ge=0)
    dtau: float = Field(constants.PAPER_DTAU, gt=0)
    sample_stride: int = Field(10, ge=1)
    scheme: SplittingScheme = SplittingScheme.STRANG_DIAGONAL_FIRST
    case: Optional[str] = "00"
    initial: Optional[list[tuple[float, float]]] = None
    gate: GateConfig = Field(default_factory=GateConfig)
    synthesis: SynthesisSection = Field(default_factory=SynthesisSection)
    search: SearchSection = Field(default_factory=SearchSection)
    out: Optional[str] = None

    @field_validator("case")
    @classmethod
    def _case(cls, v):
        if v is not None and v not in SITE_LABELS:
            raise ValueError("case must be one of 00, 01, 10, 11")
        return v

    @field_validator("initial")
    @classmethod
    def _initial(cls, v):
        if v is not None and len(v) != 4:
            raise ValueError("initial needs four [re, im] amplitudes")
        return v

    def system_params(self) -> SystemParams:
        return SystemParams(self.alpha, self.potential)

    def evolution(self) -> EvolutionParams:
        return EvolutionParams(self.dtau, self.tau_final, self.sample_stride)

    def gate_spec(self) -> GateSpec:
        return GateSpec.from_targets(self.gate.targets, self.gate.readout_site)

    def initial_state(self) -> StateVector:
        if self.initial is not None:
            return StateVector(np.array([complex(re, im) for re, im in self.initial]))
        f0, f1 = int(self.case[0]), int(self.case[1])
        return initial_state(GateCase(f0, f1, 0))

    def synthesis_config(self) -> tuple[SearchSpace, SynthesisConfig]:
        s = self.synthesis
        space = SearchSpace.from_dict(s.bounds)
        cfg = SynthesisConfig(
            restarts=s.restarts, max_evaluations=s.max_evaluations, target_error=s.target_error,
            rng_seed=s.seed, screen_samples=s.screen_samples, coarse_dtau=s.coarse_dtau,
            fine_dtau=s.fine_dtau, reflection=s.reflection, expansion=s.expansion,
            contraction=s.contraction, shrink=s.shrink, tolerance=s.tolerance,
            initial_step=s.initial_step, smooth_power=s.smooth_power,
            descent_evaluations=s.descent_evaluations, polish_threshold=s.polish_threshold,
            polish_evaluations=s.polish_evaluations, scheme=self.scheme,
        )
        return space, cfg


# -- output helpers ------------------------------------------------------------


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _round(obj):
    """Round every float to 12 significant digits for stable JSON."""
    if isinstance(obj, float):
        return float(fmt(obj)) if np.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def write_atomic(path: str | None, text: str) -> None:
    """Write via temp file and rename; ``None`` or ``-`` means stdout."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


CSV_HEADER = ("tau", "p00", "p01", "p10", "p11", "norm")


def trajectory_csv(traj) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for tau, occ, nrm in zip(traj.tau, traj.occupations, traj.norm):
        writer.writerow([fmt(tau), *(fmt(p) for p in occ), fmt(nrm)])
    return buf.getvalue()


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV back into columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = np.array([[float(v) for v in row] for row in reader])
    return {name: rows[:, i] for i, name in enumerate(CSV_HEADER)}


# -- config loading --------------------------------------------------------------


def load_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    overrides = {
        "alpha": getattr(args, "alpha", None),
        "tau_final": getattr(args, "tau_final", None),
        "dtau": getattr(args, "dtau", None),
        "scheme": getattr(args, "scheme", None),
        "out": getattr(args, "out", None),
        "case": getattr(args, "case", None),
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if getattr(args, "initial", None):
        try:
            amps = [complex(v) for v in args.initial.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --initial: {exc}") from exc
        data["initial"] = [[a.real, a.imag] for a in amps]
    if getattr(args, "seed", None) is not None:
        section = "search" if args.command == "search-demo" else "synthesis"
        data.setdefault(section, {})["seed"] = args.seed
    if args.command == "search-demo":
        search = data.setdefault("search", {})
        for key in ("n_bits", "rule", "mode", "oracle_file"):
            value = getattr(args, key, None)
            if value is not None:
                search[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


# -- commands --------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    try:
        params, evo, state = cfg.system_params(), cfg.evolution(), cfg.initial_state()
    except (ValueError, NormError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        traj = evolve(state, params, evo, cfg.scheme)
    except (NonFiniteState, NormDrift) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    write_atomic(cfg.out, trajectory_csv(traj))
    return EXIT_OK


def verify_report(profile: str = "relaxed") -> tuple[dict, bool]:
    result = verify_paper_parameters(profile)
    (scheme, reading), best = result.best()
    schemes: dict = {}
    for (s, r), rep in result.reports.items():
        schemes.setdefault(s, {})[r] = rep.to_dict()
    scan = potential_permutation_scan()[:3]
    report = {
        "constants": dict(constants.PAPER_CONSTANTS),
        "profile": profile,
        "relaxed_bound": result.relaxed_bound,
        "summary": {
            "passed": result.passed,
            "relaxed_ok": result.relaxed_ok,
            "published_ok": result.published_ok,
            "truth_table_ok": result.truth_table_ok,
            "best": {"scheme": scheme, "reading": reading, "max_deviation": best.max_deviation},
        },
        "schemes": schemes,
        "potential_relabel_scan": [
            {"potential": [constants.PAPER_POTENTIAL[i] for i in perm], "deviations": list(devs)}
            for perm, devs in scan
        ],
    }
    return report, result.passed


def cmd_verify_paper(cfg: RunConfig) -> int:
    report, passed = verify_report()
    write_atomic(cfg.out, dumps(report))
    return EXIT_OK if passed else EXIT_FAILURE


def cmd_synthesize(cfg: RunConfig) -> int:
    try:
        space, sconf = cfg.synthesis_config()
        spec = cfg.gate_spec()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = synthesize(spec, space, sconf)
    doc = {
        "spec": {"targets": list(spec.targets), "readout_site": str(spec.readout_site)},
        "bounds": space.to_dict(),
        "seed": sconf.rng_seed,
        "target_error": sconf.target_error,
        **result.to_dict(),
    }
    write_atomic(cfg.out, dumps(doc))
    return EXIT_OK if result.target_met else EXIT_BUDGET


def _load_oracle(path: str, kind: str) -> CandidateSpace:
    try:
        table = json.loads(Path(path).read_text())
        if not isinstance(table, dict):
            raise ValueError("oracle file must hold a JSON object")
        return CandidateSpace.from_table(table, kind)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad oracle file: {exc}") from exc


def search_report(cfg: RunConfig) -> tuple[dict, bool]:
    s = cfg.search
    kind = "legality" if s.rule == "nor" else "cost"
    if s.mode == "physical" and s.rule != "nor":
        raise ConfigError("physical mode realizes the NOR combiner only; use --rule nor")
    if s.oracle_file:
        space = _load_oracle(s.oracle_file, kind)
    else:
        high = 2 if kind == "legality" else 100
        space = CandidateSpace.from_values(random_oracle(s.n_bits, s.seed, high), kind)
    n = space.n_bits
    limit = MAX_PHYSICAL_BITS if s.mode == "physical" else MAX_OPTIMUM_BITS
    if n > limit:
        raise ConfigError(f"{s.mode} mode supports at most {limit} bits")
    N = space.size
    report = {"n_bits": n, "rule": s.rule, "mode": s.mode, "seed": s.seed,
              "oracle_source": s.oracle_file or "random"}

    if s.rule == "nor":
        values = [space.oracle(k) for k in range(N)]
        if set(values) - {0, 1}:
            raise ConfigError("NOR rule needs a 0/1 legality oracle")
        start = apply_oracle(uniform_superposition(space), space)
        rule = ReductionRule.nor()
        ideal_calls, physical_calls = [], []

        def ideal(a, b):
            ideal_calls.append((a, b, rule.table[2 * a + b]))
            return rule.table[2 * a + b]

        entry, ops = reduce_to_value(start, rule, ideal)
        direct = direct_combiner_value(values, rule.table)
        ok = entry.value == direct
        report.update({"reduced_value": entry.value, "operations": ops,
                       "direct_value": direct, "check_passed": ok})
        if s.mode == "physical":
            gate = physical_combiner(cfg.system_params(), EvolutionParams(cfg.dtau, cfg.tau_final),
                                     cfg.scheme, cfg.gate.readout_site)

            def physical(a, b):
                out = gate(a, b)
                physical_calls.append((a, b, out))
                return out

            p_entry, _ = reduce_to_value(start, rule, physical)
            same = physical_calls == ideal_calls
            report.update({"physical_value": p_entry.value, "decisions_match": same,
                           "decisions": [list(c) for c in physical_calls]})
            ok = ok and same and p_entry.value == entry.value
        report["check_passed"] = ok
        return report, ok

    rule = ReductionRule.minimizing() if s.rule == "minimize" else ReductionRule.maximizing()
    result = determine_optimum(space, rule)
    bk, bv = brute_force_optimum(space, minimize=rule.minimize)
    ok = result.k == bk
    report.update({
        "bitstring": result.bitstring,
        "value": result.value,
        "total_operations": result.total_operations,
        "closed_form_operations": operation_count(n),
        "n_times_N": n * N,
        "N_squared": N * N,
        "brute_force": {"bitstring": format(bk, f"0{n}b"), "value": bv, "match": ok},
        "check_passed": ok,
        "trace": [r._asdict() for r in result.trace],
    })
    return report, ok


def cmd_search_demo(cfg: RunConfig) -> int:
    report, ok = search_report(cfg)
    write_atomic(cfg.out, dumps(report))
    return EXIT_OK if ok else EXIT_FAILURE


COMMANDS = {
    "simulate": cmd_simulate,
    "verify-paper": cmd_verify_paper,
    "synthesize": cmd_synthesize,
    "search-demo": cmd_search_demo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpgate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--alpha", type=float)
        p.add_argument("--tau-final", type=float)
        p.add_argument("--dtau", type=float)
        p.add_argument("--scheme", choices=[s.value for s in SplittingScheme])
        p.add_argument("--seed", type=int)
        return p

    sim = common(sub.add_parser("simulate", help="evolve one initial state and write a CSV trajectory"))
    sim.add_argument("--case", choices=SITE_LABELS, help="gate input f0f1")
    sim.add_argument("--initial", help="four comma-separated complex amplitudes, e.g. 0.7071,0,0.7071,0")
    common(sub.add_parser("verify-paper", help="re-run the published NOR parameter set"))
    common(sub.add_parser("synthesize", help="search gate parameters for a truth table"))
    demo = common(sub.add_parser("search-demo", help="pairwise-elimination search with a brute-force check"))
    demo.add_argument("--n-bits", type=int)
    demo.add_argument("--rule", choices=["minimize", "maximize", "nor"])
    demo.add_argument("--mode", choices=["ideal", "physical"])
    demo.add_argument("--oracle-file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
