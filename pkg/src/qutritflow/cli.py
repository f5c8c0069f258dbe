"""Command-line front end: scenario configs, figure presets and file output.

A scenario is a single JSON document::

    {"a": [...8], "b": [...8], "xi0": [...8] | {"angles": [al, be, ga, de]},
     "t_end": 200, "samples": 4001, "engine": "auto",
     "section": {"normal": [...8], "point": [...8], "direction": 1},
     "outputs": ["trajectory", "entropy"]}

Exit codes: 0 ok, 1 identity check failed, 2 configuration error,
3 numerical failure, 4 engine cross-check discrepancy above ``CROSSCHECK_TOL``.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analysis import (
    DegenerateSection,
    InsufficientSpan,
    SectionSpec,
    classify_trajectory,
    default_section,
    entropy_series,
    poincare,
)
from .evolution import (
    CaseTag,
    DenominatorVanished,
    EvolutionParams,
    StepSizeUnderflow,
    Trajectory,
    UnsupportedCase,
    closed_form_grid,
    integrate,
    propagate_exact_grid,
    time_grid,
)
from .identities import verify_identities
from .stationary import catalog, find_equilibria
from .state_space import InvalidState, classify, pure_from_angles
from .su3 import SQRT3, OverflowRisk

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CROSSCHECK = 4

CROSSCHECK_TOL = 1e-5
CROSSCHECK_POINTS = 8

ENGINES = ("auto", "closed", "exact", "ode")
OUTPUTS = ("trajectory", "entropy", "poincare", "classification", "equilibria")


class ConfigError(ValueError):
    """Malformed or inadmissible scenario configuration."""


class NumericalFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# configuration


def _vec8(value, name: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: not a numeric array") from exc
    if v.shape != (8,):
        raise ConfigError(f"{name}: expected 8 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{name}: non-finite component")
    return v


def _initial_state(value) -> np.ndarray:
    if isinstance(value, dict):
        if set(value) != {"angles"}:
            raise ConfigError("xi0 object must have the single key 'angles'")
        value = value["angles"]
    arr = np.asarray(value, dtype=float) if value is not None else None
    if arr is None:
        raise ConfigError("xi0 is required")
    if arr.shape == (4,):
        return pure_from_angles(*map(float, arr))
    return _vec8(arr, "xi0")


@dataclass(frozen=True)
class ScenarioConfig:
    a: np.ndarray
    b: np.ndarray
    xi0: np.ndarray
    t_end: float
    samples: int = 2001
    engine: str = "auto"
    section: SectionSpec | None = None
    outputs: tuple[str, ...] = ("trajectory",)
    name: str = "scenario"

    def __post_init__(self):
        if not (isinstance(self.t_end, (int, float)) and math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f"t_end must be a positive finite number, got {self.t_end!r}")
        if isinstance(self.samples, bool) or not isinstance(self.samples, (int, np.integer)) or self.samples < 2:
            raise ConfigError(f"samples must be an integer >= 2, got {self.samples!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad or not self.outputs:
            raise ConfigError(f"outputs must be a non-empty subset of {OUTPUTS}")
        if not classify(self.xi0).valid:
            raise ConfigError("xi0 is not a state")

    @classmethod
    def from_dict(cls, d: dict[str, Any], name: str = "scenario") -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"a", "b", "xi0", "t_end", "samples", "engine", "section", "outputs", "name"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("a", "xi0", "t_end"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        section = None
        if d.get("section") is not None:
            s = d["section"]
            try:
                section = SectionSpec(_vec8(s["normal"], "section.normal"),
                                      _vec8(s.get("point", [0.0] * 8), "section.point"),
                                      int(s.get("direction", 0)))
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"bad section: {exc}") from exc
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        engine = d.get("engine", "auto")
        if engine == "closed_form":
            engine = "closed"
        outputs = d.get("outputs", ["trajectory"])
        if isinstance(outputs, str):
            outputs = [outputs]
        return cls(
            a=_vec8(d["a"], "a"),
            b=_vec8(d.get("b", [0.0] * 8), "b"),
            xi0=_initial_state(d["xi0"]),
            t_end=d["t_end"] if isinstance(d["t_end"], (int, float)) and not isinstance(d["t_end"], bool) else float("nan"),
            samples=d.get("samples", 2001),
            engine=engine,
            section=section,
            outputs=tuple(outputs),
            name=str(d.get("name", name)),
        )

    def to_dict(self) -> dict[str, Any]:
        out = {
            "name": self.name,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "xi0": self.xi0.tolist(),
            "t_end": float(self.t_end),
            "samples": int(self.samples),
            "engine": self.engine,
            "outputs": list(self.outputs),
        }
        if self.section is not None:
            out["section"] = {"normal": self.section.normal.tolist(), "point": self.section.point.tolist(),
                              "direction": self.section.direction}
        return out

    @property
    def params(self) -> EvolutionParams:
        return EvolutionParams.make(self.a, self.b)


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(doc, name=path.stem)


# --------------------------------------------------------------------------
# presets

_H = 0.5
_R = SQRT3 / 2

PRESETS: dict[str, dict[str, Any]] = {
    "fig1": {
        "description": "linear flow, quasi-periodic; Poincare section n = e2 through the origin",
        "a": [0, 1, 0, -1, 0.3, 0, 1, 0],
        "xi0": [0, 0, _H, 0, 0, 0, 0, _H],
        "t_end": 200.0, "samples": 4001,
        "section": {"normal": [0, 1, 0, 0, 0, 0, 0, 0], "point": [0] * 8, "direction": 0},
        "outputs": ["trajectory", "poincare", "classification"],
    },
    "fig2": {
        "description": "linear flow with a.(a*a) = 0, periodic",
        "a": [1, 0, 1, 1, -1, 1, 1, 0],
        "xi0": [0, 0, _R, 0, 0, 0, 0, _H],
        "t_end": 200.0, "samples": 4001,
        "outputs": ["trajectory", "classification"],
    },
    "fig3-left": {
        "description": "diagonal linear flow, quasi-periodic",
        "a": [0, 0, _H, 0, 0, 0, 0, _H],
        "xi0": [0.1] * 8,
        "t_end": 200.0, "samples": 4001,
        "outputs": ["trajectory", "classification"],
    },
    "fig3-right": {
        "description": "diagonal linear flow, periodic",
        "a": [0, 0, SQRT3, 0, 0, 0, 0, _H],
        "xi0": [0.1] * 8,
        "t_end": 200.0, "samples": 4001,
        "outputs": ["trajectory", "classification"],
    },
    "fig5": {
        "description": "nonlinear flow approaching a limit cycle from a pure state",
        "a": [1, 1, 0, 2, -2, 1, 0, 0],
        "b": [0, 0, _R, 0, 0, 0, 0, _H],
        "xi0": [0, 0, -_R, 0, 0, 0, 0, _H],
        "t_end": 200.0, "samples": 4001,
        "outputs": ["trajectory", "poincare", "classification"],
    },
    "fig6": {
        "description": "damped oscillation converging to a pure equilibrium",
        "a": [1, 0, -1, 0, 2, -1, 1, -1],
        "b": [0.1] * 8,
        "xi0": [0, 0, _R, 0, 0, 0, 0, _H],
        "t_end": 400.0, "samples": 8001,
        "outputs": ["trajectory", "entropy", "classification"],
    },
    "fig7": {
        "description": "entropy auto-oscillation on the limit cycle, starting from the maximally mixed state",
        "a": [1, 1, 0, 2, -2, 1, 0, 0],
        "b": [0, 0, _R, 0, 0, 0, 0, _H],
        "xi0": [0] * 8,
        "t_end": 200.0, "samples": 4001,
        "outputs": ["trajectory", "entropy", "classification"],
    },
}

#: equilibrium quoted for the fig6 parameters (six significant digits)
FIG6_EQUILIBRIUM = np.array([0.284966, -0.168841, -0.042086, -0.035279, 0.556160, -0.356250, 0.522711, -0.421682])


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    d = {k: v for k, v in PRESETS[name].items() if k != "description"}
    return ScenarioConfig.from_dict(d, name=name)


# --------------------------------------------------------------------------
# serialization


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"real": _jsonable(x.real), "imag": _jsonable(x.imag)}
        return _jsonable(x.tolist())
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return {"real": x.real, "imag": x.imag}
    return x


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def trajectory_csv(traj: Trajectory, with_entropy: bool = False) -> str:
    header = ["t"] + [f"xi{i}" for i in range(1, 9)]
    cols = [traj.times[:, None], traj.states]
    if with_entropy:
        header.append("S")
        cols.append(np.asarray(traj.entropy)[:, None])
    return _csv(header, np.hstack(cols))


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Inverse of :func:`trajectory_csv`: ``(times, states, entropy or None)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    s = data[:, 9] if header[-1] == "S" else None
    return data[:, 0], data[:, 1:9], s


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# running


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    code: int = EXIT_OK
    files: list[Path] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)
    trajectory: Trajectory | None = None
    classification: Any = None
    equilibria: list | None = None
    message: str = ""


def _propagate(cfg: ScenarioConfig, p: EvolutionParams) -> tuple[Trajectory, dict[str, Any]]:
    times = time_grid(float(cfg.t_end), int(cfg.samples))
    engine = cfg.engine
    if engine == "auto":
        engine = "closed" if p.case_tag is not CaseTag.GENERAL else "ode"
    if engine == "closed":
        states = closed_form_grid(cfg.xi0, p, times)
        traj = Trajectory(times, states, {"engine": "closed_form"})
    elif engine == "exact":
        traj = Trajectory(times, propagate_exact_grid(cfg.xi0, p, times), {"engine": "exact"})
    else:
        traj = integrate(cfg.xi0, p, float(cfg.t_end), times=times)
    if not np.all(np.isfinite(traj.states)):
        raise NumericalFailure("non-finite state produced")
    idx = np.unique(np.linspace(0, len(times) - 1, CROSSCHECK_POINTS).round().astype(int))
    ref = propagate_exact_grid(cfg.xi0, p, times[idx])
    disc = float(np.max(np.abs(ref - traj.states[idx])))
    meta = dict(traj.meta)
    meta.update(case=p.case_tag.value, crosscheck_points=idx.size, crosscheck_max_discrepancy=disc)
    return Trajectory(traj.times, traj.states, meta), meta


def _equilibria(p: EvolutionParams, seed: int) -> list:
    if p.case_tag is CaseTag.GENERAL:
        return find_equilibria(p, seed=seed)
    return catalog(p)


def _equilibria_doc(eqs) -> list[dict[str, Any]]:
    out = []
    for e in eqs:
        rep = e.report
        out.append({
            "xi": e.xi,
            "state": e.tag,
            "stability": e.stability,
            "source": e.source,
            "family": e.family,
            "restricted_eigenvalues": None if rep is None else rep.restricted_eigenvalues,
            "crosscheck": None if rep is None else rep.crosscheck,
        })
    return out


def run_scenario(cfg: ScenarioConfig, out_dir: str | os.PathLike | None = None, fmt: str = "csv",
                 seed: int = 0) -> ScenarioResult:
    """Run one scenario, optionally writing its outputs under ``out_dir``.

    Never raises for configuration or numerical problems; the outcome is in
    ``result.code`` and ``result.message``.
    """
    res = ScenarioResult(cfg)
    out = Path(out_dir) if out_dir is not None else None
    try:
        p = cfg.params
        res.meta.update(version=__version__, config=cfg.to_dict(), seed=seed, case=p.case_tag.value)
        wants = set(cfg.outputs)
        if wants & {"trajectory", "entropy", "poincare", "classification"}:
            traj, meta = _propagate(cfg, p)
            if "entropy" in wants:
                traj = traj.with_entropy()
            res.trajectory = traj
            res.meta.update(meta)
            if meta["crosscheck_max_discrepancy"] > CROSSCHECK_TOL:
                res.code = EXIT_CROSSCHECK
                res.message = f"cross-check discrepancy {meta['crosscheck_max_discrepancy']:.3g} > {CROSSCHECK_TOL:g}"
        if "classification" in wants:
            res.classification = classify_trajectory(res.trajectory, p, cfg.section)
        if "equilibria" in wants:
            res.equilibria = _equilibria(p, seed)
        if out is not None:
            res.files = _write_outputs(res, p, out, fmt)
    except (ConfigError, UnsupportedCase, InsufficientSpan, DegenerateSection, InvalidState) as exc:
        res.code, res.message = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
    except (StepSizeUnderflow, OverflowRisk, DenominatorVanished, NumericalFailure, FloatingPointError,
            ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        res.code, res.message = EXIT_NUMERIC, f"{type(exc).__name__}: {exc}"
    return res


def _write_outputs(res: ScenarioResult, p: EvolutionParams, out: Path, fmt: str) -> list[Path]:
    files: list[Path] = []

    def put(name: str, text: str):
        path = out / name
        atomic_write(path, text)
        files.append(path)

    cfg, traj = res.config, res.trajectory
    wants = set(cfg.outputs)
    if traj is not None and "trajectory" in wants:
        if fmt == "csv":
            put("trajectory.csv", trajectory_csv(traj, with_entropy=traj.entropy is not None))
        else:
            put("trajectory.json", _dumps({"t": traj.times, "xi": traj.states, "S": traj.entropy}))
    if traj is not None and "entropy" in wants:
        if fmt == "csv":
            put("entropy.csv", _csv(["t", "S"], np.column_stack([traj.times, traj.entropy])))
        else:
            put("entropy.json", _dumps({"t": traj.times, "S": traj.entropy}))
    if traj is not None and "poincare" in wants:
        spec = cfg.section or default_section(traj, p)
        pts = poincare(traj, spec, p)
        if fmt == "csv":
            put("poincare.csv", _csv([f"xi{i}" for i in range(1, 9)], pts.reshape(-1, 8)))
        else:
            put("poincare.json", _dumps({"section": {"normal": spec.normal, "point": spec.point,
                                                     "direction": spec.direction}, "points": pts}))
    if res.classification is not None:
        c = res.classification
        put("classification.json", _dumps({"label": c.label, "period_estimate": c.period_estimate,
                                           "limit_point": c.limit_point, "evidence": c.evidence}))
    if res.equilibria is not None:
        put("equilibria.json", _dumps(_equilibria_doc(res.equilibria)))
    meta = dict(res.meta, exit_code=res.code, message=res.message)
    put("metadata.json", _dumps(meta))
    return files


def run_batch(configs: Sequence[ScenarioConfig], out_dir, fmt: str = "csv", seed: int = 0,
              workers: int | None = None) -> list[ScenarioResult]:
    """Run independent scenarios on a thread pool, each into ``out_dir/<name>``."""
    base = Path(out_dir)
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique within a batch")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(run_scenario, c, base / c.name, fmt, seed) for c in configs]
        return [f.result() for f in futs]


# --------------------------------------------------------------------------
# argument parsing

_COMMAND_OUTPUTS = {
    "simulate": None,  # whatever the config asks for
    "entropy": ("trajectory", "entropy"),
    "poincare": ("poincare",),
    "classify": ("classification",),
    "equilibria": ("equilibria",),
}


def _scenario_args(sp: argparse.ArgumentParser):
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", action="append", metavar="PATH", help="scenario JSON (repeat for a batch)")
    src.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--engine", choices=ENGINES, help="override the configured engine")
    sp.add_argument("--out", metavar="DIR", help="output directory (default: none, summary only)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--t-end", type=float, dest="t_end", help="override t_end")
    sp.add_argument("--samples", type=int, help="override the number of samples")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qutritflow", description="Nonlinear qutrit evolution toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in _COMMAND_OUTPUTS:
        _scenario_args(sub.add_parser(cmd, help=f"{cmd} for a scenario"))
    v = sub.add_parser("verify", help="run the algebraic identity suite")
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--count", type=int, default=1000)
    v.add_argument("--out", metavar="DIR")
    pr = sub.add_parser("presets", help="figure presets")
    pr.add_argument("action", choices=("list",))
    return ap


def _configs(args) -> list[ScenarioConfig]:
    cfgs = [preset(args.preset)] if args.preset else [load_config(pth) for pth in args.config]
    overrides: dict[str, Any] = {}
    if args.engine:
        overrides["engine"] = args.engine
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.samples is not None:
        overrides["samples"] = args.samples
    outs = _COMMAND_OUTPUTS[args.command]
    if outs is not None:
        overrides["outputs"] = outs
    return [replace(c, **overrides) for c in cfgs]


def _summary(res: ScenarioResult) -> str:
    parts = [f"{res.config.name}: exit={res.code}"]
    if "case" in res.meta:
        parts.append(f"case={res.meta['case']}")
    if "crosscheck_max_discrepancy" in res.meta:
        parts.append(f"crosscheck={res.meta['crosscheck_max_discrepancy']:.3g}")
    if res.classification is not None:
        parts.append(f"label={res.classification.label.value}")
        if res.classification.period_estimate is not None:
            parts.append(f"period={res.classification.period_estimate:.6g}")
    if res.equilibria is not None:
        parts.append(f"equilibria={len(res.equilibria)}")
    for f in res.files:
        parts.append(f"wrote={f}")
    if res.message:
        parts.append(res.message)
    return " ".join(parts)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name, d in PRESETS.items():
            print(f"{name}\t{d['description']}")
        return EXIT_OK
    if args.command == "verify":
        if args.count < 1:
            print("error: --count must be at least 1", file=sys.stderr)
            return EXIT_CONFIG
        report = verify_identities(args.seed, args.count)
        text = "\n".join(report.lines()) + "\n"
        sys.stdout.write(text)
        if args.out:
            atomic_write(Path(args.out) / "identities.csv", text)
        return EXIT_OK if report.passed else EXIT_IDENTITY
    try:
        cfgs = _configs(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if len(cfgs) == 1:
        results = [run_scenario(cfgs[0], args.out, args.format, args.seed)]
    else:
        if args.out is None:
            print("error: batch runs need --out", file=sys.stderr)
            return EXIT_CONFIG
        try:
            results = run_batch(cfgs, args.out, args.format, args.seed)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    for r in results:
        print(_summary(r), file=sys.stderr if r.code else sys.stdout)
    return max(r.code for r in results)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
