"""Experiment harness and command line.

Commands cover the synthetic workflow end to end: ``synth`` writes a
scene, ``solve`` the dual solution for it, ``recover`` the localized
atoms and coefficients, ``slices`` the plot-ready polynomial cuts, and
``run`` chains all of those; ``sweep`` runs seeded Monte Carlo trials
over one problem dimension and aggregates error statistics.

Reproducibility rules, which the tests pin down:

- every artifact file (JSON and CSV) is byte-identical across runs of
  the same configuration; wall-clock time therefore never enters a
  file, only the stdout record of ``run``;
- trial t of a sweep uses scene seed ``base_seed + t``, identical
  across sweep values so that error trends are compared on common
  random scenes;
- the representation subspaces are drawn with seed
  ``scene_seed + SUBSPACE_SEED_OFFSET``, keeping the two random
  streams apart while staying reconstructible from a scene file alone.

Floats in CSV files are written with ``repr``, the shortest exact
round-trip form.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ._json import complex_array_from_json, dumps_canonical
from .lifting import Measurement, synthesize_measurements
from .recovery import (
    error_metrics,
    recover_channels,
    verify_certificate,
)
from .scene import TWO_PI, Dims, Scene, SceneConfig, Subspaces, make_subspaces, sample_scene
from .sdp import build_dual_sdp, extract_dual_solution
from .solver import SolverOptions, solve

# Offset separating the subspace seed stream from the scene seed stream.
SUBSPACE_SEED_OFFSET = 1_000_003

# Slice resolution: dense 1-D cuts at the display step 1e-3, coarser 2-D
# planes to keep the files reasonable.
CUT_GRID = 1000
PLANE_GRID = 200

SWEEP_AXES = ("M", "P", "Nr")

_TRIAL_COLUMNS = [
    "axis", "value", "trial", "seed", "status", "iterations", "objective",
    "frob_radar_abs", "frob_radar_rel", "frob_comms_abs", "frob_comms_rel",
    "radar_err_tau", "radar_err_nu", "radar_err_beta",
    "comms_err_tau", "comms_err_nu", "comms_err_beta",
    "radar_linf_mean", "comms_linf_mean", "cert_ok", "error",
]

_SUMMARY_COLUMNS = [
    "axis", "value", "trials", "failed",
    "frob_radar_rel_mean", "frob_radar_rel_median",
    "frob_radar_rel_q25", "frob_radar_rel_q75",
    "frob_comms_rel_mean", "frob_comms_rel_median",
    "frob_comms_rel_q25", "frob_comms_rel_q75",
    "radar_linf_mean", "comms_linf_mean", "cert_ok_rate",
]


# -----------------------------------------------------------------
# Configuration
# -----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything one experiment needs, JSON-serializable.

    ``tol`` and ``max_iters`` of None mean solver defaults.  Fixed
    triples, when given, are injected instead of sampled (amplitudes
    and signal coefficients are still drawn from the seed).
    """

    M: int = 5
    P: int = 3
    N_r: int = 2
    K: int = 2
    L: int = 1
    Q_c: int = 1
    amp_mode: str = "unit"
    separation: bool = False
    seed: int = 0
    trials: int = 1
    axis: str = "M"
    values: tuple = (3, 5, 7, 9)
    gram_mode: str = "shared"
    tol: float | None = None
    max_iters: int | None = None
    out: str = "out"
    radar_triples: list | None = None
    comms_triples: list | None = None

    def validate(self) -> "ExperimentConfig":
        self.dims()
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        self.values = tuple(int(v) for v in self.values)
        if not self.values or any(v < 1 for v in self.values):
            raise ValueError("sweep values must be positive integers")
        if self.axis == "M" and any(v % 2 == 0 for v in self.values):
            raise ValueError("sweep values for axis M must be odd")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.gram_mode not in ("shared", "split"):
            raise ValueError(f"gram_mode must be 'shared' or 'split', got {self.gram_mode!r}")
        return self

    def dims(self) -> Dims:
        return Dims.from_M(self.M, P=self.P, N_r=self.N_r, K=self.K,
                           L=self.L, Q_c=self.Q_c)

    def dims_for(self, value: int) -> Dims:
        """Dims with the sweep axis replaced by ``value``."""
        if self.axis == "M":
            return Dims.from_M(value, P=self.P, N_r=self.N_r, K=self.K,
                               L=self.L, Q_c=self.Q_c)
        if self.axis == "P":
            return Dims.from_M(self.M, P=value, N_r=self.N_r, K=self.K,
                               L=self.L, Q_c=self.Q_c)
        return Dims.from_M(self.M, P=self.P, N_r=value, K=self.K,
                           L=self.L, Q_c=self.Q_c)

    def solver_options(self) -> SolverOptions:
        opts = SolverOptions()
        if self.tol is not None:
            opts = replace(opts, eps_abs=self.tol, eps_rel=self.tol)
        if self.max_iters is not None:
            opts = replace(opts, max_iters=self.max_iters)
        return opts

    def scene_config(self, dims: Dims, seed: int) -> SceneConfig:
        radar = np.asarray(self.radar_triples, dtype=float) \
            if self.radar_triples is not None else None
        comms = np.asarray(self.comms_triples, dtype=float) \
            if self.comms_triples is not None else None
        return SceneConfig(dims=dims, amp_mode=self.amp_mode,
                           separation=self.separation, seed=seed,
                           radar_triples=radar, comms_triples=comms)

    def to_json(self) -> dict:
        out = {"schema": "experiment-v1"}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "values":
                val = list(val)
            out[f.name] = val
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        schema = obj.pop("schema", "experiment-v1")
        if schema != "experiment-v1":
            raise ValueError(f"unsupported config schema {schema!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**obj)
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


def subspace_seed(scene_seed: int) -> int:
    return scene_seed + SUBSPACE_SEED_OFFSET


# -----------------------------------------------------------------
# Trial records
# -----------------------------------------------------------------

@dataclass
class TrialRecord:
    """Flat per-trial summary, one per (sweep value, trial)."""

    axis: str
    value: int
    trial: int
    seed: int
    status: str = "failed"
    iterations: int = 0
    objective: float = float("nan")
    wall_time: float = float("nan")
    frob_radar_abs: float = float("nan")
    frob_radar_rel: float = float("nan")
    frob_comms_abs: float = float("nan")
    frob_comms_rel: float = float("nan")
    radar_err: tuple = (float("nan"),) * 3
    comms_err: tuple = (float("nan"),) * 3
    radar_linf_mean: float = float("nan")
    comms_linf_mean: float = float("nan")
    cert_ok: bool = False
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def to_json(self) -> dict:
        return {
            "schema": "trial-v1",
            "axis": self.axis, "value": self.value, "trial": self.trial,
            "seed": self.seed, "status": self.status,
            "iterations": self.iterations, "objective": self.objective,
            "wall_time": self.wall_time,
            "frob_radar_abs": self.frob_radar_abs,
            "frob_radar_rel": self.frob_radar_rel,
            "frob_comms_abs": self.frob_comms_abs,
            "frob_comms_rel": self.frob_comms_rel,
            "radar_err": list(self.radar_err),
            "comms_err": list(self.comms_err),
            "radar_linf_mean": self.radar_linf_mean,
            "comms_linf_mean": self.comms_linf_mean,
            "cert_ok": self.cert_ok, "error": self.error,
        }

    def csv_row(self) -> list:
        # Deliberately no wall time: rows must be byte-identical across
        # runs of the same config.
        return [self.axis, self.value, self.trial, self.seed, self.status,
                self.iterations, self.objective,
                self.frob_radar_abs, self.frob_radar_rel,
                self.frob_comms_abs, self.frob_comms_rel,
                *self.radar_err, *self.comms_err,
                self.radar_linf_mean, self.comms_linf_mean,
                self.cert_ok, self.error]


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _write_csv(path: Path, columns, rows):
    lines = [",".join(columns)]
    lines += [",".join(_csv_cell(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj: dict):
    path.write_text(dumps_canonical(obj) + "\n")


# -----------------------------------------------------------------
# Single trial execution
# -----------------------------------------------------------------

@dataclass
class _TrialBundle:
    """Objects produced along one trial, as far as it got."""

    record: TrialRecord
    scene: Scene | None = None
    subspaces: Subspaces | None = None
    measurement: Measurement | None = None
    solution=None
    result=None
    certificate=None


def _execute_trial(cfg: ExperimentConfig, dims: Dims, trial: int, seed: int) -> _TrialBundle:
    """Scene through metrics for one seed; failures land in the record.

    Any exception past configuration is recorded as a failed trial with
    the stage name, so sweeps keep going (crash-freedom is contractual).
    """
    import time

    record = TrialRecord(axis=cfg.axis, value=getattr(dims, cfg.axis.replace("Nr", "N_r")),
                         trial=trial, seed=seed)
    bundle = _TrialBundle(record=record)
    t0 = time.perf_counter()
    stage = "synth"
    try:
        scene = sample_scene(cfg.scene_config(dims, seed))
        sub = make_subspaces(dims, seed=subspace_seed(seed))
        meas = synthesize_measurements(scene, sub)
        bundle.scene, bundle.subspaces, bundle.measurement = scene, sub, meas

        stage = "solve"
        problem = build_dual_sdp(meas, sub, gram_mode=cfg.gram_mode)
        raw = solve(problem, cfg.solver_options())
        sol = extract_dual_solution(problem, raw)
        bundle.solution = sol
        record.status = sol.status
        record.iterations = sol.iterations
        record.objective = float(sol.objective)

        stage = "recover"
        result = recover_channels(sol.q, meas, sub)
        result.metrics = error_metrics(scene, result)
        cert = verify_certificate(sol.q, scene, sub)
        bundle.result, bundle.certificate = result, cert

        m = result.metrics
        record.frob_radar_abs = m.frob_radar_abs
        record.frob_radar_rel = m.frob_radar_rel
        record.frob_comms_abs = m.frob_comms_abs
        record.frob_comms_rel = m.frob_comms_rel
        record.radar_err = tuple(float(x) for x in m.radar.coord_max)
        record.comms_err = tuple(float(x) for x in m.comms.coord_max)
        record.radar_linf_mean = m.radar.linf_mean
        record.comms_linf_mean = m.comms.linf_mean
        record.cert_ok = cert.ok
    except Exception as exc:
        record.status = "failed"
        record.error = f"{stage}: {exc}"
    record.wall_time = time.perf_counter() - t0
    return bundle


# -----------------------------------------------------------------
# Commands
# -----------------------------------------------------------------

def run_single(cfg: ExperimentConfig) -> TrialRecord:
    """End-to-end pipeline for the configured dims, writing artifacts.

    Writes scene.json, solution.json, recovery.json (with the
    certificate report attached) and the slice CSVs into the output
    directory; every file is byte-identical across repeated runs.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle = _execute_trial(cfg, cfg.dims(), trial=0, seed=cfg.seed)
    if bundle.scene is not None:
        _write_json(out / "scene.json", bundle.scene.to_json())
    if bundle.solution is not None:
        _write_json(out / "solution.json", bundle.solution.summary_json())
    if bundle.result is not None:
        obj = bundle.result.to_json()
        obj["certificate"] = bundle.certificate.to_json()
        _write_json(out / "recovery.json", obj)
        emit_slices(bundle.scene, bundle.subspaces, bundle.solution.q, out)
    return bundle.record


def run_sweep(cfg: ExperimentConfig) -> list:
    """Seeded trials for every sweep value; returns all trial records.

    Writes ``sweep_trials.csv`` (one row per trial) and
    ``sweep_summary.csv`` (one aggregated row per sweep value; failed
    trials are excluded from the statistics and counted).  Trial t
    reuses seed base+t at every sweep value, so the random scenes are
    common across values.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    summary_rows = []
    for value in cfg.values:
        dims = cfg.dims_for(value)
        value_records = []
        for trial in range(cfg.trials):
            bundle = _execute_trial(cfg, dims, trial=trial, seed=cfg.seed + trial)
            value_records.append(bundle.record)
        records.extend(value_records)
        summary_rows.append(_summarize(cfg.axis, value, value_records))
    _write_csv(out / "sweep_trials.csv", _TRIAL_COLUMNS,
               [r.csv_row() for r in records])
    _write_csv(out / "sweep_summary.csv", _SUMMARY_COLUMNS, summary_rows)
    return records


def _summarize(axis: str, value: int, records: list) -> list:
    good = [r for r in records if r.ok]
    failed = len(records) - len(good)

    def stats(xs):
        if not xs:
            nan = float("nan")
            return nan, nan, nan, nan
        arr = np.asarray(xs, dtype=float)
        return (float(arr.mean()), float(np.median(arr)),
                float(np.quantile(arr, 0.25)), float(np.quantile(arr, 0.75)))

    fr = stats([r.frob_radar_rel for r in good])
    fc = stats([r.frob_comms_rel for r in good])
    r_linf = stats([r.radar_linf_mean for r in good])[0]
    c_linf = stats([r.comms_linf_mean for r in good])[0]
    cert_rate = float(np.mean([r.cert_ok for r in good])) if good else float("nan")
    return [axis, value, len(records), failed, *fr, *fc, r_linf, c_linf, cert_rate]


# -----------------------------------------------------------------
# Slice emission
# -----------------------------------------------------------------

def _partial_field(q, subspaces: Subspaces, dims: Dims, which: str,
                   vary, fixed: dict, sizes) -> np.ndarray:
    """||f|| on a dense grid over ``vary`` axes with the others fixed.

    Contracts the coefficient tensor with the fixed-axis phases, then
    runs one zero-padded FFT per output coordinate over the remaining
    axes, exactly like the full 3-D evaluation.
    """
    from .recovery import _dual_coefficients

    C = _dual_coefficients(q, subspaces, dims, which)
    n, p, a, _ = dims.index_arrays()
    freq = {"tau": n, "nu": p, "beta": a}

    weight = np.ones(dims.J, dtype=complex)
    for axis, x0 in fixed.items():
        weight = weight * np.exp(-1j * TWO_PI * freq[axis] * float(x0))
    Cw = C * weight[None, :]

    sizes = [int(s) for s in sizes]
    idx = tuple(freq[axis] % s for axis, s in zip(vary, sizes))
    padded = np.zeros((C.shape[0], *sizes), dtype=complex)
    for k in range(C.shape[0]):
        np.add.at(padded[k], idx, Cw[k])
    spectrum = np.fft.fftn(padded, axes=tuple(range(1, 1 + len(sizes))))
    return np.linalg.norm(spectrum, axis=0)


def _slice_header(which, vary, fixed, sizes) -> str:
    lines = ["# schema: slice-v1", f"# channel: {which}"]
    for axis, x0 in fixed.items():
        lines.append(f"# fixed: {axis} = {x0!r}")
    for axis, s in zip(vary, sizes):
        lines.append(f"# axis: {axis}, {s} points, step {1.0 / s!r}")
    return "\n".join(lines)


def emit_slices(scene: Scene, subspaces: Subspaces, q, out_dir,
                plane_grid: int = PLANE_GRID, cut_grid: int = CUT_GRID) -> list:
    """Plot-ready CSV cuts of both polynomials through the true atoms.

    Per channel, through the first atom of that channel: the tau-nu
    plane at the true beta, the nu-beta plane at the true tau, and the
    three dense 1-D cuts along each axis through the full triple.  The
    headers carry the fixed coordinates and grid metadata.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dims = scene.dims
    bandwidth = {"tau": dims.M, "nu": dims.P, "beta": dims.N_r}
    q = np.asarray(q, dtype=complex).reshape(-1)

    written = []
    channels = [("radar", scene.radar.triples), ("comms", scene.comms.triples)]
    for which, triples in channels:
        if triples.shape[0] == 0:
            continue
        tau0, nu0, beta0 = (float(x) for x in triples[0])
        planes = [
            (("nu", "tau"), {"beta": beta0}, "tau_nu"),
            (("nu", "beta"), {"tau": tau0}, "nu_beta"),
        ]
        for vary, fixed, tag in planes:
            sizes = [max(plane_grid, 2 * bandwidth[axis]) for axis in vary]
            grid = _partial_field(q, subspaces, dims, which, vary, fixed, sizes)
            path = out_dir / f"slice_{which}_{tag}.csv"
            body = "\n".join(",".join(repr(float(v)) for v in row) for row in grid)
            path.write_text(_slice_header(which, vary, fixed, sizes) + "\n" + body + "\n")
            written.append(path)
        cuts = [
            ("tau", {"nu": nu0, "beta": beta0}),
            ("nu", {"tau": tau0, "beta": beta0}),
            ("beta", {"tau": tau0, "nu": nu0}),
        ]
        for axis, fixed in cuts:
            size = max(cut_grid, 2 * bandwidth[axis])
            grid = _partial_field(q, subspaces, dims, which, (axis,), fixed, (size,))
            path = out_dir / f"slice_{which}_cut_{axis}.csv"
            rows = "\n".join(f"{repr(i / size)},{repr(float(v))}"
                             for i, v in enumerate(grid))
            header = _slice_header(which, (axis,), fixed, (size,))
            path.write_text(header + f"\n{axis},norm\n" + rows + "\n")
            written.append(path)
    return written


# -----------------------------------------------------------------
# Artifact loading for the staged commands
# -----------------------------------------------------------------

def _load_scene(out: Path) -> Scene:
    path = out / "scene.json"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run the synth command first")
    return Scene.loads(path.read_text())


def _load_solution_q(out: Path) -> np.ndarray:
    path = out / "solution.json"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run the solve command first")
    obj = json.loads(path.read_text())
    return complex_array_from_json(obj["q"])


def _scene_subspaces(scene: Scene) -> Subspaces:
    if scene.seed is None:
        raise ValueError("scene file has no seed; cannot rebuild the subspaces")
    return make_subspaces(scene.dims, seed=subspace_seed(scene.seed))


# -----------------------------------------------------------------
# Command line
# -----------------------------------------------------------------

def _cmd_synth(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    scene = sample_scene(cfg.scene_config(cfg.dims(), cfg.seed))
    _write_json(out / "scene.json", scene.to_json())
    print(f"wrote {out / 'scene.json'}")
    return 0


def _cmd_solve(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    scene = _load_scene(out)
    sub = _scene_subspaces(scene)
    meas = synthesize_measurements(scene, sub)
    problem = build_dual_sdp(meas, sub, gram_mode=cfg.gram_mode)
    sol = extract_dual_solution(problem, solve(problem, cfg.solver_options()))
    _write_json(out / "solution.json", sol.summary_json())
    print(f"wrote {out / 'solution.json'} "
          f"(status {sol.status}, objective {sol.objective:.6f}, "
          f"{sol.iterations} iterations)")
    return 0


def _cmd_recover(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    scene = _load_scene(out)
    sub = _scene_subspaces(scene)
    q = _load_solution_q(out)
    meas = synthesize_measurements(scene, sub)
    result = recover_channels(q, meas, sub)
    result.metrics = error_metrics(scene, result)
    cert = verify_certificate(q, scene, sub)
    obj = result.to_json()
    obj["certificate"] = cert.to_json()
    _write_json(out / "recovery.json", obj)
    print(f"wrote {out / 'recovery.json'} "
          f"(frob rel radar {result.metrics.frob_radar_rel:.3e}, "
          f"comms {result.metrics.frob_comms_rel:.3e}, "
          f"certificate {'ok' if cert.ok else 'FAILED'})")
    return 0


def _cmd_run(cfg: ExperimentConfig) -> int:
    record = run_single(cfg)
    print(dumps_canonical(record.to_json()))
    return 0


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    records = run_sweep(cfg)
    failed = sum(1 for r in records if not r.ok)
    out = Path(cfg.out)
    print(f"wrote {out / 'sweep_trials.csv'} and {out / 'sweep_summary.csv'} "
          f"({len(records)} trials, {failed} failed)")
    return 0


def _cmd_slices(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    scene = _load_scene(out)
    sub = _scene_subspaces(scene)
    q = _load_solution_q(out)
    written = emit_slices(scene, sub, q, out)
    print(f"wrote {len(written)} slice files to {out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "solve": _cmd_solve,
    "recover": _cmd_recover,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "slices": _cmd_slices,
}


def _parse_values(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"values must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualblind",
        description="Dual-blind deconvolution experiments: synthesize, "
                    "solve, recover, sweep, and export plot data.")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("synth", "sample a scene and write scene.json"),
        ("solve", "solve the dual program for an existing scene.json"),
        ("recover", "localize atoms and recover coefficients from solution.json"),
        ("run", "synth + solve + recover + slices in one go"),
        ("sweep", "Monte Carlo sweep over one problem dimension"),
        ("slices", "export dual polynomial slice CSVs from run artifacts"),
    ]:
        p = commands.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON experiment config; flags override its fields")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--axis", choices=SWEEP_AXES, default=None)
        p.add_argument("--values", type=_parse_values, default=None,
                       help="comma-separated sweep values, e.g. 3,5,7,9")
        p.add_argument("--gram", choices=("shared", "split"), default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iters", type=int, default=None)
    return parser


_FLAG_FIELDS = {"seed": "seed", "trials": "trials", "axis": "axis",
                "values": "values", "gram": "gram_mode", "out": "out",
                "tol": "tol", "max_iters": "max_iters"}


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for flag, field_name in _FLAG_FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides[field_name] = val
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
