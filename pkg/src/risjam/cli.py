"""Command-line front end: scenario parsing, runs, deterministic artifacts.

Exit codes are a stable contract: 0 success, 2 validation error, 3 runtime
error.  Failures emit a single machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .channel import save_environment, synthesize_environment
from .scenarios import (
    RunResult,
    ScenarioError,
    ScenarioSpec,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    _environment_spec_from_dict,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def parse_scenario(path) -> ScenarioSpec:
    """Load, validate, and default-fill a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc

    def reject_duplicates(pairs):
        seen = set()
        out = {}
        for key, value in pairs:
            if key in seen:
                raise ScenarioError(f"duplicate key {key!r} in scenario "
                                    f"document")
            seen.add(key)
            out[key] = value
        return out

    try:
        doc = json.loads(text, object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    spec = scenario_from_dict(doc, base_dir=path.parent)
    if spec.name == "scenario" and "name" not in doc:
        spec = _rename(spec, path.stem)
    return spec


def _rename(spec: ScenarioSpec, name: str) -> ScenarioSpec:
    from dataclasses import replace
    return replace(spec, name=name)


def scenario_hash(spec: ScenarioSpec) -> str:
    doc = scenario_to_dict(spec)
    doc.pop("name", None)   # the label is not part of the content identity
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunManifest:
    version: str
    scenario_hash: str
    master_seed: int
    created_utc: str
    outputs: list[dict]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "scenario_hash": self.scenario_hash,
            "master_seed": self.master_seed,
            "created_utc": self.created_utc,
            "outputs": self.outputs,
        }


def _file_entry(path: Path, root: Path) -> dict:
    data = path.read_bytes()
    return {
        "path": str(path.relative_to(root)),
        "bytes": len(data),
        "sha256": hashlib.sha256(data).hexdigest(),
    }


def execute(spec: ScenarioSpec, out_dir, threads: int = 1,
            fmt: str = "csv") -> RunManifest:
    """Run a scenario and write its artifact set plus a manifest."""
    if fmt not in ("csv", "json"):
        raise ScenarioError(f"unknown format {fmt!r}; valid: csv, json")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(spec, threads=threads)

    written: list[Path] = []

    echo = out / "scenario.normalized.json"
    echo.write_text(json.dumps(scenario_to_dict(spec), sort_keys=True,
                               indent=1) + "\n")
    written.append(echo)

    result_json = out / "result.json"
    result_json.write_text(json.dumps(result.to_json_dict(), sort_keys=True,
                                      indent=1) + "\n")
    written.append(result_json)

    if fmt == "csv" and result.rows:
        results_csv = out / "results.csv"
        result.write_csv(results_csv)
        written.append(results_csv)

    written.extend(_write_mode_extras(result, out))

    for i, trace in enumerate(result.traces()):
        if trace is None:
            continue
        trace_path = out / f"trace_{i:02d}.csv"
        trace.write_csv(trace_path)
        written.append(trace_path)

    manifest = RunManifest(
        version=__version__,
        scenario_hash=scenario_hash(spec),
        master_seed=spec.seed,
        created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        outputs=[_file_entry(p, out) for p in written],
    )
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_dict(), sort_keys=True,
                                        indent=1) + "\n")
    return manifest


def _write_mode_extras(result: RunResult, out: Path) -> list[Path]:
    import csv as _csv
    written = []
    extras = result.extras

    if "sweep" in extras:
        path = out / "sweep.csv"
        sweep = extras["sweep"]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["power_dbm", "device", "packet_rate"])
            for i, power in enumerate(sweep["powers_dbm"]):
                for device in result.devices:
                    writer.writerow([format(power, ".10g"), device,
                                     format(sweep["rates"][device][i], ".10g")])
        written.append(path)

    if "heatmap" in extras:
        path = out / "grid.csv"
        grid = extras["heatmap"]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["y_m\\x_m"] + [format(x, ".10g")
                                            for x in grid["x_m"]])
            for y, row in zip(grid["y_m"], grid["normalized_db"]):
                writer.writerow([format(y, ".10g")]
                                + [format(v, ".10g") for v in row])
        written.append(path)

    if "displacement" in extras:
        path = out / "curves.csv"
        disp = extras["displacement"]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["displacement_mm", "maximized_db",
                             "minimized_db"])
            for i, d in enumerate(disp["displacements_mm"]):
                writer.writerow([format(d, ".10g"),
                                 format(disp["maximized_db"][i], ".10g"),
                                 format(disp["minimized_db"][i], ".10g")])
        written.append(path)

    if "element_sweep" in extras:
        path = out / "separation.csv"
        sweep = extras["element_sweep"]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["active_elements", "repeat", "separation_db"])
            for count in sweep["counts"]:
                for rep, sep in enumerate(sweep["separation_db"][str(count)]):
                    writer.writerow([count, rep, format(sep, ".10g")])
        written.append(path)

    if "timeseries" in extras:
        path = out / "timeseries.csv"
        series = extras["timeseries"]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["time", "device", "packet_rate"])
            for t in series["times"]:
                for device in result.devices:
                    writer.writerow([t, device,
                                     format(series["rates"][device][t],
                                            ".10g")])
        written.append(path)

    return written


def compare_runs(manifest_a, manifest_b) -> dict:
    """Per-metric deltas between two runs of compatible shape."""
    a = _load_run(manifest_a)
    b = _load_run(manifest_b)
    if a["mode"] != b["mode"]:
        raise ScenarioError(f"mode mismatch: {a['mode']} vs {b['mode']}")
    if a["devices"] != b["devices"]:
        raise ScenarioError("device rosters differ; runs are not comparable")
    targets_a = [tuple(r["targets"]) for r in a["rows"]]
    targets_b = [tuple(r["targets"]) for r in b["rows"]]
    if targets_a != targets_b:
        raise ScenarioError("target sets differ; runs are not comparable")

    deltas = []
    separations_a, separations_b = [], []
    for row_a, row_b in zip(a["rows"], b["rows"]):
        label = "+".join(row_a["targets"])
        for metric in ("attacker_rssi_dbm", "ap_rssi_dbm", "jsr_db",
                       "norm_jsr_db", "packet_rate", "throughput_mbps"):
            if metric not in row_a or metric not in row_b:
                continue
            for device in a["devices"]:
                va = row_a[metric][device]
                vb = row_b[metric][device]
                if va != vb:
                    deltas.append({
                        "target_set": label, "device": device,
                        "metric": metric, "a": va, "b": vb,
                        "delta": vb - va,
                    })
        separations_a.append(_row_separation(row_a))
        separations_b.append(_row_separation(row_b))

    regression = any(
        sb < 0.8 * sa for sa, sb in zip(separations_a, separations_b)
        if sa is not None and sb is not None
    )
    return {
        "identical": not deltas,
        "deltas": deltas,
        "separation_db_a": separations_a,
        "separation_db_b": separations_b,
        "separation_regression": regression,
    }


def _row_separation(row: dict) -> float | None:
    norm = row.get("norm_jsr_db")
    if norm is None:
        return None
    others = [v for d, v in norm.items() if d not in row["targets"]]
    return -max(others) if others else None


def _load_run(manifest_path) -> dict:
    path = Path(manifest_path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot load manifest {path}: {exc}") from exc
    run_dir = path.parent
    listed = {entry["path"] for entry in manifest.get("outputs", [])}
    if "result.json" not in listed:
        raise ScenarioError(f"manifest {path} lists no result.json")
    return json.loads((run_dir / "result.json").read_text())


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risjam",
        description="Selective-jamming simulator for binary reconfigurable "
                    "surfaces",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario master seed")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    validate = sub.add_parser("validate",
                              help="parse a scenario and echo its normalized "
                                   "form")
    validate.add_argument("scenario")

    compare = sub.add_parser("compare", help="diff two run manifests")
    compare.add_argument("manifest_a")
    compare.add_argument("manifest_b")

    env = sub.add_parser("env", help="environment utilities")
    env_sub = env.add_subparsers(dest="env_command", required=True)
    synth = env_sub.add_parser("synth", help="synthesize and save an "
                                             "environment")
    synth.add_argument("--spec", default=None,
                       help="environment spec JSON (defaults to the desk "
                            "roster)")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True)
    return parser


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ScenarioError) and exc.fieldpath:
        payload["field"] = exc.fieldpath
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            spec = parse_scenario(args.scenario)
            if args.seed is not None:
                from dataclasses import replace
                spec = replace(spec, seed=args.seed)
            manifest = execute(spec, args.out, threads=args.threads,
                               fmt=args.format)
            print(json.dumps(manifest.to_dict(), sort_keys=True, indent=1))
            return EXIT_OK
        if args.command == "validate":
            spec = parse_scenario(args.scenario)
            print(json.dumps(scenario_to_dict(spec), sort_keys=True,
                             indent=1))
            return EXIT_OK
        if args.command == "compare":
            report = compare_runs(args.manifest_a, args.manifest_b)
            print(json.dumps(report, sort_keys=True, indent=1))
            return EXIT_OK
        if args.command == "env" and args.env_command == "synth":
            if args.spec is not None:
                doc = json.loads(Path(args.spec).read_text())
                env_spec = _environment_spec_from_dict(doc)
            else:
                env_spec = _environment_spec_from_dict({})
            env = synthesize_environment(env_spec, args.seed)
            save_environment(env, args.out)
            print(json.dumps({"written": args.out,
                              "devices": len(env.devices),
                              "elements": env.n_elements}, sort_keys=True))
            return EXIT_OK
        parser.error(f"unknown command {args.command!r}")
    except ScenarioError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        return _fail(exc, EXIT_RUNTIME)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
