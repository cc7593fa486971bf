"""Scenario files.

A scenario is a TOML document::

    graphs = ["g1.txt", "g2.txt"]          # paths relative to this file,
                                           # or inline {n = 4, edges = [[1, 2, 1.0], ...]}
    model = "si"                           # or "di"
    gains = [1.0, -4.0, -3.0, 6.0]

    [schedule]
    segments = [[0.5, 1], [1.5, 2]]        # (duration, 1-based graph index)
    periodic = true

    [params]
    lambda1 = 0.4
    lambda2 = 0.2
    rho = 0.55                             # double integrator only

    [initial]
    x0 = [-1.0, 1.2, -3.0, 1.5]
    v0 = [-0.2, -1.0, 0.2, 1.0]            # double integrator only

    [sim]
    horizon = 40.0
    step = 0.001
    record_every = 10

    [output]
    directory = "runs/example"

``schedule`` may be omitted when there is a single graph.  Unknown keys are
errors.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import tomli
import tomli_w

from .digraph import DiGraph, GraphError, load_graph
from .dynamics import ControllerParams
from .schedule import ScheduleError, SwitchSchedule
from .simulate import DEFAULT_HORIZON, DEFAULT_STEP, Scenario

SECTIONS = {
    "graphs": None,
    "model": None,
    "gains": None,
    "schedule": {"segments", "periodic"},
    "params": {"lambda1", "lambda2", "rho"},
    "initial": {"x0", "v0"},
    "sim": {"horizon", "step", "record_every"},
    "output": {"directory"},
}
REQUIRED = ("graphs", "model", "gains", "params", "initial")


class ConfigError(ValueError):
    pass


@dataclass
class LoadedConfig:
    scenario: Scenario
    output_dir: Path | None
    source: Path | None = None


def _check_keys(doc: dict, where: str, allowed) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _graph(entry, base: Path, k: int) -> DiGraph:
    if isinstance(entry, str):
        path = Path(entry)
        path = path if path.is_absolute() else base / path
        try:
            return load_graph(path)
        except OSError as exc:
            raise ConfigError(f"graphs[{k}]: {path}: {exc.strerror}") from None
    if isinstance(entry, dict):
        _check_keys(entry, f"graphs[{k}]", {"n", "edges", "name"})
        try:
            n = int(entry["n"])
            edges = [(int(s) - 1, int(d) - 1, float(w)) for s, d, w in entry.get("edges", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"graphs[{k}]: malformed inline graph ({exc})") from None
        return DiGraph.from_edges(n, edges, name=str(entry.get("name", f"G{k + 1}")))
    raise ConfigError(f"graphs[{k}]: expected a file path or an inline table")


def parse_scenario(doc: dict, base: Path = Path("."), source: Path | None = None) -> LoadedConfig:
    _check_keys(doc, "scenario", SECTIONS)
    for key in REQUIRED:
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}")
    for key, allowed in SECTIONS.items():
        if allowed is not None and key in doc:
            if not isinstance(doc[key], dict):
                raise ConfigError(f"[{key}] must be a table")
            _check_keys(doc[key], f"[{key}]", allowed)

    try:
        graphs = [_graph(g, base, k) for k, g in enumerate(doc["graphs"])]
        if not graphs:
            raise ConfigError("graphs: at least one graph is required")
        sched = doc.get("schedule")
        if sched is None:
            if len(graphs) != 1:
                raise ConfigError("[schedule] is required when more than one graph is given")
            schedule = SwitchSchedule.fixed(graphs[0])
        else:
            segments = [(float(d), int(i) - 1) for d, i in sched.get("segments", [])]
            schedule = SwitchSchedule.from_segments(graphs, segments, periodic=bool(sched.get("periodic", False)))

        p = doc["params"]
        params = ControllerParams(float(p["lambda1"]), float(p["lambda2"]), float(p["rho"]) if "rho" in p else None)
        init = doc["initial"]
        sim = doc.get("sim", {})
        scenario = Scenario(
            schedule=schedule,
            gains=doc["gains"],
            params=params,
            model=str(doc["model"]),
            x0=init["x0"],
            v0=init.get("v0"),
            horizon=float(sim.get("horizon", DEFAULT_HORIZON)),
            step=float(sim.get("step", DEFAULT_STEP)),
            record_every=sim.get("record_every", 1),
        )
    except ConfigError:
        raise
    except (GraphError, ScheduleError) as exc:
        raise ConfigError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None

    out = doc.get("output", {}).get("directory")
    output_dir = None
    if out is not None:
        output_dir = Path(out)
        if not output_dir.is_absolute():
            output_dir = base / output_dir
    return LoadedConfig(scenario, output_dir, source)


def load_scenario(path) -> LoadedConfig:
    path = Path(path)
    try:
        doc = tomli.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return parse_scenario(doc, base=path.parent, source=path)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def scenario_to_dict(sc: Scenario, output_dir=None) -> dict:
    """Self-contained document (graphs inlined) that parses back to ``sc``."""
    s = sc.schedule
    doc = {
        "graphs": [
            {"n": g.n, "name": g.name or f"G{k + 1}", "edges": [[a + 1, b + 1, w] for a, b, w in g.edges()]}
            for k, g in enumerate(s.topologies)
        ],
        "model": sc.model,
        "gains": list(sc.gains),
        "schedule": {
            "segments": [[d, i + 1] for d, i in s.segments()],
            "periodic": s.periodic,
        },
        "params": {"lambda1": sc.params.lambda1, "lambda2": sc.params.lambda2},
        "initial": {"x0": list(sc.x0)},
        "sim": {"horizon": sc.horizon, "step": sc.step, "record_every": int(sc.record_every)},
    }
    if sc.params.rho is not None:
        doc["params"]["rho"] = sc.params.rho
    if sc.v0 is not None:
        doc["initial"]["v0"] = list(sc.v0)
    if output_dir is not None:
        doc["output"] = {"directory": str(Path(output_dir).resolve())}
    return doc


def dump_scenario(sc: Scenario, output_dir=None) -> str:
    return tomli_w.dumps(scenario_to_dict(sc, output_dir))
