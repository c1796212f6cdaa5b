"""Edge-list files, scenario execution and report serialization.

Edge-list text holds one ``u v w`` triple per line (0-indexed, whitespace
separated). ``#`` starts a comment. An optional first data line
``n <int> directed <0|1>`` fixes the vertex count and orientation; without it
``n = 1 + max index`` and the graph is undirected unless the caller says
otherwise.

A scenario is a JSON object::

    {"graph": "p4.txt", "directed": false, "command": "bottleneck",
     "params": {"method": "brute"}}

with ``graph`` resolved relative to the scenario file. Reports are JSON with
sorted keys and shortest round-trip float text, so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from zlap import bottleneck, dynamics, operators, spectral
from zlap.errors import InputError, ZLapError
from zlap.graph import Graph, new_graph

__all__ = [
    "COMMANDS",
    "Scenario",
    "Report",
    "parse_edge_list",
    "format_edge_list",
    "read_graph",
    "load_scenario",
    "run_scenario",
    "emit_report",
]

COMMANDS = ("transform", "evolve", "spectrum", "filter", "bottleneck", "heal", "epidemic")

# Accepted params per command; anything else is rejected.
PARAMS = {
    "transform": {"bias", "delay", "replicate", "rho"},
    "evolve": {"signal", "mode", "t", "steps", "delta", "delay", "replicate"},
    "spectrum": {"laplacian", "replicate"},
    "filter": {"laplacian", "replicate", "band", "k", "percent"},
    "bottleneck": {"method", "protocol"},
    "heal": {"protocol", "candidates", "bandwidth", "delay_update", "method"},
    "epidemic": {"mu", "beta", "z", "signal", "steps"},
}
SCENARIO_KEYS = {"graph", "directed", "command", "params"}


def _version() -> str:
    from zlap import __version__

    return __version__


def parse_edge_list(text: str, directed: Optional[bool] = None) -> Graph:
    """Parse edge-list text into a Graph.

    Args:
        text: file contents.
        directed: orientation when the text has no header. If the header is
            present and disagrees, an error is raised.

    Raises:
        InputError: on malformed lines (with the 1-based line number), bad
            indices or weights, or an empty edge list without a header.
    """
    n = None
    header_directed = None
    edges = []
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            if seen_data:
                raise InputError(f"line {lineno}: header must precede edges")
            if len(parts) != 4 or parts[2] != "directed" or parts[3] not in ("0", "1"):
                raise InputError(f"line {lineno}: expected 'n <int> directed <0|1>', got {raw.strip()!r}")
            try:
                n = int(parts[1])
            except ValueError:
                raise InputError(f"line {lineno}: bad vertex count {parts[1]!r}") from None
            if n < 1:
                raise InputError(f"line {lineno}: vertex count must be positive")
            header_directed = parts[3] == "1"
            seen_data = True
            continue
        seen_data = True
        if len(parts) != 3:
            raise InputError(f"line {lineno}: expected 'u v w', got {raw.strip()!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise InputError(f"line {lineno}: malformed edge {raw.strip()!r}") from None
        if u < 0 or v < 0:
            raise InputError(f"line {lineno}: negative vertex index")
        if n is not None and max(u, v) >= n:
            raise InputError(f"line {lineno}: vertex index {max(u, v)} out of range for n={n}")
        if not np.isfinite(w) or w < 0:
            raise InputError(f"line {lineno}: weight must be finite and >= 0, got {parts[2]}")
        edges.append((u, v, w))
    if header_directed is not None:
        if directed is not None and directed != header_directed:
            raise InputError("directed flag conflicts with the file header")
        directed = header_directed
    if n is None:
        if not edges:
            raise InputError("edge list is empty")
        n = 1 + max(max(u, v) for u, v, _ in edges)
    return new_graph(n, edges, directed=bool(directed))


def format_edge_list(g: Graph) -> str:
    """Serialize with a header; ``parse_edge_list`` restores the weights bit for bit."""
    lines = [f"n {g.n} directed {int(g.directed)}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in g.edges()]
    return "\n".join(lines) + "\n"


def read_graph(path, directed: Optional[bool] = None) -> Graph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read graph file {path}: {exc.strerror}") from None
    return parse_edge_list(text, directed)


@dataclass
class Scenario:
    """One command applied to one graph file."""

    graph: str
    command: str
    directed: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if not isinstance(self.params, dict):
            raise InputError("params must be a JSON object")
        unknown = sorted(set(self.params) - PARAMS[self.command])
        if unknown:
            raise InputError(f"unknown params for {self.command}: {unknown}")

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "Scenario":
        if not isinstance(data, dict):
            raise InputError("scenario must be a JSON object")
        unknown = sorted(set(data) - SCENARIO_KEYS)
        if unknown:
            raise InputError(f"unknown scenario keys: {unknown}")
        for key in ("graph", "command"):
            if key not in data:
                raise InputError(f"scenario is missing {key!r}")
        graph = str(data["graph"])
        if base_dir is not None and not Path(graph).is_absolute():
            graph = str(Path(base_dir) / graph)
        return cls(graph, data["command"], bool(data.get("directed", False)), dict(data.get("params", {})))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"scenario {path} is not valid JSON: {exc}") from None
    return Scenario.from_dict(data, base_dir=path.parent)


@dataclass
class Report:
    """Result of one scenario run.

    ``primary`` names the output used for CSV export and ``primary_kind`` is
    ``edges``, ``vector`` or ``matrix``.
    """

    command: str
    digest: str
    outputs: dict
    version: str
    primary: Optional[str] = None
    primary_kind: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs_sha256": self.digest,
            "outputs": self.outputs,
            "version": self.version,
        }


def _plain(x: Any) -> Any:
    """Convert numpy containers and scalars into JSON-native values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _canonical(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def _digest(s: Scenario, g: Graph) -> str:
    h = hashlib.sha256()
    h.update(format_edge_list(g).encode())
    h.update(_canonical({"command": s.command, "params": s.params}).encode())
    return h.hexdigest()


def _edges_out(g: Graph) -> list:
    return [[u, v, w] for u, v, w in g.edges()]


def _vec(params: dict, key: str, n: int, default=1.0):
    value = params.get(key, default)
    if isinstance(value, list) and len(value) != n:
        raise InputError(f"{key} has length {len(value)}, expected {n}")
    return value


def _signal(params: dict, n: int) -> np.ndarray:
    sig = params.get("signal")
    if sig is None:
        return np.full(n, 1.0 / n)
    if not isinstance(sig, list) or len(sig) != n:
        raise InputError(f"signal must be a list of length {n}")
    return np.asarray(sig, dtype=float)


def _run_transform(g: Graph, p: dict):
    bias = _vec(p, "bias", g.n)
    delay = _vec(p, "delay", g.n)
    replicate = _vec(p, "replicate", g.n)
    biased = operators.bias_transform(g, bias)
    w = operators.delay_transform(biased, delay)
    out = {
        "edges": _edges_out(w),
        "traffic": float(w.out_degrees.sum()),
        "laplacian": operators.z_laplacian(biased, replicate, delay).matrix,
    }
    if "rho" in p:
        if not np.all(np.asarray(replicate, dtype=float) == 1.0):
            raise InputError("rho requires replicate = 1")
        out["similarity"] = operators.similarity_transform(biased, delay, float(p["rho"])).matrix
    return out, "edges", "edges"


def _run_evolve(g: Graph, p: dict):
    lap = operators.z_laplacian(g, _vec(p, "replicate", g.n), _vec(p, "delay", g.n))
    theta = _signal(p, g.n)
    mode = p.get("mode", "continuous")
    if mode == "continuous":
        t = float(p.get("t", 1.0))
        final = dynamics.evolve_continuous(theta, lap, t)
        return {"mode": mode, "t": t, "signal": final}, "signal", "vector"
    if mode == "discrete":
        steps = int(p.get("steps", 1))
        delta = p.get("delta")
        if delta is None:
            delta = 1.0 / float(np.max(np.abs(np.diag(lap.matrix))))
        rep = dynamics.evolve_discrete(theta, dynamics.discrete_approximation(lap, float(delta)), steps)
        out = {
            "mode": mode,
            "delta": float(delta),
            "signal": rep.final,
            "sums": rep.sums(),
            "classification": rep.classification,
            "growth": rep.growth,
        }
        return out, "signal", "vector"
    raise InputError(f"mode must be 'continuous' or 'discrete', got {mode!r}")


def _run_spectrum(g: Graph, p: dict):
    lap = spectral.candidate_laplacian(g, p.get("laplacian", "L0"), _vec(p, "replicate", g.n))
    dec = spectral.sym_eig(lap)
    return {"eigenvalues": dec.eigenvalues, "eigenvectors": dec.eigenvectors}, "eigenvalues", "vector"


def _run_filter(g: Graph, p: dict):
    which = p.get("laplacian", "L2")
    replicate = _vec(p, "replicate", g.n)
    dec = spectral.sym_eig(spectral.candidate_laplacian(g, which, replicate))
    k = int(p.get("k", g.n))
    mask = spectral.band_mask(dec, p.get("band", "low"), k)
    a = spectral.band_reconstruct(g, dec, mask, replicate, which)
    out = {"weights": a, "kept": sorted(mask.keep)}
    if "percent" in p:
        out["top_edges"] = [list(e) for e in spectral.top_percent_edges(a, float(p["percent"]))]
        return out, "top_edges", "edges"
    return out, "weights", "matrix"


def _cut_out(cut: bottleneck.CutResult, n: int) -> dict:
    member = np.zeros(n)
    member[list(cut.subset)] = 1.0
    return {
        "phi": cut.phi,
        "subset": list(cut.subset),
        "cut": cut.cut,
        "vol_s": cut.vol_s,
        "vol_complement": cut.vol_complement,
        "membership": member,
    }


def _run_bottleneck(g: Graph, p: dict):
    method = p.get("method", "brute")
    out = {"method": method}
    w = g
    if "protocol" in p:
        model = bottleneck.protocol_model(g, p["protocol"])
        w = model.graph
        out.update(protocol=model.name, delay=model.delay, traffic=model.traffic, edges=_edges_out(w))
    out.update(_cut_out(bottleneck.min_conductance(w, method), g.n))
    return out, "membership", "vector"


def _run_heal(g: Graph, p: dict):
    protocol = p.get("protocol", "base")
    method = p.get("method", "brute")
    if "candidates" not in p or "bandwidth" not in p:
        raise InputError("heal needs 'candidates' and 'bandwidth'")
    cands = p["candidates"]
    if not isinstance(cands, list) or any(not isinstance(c, list) or len(c) != 2 for c in cands):
        raise InputError("candidates must be a list of [u, v] pairs")
    before = bottleneck.min_conductance(bottleneck.protocol_model(g, protocol).graph, method)
    ranked = bottleneck.heal_rank(
        g, protocol, cands, float(p["bandwidth"]), bool(p.get("delay_update", False)), method
    )
    out = {
        "protocol": protocol,
        "baseline_phi": before.phi,
        "baseline_subset": list(before.subset),
        "ranking": [{"edge": list(r.edge), "phi": r.phi, "subset": list(r.cut.subset)} for r in ranked],
        "ranked_edges": [[r.edge[0], r.edge[1], r.phi] for r in ranked],
    }
    return out, "ranked_edges", "edges"


def _run_epidemic(g: Graph, p: dict):
    for key in ("mu", "beta"):
        if key not in p:
            raise InputError(f"epidemic needs {key!r}")
    mu, beta = float(p["mu"]), float(p["beta"])
    z = p.get("z")
    cls = dynamics.classify_epidemic(g, mu, beta, None if z is None else float(z))
    out = {
        "regime": cls.regime,
        "ratio": cls.ratio,
        "threshold": cls.threshold,
        "lambda_max": cls.lambda_max,
        "spectral_radius": cls.spectral_radius,
    }
    if z is not None:
        out.update(z=cls.z, transmissibility=cls.transmissibility, generalized_threshold=cls.generalized_threshold)
    if "steps" in p:
        rep = dynamics.evolve_discrete(_signal(p, g.n), operators.sis_filter(g, mu, beta), int(p["steps"]))
        out["sums"] = rep.sums()
        out["signal"] = rep.final
        return out, "sums", "vector"
    return out, None, None


_RUNNERS = {
    "transform": _run_transform,
    "evolve": _run_evolve,
    "spectrum": _run_spectrum,
    "filter": _run_filter,
    "bottleneck": _run_bottleneck,
    "heal": _run_heal,
    "epidemic": _run_epidemic,
}


def run_scenario(s: Scenario, graph: Optional[Graph] = None) -> Report:
    """Execute a scenario.

    Args:
        s: the scenario.
        graph: pre-loaded graph; read from ``s.graph`` when omitted.

    Raises:
        ZLapError: with the command name prefixed to the message.
    """
    g = graph if graph is not None else read_graph(s.graph, s.directed)
    try:
        outputs, primary, kind = _RUNNERS[s.command](g, s.params)
    except ZLapError as exc:
        raise type(exc)(f"{s.command}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{s.command}: {exc}") from exc
    return Report(s.command, _digest(s, g), _plain(outputs), _version(), primary, kind)


def emit_report(r: Report, fmt: str = "json") -> str:
    """Serialize a report.

    JSON is canonical: sorted keys, two-space indent, ``repr`` floats. CSV
    writes the primary output as ``u,v,w`` rows (edge lists) or
    ``index,value`` rows (vectors).
    """
    if fmt == "json":
        return json.dumps(r.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt != "csv":
        raise InputError(f"format must be 'json' or 'csv', got {fmt!r}")
    if r.primary is None:
        raise InputError(f"{r.command} report has no vector or edge-list output for CSV")
    if r.primary_kind == "matrix":
        raise InputError(f"{r.command} output {r.primary!r} is a matrix; CSV supports vectors and edge lists only")
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    data = r.outputs[r.primary]
    if r.primary_kind == "edges":
        writer.writerow(["u", "v", "w"])
        for u, v, w in data:
            writer.writerow([u, v, repr(float(w))])
    else:
        writer.writerow(["index", "value"])
        for i, x in enumerate(data):
            writer.writerow([i, repr(float(x))])
    return buf.getvalue()
