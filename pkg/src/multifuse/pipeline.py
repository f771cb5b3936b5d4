"""End-to-end pipeline: abundance tables in, fused networks and reports out.

Input contract (one CSV per layer): the header row holds the site ids (first
cell is an arbitrary entity-column title), each following row holds an entity
id and its nonnegative measurements.  The layer name is the file stem.

Every artifact is plain CSV or JSON with floats rendered at 17 significant
digits, so outputs are diffable and runs with identical inputs and
configuration are byte-identical.
"""

from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyAfterFilter,
    EmptyTable,
    InvalidInput,
    InvalidParameter,
    ParseError,
)
from .netanalysis import CorrelationTable, Partition, correlation_table, distance_correlation, louvain_communities
from .simbuild import FeatureTable, Multiplex, SimilarityLayer, auto_sigma, rbf_similarity
from .sma import (
    BarycenterConfig,
    rv_matrix,
    solve_barycenter,
    uniform_weights,
    weights_frobenius,
    weights_rowsum,
)
from .snf import FusionResult, SnfConfig, snf_fuse

__all__ = [
    "AbundanceTable",
    "FilterLog",
    "PipelineConfig",
    "RunReport",
    "load_abundance_tables",
    "filter_entities",
    "run_pipeline",
    "export_graph",
    "load_similarity_csv",
    "write_similarity_csv",
    "fmt17",
    "dumps_json17",
    "ALL_METHODS",
    "WEIGHT_MODES",
]

ALL_METHODS = ("snf", "sma-frobenius", "sma-riemannian", "sma-wasserstein")
WEIGHT_MODES = ("paired", "uniform", "rv-leading-eigenvector", "rv-rowsum")
EXPORT_FORMATS = ("edge-list", "graphml", "csv-matrix")


def fmt17(x: float) -> str:
    """Render a float with 17 significant digits (round-trip exact)."""
    x = float(x)
    if x == 0.0:
        x = 0.0  # fold -0.0
    return format(x, ".17g")


def _json_fragment(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt17(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise InvalidInput(f"cannot serialize {type(obj).__name__} to JSON")


def dumps_json17(obj, indent: int = 0) -> str:
    """JSON text with every float at 17 significant digits."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {dumps_json17(v, indent + 2)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{dumps_json17(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _json_fragment(obj)


@dataclass
class AbundanceTable:
    """Entities-by-sites nonnegative measurement matrix for one layer."""

    layer_name: str
    entity_ids: tuple[str, ...]
    site_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        self.entity_ids = tuple(str(x) for x in self.entity_ids)
        self.site_ids = tuple(str(x) for x in self.site_ids)
        if v.shape != (len(self.entity_ids), len(self.site_ids)):
            raise InvalidInput(
                f"value shape {v.shape} does not match "
                f"{len(self.entity_ids)} entities x {len(self.site_ids)} sites"
            )
        if not np.isfinite(v).all():
            raise InvalidInput(f"layer {self.layer_name}: non-finite values")
        if v.min() < 0:
            raise InvalidInput(f"layer {self.layer_name}: negative values")
        if len(set(self.entity_ids)) != len(self.entity_ids):
            raise InvalidInput(f"layer {self.layer_name}: duplicate entity ids")
        self.values = v


def _parse_abundance_csv(path: Path) -> AbundanceTable:
    try:
        with open(path, newline="") as fh:
            numbered = [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if row]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not numbered:
        raise ParseError(f"{path}: file is empty")
    header = numbered[0][1]
    if len(header) < 2:
        raise ParseError(f"{path}:1: header needs an entity column and at least one site")
    site_ids = tuple(h.strip() for h in header[1:])
    if len(numbered) == 1:
        raise EmptyTable(f"{path}: header only, no entities")
    ids: list[str] = []
    seen: set[str] = set()
    values = []
    for lineno, row in numbered[1:]:
        if len(row) != len(header):
            raise ParseError(
                f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
            )
        entity = row[0].strip()
        if not entity:
            raise ParseError(f"{path}:{lineno}: missing entity id")
        if entity in seen:
            raise ParseError(f"{path}:{lineno}: duplicate entity id {entity!r}")
        seen.add(entity)
        parsed = []
        for cell in row[1:]:
            try:
                val = float(cell)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: not a number: {cell!r}") from exc
            if not np.isfinite(val):
                raise ParseError(f"{path}:{lineno}: non-finite value {cell!r}")
            if val < 0:
                raise ParseError(f"{path}:{lineno}: negative value {cell!r}")
            parsed.append(val)
        ids.append(entity)
        values.append(parsed)
    return AbundanceTable(path.stem, tuple(ids), site_ids, np.array(values))


def load_abundance_tables(paths) -> list[AbundanceTable]:
    """Load one abundance CSV per layer onto a shared entity universe.

    Entity ids are unioned across files and sorted; an entity missing from a
    file appears there as an all-zero row (to be removed by the filter).
    """
    tables = [_parse_abundance_csv(Path(p)) for p in paths]
    if not tables:
        raise InvalidInput("no input files given")
    universe = sorted(set().union(*(set(t.entity_ids) for t in tables)))
    out = []
    for t in tables:
        index = {e: i for i, e in enumerate(t.entity_ids)}
        vals = np.zeros((len(universe), len(t.site_ids)))
        for row, entity in enumerate(universe):
            if entity in index:
                vals[row] = t.values[index[entity]]
        out.append(AbundanceTable(t.layer_name, tuple(universe), t.site_ids, vals))
    return out


@dataclass
class FilterLog:
    """Record of the two-pass entity filter."""

    total: int
    removed_everywhere: tuple[str, ...]
    removed_partial: tuple[tuple[str, tuple[str, ...]], ...]  # (entity, absent layers)
    retained: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "removed_absent_everywhere": list(self.removed_everywhere),
            "removed_absent_in_some_layer": {
                e: list(layers) for e, layers in self.removed_partial
            },
            "retained": list(self.retained),
            "counts": {
                "pass1": len(self.removed_everywhere),
                "pass2": len(self.removed_partial),
                "retained": len(self.retained),
            },
        }


def filter_entities(tables) -> tuple[list[AbundanceTable], FilterLog]:
    """Drop entities absent everywhere, then entities absent in any layer.

    An entity absent from a layer is an all-zero row there; such rows have
    zero similarity to everything and break the fusion machinery, so they
    are removed with a logged reason.
    """
    tables = list(tables)
    if not tables:
        raise InvalidInput("no tables to filter")
    ids = tables[0].entity_ids
    for t in tables[1:]:
        if t.entity_ids != ids:
            raise InvalidInput("tables must share one entity universe")
    present = np.stack([t.values.sum(axis=1) > 0 for t in tables])  # (m, n)

    everywhere_absent = ~present.any(axis=0)
    pass1 = tuple(e for e, gone in zip(ids, everywhere_absent) if gone)

    partial = []
    keep = []
    for col, entity in enumerate(ids):
        if everywhere_absent[col]:
            continue
        absent_layers = tuple(
            t.layer_name for t, here in zip(tables, present[:, col]) if not here
        )
        if absent_layers:
            partial.append((entity, absent_layers))
        else:
            keep.append(entity)
    if not keep:
        raise EmptyAfterFilter("every entity was removed by the filters")

    keep_idx = [ids.index(e) for e in keep]
    filtered = [
        AbundanceTable(t.layer_name, tuple(keep), t.site_ids, t.values[keep_idx])
        for t in tables
    ]
    log = FilterLog(len(ids), pass1, tuple(partial), tuple(keep))
    return filtered, log


@dataclass
class PipelineConfig:
    """Everything one reproducible run needs.

    ``sigma=None`` means the per-layer scale-adaptive RBF bandwidth.
    ``weights_mode="paired"`` gives each barycenter its natural companion
    weights (leading eigenvector for Frobenius, row sums for the metric
    means); the other modes force one vector for all of them.
    """

    inputs: tuple[str, ...]
    output_dir: str
    sigma: float | None = None
    snf: SnfConfig = field(default_factory=SnfConfig)
    sma_tol: float = 1e-10
    sma_max_iter: int = 1000
    sma_jitter: float | None = None
    weights_mode: str = "paired"
    resolution: float = 1.0
    seed: int = 0
    export_threshold: float = 0.0
    methods: tuple[str, ...] = ALL_METHODS

    def __post_init__(self):
        self.inputs = tuple(str(p) for p in self.inputs)
        if len(self.inputs) < 2:
            raise InvalidParameter("need at least two layers")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidParameter("sigma must be positive")
        if self.weights_mode not in WEIGHT_MODES:
            raise InvalidParameter(f"unknown weights mode {self.weights_mode!r}")
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in ALL_METHODS:
                raise InvalidParameter(f"unknown method {m!r}")
        if len(set(self.methods)) != len(self.methods):
            raise InvalidParameter("each method may be requested once")
        if not self.methods:
            raise InvalidParameter("at least one method required")
        missing = [p for p in self.inputs if not Path(p).is_file()]
        if missing:
            raise InvalidParameter(f"input files not found: {missing}")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ParseError(f"{path}: config must be a JSON object")
        base = path.parent

        def resolve(p) -> str:
            q = Path(p)
            return str(q if q.is_absolute() else base / q)

        try:
            inputs = [resolve(p) for p in raw["inputs"]]
            out_dir = resolve(raw["output_dir"])
        except KeyError as exc:
            raise ParseError(f"{path}: missing config key {exc}") from exc
        snf_raw = raw.get("snf", {})
        sma_raw = raw.get("sma", {})
        sigma = raw.get("sigma")
        if isinstance(sigma, str):
            if sigma != "auto":
                raise ParseError(f"{path}: sigma must be a number or 'auto'")
            sigma = None
        return cls(
            inputs=tuple(inputs),
            output_dir=out_dir,
            sigma=sigma,
            snf=SnfConfig(
                k=snf_raw.get("k"),
                epsilon=snf_raw.get("epsilon", 1e-6),
                max_iter=snf_raw.get("max_iter", 100),
            ),
            sma_tol=sma_raw.get("tol", 1e-10),
            sma_max_iter=sma_raw.get("max_iter", 1000),
            sma_jitter=sma_raw.get("jitter"),
            weights_mode=raw.get("weights_mode", "paired"),
            resolution=raw.get("resolution", 1.0),
            seed=raw.get("seed", 0),
            export_threshold=raw.get("export_threshold", 0.0),
            methods=tuple(raw.get("methods", ALL_METHODS)),
        )


@dataclass
class RunReport:
    """Summary of one pipeline run (matrices live in the artifact CSVs)."""

    layer_names: tuple[str, ...]
    filter_log: FilterLog
    sigmas: dict[str, float]
    weight_tables: dict[str, list[float] | None]
    fusion: dict[str, FusionResult]
    monoplex_dcor: CorrelationTable
    snf_layer_dcor: tuple[tuple[str, float], ...]
    partitions: dict[str, Partition]

    def to_dict(self) -> dict:
        return {
            "layers": list(self.layer_names),
            "entities": {
                "initial": self.filter_log.total,
                "final": len(self.filter_log.retained),
            },
            "filter": self.filter_log.to_dict(),
            "rbf_sigma": dict(self.sigmas),
            "weight_tables": {
                k: (list(v) if v is not None else None)
                for k, v in self.weight_tables.items()
            },
            "fusion": {
                name: {
                    "method": r.method,
                    "converged": r.converged,
                    "iterations": r.iterations,
                    "residual": r.residual,
                    "weights": None if r.weights is None else list(r.weights),
                    "diagnostics": r.diagnostics,
                }
                for name, r in self.fusion.items()
            },
            "monoplex_dcor": {
                "names": list(self.monoplex_dcor.names),
                "values": [list(row) for row in self.monoplex_dcor.values],
            },
            "snf_vs_layer_dcor": {name: val for name, val in self.snf_layer_dcor},
            "partitions": {
                name: {
                    "modularity": p.modularity,
                    "n_communities": p.n_communities,
                    "community": {
                        lab: int(c) for lab, c in zip(p.labels, p.community)
                    },
                }
                for name, p in self.partitions.items()
            },
        }


def build_layers(tables, sigma: float | None = None) -> tuple[Multiplex, dict[str, float]]:
    """RBF similarity layer per abundance table (site profiles as features)."""
    layers = []
    sigmas = {}
    for t in tables:
        ft = FeatureTable(t.entity_ids, t.values)
        s = sigma if sigma is not None else auto_sigma(ft)
        sigmas[t.layer_name] = s
        layers.append(rbf_similarity(ft, s))
    mx = Multiplex(tuple(layers), tuple(t.layer_name for t in tables))
    return mx, sigmas


def _pick_weights(mode: str, method: str, m: int, rv) -> np.ndarray:
    if mode == "uniform":
        return uniform_weights(m)
    if mode == "rv-leading-eigenvector":
        return weights_frobenius(rv)
    if mode == "rv-rowsum":
        return weights_rowsum(rv)
    # paired: each barycenter gets its natural companion
    if method == "sma-frobenius":
        return weights_frobenius(rv)
    return weights_rowsum(rv)


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Run the whole workflow and write all artifacts to ``cfg.output_dir``.

    Stages: load, filter, build RBF layers, fuse with every requested
    method, correlate, cluster, export.  Fully deterministic for a fixed
    configuration and inputs.
    """
    out_dir = Path(cfg.output_dir)

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            try:
                wrapped = type(exc)(f"[stage {name}] {exc}")
            except Exception:
                raise exc
            raise wrapped from exc

    tables = stage("load", load_abundance_tables, cfg.inputs)
    tables, flog = stage("filter", filter_entities, tables)
    multiplex, sigmas = stage("similarity", build_layers, tables, cfg.sigma)
    m = multiplex.m

    rv = rv_matrix(multiplex)
    weight_tables: dict[str, list[float] | None] = {}
    for name, fn in (("frobenius", weights_frobenius), ("rowsum", weights_rowsum)):
        try:
            weight_tables[name] = [float(x) for x in fn(rv)]
        except Exception:
            weight_tables[name] = None

    fusion: dict[str, FusionResult] = {}
    for method in cfg.methods:
        if method == "snf":
            fusion[method] = stage(method, snf_fuse, multiplex, cfg.snf)
        else:
            metric = method.removeprefix("sma-")
            bc = BarycenterConfig(
                metric, tol=cfg.sma_tol, max_iter=cfg.sma_max_iter, jitter=cfg.sma_jitter
            )
            w = _pick_weights(cfg.weights_mode, method, m, rv)
            fusion[method] = stage(method, solve_barycenter, multiplex, w, bc)

    mono_layers = {name: r.as_layer() for name, r in fusion.items()}
    names = tuple(fusion.keys())
    mono_dcor = stage(
        "dcor", correlation_table, names, [mono_layers[n] for n in names]
    )

    snf_layer = ()
    if "snf" in fusion:
        snf_layer = tuple(
            (lname, distance_correlation(mono_layers["snf"], lay))
            for lname, lay in zip(multiplex.names, multiplex.layers)
        )

    partitions = {
        name: stage("cluster", louvain_communities, lay, cfg.resolution, cfg.seed)
        for name, lay in mono_layers.items()
    }

    report = RunReport(
        layer_names=multiplex.names,
        filter_log=flog,
        sigmas=sigmas,
        weight_tables=weight_tables,
        fusion=fusion,
        monoplex_dcor=mono_dcor,
        snf_layer_dcor=snf_layer,
        partitions=partitions,
    )
    stage("write", _write_artifacts, out_dir, cfg, multiplex, report, mono_layers)
    return report


# ---------------------------------------------------------------------------
# artifact writers


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def write_similarity_csv(path, labels, matrix):
    """Labelled full-matrix CSV with 17-significant-digit values."""
    rows = [[""] + list(labels)]
    for lab, row in zip(labels, np.asarray(matrix, dtype=float)):
        rows.append([lab] + [fmt17(v) for v in row])
    _write_text(Path(path), _csv_text(rows))
    return Path(path)


def load_similarity_csv(path) -> SimilarityLayer:
    """Read a labelled matrix CSV back into a similarity layer."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path}: expected a header and at least one row")
    labels = tuple(h.strip() for h in rows[0][1:])
    n = len(labels)
    values = np.zeros((n, n))
    if len(rows) != n + 1:
        raise ParseError(f"{path}: expected {n} data rows, got {len(rows) - 1}")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise ParseError(f"{path}:{i}: expected {n + 1} cells, got {len(row)}")
        if row[0].strip() != labels[i - 2]:
            raise ParseError(
                f"{path}:{i}: row label {row[0]!r} does not match header order"
            )
        try:
            values[i - 2] = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: {exc}") from exc
    try:
        return SimilarityLayer(labels, values, "external")
    except InvalidInput as exc:
        raise ParseError(f"{path}: {exc}") from exc


def export_graph(layer: SimilarityLayer, partition, fmt: str, path, threshold: float = 0.0):
    """Write a similarity network as an edge list, GraphML, or matrix CSV.

    Edge formats keep pairs i < j with weight strictly above ``threshold``.
    GraphML nodes carry a ``community`` attribute when a partition is given.
    """
    if fmt not in EXPORT_FORMATS:
        raise InvalidParameter(f"unknown export format {fmt!r}")
    path = Path(path)
    labels, s = layer.labels, layer.S
    n = len(labels)
    if partition is not None and partition.labels != labels:
        raise InvalidInput("partition labels do not match the network")

    if fmt == "csv-matrix":
        return write_similarity_csv(path, labels, s)

    if fmt == "edge-list":
        rows = [["source", "target", "weight"]]
        for i in range(n):
            for j in range(i + 1, n):
                if s[i, j] > threshold:
                    rows.append([labels[i], labels[j], fmt17(s[i, j])])
        _write_text(path, _csv_text(rows))
        return path

    # graphml
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    ET.SubElement(
        root, "key", id="w", **{"for": "edge"}, attrib={"attr.name": "weight", "attr.type": "double"}
    )
    if partition is not None:
        ET.SubElement(
            root, "key", id="c", **{"for": "node"}, attrib={"attr.name": "community", "attr.type": "int"}
        )
    graph = ET.SubElement(root, "graph", id="G", edgedefault="undirected")
    for idx, lab in enumerate(labels):
        node = ET.SubElement(graph, "node", id=lab)
        if partition is not None:
            data = ET.SubElement(node, "data", key="c")
            data.text = str(int(partition.community[idx]))
    for i in range(n):
        for j in range(i + 1, n):
            if s[i, j] > threshold:
                edge = ET.SubElement(graph, "edge", source=labels[i], target=labels[j])
                data = ET.SubElement(edge, "data", key="w")
                data.text = fmt17(s[i, j])
    ET.indent(root)
    text = ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"
    _write_text(path, text)
    return path


def _write_artifacts(out_dir: Path, cfg: PipelineConfig, multiplex: Multiplex, report: RunReport, mono_layers):
    out_dir.mkdir(parents=True, exist_ok=True)

    for name, lay in zip(multiplex.names, multiplex.layers):
        write_similarity_csv(out_dir / "layers" / f"{name}.csv", lay.labels, lay.S)

    for name, lay in mono_layers.items():
        write_similarity_csv(out_dir / f"monoplex_{name}.csv", lay.labels, lay.S)
        export_graph(
            lay, report.partitions[name], "edge-list",
            out_dir / f"edges_{name}.csv", cfg.export_threshold,
        )
        export_graph(
            lay, report.partitions[name], "graphml",
            out_dir / f"graph_{name}.graphml", cfg.export_threshold,
        )

    wrows = [["layer", "frobenius", "rowsum"]]
    wf = report.weight_tables.get("frobenius")
    wr = report.weight_tables.get("rowsum")
    for i, name in enumerate(report.layer_names):
        wrows.append(
            [
                name,
                fmt17(wf[i]) if wf is not None else "",
                fmt17(wr[i]) if wr is not None else "",
            ]
        )
    _write_text(out_dir / "weights.csv", _csv_text(wrows))

    write_similarity_csv(
        out_dir / "dcor_monoplexes.csv",
        report.monoplex_dcor.names,
        report.monoplex_dcor.values,
    )

    if report.snf_layer_dcor:
        rows = [["layer", "dcor"]]
        rows += [[name, fmt17(v)] for name, v in report.snf_layer_dcor]
        _write_text(out_dir / "dcor_snf_vs_layers.csv", _csv_text(rows))

    prows = [["method", "label", "community"]]
    for name, p in report.partitions.items():
        prows += [[name, lab, str(int(c))] for lab, c in zip(p.labels, p.community)]
    _write_text(out_dir / "partitions.csv", _csv_text(prows))

    frows = [["entity", "status", "detail"]]
    for e in report.filter_log.removed_everywhere:
        frows.append([e, "removed", "absent in every layer"])
    for e, layers in report.filter_log.removed_partial:
        frows.append([e, "removed", "absent in: " + "; ".join(layers)])
    for e in report.filter_log.retained:
        frows.append([e, "retained", ""])
    _write_text(out_dir / "filter_log.csv", _csv_text(frows))

    _write_text(out_dir / "report.json", dumps_json17(report.to_dict()) + "\n")
