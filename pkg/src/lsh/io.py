"""Dataset ingestion, timestamp rescaling, and result serialization.

events.csv uses `sender,receiver,time` rows (optional header, auto-detected
by a non-numeric third field).  Fits round-trip through JSON bit-exactly:
floats serialize as shortest round-trip decimals.  The latent scatter plot is
a hand-written SVG so identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EventSequence, KernelSpec, ModelParams, SlopeConstraint, validate_events
from .errors import (
    DatasetIoError,
    DegenerateTimesError,
    DimensionNot2Error,
    ParseError,
    SchemaVersionError,
    ValidationError,
)
from .estimation import FitConfig, FitResult
from .evaluation import LinkPredictionResult
from .likelihood import IntegrationMode

FIT_SCHEMA = "lsh-fit/1"
EVAL_SCHEMA = "lsh-eval/1"


@dataclass(frozen=True)
class DatasetManifest:
    """How to read an events file: column layout, delimiter, labels, rescaling."""

    path: str
    columns: tuple = (0, 1, 2)  # positions of sender, receiver, time
    delimiter: str = ","
    label_map: dict | None = None
    rescale_target: float | None = None

    def __post_init__(self):
        if sorted(self.columns) != [0, 1, 2]:
            raise ValidationError("columns must be a permutation of (0, 1, 2)")
        if self.rescale_target is not None and self.rescale_target <= 0:
            raise ValidationError("rescale_target must be positive")
        if self.label_map is not None:
            ids = list(self.label_map.values())
            if len(set(ids)) != len(ids):
                raise ValidationError("label map must be a bijection")


def read_events(manifest: DatasetManifest, horizon: float | None = None):
    """Parse an events file into a validated EventSequence plus its label map."""
    path = Path(manifest.path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetIoError(str(path), exc.strerror or str(exc)) from None

    c_s, c_r, c_t = manifest.columns
    rows = []
    start = 0
    reader = list(csv.reader(lines, delimiter=manifest.delimiter))
    if reader and len(reader[0]) > c_t and not _is_number(reader[0][c_t]):
        start = 1  # header row
    for ln in range(start, len(reader)):
        row = reader[ln]
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) <= max(manifest.columns):
            raise ParseError(ln + 1, f"expected 3 fields, got {len(row)}")
        try:
            t = float(row[c_t])
        except ValueError:
            raise ParseError(ln + 1, f"unparseable timestamp {row[c_t]!r}") from None
        rows.append((row[c_s].strip(), row[c_r].strip(), t, ln + 1))

    if manifest.label_map is not None:
        label_map = dict(manifest.label_map)
    else:
        label_map = {}
        for s, r, _, _ in rows:
            for lab in (s, r):
                if lab not in label_map:
                    label_map[lab] = len(label_map)

    raw = []
    for s, r, t, ln in rows:
        try:
            raw.append((label_map[s], label_map[r], t))
        except KeyError as exc:
            raise ParseError(ln, f"unknown node label {exc.args[0]!r}") from None

    try:
        events = validate_events(raw, n_nodes=len(label_map), horizon=horizon)
    except ValidationError as exc:
        index = getattr(exc, "index", None)
        if index is not None:
            raise type(exc)(rows[index][3]) from None
        raise
    if manifest.rescale_target is not None:
        events = rescale_times(events, manifest.rescale_target)
    return events, label_map


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_events(path, events: EventSequence, label_map: dict | None = None) -> None:
    inverse = {i: lab for lab, i in (label_map or {}).items()}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sender", "receiver", "time"])
        for u, v, t in events:
            writer.writerow([inverse.get(u, u), inverse.get(v, v), repr(t)])


def rescale_times(events: EventSequence, target: float = 1000.0) -> EventSequence:
    """Affinely map timestamps onto [0, target]; the horizon becomes target.

    The map is (t - t_min) * (target / span), which is the exact identity
    when the input already spans [0, target].
    """
    if target <= 0:
        raise ValidationError("rescale target must be positive")
    t_min = float(events.times.min())
    t_max = float(events.times.max())
    if t_max == t_min:
        raise DegenerateTimesError()
    scale = target / (t_max - t_min)
    times = (events.times - t_min) * scale
    times = np.minimum(times, target)
    times[events.times == t_max] = target
    return EventSequence(events.senders, events.receivers, times,
                         n_nodes=events.n_nodes, horizon=target)


# --- fit serialization ----------------------------------------------------


def write_fit(path, result: FitResult, kernel: KernelSpec,
              config: FitConfig | None = None) -> None:
    doc = {
        "schema": FIT_SCHEMA,
        "params": {
            "z": result.params.Z.tolist(),
            "theta1": result.params.theta1,
            "theta2": result.params.theta2,
            "alpha1": result.params.alpha1,
            "alpha2": result.params.alpha2,
            "delta": result.params.delta.tolist(),
            "gamma": result.params.gamma.tolist(),
        },
        "kernel": {"betas": kernel.betas.tolist(), "weights": kernel.weights.tolist()},
        "config": None if config is None else {
            "dimension": config.dimension,
            "constraint": config.constraint.value,
            "s_theta": config.s_theta,
            "s_z": config.s_z,
            "max_outer": config.max_outer,
            "rel_tol": config.rel_tol,
            "seed": config.seed,
            "mode": config.mode.value,
            "max_alpha": config.max_alpha,
        },
        "trace": [[int(i), float(v)] for i, v in result.trace],
        "converged": result.converged,
        "outer_iters": result.outer_iters,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _require(doc, *path):
    node = doc
    walked = []
    for key in path:
        walked.append(str(key))
        if not isinstance(node, dict) or key not in node:
            raise SchemaVersionError(".".join(walked), "missing field")
        node = node[key]
    return node


def read_fit(path):
    """Load a fit document; returns (FitResult, KernelSpec, FitConfig | None)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetIoError(str(path), exc.strerror or str(exc)) from None
    except json.JSONDecodeError as exc:
        raise SchemaVersionError(str(path), f"invalid JSON: {exc}") from None
    schema = _require(doc, "schema")
    if schema != FIT_SCHEMA:
        raise SchemaVersionError("schema", f"expected {FIT_SCHEMA!r}, got {schema!r}")
    params = ModelParams(
        Z=np.asarray(_require(doc, "params", "z"), dtype=np.float64),
        theta1=_require(doc, "params", "theta1"),
        theta2=_require(doc, "params", "theta2"),
        alpha1=_require(doc, "params", "alpha1"),
        alpha2=_require(doc, "params", "alpha2"),
        delta=np.asarray(_require(doc, "params", "delta"), dtype=np.float64),
        gamma=np.asarray(_require(doc, "params", "gamma"), dtype=np.float64),
    )
    kernel = KernelSpec(
        betas=np.asarray(_require(doc, "kernel", "betas"), dtype=np.float64),
        weights=np.asarray(_require(doc, "kernel", "weights"), dtype=np.float64),
    )
    cfg_doc = doc.get("config")
    config = None
    if cfg_doc is not None:
        config = FitConfig(
            dimension=_require(doc, "config", "dimension"),
            constraint=SlopeConstraint(_require(doc, "config", "constraint")),
            s_theta=_require(doc, "config", "s_theta"),
            s_z=_require(doc, "config", "s_z"),
            max_outer=_require(doc, "config", "max_outer"),
            rel_tol=_require(doc, "config", "rel_tol"),
            seed=_require(doc, "config", "seed"),
            mode=IntegrationMode(_require(doc, "config", "mode")),
            max_alpha=cfg_doc.get("max_alpha"),
        )
    result = FitResult(
        params=params,
        trace=[(int(i), float(v)) for i, v in _require(doc, "trace")],
        converged=bool(_require(doc, "converged")),
        outer_iters=int(_require(doc, "outer_iters")),
    )
    return result, kernel, config


def write_results(path, record: dict, schema: str = EVAL_SCHEMA) -> None:
    doc = {"schema": schema}
    doc.update(record)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_auc_table(path, result: LinkPredictionResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point", "t0", "auc"])
        for i, (t, a) in enumerate(zip(result.times, result.aucs)):
            writer.writerow([i, repr(float(t)), repr(float(a))])


def write_ppc_samples(path, ensemble: dict) -> None:
    names = list(ensemble.keys())
    n_sims = len(next(iter(ensemble.values())).samples)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sim"] + names)
        for i in range(n_sims):
            writer.writerow([i] + [repr(float(ensemble[k].samples[i])) for k in names])


# --- latent space scatter -------------------------------------------------

_SVG_SIZE = 640.0
_SVG_MARGIN = 60.0


def scatter_transform(Z: np.ndarray):
    """Affine data->pixel transform used by emit_latent_scatter.

    Uniform scale maps the bounding box into the margined viewport;
    x_px = margin + (x - x_min) * s, y_px = size - margin - (y - y_min) * s
    with s = (size - 2 margin) / max(x range, y range, tiny).
    """
    lo = Z.min(axis=0)
    span = float(max(np.ptp(Z[:, 0]), np.ptp(Z[:, 1]), 1e-12))
    s = (_SVG_SIZE - 2 * _SVG_MARGIN) / span

    def to_px(xy):
        return (float(_SVG_MARGIN + (xy[0] - lo[0]) * s),
                float(_SVG_SIZE - _SVG_MARGIN - (xy[1] - lo[1]) * s))

    return to_px


def emit_latent_scatter(Z: np.ndarray, labels=None, highlights=(), path=None) -> str:
    """Write a standalone SVG of 2-D latent positions with labeled points.

    `highlights` is an iterable of (u, v) node pairs drawn as edges beneath
    the points.  Output bytes depend only on the inputs.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != 2:
        raise DimensionNot2Error(Z.shape[1] if Z.ndim == 2 else Z.ndim)
    if labels is None:
        labels = [str(i) for i in range(len(Z))]
    to_px = scatter_transform(Z)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE:g}" '
        f'height="{_SVG_SIZE:g}" viewBox="0 0 {_SVG_SIZE:g} {_SVG_SIZE:g}">',
        f'<rect width="{_SVG_SIZE:g}" height="{_SVG_SIZE:g}" fill="white"/>',
    ]
    for u, v in highlights:
        x1, y1 = to_px(Z[u])
        x2, y2 = to_px(Z[v])
        parts.append(f'<line x1="{x1!r}" y1="{y1!r}" x2="{x2!r}" y2="{y2!r}" '
                     'stroke="#999999" stroke-width="1"/>')
    for i in range(len(Z)):
        x, y = to_px(Z[i])
        parts.append(f'<circle cx="{x!r}" cy="{y!r}" r="4" fill="#1f77b4"/>')
        parts.append(f'<text x="{x + 6!r}" y="{y - 6!r}" font-size="11" '
                     f'font-family="sans-serif">{_xml_escape(str(labels[i]))}</text>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8")
    return svg


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
