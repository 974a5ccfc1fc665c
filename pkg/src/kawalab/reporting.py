"""Artifact persistence: delimited series, JSON reports, spectrum files, figures.

Text outputs are byte-stable for a fixed config and seed except for the
timestamp header, which sits alone on its own line.  Floats go out with 17
significant digits ('%.17g' in CSV, shortest round-trip repr in JSON), so
regression diffs are exact.  Every file embeds the config digest.

Figures are optional conveniences rendered with the Agg backend; nothing in
the delimited output depends on them.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .fields import PhysicalParams, SpectralField, grid_points, to_physical

__all__ = [
    "FLOAT_FMT",
    "fmt_float",
    "config_digest",
    "write_columns_csv",
    "write_timeseries_csv",
    "write_scan_csv",
    "write_sweep_csv",
    "write_table_csv",
    "write_physical_csv",
    "spectrum_to_json",
    "field_from_spectrum",
    "write_spectrum",
    "read_spectrum",
    "write_checkpoint",
    "read_checkpoint",
    "write_report_json",
    "experiment_payload",
    "render_series_figure",
    "render_scan_figure",
    "render_loglog_figure",
]

FLOAT_FMT = "%.17g"


def fmt_float(x) -> str:
    return FLOAT_FMT % float(x)


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _pyify(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-safe
    built-ins, leaving key order intact."""
    if isinstance(obj, dict):
        return {str(k): _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def config_digest(obj) -> str:
    """sha256 over the canonical (sorted-key, compact) JSON form."""
    canon = json.dumps(_pyify(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _header_lines(digest: str) -> list[str]:
    return [f"# generated={_timestamp()}", f"# digest={digest}"]


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return fmt_float(x)
    return str(x)


def write_columns_csv(path, columns: dict, digest: str) -> Path:
    """Generic delimited table: one array per named column."""
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("all columns must have equal length")
    lines = _header_lines(digest)
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_cell(c[i]) for c in cols))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_timeseries_csv(path, series: dict, digest: str) -> Path:
    """Sampled time series; the 't' column leads."""
    if "t" not in series:
        raise ValueError("series must include a 't' column")
    ordered = {"t": series["t"]}
    ordered.update((k, v) for k, v in series.items() if k != "t")
    return write_columns_csv(path, ordered, digest)


def write_scan_csv(path, scan, digest: str) -> Path:
    """One row per trial of a ratio scan (settings live in the JSON report)."""
    trials = np.arange(len(scan.ratios))
    return write_columns_csv(path, {"trial": trials, "seed": list(scan.seeds),
                             "ratio": scan.ratios}, digest)


def write_sweep_csv(path, rows, digest: str) -> Path:
    """Dyadic shell sweep: K, max_count, argmax_p, argmax_q."""
    return write_columns_csv(path, {
        "K": [r.K for r in rows],
        "max_count": [r.max_count for r in rows],
        "argmax_p": [r.argmax_p for r in rows],
        "argmax_q": [r.argmax_q for r in rows],
    }, digest)


def write_table_csv(path, table, digest: str) -> Path:
    """Per-key triple counts of one enumerated shell."""
    keys = table.group_keys
    return write_columns_csv(path, {
        "p": [int(k[0]) for k in keys],
        "q": [int(k[1]) for k in keys],
        "count": table.group_sizes(),
    }, digest)


def write_physical_csv(path, u: SpectralField, nx: int, digest: str) -> Path:
    """Collocation samples of one field: columns x, u(x)."""
    return write_columns_csv(path, {"x": grid_points(nx), "u": to_physical(u, nx)}, digest)


# ---------------------------------------------------------------------------
# spectrum and checkpoint JSON

def spectrum_to_json(u: SpectralField) -> dict:
    """{"kmax": K, "coeffs": [[re, im], ...]} for k = 1..K."""
    return {"kmax": u.kmax,
            "coeffs": [[float(c.real), float(c.imag)] for c in u.coeffs]}


def field_from_spectrum(obj: dict) -> SpectralField:
    kmax = int(obj["kmax"])
    pairs = obj["coeffs"]
    if len(pairs) != kmax:
        raise ValueError(f"spectrum lists {len(pairs)} modes, kmax says {kmax}")
    coeffs = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return SpectralField(kmax=kmax, coeffs=coeffs)


def write_spectrum(path, u: SpectralField) -> Path:
    path = Path(path)
    path.write_text(json.dumps(spectrum_to_json(u), indent=2) + "\n")
    return path


def read_spectrum(path) -> SpectralField:
    obj = json.loads(Path(path).read_text())
    if "spectrum" in obj:   # checkpoint files carry the field under this key
        obj = obj["spectrum"]
    return field_from_spectrum(obj)


def write_checkpoint(path, u: SpectralField, t: float, p: PhysicalParams, digest: str) -> Path:
    payload = {
        "generated": _timestamp(),
        "digest": digest,
        "t": float(t),
        "params": {"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma},
        "spectrum": spectrum_to_json(u),
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def read_checkpoint(path):
    """Returns (field, t, params) from a checkpoint file."""
    obj = json.loads(Path(path).read_text())
    p = obj["params"]
    return (field_from_spectrum(obj["spectrum"]), float(obj["t"]),
            PhysicalParams(p["alpha"], p["beta"], p["gamma"]))


def write_report_json(path, payload: dict, digest: str) -> Path:
    """Top-level run report; 'generated' leads, then the digest, then the
    caller's payload in its own order."""
    out = {"generated": _timestamp(), "digest": digest}
    out.update(_pyify(payload))
    path = Path(path)
    path.write_text(json.dumps(out, indent=2) + "\n")
    return path


def experiment_payload(report) -> dict:
    """JSON form of an ExperimentReport (series stay in the CSV)."""
    return {
        "name": report.name,
        "params": {"alpha": report.params.alpha, "beta": report.params.beta,
                   "gamma": report.params.gamma},
        "passed": report.passed,
        "settings": report.settings,
        "assertions": [{
            "name": a.name, "passed": a.passed, "observed": a.observed,
            "bound": a.bound, "kind": a.kind, "note": a.note,
        } for a in report.assertions],
    }


# ---------------------------------------------------------------------------
# figures

def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_series_figure(series: dict, path, title: str, logy: bool | None = None) -> Path:
    """Plot every non-time column against t.  logy=None switches to a log
    axis when all plotted values are positive and span 3+ decades."""
    plt = _plt()
    t = np.asarray(series["t"])
    cols = {k: np.asarray(v, dtype=np.float64) for k, v in series.items() if k != "t"}
    if logy is None:
        finite = np.concatenate([v[np.isfinite(v)] for v in cols.values()]) if cols else np.array([])
        pos = finite[finite > 0]
        logy = pos.size == finite.size and pos.size > 0 and pos.max() / pos.min() > 1e3
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    for name, vals in cols.items():
        ax.plot(t, vals, lw=1.2, label=name)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(cols) <= 12:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_scan_figure(scan, path) -> Path:
    """Histogram of a ratio scan with the observed maximum marked."""
    plt = _plt()
    ratios = np.asarray(scan.ratios, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    # phase-only randomness can leave trials identical to within an ulp,
    # a range linspace cannot split into bins
    lo, hi = float(ratios.min()), float(ratios.max())
    floor = max(abs(lo), abs(hi)) * 1e-6 + 1e-12
    if hi - lo < floor:
        lo, hi = lo - floor, hi + floor
    ax.hist(ratios, bins=min(40, max(10, len(ratios) // 10)), range=(lo, hi),
            alpha=0.75)
    ax.axvline(ratios.max(), color="tab:red", lw=1.5,
               label=f"max = {ratios.max():.4g}")
    ax.set_xlabel("ratio")
    ax.set_ylabel("trials")
    ax.set_title(f"{scan.name} ({len(ratios)} trials)")
    ax.legend(fontsize=9)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_loglog_figure(x, curves: dict, path, xlabel: str, title: str,
                         guide: tuple | None = None) -> Path:
    """Log-log decay/growth plot; ``guide=(slope, label)`` adds a reference
    power law through the first point of the first curve."""
    plt = _plt()
    x = np.asarray(x, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for name, ys in curves.items():
        ax.loglog(x, np.asarray(ys, dtype=np.float64), "o-", lw=1.2, ms=4, label=name)
    if guide is not None:
        slope, label = guide
        first = np.asarray(next(iter(curves.values())), dtype=np.float64)
        ref = first[0] * (x / x[0]) ** slope
        ax.loglog(x, ref, "k--", lw=1.0, alpha=0.6, label=label)
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
