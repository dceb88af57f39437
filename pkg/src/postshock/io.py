"""Panel CSV files, JSON/CSV reports and run manifests.

Panel data use two files.  The long-format data file has the header
``series_id,t,y,x1,...,xp`` with one row per series and time point; ``t``
starts at 0 and runs without gaps, and ``y`` may be empty only at the
target's ``t = t_star + 1``.  The metadata file has the header
``series_id,t_star,role`` with ``role`` either ``target`` or ``donor``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import platform
from collections import OrderedDict

import numpy as np

from .errors import InputError, PanelParseError
from .panel import DonorPool, TimeSeries, fitted_path

SCHEMA_VERSION = 1
ROLES = ("target", "donor")


def _read_csv(path):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise PanelParseError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise PanelParseError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    # line numbers are 1-based and count the header
    return header, [(i + 2, r) for i, r in enumerate(rows[1:]) if any(c.strip() for c in r)]


def _number(text, path, line, col, kind=float):
    try:
        v = kind(text)
    except ValueError:
        raise PanelParseError(f"{path}:{line}: column {col!r} holds {text!r}, not a number") from None
    return v


def read_meta(meta_path):
    header, rows = _read_csv(meta_path)
    need = ["series_id", "t_star", "role"]
    if header[:3] != need:
        raise PanelParseError(f"{meta_path}:1: header must start with {','.join(need)}")
    meta = OrderedDict()
    target = None
    for line, r in rows:
        if len(r) < 3:
            raise PanelParseError(f"{meta_path}:{line}: expected 3 fields, got {len(r)}")
        sid, ts, role = r[0].strip(), r[1].strip(), r[2].strip().lower()
        if sid in meta:
            raise PanelParseError(f"{meta_path}:{line}: series {sid!r} listed twice")
        if role not in ROLES:
            raise PanelParseError(f"{meta_path}:{line}: role {role!r} is not one of {ROLES}")
        if role == "target":
            if target is not None:
                raise PanelParseError(
                    f"{meta_path}:{line}: multiple targets ({target!r} and {sid!r})"
                )
            target = sid
        meta[sid] = (_number(ts, meta_path, line, "t_star", int), role, line)
    if target is None:
        raise PanelParseError(f"{meta_path}: no series has role 'target'")
    return meta


def load_panel(data_path, meta_path) -> DonorPool:
    """Read a donor pool from a long-format data CSV and a metadata CSV.

    Raises :class:`PanelParseError` (with ``file:line`` locations) for
    malformed numbers, missing ``t = 0`` rows, gaps or repeats in ``t``,
    series missing from either file, several targets, or missing covariates.
    """
    meta = read_meta(meta_path)
    header, rows = _read_csv(data_path)
    if header[:3] != ["series_id", "t", "y"]:
        raise PanelParseError(f"{data_path}:1: header must start with series_id,t,y")
    xcols = header[3:]
    if not xcols or xcols != [f"x{j}" for j in range(1, len(xcols) + 1)]:
        raise PanelParseError(f"{data_path}:1: covariate columns must be named x1..xp")
    width = len(header)

    grouped = OrderedDict()
    for line, r in rows:
        if len(r) != width:
            raise PanelParseError(f"{data_path}:{line}: expected {width} fields, got {len(r)}")
        sid = r[0].strip()
        if sid not in meta:
            raise PanelParseError(f"{data_path}:{line}: series {sid!r} is not in the metadata")
        t = _number(r[1].strip(), data_path, line, "t", int)
        y = math.nan if r[2].strip() == "" else _number(r[2], data_path, line, "y")
        x = []
        for j, cell in enumerate(r[3:]):
            if cell.strip() == "":
                raise PanelParseError(
                    f"{data_path}:{line}: series {sid!r} is missing covariate {xcols[j]} "
                    f"(every series needs all {len(xcols)} covariates)"
                )
            x.append(_number(cell, data_path, line, xcols[j]))
        grouped.setdefault(sid, []).append((t, y, x, line))

    series = {}
    for sid, (t_star, role, mline) in meta.items():
        recs = grouped.get(sid)
        if not recs:
            raise PanelParseError(f"{meta_path}:{mline}: series {sid!r} has no rows in {data_path}")
        recs.sort(key=lambda rec: rec[0])
        if recs[0][0] != 0:
            raise PanelParseError(
                f"{data_path}:{recs[0][3]}: series {sid!r} has no t = 0 row "
                f"(first t is {recs[0][0]})"
            )
        for k, rec in enumerate(recs):
            if rec[0] != k:
                kind = "repeats" if rec[0] < k else "skips to"
                raise PanelParseError(
                    f"{data_path}:{rec[3]}: series {sid!r} {kind} t = {rec[0]} (expected t = {k})"
                )
        y = np.array([rec[1] for rec in recs])
        x = np.array([rec[2] for rec in recs])
        last = len(recs) - 1
        bad = [
            rec[3] for k, rec in enumerate(recs)
            if math.isnan(rec[1]) and not (role == "target" and k == last == t_star + 1)
        ]
        if bad:
            raise PanelParseError(
                f"{data_path}:{bad[0]}: series {sid!r} has an empty y; only the target's "
                "final row at t = t_star + 1 may be empty"
            )
        try:
            series[sid] = TimeSeries(sid, y, x, t_star)
        except InputError as exc:
            raise PanelParseError(f"{meta_path}:{mline}: {exc}") from None

    target_id = next(s for s, (_, role, _) in meta.items() if role == "target")
    donors = tuple(series[s] for s, (_, role, _) in meta.items() if role == "donor")
    try:
        return DonorPool(donors, series[target_id])
    except InputError as exc:
        raise PanelParseError(f"{meta_path}: {exc}") from None


def _fmt(v):
    return "" if not np.isfinite(v) else repr(float(v))


def write_panel(pool: DonorPool, data_path, meta_path):
    """Write ``pool`` in the format read by :func:`load_panel` (exact round trip)."""
    p = pool.p
    with open(data_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id", "t", "y"] + [f"x{j}" for j in range(1, p + 1)])
        for s in (pool.target,) + pool.donors:
            for t in range(s.T + 1):
                w.writerow([s.id, t, _fmt(s.y[t])] + [repr(float(v)) for v in s.x[t]])
    with open(meta_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id", "t_star", "role"])
        w.writerow([pool.target.id, pool.target.t_star, "target"])
        for d in pool.donors:
            w.writerow([d.id, d.t_star, "donor"])


# ----------------------------------------------------------------------------
# manifests and reports


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def make_manifest(command, config, seed, inputs=(), timestamp=None):
    """Everything needed to replay a run; only ``timestamp`` varies between replays."""
    import scipy

    from . import __version__, kernels

    return OrderedDict(
        command=command,
        config=config,
        config_hash=hashlib.sha256(canonical_json(config).encode()).hexdigest(),
        seed=seed,
        versions=OrderedDict(
            postshock=__version__,
            numpy=np.__version__,
            scipy=scipy.__version__,
            python=platform.python_version(),
            kernels=kernels.BACKEND,
        ),
        inputs=OrderedDict((os.path.basename(p), file_digest(p)) for p in inputs),
        timestamp=timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    )


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to None."""
    if isinstance(obj, dict):
        return OrderedDict((k, _clean(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")


def assessment_report(pool, res, manifest):
    """JSON-ready report of one forecast assessment."""
    ests = list(res.estimates)
    rep = OrderedDict(schema_version=SCHEMA_VERSION, target=res.target_id)
    rep["estimates"] = OrderedDict((m, res.estimates[m].value) for m in ests)
    rep["weights"] = OrderedDict(
        donors=[d.id for d in pool.donors],
        w=res.weights.w.tolist(),
        objective=res.weights.objective,
        norm_order=res.weights.norm_order,
    )
    rep["donor_shocks"] = [
        OrderedDict(donor=s.donor_id, alpha_hat=s.alpha_hat, var_hat=s.var_hat) for s in res.shocks
    ]
    rep["bootstrap_var"] = OrderedDict((m, res.distribution.sample_var[m]) for m in ests)
    rep["bootstrap_redrawn"] = res.distribution.n_redrawn
    rep["delta_hat"] = OrderedDict((m, res.risks[m].delta_hat) for m in ests)
    rep["decisions"] = OrderedDict((m, res.risks[m].decision) for m in ests)
    rep["forecast1"] = res.forecast1
    rep["forecast2"] = OrderedDict((m, res.forecast2[m]) for m in ests)
    rep["observed"] = res.observed
    rep["errors"] = res.errors()
    rep["manifest"] = manifest
    return rep


def assessment_rows(res):
    """Tabular form: one row for the unadjusted forecast, one per estimator."""
    err = res.errors() or {}
    rows = [OrderedDict(forecast="original", estimate=None, bootstrap_var=None, delta_hat=None,
                        decision=None, value=res.forecast1, abs_error=err.get("original"))]
    for m in res.estimates:
        rows.append(OrderedDict(
            forecast=m,
            estimate=res.estimates[m].value,
            bootstrap_var=res.distribution.sample_var[m],
            delta_hat=res.risks[m].delta_hat,
            decision=res.risks[m].decision,
            value=res.forecast2[m],
            abs_error=err.get(m),
        ))
    return rows


def loocv_report(report, manifest):
    rep = OrderedDict(schema_version=SCHEMA_VERSION, mode=report.mode)
    rep["c_bar"] = OrderedDict(report.c_bar)
    rep["iterations"] = [
        OrderedDict(held_out=r.held_out, index=r.index, decisions=r.decisions, e1=r.e1,
                    e2=r.e2, correct=r.correct)
        for r in report.records
    ]
    rep["manifest"] = manifest
    return rep


def loocv_rows(report):
    rows = []
    for r in report.records:
        row = OrderedDict(held_out=r.held_out, index=r.index, e1=r.e1)
        for m in report.c_bar:
            row[f"decision_{m}"] = r.decisions[m]
            row[f"e2_{m}"] = r.e2[m]
            row[f"correct_{m}"] = r.correct[m]
        rows.append(row)
    return rows


def simulation_report(rows, manifest):
    rep = OrderedDict(schema_version=SCHEMA_VERSION)
    rep["rows"] = [r.flat() for r in rows]
    rep["manifest"] = manifest
    return rep


def write_csv(rows, path, manifest=None):
    """CSV with one header line; the manifest (if any) goes on a leading ``#`` line."""
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        if manifest is not None:
            fh.write("# manifest: " + json.dumps(_clean(manifest)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        if rows:
            w.writerow(list(rows[0]))
            for r in rows:
                w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v)
                            for v in r.values()])


def plot_rows(pool, res):
    """Actual vs fitted values plus both forecasts at ``t_star + 1``."""
    s = pool.target
    fitted = fitted_path(res.target_fit, s)
    rows = []
    for t in range(1, s.t_star + 2):
        row = OrderedDict(t=t, actual=float(s.y[t]) if t <= s.T else None)
        row["fitted"] = float(fitted[t - 1]) if t <= s.t_star else None
        row["forecast1"] = res.forecast1 if t == s.t_star + 1 else None
        for m, f in res.forecast2.items():
            row[f"forecast2_{m}"] = f if t == s.t_star + 1 else None
        if row["actual"] is not None and not math.isfinite(row["actual"]):
            row["actual"] = None
        rows.append(row)
    return rows
