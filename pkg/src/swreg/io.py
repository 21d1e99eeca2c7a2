"""Reading and writing datasets, density grids, slicings and particle clouds.

Dataset formats:

``long_csv``
    One row per observed point, header ``sample_id,x1..xq,z1..zp``. Rows of a
    sample share their predictor values.
``grid_dir``
    A directory with ``meta.json`` (domain, grid shape, sample ids and
    predictors) and one ``sample_<id>.csv`` per sample holding the density
    values in row-major order, one per line.

Single objects are written as CSV whose first line is ``# {json}`` metadata,
so every file is self-describing and loads back without side information.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Optional

import numpy as np

from .core import AngleGrid, DensityGrid, Domain, PointCloud, RegressionDataset
from .errors import ParseError, SchemaError
from .slicing import SlicedDensities, SlicedQuantiles

DOMAIN_PAD = 0.05


def _fmt(v) -> str:
    return repr(float(v))


def _parse_float(text, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line)
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", line)
    return v


def _read_meta(fh, expected):
    first = fh.readline()
    if not first.startswith("#"):
        raise ParseError("missing '# {json}' metadata header", 1)
    try:
        meta = json.loads(first[1:])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad metadata header: {exc}", 1)
    if meta.get("type") != expected:
        raise SchemaError(f"expected a {expected} file, found {meta.get('type')!r}")
    return meta


def _read_rows(fh, first_line=2):
    """Numeric rows after a header line; returns a list of lists of floats."""
    reader = csv.reader(fh)
    next(reader, None)
    rows = []
    for k, row in enumerate(reader, start=first_line + 1):
        if not row:
            continue
        rows.append([_parse_float(c, k) for c in row])
    return rows


def _domain_from(meta) -> Domain:
    d = meta["domain"]
    return Domain(np.array(d["lower"], dtype=float), np.array(d["upper"], dtype=float))


# --------------------------------------------------------------------------- single objects


def save_pointcloud(cloud: PointCloud, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"z{k + 1}" for k in range(cloud.dim)])
        for pt in cloud.points:
            w.writerow([_fmt(v) for v in pt])


def load_pointcloud(path) -> PointCloud:
    with open(path, newline="") as fh:
        rows = _read_rows(fh, first_line=1)
    if not rows:
        raise SchemaError(f"{path}: no points")
    return PointCloud(np.array(rows))


def save_density_grid(f: DensityGrid, path) -> None:
    """Cell centers and values, row-major, under a metadata header."""
    meta = {"type": "DensityGrid", "domain": f.domain.to_dict(), "shape": list(f.shape)}
    mesh = f.domain.mesh(f.shape).reshape(-1, f.domain.dim)
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"z{k + 1}" for k in range(f.domain.dim)] + ["density"])
        for z, v in zip(mesh, f.values.ravel()):
            w.writerow([_fmt(c) for c in z] + [_fmt(v)])


def load_density_grid(path) -> DensityGrid:
    with open(path, newline="") as fh:
        meta = _read_meta(fh, "DensityGrid")
        rows = _read_rows(fh)
    shape = tuple(meta["shape"])
    vals = np.array([r[-1] for r in rows])
    if vals.size != int(np.prod(shape)):
        raise SchemaError(f"{path}: expected {int(np.prod(shape))} values, found {vals.size}")
    return DensityGrid(_domain_from(meta), vals.reshape(shape), normalize=True)


def save_sliced_quantiles(g: SlicedQuantiles, path) -> None:
    """One row per angle: the angle in radians then the S quantile values."""
    meta = {"type": "SlicedQuantiles", "angles": g.angle_grid.angles.tolist(), "S": g.S}
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha"] + [f"q{k + 1}" for k in range(g.S)])
        for a, row in zip(g.angle_grid.radians, g.values):
            w.writerow([_fmt(a)] + [_fmt(v) for v in row])


def load_sliced_quantiles(path) -> SlicedQuantiles:
    with open(path, newline="") as fh:
        meta = _read_meta(fh, "SlicedQuantiles")
        rows = _read_rows(fh)
    vals = np.array([r[1:] for r in rows])
    return SlicedQuantiles(AngleGrid(np.array(meta["angles"])), vals)


def save_sliced_densities(lam: SlicedDensities, path) -> None:
    meta = {"type": "SlicedDensities", "angles": lam.angle_grid.angles.tolist(), "u_grid": lam.u_grid.tolist()}
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha"] + [f"u{k + 1}" for k in range(lam.U)])
        for a, row in zip(lam.angle_grid.radians, lam.values):
            w.writerow([_fmt(a)] + [_fmt(v) for v in row])


def load_sliced_densities(path) -> SlicedDensities:
    with open(path, newline="") as fh:
        meta = _read_meta(fh, "SlicedDensities")
        rows = _read_rows(fh)
    vals = np.array([r[1:] for r in rows])
    return SlicedDensities(AngleGrid(np.array(meta["angles"])), np.array(meta["u_grid"]), vals)


# --------------------------------------------------------------------------- datasets


def _bounding_domain(points, pad=DOMAIN_PAD) -> Domain:
    lo, hi = points.min(axis=0), points.max(axis=0)
    width = np.where(hi > lo, hi - lo, 1.0)
    return Domain(lo - pad * width, hi + pad * width)


def load_long_csv(path, domain: Optional[Domain] = None) -> RegressionDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "sample_id":
            raise ParseError("header must start with sample_id", 1)
        names = [h.strip() for h in header[1:]]
        xs = [k for k, h in enumerate(names) if h.startswith("x")]
        zs = [k for k, h in enumerate(names) if h.startswith("z")]
        if not xs or not zs or len(xs) + len(zs) != len(names):
            raise SchemaError("columns must be sample_id, x1..xq, z1..zp")
        order, preds, points = [], {}, {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
            sid = row[0].strip()
            vals = [_parse_float(c, line) for c in row[1:]]
            x = tuple(vals[k] for k in xs)
            if sid not in preds:
                order.append(sid)
                preds[sid] = x
                points[sid] = []
            elif preds[sid] != x:
                raise ParseError(f"sample {sid!r} has inconsistent predictor values", line)
            points[sid].append([vals[k] for k in zs])
    if not order:
        raise SchemaError(f"{path}: no data rows")
    clouds = tuple(PointCloud(np.array(points[s])) for s in order)
    if domain is None:
        domain = _bounding_domain(np.vstack([c.points for c in clouds]))
    X = np.array([preds[s] for s in order])
    return RegressionDataset(X, clouds, domain, tuple(order))


def save_long_csv(ds: RegressionDataset, path) -> None:
    if not ds.is_cloud:
        raise SchemaError("long_csv holds point-cloud responses only")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id"] + [f"x{k + 1}" for k in range(ds.q)] + [f"z{k + 1}" for k in range(ds.p)])
        for sid, x, cloud in zip(ds.sample_ids, ds.predictors, ds.responses):
            xs = [_fmt(v) for v in x]
            for pt in cloud.points:
                w.writerow([sid] + xs + [_fmt(v) for v in pt])


def load_grid_dir(path) -> RegressionDataset:
    meta_path = os.path.join(path, "meta.json")
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"meta.json: {exc}")
    domain = _domain_from(meta)
    shape = tuple(meta["shape"])
    size = int(np.prod(shape))
    ids, X, grids = [], [], []
    for sample in meta["samples"]:
        sid = str(sample["id"])
        fname = os.path.join(path, f"sample_{sid}.csv")
        vals = []
        with open(fname) as fh:
            for line, text in enumerate(fh, start=1):
                text = text.strip()
                if text:
                    vals.append(_parse_float(text, line))
        if len(vals) != size:
            raise SchemaError(f"{fname}: expected {size} values, found {len(vals)}")
        ids.append(sid)
        X.append(np.atleast_1d(np.asarray(sample["x"], dtype=float)))
        grids.append(DensityGrid(domain, np.array(vals).reshape(shape), normalize=True))
    return RegressionDataset(np.array(X), tuple(grids), domain, tuple(ids))


def save_grid_dir(ds: RegressionDataset, path) -> None:
    if ds.is_cloud:
        raise SchemaError("grid_dir holds density-grid responses only")
    os.makedirs(path, exist_ok=True)
    meta = {
        "format": "grid_dir",
        "domain": ds.domain.to_dict(),
        "shape": list(ds.responses[0].shape),
        "samples": [{"id": str(s), "x": x.tolist()} for s, x in zip(ds.sample_ids, ds.predictors)],
    }
    with open(os.path.join(path, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    for sid, g in zip(ds.sample_ids, ds.responses):
        with open(os.path.join(path, f"sample_{sid}.csv"), "w") as fh:
            fh.writelines(_fmt(v) + "\n" for v in g.values.ravel())


def load_dataset(path, fmt: str = "auto", domain: Optional[Domain] = None) -> RegressionDataset:
    """Load ``long_csv`` (a file) or ``grid_dir`` (a directory); ``auto`` decides by path type."""
    if not os.path.exists(path):
        raise SchemaError(f"no such file or directory: {path}")
    if fmt == "auto":
        fmt = "grid_dir" if os.path.isdir(path) else "long_csv"
    if fmt == "long_csv":
        return load_long_csv(path, domain)
    if fmt == "grid_dir":
        return load_grid_dir(path)
    raise SchemaError(f"unknown dataset format {fmt!r}")


def save_dataset(ds: RegressionDataset, path) -> None:
    if ds.is_cloud:
        save_long_csv(ds, path)
    else:
        save_grid_dir(ds, path)
