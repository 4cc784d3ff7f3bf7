"""File formats shared by the CLI: delimited datasets, JSON reports, and the
run manifest.  All files are UTF-8, LF, comma-separated with `.` decimals;
floats serialize via repr (shortest 17-significant-digit round trip), so
identical runs produce byte-identical output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .rp import BudgetDataset, make_budget_dataset


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def read_budget_csv(path) -> BudgetDataset:
    """Header `k,alpha_1..alpha_m,beta_1..beta_m`."""
    rows = _rows(path)
    header = rows[0]
    m = sum(1 for h in header if h.startswith("alpha_"))
    alpha = np.array([[float(v) for v in r[1:1 + m]] for r in rows[1:]])
    beta = np.array([[float(v) for v in r[1 + m:1 + 2 * m]] for r in rows[1:]])
    return make_budget_dataset(alpha, beta)


def read_probe_response_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Same layout as the budget CSV but without normalization (noisy data)."""
    rows = _rows(path)
    header = rows[0]
    m = sum(1 for h in header if h.startswith("alpha_"))
    alpha = np.array([[float(v) for v in r[1:1 + m]] for r in rows[1:]])
    beta = np.array([[float(v) for v in r[1 + m:1 + 2 * m]] for r in rows[1:]])
    return alpha, beta


def write_budget_csv(path, alpha: np.ndarray, beta: np.ndarray) -> None:
    m = alpha.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"alpha_{i+1}" for i in range(m)] + [f"beta_{i+1}" for i in range(m)])
        for k in range(alpha.shape[0]):
            w.writerow([k + 1] + [repr(float(v)) for v in alpha[k]] + [repr(float(v)) for v in beta[k]])


def read_multiagent_csv(path):
    """Columns `alpha_i`, per-agent `beta_p{j}_i`, optional `lbeta_p{j}_i`."""
    rows = _rows(path)
    header = rows[0]
    m = sum(1 for h in header if h.startswith("alpha_"))
    agents = sorted({h.split("_")[1] for h in header if h.startswith("beta_p")})
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    cols = {h: i for i, h in enumerate(header[1:])}
    alpha = data[:, [cols[f"alpha_{i+1}"] for i in range(m)]]
    beta = np.stack(
        [data[:, [cols[f"beta_{p}_{i+1}"] for i in range(m)]] for p in agents]
    )
    lower = None
    if any(h.startswith("lbeta_") for h in header):
        lower = np.stack(
            [data[:, [cols[f"lbeta_{p}_{i+1}"] for i in range(m)]] for p in agents]
        )
    return alpha, beta, lower


def write_multiagent_csv(path, alpha, beta, lower=None) -> None:
    p, n, m = beta.shape
    header = ["k"] + [f"alpha_{i+1}" for i in range(m)]
    for q in range(p):
        header += [f"beta_p{q+1}_{i+1}" for i in range(m)]
    if lower is not None:
        for q in range(p):
            header += [f"lbeta_p{q+1}_{i+1}" for i in range(m)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(n):
            row = [k + 1] + [repr(float(v)) for v in alpha[k]]
            for q in range(p):
                row += [repr(float(v)) for v in beta[q, k]]
            if lower is not None:
                for q in range(p):
                    row += [repr(float(v)) for v in lower[q, k]]
            w.writerow(row)


def read_behavior_json(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    prior = np.asarray(doc["prior"], dtype=float)
    kernels = np.stack([np.asarray(env["p_a_given_x"], dtype=float) for env in doc["envs"]])
    return prior, kernels


def write_behavior_json(path, prior, kernels) -> None:
    doc = {
        "prior": [float(v) for v in prior],
        "envs": [{"p_a_given_x": [[float(v) for v in row] for row in k]} for k in kernels],
    }
    write_json(path, doc)


def read_trajectory_csv(path):
    """Trajectory `k,x,a` with integer states/actions."""
    rows = _rows(path)
    data = [(int(r[1]), int(r[2])) for r in rows[1:]]
    return np.array([d[0] for d in data]), np.array([d[1] for d in data])


def write_trace_csv(path, theta: np.ndarray, grad: np.ndarray) -> None:
    dim = theta.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"theta_{j+1}" for j in range(dim)] + [f"grad_{j+1}" for j in range(dim)])
        for k in range(theta.shape[0]):
            w.writerow([k + 1] + [repr(float(v)) for v in theta[k]] + [repr(float(v)) for v in grad[k]])


def read_trace_csv(path):
    rows = _rows(path)
    header = rows[0]
    dim = sum(1 for h in header if h.startswith("theta_"))
    theta = np.array([[float(v) for v in r[1:1 + dim]] for r in rows[1:]])
    grad = np.array([[float(v) for v in r[1 + dim:1 + 2 * dim]] for r in rows[1:]])
    return theta, grad


def write_cloud_csv(path, samples: np.ndarray) -> None:
    dim = samples.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"v_{j+1}" for j in range(dim)])
        for k in range(samples.shape[0]):
            w.writerow([k + 1] + [repr(float(v)) for v in samples[k]])


def write_density_csv(path, edges, values) -> None:
    centers = [0.5 * (e[1:] + e[:-1]) for e in edges]
    mesh = np.meshgrid(*centers, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{j+1}" for j in range(pts.shape[1])] + ["value"])
        for pt, v in zip(pts, np.ravel(values)):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])


class _Encoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, (np.integer,)):
            return int(obj)
        return super().default(obj)


def write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, cls=_Encoder, sort_keys=True, indent=2)
        fh.write("\n")


def write_manifest(out_dir, subcommand: str, args: dict, version: str) -> Path:
    path = Path(out_dir) / "manifest.json"
    write_json(path, {"subcommand": subcommand, "config": args, "tool_version": version})
    return path
