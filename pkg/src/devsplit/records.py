"""Run records: stopping rules, per-iteration trace rows, sweep results."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = ["StoppingRule", "Trace", "RunRecord", "SweepResult", "write_trace_csv",
           "write_sweep_csv"]

_FMT = "{:.17g}"


@dataclass(frozen=True)
class StoppingRule:
    """When to stop a run.

    ``kind`` selects the monitored quantity: ``dist`` is the distance of p_n
    to the known solution (Euclidean by default, the metric norm when
    ``metric_norm`` is set), ``fpres`` is the metric norm of the
    forward-backward residual p_n - y_n. ``tol=None`` runs to max_iter.
    """

    max_iter: int
    tol: float | None = 1e-6
    kind: str = "dist"
    metric_norm: bool = False

    def __post_init__(self):
        if self.max_iter < 0:
            raise ConfigurationError("max_iter must be nonnegative")
        if self.kind not in ("dist", "fpres"):
            raise ConfigurationError(f"unknown stopping kind {self.kind!r}")
        if self.tol is not None and self.tol <= 0:
            raise ConfigurationError("tol must be positive")


class Trace:
    """Columnar per-iteration diagnostics, thinned by ``stride``.

    Row n is recorded when n % stride == 0 (stride 0 disables recording).
    Vectors p_n and y_n are kept when ``keep_vectors`` is set; the Lyapunov
    columns are populated only on diagnostic runs.
    """

    def __init__(self, stride: int = 1, keep_vectors: bool = True):
        self.stride = stride
        self.keep_vectors = keep_vectors
        self.n: list[int] = []
        self.dist: list[float] = []
        self.fp_res: list[float] = []
        self.p: list[np.ndarray] = []
        self.y: list[np.ndarray] = []
        self.V: list[float] = []
        self.ell: list[float] = []
        self.delta: list[float] = []

    def wants(self, n: int) -> bool:
        return self.stride > 0 and n % self.stride == 0

    def append(self, n, p, y, dist, fp_res, V=None, ell=None, delta=None):
        self.n.append(int(n))
        self.dist.append(float(dist))
        self.fp_res.append(float(fp_res))
        if self.keep_vectors:
            self.p.append(np.array(p, copy=True))
            self.y.append(np.array(y, copy=True))
        if V is not None:
            self.V.append(float(V))
        if ell is not None:
            self.ell.append(float(ell))
        if delta is not None:
            self.delta.append(float(delta))

    def __len__(self) -> int:
        return len(self.n)

    @property
    def has_diagnostics(self) -> bool:
        return len(self.V) > 0

    @classmethod
    def from_arrays(cls, stride, ns, p_rows, y_rows, dist, fp_res) -> "Trace":
        tr = cls(stride=stride, keep_vectors=p_rows is not None)
        tr.n = [int(v) for v in ns]
        tr.dist = [float(v) for v in dist]
        tr.fp_res = [float(v) for v in fp_res]
        if p_rows is not None:
            tr.p = [np.array(row) for row in p_rows]
            tr.y = [np.array(row) for row in y_rows]
        return tr


@dataclass
class RunRecord:
    """Outcome of one solver run."""

    algo: str
    iterations: int
    converged: bool
    trace: Trace
    final_p: np.ndarray
    final_dist: float | None = None
    final_fp_res: float | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    param_name: str
    rows: list[tuple[float, int, bool]]  # (value, iterations, converged)
    traces: dict[float, Trace] = field(default_factory=dict)


def write_trace_csv(record: RunRecord, path) -> None:
    """Header row + comma-separated values, floats at 17 significant digits."""
    tr = record.trace
    dim = record.final_p.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["n"]
        if tr.keep_vectors:
            header += [f"p_{i}" for i in range(dim)] + [f"y_{i}" for i in range(dim)]
        header += ["dist", "fp_res"]
        if tr.has_diagnostics:
            header += ["V", "ell", "delta"]
        w.writerow(header)
        for i, n in enumerate(tr.n):
            row = [str(n)]
            if tr.keep_vectors:
                row += [_FMT.format(v) for v in tr.p[i]]
                row += [_FMT.format(v) for v in tr.y[i]]
            row += [_FMT.format(tr.dist[i]), _FMT.format(tr.fp_res[i])]
            if tr.has_diagnostics:
                row += [_FMT.format(tr.V[i]), _FMT.format(tr.ell[i]),
                        _FMT.format(tr.delta[i])]
            w.writerow(row)


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([result.param_name, "iterations", "converged"])
        for value, iters, conv in result.rows:
            w.writerow([_FMT.format(value), str(iters), "1" if conv else "0"])
