"""Per-iteration trace records shared by every solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DIVERGED = "diverged"

CSV_HEADER = "iter,grad_norm,dist_opt,value,eta_outer,tau,inner_iters,ls_evals,elapsed_s"


@dataclass
class TraceRecord:
    """State at the start of an outer iteration plus the step taken from it.

    ``dist_opt`` is None when no reference solution is known. The action
    fields (eta_outer, inner_iters, ls_evals, elapsed_s) are zero on the
    terminal record, where no step was taken.
    """

    iteration: int
    grad_norm: float
    dist_opt: float | None
    value: float
    eta_outer: float
    tau: float
    inner_iters: int
    ls_evals: int
    elapsed_s: float


def _fmt(v: float) -> str:
    return repr(float(v))


def trace_rows(records: list[TraceRecord], include_elapsed: bool = False) -> list[str]:
    """CSV body lines for a trace.

    ``elapsed_s`` is left empty unless requested: wall time is not
    reproducible across runs, and trace bodies are required to be
    byte-identical for identical configs and seeds. Timings live in the
    JSON run summaries instead.
    """
    rows = []
    for r in records:
        dist = "" if r.dist_opt is None else _fmt(r.dist_opt)
        elapsed = _fmt(r.elapsed_s) if include_elapsed else ""
        rows.append(",".join([
            str(r.iteration), _fmt(r.grad_norm), dist, _fmt(r.value),
            _fmt(r.eta_outer), _fmt(r.tau), str(r.inner_iters),
            str(r.ls_evals), elapsed,
        ]))
    return rows


def write_trace_csv(path, records: list[TraceRecord],
                    include_elapsed: bool = False) -> None:
    lines = [CSV_HEADER] + trace_rows(records, include_elapsed=include_elapsed)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def distance(z: np.ndarray, z_star: np.ndarray | None) -> float | None:
    if z_star is None:
        return None
    return float(np.linalg.norm(z - z_star))
