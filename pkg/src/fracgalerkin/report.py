"""CSV and JSON rendering of convergence reports."""

from __future__ import annotations

import json
import sys
from collections.abc import Sequence
from pathlib import Path

from fracgalerkin.error_analysis import ConvergenceReport

CSV_HEADER = "k,h,N,err_l2,rate_l2,err_hs2,rate_hs2,newton_iters"


def fmt_error(e: float) -> str:
    return f"{e:.2e}"


def fmt_rate(r: float | None) -> str:
    return "" if r is None else f"{r:.3f}"


def _block(report: ConvergenceReport) -> list[str]:
    params = "".join(f" {k}={v:g}" for k, v in sorted(report.params.items()))
    lines = [f"# problem={report.problem} kind={report.kind} s={report.s:.6g}{params}", CSV_HEADER]
    r2, rh = report.rates_l2, report.rates_hs2
    for row, a, b in zip(report.rows, r2, rh):
        lines.append(
            ",".join(
                [
                    str(row.k),
                    f"{row.h:.6g}",
                    str(row.N),
                    fmt_error(row.err_l2),
                    fmt_rate(a),
                    fmt_error(row.err_hs2),
                    fmt_rate(b),
                    str(row.newton_iters),
                ]
            )
        )
        if not row.converged:
            lines.append(f"# k={row.k}: Newton iteration did not converge")
    if len(report.rows) >= 2:
        theo = "n/a" if report.theoretical_rate is None else f"{report.theoretical_rate:.3f}"
        lines.append(f"# rate (theoretical): l2 {fmt_rate(r2[-1])}, hs2 {fmt_rate(rh[-1])} ({theo})")
    return lines


def emit_csv(reports: Sequence[ConvergenceReport]) -> str:
    """One block per report: a ``#`` comment line, the header, rows and a summary line."""
    if not reports:
        raise ValueError("nothing to emit: no reports")
    out: list[str] = []
    for i, rep in enumerate(reports):
        if i:
            out.append("")
        out.extend(_block(rep))
    return "\n".join(out) + "\n"


def emit_json(reports: Sequence[ConvergenceReport], config: dict | None = None) -> str:
    if not reports:
        raise ValueError("nothing to emit: no reports")
    doc = {"config": config or {}, "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def parse_json(text: str) -> list[ConvergenceReport]:
    return [ConvergenceReport.from_dict(d) for d in json.loads(text)["reports"]]


def emit_table(
    reports: Sequence[ConvergenceReport],
    fmt: str = "csv",
    destination: str | Path | None = None,
    config: dict | None = None,
) -> str:
    """Render ``reports`` and write them to ``destination`` (standard output if ``None``)."""
    if fmt == "csv":
        text = emit_csv(reports)
    elif fmt == "json":
        text = emit_json(reports, config)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if destination is None or str(destination) == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(destination).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {str(destination)!r}: {exc.strerror}") from exc
    return text
