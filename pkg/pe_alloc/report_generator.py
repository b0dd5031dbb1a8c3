"""
Report Generator for experiment results

Turns result rows into:
- CSV tables (one record per trial, sample or size)
- Plot data (long-format CSV with x, y, series columns)
- Console tables (rich)
- A JSON run summary
"""

import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from . import __version__
from .core.exceptions import ContractViolationError
from .utils import atomic_write_text

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("csv", "plotdata")

# Column order of every report table.
SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "equivalence": ("trial", "iteration", "max_abs_error"),
    "equivariance": ("target", "trials", "failed_trials", "max_abs_error", "passed"),
    "solve": ("iteration", "objective"),
    "loss": ("epoch", "loss"),
    "arms": ("arm", "seed", "mean_ratio"),
    "arm_summary": ("arm", "mean_ratio", "ci_low", "ci_high"),
    "se_ratio": ("K", "mean_ratio", "ci_low", "ci_high"),
    "flops": ("dim", "size", "count"),
    "structure": ("recursion", "set", "set_kind", "template", "processor", "joint_group", "output_function"),
}

# (x column, y columns, series column or None) of the plot data of a schema.
PLOT_AXES: Dict[str, Tuple[str, Tuple[str, ...], Optional[str]]] = {
    "equivalence": ("iteration", ("max_abs_error",), "trial"),
    "solve": ("iteration", ("objective",), None),
    "loss": ("epoch", ("loss",), None),
    "arms": ("seed", ("mean_ratio",), "arm"),
    "se_ratio": ("K", ("mean_ratio", "ci_low", "ci_high"), None),
    "flops": ("size", ("count",), "dim"),
}

FLOAT_FORMAT = "%.12g"


class ReportGenerator:
    """
    Builds report tables from result rows and writes them atomically.
    """

    def __init__(self, out_dir: Union[str, Path], console: Optional[Console] = None):
        self.out_dir = Path(out_dir)
        self.console = console or Console()
        self.written: List[Path] = []

    # ------------------------------------------------------------------
    # Frames
    # ------------------------------------------------------------------

    @staticmethod
    def frame(rows: Sequence[Mapping[str, Any]], schema: str) -> pd.DataFrame:
        """
        Raises:
            ContractViolationError: On an unknown schema, no rows, or rows
                missing one of the schema's columns.
        """
        if schema not in SCHEMAS:
            raise ContractViolationError(
                f"Invalid report schema: {schema!r}. Valid options: {', '.join(SCHEMAS)}"
            )
        if not rows:
            raise ContractViolationError(f"{schema} report has no rows")
        columns = list(SCHEMAS[schema])
        df = pd.DataFrame(list(rows))
        missing = [c for c in columns if c not in df.columns]
        if missing:
            raise ContractViolationError(f"{schema} rows lack columns {missing}")
        return df[columns]

    @staticmethod
    def plot_frame(df: pd.DataFrame, schema: str) -> pd.DataFrame:
        if schema not in PLOT_AXES:
            raise ContractViolationError(f"{schema} reports have no plot data")
        x, ys, series = PLOT_AXES[schema]
        if schema == "equivalence":
            df = df[df["trial"] != "summary"]
        parts = []
        for y in ys:
            part = pd.DataFrame({"x": df[x].to_numpy(), "y": df[y].to_numpy()})
            part["series"] = df[series].astype(str).to_numpy() if series else y
            if series and len(ys) > 1:
                part["series"] = part["series"] + f":{y}"
            parts.append(part)
        return pd.concat(parts, ignore_index=True)[["x", "y", "series"]]

    # ------------------------------------------------------------------
    # Writers
    # ------------------------------------------------------------------

    @staticmethod
    def to_csv_text(df: pd.DataFrame) -> str:
        buffer = io.StringIO()
        df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()

    def emit_report(
        self,
        rows: Sequence[Mapping[str, Any]],
        schema: str,
        name: Optional[str] = None,
        formats: Sequence[str] = ("csv",),
    ) -> List[Path]:
        """
        Write ``rows`` as ``<name>.csv`` and/or ``<name>_plot.csv``.

        Args:
            rows: Result records; one per trial, sample or size.
            schema: Key of ``SCHEMAS`` fixing the column order.
            name: File stem; defaults to the schema name.
            formats: Any of ``csv`` and ``plotdata``.

        Returns:
            Paths written, in format order.
        """
        for fmt in formats:
            if fmt not in REPORT_FORMATS:
                raise ContractViolationError(
                    f"Invalid report format: {fmt!r}. Valid options: {', '.join(REPORT_FORMATS)}"
                )
        df = self.frame(rows, schema)
        stem = name or schema
        paths = []
        for fmt in formats:
            if fmt == "csv":
                path = atomic_write_text(self.out_dir / f"{stem}.csv", self.to_csv_text(df))
            else:
                plot = self.plot_frame(df, schema)
                path = atomic_write_text(self.out_dir / f"{stem}_plot.csv", self.to_csv_text(plot))
            logger.info("wrote %s (%d rows)", path, len(df))
            paths.append(path)
        self.written.extend(paths)
        return paths

    def write_summary(self, summary: Dict[str, Any], name: str = "summary") -> Path:
        data = dict(summary)
        data["metadata"] = {"version": __version__, "generator": "pe-alloc"}
        text = json.dumps(data, indent=2, sort_keys=True, default=_json_default)
        path = atomic_write_text(self.out_dir / f"{name}.json", text + "\n")
        self.written.append(path)
        return path

    # ------------------------------------------------------------------
    # Console
    # ------------------------------------------------------------------

    def console_table(
        self,
        title: str,
        rows: Sequence[Mapping[str, Any]],
        columns: Optional[Sequence[str]] = None,
        limit: int = 20,
    ) -> Table:
        """Print up to ``limit`` rows as a rich table and return it."""
        columns = list(columns or (rows[0].keys() if rows else []))
        table = Table(title=title)
        for column in columns:
            table.add_column(column, justify="right" if _numeric(rows, column) else "left")
        for row in list(rows)[:limit]:
            table.add_row(*(_cell(row.get(c)) for c in columns))
        if len(rows) > limit:
            table.caption = f"{len(rows) - limit} more rows in the CSV"
        self.console.print(table)
        return table


def _numeric(rows: Sequence[Mapping[str, Any]], column: str) -> bool:
    return bool(rows) and all(
        isinstance(r.get(column), (int, float)) and not isinstance(r.get(column), bool) for r in rows
    )


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _json_default(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
