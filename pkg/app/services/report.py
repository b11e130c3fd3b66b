import csv
import io
import json
import logging
from io import BytesIO
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter

from app import __version__
from app.core.errors import SpecParseError

logger = logging.getLogger(__name__)

TOOL_NAME = "finsler-lab"
CSV_COLUMNS = ["suite", "check_id", "body_id", "n", "measured", "bound", "bound_source", "pass"]
FORMATS = ("json", "csv", "xlsx")


def run_metadata(seed: int, samples: int, tol: Optional[float], **extra: Any) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "tool": TOOL_NAME,
        "version": __version__,
        "seed": int(seed),
        "samples": int(samples),
        "tol": None if tol is None else float(tol),
    }
    meta.update({k: v for k, v in extra.items() if v is not None})
    return meta


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def dumps_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, separators=(",", ": "), ensure_ascii=False) + "\n"


def flatten(payload: Any, prefix: str = "") -> List[tuple[str, Any]]:
    """Key paths of a nested payload, list positions as [i]."""
    out: List[tuple[str, Any]] = []
    if isinstance(payload, dict):
        for k in sorted(payload):
            out += flatten(payload[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(payload, (list, tuple)):
        for i, v in enumerate(payload):
            out += flatten(v, f"{prefix}[{i}]")
    else:
        out.append((prefix, payload))
    return out


def _meta_lines(meta: Dict[str, Any]) -> str:
    return "".join(f"# {k}: {_cell(v)}\n" for k, v in sorted(meta.items()))


def checks_to_csv(rows: Sequence[Dict[str, Any]], meta: Dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def table_to_csv(table: Sequence[Dict[str, Any]], meta: Dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    cols: List[str] = []
    for entry in table:
        cols += [k for k in entry if k not in cols]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for entry in table:
        w.writerow([_cell(entry.get(c)) for c in cols])
    return buf.getvalue()


def payload_to_csv(payload: Any, meta: Dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in flatten(payload):
        w.writerow([k, _cell(v)])
    return buf.getvalue()


def _style_header(ws, header_row: int = 1) -> None:
    fill = PatternFill("solid", fgColor="111827")
    font = Font(bold=True, color="FFFFFF")
    for cell in ws[header_row]:
        cell.fill = fill
        cell.font = font
        cell.alignment = Alignment(vertical="top", wrap_text=True)


def _autosize(ws, max_width: int = 60) -> None:
    widths: dict[int, int] = {}
    for row in ws.iter_rows(values_only=True):
        for i, v in enumerate(row, start=1):
            if v is None:
                continue
            widths[i] = max(widths.get(i, 0), min(len(str(v)) + 2, max_width))
    for i, w in widths.items():
        ws.column_dimensions[get_column_letter(i)].width = w


def _table_sheet(wb: Workbook, title: str, headers: List[str], rows: Iterable[List[Any]]) -> None:
    ws = wb.create_sheet(title[:31])
    ws.append(headers)
    _style_header(ws)
    ws.freeze_panes = "A2"
    ws.auto_filter.ref = f"A1:{get_column_letter(len(headers))}1"
    for r in rows:
        ws.append(r)
    _autosize(ws)


def to_xlsx(
    meta: Dict[str, Any],
    rows: Optional[Sequence[Dict[str, Any]]] = None,
    payload: Any = None,
    tables: Optional[Dict[str, List[Dict[str, Any]]]] = None,
) -> bytes:
    wb = Workbook()
    wb.remove(wb.active)  # type: ignore

    ws_meta = wb.create_sheet("meta")
    for k, v in sorted(meta.items()):
        ws_meta.append([k, _cell(v)])
    _autosize(ws_meta)

    if rows is not None:
        _table_sheet(wb, "checks", CSV_COLUMNS, ([r[c] for c in CSV_COLUMNS] for r in rows))
    if payload is not None:
        _table_sheet(wb, "result", ["key", "value"], ([k, v if isinstance(v, (int, float, str)) else _cell(v)] for k, v in flatten(payload)))
    for name, table in sorted((tables or {}).items()):
        cols: List[str] = []
        for entry in table:
            cols += [k for k in entry if k not in cols]
        _table_sheet(wb, name, cols, ([entry.get(c) for c in cols] for entry in table))

    buf = BytesIO()
    wb.save(buf)
    data = buf.getvalue()
    buf.close()
    return data


def _write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, encoding="utf-8", newline="")
    logger.info("wrote %s", path)


def render_result(payload: Any, meta: Dict[str, Any], fmt: str) -> str | bytes:
    if fmt == "json":
        return dumps_json({"meta": meta, "result": payload})
    if fmt == "csv":
        return payload_to_csv(payload, meta)
    if fmt == "xlsx":
        return to_xlsx(meta, payload=payload)
    raise SpecParseError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def render_suite(suite_payload: Dict[str, Any], meta: Dict[str, Any], fmt: str) -> str | bytes:
    rows = suite_payload["rows"]
    if fmt == "json":
        return dumps_json({"meta": meta, "result": suite_payload})
    if fmt == "csv":
        return checks_to_csv(rows, meta)
    if fmt == "xlsx":
        return to_xlsx(meta, rows=rows, tables=suite_payload.get("tables"))
    raise SpecParseError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def write_result(path: str | Path, payload: Any, meta: Dict[str, Any], fmt: str) -> None:
    _write(Path(path), render_result(payload, meta, fmt))


def write_suite(path: str | Path, suite_payload: Dict[str, Any], meta: Dict[str, Any], fmt: str) -> None:
    """Suite report; in csv format each plot table goes to a sibling <stem>.<table>.csv."""
    p = Path(path)
    _write(p, render_suite(suite_payload, meta, fmt))
    if fmt == "csv":
        for name, table in sorted((suite_payload.get("tables") or {}).items()):
            _write(p.with_name(f"{p.stem}.{name}.csv"), table_to_csv(table, meta))
