"""Markdown rendering of the gap CSV (clairvoyant bound vs best policies)."""

from __future__ import annotations

from pathlib import Path

from .io import read_gaps

_HEADER = (
    "| Cache Size | Belady | Best SDC | Best STD | Gap SDC | Gap STD "
    "| Gap STD vs SDC | Gap Reduction |"
)
_RULE = "|---|---|---|---|---|---|---|---|"


def _pct(value: str) -> str:
    if value == "":
        return "-"
    return f"{float(value) * 100:.2f}%"


def render_gap_table(gaps_csv, out_path=None) -> str:
    """Markdown table with percentages to two decimals; returns the text."""
    rows = read_gaps(gaps_csv)
    lines = [_HEADER, _RULE]
    for r in sorted(rows, key=lambda r: (int(r["N"]), r["admission"])):
        lines.append(
            "| {n} | {belady} | {sdc} | {std} | {gs} | {gt} | {gvs} | {red} |".format(
                n=r["N"],
                belady=_pct(r["belady"]),
                sdc=_pct(r["best_sdc"]),
                std=_pct(r["best_std"]),
                gs=_pct(r["gap_sdc"]),
                gt=_pct(r["gap_std"]),
                gvs=_pct(r["gap_std_vs_sdc"]),
                red=_pct(r["gap_reduction"]),
            )
        )
    text = "\n".join(lines) + "\n"
    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text, encoding="utf-8")
    return text
