"""
CSV and SVG emission. Every file starts with a provenance header recording the
library version, the configuration hash and the seed.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from jinja2 import Environment, FileSystemLoader

from . import __version__

_LOG = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent / 'templates'


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    seed: int
    command: str

    def header(self) -> str:
        return (f'# triradical {__version__}\n'
                f'# command {self.command}\n'
                f'# config_hash {self.config_hash}\n'
                f'# seed {self.seed}\n')


def format_cell(value: object) -> str:
    """Floats carry 17 significant digits; everything else is written as is"""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f'{value:.17g}'
    return str(value)


def write_text(fpath: Path, content: str) -> None:
    """Replace ``fpath`` atomically through a temporary sibling"""
    fpath.parent.mkdir(exist_ok=True, parents=True)
    tmp = fpath.with_name(fpath.name + '.tmp')
    if tmp.exists():
        tmp.unlink()
    tmp.write_text(content, encoding='utf-8', newline='')
    tmp.replace(fpath)


def render_csv(prov: Provenance, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    buf.write(prov.header())
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f'Row has {len(row)} cells for {len(columns)} columns')
        writer.writerow([format_cell(c) for c in row])
    return buf.getvalue()


def write_csv(fpath: Path, prov: Provenance, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    write_text(fpath, render_csv(prov, columns, rows))
    _LOG.info('Wrote %s', fpath)
    return fpath


def read_csv(fpath: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Header comments as a dict, then the data rows keyed by column"""
    meta: dict[str, str] = {}
    lines = []
    for line in fpath.read_text(encoding='utf-8').splitlines():
        if line.startswith('# '):
            key, _, value = line[2:].partition(' ')
            meta[key] = value
        else:
            lines.append(line)
    return meta, list(csv.DictReader(lines))


@dataclass(frozen=True)
class Series:
    label: str
    color: str
    points: Sequence[tuple[float, float]]


_PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b')


def palette(i: int) -> str:
    return _PALETTE[i % len(_PALETTE)]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def render_scatter(prov: Provenance,
                   title: str,
                   x_label: str,
                   y_label: str,
                   series: Sequence[Series],
                   width: int = 640,
                   height: int = 480) -> str:
    """A self-contained SVG scatter plot with axes and a legend, provenance in a leading comment"""
    xs = [x for s in series for x, _ in s.points]
    ys = [y for s in series for _, y in s.points]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x_hi - x_lo < 1e-15:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi - y_lo < 1e-15:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    margin = {'left': 80, 'right': 170, 'top': 40, 'bottom': 60}
    plot_w = width - margin['left'] - margin['right']
    plot_h = height - margin['top'] - margin['bottom']

    def px(x: float) -> float:
        return margin['left'] + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return margin['top'] + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)), autoescape=True, keep_trailing_newline=True)
    tmpl = env.get_template('scatter.svg.j2')
    return tmpl.render(
        provenance=prov.header(),
        title=title,
        x_label=x_label,
        y_label=y_label,
        width=width,
        height=height,
        margin=margin,
        plot_w=plot_w,
        plot_h=plot_h,
        x_ticks=[(px(t), f'{t:.3g}') for t in _ticks(x_lo, x_hi)],
        y_ticks=[(py(t), f'{t:.3g}') for t in _ticks(y_lo, y_hi)],
        series=[{
            'label': s.label,
            'color': s.color,
            'points': [(px(x), py(y)) for x, y in s.points],
        } for s in series],
    )


def write_scatter(fpath: Path, prov: Provenance, *args, **kwargs) -> Path:
    write_text(fpath, render_scatter(prov, *args, **kwargs))
    _LOG.info('Wrote %s', fpath)
    return fpath
