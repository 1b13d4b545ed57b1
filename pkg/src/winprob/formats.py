"""Reading and writing benchmark ranking tables.

Two CSV dialects are supported:

``matrix``
    Header ``dataset,<name1>,...,<namem>``; each row holds the 1-based rank
    of every algorithm on one dataset and must be a permutation of ``1..m``.

``topk``
    Header ``dataset,rank1,...,rankK``; each row lists algorithm names from
    best to worst. Trailing cells may be empty for shallower rows. The
    roster is the names encountered, or the contents of a roster file.

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import io
import sys
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .errors import RankingError
from .ranking import BenchmarkSample

FORMATS = ("matrix", "topk")


def _read_text(path) -> str:
    if str(path) == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise RankingError(f"cannot read {path}: {exc.strerror}") from exc


def _rows(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = next(csv.reader([line]))
        out.append((lineno, [c.strip() for c in cells]))
    return out


def read_roster(path) -> list[str]:
    names = [line.strip() for line in _read_text(path).splitlines()]
    names = [n for n in names if n and not n.startswith("#")]
    if len(set(names)) != len(names):
        raise RankingError("roster file lists a name twice")
    return names


def parse_rankings_csv(path, format: str = "matrix", roster: Sequence[str] | None = None,
                       extend_roster: bool = False) -> BenchmarkSample:
    """Parse a ranking table into a :class:`BenchmarkSample`.

    Args:
        path: File path, or ``"-"`` for standard input.
        format: ``"matrix"`` or ``"topk"``.
        roster: For ``topk``, the full list of algorithm names (including
            ones never ranked). Names outside it are errors unless
            ``extend_roster`` is set, in which case they are appended.

    Raises:
        RankingError: Empty file, ragged row, tie or duplicate, unknown name,
            or a non-integer rank; the message carries the line number.
    """
    return parse_rankings_text(_read_text(path), format, roster, extend_roster)


def parse_rankings_text(text: str, format: str = "matrix", roster: Sequence[str] | None = None,
                        extend_roster: bool = False) -> BenchmarkSample:
    if format not in FORMATS:
        raise RankingError(f"unknown format {format!r}; choose from {FORMATS}")
    rows = _rows(text)
    if not rows:
        raise RankingError("empty file")
    (head_line, header), body = rows[0], rows[1:]
    if not body:
        raise RankingError("no data rows", line=head_line)
    if format == "matrix":
        return _parse_matrix(header, body, head_line)
    return _parse_topk(header, body, head_line, roster, extend_roster)


def _parse_matrix(header, body, head_line) -> BenchmarkSample:
    names = header[1:]
    m = len(names)
    if m < 2:
        raise RankingError("need at least two algorithm columns", line=head_line)
    if len(set(names)) != m or any(not s for s in names):
        raise RankingError("algorithm names must be distinct and non-empty", line=head_line)
    orders = np.empty((len(body), m), dtype=np.int64)
    for i, (lineno, cells) in enumerate(body):
        if len(cells) != m + 1:
            raise RankingError(f"expected {m + 1} cells, found {len(cells)}", line=lineno)
        try:
            ranks = [int(c) for c in cells[1:]]
        except ValueError:
            raise RankingError(f"ranks must be integers, got {cells[1:]}", line=lineno) from None
        if len(set(ranks)) != m:
            dup = sorted({r for r in ranks if ranks.count(r) > 1})
            raise RankingError(f"tied or duplicate ranks {dup}; break ties before loading",
                               line=lineno)
        if sorted(ranks) != list(range(1, m + 1)):
            raise RankingError(f"ranks must be a permutation of 1..{m}", line=lineno)
        orders[i, np.array(ranks) - 1] = np.arange(m)
    return BenchmarkSample.from_orders(orders, names)


def _parse_topk(header, body, head_line, roster, extend_roster) -> BenchmarkSample:
    K = len(header) - 1
    if K < 1:
        raise RankingError("need at least one rank column", line=head_line)
    names = list(roster) if roster is not None else []
    index = {name: i for i, name in enumerate(names)}
    rows = []
    for lineno, cells in body:
        if len(cells) != K + 1:
            raise RankingError(f"expected {K + 1} cells, found {len(cells)}", line=lineno)
        listed = cells[1:]
        while listed and not listed[-1]:
            listed.pop()
        if not listed:
            raise RankingError("row ranks no algorithm", line=lineno)
        if any(not c for c in listed):
            raise RankingError("empty cell before a ranked algorithm", line=lineno)
        if len(set(listed)) != len(listed):
            raise RankingError(f"algorithm listed twice in one row: {listed}", line=lineno)
        order = []
        for name in listed:
            if name not in index:
                if roster is not None and not extend_roster:
                    raise RankingError(f"unknown algorithm {name!r}", line=lineno)
                index[name] = len(names)
                names.append(name)
            order.append(index[name])
        rows.append(order)
    return BenchmarkSample.from_observations(rows, names=names)


def format_matrix_csv(sample: BenchmarkSample, labels: Iterable[str] | None = None,
                      header: str | None = None) -> str:
    """Serialize a full-ranking sample in the ``matrix`` dialect."""
    ranks = sample.to_rank_matrix()
    labels = list(labels) if labels is not None else [f"d{i + 1}" for i in range(sample.n)]
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", *sample.names])
    for label, row in zip(labels, ranks):
        w.writerow([label, *row.tolist()])
    return buf.getvalue()


def format_topk_csv(sample: BenchmarkSample, labels: Iterable[str] | None = None) -> str:
    """Serialize any sample in the ``topk`` dialect."""
    D = int(sample.depths.max())
    labels = list(labels) if labels is not None else [f"d{i + 1}" for i in range(sample.n)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", *[f"rank{j + 1}" for j in range(D)]])
    for label, row, d in zip(labels, sample.orders, sample.depths):
        cells = [sample.names[a] for a in row[:d]] + [""] * (D - d)
        w.writerow([label, *cells])
    return buf.getvalue()
