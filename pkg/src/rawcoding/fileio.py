"""Text formats: partitions, matrices and symbol streams."""

from __future__ import annotations

import logging
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baselines import StochasticMatrix
from .coding import Partition, SymbolStream, parse_partition_spec
from .errors import DomainError, InputError

log = logging.getLogger(__name__)


def parse_rational(text: str, where: str = "") -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{where}not a rational number: {text!r}") from None


def _lines(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def read_partition(path) -> Partition:
    """One element per line: ``a/b c/d``; lines sorted and tiling [0, 1)."""
    elems = []
    for lineno, line in _lines(path):
        fields = line.split()
        if len(fields) != 2:
            raise InputError(f"{path}:{lineno}: expected two endpoints, got {len(fields)} fields")
        elems.append(tuple(parse_rational(f, f"{path}:{lineno}: ") for f in fields))
    try:
        return Partition(elems, name=f"@{path}")
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_partition(partition: Partition) -> str:
    return "".join(f"{a} {b}\n" for a, b in partition.elements)


def load_partition(spec: str) -> Partition:
    """``binary``, ``dyadic:K``, ``bridge:k`` or ``@path``."""
    if spec.startswith("@"):
        return read_partition(spec[1:])
    return parse_partition_spec(spec)


def read_matrix(path) -> StochasticMatrix:
    """One row per line, rationals separated by whitespace."""
    rows = [[parse_rational(f, f"{path}:{lineno}: ") for f in line.split()] for lineno, line in _lines(path)]
    return StochasticMatrix(rows)


def write_matrix(matrix: StochasticMatrix) -> str:
    return "".join(" ".join(str(x) for x in row) + "\n" for row in matrix.rows)


def write_stream(stream: SymbolStream | Sequence[int]) -> str:
    symbols = stream.tolist() if isinstance(stream, SymbolStream) else list(stream)
    return "".join(f"{s}\n" for s in symbols)


def read_stream(path, alphabet: int) -> SymbolStream:
    """Whitespace/newline separated unsigned decimals below ``alphabet``."""
    out: list[int] = []
    for lineno, line in _lines(path):
        for tok in line.split():
            if not tok.isdigit():
                raise InputError(f"{path}:{lineno}: not an unsigned decimal: {tok!r}")
            v = int(tok)
            if v >= alphabet:
                raise InputError(f"{path}:{lineno}: symbol {v} outside alphabet of size {alphabet}")
            out.append(v)
    return SymbolStream(alphabet, np.array(out, dtype=np.int64))


def read_streams(paths: Iterable, alphabet: int) -> list[SymbolStream]:
    """Read several stream files, truncating to the shortest with a warning."""
    streams = [read_stream(p, alphabet) for p in paths]
    n = min(len(s) for s in streams)
    if any(len(s) != n for s in streams):
        log.warning("streams have unequal lengths; truncating to %d symbols", n)
        streams = [SymbolStream(alphabet, s.symbols[:n]) for s in streams]
    return streams
