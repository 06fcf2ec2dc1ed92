"""Dataset loaders and AS classification.

Input formats:

  links       ``<ASN>|<ASN>|<rel>``, rel -1 (first AS is provider of the
              second) or 0 (peer). Extra trailing fields are ignored.
  frequency   ``<ASN>|<ASN>|<days>``
  countries   ``ASN,CC`` (ISO-3166 alpha-2)
  AS paths    space separated ASNs, collector side first

Lines starting with ``#`` and blank lines are skipped everywhere.  Every
loader accepts a path, an open text or binary stream, or any iterable of
lines, and every loader has a ``dump_*`` counterpart that it can re-read.
"""

from __future__ import annotations

import enum
import io
import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Mapping, Sequence, Union

log = logging.getLogger(__name__)

MAX_ASN = 4294967295
DEFAULT_WINDOW_LENGTH = 31
DEFAULT_MIN_DAYS = 20

Source = Union[str, os.PathLike, IO, Iterable]

_CC_RE = re.compile(r"^[A-Z]{2}$")


class DatasetError(ValueError):
    """A dataset file violates its format or an invariant."""

    def __init__(self, message: str, source: str | None = None, lineno: int | None = None):
        where = ""
        if source is not None:
            where += f"{source}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)
        self.source = source
        self.lineno = lineno


class Relation(str, enum.Enum):
    PROVIDER_CUSTOMER = "provider-customer"
    PEER = "peer"


class AsClass(str, enum.Enum):
    STUB = "stub"
    EDGE_PROVIDER = "edge_provider"
    CARRIER = "carrier"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RawLink:
    """One inter-AS link. For PROVIDER_CUSTOMER, ``a`` is the provider."""

    a: int
    b: int
    relation: Relation
    days_seen: int

    def __post_init__(self):
        check_asn(self.a)
        check_asn(self.b)
        if self.a == self.b:
            raise DatasetError(f"self-loop link on AS{self.a}")
        if self.days_seen < 0:
            raise DatasetError(f"negative days_seen for link {self.a}|{self.b}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


def check_asn(value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DatasetError(f"ASN must be an integer, got {value!r}")
    if not 0 < value <= MAX_ASN:
        raise DatasetError(f"ASN out of range: {value}")
    return value


def _parse_asn(token: str, name: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise DatasetError(f"malformed ASN {token!r}", name, lineno) from None
    if not 0 < value <= MAX_ASN:
        raise DatasetError(f"ASN out of range: {value}", name, lineno)
    return value


def _source_name(src) -> str:
    if isinstance(src, (str, os.PathLike)):
        return os.fspath(src)
    return getattr(src, "name", "<stream>")


def _iter_lines(src: Source) -> Iterator[tuple[int, str]]:
    """Yield (lineno, stripped line), skipping blanks and comments."""
    if isinstance(src, (str, os.PathLike)):
        with open(src, "rb") as fh:
            yield from _iter_lines(fh)
        return
    if isinstance(src, (bytes, bytearray)):
        src = io.BytesIO(src)
    for lineno, raw in enumerate(src, 1):
        line = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def load_frequencies(freq_file: Source) -> dict[tuple[int, int], int]:
    """Read ``a|b|days`` lines into a map keyed by the sorted AS pair."""
    name = _source_name(freq_file)
    freq: dict[tuple[int, int], int] = {}
    for lineno, line in _iter_lines(freq_file):
        fields = line.split("|")
        if len(fields) < 3:
            raise DatasetError("expected '<ASN>|<ASN>|<days>'", name, lineno)
        a = _parse_asn(fields[0], name, lineno)
        b = _parse_asn(fields[1], name, lineno)
        try:
            days = int(fields[2])
        except ValueError:
            raise DatasetError(f"malformed day count {fields[2]!r}", name, lineno) from None
        if days < 0:
            raise DatasetError(f"negative day count {days}", name, lineno)
        key = (a, b) if a < b else (b, a)
        if freq.get(key, days) != days:
            raise DatasetError(f"conflicting frequencies for {key[0]}|{key[1]}", name, lineno)
        freq[key] = days
    return freq


def load_links(
    link_file: Source,
    freq_file: Source | None = None,
    window_length: int = DEFAULT_WINDOW_LENGTH,
) -> list[RawLink]:
    """Parse the relationship file and attach observation counts.

    Links without a frequency entry get ``days_seen = window_length``.
    Repeated identical lines are merged; a pair listed with two different
    relationships is an error, as is a sibling (code 2) or unknown code.
    """
    name = _source_name(link_file)
    freq = load_frequencies(freq_file) if freq_file is not None else {}
    links: dict[tuple[int, int], RawLink] = {}
    for lineno, line in _iter_lines(link_file):
        fields = line.split("|")
        if len(fields) < 3:
            raise DatasetError("expected '<ASN>|<ASN>|<rel>'", name, lineno)
        a = _parse_asn(fields[0], name, lineno)
        b = _parse_asn(fields[1], name, lineno)
        if a == b:
            raise DatasetError(f"self-loop link on AS{a}", name, lineno)
        code = fields[2].strip()
        if code == "-1":
            relation = Relation.PROVIDER_CUSTOMER
        elif code == "0":
            relation = Relation.PEER
            if a > b:
                a, b = b, a
        else:
            raise DatasetError(f"unsupported relationship code {code!r}", name, lineno)
        key = (a, b) if a < b else (b, a)
        days = freq.get(key, window_length)
        if days > window_length:
            raise DatasetError(
                f"link {a}|{b} seen {days} days, longer than the {window_length}-day window",
                name, lineno)
        link = RawLink(a, b, relation, days)
        prev = links.get(key)
        if prev is not None and prev != link:
            raise DatasetError(f"conflicting relationship for {key[0]}|{key[1]}", name, lineno)
        links[key] = link
    return list(links.values())


def filter_stable(links: Sequence[RawLink], min_days: int = DEFAULT_MIN_DAYS) -> list[RawLink]:
    """Keep links seen on strictly more than ``min_days`` days."""
    if min_days < 0:
        raise ValueError("min_days must be >= 0")
    return [link for link in links if link.days_seen > min_days]


def load_country_map(file: Source) -> dict[int, str]:
    name = _source_name(file)
    mapping: dict[int, str] = {}
    for lineno, line in _iter_lines(file):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise DatasetError("expected 'ASN,CC'", name, lineno)
        asn = _parse_asn(fields[0], name, lineno)
        cc = fields[1]
        if not _CC_RE.match(cc):
            raise DatasetError(f"malformed country code {cc!r}", name, lineno)
        if mapping.get(asn, cc) != cc:
            raise DatasetError(f"AS{asn} mapped to both {mapping[asn]} and {cc}", name, lineno)
        mapping[asn] = cc
    return mapping


def load_as_paths(file: Source) -> list[tuple[int, ...]]:
    """Read the AS-path corpus, collapsing prepending.

    Lines holding AS sets (``{...}``) cannot be positioned reliably and
    are skipped with a count in the log.
    """
    name = _source_name(file)
    paths = []
    skipped = 0
    for lineno, line in _iter_lines(file):
        if "{" in line or "}" in line:
            skipped += 1
            continue
        path = [_parse_asn(tok, name, lineno) for tok in line.split()]
        paths.append(collapse_prepending(path))
    if skipped:
        log.info("%s: skipped %d AS paths containing AS sets", name, skipped)
    return paths


def collapse_prepending(path: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for asn in path:
        if not out or out[-1] != asn:
            out.append(asn)
    return tuple(out)


def classify(
    as_paths: Iterable[Sequence[int]],
    links: Iterable[RawLink] = (),
) -> dict[int, AsClass]:
    """Classify ASes by their deepest position counted from the origin.

    Position 1 is the origin.  An AS never seen deeper than 1 is a stub,
    one whose deepest appearance is 2 or 3 is an edge provider, anything
    deeper is a carrier.  ASes only known from ``links`` are unknown.
    """
    deepest: dict[int, int] = {}
    empty = True
    for path in as_paths:
        path = collapse_prepending(path)
        empty = False
        n = len(path)
        for i, asn in enumerate(path):
            pos = n - i
            if pos > deepest.get(asn, 0):
                deepest[asn] = pos
    if empty:
        raise ValueError("classify needs a non-empty AS-path corpus")

    classes: dict[int, AsClass] = {}
    for asn, pos in deepest.items():
        if pos == 1:
            classes[asn] = AsClass.STUB
        elif pos <= 3:
            classes[asn] = AsClass.EDGE_PROVIDER
        else:
            classes[asn] = AsClass.CARRIER
    for link in links:
        classes.setdefault(link.a, AsClass.UNKNOWN)
        classes.setdefault(link.b, AsClass.UNKNOWN)
    return classes


def class_histogram(classes: Mapping[int, AsClass]) -> dict[str, int]:
    counts: dict[str, int] = defaultdict(int)
    for cls in classes.values():
        counts[cls.value] += 1
    return {cls.value: counts.get(cls.value, 0) for cls in AsClass}


# -- serialization ----------------------------------------------------------

def dump_links(links: Iterable[RawLink], fh: IO[str]) -> None:
    for link in links:
        code = -1 if link.relation is Relation.PROVIDER_CUSTOMER else 0
        fh.write(f"{link.a}|{link.b}|{code}\n")


def dump_frequencies(links: Iterable[RawLink], fh: IO[str]) -> None:
    for link in links:
        fh.write(f"{link.a}|{link.b}|{link.days_seen}\n")


def dump_country_map(mapping: Mapping[int, str], fh: IO[str]) -> None:
    for asn in sorted(mapping):
        fh.write(f"{asn},{mapping[asn]}\n")


def dump_as_paths(paths: Iterable[Sequence[int]], fh: IO[str]) -> None:
    for path in paths:
        fh.write(" ".join(map(str, path)) + "\n")
