"""Parsing, validation and filtering of two-day championship result files.

File format is a line-oriented CSV, one skater per line::

    #event,<venue>,<year>
    name,lane1,t100_1,t500_1,status1,lane2,t100_2,t500_2,status2[,note]

with lane in {i, o}, times given in seconds with exactly two fractional
digits (or empty when missing), and status one of ok, fell, dq, dnf, dns,
wd.  Times are stored internally as integer centiseconds so ingestion is
exact; estimation code converts to float.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field


class ParseError(ValueError):
    """Raised for malformed input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RunStatus(enum.Enum):
    OK = "ok"
    FELL = "fell"
    DISQUALIFIED = "dq"
    DID_NOT_FINISH = "dnf"
    DID_NOT_START = "dns"
    WITHDRAWN = "wd"


class Lane(enum.Enum):
    """Starting lane; an inner start means the last lap is skated outer."""

    INNER_START = "i"
    OUTER_START = "o"

    @property
    def opposite(self) -> "Lane":
        return Lane.OUTER_START if self is Lane.INNER_START else Lane.INNER_START


@dataclass(frozen=True)
class Run:
    """One 500 m run: starting lane, 100 m passing time, finishing time."""

    lane: Lane
    t100_cs: int | None
    t500_cs: int | None
    status: RunStatus

    @property
    def t100(self) -> float | None:
        return None if self.t100_cs is None else self.t100_cs / 100.0

    @property
    def t500(self) -> float | None:
        return None if self.t500_cs is None else self.t500_cs / 100.0

    @property
    def complete(self) -> bool:
        return (self.status is RunStatus.OK and self.t100_cs is not None
                and self.t500_cs is not None)


@dataclass
class SkaterPair:
    """One skater's two-day record."""

    name: str
    day1: Run
    day2: Run
    note: str = ""
    declared_outlier: bool = False

    @property
    def usable(self) -> bool:
        return self.day1.complete and self.day2.complete

    @property
    def lanes_alternate(self) -> bool:
        return self.day1.lane is not self.day2.lane


@dataclass
class EventDataset:
    """One championship: metadata plus all skater pairs, in entry order."""

    venue: str
    year: int
    skaters: list[SkaterPair] = field(default_factory=list)

    def __post_init__(self) -> None:
        names = [s.name for s in self.skaters]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ParseError(f"duplicate skater names: {sorted(dupes)}")

    @property
    def label(self) -> str:
        return f"{self.year} {self.venue}"


@dataclass(frozen=True)
class PairObs:
    """A usable pair reduced to the quantities estimation needs.

    ``w`` is the lane indicator: +1/2 for an outer start on day 1 (last
    outer lane on day 2), -1/2 for an inner start on day 1.
    """

    name: str
    x1: float
    y1: float
    x2: float
    y2: float
    w: float
    skater: SkaterPair | None = None


_STATUS_TOKENS = {s.value: s for s in RunStatus}
_LANE_TOKENS = {l.value: l for l in Lane}


def _parse_time(token: str, line: int) -> int | None:
    token = token.strip()
    if not token:
        return None
    whole, dot, frac = token.partition(".")
    if not dot or len(frac) != 2 or not whole.isdigit() or not frac.isdigit():
        raise ParseError(f"time {token!r} is not a centisecond multiple", line)
    return int(whole) * 100 + int(frac)


def _parse_run(fields: list[str], line: int) -> Run:
    lane_tok, t100_tok, t500_tok, status_tok = fields
    lane = _LANE_TOKENS.get(lane_tok.strip())
    if lane is None:
        raise ParseError(f"lane token {lane_tok!r} outside {{i, o}}", line)
    status = _STATUS_TOKENS.get(status_tok.strip())
    if status is None:
        raise ParseError(f"unknown status {status_tok!r}", line)
    t100 = _parse_time(t100_tok, line)
    t500 = _parse_time(t500_tok, line)
    if status is RunStatus.OK:
        if t100 is None or t500 is None:
            raise ParseError("status ok requires both times", line)
        if t500 <= t100:
            raise ParseError("500 m time must exceed 100 m time", line)
    elif t500 is not None:
        raise ParseError(f"status {status.value!r} cannot carry a 500 m time", line)
    return Run(lane, t100, t500, status)


def parse_event(source: str | io.TextIOBase, format: str = "csv") -> EventDataset:
    """Parse a championship result file into an EventDataset.

    Row order, lanes, statuses and times are preserved exactly.
    """
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}")
    text = source.read() if hasattr(source, "read") else source
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#event,"):
        raise ParseError("missing '#event,<venue>,<year>' header", 1)
    header = lines[0].split(",")
    if len(header) != 3:
        raise ParseError("header must be '#event,<venue>,<year>'", 1)
    try:
        year = int(header[2])
    except ValueError:
        raise ParseError(f"year {header[2]!r} is not an integer", 1) from None

    skaters = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = raw.split(",")
        if len(fields) not in (9, 10):
            raise ParseError(f"expected 9 or 10 comma-separated fields, got {len(fields)}",
                             lineno)
        name = fields[0].strip()
        if not name:
            raise ParseError("empty skater name", lineno)
        day1 = _parse_run(fields[1:5], lineno)
        day2 = _parse_run(fields[5:9], lineno)
        note = fields[9].strip() if len(fields) == 10 else ""
        skaters.append(SkaterPair(name, day1, day2, note))
    try:
        return EventDataset(header[1], year, skaters)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_event(ds: EventDataset) -> str:
    """Inverse of parse_event (byte-exact round trip for canonical files)."""
    def fmt(cs: int | None) -> str:
        return "" if cs is None else f"{cs // 100}.{cs % 100:02d}"

    lines = [f"#event,{ds.venue},{ds.year}"]
    for s in ds.skaters:
        row = [s.name]
        for run in (s.day1, s.day2):
            row += [run.lane.value, fmt(run.t100_cs), fmt(run.t500_cs), run.status.value]
        if s.note:
            row.append(s.note)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def lane_indicator(pair: SkaterPair) -> float:
    """+1/2 for an outer start on day 1, -1/2 for an inner start."""
    return 0.5 if pair.day1.lane is Lane.OUTER_START else -0.5


def usable_pairs(ds: EventDataset, lane_policy: str = "warn_day1",
                 ) -> tuple[list[PairObs], list[str]]:
    """Filter to pairs with both runs complete, attaching lane indicators.

    Rows where the skater did not alternate lanes are handled per
    ``lane_policy``: under ``warn_day1`` they are kept with ``w`` taken
    from the day-1 lane, under ``strict`` they are dropped.  Either way a
    warning is recorded.
    """
    if lane_policy not in ("strict", "warn_day1"):
        raise ValueError(f"unknown lane policy {lane_policy!r}")
    out: list[PairObs] = []
    warnings: list[str] = []
    for s in ds.skaters:
        if not s.usable:
            continue
        if not s.lanes_alternate:
            warnings.append(
                f"{s.name}: same starting lane on both days"
                + (" (kept, w from day 1)" if lane_policy == "warn_day1" else " (dropped)"))
            if lane_policy == "strict":
                continue
        out.append(PairObs(s.name, s.day1.t100, s.day1.t500,
                           s.day2.t100, s.day2.t500, lane_indicator(s), s))
    return out, warnings


def load_event(path) -> EventDataset:
    """Read and parse an event file from disk."""
    with open(path, encoding="utf-8") as fh:
        return parse_event(fh.read())
