"""Network description, event schedules and the tabular case-file format.

A case lives in a directory holding ``bus.csv``, ``branch.csv`` and
``gen.csv`` (plus an optional ``meta.csv`` with ``key,value`` rows such as
``base_mva``). Files carry engineering units (MW, MVAr, degrees); the
in-memory objects are per-unit on the system base with angles in radians.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

BUS_KINDS = ("slack", "PV", "PQ")
EVENT_KINDS = ("fault_on_line", "clear_and_open_line", "open_line")

BUS_HEADER = ["id", "kind", "v_mag", "v_ang_deg", "p_load_mw", "q_load_mvar", "g_sh", "b_sh"]
BRANCH_HEADER = ["id", "from", "to", "r_pu", "x_pu", "b_ch_pu", "status"]
GEN_HEADER = ["label", "bus", "p_mw", "v_set", "h_s", "d_pu", "xdp_pu", "mva"]
EVENT_HEADER = ["t_s", "kind", "branch_id"]


class CaseError(ValueError):
    """Base class for problems with case or event input."""


class CaseParseError(CaseError):
    """Malformed file content; carries the location of the offending field."""

    def __init__(self, path, line: int, column: int, message: str):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{self.path}:{line}:{column}: {message}")


class CaseValidationError(CaseError):
    """A parsed case or schedule violates a structural invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str
    v_mag: float = 1.0
    v_ang: float = 0.0
    p_load: float = 0.0
    q_load: float = 0.0
    g_sh: float = 0.0
    b_sh: float = 0.0


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_ch: float = 0.0
    status: bool = True

    @property
    def ends(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    p_set: float
    v_set: float
    h: float
    xd_p: float
    d: float = 0.0
    mva_base: float = 100.0


@dataclass(frozen=True)
class GridCase:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    f_hz: float = 60.0
    _bus_pos: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "_bus_pos", {b.id: i for i, b in enumerate(self.buses)})

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus_index(self, bus_id: int) -> int:
        """Row/column position of ``bus_id`` in every bus-indexed array."""
        return self._bus_pos[bus_id]

    def branch(self, branch_id: int) -> Branch:
        for br in self.branches:
            if br.id == branch_id:
                return br
        raise KeyError(f"no branch with id {branch_id}")

    def find_branch(self, a: int, b: int) -> Branch:
        """The branch joining buses ``a`` and ``b`` (either orientation)."""
        for br in self.branches:
            if {br.from_bus, br.to_bus} == {a, b}:
                return br
        raise KeyError(f"no branch between buses {a} and {b}")

    def with_branch_status(self, branch_ids: Iterable[int], status: bool) -> "GridCase":
        """Copy of the case with the given branches switched in or out."""
        ids = set(branch_ids)
        missing = ids - {br.id for br in self.branches}
        if missing:
            raise KeyError(f"unknown branch ids {sorted(missing)}")
        branches = tuple(
            dataclasses.replace(br, status=status) if br.id in ids else br for br in self.branches
        )
        return dataclasses.replace(self, branches=branches)


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    branch: int


@dataclass(frozen=True)
class EventSchedule:
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def extended(self, more: Iterable[Event]) -> "EventSchedule":
        """Schedule with extra events merged in, keeping time order stable."""
        merged = sorted(list(self.events) + list(more), key=lambda e: e.time)
        return EventSchedule(merged)


def topology_at(case: GridCase, events: EventSchedule, t: float | None = None) -> GridCase:
    """``case`` with every branch opened by an event at or before ``t`` taken out.

    With ``t`` None all opening events count.
    """
    opened = sorted({ev.branch for ev in events
                     if ev.kind != "fault_on_line" and (t is None or ev.time <= t)})
    return case.with_branch_status(opened, False) if opened else case


# ---------------------------------------------------------------------------
# validation

def validate_case(case: GridCase) -> GridCase:
    """Check every structural invariant; raise CaseValidationError naming the record."""
    seen = set()
    for bus in case.buses:
        if bus.id <= 0:
            raise CaseValidationError(f"bus {bus.id}: id must be a positive integer")
        if bus.id in seen:
            raise CaseValidationError(f"bus {bus.id}: duplicate bus id")
        seen.add(bus.id)
        if bus.kind not in BUS_KINDS:
            raise CaseValidationError(f"bus {bus.id}: unknown bus kind {bus.kind!r}")
        if bus.kind in ("slack", "PV") and not bus.v_mag > 0:
            raise CaseValidationError(f"bus {bus.id}: voltage setpoint must be positive")
    slack = [b.id for b in case.buses if b.kind == "slack"]
    if len(slack) > 1:
        raise CaseValidationError(f"multiple slack buses: {slack}")
    if not slack:
        raise CaseValidationError("no slack bus")

    br_ids = set()
    for br in case.branches:
        if br.id <= 0:
            raise CaseValidationError(f"branch {br.id}: id must be a positive integer")
        if br.id in br_ids:
            raise CaseValidationError(f"branch {br.id}: duplicate branch id")
        br_ids.add(br.id)
        if br.from_bus == br.to_bus:
            raise CaseValidationError(f"branch {br.id}: from_bus equals to_bus")
        for end in br.ends:
            if end not in seen:
                raise CaseValidationError(f"branch {br.id}: unknown bus {end}")
        if br.r == 0 and br.x == 0:
            raise CaseValidationError(f"branch {br.id}: zero impedance")

    labels = set()
    gen_buses = set()
    for g in case.generators:
        if g.id in labels:
            raise CaseValidationError(f"generator {g.id}: duplicate label")
        labels.add(g.id)
        if g.bus not in seen:
            raise CaseValidationError(f"generator {g.id}: unknown bus {g.bus}")
        if g.bus in gen_buses:
            raise CaseValidationError(f"generator {g.id}: more than one generator on bus {g.bus}")
        gen_buses.add(g.bus)
        if not g.h > 0:
            raise CaseValidationError(f"generator {g.id}: inertia h must be positive")
        if not g.xd_p > 0:
            raise CaseValidationError(f"generator {g.id}: transient reactance must be positive")
        if not g.mva_base > 0:
            raise CaseValidationError(f"generator {g.id}: machine base must be positive")

    if not case.base_mva > 0:
        raise CaseValidationError("base_mva must be positive")
    comps = connected_components(case.bus_ids, [br.ends for br in case.branches if br.status])
    if len(comps) > 1:
        raise CaseValidationError(
            f"network not connected: {len(comps)} components, e.g. buses {sorted(comps[1])[:5]}"
        )
    return case


def connected_components(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> list[set[int]]:
    """Components ordered by their smallest member."""
    parent = {n: n for n in nodes}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, set[int]] = {}
    for n in parent:
        groups.setdefault(find(n), set()).add(n)
    return sorted(groups.values(), key=min)


# ---------------------------------------------------------------------------
# file reading

def _read_rows(path: Path, header: Sequence[str]):
    """Yield (line_number, {name: (column, text)}) for each data row."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CaseError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise CaseParseError(path, 1, 1, "missing header row") from None
        got = [h.strip() for h in got]
        if got != list(header):
            raise CaseParseError(path, 1, 1, f"expected header {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CaseParseError(
                    path, line, min(len(row), len(header)) + 1,
                    f"expected {len(header)} fields, found {len(row)}",
                )
            yield line, {h: (i + 1, c.strip()) for i, (h, c) in enumerate(zip(header, row))}


def _field(path, line, cells, name, conv):
    col, text = cells[name]
    try:
        return conv(text)
    except ValueError:
        raise CaseParseError(path, line, col, f"bad value {text!r} for {name}") from None


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


def _status(text: str) -> bool:
    if text.lower() in ("1", "true", "in", "on"):
        return True
    if text.lower() in ("0", "false", "out", "off"):
        return False
    raise ValueError(text)


def load_case(path) -> GridCase:
    """Read and validate the case stored in directory ``path``."""
    root = Path(path)
    base_mva, f_hz = 100.0, 60.0
    meta = root / "meta.csv"
    if meta.exists():
        for line, cells in _read_rows(meta, ["key", "value"]):
            key = cells["key"][1]
            if key == "base_mva":
                base_mva = _field(meta, line, cells, "value", float)
            elif key == "f_hz":
                f_hz = _field(meta, line, cells, "value", float)
            else:
                raise CaseParseError(meta, line, 1, f"unknown key {key!r}")

    p = root / "bus.csv"
    buses = []
    for line, c in _read_rows(p, BUS_HEADER):
        buses.append(Bus(
            id=_field(p, line, c, "id", _int),
            kind=c["kind"][1],
            v_mag=_field(p, line, c, "v_mag", float),
            v_ang=math.radians(_field(p, line, c, "v_ang_deg", float)),
            p_load=_field(p, line, c, "p_load_mw", float) / base_mva,
            q_load=_field(p, line, c, "q_load_mvar", float) / base_mva,
            g_sh=_field(p, line, c, "g_sh", float),
            b_sh=_field(p, line, c, "b_sh", float),
        ))
        if buses[-1].kind not in BUS_KINDS:
            raise CaseParseError(p, line, c["kind"][0], f"unknown bus kind {buses[-1].kind!r}")

    p = root / "branch.csv"
    branches = []
    if p.exists():
        for line, c in _read_rows(p, BRANCH_HEADER):
            branches.append(Branch(
                id=_field(p, line, c, "id", _int),
                from_bus=_field(p, line, c, "from", _int),
                to_bus=_field(p, line, c, "to", _int),
                r=_field(p, line, c, "r_pu", float),
                x=_field(p, line, c, "x_pu", float),
                b_ch=_field(p, line, c, "b_ch_pu", float),
                status=_field(p, line, c, "status", _status),
            ))

    p = root / "gen.csv"
    gens = []
    if p.exists():
        for line, c in _read_rows(p, GEN_HEADER):
            gens.append(Generator(
                id=c["label"][1],
                bus=_field(p, line, c, "bus", _int),
                p_set=_field(p, line, c, "p_mw", float) / base_mva,
                v_set=_field(p, line, c, "v_set", float),
                h=_field(p, line, c, "h_s", float),
                d=_field(p, line, c, "d_pu", float),
                xd_p=_field(p, line, c, "xdp_pu", float),
                mva_base=_field(p, line, c, "mva", float),
            ))
    return validate_case(GridCase(base_mva, buses, branches, gens, f_hz=f_hz))


# ---------------------------------------------------------------------------
# file writing

def _exact(x: float, to_file: Callable[[float], float], from_file: Callable[[float], float]) -> str:
    """Shortest text for ``to_file(x)`` that reads back to exactly ``x``."""
    y = to_file(x)
    if from_file(y) == x:
        return repr(y)
    lo = hi = y
    for _ in range(64):
        lo, hi = math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)
        for cand in (lo, hi):
            if from_file(cand) == x:
                return repr(cand)
    return repr(y)


def write_case(case: GridCase, path) -> None:
    """Write ``case`` to directory ``path`` so that load_case reproduces it exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    base = case.base_mva
    mw = (lambda v: v * base, lambda v: v / base)
    deg = (math.degrees, math.radians)
    with open(root / "meta.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerow(["base_mva", repr(case.base_mva)])
        w.writerow(["f_hz", repr(case.f_hz)])
    with open(root / "bus.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BUS_HEADER)
        for b in case.buses:
            w.writerow([b.id, b.kind, repr(b.v_mag), _exact(b.v_ang, *deg),
                        _exact(b.p_load, *mw), _exact(b.q_load, *mw), repr(b.g_sh), repr(b.b_sh)])
    with open(root / "branch.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BRANCH_HEADER)
        for br in case.branches:
            w.writerow([br.id, br.from_bus, br.to_bus, repr(br.r), repr(br.x), repr(br.b_ch),
                        int(br.status)])
    with open(root / "gen.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GEN_HEADER)
        for g in case.generators:
            w.writerow([g.id, g.bus, _exact(g.p_set, *mw), repr(g.v_set), repr(g.h), repr(g.d),
                        repr(g.xd_p), repr(g.mva_base)])


# ---------------------------------------------------------------------------
# events

def load_events(path, case: GridCase | None = None) -> EventSchedule:
    """Read an event file.

    The file vocabulary is ``fault`` and ``open``. An ``open`` on a branch with
    a pending fault becomes ``clear_and_open_line``; otherwise ``open_line``.
    When ``case`` is given, branch ids are checked against it.
    """
    p = Path(path)
    events = []
    faulted: dict[int, int] = {}
    last_t = -math.inf
    for line, c in _read_rows(p, EVENT_HEADER):
        t = _field(p, line, c, "t_s", float)
        kind = c["kind"][1].lower()
        br = _field(p, line, c, "branch_id", _int)
        if t < last_t:
            raise CaseValidationError(f"{p}:{line}: event times not in order ({t} after {last_t})")
        last_t = t
        if case is not None and br not in {b.id for b in case.branches}:
            raise CaseValidationError(f"{p}:{line}: unknown branch {br}")
        if kind == "fault":
            events.append(Event(t, "fault_on_line", br))
            faulted[br] = line
        elif kind == "open":
            if br in faulted:
                del faulted[br]
                events.append(Event(t, "clear_and_open_line", br))
            else:
                events.append(Event(t, "open_line", br))
        else:
            raise CaseParseError(p, line, c["kind"][0], f"unknown event kind {kind!r}")
    if faulted:
        br, line = next(iter(faulted.items()))
        raise CaseValidationError(f"{p}:{line}: fault on branch {br} is never cleared")
    return EventSchedule(events)


def write_events(schedule: EventSchedule, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for ev in schedule:
            w.writerow([repr(ev.time), "fault" if ev.kind == "fault_on_line" else "open", ev.branch])


def _label_key(label: str):
    m = re.fullmatch(r"(\D*)(\d+)", label)
    return (m.group(1), int(m.group(2))) if m else (label, -1)


def generator_bus_map(case: GridCase) -> dict[str, int]:
    """Generator label -> bus id, in natural label order (G1, G2, ..., G10)."""
    return {g.id: g.bus for g in sorted(case.generators, key=lambda g: _label_key(g.id))}


def natural_sorted(labels: Iterable[str]) -> list[str]:
    return sorted(labels, key=_label_key)
