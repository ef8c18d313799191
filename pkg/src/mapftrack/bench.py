"""Benchmark model: grid maps, scenario files, instances, domain manifest.

File formats follow the common grid benchmark conventions:

map file:
    type octile
    height <H>
    width <W>
    map
    <H rows of exactly W characters>

'.' and 'G' are traversable, every other character is blocked. Coordinates
are (x, y) with x the column and y the row, origin at the top-left.

scenario file:
    version 1
    <bucket> TAB <map file> TAB <w> TAB <h> TAB <sx> TAB <sy> TAB <gx> TAB <gy> TAB <dist>

One row per start/goal pair. The trailing distance field is kept verbatim as
an opaque float; nothing downstream trusts it. Scenario kind ('even' or
'random') and index come from the file name: <map>-<kind>-<index>.scen
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import (
    AgentCountOutOfRange,
    DimensionMismatch,
    DuplicateMapAssignment,
    EmptyScenario,
    MalformedHeader,
    MalformedRow,
    NonNumericField,
    ScenarioBindError,
    UnknownDomainName,
    UnknownMap,
    UnknownScenario,
)

PASSABLE = frozenset(".G")
SCEN_KINDS = ("even", "random")

# Fixed domain vocabulary. "Open" covers both the empty and the
# random-obstacle grids.
DOMAIN_NAMES = ("Game", "Street", "Maze", "Room", "Open", "Warehouse")

_SCEN_FILE_RE = re.compile(r"^(?P<map>.+)-(?P<kind>even|random)-(?P<index>\d+)\.scen$")


@dataclass(frozen=True)
class GridMap:
    """Immutable 4-connected grid. cells is row-major, 1 = traversable."""

    name: str
    width: int
    height: int
    cells: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionMismatch(f"{self.name}: width/height must be >= 1")
        if len(self.cells) != self.width * self.height:
            raise DimensionMismatch(
                f"{self.name}: {len(self.cells)} cells for "
                f"{self.width}x{self.height} grid"
            )

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_traversable(self, x: int, y: int) -> bool:
        """True when (x, y) is inside the map and not blocked."""
        return self.in_bounds(x, y) and self.cells[y * self.width + x] == 1

    def cell_id(self, x: int, y: int) -> int:
        return y * self.width + x

    @property
    def traversable_count(self) -> int:
        return sum(self.cells)

    def traversable_cells(self) -> list[tuple[int, int]]:
        """All traversable (x, y) in row-major order."""
        w = self.width
        return [(i % w, i // w) for i, c in enumerate(self.cells) if c == 1]

    def to_text(self) -> str:
        """Render back to map file format ('.' traversable, '@' blocked)."""
        lines = ["type octile", f"height {self.height}", f"width {self.width}", "map"]
        w = self.width
        for y in range(self.height):
            row = self.cells[y * w : (y + 1) * w]
            lines.append("".join("." if c == 1 else "@" for c in row))
        return "\n".join(lines) + "\n"


def parse_map(text: str, name: str = "") -> GridMap:
    """Parse map file content. Unknown body characters count as blocked."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise MalformedHeader(f"{name}: map file needs a 4-line header")
    m_type = re.fullmatch(r"type\s+(\S+)", lines[0].strip())
    m_height = re.fullmatch(r"height\s+(\d+)", lines[1].strip())
    m_width = re.fullmatch(r"width\s+(\d+)", lines[2].strip())
    if not m_type or not m_height or not m_width or lines[3].strip() != "map":
        raise MalformedHeader(f"{name}: bad header lines {lines[:4]!r}")
    height = int(m_height.group(1))
    width = int(m_width.group(1))
    if height < 1 or width < 1:
        raise DimensionMismatch(f"{name}: declared {width}x{height}")

    body = lines[4:]
    # Trailing blank lines are tolerated, anything else must be a grid row.
    while body and body[-1].strip() == "":
        body.pop()
    if len(body) != height:
        raise DimensionMismatch(
            f"{name}: {len(body)} grid rows, header declares {height}"
        )
    cells = bytearray(width * height)
    for y, row in enumerate(body):
        row = row.rstrip("\r")
        if len(row) != width:
            raise DimensionMismatch(
                f"{name}: row {y} has {len(row)} chars, header declares {width}"
            )
        base = y * width
        for x, ch in enumerate(row):
            if ch in PASSABLE:
                cells[base + x] = 1
    return GridMap(name=name, width=width, height=height, cells=bytes(cells))


def load_map(path: str | Path) -> GridMap:
    path = Path(path)
    return parse_map(path.read_text(), name=path.stem)


@dataclass(frozen=True)
class ScenEntry:
    """One start/goal pair as stored in a scenario file."""

    bucket: int
    map_name: str  # verbatim file reference, e.g. "empty-8-8.map"
    map_width: int
    map_height: int
    start: tuple[int, int]
    goal: tuple[int, int]
    ref_distance: float


@dataclass(frozen=True)
class Scenario:
    map_name: str  # normalized, no .map suffix
    kind: str
    index: int
    entries: tuple[ScenEntry, ...]

    def __post_init__(self):
        if self.kind not in SCEN_KINDS:
            raise MalformedRow(f"scenario kind must be one of {SCEN_KINDS}")
        if self.index < 1:
            raise MalformedRow(f"scenario index must be >= 1, got {self.index}")
        if not self.entries:
            raise EmptyScenario(f"{self.map_name}-{self.kind}-{self.index}: no entries")

    @property
    def name(self) -> str:
        return f"{self.kind}-{self.index}"

    def agents(self, n: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """First n (start, goal) pairs in file order."""
        return instance_agents(self, n)


def _strip_map_suffix(name: str) -> str:
    return name[:-4] if name.endswith(".map") else name


def parse_scenario(text: str, kind: str, index: int) -> Scenario:
    """Parse scenario file content. kind/index come from the file name."""
    lines = text.splitlines()
    if not lines or not re.fullmatch(r"version\s+\S+", lines[0].strip()):
        raise MalformedHeader("scenario file must start with a version line")
    entries: list[ScenEntry] = []
    for row_no, line in enumerate(lines[1:], start=2):
        if line.strip() == "":
            continue
        fields = line.rstrip("\r\n").split("\t")
        if len(fields) != 9:
            raise MalformedRow(
                f"line {row_no}: {len(fields)} fields, expected 9", row=row_no
            )
        try:
            bucket = int(fields[0])
            w, h = int(fields[2]), int(fields[3])
            sx, sy = int(fields[4]), int(fields[5])
            gx, gy = int(fields[6]), int(fields[7])
            dist = float(fields[8])
        except ValueError as exc:
            raise NonNumericField(f"line {row_no}: {exc}", row=row_no) from None
        entries.append(
            ScenEntry(
                bucket=bucket,
                map_name=fields[1],
                map_width=w,
                map_height=h,
                start=(sx, sy),
                goal=(gx, gy),
                ref_distance=dist,
            )
        )
    if not entries:
        raise EmptyScenario("scenario file has no entry rows")
    map_name = _strip_map_suffix(entries[0].map_name)
    for row_no, e in enumerate(entries, start=1):
        if _strip_map_suffix(e.map_name) != map_name:
            raise MalformedRow(
                f"entry {row_no} references map {e.map_name!r}, "
                f"scenario is for {map_name!r}",
                row=row_no,
            )
    return Scenario(map_name=map_name, kind=kind, index=index, entries=tuple(entries))


def scenario_from_path(path: str | Path) -> Scenario:
    """Load a scenario file, taking kind/index from the file name."""
    path = Path(path)
    m = _SCEN_FILE_RE.match(path.name)
    if not m:
        raise MalformedHeader(
            f"{path.name}: scenario files are named <map>-<kind>-<index>.scen"
        )
    return parse_scenario(path.read_text(), kind=m.group("kind"), index=int(m.group("index")))


def write_scenario(scenario: Scenario) -> str:
    """Serialize back to scenario file format."""
    lines = ["version 1"]
    for e in scenario.entries:
        lines.append(
            "\t".join(
                [
                    str(e.bucket),
                    e.map_name,
                    str(e.map_width),
                    str(e.map_height),
                    str(e.start[0]),
                    str(e.start[1]),
                    str(e.goal[0]),
                    str(e.goal[1]),
                    f"{e.ref_distance:.8f}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def bind_scenario(scenario: Scenario, grid: GridMap) -> None:
    """Check a scenario against the map it claims to run on.

    Raises ScenarioBindError on name or dimension disagreement and on any
    start/goal that is blocked or out of bounds.
    """
    if scenario.map_name != grid.name:
        raise ScenarioBindError(
            f"scenario is for {scenario.map_name!r}, map is {grid.name!r}"
        )
    for i, e in enumerate(scenario.entries):
        if (e.map_width, e.map_height) != (grid.width, grid.height):
            raise ScenarioBindError(
                f"entry {i}: declares {e.map_width}x{e.map_height}, "
                f"map is {grid.width}x{grid.height}"
            )
        for label, (x, y) in (("start", e.start), ("goal", e.goal)):
            if not grid.is_traversable(x, y):
                raise ScenarioBindError(
                    f"entry {i}: {label} ({x}, {y}) is blocked or outside the map"
                )


def instance_agents(
    scenario: Scenario, n: int
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """(start, goal) pairs for the k-agent instance: the first n entries."""
    if n < 1 or n > len(scenario.entries):
        raise AgentCountOutOfRange(
            f"{scenario.map_name}-{scenario.name}: agent count {n} outside "
            f"1..{len(scenario.entries)}"
        )
    return [(e.start, e.goal) for e in scenario.entries[:n]]


@dataclass(frozen=True, order=True)
class InstanceId:
    """A problem instance: a scenario truncated to its first `agents` pairs."""

    map_name: str
    scen_kind: str
    scen_index: int
    agents: int

    @property
    def scenario_name(self) -> str:
        return f"{self.scen_kind}-{self.scen_index}"

    def __str__(self) -> str:
        return f"{self.map_name}-{self.scen_kind}-{self.scen_index} k={self.agents}"


def parse_scenario_name(text: str) -> tuple[str, int]:
    """Split 'even-3' into ('even', 3)."""
    m = re.fullmatch(r"(even|random)-(\d+)", text.strip())
    if not m:
        raise MalformedRow(f"scenario must look like even-1 or random-12, got {text!r}")
    return m.group(1), int(m.group(2))


@dataclass(frozen=True)
class DomainManifest:
    """Assignment of map names to benchmark domains."""

    domains: tuple[tuple[str, tuple[str, ...]], ...]

    def domain_of(self, map_name: str) -> str | None:
        for domain, maps in self.domains:
            if map_name in maps:
                return domain
        return None

    def maps_in(self, domain: str) -> tuple[str, ...]:
        for name, maps in self.domains:
            if name == domain:
                return maps
        raise UnknownDomainName(f"unknown domain {domain!r}")

    @property
    def domain_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.domains)

    @property
    def all_maps(self) -> tuple[str, ...]:
        out: list[str] = []
        for _, maps in self.domains:
            out.extend(maps)
        return tuple(out)


def load_manifest(text: str) -> DomainManifest:
    """Parse 'Domain: map1, map2, ...' lines. '#' comments and blanks skipped."""
    seen_maps: dict[str, str] = {}
    domains: dict[str, list[str]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise MalformedRow(f"line {line_no}: expected 'Domain: maps...'")
        domain, _, rest = line.partition(":")
        domain = domain.strip()
        if domain not in DOMAIN_NAMES:
            raise UnknownDomainName(
                f"line {line_no}: {domain!r} is not one of {DOMAIN_NAMES}"
            )
        for map_name in (m.strip() for m in rest.split(",")):
            if not map_name:
                continue
            if map_name in seen_maps:
                raise DuplicateMapAssignment(
                    f"line {line_no}: {map_name!r} already assigned to "
                    f"{seen_maps[map_name]!r}"
                )
            seen_maps[map_name] = domain
            domains.setdefault(domain, []).append(map_name)
    return DomainManifest(
        domains=tuple((d, tuple(maps)) for d, maps in domains.items())
    )


def default_manifest() -> DomainManifest:
    """The shipped map/domain assignment for the standard benchmark set."""
    text = resources.files("mapftrack.data").joinpath("domains.txt").read_text()
    return load_manifest(text)


@dataclass
class Benchmark:
    """A loaded benchmark: maps, scenarios bound to them, domain manifest."""

    maps: dict[str, GridMap]
    scenarios: dict[tuple[str, str, int], Scenario]
    manifest: DomainManifest
    root: Path | None = None

    def grid(self, map_name: str) -> GridMap:
        try:
            return self.maps[map_name]
        except KeyError:
            raise UnknownMap(f"map {map_name!r} not in benchmark") from None

    def scenario(self, map_name: str, kind: str, index: int) -> Scenario:
        self.grid(map_name)
        try:
            return self.scenarios[(map_name, kind, index)]
        except KeyError:
            raise UnknownScenario(
                f"{map_name} has no scenario {kind}-{index}"
            ) from None

    def scenarios_of(self, map_name: str) -> list[Scenario]:
        self.grid(map_name)
        out = [s for (m, _, _), s in self.scenarios.items() if m == map_name]
        out.sort(key=lambda s: (s.kind, s.index))
        return out

    def has_instance(self, inst: InstanceId) -> bool:
        s = self.scenarios.get((inst.map_name, inst.scen_kind, inst.scen_index))
        return s is not None and 1 <= inst.agents <= len(s.entries)

    def pairs_for(self, inst: InstanceId) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        s = self.scenario(inst.map_name, inst.scen_kind, inst.scen_index)
        return instance_agents(s, inst.agents)


def load_benchmark(root: str | Path, manifest: DomainManifest | None = None) -> Benchmark:
    """Load maps/*.map and scens/*.scen under root.

    The manifest comes from root/domains.txt when present, falling back to
    the shipped default. Scenario files that reference a map not on disk are
    rejected; every scenario is bound (endpoint/dimension checked) on load.
    """
    root = Path(root)
    maps: dict[str, GridMap] = {}
    for path in sorted((root / "maps").glob("*.map")):
        maps[path.stem] = load_map(path)
    scenarios: dict[tuple[str, str, int], Scenario] = {}
    scen_dir = root / "scens"
    if scen_dir.is_dir():
        for path in sorted(scen_dir.glob("*.scen")):
            scen = scenario_from_path(path)
            if scen.map_name not in maps:
                raise UnknownMap(
                    f"{path.name}: references map {scen.map_name!r} not in {root / 'maps'}"
                )
            bind_scenario(scen, maps[scen.map_name])
            scenarios[(scen.map_name, scen.kind, scen.index)] = scen
    if manifest is None:
        manifest_path = root / "domains.txt"
        manifest = (
            load_manifest(manifest_path.read_text())
            if manifest_path.is_file()
            else default_manifest()
        )
    return Benchmark(maps=maps, scenarios=scenarios, manifest=manifest, root=root)
