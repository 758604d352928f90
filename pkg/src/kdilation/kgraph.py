"""Finite rank-r graphs given by a coloured skeleton and factorisation squares.

A morphism is stored in canonical form: its edge word sorted into ascending
colour blocks, ``lambda = lambda(1) lambda(2) ... lambda(r)``, with the word read
from range to source (``s(e_i) == r(e_{i+1})``).  Square moves are the only way
to reorder adjacent edges of different colours, so two words describe the same
morphism exactly when they normalise to the same canonical word.

Degrees are plain tuples of non-negative integers; the helpers below provide
the componentwise order, join and (partial) subtraction.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import (
    CubeViolation,
    DegreeOutOfRange,
    DuplicateSquare,
    EndpointMismatch,
    GraphSpecError,
    MissingSquare,
    NotComposable,
)

Degree = tuple[int, ...]


# ---------------------------------------------------------------------------
# degree arithmetic
# ---------------------------------------------------------------------------


def zero(rank: int) -> Degree:
    return (0,) * rank


def unit(rank: int, color: int) -> Degree:
    """The basis degree ``e_color`` (colours are 1-based)."""
    return tuple(1 if i == color - 1 else 0 for i in range(rank))


def ones(rank: int) -> Degree:
    return (1,) * rank


def add(n: Degree, m: Degree) -> Degree:
    return tuple(a + b for a, b in zip(n, m))


def leq(n: Degree, m: Degree) -> bool:
    return all(a <= b for a, b in zip(n, m))


def join(n: Degree, m: Degree) -> Degree:
    return tuple(max(a, b) for a, b in zip(n, m))


def meet(n: Degree, m: Degree) -> Degree:
    return tuple(min(a, b) for a, b in zip(n, m))


def subtract(n: Degree, m: Degree) -> Degree:
    """Return ``n - m``; defined only when ``m <= n``."""
    if not leq(m, n):
        raise DegreeOutOfRange(f"cannot subtract {m} from {n}")
    return tuple(a - b for a, b in zip(n, m))


def total(n: Degree) -> int:
    return sum(n)


def box(cap: Degree) -> list[Degree]:
    """All degrees ``n <= cap``, ordered by total degree then lexicographically."""
    out = list(itertools.product(*(range(c + 1) for c in cap)))
    out.sort(key=lambda n: (sum(n), n))
    return out


def as_degree(value, rank: int) -> Degree:
    if isinstance(value, int):
        value = (value,) * rank
    deg = tuple(int(v) for v in value)
    if len(deg) != rank or any(v < 0 for v in deg):
        raise DegreeOutOfRange(f"{value!r} is not a degree of rank {rank}")
    return deg


# ---------------------------------------------------------------------------
# graph data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    name: str
    color: int
    source: str
    range: str


@dataclass(frozen=True)
class Path:
    """A morphism in canonical form.  Vertices are the degree-zero paths."""

    range: str
    source: str
    degree: Degree
    edges: tuple[str, ...] = ()

    @property
    def length(self) -> int:
        return sum(self.degree)

    @property
    def is_vertex(self) -> bool:
        return not self.edges

    def sort_key(self):
        return (sum(self.degree), self.degree, self.edges, self.range)

    def __str__(self) -> str:
        return self.range if not self.edges else ".".join(self.edges)


SquareEntry = tuple[tuple[str, str], tuple[str, str]]


@dataclass
class KGraph:
    """A finite rank-``rank`` graph.

    ``squares`` maps a composable pair ``(f, g)`` with ``color(f) < color(g)``
    to the pair ``(g', f')`` such that ``fg = g'f'``.
    """

    rank: int
    vertices: tuple[str, ...]
    edges: dict[str, Edge]
    squares: dict[tuple[str, str], tuple[str, str]]
    _inverse: dict[tuple[str, str], tuple[str, str]] = field(repr=False, default_factory=dict)
    _cache: dict = field(repr=False, default_factory=dict, compare=False)

    def __eq__(self, other):
        if not isinstance(other, KGraph):
            return NotImplemented
        return (
            self.rank == other.rank
            and set(self.vertices) == set(other.vertices)
            and self.edges == other.edges
            and self.squares == other.squares
        )

    def __hash__(self):
        return hash((self.rank, frozenset(self.vertices), frozenset(self.edges)))

    # -- construction -----------------------------------------------------

    @classmethod
    def build(
        cls,
        rank: int,
        vertices: Sequence[str],
        edges: Iterable[Edge | tuple],
        squares: Iterable[SquareEntry] = (),
        validate: bool = True,
    ) -> "KGraph":
        """Build a graph from raw data, checking names and endpoints.

        With ``validate=True`` the factorisation invariants are checked as well
        (see :func:`validate_graph`).
        """
        if not isinstance(rank, int) or rank < 1:
            raise GraphSpecError(f"rank must be a positive integer, got {rank!r}")
        vertices = tuple(vertices)
        if len(set(vertices)) != len(vertices):
            raise GraphSpecError("vertex names are not unique")
        edge_map: dict[str, Edge] = {}
        for e in edges:
            e = e if isinstance(e, Edge) else Edge(*e)
            if e.name in edge_map or e.name in vertices:
                raise GraphSpecError(f"duplicate name {e.name!r}")
            if not e.name or any(ch in e.name for ch in ".:"):
                raise GraphSpecError(f"edge name {e.name!r} may not be empty or contain '.' or ':'")
            if not isinstance(e.color, int) or not 1 <= e.color <= rank:
                raise GraphSpecError(f"edge {e.name!r} has colour {e.color!r} outside 1..{rank}")
            for end in (e.source, e.range):
                if end not in vertices:
                    raise GraphSpecError(f"edge {e.name!r} uses undeclared vertex {end!r}")
            edge_map[e.name] = e
        for v in vertices:
            if not v or any(ch in v for ch in ".:"):
                raise GraphSpecError(f"vertex name {v!r} may not be empty or contain '.' or ':'")

        graph = cls(rank, vertices, edge_map, {})
        sq: dict[tuple[str, str], tuple[str, str]] = {}
        inv: dict[tuple[str, str], tuple[str, str]] = {}
        for (f, g), (gp, fp) in squares:
            graph._check_square(f, g, gp, fp)
            if (f, g) in sq:
                raise DuplicateSquare(f"square for {f}{g} given twice", witness=[f, g])
            if (gp, fp) in inv:
                raise DuplicateSquare(
                    f"{gp}{fp} is the factorisation of both {inv[gp, fp]} and ({f}, {g})",
                    witness=[gp, fp],
                )
            sq[f, g] = (gp, fp)
            inv[gp, fp] = (f, g)
        graph.squares = sq
        graph._inverse = inv
        if validate:
            graph.validate()
        return graph

    def _check_square(self, f, g, gp, fp) -> None:
        for name in (f, g, gp, fp):
            if name not in self.edges:
                raise GraphSpecError(f"square mentions unknown edge {name!r}")
        ef, eg, egp, efp = (self.edges[n] for n in (f, g, gp, fp))
        if not (ef.color == efp.color and eg.color == egp.color and ef.color < eg.color):
            raise GraphSpecError(
                f"square {f}{g}={gp}{fp} must pair colours i<j on the left with j,i on the right"
            )
        if ef.source != eg.range:
            raise EndpointMismatch(f"{f}{g} is not composable", witness=[f, g])
        if egp.source != efp.range:
            raise EndpointMismatch(f"{gp}{fp} is not composable", witness=[gp, fp])
        if egp.range != ef.range or efp.source != eg.source:
            raise EndpointMismatch(
                f"square {f}{g}={gp}{fp} does not preserve range/source", witness=[f, g, gp, fp]
            )

    def validate(self) -> "KGraph":
        """Check square bijectivity and (for rank >= 3) the cube condition."""
        names = list(self.edges)
        for x, y in itertools.product(names, repeat=2):
            ex, ey = self.edges[x], self.edges[y]
            if ex.source != ey.range or ex.color == ey.color:
                continue
            if ex.color < ey.color and (x, y) not in self.squares:
                raise MissingSquare(f"no square for composable pair {x}{y}", witness=[x, y])
            if ex.color > ey.color and (x, y) not in self._inverse:
                raise MissingSquare(f"{x}{y} is not the factorisation of any square", witness=[x, y])
        if self.rank >= 3:
            self._check_cubes()
        return self

    def _check_cubes(self) -> None:
        for x, y, z in self.composable_words(3):
            cols = {self.edges[n].color for n in (x, y, z)}
            if len(cols) != 3:
                continue
            forms = self._all_normal_forms((x, y, z))
            if len(forms) != 1:
                raise CubeViolation(
                    f"word {x}.{y}.{z} has {len(forms)} canonical forms",
                    witness={"word": [x, y, z], "forms": sorted(".".join(f) for f in forms)},
                )

    def _all_normal_forms(self, word: tuple[str, ...]) -> set[tuple[str, ...]]:
        seen: dict[tuple[str, ...], set] = {}

        def visit(w):
            if w in seen:
                return seen[w]
            descents = [i for i in range(len(w) - 1) if self.color(w[i]) > self.color(w[i + 1])]
            if not descents:
                res = {w}
            else:
                res = set()
                for i in descents:
                    a, b = self._swap(w[i], w[i + 1])
                    res |= visit(w[:i] + (a, b) + w[i + 2 :])
            seen[w] = res
            return res

        return visit(tuple(word))

    # -- basic queries ------------------------------------------------------

    def color(self, edge: str) -> int:
        return self.edges[edge].color

    def edges_of_color(self, color: int) -> list[str]:
        return [n for n, e in self.edges.items() if e.color == color]

    def composable_words(self, length: int) -> Iterator[tuple[str, ...]]:
        """All composable edge words of the given length (not normalised)."""
        def extend(word):
            if len(word) == length:
                yield tuple(word)
                return
            src = self.edges[word[-1]].source
            for n, e in self.edges.items():
                if e.range == src:
                    yield from extend(word + [n])

        for n in self.edges:
            yield from extend([n])

    def is_cofinal(self) -> bool:
        """Every vertex is the range of a path of nonzero degree."""
        targets = {e.range for e in self.edges.values()}
        return all(v in targets for v in self.vertices)

    def has_no_sources(self) -> bool:
        return all(
            any(e.range == v and e.color == j for e in self.edges.values())
            for v in self.vertices
            for j in range(1, self.rank + 1)
        )

    # -- paths ----------------------------------------------------------------

    def vertex(self, v: str) -> Path:
        if v not in self.vertices:
            raise GraphSpecError(f"unknown vertex {v!r}")
        return Path(v, v, zero(self.rank))

    def edge(self, name: str) -> Path:
        e = self.edges.get(name)
        if e is None:
            raise GraphSpecError(f"unknown edge {name!r}")
        return Path(e.range, e.source, unit(self.rank, e.color), (name,))

    def path(self, word: Sequence[str], range: str | None = None) -> Path:
        """Normalise a composable edge word into a :class:`Path`."""
        word = tuple(word)
        if not word:
            if range is None:
                raise GraphSpecError("an empty word needs a vertex")
            return self.vertex(range)
        for n in word:
            if n not in self.edges:
                raise GraphSpecError(f"unknown edge {n!r}")
        for a, b in zip(word, word[1:]):
            if self.edges[a].source != self.edges[b].range:
                raise NotComposable(f"{a} cannot be followed by {b}")
        if range is not None and self.edges[word[0]].range != range:
            raise GraphSpecError(f"word {'.'.join(word)} does not end at {range!r}")
        return self._make(self.normalize(word))

    def _make(self, word: tuple[str, ...]) -> Path:
        deg = [0] * self.rank
        for n in word:
            deg[self.edges[n].color - 1] += 1
        return Path(self.edges[word[0]].range, self.edges[word[-1]].source, tuple(deg), word)

    def parse_path(self, text: str) -> Path:
        """Parse ``"v"``, ``"e1.e2"`` or ``"v:e1.e2"``."""
        text = text.strip()
        base = None
        if ":" in text:
            base, text = text.split(":", 1)
            base = base.strip()
        if not text:
            return self.vertex(base) if base else self._bad_path(text)
        if "." not in text and text in self.vertices and base is None:
            return self.vertex(text)
        return self.path([t.strip() for t in text.split(".")], range=base)

    def _bad_path(self, text):
        raise GraphSpecError(f"cannot parse path {text!r}")

    def _swap(self, x: str, y: str) -> tuple[str, str]:
        if self.color(x) < self.color(y):
            return self.squares[x, y]
        return self._inverse[x, y]

    def normalize(
        self,
        word: Sequence[str],
        chooser: Callable[[list[int]], int] | None = None,
    ) -> tuple[str, ...]:
        """Sort a composable word into ascending colour blocks by square moves.

        ``chooser`` picks which descent to resolve next; the default resolves
        descents in bubble-sort passes.  Any choice gives the same result on a
        valid graph.
        """
        keys = [self.color(n) for n in word]
        return tuple(self._reorder(list(word), keys, chooser))

    def _reorder(self, tokens: list[str], keys: list, chooser=None) -> list[str]:
        if chooser is None:
            n = len(tokens)
            changed = True
            while changed:
                changed = False
                for i in range(n - 1):
                    if keys[i] > keys[i + 1]:
                        tokens[i], tokens[i + 1] = self._swap(tokens[i], tokens[i + 1])
                        keys[i], keys[i + 1] = keys[i + 1], keys[i]
                        changed = True
            return tokens
        while True:
            descents = [i for i in range(len(tokens) - 1) if keys[i] > keys[i + 1]]
            if not descents:
                return tokens
            i = chooser(descents)
            tokens[i], tokens[i + 1] = self._swap(tokens[i], tokens[i + 1])
            keys[i], keys[i + 1] = keys[i + 1], keys[i]

    def compose(self, lam: Path, mu: Path) -> Path:
        """Return ``lam mu``; requires ``s(lam) == r(mu)``."""
        if lam.source != mu.range:
            raise NotComposable(f"s({lam}) = {lam.source} but r({mu}) = {mu.range}")
        if lam.is_vertex:
            return mu
        if mu.is_vertex:
            return lam
        key = ("compose", lam.edges, mu.edges)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._make(self.normalize(lam.edges + mu.edges))
            self._cache[key] = hit
        return hit

    def try_compose(self, lam: Path, mu: Path) -> Path | None:
        if lam.source != mu.range:
            return None
        return self.compose(lam, mu)

    def factorize(self, lam: Path, m: Degree) -> tuple[Path, Path]:
        """Return the unique ``(mu, nu)`` with ``deg(mu) = m`` and ``lam = mu nu``."""
        m = tuple(m)
        rest = subtract(lam.degree, m)
        if not any(m):
            return self.vertex(lam.range), lam
        if not any(rest):
            return lam, self.vertex(lam.source)
        key = ("factorize", lam.edges, m)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        seen = [0] * self.rank
        keys = []
        for n in lam.edges:
            c = self.color(n)
            keys.append((0 if seen[c - 1] < m[c - 1] else 1, c))
            seen[c - 1] += 1
        word = self._reorder(list(lam.edges), keys)
        k = sum(m)
        hit = (self._make(tuple(word[:k])), self._make(tuple(word[k:])))
        self._cache[key] = hit
        return hit

    def paths(self, n: Degree, range: str | None = None, source: str | None = None) -> list[Path]:
        """All paths of degree ``n`` (optionally with given range/source), sorted."""
        n = tuple(n)
        key = ("paths", n, range, source)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        starts = [range] if range is not None else list(self.vertices)
        if not any(n):
            out = [self.vertex(v) for v in starts if source is None or v == source]
        else:
            plan = [c for c in range_colors(n)]
            out = []
            by_range: dict[tuple[str, int], list[str]] = {}
            for name, e in self.edges.items():
                by_range.setdefault((e.range, e.color), []).append(name)

            def extend(word, at, depth):
                if depth == len(plan):
                    if source is None or at == source:
                        out.append(self._make(tuple(word)))
                    return
                for name in by_range.get((at, plan[depth]), ()):
                    word.append(name)
                    extend(word, self.edges[name].source, depth + 1)
                    word.pop()

            for v in starts:
                extend([], v, 0)
            out.sort(key=Path.sort_key)
        self._cache[key] = out
        return out

    def paths_upto(self, cap: Degree, range: str | None = None, source: str | None = None) -> list[Path]:
        out = []
        for n in box(tuple(cap)):
            out.extend(self.paths(n, range=range, source=source))
        return out

    def mce(self, lam: Path, mu: Path) -> list[tuple[Path, Path, Path]]:
        """Minimal common extensions ``nu = lam alpha = mu beta`` with witnesses."""
        key = ("mce", lam, mu)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        target = join(lam.degree, mu.degree)
        out = []
        for alpha in self.paths(subtract(target, lam.degree), range=lam.source):
            nu = self.compose(lam, alpha)
            head, beta = self.factorize(nu, mu.degree)
            if head == mu:
                out.append((nu, alpha, beta))
        self._cache[key] = out
        return out

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "vertices": list(self.vertices),
            "edges": [
                {"name": e.name, "color": e.color, "source": e.source, "range": e.range}
                for e in self.edges.values()
            ],
            "squares": [{"ij": [f, g], "ji": [gp, fp]} for (f, g), (gp, fp) in self.squares.items()],
        }


def range_colors(n: Degree) -> list[int]:
    """Colour sequence of a canonical word of degree ``n``."""
    return [c + 1 for c, k in enumerate(n) for _ in range(k)]


def random_chooser(seed: int) -> Callable[[list[int]], int]:
    rng = random.Random(seed)
    return lambda descents: rng.choice(descents)


def leftmost(descents: list[int]) -> int:
    return descents[0]


def rightmost(descents: list[int]) -> int:
    return descents[-1]


_GRAPH_FIELDS = {"rank", "vertices", "edges", "squares"}
_EDGE_FIELDS = {"name", "color", "source", "range"}
_SQUARE_FIELDS = {"ij", "ji"}


def graph_from_dict(data: Mapping, validate: bool = True) -> KGraph:
    """Build a graph from its JSON object form; unknown fields are rejected."""
    if not isinstance(data, Mapping):
        raise GraphSpecError("graph spec must be a JSON object")
    extra = set(data) - _GRAPH_FIELDS
    if extra:
        raise GraphSpecError(f"unknown graph fields {sorted(extra)}")
    missing = {"rank", "vertices", "edges"} - set(data)
    if missing:
        raise GraphSpecError(f"graph spec lacks {sorted(missing)}")
    edges = []
    for obj in data["edges"]:
        if not isinstance(obj, Mapping) or set(obj) != _EDGE_FIELDS:
            raise GraphSpecError(f"edge objects need exactly {sorted(_EDGE_FIELDS)}, got {obj!r}")
        edges.append(Edge(str(obj["name"]), obj["color"], str(obj["source"]), str(obj["range"])))
    squares = []
    for obj in data.get("squares", []):
        if not isinstance(obj, Mapping) or set(obj) != _SQUARE_FIELDS:
            raise GraphSpecError(f"square objects need exactly 'ij' and 'ji', got {obj!r}")
        ij, ji = obj["ij"], obj["ji"]
        if len(ij) != 2 or len(ji) != 2:
            raise GraphSpecError(f"square words must have two edges: {obj!r}")
        squares.append(((str(ij[0]), str(ij[1])), (str(ji[0]), str(ji[1]))))
    vertices = data["vertices"]
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        raise GraphSpecError("vertices must be an array of strings")
    return KGraph.build(data["rank"], vertices, edges, squares, validate=validate)


def validate_graph(candidate: KGraph | Mapping) -> KGraph:
    """Return a validated graph or raise the first invariant violation found."""
    if isinstance(candidate, KGraph):
        return candidate.validate()
    return graph_from_dict(candidate, validate=True)
