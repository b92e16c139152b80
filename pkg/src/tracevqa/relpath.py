"""Relation-path grammar: parsing, rendering, tokenization, coverage.

A relation path is an ordered chain of hops joined by " → ", where each hop
is an entity followed by one or more dotted attributes, e.g.

    ship.hull_number → ship.name → location.island_group

Identifiers are lowercase [a-z0-9_]+. A dual path pairs a text path
(semantic priors) with a vision path (visible attributes); the pair is the
unit the rest of the pipeline plans, explains, and ranks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DanglingArrow, EmptyPath, MalformedHop

ARROW = "→"
_IDENT_RE = re.compile(r"[a-z0-9_]+\Z")
_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Hop:
    """One entity.attribute step, e.g. dog.coat_length."""

    entity: str
    attributes: tuple[str, ...]

    def __post_init__(self):
        if not _IDENT_RE.match(self.entity):
            raise MalformedHop(f"bad entity identifier {self.entity!r}")
        if not self.attributes:
            raise MalformedHop(f"hop {self.entity!r} has no attributes")
        for attr in self.attributes:
            if not _IDENT_RE.match(attr):
                raise MalformedHop(f"bad attribute identifier {attr!r}")

    def render(self) -> str:
        return ".".join((self.entity,) + self.attributes)


@dataclass(frozen=True)
class RelationPath:
    """Non-empty ordered chain of hops."""

    hops: tuple[Hop, ...]

    def __post_init__(self):
        if not self.hops:
            raise EmptyPath("a relation path needs at least one hop")

    def render(self) -> str:
        return render_path(self)


@dataclass(frozen=True)
class DualPath:
    """The (text path, vision path) pair; equality is hop-wise on both."""

    text_path: RelationPath
    vision_path: RelationPath

    def key(self) -> tuple[str, str]:
        """Canonical identity used for deduplication."""
        return (render_path(self.text_path), render_path(self.vision_path))


@dataclass(frozen=True)
class CoverageReport:
    """How much of each path an explanation actually cites."""

    text_coverage: float
    vision_coverage: float
    text_hop_cited: bool
    vision_token_cited: bool

    def __post_init__(self):
        for cov in (self.text_coverage, self.vision_coverage):
            if not 0.0 <= cov <= 1.0:
                raise ValueError(f"coverage {cov} outside [0,1]")
        if self.text_hop_cited and self.text_coverage == 0.0:
            raise ValueError("text hop cited but text coverage is zero")
        if self.vision_token_cited and self.vision_coverage == 0.0:
            raise ValueError("vision token cited but vision coverage is zero")


def parse_path(text: str) -> RelationPath:
    """Parse a single-line path; accepts "->" as an alias for "→".

    Raises EmptyPath, DanglingArrow, or MalformedHop.
    """
    normalized = text.replace("->", ARROW).lower()
    if not normalized.strip():
        raise EmptyPath("empty path text")
    parts = [p.strip() for p in normalized.split(ARROW)]
    if len(parts) > 1 and any(not p for p in parts):
        raise DanglingArrow(f"separator with a missing side in {text!r}")
    hops = []
    for part in parts:
        pieces = part.split(".")
        if len(pieces) < 2:
            raise MalformedHop(f"hop {part!r} lacks a '.'")
        entity, *attrs = (p.strip() for p in pieces)
        hops.append(Hop(entity=entity, attributes=tuple(attrs)))
    return RelationPath(hops=tuple(hops))


def render_path(p: RelationPath) -> str:
    """Canonical single-line form; parse_path(render_path(p)) == p."""
    return f" {ARROW} ".join(hop.render() for hop in p.hops)


def path_tokens(p: RelationPath) -> set[str]:
    """Atomic tokens: every entity/attribute split on "_", lowercased."""
    tokens: set[str] = set()
    for hop in p.hops:
        for ident in (hop.entity,) + hop.attributes:
            tokens.update(t for t in ident.split("_") if t)
    return tokens


def _hop_tokens(hop: Hop) -> set[str]:
    tokens: set[str] = set()
    for ident in (hop.entity,) + hop.attributes:
        tokens.update(t for t in ident.split("_") if t)
    return tokens


def explanation_tokens(explanation: str) -> set[str]:
    """Lowercase and split on every non-alphanumeric character."""
    return set(_WORD_RE.findall(explanation.lower()))


def coverage_score(explanation: str, p: RelationPath) -> float:
    """Fraction of the path's tokens present in the explanation.

    Exact token match only, no stemming.
    """
    ptoks = path_tokens(p)
    etoks = explanation_tokens(explanation)
    return len(ptoks & etoks) / len(ptoks)


def check_binding(explanation: str, d: DualPath) -> CoverageReport:
    """Coverage on both paths plus the two citation flags.

    text_hop_cited requires every token of at least one text-path hop to
    appear; vision_token_cited requires any vision-path token.
    """
    etoks = explanation_tokens(explanation)
    text_cov = coverage_score(explanation, d.text_path)
    vision_cov = coverage_score(explanation, d.vision_path)
    hop_cited = any(_hop_tokens(h) <= etoks for h in d.text_path.hops)
    return CoverageReport(
        text_coverage=text_cov,
        vision_coverage=vision_cov,
        text_hop_cited=hop_cited,
        vision_token_cited=vision_cov > 0.0,
    )
