import pytest
from hypothesis import given, strategies as st

from tracevqa.errors import DanglingArrow, EmptyPath, MalformedHop
from tracevqa.relpath import (
    CoverageReport,
    DualPath,
    Hop,
    RelationPath,
    check_binding,
    coverage_score,
    parse_path,
    path_tokens,
    render_path,
)

ident = st.from_regex(r"[a-z0-9_]+", fullmatch=True).filter(lambda s: s.strip("_"))
hops = st.builds(
    Hop, entity=ident, attributes=st.lists(ident, min_size=1, max_size=3).map(tuple)
)
paths = st.builds(RelationPath, hops=st.lists(hops, min_size=1, max_size=5).map(tuple))


class TestParse:
    def test_paper_example(self):
        p = parse_path("dog.color → dog.coat_length → dog.size")
        assert [(h.entity, list(h.attributes)) for h in p.hops] == [
            ("dog", ["color"]),
            ("dog", ["coat_length"]),
            ("dog", ["size"]),
        ]

    def test_minimal(self):
        p = parse_path("a.b")
        assert p.hops == (Hop("a", ("b",)),)

    def test_three_hops(self):
        p = parse_path("ship.hull_number → ship.name → location.island_group")
        assert len(p.hops) == 3

    def test_ascii_arrow_alias(self):
        assert parse_path("a.b -> c.d") == parse_path("a.b → c.d")

    def test_lowercased_before_validation(self):
        assert parse_path("Dog.Color") == parse_path("dog.color")

    def test_multi_attribute_hop(self):
        p = parse_path("object.affordance.play")
        assert p.hops[0].attributes == ("affordance", "play")

    def test_dangling_arrow(self):
        with pytest.raises(DanglingArrow):
            parse_path("→ dog.color")

    def test_trailing_arrow(self):
        with pytest.raises(DanglingArrow):
            parse_path("dog.color →")

    def test_empty(self):
        with pytest.raises(EmptyPath):
            parse_path("   ")

    def test_hop_without_dot(self):
        with pytest.raises(MalformedHop):
            parse_path("dog → cat.size")

    def test_illegal_characters(self):
        with pytest.raises(MalformedHop):
            parse_path("dog!.color")


class TestRender:
    def test_single_hop(self):
        assert render_path(RelationPath((Hop("a", ("b",)),))) == "a.b"

    def test_two_hop_join(self):
        p = RelationPath((Hop("dog", ("color",)), Hop("dog", ("size",))))
        assert render_path(p) == "dog.color → dog.size"

    def test_multi_attribute(self):
        assert render_path(RelationPath((Hop("object", ("affordance", "play")),))) == (
            "object.affordance.play"
        )

    @given(paths)
    def test_round_trip(self, p):
        assert parse_path(render_path(p)) == p


class TestTokens:
    def test_underscore_split(self):
        assert path_tokens(parse_path("dog.coat_length")) == {"dog", "coat", "length"}

    def test_minimal(self):
        assert path_tokens(parse_path("a.b")) == {"a", "b"}

    def test_duplicates_collapse(self):
        assert path_tokens(parse_path("ship.hull_number → ship.name")) == {
            "ship",
            "hull",
            "number",
            "name",
        }


class TestCoverage:
    SHIP = "ship.hull_number → ship.name → location.island_group"

    def test_full_overlap(self):
        p = parse_path("a.b → c.d")
        assert coverage_score("a b c d", p) == 1.0

    def test_no_overlap(self):
        assert coverage_score("nothing shared here", parse_path("a.b")) == 0.0

    def test_table5_case(self):
        e = (
            "The hull number L3005 identifies the ship name Sir Galahad, "
            "near the Falkland island group."
        )
        assert coverage_score(e, parse_path(self.SHIP)) == pytest.approx(6 / 7)

    @given(paths, st.text(alphabet="abcdefg _", max_size=40))
    def test_monotone_in_appended_tokens(self, p, e):
        base = coverage_score(e + " x", p)
        for tok in path_tokens(p):
            assert coverage_score(e + " x " + tok, p) >= base

    @given(paths, st.text(max_size=60))
    def test_bounded_and_case_insensitive(self, p, e):
        score = coverage_score(e, p)
        assert 0.0 <= score <= 1.0
        assert coverage_score(e.upper(), p) == score

    @given(paths)
    def test_one_iff_all_tokens_present(self, p):
        assert coverage_score(" ".join(path_tokens(p)), p) == 1.0


class TestCheckBinding:
    def test_full_citation(self):
        d = DualPath(text_path=parse_path("a.b"), vision_path=parse_path("c.d"))
        report = check_binding("a b c d", d)
        assert report == CoverageReport(1.0, 1.0, True, True)

    def test_disjoint(self):
        d = DualPath(text_path=parse_path("a.b"), vision_path=parse_path("c.d"))
        report = check_binding("zz yy", d)
        assert report.text_coverage == 0.0 and report.vision_coverage == 0.0
        assert not report.text_hop_cited and not report.vision_token_cited

    def test_hop_citation_needs_full_hop(self):
        # "breed group" alone lacks the entity token, so no hop is fully cited
        d = DualPath(
            text_path=parse_path("dog.size → dog.breed_group → dog.breed"),
            vision_path=parse_path("x.y"),
        )
        report = check_binding("breed group", d)
        assert report.text_coverage == pytest.approx(0.5)
        assert not report.text_hop_cited

    def test_hop_citation_with_entity(self):
        d = DualPath(
            text_path=parse_path("dog.size → dog.breed_group → dog.breed"),
            vision_path=parse_path("x.y"),
        )
        assert check_binding("the dog breed group", d).text_hop_cited
