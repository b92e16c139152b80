import pytest

from tracevqa.client import MockBackend
from tracevqa.composer import (
    ComposerConfig,
    compose,
    filter_candidates,
    make_triplet,
)
from tracevqa.errors import AllFiltered, ComposeFailed
from tracevqa.relpath import DualPath, parse_path

from support import make_sample


def dual(text="a.b", vision="c.d") -> DualPath:
    return DualPath(text_path=parse_path(text), vision_path=parse_path(vision))


class TestCompose:
    def test_returns_explanation(self):
        backend = MockBackend(queue=["The hull number identifies the ship."])
        out = compose(make_sample(0), dual(), backend)
        assert out == "The hull number identifies the ship."

    def test_trims_whitespace(self):
        backend = MockBackend(queue=["  padded text \n"])
        assert compose(make_sample(0), dual(), backend) == "padded text"

    def test_empty_twice_fails(self):
        backend = MockBackend(queue=["", "   "])
        with pytest.raises(ComposeFailed):
            compose(make_sample(0), dual(), backend)
        assert backend.calls == 2

    def test_no_answer_leakage(self):
        captured = {}

        class Capturing(MockBackend):
            def _complete(self, request):
                captured["prompt"] = request.last_user_text()
                return "fine explanation"

        sample = make_sample(0)
        compose(sample, dual(), Capturing())
        for answer in sample.answers:
            assert answer not in captured["prompt"]


class TestFilter:
    def test_both_sides_positive_kept(self):
        t = make_triplet(dual(), "a b c d", 0)
        kept, dropped = filter_candidates([t])
        assert kept == [t] and dropped == []

    def test_zero_vision_coverage_dropped(self):
        good = make_triplet(dual(), "a b c d", 0)
        bad = make_triplet(dual(), "a b only text side", 1)
        assert bad.coverage.vision_coverage == 0.0
        kept, dropped = filter_candidates([good, bad])
        assert kept == [good] and dropped == [bad]

    def test_all_dropped_raises(self):
        bad = make_triplet(dual(), "nothing relevant", 0)
        with pytest.raises(AllFiltered):
            filter_candidates([bad])

    def test_partition_preserves_order(self):
        ts = [
            make_triplet(dual(), "a c", 0),
            make_triplet(dual(), "a only", 1),
            make_triplet(dual(), "b d", 2),
        ]
        kept, dropped = filter_candidates(ts)
        assert kept + dropped == [ts[0], ts[2], ts[1]]
        assert sorted(kept + dropped, key=lambda t: t.candidate_index) == ts

    def test_idempotent(self):
        ts = [make_triplet(dual(), "a c", 0), make_triplet(dual(), "b d", 1)]
        kept, _ = filter_candidates(ts)
        kept2, dropped2 = filter_candidates(kept)
        assert kept2 == kept and dropped2 == []

    def test_threshold_knob(self):
        # half coverage on the text side fails a 0.75 threshold
        t = make_triplet(dual("a.b", "c.d"), "a c d", 0)
        assert t.coverage.text_coverage == 0.5
        with pytest.raises(AllFiltered):
            filter_candidates([t], min_side_coverage=0.75)
