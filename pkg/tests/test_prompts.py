import pytest
from hypothesis import given
from hypothesis import strategies as st

from taxoprobe.errors import InputError, TemplateError
from taxoprobe.prompts import (
    PromptTemplate,
    default_templates,
    load_templates,
    query_pool,
    render,
)

EXPECTED_IDS = ["p1a", "p1b", "p2a", "p2b", "p3a", "p3b", "p3c", "p4a", "p4b", "p4c", "p5a"]


class TestDefaultTemplates:
    def test_count_and_order(self):
        templates = default_templates()
        assert len(templates) == 11
        assert [t.template_id for t in templates] == EXPECTED_IDS

    def test_type_of_pattern(self):
        q = render(default_templates()[5], "shrimp", "[MASK]")
        assert q.rendered == "shrimp is a type of [MASK]"

    def test_favorite_pattern(self):
        q = render(default_templates()[10], "sirloin", "[MASK]")
        assert q.rendered == "My favorite [MASK] is sirloin"

    def test_groups(self):
        groups = [t.group for t in default_templates()]
        assert groups == ["p1", "p1", "p2", "p2", "p3", "p3", "p3", "p4", "p4", "p4", "p5"]


class TestRender:
    def test_such_as_multiword_child(self):
        template = default_templates()[7]
        q = render(template, "mozzarella sticks", "[MASK]")
        assert q.rendered == "[MASK] such as mozzarella sticks"

    def test_alternate_mask_token(self):
        q = render(default_templates()[2], "shrimp", "<mask>")
        assert q.rendered == "shrimp is a <mask>"

    def test_kind_of_pattern(self):
        q = render(default_templates()[5], "mussel", "[MASK]")
        assert q.rendered == "mussel is a type of [MASK]"

    def test_trailing_period(self):
        q = render(default_templates()[10], "sirloin", "[MASK]", trailing_period=True)
        assert q.rendered == "My favorite [MASK] is sirloin ."

    def test_no_casing_change(self):
        q = render(default_templates()[2], "NY Strip", "[MASK]")
        assert "NY Strip" in q.rendered

    def test_empty_child_rejected(self):
        with pytest.raises(InputError):
            render(default_templates()[0], "", "[MASK]")

    def test_empty_mask_rejected(self):
        with pytest.raises(InputError):
            render(default_templates()[0], "x", "")

    def test_template_missing_placeholder(self):
        with pytest.raises(TemplateError):
            PromptTemplate("bad", "no placeholders here")

    def test_template_with_doubled_slot(self):
        with pytest.raises(TemplateError):
            PromptTemplate("bad", "{c} {c} {mask}")

    def test_child_containing_mask_token_rejected(self):
        with pytest.raises(InputError):
            render(default_templates()[0], "[MASK]", "[MASK]")

    @given(
        child=st.text(
            alphabet=st.characters(whitelist_categories=("Ll", "Nd"), whitelist_characters=" "),
            min_size=1,
        ).filter(lambda s: s.strip())
    )
    def test_rendered_contains_child_and_one_mask(self, child):
        for template in default_templates():
            q = render(template, child, "[MASK]")
            assert child in q.rendered
            assert q.rendered.count("[MASK]") == 1


class TestQueryPool:
    def test_default_pool_size(self):
        assert len(query_pool("shrimp")) == 11

    def test_single_template(self):
        pool = query_pool("x", [default_templates()[0]])
        assert len(pool) == 1

    def test_pure(self):
        assert query_pool("shrimp") == query_pool("shrimp")

    def test_order_preserved(self):
        ids = [q.template_id for q in query_pool("shrimp")]
        assert ids == EXPECTED_IDS

    def test_empty_pool_rejected(self):
        with pytest.raises(InputError):
            query_pool("x", [])


class TestTemplateFile:
    def test_load(self, tmp_path):
        path = tmp_path / "templates.tsv"
        path.write_text("# custom\nq1\t{c} tastes like {mask}\n", encoding="utf-8")
        templates = load_templates(str(path))
        assert len(templates) == 1
        assert render(templates[0], "kimchi", "[MASK]").rendered == "kimchi tastes like [MASK]"

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "templates.tsv"
        path.write_text("q1\t{c} {mask}\nq1\t{mask} {c}\n", encoding="utf-8")
        with pytest.raises(TemplateError, match="duplicate"):
            load_templates(str(path))

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "templates.tsv"
        path.write_text("# nothing\n", encoding="utf-8")
        with pytest.raises(TemplateError):
            load_templates(str(path))
