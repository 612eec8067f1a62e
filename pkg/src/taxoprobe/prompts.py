"""Cloze prompt templates and query rendering.

Eleven default hypernymy patterns in five groups (p1-p5): bare adjacency,
"is a"/"is an", "kind/type/example of", "such as", and "my favorite".  An
edge is decided from the union of predictions over the whole pool, so every
template (including both article variants) is issued for every child.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from taxoprobe.errors import InputError, TemplateError

CHILD_SLOT = "{c}"
MASK_SLOT = "{mask}"


@dataclass(frozen=True)
class PromptTemplate:
    """A cloze pattern with one child slot and one mask slot."""

    template_id: str
    pattern: str

    def __post_init__(self):
        for slot in (CHILD_SLOT, MASK_SLOT):
            if self.pattern.count(slot) != 1:
                raise TemplateError(
                    f"template {self.template_id!r} must contain {slot} exactly once: "
                    f"{self.pattern!r}"
                )

    @property
    def group(self) -> str:
        """Pattern group, e.g. "p3" for ids p3a/p3b/p3c."""
        match = re.fullmatch(r"(.+\d)[a-z]", self.template_id)
        return match.group(1) if match else self.template_id


@dataclass(frozen=True)
class PromptQuery:
    """A rendered query: the template with child and mask token substituted."""

    template_id: str
    child: str
    rendered: str


_DEFAULT_PATTERNS = (
    ("p1a", "{c} {mask}"),
    ("p1b", "{mask} {c}"),
    ("p2a", "{c} is a {mask}"),
    ("p2b", "{c} is an {mask}"),
    ("p3a", "{c} is a kind of {mask}"),
    ("p3b", "{c} is a type of {mask}"),
    ("p3c", "{c} is an example of {mask}"),
    ("p4a", "{mask} such as {c}"),
    ("p4b", "A {mask} such as {c}"),
    ("p4c", "An {mask} such as {c}"),
    ("p5a", "My favorite {mask} is {c}"),
)


@lru_cache(maxsize=1)
def default_templates() -> tuple[PromptTemplate, ...]:
    """The frozen default template set, in pool order."""
    return tuple(PromptTemplate(tid, pattern) for tid, pattern in _DEFAULT_PATTERNS)


def render(
    template: PromptTemplate,
    child: str,
    mask_token: str,
    trailing_period: bool = False,
) -> PromptQuery:
    """Substitute the child and mask token into a template.

    Pure substitution: no article adjustment and no casing change to the
    child.  ``trailing_period`` appends " ." for models whose training data
    carried terminal punctuation.
    """
    if not child:
        raise InputError("child term must be non-empty")
    if not mask_token:
        raise InputError("mask token must be non-empty")
    rendered = template.pattern.replace(MASK_SLOT, mask_token).replace(CHILD_SLOT, child)
    if trailing_period:
        rendered += " ."
    if rendered.count(mask_token) != 1:
        raise InputError(
            f"rendered query must contain the mask token exactly once: {rendered!r}"
        )
    return PromptQuery(template.template_id, child, rendered)


def query_pool(
    child: str,
    templates: tuple[PromptTemplate, ...] | list[PromptTemplate] | None = None,
    mask_token: str = "[MASK]",
    trailing_period: bool = False,
) -> list[PromptQuery]:
    """One rendered query per template, in template order."""
    if templates is None:
        templates = default_templates()
    if not templates:
        raise InputError("template pool must be non-empty")
    return [render(t, child, mask_token, trailing_period) for t in templates]


def load_templates(path: str) -> tuple[PromptTemplate, ...]:
    """Load a template set from a TSV file: one ``id<TAB>pattern`` per line."""
    templates: list[PromptTemplate] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise TemplateError(f"{path}:{line_no}: expected id<TAB>pattern")
            tid, pattern = line.split("\t", 1)
            tid = tid.strip()
            if tid in seen:
                raise TemplateError(f"{path}:{line_no}: duplicate template id {tid!r}")
            seen.add(tid)
            templates.append(PromptTemplate(tid, pattern.strip()))
    if not templates:
        raise TemplateError(f"{path}: no templates found")
    return tuple(templates)
