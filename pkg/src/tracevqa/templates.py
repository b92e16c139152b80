"""Versioned prompt templates.

Templates are plain text files with str.format-style placeholders, shipped
under tracevqa/prompts/ and addressed by id (the filename stem, e.g.
"plan_v1"). A templates_dir can override or extend the built-ins; the
template id used for each stage is recorded in record provenance.
"""

from __future__ import annotations

import os
from importlib import resources

DEFAULT_TEMPLATES = {
    "plan": "plan_v1",
    "compose": "compose_v1",
    "judge": "judge_v1",
    "infer_system": "infer_system_v1",
}


def load_template(template_id: str, templates_dir: str | None = None) -> str:
    """Return the raw template text for an id, external dir first."""
    if templates_dir:
        candidate = os.path.join(templates_dir, template_id + ".txt")
        if os.path.isfile(candidate):
            with open(candidate, encoding="utf-8") as fh:
                return fh.read()
    ref = resources.files("tracevqa.prompts").joinpath(template_id + ".txt")
    if not ref.is_file():
        raise FileNotFoundError(f"unknown template id {template_id!r}")
    return ref.read_text(encoding="utf-8")


def render_template(template_id: str, templates_dir: str | None = None, **fields) -> str:
    return load_template(template_id, templates_dir).format(**fields)
