from __future__ import annotations

import pytest

from quotekit.templating import format_money, render_proposal

from .test_schemas import golden_proposal


def test_single_money_substitution():
    out = render_proposal(golden_proposal(), "Total: {{pricing_section.total_price}}")
    assert out == "Total: $18,000.00"


def test_unknown_path_is_named():
    with pytest.raises(ValueError, match="pricing_section.discount"):
        render_proposal(golden_proposal(), "{{pricing_section.discount}}")


def test_string_arrays_render_as_bullets():
    out = render_proposal(golden_proposal(), "{{goals_list}}")
    assert out == "- goal one\n- goal two"


def test_timeline_renders_as_week_blocks():
    out = render_proposal(golden_proposal(), "{{timeline_breakdown}}")
    assert out.startswith("Week 1-2: Discovery")
    assert "Focus: De-risk integrations" in out
    assert "  - audit" in out and "  - memo" in out


def test_indexed_paths_resolve():
    out = render_proposal(golden_proposal(), "{{timeline_breakdown[0].title}}")
    assert out == "Discovery"


def test_non_money_numbers_render_plain():
    data = golden_proposal()
    out = render_proposal(data, "{{pricing_section.currency}}")
    assert out == "USD"


def test_whole_object_reference_is_rejected():
    with pytest.raises(ValueError, match="whole object"):
        render_proposal(golden_proposal(), "{{pricing_section}}")


def test_unresolved_placeholder_is_an_invariant_failure():
    data = golden_proposal()
    data["project_name"] = "{{ sneaky }}"
    with pytest.raises(RuntimeError, match="unresolved placeholder"):
        render_proposal(data, "{{project_name}}")


def test_whitespace_tolerant_placeholders():
    out = render_proposal(golden_proposal(), "{{  project_name  }}")
    assert out == "Automation Build"


def test_format_money():
    assert format_money(18_000) == "$18,000.00"
    assert format_money(1234.5) == "$1,234.50"


def test_any_contract_valid_proposal_renders_with_the_default_template():
    # The shipped template references only contract-required fields, so a
    # schema-valid payload can never hit a missing-path error.
    from quotekit.agents import default_template
    from quotekit.schemas import draft_schema, validate

    proposal = golden_proposal()
    assert validate(proposal, draft_schema()).valid
    document = render_proposal(proposal, default_template())
    assert "{{" not in document
    assert "$18,000.00" in document
