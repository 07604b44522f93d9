"""Markdown risk report for the ``score`` command."""

from __future__ import annotations

from typing import Any, Sequence

from ..explain import LocalExplanation
from ..model import RiskScore, TrainedModel
from ..model.ensemble import KIND_NAMES


def _fmt_weight(w: float) -> str:
    return f"{w:+.4f}"


def risk_report(
    scores: Sequence[RiskScore],
    flagged: Sequence[RiskScore],
    explanations: Sequence[LocalExplanation],
    threshold: float,
    model: TrainedModel,
    header: dict[str, Any],
) -> str:
    lines = [
        "# Editor churn risk report",
        "",
        f"<!-- config_hash={header['config_hash']} seed={header['seed']} -->",
        "",
        f"- Classifier: {KIND_NAMES[model.kind]} on {'+'.join(model.groups)}",
        f"- Editors scored: {len(scores)}",
        f"- Flagged (probability > {threshold}): {len(flagged)}",
        "",
    ]
    if not flagged:
        lines += ["No editor exceeds the confidence threshold.", ""]
        return "\n".join(lines)
    lines += ["## Flagged editors", "", "| Rank | Editor | Probability |", "|---:|---|---:|"]
    for i, s in enumerate(flagged, 1):
        lines.append(f"| {i} | {s.editor} | {s.probability:.4f} |")
    lines.append("")
    by_editor = {e.editor: e for e in explanations}
    lines += ["## Local explanations", ""]
    for s in flagged:
        e = by_editor.get(s.editor)
        if e is None:
            continue
        lines += [
            f"### {s.editor}",
            "",
            f"Surrogate fit R^2: {e.surrogate_fit_r2:.3f}",
            "",
            "| Feature | Weight |",
            "|---|---:|",
        ]
        lines += [f"| {name} | {_fmt_weight(w)} |" for name, w in e.top_features]
        lines.append("")
    return "\n".join(lines)
