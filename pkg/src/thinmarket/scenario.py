"""Scenario files and report documents.

Scenarios and reports are JSON with a fixed, canonical field order and full
decimal precision, so parse -> serialize round-trips are value-identical and
identical inputs produce byte-identical reports.  Non-finite numbers never
appear as bare numerals: an infinite elasticity is the quoted token "inf".
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .best_response import Elasticity
from .errors import ScenarioError
from .model import MarketModel, TraderProfile, ValidationResult

SCHEMA_VERSION = "1"
INF_TOKEN = "inf"


def _require(mapping: dict, field: str, kind, path: str):
    if field not in mapping:
        raise ScenarioError(f"{path}{field}", "missing")
    value = mapping[field]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{path}{field}", "must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise ScenarioError(f"{path}{field}", f"must be of type {kind.__name__}")
    return value


def _number_list(values, field: str) -> list[float]:
    if not isinstance(values, list) or not values:
        raise ScenarioError(field, "must be a non-empty array of numbers")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(field, "must contain numbers only")
        out.append(float(v))
    return out


def scenario_from_dict(data: Any) -> MarketModel:
    if not isinstance(data, dict):
        raise ScenarioError("(root)", "scenario must be a JSON object")
    version = _require(data, "schema_version", str, "")
    if version != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"unrecognized version {version!r}")

    raw_cov = _require(data, "securities_cov", list, "")
    rows = [_number_list(row, f"securities_cov[{i}]") for i, row in enumerate(raw_cov)]
    width = len(rows[0]) if rows else 0
    if not rows or any(len(r) != width for r in rows):
        raise ScenarioError("securities_cov", "matrix rows are ragged")
    if len(rows) != width:
        raise ScenarioError("securities_cov", "matrix must be square")

    raw_traders = _require(data, "traders", list, "")
    if len(raw_traders) < 1:
        raise ScenarioError("traders", "must be a non-empty array")
    traders = []
    for i, item in enumerate(raw_traders):
        if not isinstance(item, dict):
            raise ScenarioError(f"traders[{i}]", "must be an object")
        path = f"traders[{i}]."
        delta = _require(item, "delta", float, path)
        cov_es = _number_list(
            _require(item, "cov_es", list, path), f"traders[{i}].cov_es"
        )
        if len(cov_es) != width:
            raise ScenarioError(
                f"traders[{i}].cov_es", f"length {len(cov_es)} does not match matrix size {width}"
            )
        mean = item.get("endowment_mean", 0.0)
        if isinstance(mean, bool) or not isinstance(mean, (int, float)):
            raise ScenarioError(f"traders[{i}].endowment_mean", "must be a number")
        var = item.get("endowment_var", 0.0)
        if isinstance(var, bool) or not isinstance(var, (int, float)):
            raise ScenarioError(f"traders[{i}].endowment_var", "must be a number")
        traders.append(
            TraderProfile(
                delta=delta,
                cov_endowment_securities=np.array(cov_es),
                endowment_mean=float(mean),
                endowment_var=float(var),
            )
        )

    total = data.get("total_endowment_var")
    if total is not None and (isinstance(total, bool) or not isinstance(total, (int, float))):
        raise ScenarioError("total_endowment_var", "must be a number")

    try:
        return MarketModel(
            securities_cov=np.array(rows),
            traders=tuple(traders),
            total_endowment_var=None if total is None else float(total),
        )
    except ValueError as exc:
        raise ScenarioError("(model)", str(exc))


def load_scenario(path) -> MarketModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("(json)", f"not valid JSON: {exc}")
    return scenario_from_dict(data)


def scenario_to_dict(model: MarketModel) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "securities_cov": [[float(v) for v in row] for row in model.securities_cov],
        "traders": [
            {
                "delta": float(t.delta),
                "cov_es": [float(v) for v in t.cov_endowment_securities],
                "endowment_mean": float(t.endowment_mean),
                "endowment_var": float(t.endowment_var),
            }
            for t in model.traders
        ],
    }
    if model.total_endowment_var is not None:
        doc["total_endowment_var"] = float(model.total_endowment_var)
    return doc


def save_scenario(model: MarketModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(document_json(scenario_to_dict(model)))


def elasticity_token(theta: Elasticity):
    return INF_TOKEN if theta.is_infinite else float(theta.as_float)


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values).ravel()]


def build_report(
    model: MarketModel,
    validation: ValidationResult,
    exposures=None,
    competitive=None,
    nash=None,
    comparison=None,
    incompleteness=None,
) -> dict:
    """Assemble the full analysis document; blocks for stages that did not run
    are simply absent."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario_to_dict(model),
        "validation": {"ok": validation.ok, "violations": list(validation.violations)},
    }
    if exposures is not None:
        doc["exposures"] = {
            "a": [_floats(row) for row in exposures.a],
            "a_total": _floats(exposures.a_total),
            "beta": None if exposures.beta is None else _floats(exposures.beta),
            "lambda": _floats(exposures.lam),
            "delta_total": float(exposures.delta_total),
            "aggregate_market_variance": float(exposures.aggregate_market_variance),
            "is_trivial": bool(exposures.is_trivial),
            "autarky_utilities": _floats(exposures.u),
        }
    if competitive is not None:
        doc["competitive"] = _outcome_block(competitive)
    if nash is not None:
        block: dict[str, Any] = {"kind": nash.kind}
        if nash.elasticities is not None:
            block["elasticities"] = [elasticity_token(t) for t in nash.elasticities]
            block["theta_total"] = elasticity_token(nash.theta_total)
            block["k_shares"] = _floats(nash.k_shares)
        if nash.outcome is not None:
            block.update(_outcome_block(nash.outcome))
        if nash.residuals is not None:
            block["residuals"] = _floats(nash.residuals)
        if nash.detail is not None:
            block["detail"] = nash.detail
        doc["nash"] = block
    if comparison is not None:
        block = {
            "du": _floats(comparison.du),
            "inefficiency": float(comparison.inefficiency),
            "premium_competitive": _floats(comparison.premium_competitive),
            "premium_nash": _floats(comparison.premium_nash),
            "payoff_gain_competitive": _floats(comparison.payoff_gain_competitive),
            "payoff_gain_nash": _floats(comparison.payoff_gain_nash),
        }
        if comparison.L is not None:
            block["L"] = float(comparison.L)
        doc["comparison"] = block
    if incompleteness is not None:
        doc["incompleteness"] = {
            "du": _floats(incompleteness.du),
            "du_complete": _floats(incompleteness.du_complete),
            "du_gap": _floats(incompleteness.du_gap),
            "aggregate_gap": float(incompleteness.aggregate_gap),
            "competitive_sq_gain": _floats(incompleteness.competitive_sq_gain),
            "competitive_sq_gain_complete": _floats(incompleteness.competitive_sq_gain_complete),
            "competitive_sq_gain_gap": _floats(incompleteness.competitive_sq_gain_gap),
        }
    return doc


def _outcome_block(outcome) -> dict:
    return {
        "prices": _floats(outcome.prices),
        "allocations": [_floats(row) for row in outcome.allocations],
        "post_beta": _floats(outcome.post_beta),
        "beta_defined": bool(outcome.beta_defined),
        "utilities": _floats(outcome.utilities),
        "premium": _floats(outcome.premium),
    }


def document_json(doc: dict) -> str:
    """Deterministic rendering: insertion-ordered keys, two-space indent,
    shortest round-trip float repr, trailing newline."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_report(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(document_json(doc))
