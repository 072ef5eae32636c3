"""Report assembly and serialization: report.json, rows.csv, manifest.json.

Serialization is byte-deterministic: keys are sorted, floats use their
shortest round-trip repr, and nothing derived from wall-clock time is ever
written.  The JSON document validates against the schema shipped with the
package.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

import jsonschema

from . import __version__
from .measure import AgentComparison, AgentMeasurement, Ensemble

SCHEMA_VERSION = 1
CSV_HEADER = ("program_id", "length_bits", "weight", "agent",
              "value_mean", "value_ci", "episodes")


def load_report_schema() -> dict:
    text = resources.files("agentgauge").joinpath("schemas/report-v1.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_report_schema())


def build_report(seed: int, ensemble: Ensemble,
                 measurements: list[AgentMeasurement],
                 comparisons: list[AgentComparison],
                 valuation_params,
                 external_warnings: dict[str, int] | None = None) -> dict:
    spec = ensemble.spec
    report = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "ensemble": {
            "max_length_bits": spec.max_program_length_bits,
            "dedup_horizon": spec.dedup_horizon,
            "weight_scheme": spec.weight_scheme,
            "renormalize": spec.renormalize,
            "sample_size": spec.sample_size,
            "program_count": ensemble.program_count,
            "entry_count": len(ensemble.entries),
            "kraft_sum": f"{ensemble.kraft_sum.numerator}/{ensemble.kraft_sum.denominator}",
            "kraft_sum_float": float(ensemble.kraft_sum),
        },
        "valuation": {
            "mode": valuation_params.mode,
            "horizon": valuation_params.horizon,
            "episodes": valuation_params.episodes,
            "trunc_epsilon": valuation_params.trunc_epsilon,
            "confidence": valuation_params.confidence,
        },
        "agents": {
            m.agent_name: {
                "intelligence": m.score,
                "ci_half_width": m.ci_half_width,
                "failed_rollouts": m.failed_rollouts,
            }
            for m in measurements
        },
        "environments": [
            {
                "program_id": entry.identifier,
                "length_bits": entry.length_bits,
                "weight": entry.weight,
                "members": entry.member_count,
                "values": {
                    m.agent_name: {
                        "mean": m.estimates[entry.identifier].mean,
                        "ci_half_width": m.estimates[entry.identifier].ci_half_width,
                        "episodes": m.estimates[entry.identifier].episodes_used,
                        "truncation_bound": m.estimates[entry.identifier].truncation_bound,
                        "failed": m.estimates[entry.identifier].failed_episodes,
                    }
                    for m in measurements
                },
            }
            for entry in ensemble.entries
        ],
        "comparisons": [
            {
                "agent_a": c.agent_a,
                "agent_b": c.agent_b,
                "mean_difference": c.mean_difference,
                "ci_low": c.ci_low,
                "ci_high": c.ci_high,
                "significant": c.significant,
            }
            for c in comparisons
        ],
        "external_timeout_warnings": dict(sorted((external_warnings or {}).items())),
    }
    return report


def report_rows_csv(report: dict) -> str:
    """Per-environment rows as CSV text, numbers identical to the JSON."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in report["environments"]:
        for agent, value in sorted(row["values"].items()):
            writer.writerow([
                row["program_id"], row["length_bits"], repr(row["weight"]),
                agent, repr(value["mean"]), repr(value["ci_half_width"]),
                value["episodes"],
            ])
    return buffer.getvalue()


def build_manifest(command: str, seed: int, raw_config: dict[str, str]) -> dict:
    return {
        "tool": "agentgauge",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": dict(sorted(raw_config.items())),
    }


def dump_json(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_run_outputs(output_dir, report: dict, manifest: dict) -> None:
    import pathlib

    out = pathlib.Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    validate_report(report)
    (out / "report.json").write_text(dump_json(report), encoding="utf-8")
    (out / "rows.csv").write_text(report_rows_csv(report), encoding="utf-8")
    (out / "manifest.json").write_text(dump_json(manifest), encoding="utf-8")
