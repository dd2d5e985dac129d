"""Success-rate evaluation kit.

Ingests per-trial logs (participant, feature, trial index, success flag),
recomputes per-cell success rates and per-participant averages, and audits
them against the published rate tables bundled with the package. The
published averages column is reproduced verbatim for the overall mean
(first occurrence of each participant; the column carries a duplicated FP1
row, which is flagged), while every cell whose recomputed value disagrees
with its published value lands in the discrepancy list rather than being
silently corrected.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources


class EvalError(Exception):
    pass


class MalformedRow(EvalError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownFeature(EvalError):
    def __init__(self, line, feature):
        super().__init__(f"line {line}: unknown feature {feature!r}")
        self.line = line


class DuplicateTrial(EvalError):
    def __init__(self, line, key):
        super().__init__(f"line {line}: duplicate trial {key}")
        self.line = line


class NoTrials(EvalError):
    pass


FEATURES = ("face_recognition", "youtube", "alarm", "traffic", "daily_schedule")
PARTICIPANTS = ("MP1", "MP2", "MP3", "MP4", "MP5", "MP6",
                "FP1", "FP2", "FP3", "FP4")


@dataclass(frozen=True)
class TrialRecord:
    participant: str
    feature: str
    trial_index: int
    success: bool


@dataclass
class RateReport:
    rates: dict  # (participant, feature) -> percentage
    participant_averages: dict  # participant -> recomputed mean of 5 rates
    overall_average: float  # mean of published averages, distinct participants
    reported_overall: float
    discrepancies: list = field(default_factory=list)

    def to_jsonable(self):
        return {
            "rates": {f"{p}:{f}": v for (p, f), v in sorted(self.rates.items())},
            "participant_averages": dict(sorted(self.participant_averages.items())),
            "overall_average": self.overall_average,
            "reported_overall": self.reported_overall,
            "discrepancies": list(self.discrepancies),
        }


def ingest_trials(source) -> list:
    """Parse and validate a trials CSV (path, file object, or text)."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty file") from None
    if [h.strip() for h in header] != ["participant", "feature", "trial_index", "success"]:
        raise MalformedRow(1, f"bad header {header!r}")

    records = []
    seen = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise MalformedRow(line_no, f"expected 4 columns, got {len(row)}")
        participant, feature, idx_s, success_s = (c.strip() for c in row)
        if feature not in FEATURES:
            raise UnknownFeature(line_no, feature)
        try:
            trial_index = int(idx_s)
        except ValueError:
            raise MalformedRow(line_no, f"bad trial_index {idx_s!r}") from None
        if trial_index < 1:
            raise MalformedRow(line_no, f"trial_index must be >= 1, got {trial_index}")
        if success_s not in ("0", "1"):
            raise MalformedRow(line_no, f"success must be 0 or 1, got {success_s!r}")
        key = (participant, feature, trial_index)
        if key in seen:
            raise DuplicateTrial(line_no, key)
        seen.add(key)
        records.append(TrialRecord(participant, feature, trial_index,
                                   success_s == "1"))
    return records


def success_rate(records, participant: str, feature: str) -> float:
    trials = [r for r in records
              if r.participant == participant and r.feature == feature]
    if not trials:
        raise NoTrials(f"no trials for ({participant}, {feature})")
    return 100.0 * sum(r.success for r in trials) / len(trials)


def load_published():
    text = resources.files("mirrord.data").joinpath("published_rates.json").read_text()
    return json.loads(text)


def aggregate(records, published=None) -> RateReport:
    """Recompute all rates and audit them against the published tables."""
    if not records:
        raise NoTrials("no records")
    if published is None:
        published = load_published()

    cells = sorted({(r.participant, r.feature) for r in records})
    rates = {cell: success_rate(records, *cell) for cell in cells}

    participants = sorted({p for p, _ in cells},
                          key=lambda p: (PARTICIPANTS.index(p)
                                         if p in PARTICIPANTS else 99, p))
    participant_averages = {}
    for p in participants:
        mine = [v for (pp, _f), v in rates.items() if pp == p]
        participant_averages[p] = sum(mine) / len(mine)

    published_avg_first = {}
    duplicate_rows = []
    for p, value in published["averages_rows"]:
        if p in published_avg_first:
            duplicate_rows.append((p, value))
        else:
            published_avg_first[p] = value
    overall = sum(published_avg_first.values()) / len(published_avg_first)

    discrepancies = []

    def check(cell, pub, rec):
        if pub is not None and abs(pub - rec) > 1e-9:
            discrepancies.append({"cell": cell, "published": pub, "recomputed": rec})

    for p in participants:
        check(f"face_recognition:{p}",
              published.get("face_recognition", {}).get(p),
              rates.get((p, "face_recognition")))
        for feat in ("youtube", "alarm", "traffic", "daily_schedule"):
            if (p, feat) in rates:
                check(f"voice_input:{p}:{feat}",
                      published.get("voice_input", {}).get(p, {}).get(feat),
                      rates[(p, feat)])
        check(f"averages:{p}", published_avg_first.get(p),
              participant_averages[p])
    for p, value in duplicate_rows:
        discrepancies.append({
            "cell": f"averages:{p}:duplicate_row",
            "published": value,
            "recomputed": participant_averages.get(p),
        })

    return RateReport(
        rates=rates,
        participant_averages=participant_averages,
        overall_average=overall,
        reported_overall=published.get("reported_overall_average", overall),
        discrepancies=discrepancies,
    )


def bundled_trials() -> list:
    text = resources.files("mirrord.data").joinpath("study_trials.csv").read_text()
    return ingest_trials(text)


def render_text(report: RateReport) -> str:
    """Human-readable rate table plus the discrepancy audit."""
    lines = []
    participants = list(report.participant_averages)
    header = f"{'participant':<12}" + "".join(f"{f:>16}" for f in FEATURES) + f"{'avg':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for p in participants:
        row = f"{p:<12}"
        for f in FEATURES:
            v = report.rates.get((p, f))
            row += f"{v:>15.1f}%" if v is not None else f"{'-':>16}"
        row += f"{report.participant_averages[p]:>7.1f}%"
        lines.append(row)
    lines.append("")
    lines.append(f"overall average (published column, distinct participants): "
                 f"{report.overall_average:.2f}%")
    lines.append(f"reported overall average: {report.reported_overall:.2f}%")
    lines.append("")
    if report.discrepancies:
        lines.append(f"discrepancies ({len(report.discrepancies)}):")
        for d in report.discrepancies:
            rec = "-" if d["recomputed"] is None else f"{d['recomputed']:.1f}"
            lines.append(f"  {d['cell']}: published {d['published']:.1f} "
                         f"vs recomputed {rec}")
    else:
        lines.append("no discrepancies")
    return "\n".join(lines)
