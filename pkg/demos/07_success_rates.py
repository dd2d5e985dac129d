"""Recompute the bundled study's success-rate tables and audit them.

The bundled CSV transcribes 500 trials (10 participants x 5 features x 10
responses). Per-cell rates reproduce the published tables exactly; the
published per-participant averages column does NOT equal the recomputed
means (and carries a duplicated FP1 row), so the kit reports those cells
as discrepancies instead of guessing how they were derived.
"""

from mirrord import evalkit

records = evalkit.bundled_trials()
print(f"ingested {len(records)} trial records\n")

report = evalkit.aggregate(records)
print(evalkit.render_text(report))
