#!/usr/bin/env python3
"""Pick the best target domain without looking at its labels.

The built-in synthetic benchmark produces one source, a ladder of
progressively shifted targets, a frozen classifier head, and the true
accuracy of that head on every target. We score each target with the
transport metric and with the entropy baseline, then check which ranking
agrees with the hidden accuracies.
"""

import numpy as np

from tetot import (
    Candidate,
    TetotConfig,
    compute_tetot,
    correlate_with_accuracy,
    generate_synthetic_fixture,
    prediction_entropy,
    rank_candidates,
)

source, targets, head, true_accs = generate_synthetic_fixture(
    dim=16,
    num_classes=4,
    shift_levels=[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
    n_per_domain=300,
    seed=0,
)

tetot_batch = []
entropy_batch = []
for tgt, acc in zip(targets, true_accs):
    rep = compute_tetot(source, tgt, head=head, config=TetotConfig())
    tetot_batch.append(Candidate(tgt.domain_id, rep, acc))
    entropy_batch.append(Candidate(tgt.domain_id, prediction_entropy(head, tgt), acc))

print("domain       tetot    entropy   true acc")
for t, e, acc in zip(tetot_batch, entropy_batch, true_accs):
    print(f"{t.candidate_id}  {t.metric.value:8.4f}  {e.metric.value:8.4f}   {acc:.3f}")

ranking = rank_candidates(tetot_batch)  # lower is better
best_by_acc = max(tetot_batch, key=lambda c: c.accuracy).candidate_id
print()
print(f"metric picks:    {ranking[0]}")
print(f"accuracy picks:  {best_by_acc}")

rho_t = correlate_with_accuracy(tetot_batch, "tetot").rho
rho_e = correlate_with_accuracy(entropy_batch, "entropy").rho
print()
print(f"Pearson rho vs accuracy: tetot {rho_t:+.3f}, entropy {rho_e:+.3f}")
print("(strongly negative = the score falls exactly when accuracy rises)")
