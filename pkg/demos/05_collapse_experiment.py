"""The headline experiment: watch a supervised model discard domain features.

A linear softmax classifier is trained from scratch on data from a single
domain. Because the domain block is independent of the labels, weight decay
drives its weights toward zero -- so the logits retain (provably, in the
idealized discrete setting; measurably, here) no domain information. A probe
then certifies Fano lower bounds on what each representation knows about
the domain, and the detection comparison shows the practical consequence
plus the fix: filter first in a space that still sees domains.
"""

from oodkit.collapse import SynthConfig, TrainConfig, collapse_experiment

cfg = SynthConfig(seed=0)
report = collapse_experiment(cfg, TrainConfig(seed=0))
print(report.to_text())

mb = report.mi_bounds
hd = mb["h_domain_nats"]
print("reading the numbers:")
print(f"  raw features certify  {mb['raw']['mi_bound_nats'] / hd:6.1%} of H(domain)")
print(f"  supervised logits certify {mb['logits']['mi_bound_nats'] / hd:6.1%} "
      f"-- the domain information collapsed")
det = report.detection
print(f"  far-OOD FPR@95 drops {det['second_only']['far_fpr95']:.1%} -> "
      f"{det['two_stage']['far_fpr95']:.1%} once the filter guards the second stage")
print(f"  but on held-out classes of the SAME domain the filter alone is useless "
      f"(AUROC {det['filter_only']['adjacent_auroc']:.2f}), which is why two stages exist")
