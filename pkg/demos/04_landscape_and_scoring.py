"""Diagnostics: loss landscapes and sequence-level scoring.

First plots (as text) the loss along the straight line from a random
initialization to its trained weights -- the curve that distinguishes
sharp from flat minima.  Then scores token hypotheses from two imaginary
systems: per-system error rate, the per-utterance oracle lower bound, and
confidence-based selection, which an overconfident system can mislead.
"""

from otfuse import (
    DomainMixtureConfig,
    Hypothesis,
    HypothesisSet,
    LayerSpec,
    TrainConfig,
    confidence_select,
    error_rate,
    gen_synthetic,
    landscape,
    oracle_select,
    train,
)
from otfuse.nets import init_checkpoint
from otfuse.scoring import selected_set

print("== loss landscape from init to trained weights")
cfg = DomainMixtureConfig(num_classes=3, feature_dim=6, domains=(0,))
train_set, held_set = gen_synthetic(cfg, 5)
specs = (LayerSpec(6, 12, "relu"), LayerSpec(12, 3, "identity"))
theta0 = init_checkpoint(specs, 5)
theta = train(specs, train_set, TrainConfig(epochs=120, batch_size=32, seed=5))
curve = landscape(theta0, theta, held_set, num_points=13)
peak = curve.losses.max()
for a, l in zip(curve.alphas, curve.losses):
    bar = "#" * int(round(40 * l / peak))
    print(f"  alpha={a:4.2f}  loss={l:7.4f}  {bar}")

print("\n== scoring two systems against references")
refs = {
    "utt1": ("the", "cat", "sat"),
    "utt2": ("on", "the", "mat"),
    "utt3": ("hello", "there"),
}
steady = HypothesisSet("steady", {
    "utt1": Hypothesis("utt1", ("the", "cat", "sat"), (0.6, 0.6, 0.6)),
    "utt2": Hypothesis("utt2", ("on", "a", "mat"), (0.6, 0.5, 0.6)),
    "utt3": Hypothesis("utt3", ("hello", "there"), (0.7, 0.7)),
})
cocky = HypothesisSet("cocky", {
    "utt1": Hypothesis("utt1", ("a", "dog", "ran"), (0.95, 0.95, 0.95)),
    "utt2": Hypothesis("utt2", ("on", "the", "mat"), (0.9, 0.9, 0.9)),
    "utt3": Hypothesis("utt3", ("goodbye",), (0.99,)),
})
systems = [steady, cocky]
for hs in systems:
    print(f"  {hs.system_name:<8} WER {100 * error_rate(refs, hs):5.1f}%")

oracle = oracle_select(systems, refs)
print(f"  oracle   WER {100 * oracle.wer:5.1f}%  picks: {oracle.selection}")

picked = confidence_select(systems)
sel_wer = error_rate(refs, selected_set(systems, picked))
print(f"  by confidence WER {100 * sel_wer:5.1f}%  picks: {picked}")
print("\nconfidence selection trusts the overconfident system and pays for it;")
print("the oracle shows how much headroom a perfect selector would have")
