"""Walkthrough: the SMO trainer, its kernels, and why permuted features
cannot change what an SVM learns.

Trains on hand-made 2-D problems where the answer is known, then shows
the property the whole package leans on: training on permuted features
and querying with equally permuted vectors gives the same decisions.
"""

import numpy as np

from etchog import KernelSpec, TrainConfig, decision, kernel_eval, predict, train_binary_smo, train_one_vs_rest

rng = np.random.default_rng(3)

print("kernels:")
a, b = np.array([3.0, 4.0]), np.array([1.0, 0.0])
print(f"  linear   <a,b> = {kernel_eval(KernelSpec('linear'), a, b):.1f}")
print(f"  gaussian exp(-0.5*|a-b|^2) = {kernel_eval(KernelSpec('gaussian', 0.5), a, b):.4f}")

print("\nseparable toy problem: (1,1)->+1 vs (-1,-1)->-1")
x = np.array([[1.0, 1.0], [-1.0, -1.0]])
y = np.array([1.0, -1.0])
model = train_binary_smo(x, y, TrainConfig(c=1.0), KernelSpec("linear"))
for query in [(2.0, 2.0), (-2.0, -2.0), (0.1, -0.1)]:
    print(f"  decision{query} = {decision(model, np.array(query)):+.3f}")
print(f"  support vectors: {len(model.alphas)}, bias {model.bias:+.3f}")

print("\ncontradictory duplicates (same point, labels +1 and -1):")
x = np.array([[0.5, 0.5], [0.5, 0.5]])
model = train_binary_smo(x, np.array([1.0, -1.0]), TrainConfig(c=1.0), KernelSpec("linear"))
print(f"  decision at the point = {decision(model, x[0]):+.2e} (the only consistent answer is ~0)")

print("\nthree Gaussian blobs, one-vs-rest:")
centers = [(0, 0), (4, 0), (0, 4)]
xs = np.vstack([rng.normal(c, 0.35, size=(12, 2)) for c in centers])
labels = [f"blob{k}" for k in range(3) for _ in range(12)]
multi = train_one_vs_rest(xs, labels, TrainConfig(), KernelSpec("linear"))
train_accuracy = np.mean([p == t for p, t in zip(predict(multi, xs), labels)])
print(f"  training accuracy {train_accuracy:.0%} over {len(labels)} points")

print("\npermutation invariance (the mechanism behind encrypted-domain ML):")
perm = rng.permutation(2)
cfg = TrainConfig(kkt_tol=1e-7)
for kind, spec in [("linear", KernelSpec("linear")), ("gaussian", KernelSpec("gaussian", 0.5))]:
    base = train_binary_smo(xs, np.where(np.array(labels) == "blob0", 1.0, -1.0), cfg, spec)
    shuffled = train_binary_smo(xs[:, perm], np.where(np.array(labels) == "blob0", 1.0, -1.0), cfg, spec)
    queries = rng.normal(1.5, 1.0, size=(6, 2))
    gap = np.abs(decision(base, queries) - decision(shuffled, queries[:, perm])).max()
    print(f"  {kind}: max decision gap after permuting every vector = {gap:.2e}")
print("  kernels see only dot products / distances, and permutations preserve both")
