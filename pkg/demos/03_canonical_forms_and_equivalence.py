"""Deciding whether two networks are the same up to neuron relabeling.

Sorting each hidden layer's neurons by their incoming weights (then bias)
picks one representative per orbit. Two networks are equivalent when their
representatives agree.
"""
import numpy as np

from permsym import LayerWeights, Network, canonicalize, equivalent, random_sibling

rng = np.random.default_rng(1)
net = Network.random((2, 3, 2, 1), rng)
sibling, p = random_sibling(net, seed=7)

canon_a, _ = canonicalize(net)
canon_b, _ = canonicalize(sibling)
print("canonical forms identical:", canon_a.identical(canon_b))

for mode in ("canonical", "brute_force"):
    verdict = equivalent(net, sibling, tol=1e-9, mode=mode)
    print(f"{mode:12s} equivalent={verdict.equivalent} witness={verdict.witness.one_based()}")
print("drawn permutation:         ", p.one_based())

# Change one weight: no relabeling can undo it.
w = sibling.layers[1].weights.copy()
w[0, 0] += 1.0
tampered = sibling.replace_layers([sibling.layers[0], LayerWeights(w, sibling.layers[1].bias),
                                   sibling.layers[2]])
verdict = equivalent(net, tampered, tol=1e-9, mode="brute_force")
print("tampered: equivalent =", verdict.equivalent, "best deviation =", round(verdict.max_deviation, 3))
