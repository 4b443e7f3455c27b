"""Swapping two hidden neurons leaves predictions and loss unchanged.

Swapping neurons i and j of hidden layer l exchanges rows i, j of that
layer's weight matrix (and bias) and columns i, j of the next layer's matrix.
"""
import numpy as np

from permsym import Dataset, Network, apply_permutation, loss, neuron_switch, predict, random_sibling

rng = np.random.default_rng(0)
net = Network.random((3, 4, 4, 2), rng, hidden_activation="tanh")
x = rng.normal(size=(5, 3))
data = Dataset(x, rng.normal(size=(5, 2)))

switched = neuron_switch(net, 1, 1, 3)  # layer 1, neurons 1 and 3 (one-based)
print("layer 1 rows before:\n", net.layers[0].weights.round(3))
print("layer 1 rows after:\n", switched.layers[0].weights.round(3))
print("max |prediction change|:", np.abs(predict(switched, x) - predict(net, x)).max())

# A full random relabeling of both hidden layers.
sibling, p = random_sibling(net, seed=42)
print("permutation (one-based):", p.one_based())
print("loss original :", loss(net, data))
print("loss permuted :", loss(sibling, data))

# Applying the permutation by hand gives the same network bit for bit.
print("identical to apply_permutation:", apply_permutation(net, p).identical(sibling))
