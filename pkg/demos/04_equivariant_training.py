"""Gradient descent from relabeled starting points ends in relabeled minima.

Training from a network and from its relabeling produces trajectories that
stay related by the same relabeling at every step, so the minima they reach
are equivalent.
"""
import numpy as np

from permsym import (Dataset, Network, TrainConfig, apply_permutation, equivalent,
                     equivariance_experiment, loss, random_permutation, sgd_train)

rng = np.random.default_rng(3)
x = np.linspace(-1, 1, 32).reshape(16, 2)
data = Dataset(x, np.sin(3 * x[:, :1]) * x[:, 1:])

net = Network.random((2, 6, 6, 1), rng, hidden_activation="tanh")
p = random_permutation(net.hidden_widths, seed=11)
cfg = TrainConfig(learning_rate=0.1, steps=300)

report = equivariance_experiment(net, p, data, cfg)
print("gradient deviation   :", report.max_gradient_deviation)
print("trajectory deviation :", report.max_trajectory_deviation, f"over {report.steps_compared} snapshots")

end_a = sgd_train(net, data, cfg)[-1]
end_b = sgd_train(apply_permutation(net, p), data, cfg)[-1]
print("final losses:", loss(end_a, data), loss(end_b, data))
print("end points equivalent:", equivalent(end_a, end_b, tol=1e-6).equivalent)
