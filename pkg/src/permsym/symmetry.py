"""Neuron relabelings of hidden layers and what they leave invariant.

A layer permutation is stored zero-based as a tuple ``mapping`` where
``mapping[i]`` is the new position of neuron ``i``. Applying it moves row
``i`` of the layer's weight matrix (and bias entry ``i``) to row
``mapping[i]``, and column ``i`` of the next layer's matrix to column
``mapping[i]``. The network function is unchanged by construction.

``compose(p, q)`` is "q first, then p", so
``apply_permutation(net, compose(p, q)) == apply_permutation(apply_permutation(net, q), p)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .network import InvalidInputError, LayerWeights, Network, require_valid

#: Upper bound on the number of candidate relabelings any exhaustive search may visit.
SEARCH_BUDGET = 10**6


@dataclass(frozen=True)
class LayerPermutation:
    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(m) for m in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise InvalidInputError(f"{list(mapping)} is not a permutation of 0..{len(mapping) - 1}")
        object.__setattr__(self, "mapping", mapping)

    def __len__(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, n: int) -> "LayerPermutation":
        return cls(tuple(range(n)))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "LayerPermutation":
        m = list(range(n))
        m[i], m[j] = m[j], m[i]
        return cls(tuple(m))

    @property
    def order(self) -> np.ndarray:
        """``order[k]`` is the old index of the neuron that lands at position ``k``."""
        out = np.empty(len(self.mapping), dtype=np.intp)
        out[list(self.mapping)] = np.arange(len(self.mapping))
        return out

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(len(self.mapping)))

    def transpositions(self) -> list:
        """Swaps (i, j) which, applied left to right as neuron switches, realize this permutation."""
        target = self.order
        current = list(range(len(self.mapping)))
        where = list(range(len(self.mapping)))
        swaps = []
        for pos in range(len(current)):
            want = int(target[pos])
            if current[pos] != want:
                k = where[want]
                swaps.append((pos, k))
                current[pos], current[k] = current[k], current[pos]
                where[current[pos]], where[current[k]] = pos, k
        return swaps


@dataclass(frozen=True)
class NetworkPermutation:
    per_layer: tuple

    def __post_init__(self):
        object.__setattr__(self, "per_layer", tuple(
            p if isinstance(p, LayerPermutation) else LayerPermutation(p)
            for p in self.per_layer))

    @property
    def widths(self) -> tuple:
        return tuple(len(p) for p in self.per_layer)

    @classmethod
    def identity(cls, widths: Sequence[int]) -> "NetworkPermutation":
        return cls(tuple(LayerPermutation.identity(n) for n in widths))

    @classmethod
    def from_one_based(cls, per_layer) -> "NetworkPermutation":
        try:
            return cls(tuple(LayerPermutation(tuple(int(v) - 1 for v in p)) for p in per_layer))
        except TypeError as exc:
            raise InvalidInputError(f"malformed permutation: {exc}") from None

    def one_based(self) -> list:
        return [[m + 1 for m in p.mapping] for p in self.per_layer]

    def is_identity(self) -> bool:
        return all(p.is_identity() for p in self.per_layer)


@dataclass(frozen=True)
class OrbitCount:
    exact: int
    log10: float

    @property
    def digits(self) -> int:
        return len(str(self.exact))

    @property
    def mantissa(self) -> float:
        return 10 ** (self.log10 - math.floor(self.log10))


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    witness: Optional[NetworkPermutation]
    max_deviation: float
    tie_search: bool = False


def deviation(x: np.ndarray, y: np.ndarray) -> float:
    """Largest entrywise difference, relative for magnitudes >= 1 and absolute below."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        return 0.0
    scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
    return float(np.max(np.abs(x - y) / scale))


def network_deviation(a: Network, b: Network) -> float:
    dev = 0.0
    for la, lb in zip(a.layers, b.layers):
        dev = max(dev, deviation(la.weights, lb.weights))
        if la.bias is not None:
            dev = max(dev, deviation(la.bias, lb.bias))
    return dev


def _check_compatible(widths: Sequence[int], p: NetworkPermutation) -> None:
    if tuple(widths) != p.widths:
        raise InvalidInputError(f"permutation widths {p.widths} do not match hidden widths {tuple(widths)}")


def permute_layers(layers: Sequence[LayerWeights], p: NetworkPermutation) -> tuple:
    """Relabel hidden neurons of a weight-shaped layer sequence.

    Shared by networks and gradient sets, which transform identically.
    """
    widths = tuple(l.weights.shape[0] for l in layers[:-1])
    _check_compatible(widths, p)
    out = list(layers)
    for h, lp in enumerate(p.per_layer):
        if lp.is_identity():
            continue
        order = lp.order
        cur = out[h]
        out[h] = LayerWeights(cur.weights[order, :],
                              None if cur.bias is None else cur.bias[order])
        nxt = out[h + 1]
        out[h + 1] = LayerWeights(nxt.weights[:, order], nxt.bias)
    return tuple(out)


def apply_permutation(net: Network, p: NetworkPermutation) -> Network:
    require_valid(net)
    return net.replace_layers(permute_layers(net.layers, p))


def neuron_switch(net: Network, layer: int, i: int, j: int) -> Network:
    """Exchange neurons ``i`` and ``j`` of hidden ``layer``.

    Indices are one-based as in the usual notation: ``1 <= layer <= L-1`` and
    ``1 <= i, j <= n_layer``. Rows i, j of that layer's matrix and bias swap,
    together with columns i, j of the following layer.
    """
    require_valid(net)
    widths = net.hidden_widths
    if not 1 <= layer <= len(widths):
        raise InvalidInputError(f"layer {layer} is not a hidden layer (valid: 1..{len(widths)})")
    n = widths[layer - 1]
    for name, idx in (("i", i), ("j", j)):
        if not 1 <= idx <= n:
            raise InvalidInputError(f"neuron {name}={idx} out of range 1..{n} in layer {layer}")
    per_layer = [LayerPermutation.identity(w) for w in widths]
    per_layer[layer - 1] = LayerPermutation.transposition(n, i - 1, j - 1)
    return apply_permutation(net, NetworkPermutation(tuple(per_layer)))


def compose(p: NetworkPermutation, q: NetworkPermutation) -> NetworkPermutation:
    """Per-layer composition ``p o q`` (apply ``q`` first)."""
    if p.widths != q.widths:
        raise InvalidInputError(f"cannot compose permutations of widths {p.widths} and {q.widths}")
    return NetworkPermutation(tuple(
        LayerPermutation(tuple(pl.mapping[k] for k in ql.mapping))
        for pl, ql in zip(p.per_layer, q.per_layer)))


def inverse(p: NetworkPermutation) -> NetworkPermutation:
    return NetworkPermutation(tuple(LayerPermutation(tuple(int(k) for k in lp.order))
                                    for lp in p.per_layer))


def orbit_size(hidden_widths: Sequence[int]) -> OrbitCount:
    """Number of weight sets reachable by relabeling hidden neurons: the product of n_l!."""
    widths = list(hidden_widths)
    if not widths:
        raise InvalidInputError("at least one hidden width is required")
    for w in widths:
        if isinstance(w, bool) or int(w) != w or w < 1:
            raise InvalidInputError(f"hidden widths must be positive integers, got {w!r}")
    exact = math.prod(math.factorial(int(w)) for w in widths)
    log10 = math.fsum(math.lgamma(int(w) + 1) for w in widths) / math.log(10)
    return OrbitCount(exact, log10)


def random_permutation(widths: Sequence[int], seed) -> NetworkPermutation:
    """Uniform draw from the relabeling group (a Fisher-Yates shuffle per layer)."""
    rng = np.random.default_rng(seed)
    return NetworkPermutation(tuple(
        LayerPermutation(tuple(int(v) for v in rng.permutation(int(n)))) for n in widths))


def random_sibling(net: Network, seed) -> tuple:
    require_valid(net)
    p = random_permutation(net.hidden_widths, seed)
    return apply_permutation(net, p), p


def _sort_order(weights: np.ndarray, bias: Optional[np.ndarray]) -> list:
    keys = [tuple(row) + (() if bias is None else (bias[k],))
            for k, row in enumerate(weights.tolist())]
    return sorted(range(len(keys)), key=keys.__getitem__)


def canonicalize(net: Network) -> tuple:
    """Sort each hidden layer's neurons by (incoming weights, bias), layer by layer.

    Returns the canonical network and the permutation taking ``net`` to it.
    Exact key ties keep their input order.
    """
    require_valid(net)
    layers = list(net.layers)
    per_layer = []
    for h in range(net.depth - 1):
        cur = layers[h]
        order = _sort_order(cur.weights, cur.bias)
        mapping = [0] * len(order)
        for pos, old in enumerate(order):
            mapping[old] = pos
        lp = LayerPermutation(tuple(mapping))
        per_layer.append(lp)
        single = [LayerPermutation.identity(l.weights.shape[0]) for l in layers[:-1]]
        single[h] = lp
        layers = list(permute_layers(layers, NetworkPermutation(tuple(single))))
    return net.replace_layers(layers), NetworkPermutation(tuple(per_layer))


def _check_same_architecture(a: Network, b: Network) -> None:
    require_valid(a)
    require_valid(b)
    if a.architecture != b.architecture:
        raise InvalidInputError(f"architectures differ: {a.architecture} vs {b.architecture}")
    if (a.hidden_activation, a.output_activation) != (b.hidden_activation, b.output_activation):
        raise InvalidInputError("activations differ")
    for idx, (la, lb) in enumerate(zip(a.layers, b.layers), start=1):
        if (la.bias is None) != (lb.bias is None):
            raise InvalidInputError(f"layer {idx}: bias present in only one network")


def _layer_dev(w, bias, ref: LayerWeights) -> float:
    dev = deviation(w, ref.weights)
    if bias is not None:
        dev = max(dev, deviation(bias, ref.bias))
    return dev


def _key_blocks(weights: np.ndarray, bias: Optional[np.ndarray], tol: float) -> list:
    """Runs of consecutive rows whose full keys agree within ``tol``."""
    keys = weights if bias is None else np.column_stack([weights, bias])
    blocks, start = [], 0
    for k in range(1, keys.shape[0] + 1):
        if k == keys.shape[0] or deviation(keys[k], keys[k - 1]) > tol:
            if k - start > 1:
                blocks.append((start, k))
            start = k
    return blocks


def _block_orders(order: list, blocks: list):
    """Every rearrangement of ``order`` that only shuffles inside the tie blocks."""
    if not blocks:
        yield order
        return
    choices = [itertools.permutations(order[s:e]) for s, e in blocks]
    for combo in itertools.product(*choices):
        out = list(order)
        for (s, e), perm in zip(blocks, combo):
            out[s:e] = perm
        yield out


def _canonical_equivalent(a: Network, b: Network, tol: float) -> EquivalenceVerdict:
    canon_a, p_a = canonicalize(a)
    canon_b, p_b = canonicalize(b)
    target = canon_b.layers
    direct = network_deviation(canon_a, canon_b)
    if direct <= tol:
        return EquivalenceVerdict(True, compose(inverse(p_b), p_a), direct)

    # Tied keys in canon_a leave the order of their outgoing columns open;
    # search those blocks only, re-sorting downstream layers for each choice.
    depth = a.depth
    visited = 0
    tie_search = False

    def search(h, layers, orders, dev):
        nonlocal visited, tie_search
        cur = layers[h]
        if h == depth - 1:
            d = max(dev, _layer_dev(cur.weights, cur.bias, target[h]))
            return orders if d <= tol else None, d
        base = _sort_order(cur.weights, cur.bias)
        w_sorted = cur.weights[base]
        b_sorted = None if cur.bias is None else cur.bias[base]
        blocks = _key_blocks(w_sorted, b_sorted, tol)
        if blocks:
            tie_search = True
        best = math.inf
        for order in _block_orders(base, blocks):
            visited += 1
            if visited > SEARCH_BUDGET:
                raise InvalidInputError(
                    f"tie search exceeds the budget of {SEARCH_BUDGET} candidate relabelings")
            w = cur.weights[order]
            bias = None if cur.bias is None else cur.bias[order]
            d = max(dev, _layer_dev(w, bias, target[h]))
            best = min(best, d)
            if d > tol:
                continue
            nxt = layers[h + 1]
            new_layers = list(layers)
            new_layers[h] = LayerWeights(w, bias)
            new_layers[h + 1] = LayerWeights(nxt.weights[:, order], nxt.bias)
            found, d_sub = search(h + 1, new_layers, orders + [order], d)
            if found is not None:
                return found, d_sub
        return None, best

    found, found_dev = search(0, list(a.layers), [], 0.0)
    if found is None:
        return EquivalenceVerdict(False, None, direct, tie_search)
    p_match = NetworkPermutation(tuple(
        LayerPermutation(tuple(int(v) for v in np.argsort(order, kind="stable")))
        for order in found))
    return EquivalenceVerdict(True, compose(inverse(p_b), p_match), found_dev, tie_search)


def _brute_force_equivalent(a: Network, b: Network, tol: float) -> EquivalenceVerdict:
    widths = a.hidden_widths
    total = math.prod(math.factorial(n) for n in widths)
    if total > SEARCH_BUDGET:
        raise InvalidInputError(
            f"brute-force search needs {total} relabelings; the bound is {SEARCH_BUDGET}")
    depth = a.depth
    target = b.layers
    best_dev = math.inf
    best_mapping = None

    # Depth-first in lexicographic order of the mappings. Layer h is fully
    # determined once the relabelings of hidden layers h-1 and h are fixed, so
    # a partial deviation is a lower bound for every completion of the branch.
    def search(h, prev_order, mappings, dev):
        nonlocal best_dev, best_mapping
        cur = a.layers[h]
        w_in = cur.weights if prev_order is None else cur.weights[:, prev_order]
        if h == depth - 1:
            d = max(dev, _layer_dev(w_in, cur.bias, target[h]))
            if d < best_dev:
                best_dev, best_mapping = d, list(mappings)
            return d <= tol
        for mapping in itertools.permutations(range(widths[h])):
            order = LayerPermutation(mapping).order
            bias = None if cur.bias is None else cur.bias[order]
            d = max(dev, _layer_dev(w_in[order], bias, target[h]))
            if d >= best_dev and d > tol:
                continue
            if search(h + 1, order, mappings + [mapping], d):
                return True
        return False

    found = search(0, None, [], 0.0)
    witness = NetworkPermutation(tuple(best_mapping)) if best_mapping is not None else None
    return EquivalenceVerdict(found, witness if found else None, best_dev)


def equivalent(a: Network, b: Network, tol: float = 1e-9,
               mode: str = "canonical") -> EquivalenceVerdict:
    """Decide whether some hidden-neuron relabeling of ``a`` matches ``b`` within ``tol``.

    ``mode="canonical"`` compares canonical forms (searching only inside exact
    or within-``tol`` key ties); ``mode="brute_force"`` tries every relabeling
    and returns the lexicographically first match, with ``max_deviation`` the
    smallest deviation reached.
    """
    if tol < 0 or not math.isfinite(tol):
        raise InvalidInputError(f"tolerance must be a finite non-negative number, got {tol}")
    _check_same_architecture(a, b)
    mode = mode.replace("-", "_")
    if not a.hidden_widths:
        d = network_deviation(a, b)
        return EquivalenceVerdict(d <= tol, NetworkPermutation(()) if d <= tol else None, d)
    if mode == "canonical":
        return _canonical_equivalent(a, b, tol)
    if mode == "brute_force":
        return _brute_force_equivalent(a, b, tol)
    raise InvalidInputError(f"unknown mode {mode!r}; use 'canonical' or 'brute_force'")
