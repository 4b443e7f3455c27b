import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from permsym import (InvalidInputError, LayerPermutation, LayerWeights, Network,
                     NetworkPermutation, apply_permutation, canonicalize, compose, equivalent,
                     inverse, loss, neuron_switch, orbit_size, predict, random_sibling, Dataset)
from permsym.symmetry import deviation, network_deviation

from conftest import ACTIVATIONS, layer_perms, net_perms, random_net, random_perm


def net_232():
    w1 = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    w2 = np.array([[7.0, 8.0, 9.0], [10.0, 11.0, 12.0]])
    return Network.from_matrices([w1, w2], biases=[[0.1, 0.2, 0.3], None])


def distinct_net(rng, arch, **kw):
    # gaussian entries are distinct with probability one
    return random_net(rng, arch, **kw)


class TestNeuronSwitch:
    def test_by_hand(self):
        out = neuron_switch(net_232(), 1, 1, 3)
        np.testing.assert_array_equal(out.layers[0].weights, [[5, 6], [3, 4], [1, 2]])
        np.testing.assert_array_equal(out.layers[0].bias, [0.3, 0.2, 0.1])
        np.testing.assert_array_equal(out.layers[1].weights, [[9, 8, 7], [12, 11, 10]])
        assert out.layers[1].bias is None

    def test_same_index_is_identity(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        assert neuron_switch(net, 2, 3, 3).identical(net)

    def test_involution(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        assert neuron_switch(neuron_switch(net, 1, 1, 4), 1, 1, 4).identical(net)

    def test_other_layers_untouched(self, rng):
        net = distinct_net(rng, (3, 4, 5, 2))
        out = neuron_switch(net, 2, 2, 5)
        assert out.layers[0].identical(net.layers[0])
        assert not out.layers[1].identical(net.layers[1])

    @pytest.mark.parametrize("layer,i,j", [(0, 1, 2), (3, 1, 2), (1, 0, 2), (1, 1, 5)])
    def test_out_of_range(self, layer, i, j, rng):
        with pytest.raises(InvalidInputError):
            neuron_switch(distinct_net(rng, (3, 4, 4, 2)), layer, i, j)

    def test_preserves_predictions(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        x = rng.normal(size=(20, 3))
        np.testing.assert_allclose(predict(neuron_switch(net, 2, 1, 3), x), predict(net, x),
                                   rtol=1e-12, atol=1e-12)


class TestApplyPermutation:
    def test_identity(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        assert apply_permutation(net, NetworkPermutation.identity((4, 4))).identical(net)

    def test_single_transposition_matches_switch(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        p = NetworkPermutation((LayerPermutation.identity(4), LayerPermutation.transposition(4, 0, 2)))
        assert apply_permutation(net, p).identical(neuron_switch(net, 2, 1, 3))

    def test_mapping_semantics(self):
        # neuron 0 -> position 2, 1 -> 0, 2 -> 1
        p = NetworkPermutation(((2, 0, 1),))
        out = apply_permutation(net_232(), p)
        np.testing.assert_array_equal(out.layers[0].weights, [[3, 4], [5, 6], [1, 2]])
        np.testing.assert_array_equal(out.layers[1].weights, [[8, 9, 7], [11, 12, 10]])

    def test_shape_mismatch(self, rng):
        with pytest.raises(InvalidInputError):
            apply_permutation(distinct_net(rng, (3, 4, 2)), NetworkPermutation.identity((3,)))

    def test_prediction_invariance_random(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        p = random_perm(rng, (4, 4))
        xs = rng.normal(size=(100, 3))
        assert deviation(predict(apply_permutation(net, p), xs), predict(net, xs)) <= 1e-9

    def test_decomposition_into_switches(self, rng):
        net = distinct_net(rng, (2, 5, 4, 3, 1))
        p = random_perm(rng, (5, 4, 3))
        out = net
        for h, lp in enumerate(p.per_layer, start=1):
            for i, j in lp.transpositions():
                out = neuron_switch(out, h, i + 1, j + 1)
        assert out.identical(apply_permutation(net, p))


class TestGroup:
    def test_compose_by_hand(self):
        p = NetworkPermutation(((1, 2, 0), (2, 0, 1)))
        q = NetworkPermutation(((0, 2, 1), (1, 0, 2)))
        # p(q(i)): layer 1: p[0]=1, p[2]=0, p[1]=2; layer 2: p[1]=0, p[0]=2, p[2]=1
        assert compose(p, q) == NetworkPermutation(((1, 0, 2), (0, 2, 1)))

    def test_compose_matches_sequential_application(self, rng):
        net = distinct_net(rng, (2, 3, 3, 1))
        p, q = random_perm(rng, (3, 3)), random_perm(rng, (3, 3))
        assert apply_permutation(net, compose(p, q)).identical(
            apply_permutation(apply_permutation(net, q), p))

    def test_identity_and_inverse(self):
        p = NetworkPermutation(((3, 0, 4, 1, 2),))
        e = NetworkPermutation.identity((5,))
        assert compose(p, e) == p == compose(e, p)
        assert compose(p, inverse(p)) == e == compose(inverse(p), p)
        assert inverse(e) == e
        t = NetworkPermutation((LayerPermutation.transposition(5, 1, 3),))
        assert inverse(t) == t

    def test_inverse_brute_force(self, rng):
        mapping = tuple(rng.permutation(5))
        inv = inverse(NetworkPermutation((mapping,))).per_layer[0].mapping
        for i in range(5):
            assert inv[mapping[i]] == i

    def test_compose_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            compose(NetworkPermutation.identity((3,)), NetworkPermutation.identity((4,)))

    def test_rejects_non_permutation(self):
        with pytest.raises(InvalidInputError):
            LayerPermutation((0, 0, 1))

    def test_one_based_round_trip(self):
        p = NetworkPermutation.from_one_based([[2, 1, 3], [1, 2]])
        assert p.per_layer[0].mapping == (1, 0, 2)
        assert p.one_based() == [[2, 1, 3], [1, 2]]

    @given(st.data())
    def test_associativity(self, data):
        widths = data.draw(st.lists(st.integers(1, 6), min_size=1, max_size=3))
        p, q, r = (data.draw(net_perms(widths)) for _ in range(3))
        assert compose(compose(p, q), r) == compose(p, compose(q, r))

    @given(layer_perms())
    def test_transpositions_compose_back(self, lp):
        n = len(lp)
        acc = LayerPermutation.identity(n)
        for i, j in lp.transpositions():
            # a later swap acts on positions, i.e. on the left
            acc = compose(NetworkPermutation((LayerPermutation.transposition(n, i, j),)),
                          NetworkPermutation((acc,))).per_layer[0]
        assert acc == lp
        assert len(lp.transpositions()) <= max(n - 1, 0)


class TestOrbitSize:
    def test_paper_value(self):
        count = orbit_size((128, 128, 128))
        assert count.digits == 647
        assert 5.6 <= count.mantissa <= 5.8
        assert str(count.exact).startswith("57")

    def test_small(self):
        assert orbit_size((1, 1, 1)).exact == 1
        assert orbit_size((3, 2)).exact == 12
        assert orbit_size((1,)).log10 == 0.0

    @pytest.mark.parametrize("widths", [(), (0,), (3, -1), (2.5,)])
    def test_rejects(self, widths):
        with pytest.raises(InvalidInputError):
            orbit_size(widths)

    @pytest.mark.parametrize("widths", [(1,), (2, 3), (4, 1, 2), (7,), (3, 3, 2)])
    def test_matches_enumeration(self, widths):
        assert math.prod(math.factorial(n) for n in widths) <= 10**4
        tuples = set(itertools.product(*(itertools.permutations(range(n)) for n in widths)))
        assert orbit_size(widths).exact == len(tuples)

    @given(st.lists(st.integers(1, 400), min_size=1, max_size=5))
    def test_log10_accuracy(self, widths):
        count = orbit_size(widths)
        digits = str(count.exact)
        # log10 from the leading digits of the exact integer
        ref = len(digits) - 1 + math.log10(int(digits[:17]) / 10 ** (min(17, len(digits)) - 1))
        assert abs(count.log10 - ref) <= 1e-6


class TestRandomSibling:
    def test_width_one_is_identity(self, rng):
        net = distinct_net(rng, (3, 1, 1, 2))
        sib, p = random_sibling(net, 7)
        assert p.is_identity()
        assert sib.identical(net)

    def test_seeded(self, rng):
        net = distinct_net(rng, (3, 4, 5, 2))
        a, pa = random_sibling(net, 123)
        b, pb = random_sibling(net, 123)
        assert pa == pb and a.identical(b)

    def test_uniform(self):
        net = Network.from_matrices([np.arange(6.0).reshape(3, 2), np.ones((1, 3))])
        perms = list(itertools.permutations(range(3)))
        counts = dict.fromkeys(perms, 0)
        for seed in range(1000):
            counts[random_sibling(net, seed)[1].per_layer[0].mapping] += 1
        chi2 = stats.chisquare(list(counts.values())).statistic
        assert chi2 < stats.chi2.ppf(0.999, df=5)


class TestCanonicalize:
    def test_by_hand(self):
        net = Network.from_matrices([[[2.0, 9.0], [1.0, 5.0]], [[3.0, 4.0]]])
        canon, p = canonicalize(net)
        np.testing.assert_array_equal(canon.layers[0].weights, [[1, 5], [2, 9]])
        np.testing.assert_array_equal(canon.layers[1].weights, [[4, 3]])
        assert p.per_layer[0].mapping == (1, 0)

    def test_fixed_point(self):
        net = Network.from_matrices([[[1.0, 5.0], [2.0, 9.0]], [[3.0, 4.0]]])
        canon, p = canonicalize(net)
        assert p.is_identity() and canon.identical(net)

    def test_bias_breaks_ties(self):
        net = Network.from_matrices([[[1.0], [1.0]], [[3.0, 4.0]]], biases=[[0.5, -0.5], None])
        canon, _ = canonicalize(net)
        np.testing.assert_array_equal(canon.layers[0].bias, [-0.5, 0.5])
        np.testing.assert_array_equal(canon.layers[1].weights, [[4, 3]])

    def test_stable_on_exact_ties(self):
        net = Network.from_matrices([[[1.0], [1.0]], [[3.0, 4.0]]])
        _, p = canonicalize(net)
        assert p.is_identity()

    def test_permutation_maps_to_canonical(self, rng):
        net = distinct_net(rng, (3, 5, 4, 2))
        canon, p = canonicalize(net)
        assert apply_permutation(net, p).identical(canon)

    def test_rejects_non_finite(self):
        net = Network.from_matrices([[[np.nan]], [[1.0]]])
        with pytest.raises(InvalidInputError):
            canonicalize(net)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), act=st.sampled_from(ACTIVATIONS))
    def test_orbit_invariant(self, seed, act):
        rng = np.random.default_rng(seed)
        net = distinct_net(rng, (3, 5, 4, 2), hidden=act)
        sibling = apply_permutation(net, random_perm(rng, (5, 4)))
        c1, _ = canonicalize(net)
        c2, _ = canonicalize(sibling)
        assert c1.identical(c2)
        assert canonicalize(c1)[0].identical(c1)


class TestEquivalent:
    def test_self(self, rng):
        net = distinct_net(rng, (3, 4, 4, 2))
        v = equivalent(net, net, 0.0, "canonical")
        assert v.equivalent and v.witness.is_identity() and v.max_deviation == 0.0

    @pytest.mark.parametrize("mode", ["canonical", "brute_force"])
    def test_sibling_witness(self, rng, mode):
        net = distinct_net(rng, (2, 3, 2, 1))
        sib, p = random_sibling(net, 5)
        v = equivalent(net, sib, 1e-9, mode)
        assert v.equivalent
        assert v.witness == p
        assert apply_permutation(net, v.witness).identical(sib)
        assert v.max_deviation <= 1e-9

    @pytest.mark.parametrize("mode", ["canonical", "brute_force"])
    def test_perturbed_sibling(self, mode):
        rng = np.random.default_rng(3)
        net = Network.from_matrices(
            [rng.uniform(-0.5, 0.5, (3, 2)), rng.uniform(-0.5, 0.5, (2, 3)),
             rng.uniform(-0.5, 0.5, (1, 2))])
        sib, _ = random_sibling(net, 11)
        w = sib.layers[1].weights.copy()
        w[1, 2] += 1.0
        bad = sib.replace_layers([sib.layers[0], LayerWeights(w), sib.layers[2]])
        v = equivalent(net, bad, 1e-9, mode)
        assert not v.equivalent and v.witness is None
        # a +1 change on an entry below 0.5 in magnitude scores between 2/3 and 1
        assert 0.6 < v.max_deviation <= 1.0

    def test_brute_force_minimum_deviation(self):
        rng = np.random.default_rng(4)
        net = Network.from_matrices([rng.normal(size=(3, 2)), rng.normal(size=(1, 3))])
        other = Network.from_matrices([rng.normal(size=(3, 2)), rng.normal(size=(1, 3))])
        v = equivalent(net, other, 1e-9, "brute_force")
        best = min(network_deviation(apply_permutation(net, NetworkPermutation((m,))), other)
                   for m in itertools.permutations(range(3)))
        assert v.max_deviation == best

    def test_brute_force_lexicographic_first(self):
        # both hidden neurons identical: every relabeling matches, the first is the identity
        net = Network.from_matrices([[[1.0], [1.0]], [[2.0, 2.0]]])
        v = equivalent(net, net, 0.0, "brute_force")
        assert v.witness.is_identity()

    def test_canonical_resolves_exact_ties(self):
        # rows tie exactly, outgoing columns differ: plain sorting cannot decide
        net = Network.from_matrices([[[1.0], [1.0]], [[2.0, 3.0]]])
        swapped = neuron_switch(net, 1, 1, 2)
        v = equivalent(net, swapped, 0.0, "canonical")
        assert v.equivalent and v.tie_search
        assert apply_permutation(net, v.witness).identical(swapped)

    def test_canonical_tie_cascade(self, rng):
        w1 = np.array([[1.0, 2.0], [1.0, 2.0], [0.5, 0.1]])
        net = Network.from_matrices([w1, rng.normal(size=(3, 3)), rng.normal(size=(2, 3))])
        sib, _ = random_sibling(net, 9)
        v = equivalent(net, sib, 1e-12, "canonical")
        assert v.equivalent
        assert network_deviation(apply_permutation(net, v.witness), sib) <= 1e-12

    def test_tolerance_accepts_small_noise(self, rng):
        net = distinct_net(rng, (3, 4, 2))
        sib, p = random_sibling(net, 1)
        noisy = sib.replace_layers([LayerWeights(l.weights + 1e-12, l.bias) for l in sib.layers])
        for mode in ("canonical", "brute_force"):
            v = equivalent(net, noisy, 1e-9, mode)
            assert v.equivalent and v.witness == p
            assert 0 < v.max_deviation <= 1e-9

    def test_architecture_mismatch(self, rng):
        with pytest.raises(InvalidInputError):
            equivalent(distinct_net(rng, (3, 4, 2)), distinct_net(rng, (3, 5, 2)))
        with pytest.raises(InvalidInputError):
            equivalent(distinct_net(rng, (3, 4, 2)), distinct_net(rng, (3, 4, 2), hidden="relu"))

    def test_brute_force_budget(self, rng):
        net = distinct_net(rng, (2, 10, 1))
        with pytest.raises(InvalidInputError, match="1000000"):
            equivalent(net, net, 1e-9, "brute_force")

    def test_unknown_mode(self, rng):
        net = distinct_net(rng, (2, 2, 1))
        with pytest.raises(InvalidInputError):
            equivalent(net, net, 1e-9, "fuzzy")

    def test_no_hidden_layers(self):
        net = Network.from_matrices([[[1.0, 2.0]]])
        assert equivalent(net, net).equivalent


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), act=st.sampled_from(ACTIVATIONS))
def test_loss_invariance(seed, act):
    rng = np.random.default_rng(seed)
    net = random_net(rng, (3, 4, 3, 2), hidden=act)
    data = Dataset(rng.normal(size=(10, 3)), rng.normal(size=(10, 2)))
    permuted = apply_permutation(net, random_perm(rng, (4, 3)))
    assert deviation(loss(permuted, data), loss(net, data)) <= 1e-9
