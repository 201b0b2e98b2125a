import numpy as np
import pytest

from distreg.errors import InvalidInput, InvalidWeight, ShapeMismatch
from distreg.label_space import LabelDensity, make_label_space
from distreg.loss import DistLossConfig, SeqLossKind, dist_loss, inverse_weights, weighted_seq_loss
from distreg.pseudo import PseudoSequence, make_pseudo_labels
from distreg.softsort import SoftSortConfig

UNIFORM_L1 = SeqLossKind(base="l1", weighting="uniform")
UNIFORM_L2 = SeqLossKind(base="l2", weighting="uniform")


def density_on(space, probs):
    return LabelDensity(space, np.asarray(probs, dtype=np.float64))


def fd_grad(fn, x, step=1e-6):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] += step
        up = fn(bumped)
        bumped[i] -= 2 * step
        down = fn(bumped)
        out[i] = (up - down) / (2 * step)
    return out


class TestSeqLossKind:
    def test_parse(self):
        assert SeqLossKind.parse("inv-l2") == SeqLossKind("l2", "inverse_probability")
        assert SeqLossKind.parse("INV_L1") == SeqLossKind("l1", "inverse_probability")
        assert SeqLossKind.parse("l1") == UNIFORM_L1
        assert SeqLossKind.parse("inv-l2").name == "inv-l2"
        with pytest.raises(InvalidInput):
            SeqLossKind.parse("huber")


class TestWeightedSeqLoss:
    def test_zero_at_equality(self):
        x = np.array([1.0, -2.0, 3.5])
        for kind in (UNIFORM_L1, UNIFORM_L2):
            value, grad = weighted_seq_loss(x, x, np.ones(3), kind)
            assert value == 0.0
            assert np.array_equal(grad, np.zeros(3))

    def test_l2_hand_example(self):
        value, grad = weighted_seq_loss([1.0, 3.0], [0.0, 0.0], [1.0, 1.0], UNIFORM_L2)
        assert value == pytest.approx(5.0)
        assert np.allclose(grad, [1.0, 3.0])

    def test_l1_weighted_hand_example(self):
        value, grad = weighted_seq_loss([2.0], [0.0], [4.0], UNIFORM_L1)
        assert value == pytest.approx(8.0)
        assert np.allclose(grad, [4.0])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        for kind in (UNIFORM_L1, UNIFORM_L2):
            pred = rng.normal(size=6)
            target = rng.normal(size=6)
            w = rng.uniform(0.1, 3.0, size=6)
            _, grad = weighted_seq_loss(pred, target, w, kind)
            fd = fd_grad(lambda p: weighted_seq_loss(p, target, w, kind)[0], pred)
            assert np.allclose(grad, fd, rtol=1e-4, atol=1e-7)

    def test_errors(self):
        with pytest.raises(ShapeMismatch):
            weighted_seq_loss([1.0], [1.0, 2.0], [1.0], UNIFORM_L1)
        with pytest.raises(InvalidWeight):
            weighted_seq_loss([1.0], [0.0], [-1.0], UNIFORM_L2)


class TestInverseWeights:
    def test_uniform_density_normalized(self):
        space = make_label_space(0, 4, 1)
        d = density_on(space, [0.25] * 4)
        w = inverse_weights(d, [0.5, 1.5, 3.2], floor=1e-6, normalize=True)
        assert np.allclose(w, 1.0)

    def test_unnormalized_values(self):
        space = make_label_space(0, 2, 1)
        d = density_on(space, [0.9, 0.1])
        w = inverse_weights(d, space.centers, floor=1e-6, normalize=False)
        assert np.allclose(w, [1 / 0.9, 10.0])

    def test_floor_applies_in_empty_bin(self):
        space = make_label_space(0, 3, 1)
        d = density_on(space, [0.5, 0.5, 0.0])
        w = inverse_weights(d, [2.5], floor=1e-3, normalize=False)
        assert np.allclose(w, [1000.0])

    def test_bad_floor(self):
        space = make_label_space(0, 2, 1)
        d = density_on(space, [0.5, 0.5])
        with pytest.raises(InvalidWeight):
            inverse_weights(d, [0.5], floor=0.0)


def fixture_density_and_pseudo(m=7):
    # centers 1..6, matching the worked batch below
    space = make_label_space(1, 7, 1)
    probs = np.array([1, 0, 2, 3, 0, 1], dtype=np.float64) / 7
    d = density_on(space, probs)
    pseudo = PseudoSequence(values=np.array([1.0, 3.0, 3.0, 4.0, 4.0, 4.0, 6.0]))
    return d, pseudo


class TestDistLoss:
    def test_zero_when_aligned(self):
        d, pseudo = fixture_density_and_pseudo()
        predictions = np.array([4.0, 3.0, 1.0, 4.0, 6.0, 3.0, 4.0])  # permutation of pseudo
        out = dist_loss(predictions, predictions.copy(), pseudo, d,
                        SoftSortConfig(epsilon=1e-9), DistLossConfig(kind=UNIFORM_L2))
        assert out.sample_term == 0.0
        assert out.total == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(out.grad_predictions, 0.0, atol=1e-12)

    def test_worked_distribution_term(self):
        d, pseudo = fixture_density_and_pseudo()
        predictions = np.array([5.0, 2.0, 6.0, 3.0, 2.0, 7.0, 1.0])
        out = dist_loss(predictions, predictions.copy(), pseudo, d,
                        SoftSortConfig(epsilon=1e-9),
                        DistLossConfig(kind=UNIFORM_L1, dist_weight=1.0))
        assert out.dist_term == pytest.approx(1.0, abs=1e-9)
        assert out.sample_term == 0.0
        assert out.total == pytest.approx(1.0, abs=1e-9)

    def test_lambda_zero_reduces_to_sample_term(self):
        d, pseudo = fixture_density_and_pseudo()
        rng = np.random.default_rng(1)
        predictions = rng.uniform(1, 7, size=7)
        labels = rng.uniform(1, 7, size=7)
        out = dist_loss(predictions, labels, pseudo, d, None,
                        DistLossConfig(dist_weight=0.0))
        w = inverse_weights(d, labels)
        expected, expected_grad = weighted_seq_loss(predictions, labels, w, SeqLossKind())
        assert out.total == pytest.approx(expected)
        assert np.allclose(out.grad_predictions, expected_grad)

    def test_lambda_linearity(self):
        d, pseudo = fixture_density_and_pseudo()
        rng = np.random.default_rng(2)
        predictions = rng.uniform(1, 7, size=7)
        labels = rng.uniform(1, 7, size=7)
        sort_cfg = SoftSortConfig(epsilon=0.05)
        outs = {lam: dist_loss(predictions, labels, pseudo, d, sort_cfg,
                               DistLossConfig(dist_weight=lam)) for lam in (0.0, 0.5, 1.0)}
        for lam, out in outs.items():
            assert out.total == pytest.approx(out.sample_term + lam * out.dist_term, rel=1e-9)
            assert out.dist_term == pytest.approx(outs[0.0].dist_term)
        slope = outs[1.0].total - outs[0.0].total
        assert outs[0.5].total - outs[0.0].total == pytest.approx(0.5 * slope)

    def test_terms_non_negative(self):
        d, pseudo = fixture_density_and_pseudo()
        rng = np.random.default_rng(3)
        for kind in (SeqLossKind(), SeqLossKind("l1", "inverse_probability"), UNIFORM_L1, UNIFORM_L2):
            out = dist_loss(rng.normal(4, 2, 7), rng.uniform(1, 7, 7), pseudo, d,
                            None, DistLossConfig(kind=kind))
            assert out.sample_term >= 0.0
            assert out.dist_term >= 0.0

    def test_dist_term_permutation_equivariant(self):
        d, pseudo = fixture_density_and_pseudo()
        rng = np.random.default_rng(4)
        predictions = rng.uniform(1, 7, size=7)
        labels = rng.uniform(1, 7, size=7)
        cfg = DistLossConfig(dist_weight=1.0)
        sort_cfg = SoftSortConfig(epsilon=0.05)
        base = dist_loss(predictions, labels, pseudo, d, sort_cfg, cfg)
        perm = rng.permutation(7)
        shuffled = dist_loss(predictions[perm], labels[perm], pseudo, d, sort_cfg, cfg)
        assert shuffled.dist_term == pytest.approx(base.dist_term, rel=1e-12)
        dist_grad_base = base.grad_predictions - dist_loss(
            predictions, labels, pseudo, d, sort_cfg, DistLossConfig(dist_weight=0.0)
        ).grad_predictions
        dist_grad_shuffled = shuffled.grad_predictions - dist_loss(
            predictions[perm], labels[perm], pseudo, d, sort_cfg, DistLossConfig(dist_weight=0.0)
        ).grad_predictions
        assert np.allclose(dist_grad_shuffled, dist_grad_base[perm], atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        space = make_label_space(0, 8, 1)
        checked = 0
        for trial in range(60):
            m = int(rng.integers(2, 17))
            probs = rng.uniform(0.05, 1.0, size=8)
            probs /= probs.sum()
            d = density_on(space, probs)
            pseudo = make_pseudo_labels(d, m)
            predictions = rng.normal(4, 2.5, size=m)
            labels = rng.uniform(0, 8, size=m)
            kind = [SeqLossKind(), SeqLossKind("l1", "inverse_probability"),
                    UNIFORM_L1, UNIFORM_L2][trial % 4]
            lam = [0.0, 0.5, 1.0][trial % 3]
            cfg = DistLossConfig(kind=kind, dist_weight=lam)
            sort_cfg = SoftSortConfig(epsilon=float(rng.uniform(0.01, 0.5)))
            out = dist_loss(predictions, labels, pseudo, d, sort_cfg, cfg)
            fd = fd_grad(
                lambda p: dist_loss(p, labels, pseudo, d, sort_cfg, cfg).total, predictions
            )
            assert np.allclose(out.grad_predictions, fd, rtol=1e-4, atol=1e-6), (kind, lam)
            checked += 1
        assert checked == 60

    def test_shape_mismatch(self):
        d, pseudo = fixture_density_and_pseudo()
        with pytest.raises(ShapeMismatch):
            dist_loss(np.ones(3), np.ones(3), pseudo, d)

    def test_bad_config(self):
        with pytest.raises(InvalidWeight):
            DistLossConfig(weight_floor=0.0)
        with pytest.raises(InvalidInput):
            DistLossConfig(dist_weight=-1.0)
