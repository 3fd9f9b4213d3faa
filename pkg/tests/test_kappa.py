import random

import pytest

from ragkit.annotate import cohen_kappa

from oracles import kappa_oracle


def test_hand_computed_two_by_two():
    result = cohen_kappa([1, 1, 1, 0, 0, 0], [1, 1, 0, 0, 0, 1])
    assert result.p_o == pytest.approx(4 / 6, abs=1e-12)
    assert result.p_e == pytest.approx(0.5, abs=1e-12)
    assert result.kappa == pytest.approx(1 / 3, abs=1e-12)


def test_perfect_agreement():
    result = cohen_kappa(["x", "y", "x", "z"], ["x", "y", "x", "z"])
    assert result.kappa == 1.0
    assert not result.degenerate


def test_total_disagreement_binary():
    result = cohen_kappa([0, 1, 0, 1], [1, 0, 1, 0])
    assert result.kappa == pytest.approx(-1.0, abs=1e-12)


def test_constant_identical_annotators_flagged():
    result = cohen_kappa(["a", "a", "a"], ["a", "a", "a"])
    assert result.kappa == 1.0
    assert result.degenerate


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        cohen_kappa([1, 2], [1])


def test_empty_rejected():
    with pytest.raises(ValueError):
        cohen_kappa([], [])


def test_paper_operating_point_consistency():
    # reported agreement 83.33% with kappa 0.67 implies p_e ~ 0.4949 via
    # kappa = (p_o - p_e) / (1 - p_e)
    p_o, kappa = 0.8333, 0.67
    p_e = (p_o - kappa) / (1 - kappa)
    assert p_e == pytest.approx(0.4949, abs=5e-4)
    # and the implementation satisfies the same relation on its own output
    result = cohen_kappa([1, 1, 1, 0, 0, 0], [1, 1, 0, 0, 0, 1])
    assert result.kappa * (1 - result.p_e) == pytest.approx(
        result.p_o - result.p_e, abs=1e-12
    )


def random_labels(rng, n, n_categories):
    return [rng.randrange(n_categories) for _ in range(n)]


def test_thousand_random_cases_satisfy_equation_and_symmetry():
    rng = random.Random(99)
    for _ in range(1000):
        n = rng.randint(1, 40)
        n_categories = rng.randint(1, 5)
        a = random_labels(rng, n, n_categories)
        b = random_labels(rng, n, n_categories)
        result = cohen_kappa(a, b)
        # defining relation
        if not result.degenerate:
            assert result.kappa * (1 - result.p_e) == pytest.approx(
                result.p_o - result.p_e, abs=1e-12
            )
        assert -1.0 - 1e-12 <= result.kappa <= 1.0 + 1e-12
        # symmetry
        swapped = cohen_kappa(b, a)
        assert swapped.kappa == pytest.approx(result.kappa, abs=1e-12)
        # self-agreement
        self_result = cohen_kappa(a, a)
        assert self_result.kappa == 1.0


def test_label_renaming_invariance():
    rng = random.Random(4)
    for _ in range(300):
        n = rng.randint(2, 30)
        a = random_labels(rng, n, 3)
        b = random_labels(rng, n, 3)
        mapping = {0: "red", 1: "green", 2: "blue"}
        renamed = cohen_kappa([mapping[x] for x in a], [mapping[x] for x in b])
        original = cohen_kappa(a, b)
        assert renamed.kappa == pytest.approx(original.kappa, abs=1e-12)


def test_matches_confusion_matrix_oracle_exhaustively():
    # every binary label pair up to length 6
    for n in range(1, 7):
        for bits_a in range(2**n):
            for bits_b in range(2**n):
                a = [(bits_a >> i) & 1 for i in range(n)]
                b = [(bits_b >> i) & 1 for i in range(n)]
                expected_kappa, expected_po, expected_pe = kappa_oracle(a, b)
                result = cohen_kappa(a, b)
                assert result.p_o == pytest.approx(expected_po, abs=1e-12)
                assert result.p_e == pytest.approx(expected_pe, abs=1e-12)
                assert result.kappa == pytest.approx(expected_kappa, abs=1e-12)
