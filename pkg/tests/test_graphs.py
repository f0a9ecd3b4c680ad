from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from decipher.graphs import (
    GraphSpec,
    TransitionMatrix,
    assemble,
    build_circulant,
    build_debruijn,
    build_hypercube,
    build_subgraph,
    hamiltonian_cycle_matrix,
    interpolate_with_hamiltonian,
)
from decipher.spectral import symmetrized_form


def all_test_matrices():
    mats = [
        build_circulant(5, (-1, 1)),
        build_circulant(7, (1, 2)),
        build_circulant(4, (1,)),
        build_debruijn(2, 2),
        build_debruijn(3, 2),
        build_hypercube(1),
        build_hypercube(4),
        assemble(GraphSpec(family="circulant", n=5, action_set=(-1, 1)), 12),
        interpolate_with_hamiltonian(build_circulant(4, (-1, 1)), w=0.5),
    ]
    return mats


def test_every_matrix_row_stochastic():
    for T in all_test_matrices():
        rs = T.probs.sum(axis=1)
        npt.assert_allclose(rs, 1.0, atol=1e-12)
        assert T.probs.min() >= 0.0
        assert T.probs.max() <= 1.0


def test_reversible_matrices_symmetrize():
    for T in all_test_matrices():
        if not T.reversible:
            continue
        S = symmetrized_form(T.weights)
        assert np.max(np.abs(S - S.T)) <= 1e-10


def test_circulant_rows_c5():
    T = build_circulant(5, (-1, 1))
    for i in range(5):
        row = T.probs[i]
        assert row[(i + 1) % 5] == 0.5
        assert row[(i - 1) % 5] == 0.5
        assert row.sum() == pytest.approx(1.0)
    assert T.reversible


def test_circulant_directed_not_reversible():
    T = build_circulant(4, (1,))
    assert not T.reversible
    npt.assert_array_equal(np.argmax(T.probs, axis=1), [1, 2, 3, 0])


def test_circulant_rejects_bad_action_sets():
    with pytest.raises(ValueError):
        build_circulant(5, ())
    with pytest.raises(ValueError):
        build_circulant(5, (0,))
    with pytest.raises(ValueError):
        build_circulant(5, (5,))  # 5 mod 5 == 0
    with pytest.raises(ValueError):
        build_circulant(5, (1, 6))  # duplicate after mod
    with pytest.raises(ValueError):
        build_circulant(2, (1,))


def test_debruijn_basic_shift_structure():
    # DB(2,2): node 01 (index 1) shifts to 10 (index 2) and 11 (index 3).
    T = build_debruijn(2, 2)
    assert T.weights[1, 2] > 0
    assert T.weights[1, 3] > 0
    assert T.reversible
    # DB(2,1) keeps self-loops from the shift rule and still normalizes.
    T1 = build_debruijn(2, 1)
    npt.assert_allclose(T1.probs.sum(axis=1), 1.0, atol=1e-12)
    assert T1.weights[0, 0] > 0


def test_debruijn_rejects_cap_and_bad_params():
    with pytest.raises(ValueError):
        build_debruijn(1, 3)
    with pytest.raises(ValueError):
        build_debruijn(2, 0)
    with pytest.raises(ValueError):
        build_debruijn(2, 14)  # 2^14 over the state cap


def test_hypercube_rows_and_flags():
    T = build_hypercube(3)
    for i in range(8):
        nbrs = [i ^ (1 << b) for b in range(3)]
        for j in range(8):
            expected = 1.0 / 3.0 if j in nbrs else 0.0
            assert T.probs[i, j] == pytest.approx(expected)
    assert T.reversible

    T1 = build_hypercube(1)
    npt.assert_array_equal(T1.probs, [[0.0, 1.0], [1.0, 0.0]])

    with pytest.raises(ValueError):
        build_hypercube(14)


def test_assemble_two_c5_into_12():
    spec = GraphSpec(family="circulant", n=5, action_set=(-1, 1))
    T = assemble(spec, 12)
    assert T.n_states == 12
    assert T.spec.copies == 2
    assert T.spec.filler_self_loops == 2
    sub = build_subgraph(spec)
    npt.assert_array_equal(T.probs[:5, :5], sub.probs)
    npt.assert_array_equal(T.probs[5:10, 5:10], sub.probs)
    # off-diagonal blocks empty, fillers are probability-1 self-loops
    assert np.all(T.probs[:5, 5:] == 0.0)
    assert T.probs[10, 10] == 1.0
    assert T.probs[11, 11] == 1.0


def test_assemble_single_copy_is_subgraph():
    spec = GraphSpec(family="hypercube", dim=3)
    T = assemble(spec, 8)
    npt.assert_array_equal(T.probs, build_hypercube(3).probs)


def test_assemble_rejects_too_small_target():
    spec = GraphSpec(family="circulant", n=5, action_set=(-1, 1))
    with pytest.raises(ValueError):
        assemble(spec, 4)


def test_hamiltonian_cycle_matrix():
    C = hamiltonian_cycle_matrix(np.array([0, 1, 2, 3]))
    npt.assert_array_equal(np.argmax(C, axis=1), [1, 2, 3, 0])
    npt.assert_allclose(C.sum(axis=1), 1.0)
    with pytest.raises(ValueError):
        hamiltonian_cycle_matrix(np.array([0, 0, 1]))


def test_interpolation_endpoints_and_midpoint():
    base = build_circulant(4, (-1, 1))
    same = interpolate_with_hamiltonian(base, w=0.0)
    npt.assert_array_equal(same.probs, base.probs)
    assert same.reversible

    cyc = interpolate_with_hamiltonian(base, w=1.0)
    npt.assert_array_equal(np.sort(cyc.probs, axis=1)[:, -1], np.ones(4))
    assert not cyc.reversible

    half = interpolate_with_hamiltonian(base, w=0.5)
    # 0.5 * (0.5 at +-1) + 0.5 * (1 at +1)
    npt.assert_allclose(half.probs[0], [0.0, 0.75, 0.0, 0.25], atol=1e-15)
    assert not half.reversible

    with pytest.raises(ValueError):
        interpolate_with_hamiltonian(base, w=1.5)
    with pytest.raises(ValueError):
        interpolate_with_hamiltonian(base, w=-0.1)


def test_graph_spec_total_nodes_accounting():
    spec = GraphSpec(family="circulant", n=9, action_set=(-1, 1), copies=11, filler_self_loops=1)
    assert spec.total_nodes() == 100


def test_graph_spec_rejects_unknown_family():
    with pytest.raises(ValueError):
        GraphSpec(family="torus", n=5)
