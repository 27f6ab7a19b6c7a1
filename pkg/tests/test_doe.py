"""Pairwise suite generation, the coverage oracle, and sweeps."""

import pytest

from waresim.doe import (
    CombinationSuite,
    ParameterSpace,
    a2c_space,
    all_required_pairs,
    dqn_space,
    generate_pairwise,
    load_space,
    ppo_space,
    run_sweep,
    serialize_space,
    verify_pairwise,
)


def test_a2c_space_covers_all_pairs_within_size_bounds():
    space = a2c_space()
    assert space.pair_count() == 21  # 3*2 + 3*3 + 2*3
    suite = generate_pairwise(space, seed=0)
    ok, missing = verify_pairwise(space, suite)
    assert ok and not missing
    assert 9 <= len(suite) <= 18


def test_ppo_space_covers_all_pairs():
    space = ppo_space()
    suite = generate_pairwise(space, seed=0)
    ok, missing = verify_pairwise(space, suite)
    assert ok and not missing
    assert len(suite) <= 54


def test_dqn_space_covers_all_pairs():
    space = dqn_space()
    suite = generate_pairwise(space, seed=1)
    ok, _ = verify_pairwise(space, suite)
    assert ok
    # the tuned preset's combination is representable in the space
    names = dict(space.params)
    assert 0.001 in names["alpha"]
    assert 0.1 in names["tau"]
    assert 0.23 in names["gamma"]
    assert 0.0125 in names["exploration_fraction"]


def test_two_parameter_space_is_full_product():
    space = ParameterSpace((("a", (1, 2, 3)), ("b", ("x", "y"))))
    suite = generate_pairwise(space, seed=0)
    assert len(suite) == 6
    assert verify_pairwise(space, suite)[0]


def test_suite_size_at_least_two_largest_level_product():
    space = ParameterSpace((
        ("p", (1, 2, 3, 4)),
        ("q", (1, 2, 3)),
        ("r", (1, 2)),
    ))
    suite = generate_pairwise(space, seed=0)
    assert 12 <= len(suite) <= 24
    assert verify_pairwise(space, suite)[0]


def test_generation_deterministic_per_seed():
    space = ppo_space()
    assert (generate_pairwise(space, 7).assignments
            == generate_pairwise(space, 7).assignments)


def test_deleting_a_row_loses_specific_pairs():
    space = a2c_space()
    suite = generate_pairwise(space, seed=0)
    removed = suite.assignments[0]
    mutated = CombinationSuite(space, suite.assignments[1:])
    ok, missing = verify_pairwise(space, mutated)
    assert not ok
    # every reported missing pair really is covered only by the removed row
    names = space.names
    for ni, vi, nj, vj in missing:
        assert removed[ni] == vi and removed[nj] == vj


def test_single_row_cannot_cover_multilevel_space():
    space = a2c_space()
    one = CombinationSuite(space, [dict(zip(space.names,
                                            (1.5625e-06, 0.99, 0.1)))])
    ok, missing = verify_pairwise(space, one)
    assert not ok
    assert len(missing) == 21 - 3  # one row covers exactly C(3,2) pairs


def test_sampled_mode_still_covers_large_space():
    # 4^8 = 65536 > exhaustive threshold; exercises candidate sampling
    space = ParameterSpace(tuple(
        (f"p{i}", (1, 2, 3, 4)) for i in range(8)
    ))
    suite = generate_pairwise(space, seed=3)
    ok, missing = verify_pairwise(space, suite)
    assert ok and not missing
    assert len(suite) <= space.product_size()


def test_space_validation():
    with pytest.raises(ValueError, match="two parameters"):
        ParameterSpace((("a", (1, 2)),))
    with pytest.raises(ValueError, match="no levels"):
        ParameterSpace((("a", (1,)), ("b", ())))
    with pytest.raises(ValueError, match="duplicate levels"):
        ParameterSpace((("a", (1, 1)), ("b", (2,))))
    with pytest.raises(ValueError, match="duplicate parameter"):
        ParameterSpace((("a", (1, 2)), ("a", (3, 4))))


def test_space_file_round_trip(tmp_path):
    space = ppo_space()
    path = tmp_path / "space.yaml"
    path.write_text(serialize_space(space), encoding="utf-8")
    assert load_space(path).params == space.params


def test_required_pairs_enumeration_count():
    space = ppo_space()  # 3 x 2 x 3 x 3
    assert len(all_required_pairs(space)) == (3 * 2 + 3 * 3 + 3 * 3
                                              + 2 * 3 + 2 * 3 + 3 * 3)


# -- sweeps -------------------------------------------------------------------


def test_sweep_ranks_by_trailing_mean():
    space = ParameterSpace((("x", (0.0, 1.0)), ("y", (0.0, 1.0))))

    def runner(assignment, seed):
        level = assignment["x"] + assignment["y"]
        return [level, level, level + 1.0]

    rows = run_sweep(space, runner, seed=0, window=2)
    assert rows[0].assignment == {"x": 1.0, "y": 1.0}
    assert rows[0].mean_score == pytest.approx(2.5)
    assert rows[-1].assignment == {"x": 0.0, "y": 0.0}
    assert all(r.error is None for r in rows)


def test_sweep_single_combination_space():
    space = ParameterSpace((("x", (5,)), ("y", (7,))))
    rows = run_sweep(space, lambda a, s: [1.0], seed=0)
    assert len(rows) == 1
    assert rows[0].assignment == {"x": 5, "y": 7}


def test_sweep_deterministic():
    space = a2c_space()

    def runner(assignment, seed):
        return [hash((seed, tuple(sorted(assignment.items())))) % 100 / 10.0]

    a = run_sweep(space, runner, seed=4)
    b = run_sweep(space, runner, seed=4)
    assert [(r.combination_id, r.mean_score) for r in a] == \
        [(r.combination_id, r.mean_score) for r in b]


def test_sweep_annotates_failures_and_continues():
    space = ParameterSpace((("x", (1, 2)), ("y", (1, 2))))

    def runner(assignment, seed):
        if assignment["x"] == 1:
            raise RuntimeError("boom")
        return [float(assignment["y"])]

    rows = run_sweep(space, runner, seed=0)
    errors = [r for r in rows if r.error]
    assert len(errors) == 2
    assert all("boom" in r.error for r in errors)
    assert all(r.mean_score is None for r in errors)
    # failed rows sort last
    assert rows[-1].error and rows[0].error is None
