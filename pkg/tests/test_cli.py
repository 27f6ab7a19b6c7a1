"""Command-line interface: artifacts, determinism, manifests, exit codes."""

import json

import pytest
from click.testing import CliRunner

from waresim.cli import main
from waresim.config import desk_config, serialize_config


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def desk_cfg_file(tmp_path):
    path = tmp_path / "desk.yaml"
    path.write_text(serialize_config(desk_config()), encoding="utf-8")
    return str(path)


def test_simulate_writes_csv_summary_figure_manifest(runner, tmp_path, desk_cfg_file):
    out = tmp_path / "sim"
    result = runner.invoke(main, [
        "simulate", "--config", desk_cfg_file, "--policy", "ehp",
        "--episodes", "4", "--seeds", "1,2", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    lines = (out / "episodes.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 8  # header + 4 episodes x 2 seeds
    assert lines[0] == ("episode,policy,seed,score,delivered_boxes,"
                        "mean_box_age,fifo_violation_rate,invalid_action_count")
    assert (out / "summary.csv").exists()
    assert (out / "metrics.png").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["seeds"] == [1, 2]


def test_simulate_byte_identical_across_runs(runner, tmp_path, desk_cfg_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = runner.invoke(main, [
            "simulate", "--config", desk_cfg_file, "--policy", "ihp",
            "--episodes", "3", "--seeds", "5", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        outs.append((out / "episodes.csv").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_unknown_policy_is_usage_error(runner):
    result = runner.invoke(main, ["simulate", "--policy", "alphazero"])
    assert result.exit_code == 2


def test_simulate_rl_policy_requires_checkpoint(runner, desk_cfg_file):
    result = runner.invoke(main, [
        "simulate", "--config", desk_cfg_file, "--policy", "vam",
    ])
    assert result.exit_code == 2
    assert "--checkpoint" in result.output


def test_invalid_config_exits_with_usage_error(runner, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("rows: 2\n", encoding="utf-8")
    result = runner.invoke(main, [
        "simulate", "--config", str(bad), "--policy", "ehp",
    ])
    assert result.exit_code == 2
    assert "invalid config" in result.output


def test_train_writes_curves_checkpoints_figure(runner, tmp_path, desk_cfg_file):
    out = tmp_path / "train"
    result = runner.invoke(main, [
        "train", "--config", desk_cfg_file, "--variant", "vam",
        "--steps", "600", "--seeds", "1,2", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    for seed in (1, 2):
        assert (out / f"checkpoint-seed{seed}.npz").exists()
        curve = (out / f"curve-seed{seed}.csv").read_text().splitlines()
        assert curve[0] == "episode,score,epsilon,loss"
        assert len(curve) == 1 + 600 // 250
    merged = (out / "curves.csv").read_text().splitlines()
    assert merged[0] == "episode,mean_score,min_score,max_score"
    assert (out / "training_curves.png").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["hyperparameters"]["max_training_steps"] == 600


def test_train_curves_deterministic(runner, tmp_path, desk_cfg_file):
    blobs = []
    for name in ("t1", "t2"):
        out = tmp_path / name
        result = runner.invoke(main, [
            "train", "--config", desk_cfg_file, "--steps", "500",
            "--seeds", "3", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        blobs.append((out / "curve-seed3.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_trained_checkpoint_feeds_simulate_and_evaluate(runner, tmp_path, desk_cfg_file):
    out = tmp_path / "train"
    result = runner.invoke(main, [
        "train", "--config", desk_cfg_file, "--steps", "500", "--seeds", "1",
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    ckpt = str(out / "checkpoint-seed1.npz")

    ev_out = tmp_path / "eval"
    result = runner.invoke(main, [
        "evaluate", "--config", desk_cfg_file, "--checkpoint", ckpt,
        "--episodes", "2", "--out", str(ev_out),
    ])
    assert result.exit_code == 0, result.output
    assert (ev_out / "episodes.csv").exists()

    sim_out = tmp_path / "sim"
    result = runner.invoke(main, [
        "simulate", "--config", desk_cfg_file, "--policy", "vam",
        "--checkpoint", ckpt, "--episodes", "2", "--seeds", "4",
        "--out", str(sim_out),
    ])
    assert result.exit_code == 0, result.output
    rows = (sim_out / "episodes.csv").read_text().strip().splitlines()
    assert len(rows) == 3
    assert all(row.split(",")[-1] == "0" for row in rows[1:])  # vam: no invalids


def test_render_prints_grid(runner, desk_cfg_file):
    result = runner.invoke(main, [
        "render", "--config", desk_cfg_file, "--seed", "5", "--steps", "30",
        "--policy", "ihp",
    ])
    assert result.exit_code == 0, result.output
    assert "E" in result.output and "D" in result.output
    assert "step 30" in result.output


def test_replay_digest_stable(runner):
    a = runner.invoke(main, ["replay-digest", "--seed", "7", "--steps", "40"])
    b = runner.invoke(main, ["replay-digest", "--seed", "7", "--steps", "40"])
    assert a.exit_code == b.exit_code == 0
    assert a.output == b.output
    assert len(a.output.strip()) == 64


def test_replay_digest_explicit_actions(runner):
    result = runner.invoke(main, ["replay-digest", "--actions", "0, 5, 7, 35"])
    assert result.exit_code == 0
    bad = runner.invoke(main, ["replay-digest", "--actions", "0,99"])
    assert bad.exit_code == 2


def test_suite_command_verifies_coverage(runner, tmp_path):
    out = tmp_path / "a2c.csv"
    result = runner.invoke(main, ["suite", "--space", "a2c", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "combination,alpha,gamma,vf_coef"
    assert 10 <= len(rows) <= 19


def test_tune_emits_ranked_sweep(runner, tmp_path, desk_cfg_file):
    space = tmp_path / "space.yaml"
    space.write_text(
        "params:\n"
        "  - {name: alpha, levels: [0.001, 0.01]}\n"
        "  - {name: gamma, levels: [0.5, 0.9]}\n",
        encoding="utf-8",
    )
    out = tmp_path / "tune"
    result = runner.invoke(main, [
        "tune", "--config", desk_cfg_file, "--space", str(space),
        "--train-steps", "300", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    rows = (out / "sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "combination,alpha,gamma,mean_score,min_score,max_score,error"
    assert len(rows) == 5  # 2x2 full product for two parameters
    assert (out / "sweep.png").exists()


def test_plot_from_existing_csv(runner, tmp_path, desk_cfg_file):
    out = tmp_path / "train"
    result = runner.invoke(main, [
        "train", "--config", desk_cfg_file, "--steps", "500", "--seeds", "1",
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    fig = tmp_path / "replot.png"
    result = runner.invoke(main, [
        "plot", "curves", str(out / "curves.csv"), "-o", str(fig),
    ])
    assert result.exit_code == 0, result.output
    assert fig.exists()


def test_render_distinguishes_carrying_agent_and_restricted_boxes(runner):
    from waresim.render import render_state
    from waresim.simcore import Box, create_initial_state
    from waresim.config import default_config

    state = create_initial_state(default_config(), seed=0)
    state.grid = {
        (2, 2): Box(1, 90, 0),  # sealed in by its four neighbours
        (1, 2): Box(1, 10, 1),
        (3, 2): Box(1, 10, 2),
        (2, 1): Box(1, 10, 3),
        (2, 3): Box(1, 10, 4),
    }
    state.invalidate_reachability()
    text = render_state(state)
    assert "a#" in text  # restricted box glyph
    assert "@@" in text  # empty-handed agent
    state.carried = Box(2, 0, 5)
    text = render_state(state)
    assert "&b" in text  # carrying agent shows the material
    assert "@@" not in text


def test_space_files_load_and_cover(runner, tmp_path):
    out = tmp_path / "from-file.csv"
    result = runner.invoke(main, [
        "suite", "--space", "configs/spaces/ppo.yaml", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    assert out.read_text().startswith("combination,alpha,gamma,vf_coef,clip")
