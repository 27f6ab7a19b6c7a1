"""Protocol server: session lifecycle, error codes, and wire equivalence."""

import json
import socket
import threading

import numpy as np
import pytest

from waresim.config import default_config
from waresim.mdp import Env
from waresim.server import (
    WarehouseServer,
    WireClient,
    cycle_actions,
    in_process_digest,
    over_wire_digest,
    replay_check,
)


@pytest.fixture()
def server():
    srv = WarehouseServer(default_config())
    srv.serve_in_background()
    yield srv
    srv.shutdown()
    srv.server_close()


@pytest.fixture()
def client(server):
    c = WireClient("127.0.0.1", server.port)
    yield c
    c.close()


def test_spec_reports_environment_dimensions(client):
    spec = client.request({"cmd": "spec"})
    assert spec["ok"]
    assert (spec["r"], spec["c"], spec["d"], spec["actions"]) == (6, 6, 8, 36)
    assert spec["m"] == 2
    assert spec["protocol"] == 1


def test_step_before_reset_is_a_protocol_error(client):
    res = client.request({"cmd": "step", "action": 3})
    assert not res["ok"]
    assert res["code"] == "no-episode"
    # session stays alive
    assert client.request({"cmd": "spec"})["ok"]


def test_reset_returns_observation_and_mask(client):
    res = client.request({"cmd": "reset", "seed": 5})
    assert res["ok"]
    obs = np.asarray(res["observation"])
    assert obs.shape == (6, 6, 8)
    assert len(res["valid_action_mask"]) == 36


def test_step_carries_reward_done_info(client):
    client.request({"cmd": "reset", "seed": 5})
    res = client.request({"cmd": "step", "action": [2, 3]})
    assert res["ok"]
    assert -1.0 <= res["reward"] <= 0.0
    assert res["done"] is False
    assert len(res["info"]["valid_action_mask"]) == 36
    assert res["info"]["action_class"] in ("invalid", "idle", "delivery", "neutral")


def test_malformed_json_keeps_session_alive(server):
    raw = socket.create_connection(("127.0.0.1", server.port), timeout=10)
    f = raw.makefile("rwb")
    f.write(b"this is not json\n")
    f.flush()
    reply = json.loads(f.readline())
    assert not reply["ok"] and reply["code"] == "bad-json"
    f.write(json.dumps({"cmd": "spec"}).encode() + b"\n")
    f.flush()
    assert json.loads(f.readline())["ok"]
    raw.close()


def test_bad_action_codes(client):
    client.request({"cmd": "reset", "seed": 0})
    for action in (99, [9, 9], [1], "up", None, True):
        res = client.request({"cmd": "step", "action": action})
        assert not res["ok"]
        assert res["code"] == "bad-action"


def test_unknown_command_rejected(client):
    res = client.request({"cmd": "fly"})
    assert not res["ok"] and res["code"] == "bad-request"


def test_close_ends_session(server):
    c = WireClient("127.0.0.1", server.port)
    assert c.request({"cmd": "close"})["ok"]
    with pytest.raises((ConnectionError, OSError)):
        c.request({"cmd": "spec"})
    c.close()


def test_wire_equals_in_process_for_seeded_sequences(server):
    cfg = default_config()
    for seed in (0, 7):
        actions = cycle_actions(60, cfg.action_count)
        local = in_process_digest(cfg, seed, actions)
        wire = over_wire_digest("127.0.0.1", server.port, seed, actions)
        assert local == wire


def test_replay_check_self_contained():
    cfg = default_config()
    local, wire, ok = replay_check(cfg, seed=3, actions=cycle_actions(40, 36))
    assert ok and local == wire


def test_empty_action_sequence_digests_reset_only():
    cfg = default_config()
    local, wire, ok = replay_check(cfg, seed=3, actions=[])
    assert ok


def test_different_seeds_different_digests():
    cfg = default_config()
    a = in_process_digest(cfg, 1, cycle_actions(30, 36))
    b = in_process_digest(cfg, 2, cycle_actions(30, 36))
    assert a != b


def test_concurrent_sessions_with_same_seed_are_identical(server):
    cfg = default_config()
    actions = cycle_actions(50, cfg.action_count)
    digests = [None, None]

    def worker(slot):
        digests[slot] = over_wire_digest("127.0.0.1", server.port, 11, actions)

    threads = [threading.Thread(target=worker, args=(k,)) for k in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert digests[0] == digests[1] == in_process_digest(cfg, 11, actions)


def test_session_environments_are_isolated(server):
    c1 = WireClient("127.0.0.1", server.port)
    c2 = WireClient("127.0.0.1", server.port)
    try:
        c1.request({"cmd": "reset", "seed": 1})
        c2.request({"cmd": "reset", "seed": 2})
        r1 = c1.request({"cmd": "step", "action": 0})
        # stepping session 1 does not advance session 2
        r2 = c2.request({"cmd": "step", "action": 0})
        env = Env(default_config())
        env.reset(2)
        expected = env.step(0)
        assert r2["observation"] == expected.observation.tolist()
        assert r2["reward"] == expected.reward
    finally:
        c1.close()
        c2.close()
