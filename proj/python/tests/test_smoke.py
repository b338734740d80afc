import math

import adaplan


def test_generate_and_score_expert():
    cfg = adaplan.WorldConfig()
    scene = adaplan.generate_scene(7, cfg)
    assert scene.level in (1, 2, 3)
    expert = adaplan.expert_plan(scene, cfg)
    assert len(expert) == 8
    score = adaplan.pdm_score(expert, scene, cfg)
    assert score["pdms"] == score["nc"] * score["dac"] * (
        5 * score["ep"] + 5 * score["ttc"] + 2 * score["comfort"]
    ) / 12
    assert score["nc"] == 1 and score["dac"] == 1


def test_generation_is_deterministic():
    a = adaplan.generate_scene(42)
    b = adaplan.generate_scene(42)
    assert a.to_json() == b.to_json()


def test_scene_json_roundtrip():
    scene = adaplan.generate_scene(11)
    again = adaplan.scene_from_json(scene.to_json())
    assert again.to_json() == scene.to_json()
    assert again.level == scene.level


def test_response_roundtrip():
    scene = adaplan.generate_scene(3)
    expert = adaplan.expert_plan(scene)
    text = adaplan.serialize_response(adaplan.Mode.Thinking, "lead d=12.0", expert)
    resp = adaplan.parse_response(text)
    assert resp.tags_ok
    assert resp.mode == adaplan.Mode.Thinking
    assert resp.think_content == "lead d=12.0"
    assert resp.token_cost == 20 + len("lead d=12.0")
    assert resp.trajectory is not None
    for (px, py), (ex, ey) in zip(resp.trajectory, expert):
        assert px == ex and py == ey
    assert adaplan.parse_response("no tags here").trajectory is None


def test_endpoint_and_adaptive_rewards():
    base = [(float(i), 0.0) for i in range(1, 9)]
    shifted = [(x, 1.5) for (x, _) in base]
    assert adaplan.endpoint_reward(base, base) == 1.0
    assert adaplan.endpoint_reward(shifted, base) == 1.0  # L1 = 1.5 < 2
    far = [(x, 20.0) for (x, _) in base]
    assert adaplan.endpoint_reward(far, base) == 0.0
    # challenging scene, thinking clearly better: keep thinking
    assert adaplan.adaptive_think_reward(0.9, 0.2, 4, 4, 0.9, 1) == (1, 0)
    # simple scene, non-thinking matches thinking: prefer non-thinking
    assert adaplan.adaptive_think_reward(0.95, 0.99, 3, 5, 0.9, 0) == (0, 1)


def test_anchor_vocabulary():
    anchors = adaplan.anchor_trajectories(10.0)
    assert len(anchors) == 35
    assert all(len(a) == 8 for a in anchors)
    flat = [tuple(p for xy in a for p in xy) for a in anchors]
    assert len(set(flat)) == len(flat)  # pairwise distinct


def test_tiny_training_run():
    g = adaplan.GrpoConfig()
    g.n_train = 24
    g.n_val = 12
    g.epochs = 1
    g.sft_epochs = 20
    g.batch_scenes = 8
    g.best_of_n = 2
    g.seed = 5
    report = adaplan.train(g, adaplan.WorldConfig(), "adaptive")
    assert report["n"] == 12
    assert 0.0 <= report["mean_pdms"] <= 1.0
    assert math.isfinite(report["mean_token_cost"])
    assert report["bon_pdms"] >= report["single_sample_pdms"]
