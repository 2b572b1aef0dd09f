import json

import numpy as np
import pytest

from verti import elevation as el
from verti import training as trn
from verti.config import RunConfig
from verti.training import CheckpointError, Trainer


def tiny_cfg(**kw):
    base = dict(seed=3, terrain_count=4, test_count=2, steps=600, rollout_episodes=2,
                min_rollout_steps=0, eval_every=200, eval_trials=2, time_limit=2.0, epochs=2,
                minibatch=32, checkpoint_every=1, out="unused")
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def maps():
    cfg = tiny_cfg()
    train = list(trn.make_training_set(cfg.seed, cfg.terrain_count, cfg.roughness))
    test = trn.make_test_maps(cfg.seed, cfg.test_count, cfg.roughness, cfg.roughness_mult)
    return train, test


def run(cfg, maps, **kw):
    return Trainer(cfg, *maps).run(**kw)


class TestTrainer:
    def test_deterministic(self, maps):
        a, b = run(tiny_cfg(), maps), run(tiny_cfg(), maps)
        assert a.params.flat.tobytes() == b.params.flat.tobytes()
        assert [(p.env_steps, p.eval_success_rate) for p in a.curve] == \
               [(p.env_steps, p.eval_success_rate) for p in b.curve]
        assert a.trace == b.trace

    def test_eval_does_not_perturb_training(self, maps):
        with_eval = run(tiny_cfg(eval_every=150), maps)
        without = run(tiny_cfg(eval_every=0), maps)
        assert with_eval.params.flat.tobytes() == without.params.flat.tobytes()
        assert with_eval.trace == without.trace
        assert without.curve == []

    def test_curve_cadence(self, maps):
        tr = run(tiny_cfg(eval_every=150), maps)
        assert [p.env_steps for p in tr.curve] == [150, 300, 450, 600]
        assert all(0 <= p.eval_success_rate <= 1 for p in tr.curve)

    def test_vs_visits_every_terrain_first(self, maps):
        tr = run(tiny_cfg(), maps)
        assert [r.terrain_id for r in tr.trace[:4]] == [0, 1, 2, 3]

    def test_mc_stage_monotone(self, maps):
        tr = run(tiny_cfg(sampler="mc", steps=1500), maps)
        stages = [r.stage for r in tr.trace]
        assert all(s is not None for s in stages)
        assert stages == sorted(stages)

    def test_update_cadence(self, maps):
        tr = run(tiny_cfg(rollout_episodes=3), maps)
        assert tr.updates == -(-tr.episodes // 3)


class TestCheckpoint:
    def test_roundtrip(self, maps, tmp_path):
        ck = tmp_path / "c.json"
        tr = run(tiny_cfg(), maps, checkpoint_path=ck)
        back = trn.load_trainer(ck, *maps)
        assert back.params.flat.tobytes() == tr.params.flat.tobytes()
        assert back.opt.m.tobytes() == tr.opt.m.tobytes() and back.opt.t == tr.opt.t
        assert back.rng.bit_generator.state == tr.rng.bit_generator.state
        assert back.sampler.to_dict() == tr.sampler.to_dict()
        assert (back.env_steps, back.episodes, back.updates) == (tr.env_steps, tr.episodes, tr.updates)
        assert back.trace == tr.trace
        assert trn.load_params(ck).flat.tobytes() == tr.params.flat.tobytes()

    def test_resume_extends(self, maps, tmp_path):
        ck = tmp_path / "c.json"
        first = run(tiny_cfg(steps=400), maps, checkpoint_path=ck)
        resumed = trn.load_trainer(ck, *maps, tiny_cfg(steps=800)).run(checkpoint_path=ck)
        assert resumed.env_steps >= 800 and resumed.episodes > first.episodes
        steps = [p.env_steps for p in resumed.curve]
        assert steps == sorted(steps) and steps[-1] == 800
        assert resumed.trace[:len(first.trace)] == first.trace

    def test_corrupt(self, maps, tmp_path):
        ck = tmp_path / "c.json"
        ck.write_text("{not json")
        with pytest.raises(CheckpointError):
            trn.load_params(ck)
        ck.write_text(json.dumps({"format": "other"}))
        with pytest.raises(CheckpointError):
            trn.load_params(ck)
        with pytest.raises(FileNotFoundError):
            trn.load_params(tmp_path / "missing.json")

    def test_wrong_shape(self, maps, tmp_path):
        ck = tmp_path / "c.json"
        run(tiny_cfg(steps=100), maps, checkpoint_path=ck)
        blob = json.loads(ck.read_text())
        blob["params"] = blob["params"][:-1]
        ck.write_text(json.dumps(blob))
        with pytest.raises(CheckpointError):
            trn.load_params(ck)

    def test_terrain_count_mismatch(self, maps, tmp_path):
        ck = tmp_path / "c.json"
        run(tiny_cfg(steps=100), maps, checkpoint_path=ck)
        with pytest.raises(CheckpointError):
            trn.load_trainer(ck, maps[0][:3], maps[1])


class TestTerrainDir:
    def test_count_two_is_endpoints(self, tmp_path):
        trn.generate_terrain(tmp_path, 2, seed=9, test_count=1)
        a = el.read_map(tmp_path / "terrain_000.vwmap")
        b = el.read_map(tmp_path / "terrain_001.vwmap")
        assert np.all(a.heights == 0)
        assert np.array_equal(b.heights, el.synth_rugged_endpoint(9).heights)

    def test_idempotent(self, tmp_path):
        trn.generate_terrain(tmp_path / "a", 5, seed=2)
        trn.generate_terrain(tmp_path / "b", 5, seed=2)
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_test_maps_rougher(self):
        train_end = el.synth_rugged_endpoint(2, 1.0)
        test = trn.make_test_maps(2, 3, 1.0, 1.4)
        # same height range, shorter features: larger mean absolute slope
        slope = lambda m: np.mean(np.abs(np.diff(m.heights, axis=0)))
        assert all(slope(t) > slope(train_end) for t in test)

    def test_gap_detected(self, tmp_path):
        trn.generate_terrain(tmp_path, 3, seed=1, test_count=1)
        (tmp_path / "terrain_001.vwmap").unlink()
        with pytest.raises(FileNotFoundError):
            trn.load_terrain_dir(tmp_path, "terrain")

    def test_trace_roundtrip(self, maps, tmp_path):
        tr = run(tiny_cfg(sampler="mc", steps=200), maps)
        trn.write_trace_csv(tr.trace, tmp_path / "t.csv")
        assert trn.read_trace_csv(tmp_path / "t.csv") == tr.trace
        head = (tmp_path / "t.csv").read_text().splitlines()[0]
        assert head == "episode,terrain_id,score,stage,sampler_kind"
