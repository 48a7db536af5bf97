import math

import numpy as np
import pytest

from dtedge.environment import (
    Arena,
    DataRanges,
    MobilityDraw,
    channel_gain,
    distances,
    dump_episode,
    generate_episode,
    load_episode,
    mobility_step,
    noise_power,
    path_loss_db,
    rayleigh_fading_power,
)
from dtedge.model import SystemParams


def test_path_loss_at_one_km():
    assert path_loss_db(1000.0) == pytest.approx(128.1)


def test_path_loss_at_100_m():
    assert path_loss_db(100.0) == pytest.approx(90.5)


def test_path_loss_clamped_below_floor():
    assert path_loss_db(0.0, min_distance=1.0) == path_loss_db(1.0, min_distance=1.0)
    assert path_loss_db(0.2, min_distance=5.0) == path_loss_db(5.0, min_distance=5.0)


def test_gain_identity():
    assert channel_gain(0.0, 1.0) == 1.0


def test_gain_at_100_m():
    assert channel_gain(path_loss_db(100.0), 1.0) == pytest.approx(8.912509381337441e-10, rel=1e-9)


def test_fading_has_unit_mean():
    draws = rayleigh_fading_power(np.random.default_rng(123), 100_000)
    assert draws.mean() == pytest.approx(1.0, abs=0.02)
    assert np.all(draws > 0)


def test_noise_power_thermal_floor():
    assert noise_power(-174.0, 1e7) == pytest.approx(3.981071705534986e-14, rel=1e-9)


def test_noise_power_zero_dbm():
    assert noise_power(0.0, 1.0) == pytest.approx(1e-3)


def test_noise_power_linear_in_bandwidth():
    assert noise_power(-174.0, 2e7) == pytest.approx(2 * noise_power(-174.0, 1e7))


def test_noise_power_rejects_zero_bandwidth():
    with pytest.raises(ValueError):
        noise_power(-174.0, 0.0)


class TestMobility:
    arena = Arena(side=1000.0)

    def test_zero_speed(self):
        pos = np.array([[10.0, 20.0]])
        out = mobility_step(pos, MobilityDraw(np.array([0.0]), np.array([1.3])), 0.05, self.arena)
        assert np.array_equal(out, pos)

    def test_displacement(self):
        out = mobility_step(np.array([[10.0, 20.0]]), MobilityDraw(np.array([8.0]), np.array([0.0])), 0.05, self.arena)
        assert out[0, 0] == pytest.approx(10.4)
        assert out[0, 1] == pytest.approx(20.0)

    def test_reflection_at_wall(self):
        pos = np.array([[999.9, 500.0]])
        out = mobility_step(pos, MobilityDraw(np.array([8.0]), np.array([0.0])), 0.05, self.arena)
        assert out[0, 0] == pytest.approx(999.7)
        # travelled distance preserved: 0.1 m to the wall, 0.3 m back
        assert (1000.0 - pos[0, 0]) + (1000.0 - out[0, 0]) == pytest.approx(0.4)

    def test_reflection_at_origin(self):
        out = mobility_step(np.array([[0.1, 0.1]]), MobilityDraw(np.array([8.0]), np.array([math.pi])), 0.05, self.arena)
        assert out[0, 0] == pytest.approx(0.3)

    def test_long_walk_stays_inside(self):
        rng = np.random.default_rng(4)
        pos = rng.uniform(0, 10, (50, 2))
        for _ in range(500):
            draw = MobilityDraw(rng.uniform(2, 80, 50), rng.uniform(0, 2 * math.pi, 50))
            pos = mobility_step(pos, draw, 0.5, Arena(side=10.0))
            assert np.all((pos >= 0) & (pos <= 10.0))


def test_distance_translation_invariance():
    rng = np.random.default_rng(0)
    dev, srv = rng.uniform(0, 100, (4, 2)), rng.uniform(0, 100, (3, 2))
    shift = np.array([12.5, -3.0])
    assert np.allclose(path_loss_db(distances(dev, srv)), path_loss_db(distances(dev + shift, srv + shift)))


class TestEpisode:
    params = SystemParams(num_servers=2, num_devices=2, horizon=3, max_aoi=2)

    def test_shapes_and_positivity(self):
        ep = generate_episode(self.params, Arena(), seed=1)
        assert len(ep.snapshots) == 3
        for snap in ep.snapshots:
            assert snap.h.shape == (2, 2)
            assert np.all(snap.h > 0)
        assert ep.topology.devices.shape == (3, 2, 2)
        assert len(ep.profiles) == 2 and len(ep.initial_deployment) == 2

    def test_deterministic(self):
        a = generate_episode(self.params, Arena(), seed=42)
        b = generate_episode(self.params, Arena(), seed=42)
        for sa, sb in zip(a.snapshots, b.snapshots):
            assert sa.h.tobytes() == sb.h.tobytes()
        assert a.initial_deployment == b.initial_deployment
        assert a.profiles.sync_bits.tobytes() == b.profiles.sync_bits.tobytes()

    def test_seeds_differ(self):
        a = generate_episode(self.params, Arena(), seed=1)
        b = generate_episode(self.params, Arena(), seed=2)
        assert not np.array_equal(a.snapshots[0].h, b.snapshots[0].h)

    def test_static_channel_freezes_everything(self):
        ep = generate_episode(self.params, Arena(), seed=5, static_channel=True)
        for snap in ep.snapshots[1:]:
            assert np.array_equal(snap.h, ep.snapshots[0].h)
        assert np.array_equal(ep.topology.devices[2], ep.topology.devices[0])

    def test_dynamic_channel_moves_devices(self):
        ep = generate_episode(self.params, Arena(), seed=5)
        step = np.linalg.norm(ep.topology.devices[1] - ep.topology.devices[0], axis=1)
        assert np.all((step >= 2 * 0.05 - 1e-9) & (step <= 8 * 0.05 + 1e-9))

    def test_positions_inside_arena(self):
        p = SystemParams(num_servers=5, num_devices=30, horizon=200, max_aoi=10)
        ep = generate_episode(p, Arena(side=20.0), seed=9)
        for arr in (ep.topology.devices, ep.topology.servers):
            assert np.all((arr >= 0) & (arr <= 20.0))

    def test_profiles_follow_ranges(self):
        p = SystemParams(num_servers=5, num_devices=500, horizon=1, max_aoi=100)
        ep = generate_episode(p, Arena(), seed=3, ranges=DataRanges())
        assert ep.profiles.sync_bits.min() >= 2 * 8e6 and ep.profiles.sync_bits.max() <= 5 * 8e6
        assert ep.profiles.twin_bits.min() >= 5 * 8e6 and ep.profiles.twin_bits.max() <= 50 * 8e6

    def test_server_count_does_not_shift_device_draws(self):
        p_small = SystemParams(num_servers=3, num_devices=10, horizon=4, max_aoi=5)
        p_big = SystemParams(num_servers=7, num_devices=10, horizon=4, max_aoi=5)
        a = generate_episode(p_small, Arena(), seed=11)
        b = generate_episode(p_big, Arena(), seed=11)
        assert np.array_equal(a.topology.devices, b.topology.devices)
        assert np.array_equal(a.profiles.twin_bits, b.profiles.twin_bits)

    def test_dump_round_trip(self, tmp_path):
        ep = generate_episode(self.params, Arena(), seed=8)
        path = tmp_path / "episode.jsonl"
        dump_episode(ep, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + self.params.horizon
        back = load_episode(path)
        for sa, sb in zip(ep.snapshots, back.snapshots):
            assert np.array_equal(sa.h, sb.h)
        assert back.initial_deployment == ep.initial_deployment
        assert np.array_equal(back.topology.devices, ep.topology.devices)
