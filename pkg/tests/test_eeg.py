"""EEG feature families: band PSD vectors, entropy pairs, topo images."""

import numpy as np
import pytest

from affectlab.eeg import (
    TOPO_GRID,
    band_psd_features,
    compose_rgb_topo,
    eeg_deep_features,
    pairwise_entropy_features,
    per_second_eeg_images,
    render_topo_band,
    trial_topo_rgb,
)
from affectlab.imaging import resize_rgb
from affectlab.infotheory import MutualInfoConfig
from affectlab.layouts import load_layout
from affectlab.learn import PrincipalComponents
from affectlab.validation import SpecError

from conftest import make_recording, sine


def _eeg_trial(n_channels, duration_s=4.0, fs=128.0, seed=0, layout=None):
    rng = np.random.default_rng(seed)
    if layout is None:
        layout = load_layout("montage32" if n_channels > 14 else "montage14")
    channels = tuple(layout.entries)[:n_channels]
    samples = rng.standard_normal((n_channels, int(duration_s * fs)))
    return make_recording(samples, fs=fs, channels=channels), layout


class TestBandPsdFeatures:
    def test_32_channel_cardinality(self):
        trial, layout = _eeg_trial(32)
        block = band_psd_features(trial, layout)
        assert len(block.names) == 96
        assert block.values.shape == (96,)

    def test_14_channel_cardinality(self):
        trial, _ = _eeg_trial(14)
        block = band_psd_features(trial)
        assert len(block.names) == 42

    def test_band_major_name_order(self):
        trial, _ = _eeg_trial(14)
        block = band_psd_features(trial)
        # theta for every channel, then alpha, then beta
        assert block.names[0].startswith("psd_theta_")
        assert block.names[14].startswith("psd_alpha_")
        assert block.names[28].startswith("psd_beta_")
        assert block.names[1].endswith(trial.channels[1])

    def test_pure_alpha_tone_dominates_other_bands(self):
        layout = load_layout("montage14")
        rng = np.random.default_rng(3)
        samples = 0.05 * rng.standard_normal((3, 512))
        samples[1] += sine(10.0, 4.0)
        trial = make_recording(samples, channels=tuple(layout.entries)[:3])
        block = band_psd_features(trial)
        by_name = dict(zip(block.names, block.values))
        ch = trial.channels[1]
        alpha = by_name[f"psd_alpha_{ch}"]
        assert alpha >= 50.0 * by_name[f"psd_theta_{ch}"]
        assert alpha >= 50.0 * by_name[f"psd_beta_{ch}"]

    def test_rejects_non_eeg(self):
        trial = make_recording(np.zeros((1, 256)), modality="GSR")
        with pytest.raises(SpecError, match="EEG"):
            band_psd_features(trial)

    def test_layout_checks_channel_coverage(self):
        layout = load_layout("montage14")
        trial = make_recording(np.zeros((2, 256)), channels=("AF3", "Pz"))
        with pytest.raises(SpecError):
            band_psd_features(trial, layout)


class TestPairwiseEntropyFeatures:
    # speed over fidelity for the combinatorial tests
    FAST = MutualInfoConfig(eval_grid=32)

    def test_32_channel_cardinality(self):
        trial, _ = _eeg_trial(32, duration_s=1.0)
        block = pairwise_entropy_features(trial, self.FAST)
        assert len(block.names) == 496

    def test_14_channel_cardinality(self):
        trial, _ = _eeg_trial(14, duration_s=1.0)
        block = pairwise_entropy_features(trial, self.FAST)
        assert len(block.names) == 91

    def test_names_follow_pair_order(self):
        trial, _ = _eeg_trial(3, duration_s=1.0)
        block = pairwise_entropy_features(trial, self.FAST)
        a, b, c = trial.channels
        assert block.names == (
            f"ce_{b}_given_{a}", f"ce_{c}_given_{a}", f"ce_{c}_given_{b}",
        )

    def test_duplicated_channel_pair_is_near_zero(self):
        layout = load_layout("montage14")
        rng = np.random.default_rng(7)
        base = rng.standard_normal(512)
        samples = np.stack([base, base.copy(), rng.standard_normal(512)])
        trial = make_recording(samples, channels=tuple(layout.entries)[:3])
        block = pairwise_entropy_features(trial)
        by_name = dict(zip(block.names, block.values))
        a, b, _ = trial.channels
        assert abs(by_name[f"ce_{b}_given_{a}"]) <= 0.05

    def test_single_channel_rejected(self):
        trial, _ = _eeg_trial(1, duration_s=1.0)
        with pytest.raises(SpecError, match="2 channels"):
            pairwise_entropy_features(trial)

    def test_degenerate_pair_names_the_channels(self):
        layout = load_layout("montage14")
        samples = np.vstack([np.ones(256), np.arange(256.0), np.ones(256)])
        trial = make_recording(samples, channels=tuple(layout.entries)[:3])
        with pytest.raises(SpecError, match=trial.channels[0]):
            pairwise_entropy_features(trial)


class TestRenderTopoBand:
    LAYOUT = load_layout("montage14")

    def test_shape_and_mask(self):
        img = render_topo_band(np.arange(14.0), tuple(self.LAYOUT.entries), self.LAYOUT)
        assert img.grid.shape == (TOPO_GRID, TOPO_GRID)
        assert img.mask.shape == (TOPO_GRID, TOPO_GRID)
        assert img.grid.min() >= 0.0 and img.grid.max() <= 1.0
        assert np.all(img.grid[~img.mask] == 0.0)

    def test_uniform_values_render_half_field(self):
        img = render_topo_band(np.full(14, 3.7), tuple(self.LAYOUT.entries), self.LAYOUT)
        assert np.allclose(img.grid[img.mask], 0.5)

    def test_scale_invariance(self):
        values = np.arange(14.0)
        a = render_topo_band(values, tuple(self.LAYOUT.entries), self.LAYOUT)
        b = render_topo_band(values * 100.0 + 5.0, tuple(self.LAYOUT.entries), self.LAYOUT)
        np.testing.assert_allclose(a.grid, b.grid, atol=1e-12)

    def test_channel_permutation_invariance(self):
        rng = np.random.default_rng(11)
        values = rng.random(14)
        perm = rng.permutation(14)
        a = render_topo_band(values, tuple(self.LAYOUT.entries), self.LAYOUT)
        b = render_topo_band(
            values[perm], tuple(np.array(tuple(self.LAYOUT.entries))[perm]), self.LAYOUT
        )
        np.testing.assert_allclose(a.grid, b.grid, atol=1e-12)

    def test_custom_grid_size(self):
        img = render_topo_band(
            np.arange(14.0), tuple(self.LAYOUT.entries), self.LAYOUT, grid=32
        )
        assert img.grid.shape == (32, 32)

    def test_rejects_nan_values(self):
        values = np.arange(14.0)
        values[3] = np.nan
        with pytest.raises(SpecError, match="finite"):
            render_topo_band(values, tuple(self.LAYOUT.entries), self.LAYOUT)

    def test_rejects_too_few_channels(self):
        with pytest.raises(SpecError, match=">= 3"):
            render_topo_band([1.0, 2.0], tuple(self.LAYOUT.entries)[:2], self.LAYOUT)


class TestComposeRgbTopo:
    LAYOUT = load_layout("montage14")

    def _imgs(self):
        rng = np.random.default_rng(5)
        return [
            render_topo_band(rng.random(14), tuple(self.LAYOUT.entries), self.LAYOUT)
            for _ in range(3)
        ]

    def test_output_is_uint8_rgb(self):
        theta, alpha, beta = self._imgs()
        rgb = compose_rgb_topo(theta, alpha, beta, (1.0, 1.0, 1.0))
        assert rgb.dtype == np.uint8
        assert rgb.shape == (TOPO_GRID, TOPO_GRID, 3)

    def test_weights_follow_band_maxima(self):
        theta, alpha, beta = self._imgs()
        rgb = compose_rgb_topo(theta, alpha, beta, (0.0, 5.0, 0.0))
        # all weight on alpha: red and blue planes stay dark
        assert rgb[..., 0].max() == 0
        assert rgb[..., 2].max() == 0
        assert rgb[..., 1].max() > 0

    def test_all_zero_maxima_fall_back_to_equal_weights(self):
        theta, alpha, beta = self._imgs()
        rgb = compose_rgb_topo(theta, alpha, beta, (0.0, 0.0, 0.0))
        expected = to_expected_thirds(theta, alpha, beta)
        np.testing.assert_array_equal(rgb, expected)

    def test_mismatched_grids_rejected(self):
        theta, alpha, _ = self._imgs()
        small = render_topo_band(
            np.arange(14.0), tuple(self.LAYOUT.entries), self.LAYOUT, grid=32
        )
        with pytest.raises(SpecError, match="grid size"):
            compose_rgb_topo(theta, alpha, small, (1.0, 1.0, 1.0))

    def test_negative_maxima_rejected(self):
        theta, alpha, beta = self._imgs()
        with pytest.raises(SpecError, match="non-negative"):
            compose_rgb_topo(theta, alpha, beta, (1.0, -1.0, 1.0))


def to_expected_thirds(theta, alpha, beta):
    stacked = np.stack(
        [theta.grid / 3.0, alpha.grid / 3.0, beta.grid / 3.0], axis=-1
    )
    return np.clip(np.round(stacked * 255.0), 0, 255).astype(np.uint8)


class TestTrialTopoRgb:
    def test_shape(self):
        trial, layout = _eeg_trial(14, duration_s=2.0)
        rgb = trial_topo_rgb(trial, layout)
        assert rgb.shape == (TOPO_GRID, TOPO_GRID, 3)
        assert rgb.dtype == np.uint8

    def test_deterministic(self):
        trial, layout = _eeg_trial(14, duration_s=2.0)
        np.testing.assert_array_equal(
            trial_topo_rgb(trial, layout), trial_topo_rgb(trial, layout)
        )

    def test_alpha_tone_lights_green_plane(self):
        layout = load_layout("montage14")
        rng = np.random.default_rng(9)
        samples = 0.01 * rng.standard_normal((14, 512))
        samples[tuple(layout.entries).index("O1")] += sine(10.0, 4.0)
        trial = make_recording(samples, channels=tuple(layout.entries))
        rgb = trial_topo_rgb(trial, layout)
        assert rgb[..., 1].max() > 10 * max(1, rgb[..., 0].max())


class TestEegDeepFeatures:
    def test_component_count_and_names(self, provider):
        trials = [_eeg_trial(14, duration_s=2.0, seed=s)[0] for s in range(8)]
        layout = load_layout("montage14")
        embeds = np.stack([
            provider.embed(resize_rgb(trial_topo_rgb(t, layout))) for t in trials
        ])
        pca = PrincipalComponents(n_components=5).fit(embeds)
        block = eeg_deep_features(trials[0], layout, provider, pca)
        assert block.values.shape == (5,)
        assert block.names == tuple(f"deep_topo_pc{k}" for k in range(5))

    def test_rejects_pca_over_cap(self, provider):
        trial, layout = _eeg_trial(14, duration_s=2.0)
        big = PrincipalComponents(n_components=31)
        with pytest.raises(SpecError, match="30"):
            eeg_deep_features(trial, layout, provider, big)


class TestPerSecondImages:
    def test_twelve_second_trial_gives_twelve_images(self):
        trial, layout = _eeg_trial(14, duration_s=12.0)
        images = per_second_eeg_images(trial, layout)
        assert len(images) == 12
        assert all(img.shape == (TOPO_GRID, TOPO_GRID, 3) for img in images)

    def test_floor_rule(self):
        trial, layout = _eeg_trial(14, duration_s=1.5)
        assert len(per_second_eeg_images(trial, layout)) == 1

    def test_sub_second_trial_rejected(self):
        trial, layout = _eeg_trial(14, duration_s=0.9)
        with pytest.raises(SpecError, match="whole second"):
            per_second_eeg_images(trial, layout)

    def test_windows_are_disjoint(self):
        layout = load_layout("montage14")
        rng = np.random.default_rng(4)
        samples = 0.01 * rng.standard_normal((14, 256))
        # alpha tone only in the second half
        samples[0, 128:] += sine(10.0, 1.0)
        trial = make_recording(samples, channels=tuple(layout.entries))
        first, second = per_second_eeg_images(trial, layout)
        # the tone drives the alpha weight toward 1 only in its own window
        g_first = first[..., 1].sum() / max(1, first.sum())
        g_second = second[..., 1].sum() / max(1, second.sum())
        assert g_second > 0.9
        assert g_first < 0.6
