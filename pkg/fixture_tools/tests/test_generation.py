"""Tests for fixture generation: determinism, schemas, and committed artifacts."""

import importlib.util
import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

pytest.importorskip("fixture_tools")

from fixture_tools import golden, models

REPO_ROOT = Path(__file__).resolve().parents[2]
COMMITTED = REPO_ROOT / "fixtures"


def _tree_digest(root: Path) -> dict[str, bytes]:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = path.read_bytes()
    return out


def _generate_all(out_dir: Path) -> None:
    band = golden.band_containing(1000.0, golden.MEL64)
    models.generate_all_models(out_dir / "models", band_for_1khz=band)
    golden.generate_golden_vectors("mel64", out_dir / "golden")


class TestDeterminism:
    def test_two_runs_are_byte_identical(self, tmp_path):
        _generate_all(tmp_path / "a")
        _generate_all(tmp_path / "b")
        da, db = _tree_digest(tmp_path / "a"), _tree_digest(tmp_path / "b")
        assert da.keys() == db.keys()
        for name in da:
            assert da[name] == db[name], f"{name} differs between runs"

    def test_committed_fixtures_match_regeneration(self, tmp_path):
        # The fixtures checked into the repo must be exactly what the
        # current generator produces, or they silently drift apart.
        _generate_all(tmp_path)
        fresh = _tree_digest(tmp_path)
        committed = _tree_digest(COMMITTED)
        assert fresh.keys() == committed.keys()
        for name in fresh:
            assert fresh[name] == committed[name], f"{name} drifted from generator"


class TestModelBundles:
    def test_manifests_are_wellformed_json(self, tmp_path):
        band = golden.band_containing(1000.0, golden.MEL64)
        models.generate_all_models(tmp_path, band_for_1khz=band)
        manifests = sorted(tmp_path.glob("*.json"))
        assert len(manifests) == len(models.FIXTURE_SPECS)
        for path in manifests:
            payload = json.loads(path.read_text())
            assert payload["model_id"] == path.stem
            assert payload["pipeline_kind"] in ("embedded-frontend", "two-stage",
                                                "external-spectrogram")
            # Paths are relative so the bundle can be relocated wholesale.
            assert not Path(payload["primary_model_path"]).is_absolute()
            assert (path.parent / payload["primary_model_path"]).is_file()
            assert (path.parent / payload["labels_path"]).is_file()

    def test_labels_count_and_recognizable_names(self, tmp_path):
        band = golden.band_containing(1000.0, golden.MEL64)
        models.generate_all_models(tmp_path, band_for_1khz=band)
        lines = (tmp_path / models.LABELS_FILE).read_text().splitlines()
        assert len(lines) == models.N_CLASSES
        assert len(set(lines)) == models.N_CLASSES
        for name in models.RECOGNIZABLE_LABELS:
            assert name in lines

    def test_latency_pair_sizes_are_well_separated(self, tmp_path):
        band = golden.band_containing(1000.0, golden.MEL64)
        models.generate_all_models(tmp_path, band_for_1khz=band)
        small = (tmp_path / "lat-small.onnx").stat().st_size
        large = (tmp_path / "lat-large.onnx").stat().st_size
        assert large >= 10 * small

    def test_band_energy_matrix_shapes(self):
        basis = models.band_basis()
        assert basis.shape == (models.FRAME, 2 * len(models.BAND_FREQS_HZ))
        pair = models.pair_sum_matrix()
        assert pair.shape == (2 * len(models.BAND_FREQS_HZ), len(models.BAND_FREQS_HZ))
        route = models.route_matrix(models.N_CLASSES)
        assert route.shape == (len(models.BAND_FREQS_HZ), models.N_CLASSES)

    def test_band_energy_projection_is_phase_invariant(self):
        # Quadrature pairs at integer cycles per frame make the projected
        # energy independent of the sine's starting phase.
        basis = models.band_basis()
        pair = models.pair_sum_matrix()
        t = np.arange(models.FRAME) / models.RATE_HZ
        energies = []
        for phase in (0.0, 0.4, 1.1, 2.9):
            frame = np.sin(2 * np.pi * 1000.0 * t + phase).astype(np.float32)
            proj = frame @ basis
            energies.append((proj * proj) @ pair)
        scale = float(np.max(energies[0]))
        for e in energies[1:]:
            np.testing.assert_allclose(e, energies[0], rtol=1e-4,
                                       atol=1e-8 * scale)


class TestGoldenVectors:
    def test_sidecar_schema_and_dump_shape(self, tmp_path):
        golden.generate_golden_vectors("mel64", tmp_path)
        sidecars = sorted(tmp_path.glob("*.json"))
        assert len(sidecars) == 5
        for path in sidecars:
            meta = json.loads(path.read_text())
            for key in ("shape", "dtype", "data_file", "input_name",
                        "input_file", "preset", "mel"):
                assert key in meta, f"{path.name} missing {key}"
            assert meta["dtype"] == "float32-le"
            raw = np.fromfile(path.parent / meta["data_file"], dtype="<f4")
            assert raw.size == meta["shape"][0] * meta["shape"][1]

    def test_reference_mel_matches_dump(self, tmp_path):
        golden.generate_golden_vectors("mel64", tmp_path)
        meta = json.loads((tmp_path / "sine_1khz.json").read_text())
        raw = np.fromfile(tmp_path / meta["data_file"], dtype="<f4")
        raw = raw.reshape(meta["shape"])
        from scipy.io import wavfile
        rate, samples = wavfile.read(tmp_path / meta["input_file"])
        ref = golden.log_mel_reference(samples.astype(np.float64),
                                       golden.MEL64, rate_hz=rate)
        np.testing.assert_allclose(raw, ref.astype(np.float32), atol=1e-5)

    def test_band_containing_picks_dominant_filter(self):
        fb = golden.filterbank(golden.MEL64, golden.RATE_HZ)
        band = golden.band_containing(1000.0, golden.MEL64)
        bin_1khz = round(1000.0 * golden.MEL64["n_fft"] / golden.RATE_HZ)
        assert fb[band, bin_1khz] == np.max(fb[:, bin_1khz])


def _cli_available() -> bool:
    return (shutil.which("edge-tagger") is not None
            and importlib.util.find_spec("edgetagger.cli") is not None)


@pytest.mark.skipif(not _cli_available(), reason="primary CLI not installed")
class TestValidateAgainstRuntime:
    def test_all_bundles_pass_cli_validation(self):
        for path in sorted((COMMITTED / "models").glob("*.json")):
            proc = subprocess.run(
                ["edge-tagger", "validate", "--model", str(path)],
                capture_output=True, text=True, timeout=120)
            assert proc.returncode == 0, (
                f"{path.name}: rc={proc.returncode}\n{proc.stderr}")
