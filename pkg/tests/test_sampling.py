import numpy as np
import pytest

from blochnet import sampling
from blochnet.channels import apply_channel, parse_channel_spec
from blochnet.qstate import bloch_from_density, density_from_bloch, purity
from blochnet.sampling import (
    ClassDataset,
    Dataset,
    DatasetFormatError,
    build_classification_dataset,
    build_reconstruction_dataset,
    ginibre_mixed,
    haar_pure,
    load_dataset,
    record_rng,
    save_dataset,
    stream_rng,
    verify_dataset,
)

# Brute-force Monte-Carlo reference for the mean purity of single-qubit
# Ginibre states (10^5 draws, seed 424242), pinned once.
GINIBRE_1Q_MEAN_PURITY = 0.80026
GINIBRE_1Q_MEAN_PURITY_STDERR = 0.00042


class TestHaarPure:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_unit_purity(self, n):
        rng = stream_rng(1)
        for _ in range(20):
            assert purity(haar_pure(n, rng)) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_marginal(self):
        # E |<0|psi>|^2 = 1/2^n for Haar states
        for n in (1, 2):
            rng = stream_rng(50 + n)
            draws = 100000 if n == 1 else 20000
            vals = np.array([haar_pure(n, rng)[0, 0].real for _ in range(draws)])
            stderr = vals.std() / np.sqrt(draws)
            assert abs(vals.mean() - 1 / 2**n) < 3 * stderr

    def test_unitary_invariance(self):
        from scipy.stats import ks_2samp

        rng = stream_rng(60)
        # fixed unitary: Hadamard
        u = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        a = np.array([haar_pure(1, rng)[0, 0].real for _ in range(10000)])
        b = []
        for _ in range(10000):
            rho = haar_pure(1, rng)
            b.append((u @ rho @ u.conj().T)[0, 0].real)
        assert ks_2samp(a, np.array(b)).pvalue > 0.01

    def test_unsupported_n(self):
        with pytest.raises(ValueError):
            haar_pure(5, stream_rng(0))


class TestGinibreMixed:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_valid_density(self, n):
        rng = stream_rng(2)
        for _ in range(20):
            rho = ginibre_mixed(n, rng)
            assert abs(np.trace(rho).real - 1.0) < 1e-12
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-14
            assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
            assert purity(rho) < 1.0

    def test_mean_purity_matches_pinned_reference(self):
        rng = stream_rng(3)
        draws = 100000
        vals = np.array([purity(ginibre_mixed(1, rng)) for _ in range(draws)])
        stderr = vals.std() / np.sqrt(draws)
        margin = 3 * np.hypot(stderr, GINIBRE_1Q_MEAN_PURITY_STDERR)
        assert abs(vals.mean() - GINIBRE_1Q_MEAN_PURITY) < margin


class TestDeterminism:
    def test_record_substreams_are_order_independent(self):
        a = record_rng(42, 7).standard_normal(4)
        record_rng(42, 6).standard_normal(4)
        b = record_rng(42, 7).standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_identical_seeds_identical_datasets(self):
        d1 = build_reconstruction_dataset("Z(0.2)", 1, 20, "pure", 9)
        d2 = build_reconstruction_dataset("Z(0.2)", 1, 20, "pure", 9)
        np.testing.assert_array_equal(d1.noisy, d2.noisy)
        np.testing.assert_array_equal(d1.clean, d2.clean)

    def test_different_seeds_differ(self):
        d1 = build_reconstruction_dataset("Z(0.2)", 1, 20, "pure", 9)
        d2 = build_reconstruction_dataset("Z(0.2)", 1, 20, "pure", 10)
        assert not np.array_equal(d1.clean, d2.clean)


class TestReconstructionDataset:
    def test_shapes_and_invariants(self):
        ds = build_reconstruction_dataset("Z(0.2)", 1, 30, "pure", 5)
        assert ds.M == 30 and ds.noisy.shape == (30, 3)
        verify_dataset(ds)

    def test_two_qubit_shape(self):
        ds = build_reconstruction_dataset("Z(0.2)*X(0.2)", 2, 50, "pure", 5)
        assert ds.noisy.shape == (50, 15)
        verify_dataset(ds)

    def test_identity_channel_noisy_equals_clean(self):
        ds = build_reconstruction_dataset("I", 1, 10, "pure", 5)
        np.testing.assert_allclose(ds.noisy, ds.clean, atol=1e-12)

    def test_channel_consistency(self):
        ds = build_reconstruction_dataset("GAD(0.5,0.3)", 1, 25, "mixed", 6)
        ch = parse_channel_spec("GAD(0.5,0.3)")
        for m in range(ds.M):
            expect = bloch_from_density(apply_channel(ch, density_from_bloch(ds.clean[m])))
            np.testing.assert_allclose(ds.noisy[m], expect, atol=1e-10)

    def test_pure_kind_norms(self):
        ds = build_reconstruction_dataset("Z(0.2)*Z(0.2)", 2, 20, "pure", 7)
        norms_sq = np.sum(ds.clean * ds.clean, axis=1)
        np.testing.assert_allclose(norms_sq, 3.0, atol=1e-8)

    def test_qubit_mismatch(self):
        with pytest.raises(ValueError, match="qubit"):
            build_reconstruction_dataset("Z(0.2)", 2, 10, "pure", 5)


class TestClassificationDataset:
    def test_in_mode_layout(self):
        specs = ["Z(0.2)", "GAD(0.5,0.3)"]
        ds = build_classification_dataset(specs, 1, 300, "IN", 8)
        assert ds.inputs.shape == (300, 6)
        counts = np.bincount(ds.labels)
        assert counts.tolist() == [150, 150]
        verify_dataset(ds)

    def test_n_mode_layout(self):
        ds = build_classification_dataset(["Z(0.2)", "GAD(0.5,0.3)"], 1, 301, "N", 8)
        assert ds.inputs.shape == (301, 3)
        counts = np.bincount(ds.labels)
        assert abs(counts[0] - counts[1]) <= 1

    def test_ternary_balanced(self):
        ds = build_classification_dataset(
            ["Z(0.2)", "GAD(0.5,0.3)", "DEP(0.3)"], 1, 960, "IN", 8
        )
        assert np.bincount(ds.labels).tolist() == [320, 320, 320]

    def test_in_mode_noisy_matches_labelled_channel(self):
        specs = ["Z(0.2)", "DEP(0.3)"]
        ds = build_classification_dataset(specs, 1, 40, "IN", 9)
        parsed = [parse_channel_spec(s) for s in specs]
        for m in range(ds.M):
            noisy, clean = ds.inputs[m, :3], ds.inputs[m, 3:]
            expect = bloch_from_density(
                apply_channel(parsed[ds.labels[m]], density_from_bloch(clean))
            )
            np.testing.assert_allclose(noisy, expect, atol=1e-10)


class TestSerialization:
    def test_round_trip_reconstruction(self, tmp_path):
        ds = build_reconstruction_dataset("Z(0.2)", 1, 15, "pure", 11)
        path = tmp_path / "d.ds"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert isinstance(loaded, Dataset)
        np.testing.assert_array_equal(loaded.noisy, ds.noisy)
        np.testing.assert_array_equal(loaded.clean, ds.clean)
        assert (loaded.n, loaded.kind, loaded.channel_spec, loaded.seed) == (
            ds.n, ds.kind, ds.channel_spec, ds.seed,
        )

    def test_round_trip_classification(self, tmp_path):
        ds = build_classification_dataset(["Z(0.2)", "DEP(0.3)"], 1, 20, "N", 12)
        path = tmp_path / "c.ds"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert isinstance(loaded, ClassDataset)
        np.testing.assert_array_equal(loaded.inputs, ds.inputs)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        assert loaded.channel_specs == ds.channel_specs

    def test_save_is_byte_stable(self, tmp_path):
        ds = build_reconstruction_dataset("Z(0.2)", 1, 15, "pure", 11)
        p1, p2 = tmp_path / "a.ds", tmp_path / "b.ds"
        save_dataset(ds, p1)
        save_dataset(load_dataset(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_corrupted_record_count_fails(self, tmp_path):
        ds = build_reconstruction_dataset("Z(0.2)", 1, 5, "pure", 11)
        path = tmp_path / "d.ds"
        save_dataset(ds, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(DatasetFormatError, match="expected 5 records"):
            load_dataset(path)

    def test_malformed_record_reports_line(self, tmp_path):
        ds = build_reconstruction_dataset("Z(0.2)", 1, 5, "pure", 11)
        path = tmp_path / "d.ds"
        save_dataset(ds, path)
        lines = path.read_text().splitlines()
        lines[3] = "not,a,number,x,y,z"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError, match="line 4"):
            load_dataset(path)

    def test_tampered_record_fails_verification(self, tmp_path):
        ds = build_reconstruction_dataset("Z(0.2)", 1, 5, "pure", 11)
        ds.noisy[2, 0] += 0.1
        path = tmp_path / "d.ds"
        save_dataset(ds, path)
        with pytest.raises(ValueError, match="inconsistent"):
            load_dataset(path, verify=True)
