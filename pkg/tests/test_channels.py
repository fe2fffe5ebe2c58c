import numpy as np
import pytest

from blochnet import channels as chan
from blochnet.channels import (
    ChannelSpecError,
    KrausChannel,
    apply_channel,
    bit_flip,
    bit_phase_flip,
    correlated_ad,
    cptp_residual,
    depolarizing,
    depolarizing_d,
    generalized_amplitude_damping,
    identity_channel,
    parse_channel_spec,
    pauli_channel,
    phase_flip,
    tensor,
    validate_cptp,
)
from blochnet.qstate import PAULI_1Q, bloch_from_density, density_from_bloch
from blochnet.sampling import ginibre_mixed, haar_pure, stream_rng


def bloch_out(channel, r):
    return bloch_from_density(apply_channel(channel, density_from_bloch(r)))


def catalog():
    return [
        bit_flip(0.2),
        phase_flip(0.2),
        bit_phase_flip(0.2),
        pauli_channel(0.7, 0.1, 0.1, 0.1),
        depolarizing(0.3),
        generalized_amplitude_damping(0.5, 0.3),
        correlated_ad(0.1, 0.2),
    ]


class TestCatalogActions:
    def test_bit_flip(self):
        np.testing.assert_allclose(bloch_out(bit_flip(0.0), [0.3, -0.2, 0.5]), [0.3, -0.2, 0.5], atol=1e-12)
        np.testing.assert_allclose(bloch_out(bit_flip(0.2), [0, 1, 0]), [0, 0.6, 0], atol=1e-12)
        np.testing.assert_allclose(bloch_out(bit_flip(0.2), [1, 0, 0]), [1, 0, 0], atol=1e-12)

    def test_phase_flip(self):
        np.testing.assert_allclose(bloch_out(phase_flip(0.2), [1, 0, 0]), [0.6, 0, 0], atol=1e-12)
        np.testing.assert_allclose(bloch_out(phase_flip(0.2), [0, 0, 1]), [0, 0, 1], atol=1e-12)
        np.testing.assert_allclose(bloch_out(phase_flip(0.5), [1, 0, 0]), [0, 0, 0], atol=1e-12)

    def test_bit_phase_flip(self):
        np.testing.assert_allclose(bloch_out(bit_phase_flip(0.2), [0, 1, 0]), [0, 1, 0], atol=1e-12)
        np.testing.assert_allclose(bloch_out(bit_phase_flip(0.2), [1, 0, 0]), [0.6, 0, 0], atol=1e-12)
        np.testing.assert_allclose(bloch_out(bit_phase_flip(0.0), [0.1, 0.2, 0.3]), [0.1, 0.2, 0.3], atol=1e-12)

    def test_pauli_channel(self):
        np.testing.assert_allclose(bloch_out(pauli_channel(1, 0, 0, 0), [0.4, 0.1, -0.3]), [0.4, 0.1, -0.3], atol=1e-12)
        np.testing.assert_allclose(bloch_out(pauli_channel(0.7, 0.1, 0.1, 0.1), [1, 0, 0]), [0.6, 0, 0], atol=1e-12)
        np.testing.assert_allclose(
            bloch_out(pauli_channel(0.25, 0.25, 0.25, 0.25), [0.3, -0.5, 0.7]), [0, 0, 0], atol=1e-12
        )

    def test_pauli_probabilities_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            pauli_channel(0.5, 0.2, 0.2, 0.2)

    def test_depolarizing(self):
        np.testing.assert_allclose(bloch_out(depolarizing(0.3), [0, 0, 1]), [0, 0, 0.7], atol=1e-12)
        np.testing.assert_allclose(bloch_out(depolarizing(0.0), [0.2, 0.3, 0.4]), [0.2, 0.3, 0.4], atol=1e-12)

    def test_depolarizing_d_matches_kraus_on_one_qubit(self):
        rng = stream_rng(3)
        for _ in range(20):
            rho = ginibre_mixed(1, rng)
            np.testing.assert_allclose(
                depolarizing_d(0.3, rho), apply_channel(depolarizing(0.3), rho), atol=1e-12
            )

    def test_depolarizing_d_full_strength(self):
        rng = stream_rng(4)
        for n in (1, 2, 3):
            rho = ginibre_mixed(n, rng)
            np.testing.assert_allclose(depolarizing_d(1.0, rho), np.eye(2**n) / 2**n, atol=1e-12)

    def test_gad_gamma_zero_is_identity(self):
        rng = stream_rng(5)
        rho = ginibre_mixed(1, rng)
        np.testing.assert_allclose(
            apply_channel(generalized_amplitude_damping(0.7, 0.0), rho), rho, atol=1e-12
        )

    def test_gad_stationary_state(self):
        for p in (0.2, 0.5, 0.9):
            for gamma in (0.1, 0.3, 0.8):
                fixed = np.diag([p, 1 - p]).astype(complex)
                out = apply_channel(generalized_amplitude_damping(p, gamma), fixed)
                np.testing.assert_allclose(out, fixed, atol=1e-10)

    def test_gad_z_action(self):
        out = bloch_out(generalized_amplitude_damping(0.5, 0.3), [0, 0, 1])
        np.testing.assert_allclose(out, [0, 0, 0.7], atol=1e-12)

    def test_correlated_ad_identity_limit(self):
        rng = stream_rng(6)
        rho = ginibre_mixed(2, rng)
        np.testing.assert_allclose(apply_channel(correlated_ad(0.0, 0.0), rho), rho, atol=1e-12)

    def test_correlated_ad_fully_correlated_on_11(self):
        # mu = 1: only B0, B1 act; |11> decays to |00> with prob 1 - eta
        eta = 0.3
        rho = np.zeros((4, 4), dtype=complex)
        rho[3, 3] = 1.0
        out = apply_channel(correlated_ad(eta, 1.0), rho)
        assert out[0, 0].real == pytest.approx(1 - eta, abs=1e-12)
        assert out[3, 3].real == pytest.approx(eta, abs=1e-12)

    def test_correlated_ad_cptp(self):
        passed, residual = validate_cptp(correlated_ad(0.1, 0.2))
        assert passed and residual < 1e-10

    def test_bit_flip_unit_probability_is_x_conjugation(self):
        rng = stream_rng(7)
        rho = ginibre_mixed(1, rng)
        x = PAULI_1Q["X"]
        np.testing.assert_allclose(apply_channel(bit_flip(1.0), rho), x @ rho @ x, atol=0)

    def test_parameter_range_checks(self):
        for ctor in (bit_flip, phase_flip, bit_phase_flip, depolarizing):
            with pytest.raises(ValueError):
                ctor(1.5)
        with pytest.raises(ValueError):
            generalized_amplitude_damping(0.5, -0.1)
        with pytest.raises(ValueError):
            correlated_ad(2.0, 0.5)


class TestTensorAndApply:
    def test_tensor_identity(self):
        ch = tensor(identity_channel(), identity_channel())
        rng = stream_rng(8)
        rho = ginibre_mixed(2, rng)
        np.testing.assert_allclose(apply_channel(ch, rho), rho, atol=1e-12)

    def test_tensor_on_product_state(self):
        # Z(0.2) x I on a product state: Z x I Bloch component unchanged
        ch = tensor(phase_flip(0.2), identity_channel())
        r1 = np.array([0.5, 0.1, 0.6])
        r2 = np.array([-0.2, 0.3, 0.1])
        rho = np.kron(density_from_bloch(r1), density_from_bloch(r2))
        out = bloch_from_density(apply_channel(ch, rho))
        r_in = bloch_from_density(rho)
        # index of Z x I in lexicographic order (I,X,Y,Z): "ZI" -> 3*4 - 1 = 11
        assert out[11] == pytest.approx(r_in[11], abs=1e-12)
        # X x I (index "XI" = 1*4 - 1 = 3) contracts by 1 - 2p
        assert out[3] == pytest.approx(0.6 * r_in[3], abs=1e-12)

    def test_triple_tensor_cptp(self):
        ch = tensor(bit_flip(0.2), tensor(phase_flip(0.2), bit_phase_flip(0.2)))
        assert len(ch.kraus) == 8
        assert ch.n == 3
        passed, residual = validate_cptp(ch)
        assert passed and residual < 1e-10

    def test_apply_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            apply_channel(phase_flip(0.2), np.eye(4) / 4)

    def test_apply_preserves_trace_and_hermiticity(self):
        rng = stream_rng(9)
        cat = catalog()
        for i in range(1000):
            ch = cat[i % len(cat)]
            rho = ginibre_mixed(ch.n, rng)
            out = apply_channel(ch, rho)
            assert abs(np.trace(out).real - 1.0) < 1e-12
            assert np.max(np.abs(out - out.conj().T)) < 1e-12


class TestCptpValidation:
    def test_catalog_passes(self):
        for ch in catalog():
            passed, residual = validate_cptp(ch)
            assert passed, f"{ch.label}: residual {residual}"

    def test_doctored_list_fails(self):
        ident = np.eye(2, dtype=complex)
        bad = [ident, 0.1 * PAULI_1Q["X"]]
        acc = sum(k.conj().T @ k for k in bad)
        assert np.linalg.norm(acc - ident) == pytest.approx(np.sqrt(2) * 0.01, rel=1e-10)
        with pytest.raises(ValueError, match="trace preservation"):
            KrausChannel(1, tuple(bad), "doctored")

    def test_tensor_of_passing_channels_passes(self):
        ch = tensor(phase_flip(0.2), bit_flip(0.35))
        passed, residual = validate_cptp(ch)
        assert passed and residual < 1e-10


class TestAffineActionOracle:
    """Fit the 3x3 linear part + offset from the 6 axis states and compare."""

    def fit_affine(self, ch):
        offset = bloch_out(ch, np.zeros(3))
        cols = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            plus = bloch_out(ch, e)
            minus = bloch_out(ch, -e)
            cols.append((plus - minus) / 2)
        return np.column_stack(cols), offset

    @pytest.mark.parametrize(
        "ch,expect_lin,expect_off",
        [
            (phase_flip(0.2), np.diag([0.6, 0.6, 1.0]), np.zeros(3)),
            (bit_flip(0.2), np.diag([1.0, 0.6, 0.6]), np.zeros(3)),
            (bit_phase_flip(0.2), np.diag([0.6, 1.0, 0.6]), np.zeros(3)),
            (depolarizing(0.3), 0.7 * np.eye(3), np.zeros(3)),
            (
                generalized_amplitude_damping(0.8, 0.3),
                np.diag([np.sqrt(0.7), np.sqrt(0.7), 0.7]),
                np.array([0, 0, 0.3 * (2 * 0.8 - 1)]),
            ),
        ],
        ids=["phase_flip", "bit_flip", "bit_phase_flip", "depolarizing", "gad"],
    )
    def test_analytic_affine_action(self, ch, expect_lin, expect_off):
        lin, off = self.fit_affine(ch)
        np.testing.assert_allclose(lin, expect_lin, atol=1e-10)
        np.testing.assert_allclose(off, expect_off, atol=1e-10)

    def test_fit_reproduces_random_states(self):
        rng = stream_rng(10)
        ch = generalized_amplitude_damping(0.5, 0.3)
        lin, off = self.fit_affine(ch)
        for _ in range(100):
            r = bloch_from_density(haar_pure(1, rng))
            np.testing.assert_allclose(bloch_out(ch, r), lin @ r + off, atol=1e-10)


class TestChannelSpecParser:
    def test_simple(self):
        ch = parse_channel_spec("Z(0.2)")
        assert ch.label == "Z(0.2)"
        np.testing.assert_allclose(bloch_out(ch, [1, 0, 0]), [0.6, 0, 0], atol=1e-12)

    def test_tensor_product(self):
        ch = parse_channel_spec("Z(0.2)*X(0.2)")
        assert ch.n == 2
        ref = tensor(phase_flip(0.2), bit_flip(0.2))
        for a, b in zip(ch.kraus, ref.kraus):
            np.testing.assert_allclose(a, b, atol=0)

    def test_correlated_ad(self):
        ch = parse_channel_spec("CAD(0.1,0.2)")
        assert ch.n == 2
        assert ch.params == {"eta": 0.1, "mu": 0.2}

    def test_identity_term(self):
        ch = parse_channel_spec("Z(0.2)*I")
        assert ch.n == 2

    def test_whitespace_ignored(self):
        ch = parse_channel_spec(" Z( 0.2 ) * X(0.2) ")
        assert ch.n == 2

    def test_label_round_trip(self):
        for text in ["Z(0.2)", "GAD(0.5,0.3)", "Z(0.2)*X(0.2)"]:
            ch = parse_channel_spec(text)
            again = parse_channel_spec(ch.label)
            for a, b in zip(ch.kraus, again.kraus):
                np.testing.assert_allclose(a, b, atol=0)

    def test_unknown_name(self):
        with pytest.raises(ChannelSpecError, match="unknown channel name"):
            parse_channel_spec("Q(0.2)")

    def test_arity_mismatch(self):
        with pytest.raises(ChannelSpecError, match="parameter"):
            parse_channel_spec("GAD(0.5)")

    def test_syntax_error_reports_position(self):
        with pytest.raises(ChannelSpecError) as err:
            parse_channel_spec("Z(0.2")
        assert err.value.position == 5

    def test_bad_character(self):
        with pytest.raises(ChannelSpecError):
            parse_channel_spec("Z(0.2)#X(0.2)")
