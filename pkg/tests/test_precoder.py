import numpy as np
import pytest

from polar_rsma.channel import (ConfigurationError, OneRingSpec, UserLink, eigen_structure, one_ring_covariance,
                                sample_channel)
from polar_rsma.config import default_azimuths
from polar_rsma.precoder import (PrecoderSet, common_precoder, common_precoder_batch, group_precoder,
                                 private_precoders, private_precoders_batch)


@pytest.fixture(scope="module")
def groups():
    return [eigen_structure(one_ring_covariance(OneRingSpec(50, az)), rank_cap=15) for az in default_azimuths(4)]


@pytest.mark.parametrize("basis", ["svd", "dominant"])
def test_outer_precoder_invariants(groups, basis):
    for g, own in enumerate(groups):
        others = groups[:g] + groups[g + 1:]
        f = group_precoder(own, others, 6, basis=basis)
        assert f.f.shape == (50, 3)
        assert np.max(np.abs(f.f.conj().T @ f.f - np.eye(3))) <= 1e-10
        for o in others:
            assert np.max(np.abs(o.eigvecs.conj().T @ f.f)) <= 1e-10
        assert np.allclose(f.k, np.kron(np.eye(2), f.f))


def test_dominant_basis_spans_most_energy(groups):
    own, others = groups[0], groups[1:]
    svd = group_precoder(own, others, 6, basis="svd").f
    dom = group_precoder(own, others, 6, basis="dominant").f
    energy = [np.trace(f.conj().T @ own.covariance @ f).real for f in (svd, dom)]
    assert energy[1] >= energy[0]
    # no other 3-dimensional slice of the null space holds more
    null = group_precoder(own, others, 6).null_basis
    top = np.sort(np.linalg.eigvalsh(null.conj().T @ own.covariance @ null))[::-1][:3].sum()
    assert energy[1] == pytest.approx(top, rel=1e-10)


def test_single_group_uses_whole_space():
    g = eigen_structure(np.eye(6), rank_cap=6)
    f = group_precoder(g, [], 4)
    assert np.array_equal(f.f, np.eye(6, dtype=complex)[:, :2])


def test_dimension_constraints(groups):
    with pytest.raises(ConfigurationError, match="even"):
        group_precoder(groups[0], groups[1:], 5)
    with pytest.raises(ConfigurationError, match="M_bar/2 <= M/2"):
        group_precoder(groups[0], groups[1:], 2 * 30)
    big = eigen_structure(np.eye(50), rank_cap=50)
    with pytest.raises(ConfigurationError, match="M/2 > sum"):
        group_precoder(groups[0], [big], 2)
    with pytest.raises(ValueError):
        group_precoder(groups[0], groups[1:], 6, basis="random")


def _effective(groups, f, rng, users=3, chi=0.0):
    chans = [sample_channel(groups[0], UserLink(z), chi, rng) for z in (0.07, 0.1, 0.17)[:users]]
    return chans, np.stack([f.f.conj().T @ c.h_hh for c in chans])


def test_private_isolation(groups):
    f = group_precoder(groups[0], groups[1:], 6, basis="dominant")
    rng = np.random.default_rng(1)
    for _ in range(50):
        chans, eff = _effective(groups, f, rng)
        p = private_precoders(f, eff)
        assert np.allclose(np.linalg.norm(p, axis=1), 1.0, atol=1e-12)
        for u in range(3):
            for k in range(3):
                gain = abs(np.vdot(chans[k].h_hh, f.f @ p[u]))
                if k == u:
                    assert gain > 0
                else:
                    assert gain <= 1e-9 * np.linalg.norm(chans[k].h_hh)


def test_private_precoder_maximizes_own_gain():
    rng = np.random.default_rng(2)
    e = rng.standard_normal((2, 5)) + 1j * rng.standard_normal((2, 5))
    p = private_precoders_batch(e)
    # null space of user 1's channel is 4-dimensional; compare with its best vector
    _, _, vh = np.linalg.svd(e[1:].conj())
    null = vh[1:].conj().T
    best = np.linalg.norm(null.conj().T @ e[0])
    assert abs(np.vdot(e[0], p[0])) == pytest.approx(best, rel=1e-12)


def test_single_user_gets_matched_filter():
    e = np.array([[1 + 2j, -0.5j, 3.0]])
    p = private_precoders_batch(e)
    assert np.allclose(p[0], e[0] / np.linalg.norm(e[0]))


def test_empty_private_null_space():
    with pytest.raises(ConfigurationError, match="U - 1"):
        private_precoders_batch(np.ones((3, 2), dtype=complex))


def test_batched_matches_single(groups):
    f = group_precoder(groups[0], groups[1:], 6)
    rng = np.random.default_rng(5)
    effs = np.stack([_effective(groups, f, rng)[1] for _ in range(20)])
    batched = private_precoders_batch(effs)
    for b in range(20):
        assert np.allclose(batched[b], private_precoders(f, effs[b]), atol=1e-13)


def test_common_precoder():
    rng = np.random.default_rng(0)
    assert abs(np.linalg.norm(common_precoder(3, rng)) - 1) < 1e-12
    scalar = common_precoder(1, rng)
    assert scalar.shape == (1,) and abs(abs(scalar[0]) - 1) < 1e-12
    with pytest.raises(ConfigurationError):
        common_precoder(0, rng)


def test_common_precoder_is_isotropic():
    c = common_precoder_batch(3, np.random.default_rng(8), 100_000)
    second = np.einsum("bi,bj->ij", c, c.conj()) / c.shape[0]
    assert np.allclose(second, np.eye(3) / 3, atol=0.02 / 3)


def test_common_precoder_deterministic():
    a = common_precoder_batch(4, np.random.default_rng(3), 10)
    b = common_precoder_batch(4, np.random.default_rng(3), 10)
    assert np.array_equal(a, b)


def test_stacked_vectors():
    s = PrecoderSet(np.array([1, 0j]), np.array([[0, 1j], [1, 0j]]))
    assert np.array_equal(s.stacked_common(), [1, 0, 0, 0])
    assert np.array_equal(s.stacked_private(0), [0, 0, 0, 1j])
