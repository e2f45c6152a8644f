import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from onebit_ofdm.coding import (
    CodeConfig,
    coded_ber_sim,
    coded_trial,
    conv_encode,
    deinterleave,
    encode_codeword,
    interleave,
    interleaver_permutation,
    viterbi_decode_hard,
)
from onebit_ofdm.config import make_config

from oracles import exhaustive_ml, shift_register_encode

K7 = (7, (0o133, 0o171))
K3 = (3, (0o7, 0o5))


def test_code_config_defaults():
    code = CodeConfig()
    assert code.info_bits == 2994
    assert 2 * (code.info_bits + code.K - 1) == code.codeword_bits
    with pytest.raises(ValueError):
        CodeConfig(generators=(0o133,))
    with pytest.raises(ValueError):
        CodeConfig(K=3, generators=(0o17, 0o5))
    with pytest.raises(ValueError):
        CodeConfig(codeword_bits=11)


def test_all_zero_input():
    assert not np.any(conv_encode(np.zeros(40, dtype=np.uint8)))


@pytest.mark.parametrize("K,gens", [K3, K7])
def test_impulse_response_is_generators(K, gens):
    impulse = np.zeros(1, dtype=np.uint8) + 1
    out = conv_encode(impulse, K, gens).reshape(-1, 2)
    for j, g in enumerate(gens):
        expected = [(g >> (K - 1 - d)) & 1 for d in range(K)]
        assert list(out[:, j]) == expected


@pytest.mark.parametrize("K,gens", [K3, K7, (5, (0o23, 0o35))])
def test_encoder_matches_shift_register(K, gens, rng):
    for _ in range(5):
        bits = rng.integers(0, 2, 20)
        assert np.array_equal(conv_encode(bits, K, gens), shift_register_encode(bits, K, gens))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=60), st.data())
def test_encoder_is_linear(a, data):
    b = data.draw(st.lists(st.integers(0, 1), min_size=len(a), max_size=len(a)))
    a, b = np.array(a), np.array(b)
    assert np.array_equal(conv_encode(a ^ b), conv_encode(a) ^ conv_encode(b))


def test_encoder_batched_shape():
    bits = np.random.default_rng(0).integers(0, 2, (3, 2, 15))
    out = conv_encode(bits)
    assert out.shape == (3, 2, 2 * (15 + 6))
    assert np.array_equal(out[1, 0], conv_encode(bits[1, 0]))


@pytest.mark.parametrize("K,gens,T", [(3, (0o7, 0o5), 10), (3, (0o7, 0o5), 12), (7, (0o133, 0o171), 8)])
def test_viterbi_is_maximum_likelihood(K, gens, T, rng):
    msgs = rng.integers(0, 2, (12, T))
    cws = conv_encode(msgs, K, gens)
    noisy = cws ^ (rng.random(cws.shape) < 0.15)
    decoded = viterbi_decode_hard(noisy, K, gens)
    for r in range(msgs.shape[0]):
        best, winners = exhaustive_ml(noisy[r], T, K, gens)
        dist = int(np.count_nonzero(shift_register_encode(decoded[r], K, gens) != noisy[r]))
        assert dist == best
        assert tuple(int(v) for v in decoded[r]) in winners


def test_viterbi_corrects_isolated_flips(rng):
    msg = rng.integers(0, 2, 200)
    cw = conv_encode(msg)
    cw[[17, 301]] ^= 1
    assert np.array_equal(viterbi_decode_hard(cw), msg)


def test_codeword_round_trip(rng):
    code = CodeConfig()
    info = rng.integers(0, 2, (3, code.info_bits), dtype=np.uint8)
    cw = encode_codeword(info, code)
    assert cw.shape == (3, 6000)
    assert np.array_equal(viterbi_decode_hard(cw), info)
    with pytest.raises(ValueError):
        encode_codeword(info[:, :-1], code)
    with pytest.raises(ValueError):
        viterbi_decode_hard(cw[:, :-1])


def test_viterbi_unterminated_returns_all_bits(rng):
    msg = rng.integers(0, 2, 30)
    cw = conv_encode(msg)
    out = viterbi_decode_hard(cw, terminated=False)
    assert out.shape == (36,)
    assert np.array_equal(out[:30], msg)


# ---------------------------------------------------------------------------
# interleaver


def test_interleaver_round_trip_and_determinism(rng):
    bits = rng.integers(0, 2, (2, 10 * 12))
    a = interleave(bits, 10, 7, 12)
    assert np.array_equal(a, interleave(bits, 10, 7, 12))
    assert not np.array_equal(a, interleave(bits, 10, 8, 12))
    assert np.array_equal(deinterleave(a, 10, 7, 12), bits)
    assert np.array_equal(np.sort(interleaver_permutation(120, 3)), np.arange(120))


def test_interleaver_length_mismatch():
    with pytest.raises(ValueError):
        interleave(np.zeros(100), 10, 0, 12)
    with pytest.raises(ValueError):
        deinterleave(np.zeros(100), 10, 0, 12)


def test_interleaver_uniform_destinations():
    length, seeds = 20, 4000
    dest = np.empty((seeds, length), dtype=int)
    for s in range(seeds):
        perm = interleaver_permutation(length, s)
        dest[s, perm] = np.arange(length)
    for idx in (0, 7, 19):
        counts = np.bincount(dest[:, idx], minlength=length)
        assert stats.chisquare(counts).pvalue > 0.01


def test_interleaver_spreads_bursts():
    # adjacent coded bits should land in different OFDM symbols most of the time
    perm = interleaver_permutation(6000, 0)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(6000)
    symbol = inv // 600
    assert np.mean(symbol[:-1] != symbol[1:]) > 0.8


# ---------------------------------------------------------------------------
# coded link


def small_coded():
    cfg = make_config(B=16, U=2, N=64, S=30, L=4, precoder="zf", seed=11)
    return cfg, CodeConfig(codeword_bits=600)


def test_coded_error_free_at_high_snr_ideal_dac():
    cfg, code = small_coded()
    res = coded_trial(cfg.replace(dac=cfg.dac.INFINITE), code, [200.0], 0)
    assert res.errors == (0,)
    assert res.bits == 2 * code.info_bits


def test_coded_rejects_mismatched_length():
    cfg, _ = small_coded()
    with pytest.raises(ValueError):
        coded_trial(cfg, CodeConfig(codeword_bits=602), [0.0], 0)


def test_coded_beats_uncoded_and_orders_in_snr():
    cfg, code = small_coded()
    recs = coded_ber_sim(cfg, code, [-10.0, 0.0, 8.0], trials=6, min_trials=6, target_errors=None)
    vals = [r.value for r in recs]
    assert vals[0] > vals[1] >= vals[2]
    assert vals[0] > 0.1
    assert all(r.metric == "coded-ber-sim" and r.trials == 6 for r in recs)


def test_coded_is_reproducible():
    cfg, code = small_coded()
    a = coded_trial(cfg, code, [-2.0, 0.0], 3)
    b = coded_trial(cfg, code, [-2.0, 0.0], 3)
    assert a == b
    # skipping a point does not change the other
    c = coded_trial(cfg, code, [-2.0, 0.0], 3, active=[False, True])
    assert c.errors[1] == a.errors[1]
