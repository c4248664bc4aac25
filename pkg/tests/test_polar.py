import itertools
import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from lowcap.channels import BEC, BIAWGN, BSC, RngStream, capacity, transmit
from lowcap.experiments import fig3_spec
from lowcap.polar import (
    BACKEND,
    PolarSpec,
    bhattacharyya_bec,
    bhattacharyya_bec_all,
    construct,
    crc_bits,
    encode,
    encode_work,
    fast_decode,
    fast_encode,
    get_kernels,
    guaranteed_repetition_exponent,
    implicit_repetition_factor,
    inner_spec,
    min_distance,
    polar_transform,
    saturate_llrs,
    sc_decode,
    scl_decode,
    theorem7_bhattacharyya_audit,
    theorem7_m0,
)


def _bsc_at_capacity(c):
    return BSC(brentq(lambda d: capacity(BSC(d)) - c, 1e-6, 0.5 - 1e-9, xtol=1e-15))


def _biawgn_at_capacity(c):
    return BIAWGN(brentq(lambda s: capacity(BIAWGN(s)) - c, 1.0, 100.0, xtol=1e-13))


def _generator_matrix(m):
    g = np.array([[1]], dtype=np.uint8)
    for _ in range(m):
        g = np.kron(np.array([[1, 0], [1, 1]], dtype=np.uint8), g)
    return g


class TestBhattacharyya:
    def test_all_plus(self):
        assert bhattacharyya_bec(0.5, 7, 3) == 0.5 ** 8

    def test_all_minus(self):
        assert bhattacharyya_bec(0.5, 0, 2) == pytest.approx(0.9375, abs=1e-15)

    def test_operation_order(self):
        # 10 = 1010: plus, minus, plus, minus
        e = 0.3
        z = e * e
        z = 2 * z - z * z
        z = z * z
        z = 2 * z - z * z
        assert bhattacharyya_bec(e, 10, 4) == pytest.approx(z, rel=1e-15)

    def test_vectorized(self):
        for m in (1, 4, 9):
            np.testing.assert_allclose(bhattacharyya_bec_all(0.77, m),
                                       [bhattacharyya_bec(0.77, i, m) for i in range(1 << m)],
                                       rtol=1e-15)

    def test_child_ordering(self):
        z = np.linspace(0, 1, 101)
        assert np.all(z * z <= z) and np.all(z <= 2 * z - z * z)

    def test_range(self):
        with pytest.raises(ValueError):
            bhattacharyya_bec(0.5, 8, 3)


class TestConstruct:
    def test_full_rate(self):
        assert construct(BEC(0.3), 4, 16).info_set == tuple(range(16))

    def test_two_channels(self):
        assert construct(BEC(0.5), 1, 1).info_set == (1,)

    def test_rejects_k(self):
        with pytest.raises(ValueError):
            construct(BEC(0.5), 3, 9)

    @pytest.mark.parametrize("m", range(10, 15))
    def test_distance_ratio(self, m):
        spec = construct(BEC(0.98), m, 40)
        assert min_distance(spec) * 8 == spec.n

    @pytest.mark.parametrize("m,d", [(12, 512), (13, 1024)])
    def test_distance_table(self, m, d):
        assert min_distance(construct(BEC(0.98), m, 40)) == d

    def test_distance_all_ones(self):
        assert min_distance(PolarSpec(5, (31,))) == 32

    @pytest.mark.parametrize("m", range(10, 15))
    def test_universality(self, m):
        ref = construct(BEC(0.98), m, 40).info_set
        for ch in (_bsc_at_capacity(0.02), _biawgn_at_capacity(0.02)):
            spec = construct(ch, m, 40)
            assert spec.info_set == ref
            assert min_distance(spec) * 8 == spec.n

    def test_crc_positions(self):
        spec = construct(BEC(0.98), 10, 46, crc_len=6)
        z = bhattacharyya_bec_all(0.98, 10)
        assert min(z[list(spec.crc_set)]) >= max(z[spec.payload_positions])
        assert spec.k_payload == 40


class TestCrc:
    def test_polynomial_division(self):
        rng = np.random.default_rng(0)
        poly = 0b1000011
        for _ in range(200):
            bits = rng.integers(0, 2, int(rng.integers(1, 60)))
            v = int("".join(map(str, bits)), 2) << 6
            while v.bit_length() > 6:
                v ^= poly << (v.bit_length() - 7)
            np.testing.assert_array_equal(crc_bits(bits, poly, 6),
                                          [(v >> (5 - j)) & 1 for j in range(6)])


class TestEncode:
    def test_zero(self):
        spec = construct(BEC(0.9), 8, 20, crc_len=6)
        assert not encode(spec, np.zeros(14, dtype=np.uint8)).any()

    def test_g4_row(self):
        np.testing.assert_array_equal(encode(PolarSpec(2, (3,)), [1]), [1, 1, 1, 1])

    def test_against_matrix(self):
        rng = np.random.default_rng(1)
        for m in range(1, 8):
            u = rng.integers(0, 2, 1 << m).astype(np.uint8)
            np.testing.assert_array_equal(polar_transform(u), u @ _generator_matrix(m) % 2)

    def test_row_weights(self):
        m = 7
        for i in range(1 << m):
            assert encode(PolarSpec(m, (i,)), [1]).sum() == 2 ** bin(i).count("1")

    def test_involution(self):
        rng = np.random.default_rng(2)
        for m in range(0, 11):
            u = rng.integers(0, 2, 1 << m).astype(np.uint8)
            np.testing.assert_array_equal(polar_transform(polar_transform(u)), u)

    def test_linearity(self):
        spec = construct(BEC(0.95), 9, 30)
        rng = np.random.default_rng(3)
        a = rng.integers(0, 2, (1000, 30)).astype(np.uint8)
        b = rng.integers(0, 2, (1000, 30)).astype(np.uint8)
        np.testing.assert_array_equal(encode(spec, a ^ b), encode(spec, a) ^ encode(spec, b))

    def test_payload_length(self):
        with pytest.raises(ValueError):
            encode(construct(BEC(0.9), 5, 8), np.zeros(7))


def _sc_oracle(info, y_erased, x, eps=0.5):
    """SC rule by brute-force likelihoods over the remaining bits, n = 4.

    Returns the decisions up to the first info bit whose two hypotheses both
    have zero likelihood (an LLR of 0/0, reachable only after a wrong earlier
    decision); later decisions are undefined.
    """
    g = _generator_matrix(2)
    u = []
    for i in range(4):
        if i not in info:
            u.append(0)
            continue
        p = [0.0, 0.0]
        for b in (0, 1):
            for rest in itertools.product([0, 1], repeat=3 - i):
                c = np.array(u + [b] + list(rest)) @ g % 2
                lik = 1.0
                for j in range(4):
                    lik *= eps if y_erased[j] else float(c[j] == x[j])
                p[b] += lik
        if p[0] == p[1] == 0.0:
            return u
        u.append(1 if p[1] > p[0] else 0)
    return u


class TestScDecode:
    def test_exhaustive_bec_n4(self):
        count = 0
        for k in range(1, 5):
            for info in itertools.combinations(range(4), k):
                spec = PolarSpec(2, info)
                for payload in itertools.product([0, 1], repeat=k):
                    x = encode(spec, payload)
                    u_true = np.zeros(4, dtype=np.uint8)
                    u_true[list(info)] = payload
                    for er in itertools.product([0, 1], repeat=4):
                        llr = np.where(np.array(er) == 1, 0.0, np.where(x == 0, np.inf, -np.inf))
                        want = _sc_oracle(info, er, x)
                        got = sc_decode(spec, llr).payload
                        np.testing.assert_array_equal(scl_decode(spec, llr, 1).payload, got)
                        defined = [i for i in info if i < len(want)]
                        np.testing.assert_array_equal(got[:len(defined)],
                                                      np.array(want)[defined])
                        if len(want) < 4:
                            assert not np.array_equal(want, u_true[:len(want)])
                        count += 1
        assert count == 16 * 80

    def test_noiseless(self):
        spec = construct(BEC(0.9), 9, 50, crc_len=6)
        rng = np.random.default_rng(4)
        for _ in range(20):
            p = rng.integers(0, 2, 44).astype(np.uint8)
            llr = np.where(encode(spec, p) == 0, np.inf, -np.inf)
            d = sc_decode(spec, llr)
            np.testing.assert_array_equal(d.payload, p)
            assert d.crc_ok
            for L in (1, 2, 8, 32):
                np.testing.assert_array_equal(scl_decode(spec, llr, L).payload, p)

    def test_all_erased(self):
        spec = construct(BEC(0.9), 6, 10)
        assert not sc_decode(spec, np.zeros(64)).payload.any()

    def test_llr_length(self):
        with pytest.raises(ValueError):
            sc_decode(construct(BEC(0.9), 4, 3), np.zeros(15))

    def test_saturation(self):
        np.testing.assert_array_equal(saturate_llrs([np.inf, -np.inf, 1.0]), [1e12, -1e12, 1.0])


class TestListDecode:
    def test_list_one_equals_sc(self):
        spec = construct(BIAWGN(1.0), 6, 24)
        ch = BIAWGN(0.9)
        gen = np.random.default_rng(5)
        diff = 0
        for t in range(10 ** 4):
            p = gen.integers(0, 2, 24).astype(np.uint8)
            y = transmit(ch, encode(spec, p), RngStream(5, t))
            diff += not np.array_equal(sc_decode(spec, y).payload, scl_decode(spec, y, 1).payload)
        assert diff == 0

    def test_crc_selects_path(self):
        spec = construct(BEC(0.5), 7, 40, crc_len=6)
        ch = BEC(0.5)
        errs = {1: 0, 8: 0}
        for t in range(300):
            gen = RngStream(6, t).generator()
            p = gen.integers(0, 2, 34).astype(np.uint8)
            y = transmit(ch, encode(spec, p), gen)
            for L in errs:
                errs[L] += not np.array_equal(scl_decode(spec, y, L).payload, p)
        assert errs[8] < errs[1]

    def test_rejects_list_size(self):
        with pytest.raises(ValueError):
            scl_decode(construct(BEC(0.5), 3, 2), np.zeros(8), 0)


class TestBackends:
    @pytest.mark.skipif(BACKEND != "numba", reason="numba unavailable")
    @pytest.mark.parametrize("minsum", [False, True])
    def test_agreement(self, minsum):
        nb, npk = get_kernels("numba"), get_kernels("numpy")
        spec = construct(BIAWGN(1.5), 7, 40, crc_len=6)
        for t in range(30):
            gen = RngStream(7, t).generator()
            p = gen.integers(0, 2, 34).astype(np.uint8)
            y = saturate_llrs(transmit(BIAWGN(1.5), encode(spec, p), gen))
            u1 = gen.integers(0, 2, 128).astype(np.uint8)
            np.testing.assert_array_equal(nb.polar_transform(u1), npk.polar_transform(u1))
            np.testing.assert_array_equal(nb.sc_decode(y, spec.frozen_mask, 7, minsum),
                                          npk.sc_decode(y, spec.frozen_mask, 7, minsum))
            a = nb.scl_decode(y, spec.frozen_mask, 7, 8, minsum)
            b = npk.scl_decode(y, spec.frozen_mask, 7, 8, minsum)
            np.testing.assert_array_equal(a[2], b[2])
            np.testing.assert_array_equal(a[0][a[2]], b[0][b[2]])
            np.testing.assert_allclose(a[1][a[2]], b[1][b[2]], rtol=1e-12, atol=1e-9)


class TestImplicitRepetition:
    def test_m0(self):
        assert theorem7_m0(1.0) == 2.0
        assert theorem7_m0(36.0) == pytest.approx(math.log2(5184))
        assert guaranteed_repetition_exponent(36.0, 12) is None
        assert guaranteed_repetition_exponent(36.0, 14) == 2

    def test_design_code_factor(self):
        assert implicit_repetition_factor(fig3_spec()) == 4

    def test_full_repetition(self):
        assert implicit_repetition_factor(PolarSpec(6, (63,))) == 64

    def test_structure(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            m = int(rng.integers(4, 11))
            spec = construct(BEC(rng.uniform(0.9, 0.999)), m, int(rng.integers(1, 12)))
            f = implicit_repetition_factor(spec)
            p = rng.integers(0, 2, spec.k_payload).astype(np.uint8)
            np.testing.assert_array_equal(encode(spec, p), np.tile(encode(inner_spec(spec), p), f))

    def test_fast_paths_bit_exact(self):
        spec = construct(BEC(0.98), 10, 20, crc_len=6)
        f = implicit_repetition_factor(spec)
        assert f >= 4
        ch = BIAWGN(4.0)
        for t in range(1000):
            gen = RngStream(9, t).generator()
            p = gen.integers(0, 2, 14).astype(np.uint8)
            x = encode(spec, p)
            np.testing.assert_array_equal(fast_encode(spec, p), x)
            y = transmit(ch, x, gen)
            a, b = fast_decode(spec, y, 4), scl_decode(spec, y, 4)
            np.testing.assert_array_equal(a.payload, b.payload)
            assert a.crc_ok == b.crc_ok

    def test_encode_work(self):
        spec = fig3_spec()
        f = implicit_repetition_factor(spec)
        assert encode_work(spec, False) / encode_work(spec, True) >= f / 2

    def test_factor_one(self):
        spec = construct(BEC(0.3), 5, 20)
        assert implicit_repetition_factor(spec) == 1
        p = np.ones(20, dtype=np.uint8)
        np.testing.assert_array_equal(fast_encode(spec, p), encode(spec, p))
        assert encode_work(spec, True) == encode_work(spec, False)


class TestAudit:
    @pytest.mark.parametrize("eps,m", [(0.999, 16), (0.99, 14)])
    def test_no_counterexamples(self, eps, m):
        r = theorem7_bhattacharyya_audit(eps, m)
        assert r.counterexamples == ()
        if not r.vacuous:
            assert r.min_leading_plus >= r.required_leading_plus

    def test_nonvacuous_case(self):
        r = theorem7_bhattacharyya_audit(0.999, 16)
        assert r.required_leading_plus == 2 and r.n_good > 0

    def test_vacuous(self):
        r = theorem7_bhattacharyya_audit(0.5, 4)
        assert r.vacuous and r.counterexamples == ()


class TestSpecJson:
    def test_round_trip(self):
        spec = fig3_spec()
        back = PolarSpec.from_json(spec.to_json())
        assert back == spec and back.digest() == spec.digest()
        assert back.construction == json.loads(spec.to_json())["construction"]

    def test_version(self):
        doc = json.loads(fig3_spec().to_json())
        doc["schema_version"] = 99
        with pytest.raises(ValueError):
            PolarSpec.from_json(json.dumps(doc))

    def test_invariants(self):
        with pytest.raises(ValueError):
            PolarSpec(3, (5, 2))
        with pytest.raises(ValueError):
            PolarSpec(3, (1, 8))
        with pytest.raises(ValueError):
            PolarSpec(3, (1, 2), crc_len=1, crc_poly=0b11, crc_set=(4,))
