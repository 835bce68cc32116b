import math
import random

import pytest

from prefetchsim.features import StateVector
from prefetchsim.qvstore import QVStore, storage_report

GAMMA = 0.556


def state(*values):
    return StateVector(values=tuple(values), specs=())


def identity_store(num_features=1, num_actions=16, planes=1, **kw):
    return QVStore(num_features=num_features, num_actions=num_actions, gamma=GAMMA,
                   num_planes=planes, plane_shifts=(0,) * planes,
                   hash_kind="identity", **kw)


def test_fresh_store_returns_q_init():
    store = QVStore(num_features=2, num_actions=16, gamma=GAMMA)
    expected = 1.0 / (1.0 - GAMMA)
    assert expected == pytest.approx(2.2522522522522523)
    for s in (state(0, 0), state(123456789, 0xDEADBEEF)):
        for a in range(16):
            assert store.q_value(s, a) == expected


def test_degenerate_single_table_write_then_read():
    store = identity_store()
    s = state(3)
    store.update(s, 2, 5.0 - store.q_init)
    assert store.q_value(s, 2) == pytest.approx(5.0)


def test_max_across_vaults():
    store = identity_store(num_features=2)
    store.vaults[0].planes[0].table[3][2] = 4.0
    store.vaults[1].planes[0].table[7][2] = 7.0
    assert store.q_value(state(3, 7), 2) == 7.0


def test_update_splits_evenly_across_planes():
    store = QVStore(num_features=1, num_actions=4, gamma=GAMMA, num_planes=3,
                    plane_shifts=(0, 0, 0), hash_kind="identity")
    s = state(5)
    before = [p.table[5][1] for p in store.vaults[0].planes]
    store.update(s, 1, 0.30)
    after = [p.table[5][1] for p in store.vaults[0].planes]
    for b, a in zip(before, after):
        assert a - b == pytest.approx(0.10)
    assert store.q_value(s, 1) == pytest.approx(store.q_init + 0.30)


def test_zero_update_is_identity():
    store = QVStore(num_features=2, num_actions=16, gamma=GAMMA)
    s = state(11, 22)
    before = store.q_value(s, 3)
    store.update(s, 3, 0.0)
    assert store.q_value(s, 3) == before


def test_disjoint_states_isolated():
    store = identity_store()
    a, b = state(3), state(9)
    q_b_before = store.q_value(b, 0)
    store.update(a, 0, 1.5)
    assert store.q_value(b, 0) == q_b_before


def test_argmax_fresh_store_ties_to_first():
    store = QVStore(num_features=2, num_actions=16, gamma=GAMMA)
    idx, q = store.argmax_action(state(1, 2))
    assert idx == 0
    assert q == store.q_init


def test_argmax_single_boosted_action():
    store = QVStore(num_features=2, num_actions=16, gamma=GAMMA)
    s = state(10, 20)
    store.update(s, 7, 0.5)
    idx, q = store.argmax_action(s)
    assert idx == 7
    assert q == pytest.approx(store.q_init + 0.5)


def test_argmax_matches_exhaustive_scan_on_fuzzed_stores():
    rng = random.Random(17)
    store = QVStore(num_features=2, num_actions=16, gamma=GAMMA)
    for trial in range(1000):
        s = state(rng.randrange(1 << 64), rng.randrange(1 << 64))
        if trial % 3:
            store.update(s, rng.randrange(16), rng.uniform(-2, 2))
        got_idx, got_q = store.argmax_action(s)
        qs = [store.q_value(s, a) for a in range(16)]
        best = max(qs)
        assert got_q == best
        assert got_idx == qs.index(best)  # first maximizer wins ties


def test_vault_q_rises_by_exactly_delta():
    rng = random.Random(23)
    store = QVStore(num_features=2, num_actions=16, gamma=GAMMA)
    for _ in range(200):
        s = state(rng.randrange(1 << 64), rng.randrange(1 << 64))
        a = rng.randrange(16)
        delta = rng.uniform(-3, 3)
        before = [v.q_value(fv, a) for v, fv in zip(store.vaults, s.values)]
        store.update(s, a, delta)
        after = [v.q_value(fv, a) for v, fv in zip(store.vaults, s.values)]
        for b, af in zip(before, after):
            assert af - b == pytest.approx(delta, abs=1e-9)


def test_max_vault_update_mode_touches_only_max_vault():
    store = identity_store(num_features=2, update_mode="max_vault")
    s = state(3, 7)
    store.vaults[0].planes[0].table[3][5] = 9.0  # vault 0 is now the max for action 5
    store.update(s, 5, 1.0)
    assert store.vaults[0].q_value(3, 5) == pytest.approx(10.0)
    assert store.vaults[1].q_value(7, 5) == pytest.approx(store.q_init)


def test_hash_stability_and_bounds():
    store = QVStore(num_features=1, num_actions=16, gamma=GAMMA)
    plane = store.vaults[0].planes[1]
    rng = random.Random(4)
    for _ in range(500):
        v = rng.randrange(1 << 64)
        idx = plane.index(v)
        assert 0 <= idx < 128
        assert plane.index(v) == idx


def test_monolithic_equivalence_under_interleaving():
    # 1 plane, identity hash, feature domain <= 128: the store must be
    # bit-equivalent to a plain table under any op interleaving
    rng = random.Random(31)
    store = identity_store(num_features=2, num_actions=8)
    table = [[[store.q_init] * 8 for _ in range(128)] for _ in range(2)]

    def oracle_q(s, a):
        return max(table[i][s.values[i]][a] for i in range(2))

    for _ in range(10000):
        s = state(rng.randrange(128), rng.randrange(128))
        op = rng.randrange(3)
        if op == 0:
            a = rng.randrange(8)
            assert store.q_value(s, a) == oracle_q(s, a)
        elif op == 1:
            a = rng.randrange(8)
            d = rng.uniform(-1, 1)
            store.update(s, a, d)
            for i in range(2):
                table[i][s.values[i]][a] += d
        else:
            got_idx, got_q = store.argmax_action(s)
            qs = [oracle_q(s, a) for a in range(8)]
            assert got_q == max(qs)
            assert got_idx == qs.index(max(qs))


def test_config_validation():
    with pytest.raises(ValueError):
        QVStore(num_features=1, num_actions=4, gamma=1.0)
    with pytest.raises(ValueError):
        QVStore(num_features=1, num_actions=4, gamma=0.5, feature_bins=100)
    with pytest.raises(ValueError):
        QVStore(num_features=1, num_actions=4, gamma=0.5, num_planes=2, plane_shifts=(0,))
    with pytest.raises(ValueError):
        QVStore(num_features=1, num_actions=4, gamma=0.5, hash_kind="bogus")
    store = QVStore(num_features=2, num_actions=4, gamma=0.5)
    with pytest.raises(ValueError):
        store.q_value(state(1), 0)  # dimension mismatch


def test_storage_report_default_budget():
    report = storage_report()
    assert report.qvstore_bits == 2 * 3 * 128 * 16 * 16
    assert report.qvstore_bytes == 24 * 1024
    assert report.eq_bits == 256 * (21 + 5 + 5 + 1 + 16)
    assert report.eq_bytes == 1536
    assert report.eq_kib == 1.5
    assert report.total_bytes == 26112
    assert report.total_kib == 25.5


def test_storage_report_scales_with_config():
    report = storage_report(num_features=3, num_planes=2, feature_bins=64,
                            num_actions=8, eq_entries=128)
    assert report.qvstore_bits == 3 * 2 * 64 * 8 * 16
    assert report.eq_bits == 128 * 48


def test_snapshot_rows_cover_every_cell():
    store = QVStore(num_features=1, num_actions=4, gamma=GAMMA, num_planes=2,
                    plane_shifts=(0, 1), feature_bins=8)
    rows = list(store.snapshot_rows())
    assert len(rows) == 1 * 2 * 8 * 4
    assert all(q == store.q_init / 2 for *_, q in rows)
