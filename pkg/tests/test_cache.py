import json

import pytest

from conftest import classset_for
from quathecke.cache import (
    CacheError,
    ClassSetCache,
    decode_classset,
    encode_classset,
    read_cache,
    verify_cache,
    write_cache,
)
from quathecke.hecke import build_context


@pytest.mark.parametrize("p", [2, 11, 13, 17])
def test_classset_round_trip(p):
    cs = classset_for(p)
    doc = json.loads(json.dumps(encode_classset(cs)))
    assert decode_classset(doc) == cs


def test_splittings_are_stored_and_reused(tmp_path):
    cs = classset_for(11)
    store = ClassSetCache(tmp_path, 11)
    assert store.load() is None
    store.store(cs)
    ctx = build_context(cs, 3, 1, store=store)
    again = ClassSetCache(tmp_path, 11)
    cs2 = again.load()
    assert again.hit and cs2 == cs
    for ell, sp in ctx.splittings.items():
        assert again.splitting(ell, sp.n, sp.prec) == sp
    assert build_context(cs2, 3, 1, store=again).splittings == ctx.splittings
    assert verify_cache(store.path) == []


def test_tampered_splitting_is_recomputed(tmp_path):
    cs = classset_for(11)
    store = ClassSetCache(tmp_path, 11)
    store.store(cs)
    ctx = build_context(cs, 2, 1, store=store)
    payload = read_cache(store.path)
    key = next(iter(payload["splittings"]))
    payload["splittings"][key]["A"][0] += 1
    write_cache(store.path, payload)  # checksum is valid, contents are wrong
    assert verify_cache(store.path)
    reloaded = ClassSetCache(tmp_path, 11)
    reloaded.load()
    assert build_context(cs, 2, 1, store=reloaded).splittings == ctx.splittings


def test_truncated_file_fails_cleanly(tmp_path):
    store = ClassSetCache(tmp_path, 11)
    store.store(classset_for(11))
    text = store.path.read_text()
    store.path.write_text(text[: len(text) // 2])
    with pytest.raises(CacheError):
        read_cache(store.path)
    with pytest.raises(CacheError):
        ClassSetCache(tmp_path, 11).load()


def test_checksum_mismatch(tmp_path):
    store = ClassSetCache(tmp_path, 11)
    store.store(classset_for(11))
    doc = json.loads(store.path.read_text())
    doc["payload"]["classset"]["unit_orders"] = [6, 4]
    store.path.write_text(json.dumps(doc))
    with pytest.raises(CacheError, match="checksum"):
        read_cache(store.path)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_cache(tmp_path / "x.json", {"a": 1})
    write_cache(tmp_path / "x.json", {"a": 2})
    assert sorted(f.name for f in tmp_path.iterdir()) == ["x.json"]
    assert read_cache(tmp_path / "x.json") == {"a": 2}
