import json

import pytest

from ris_lab.control.store import CodebookStore
from ris_lab.core import Codebook, Grid

GRID = Grid(2, 2)


def cb(*codes):
    return Codebook.from_codes(GRID, codes)


def test_save_then_list():
    store = CodebookStore()
    store.put("LocA", cb(0, 1, 2, 3))
    assert store.location_ids() == ["LocA"]
    assert "LocA" in store and "LocB" not in store


def test_persistence_across_restart(tmp_path):
    path = tmp_path / "store.json"
    store = CodebookStore.load(path)
    store.put("LocC", cb(3, 3, 3, 3))
    store.put("LocA", cb(0, 1, 2, 3))
    store.put("LocB", cb(1, 1, 0, 0))
    store.delete("LocB")
    again = CodebookStore.load(path)
    assert again.location_ids() == ["LocA", "LocC"]
    assert again.get("LocA") == cb(0, 1, 2, 3)
    assert not list(tmp_path.glob("*.tmp"))


def test_file_format(tmp_path):
    path = tmp_path / "s.json"
    store = CodebookStore(path)
    store.put("LocA", cb(0, 1, 2, 3))
    doc = json.loads(path.read_text())
    assert doc == {"version": 1, "entries": {"LocA": "RISCB v1 rows=2 cols=2\n01\n23\n"}}
    assert CodebookStore.from_json(store.to_json()).get("LocA") == cb(0, 1, 2, 3)


@pytest.mark.parametrize("loc", ["", "x" * 65, 7, None])
def test_location_id_validation(loc):
    with pytest.raises(ValueError):
        CodebookStore().put(loc, cb(0, 0, 0, 0))


def test_sixty_four_char_id_is_fine():
    store = CodebookStore()
    store.put("x" * 64, cb(0, 0, 0, 0))
    assert len(store) == 1


@pytest.mark.parametrize("text", ['{"version":2,"entries":{}}', '{"version":1}', '[]',
                                  '{"version":1,"entries":{"A":"junk"}}'])
def test_bad_documents(text):
    with pytest.raises(ValueError):
        CodebookStore.from_json(text)


def test_missing_file_loads_empty(tmp_path):
    assert len(CodebookStore.load(tmp_path / "none.json")) == 0
