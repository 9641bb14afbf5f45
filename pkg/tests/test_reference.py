import numpy as np

from trpgates import reference, targets


def test_tables_complete():
    assert sorted(reference.TABLES) == [1, 2, 3, 4, 5, 6, 7]
    rows = {n: sum(len(b.values) for b in t.blocks) for n, t in reference.TABLES.items()}
    assert rows == {1: 6, 2: 6, 3: 6, 4: 6, 5: 6, 6: 14, 7: 10}


def test_published_centres_are_minima():
    for table in reference.TABLES.values():
        for block in table.blocks:
            assert len(block.values) == len(block.published)
            assert int(np.argmin(block.published)) == len(block.published) // 2


def test_centre_rows_match_best_points():
    for table in reference.TABLES.values():
        best = reference.BEST_TR_P[table.target]
        block = table.blocks[0]
        centre = block.values[len(block.values) // 2]
        assert getattr(table.center, block.axis) == centre
        assert block.published[len(block.values) // 2] == best


def test_printed_unitary_close_to_target():
    u = reference.V_CP_UA
    assert np.max(np.abs(u - targets.target("V_CP"))) < 0.02
    assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-3


def test_block_points():
    t = reference.TABLES[6]
    pts = reference.block_points(t, t.blocks[1])
    assert [p.d4 for p in pts] == list(t.blocks[1].values)
    assert all(p.d1 == 11.702 and p.tau0 == 120.0 for p in pts)
