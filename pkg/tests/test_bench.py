import io

import pytest

from risge.bench import FIELDS, BenchRecord, read_csv, sweep, write_csv
from risge.generate import GeneratorSpec, extract_pattern, generate_target
from risge.graph import write_graph


@pytest.fixture
def instance_dir(tmp_path):
    t = generate_target(GeneratorSpec(nodes=150, arc_density=0.03, alphabet=3, seed=4))
    write_graph(t, tmp_path / "target.graph")
    paths = []
    for i in range(3):
        p = extract_pattern(t, 5, "sparse", seed=i, name="p%d" % i)
        paths.append(str(tmp_path / ("p%d.graph" % i)))
        write_graph(p, paths[-1])
    return tmp_path, paths


def test_sweep_emits_one_row_per_configuration(instance_dir):
    root, paths = instance_dir
    rows = list(sweep(paths, str(root / "target.graph"), ["ri-ds"], workers=[1, 4]))
    assert len(rows) == 6
    assert [(r.pattern, r.workers) for r in rows] == [
        ("p%d.graph" % i, w) for i in range(3) for w in (1, 4)]
    for a, b in zip(rows[::2], rows[1::2]):
        assert a.match_count == b.match_count >= 1
        assert not a.error and not a.timed_out
    assert all(r.steals_ok == 0 for r in rows[::2])


def test_csv_round_trip(instance_dir):
    root, paths = instance_dir
    rows = list(sweep(paths[:1], str(root / "target.graph"), ["ri", "ri-ds-si-fc"],
                      workers=[1, 2], group_sizes=[1, 4], repetitions=2))
    assert len(rows) == 16
    buf = io.StringIO()
    write_csv(rows, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == ",".join(FIELDS)
    assert read_csv(io.StringIO(text)) == rows


def test_timed_out_row_is_flagged(tmp_path):
    t = generate_target(GeneratorSpec(nodes=300, arc_density=0.2, alphabet=1, seed=1))
    p = extract_pattern(t, 12, "dense", seed=1)
    write_graph(t, tmp_path / "t.graph")
    write_graph(p, tmp_path / "p.graph")
    (row,) = sweep([str(tmp_path / "p.graph")], str(tmp_path / "t.graph"), ["ri"],
                   workers=[2], time_limit=0.2)
    assert row.timed_out and not row.error
    buf = io.StringIO()
    write_csv([row], buf)
    assert read_csv(io.StringIO(buf.getvalue()))[0].timed_out is True


def test_bad_files_become_error_rows(tmp_path, instance_dir):
    root, paths = instance_dir
    bad = tmp_path / "bad.graph"
    bad.write_text("#x\n2\nA\n")
    rows = list(sweep([str(bad), paths[0]], str(root / "target.graph"), ["ri"]))
    assert rows[0].error.startswith("pattern:") and not rows[1].error
    rows = list(sweep(paths[:1], str(tmp_path / "missing.graph"), ["ri"]))
    assert rows[0].error.startswith("target:")


def test_read_rejects_foreign_header():
    with pytest.raises(ValueError):
        read_csv(io.StringIO("a,b,c\n1,2,3\n"))


def test_record_defaults():
    r = BenchRecord("p", "t", "ri", 1, 4)
    assert r.schema_version == 1 and r.error == "" and r.match_count == 0
