import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import COARSE
from transport_inverse.dataset import (
    Dataset,
    Sample,
    SolverConfig,
    build_dataset,
    detector_inputs,
    generate_grid_train_p1,
    generate_random_test,
    grid_kappas,
    inverse_problem,
    problem_id,
    random_kappas,
    read_dataset,
    write_dataset,
)
from transport_inverse.errors import ConfigurationError, ParseError, SchemaError


@pytest.fixture(scope="module")
def coarse_p1():
    return generate_grid_train_p1(COARSE)


def test_problem_aliases():
    assert problem_id("p1") == "homogeneous" and problem_id("heterogeneous") == "heterogeneous"
    with pytest.raises(ConfigurationError):
        problem_id("p3")


def test_grid_values():
    g1 = grid_kappas("p1")
    assert len(g1) == 17 and g1[0] == (0.1,) and g1[-1] == (0.9,)
    np.testing.assert_allclose(np.diff([k for (k,) in g1]), 0.05, atol=1e-12)
    g2 = grid_kappas("p2")
    assert len(g2) == 81 and len(set(g2)) == 81
    assert {k for k, _ in g2} == {round(0.1 * s, 12) for s in range(1, 10)}


def test_random_kappas_seeded():
    a, b = random_kappas("p2", 64, 2), random_kappas("p2", 64, 2)
    assert np.array(a).tobytes() == np.array(b).tobytes()
    assert a != random_kappas("p2", 64, 3)
    arr = np.array(a)
    assert arr.shape == (64, 2) and np.all((arr >= 0.1) & (arr < 0.9))
    with pytest.raises(ConfigurationError):
        random_kappas("p1", 0, 1)


def test_inverse_problem_setup():
    p = inverse_problem("p2", (0.3, 0.7), COARSE)
    assert p.material.breakpoints == (0.0, 0.5, 1.0)
    np.testing.assert_allclose(p.material.sigma_s, (0.7, 0.3))
    with pytest.raises(ConfigurationError):
        inverse_problem("p1", (0.3, 0.7), COARSE)
    with pytest.raises(ConfigurationError):
        inverse_problem("p1", (1.2,), COARSE)


def test_time_grid_must_hit_final_time():
    with pytest.raises(ConfigurationError):
        SolverConfig(h_t=0.07, t_f=3.0).n_t


def test_coarse_grid_dataset(coarse_p1):
    assert len(coarse_p1) == 17 and coarse_p1.columns() == ["d0_t3", "d1_t3", "kappa"]
    X = coarse_p1.X
    assert np.all((X > 0) & (X < 1))
    # More absorption, less transmission to the far boundary.
    assert np.all(np.diff(X[:, 1]) < 0)


def test_resolve_reproduces_stored_inputs(coarse_p1):
    for s in coarse_p1.samples[::4]:
        np.testing.assert_allclose(detector_inputs("p1", s.targets, COARSE), s.inputs,
                                   rtol=0, atol=1e-12)


def test_parallel_matches_serial():
    ks = random_kappas("p1", 3, 7)
    a = build_dataset("p1", "test", ks, seed=7, config=COARSE, jobs=1)
    b = build_dataset("p1", "test", ks, seed=7, config=COARSE, jobs=2)
    assert a == b


def test_heterogeneous_regions_distinguishable():
    a = detector_inputs("p2", (0.1, 0.9), COARSE)
    b = detector_inputs("p2", (0.9, 0.1), COARSE)
    assert len(a) == 4 and np.max(np.abs(np.subtract(a, b))) > 1e-3


def test_random_test_set_metadata(tmp_path):
    ds = generate_random_test("p2", 3, 5, COARSE)
    assert ds.seed == 5 and ds.role == "test" and ds.prng == "numpy-PCG64"
    write_dataset(ds, tmp_path / "a.csv")
    write_dataset(generate_random_test("p2", 3, 5, COARSE), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_round_trip(coarse_p1, tmp_path):
    write_dataset(coarse_p1, tmp_path / "d.csv")
    assert read_dataset(tmp_path / "d.csv") == coarse_p1


def test_round_trip_empty(tmp_path):
    ds = Dataset("p2", "test", [], seed=4, config=COARSE)
    write_dataset(ds, tmp_path / "e.csv")
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 2
    assert read_dataset(tmp_path / "e.csv") == ds


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite, finite, finite, finite), max_size=6),
       st.one_of(st.none(), st.integers(0, 2**63)))
def test_round_trip_arbitrary_values(rows, seed):
    import tempfile
    from pathlib import Path
    ds = Dataset("p2", "train", [Sample(r[:4], r[4:]) for r in rows], seed=seed)
    with tempfile.TemporaryDirectory() as d:
        write_dataset(ds, Path(d) / "x.csv")
        assert read_dataset(Path(d) / "x.csv") == ds


def _write(tmp_path, ds, edit):
    path = tmp_path / "f.csv"
    write_dataset(ds, path)
    lines = path.read_text().splitlines()
    edit(lines)
    path.write_text("\n".join(lines) + "\n")
    return path


def _small():
    return Dataset("p1", "train", [Sample((0.6, 0.2), (0.3,)), Sample((0.5, 0.1), (0.7,))])


def test_wrong_column_count_is_schema_error(tmp_path):
    def drop(lines):
        lines[3] = lines[3].rsplit(",", 1)[0]
    with pytest.raises(SchemaError, match="line 4"):
        read_dataset(_write(tmp_path, _small(), drop))


def test_wrong_header_is_schema_error(tmp_path):
    def rename(lines):
        lines[1] = "a,b,c"
    with pytest.raises(SchemaError):
        read_dataset(_write(tmp_path, _small(), rename))


@pytest.mark.parametrize("bad,line", [("0.5,abc,0.1", 3), ("0.5,nan,0.1", 3)])
def test_malformed_value_is_parse_error(tmp_path, bad, line):
    def corrupt(lines):
        lines[2] = bad
    with pytest.raises(ParseError) as exc:
        read_dataset(_write(tmp_path, _small(), corrupt))
    assert exc.value.line == line and str(exc.value).startswith(f"line {line}:")


def test_missing_metadata_is_parse_error(tmp_path):
    (tmp_path / "m.csv").write_text("d0_t3,d1_t3,kappa\n0.5,0.2,0.3\n")
    with pytest.raises(ParseError) as exc:
        read_dataset(tmp_path / "m.csv")
    assert exc.value.line == 1
    (tmp_path / "n.csv").write_text("")
    with pytest.raises(ParseError):
        read_dataset(tmp_path / "n.csv")


def test_sample_shape_checked():
    with pytest.raises(SchemaError):
        Dataset("p1", "train", [Sample((0.1, 0.2, 0.3), (0.4,))])
