import math

import numpy as np

from lassolab.io import dump_json, read_matrix, read_vector, write_matrix, write_vector


def test_matrix_and_vector_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 5)) * 10.0 ** rng.integers(-200, 200, (3, 5))
    v = rng.standard_normal(4)
    write_matrix(tmp_path / "A.csv", A)
    write_vector(tmp_path / "v.csv", v)
    np.testing.assert_array_equal(read_matrix(tmp_path / "A.csv"), A)
    np.testing.assert_array_equal(read_vector(tmp_path / "v.csv"), v)


def test_single_row_and_single_entry(tmp_path):
    write_matrix(tmp_path / "r.csv", np.array([[1.0, 2.0]]))
    write_vector(tmp_path / "s.csv", np.array([3.0]))
    assert read_matrix(tmp_path / "r.csv").shape == (1, 2)
    assert read_vector(tmp_path / "s.csv").shape == (1,)


def test_json_is_sorted_and_handles_non_finite():
    text = dump_json({"b": math.inf, "a": np.float64(1.5), "c": np.arange(2), "d": np.bool_(True)})
    assert text.index('"a"') < text.index('"b"')
    assert '"inf"' in text and "[\n    0,\n    1\n  ]" in text and "true" in text
