import io

import numpy as np
import pytest

from qrpivot.genmat import random_gaussian
from qrpivot.mmio import read_matrix, write_matrix


def roundtrip(a):
    buf = io.StringIO()
    write_matrix(a, buf)
    buf.seek(0)
    return read_matrix(buf)


def test_roundtrip_real_bit_exact():
    a = random_gaussian(7, 4, seed=1)
    b = roundtrip(a)
    assert b.dtype == np.float64
    assert np.array_equal(a, b)


def test_roundtrip_complex_bit_exact():
    a = random_gaussian(5, 6, field="complex", seed=2)
    b = roundtrip(a)
    assert b.dtype == np.complex128
    assert np.array_equal(a, b)


def test_roundtrip_awkward_values():
    a = np.array([[1e-308, -0.0], [1e308, np.pi]])
    b = roundtrip(a)
    assert np.array_equal(a, b)
    assert np.signbit(b[0, 1])


def test_single_precision_upcast_roundtrip():
    a = random_gaussian(4, 3, seed=3).astype(np.float32)
    b = roundtrip(a)
    assert b.dtype == np.float64
    assert np.array_equal(a.astype(np.float64), b)


def test_result_is_fortran_order():
    assert roundtrip(random_gaussian(3, 3, seed=4)).flags.f_contiguous


def test_golden_text():
    buf = io.StringIO()
    write_matrix(np.array([[1.0, 3.0], [2.0, 0.25]]), buf)
    assert buf.getvalue() == (
        "%%MatrixMarket matrix array real general\n"
        "2 2\n"
        "1\n2\n3\n0.25\n"
    )


def test_golden_complex_text():
    buf = io.StringIO()
    write_matrix(np.array([[1 + 2j]]), buf)
    assert buf.getvalue() == (
        "%%MatrixMarket matrix array complex general\n"
        "1 1\n1 2\n"
    )


def test_path_interface(tmp_path):
    p = tmp_path / "a.mtx"
    a = random_gaussian(3, 5, seed=5)
    write_matrix(a, p)
    assert np.array_equal(read_matrix(p), a)
    assert p.read_text().startswith("%%MatrixMarket")


def test_comments_and_blank_lines_skipped():
    text = (
        "%%MatrixMarket matrix array real general\n"
        "% a comment\n"
        "\n"
        "2 1\n"
        "% another\n"
        "1.5\n"
        "\n"
        "2.5\n"
    )
    a = read_matrix(io.StringIO(text))
    assert np.array_equal(a, np.array([[1.5], [2.5]]))


def test_column_major_layout():
    text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"
    a = read_matrix(io.StringIO(text))
    assert np.array_equal(a, np.array([[1.0, 3.0], [2.0, 4.0]]))


def test_header_case_insensitive():
    text = "%%matrixmarket MATRIX Array Real General\n1 1\n7\n"
    assert read_matrix(io.StringIO(text))[0, 0] == 7.0


def test_write_rejects_bad_inputs():
    with pytest.raises(ValueError):
        write_matrix(np.zeros(3), io.StringIO())  # 1-D
    with pytest.raises(ValueError):
        write_matrix(np.array([[1]], dtype=np.int64), io.StringIO())
    with pytest.raises(ValueError):
        write_matrix(np.array([[np.nan]]), io.StringIO())
    with pytest.raises(ValueError):
        write_matrix(np.array([[np.inf]]), io.StringIO())


def reader_error(text):
    with pytest.raises(ValueError) as exc:
        read_matrix(io.StringIO(text))
    return str(exc.value)


def test_missing_header():
    assert reader_error("2 2\n1\n2\n3\n4\n").startswith("line 1:")


def test_malformed_header():
    assert reader_error("%%MatrixMarket matrix array real\n").startswith("line 1:")


def test_unsupported_variants_named():
    assert "coordinate" in reader_error(
        "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 7\n")
    assert "integer" in reader_error(
        "%%MatrixMarket matrix array integer general\n1 1\n7\n")
    assert "symmetric" in reader_error(
        "%%MatrixMarket matrix array real symmetric\n1 1\n7\n")
    assert "vector" in reader_error(
        "%%MatrixMarket vector array real general\n1 1\n7\n")


def test_missing_size_line():
    msg = reader_error("%%MatrixMarket matrix array real general\n% only comments\n")
    assert "size line" in msg


def test_bad_size_line_location():
    msg = reader_error("%%MatrixMarket matrix array real general\n2 2 7\n")
    assert msg.startswith("line 2:")


def test_non_integer_dimensions():
    msg = reader_error("%%MatrixMarket matrix array real general\nx y\n")
    assert msg.startswith("line 2:") and "non-integer" in msg


def test_nonpositive_dimensions():
    msg = reader_error("%%MatrixMarket matrix array real general\n0 2\n")
    assert "positive" in msg


def test_truncated_file_names_line():
    msg = reader_error("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n")
    assert "3 of 4 values" in msg


def test_extra_data_names_line():
    msg = reader_error(
        "%%MatrixMarket matrix array real general\n1 1\n1\n2\n")
    assert msg.startswith("line 4:") and "extra data" in msg


def test_unparseable_value_names_line():
    msg = reader_error(
        "%%MatrixMarket matrix array real general\n2 1\n1.5\nbogus\n")
    assert msg.startswith("line 4:") and "bogus" in msg


def test_wrong_arity_for_field():
    msg = reader_error(
        "%%MatrixMarket matrix array complex general\n1 1\n1.5\n")
    assert "expected 2 number(s)" in msg
    msg = reader_error(
        "%%MatrixMarket matrix array real general\n1 1\n1.5 2.5\n")
    assert "expected 1 number(s)" in msg


def test_non_finite_value_rejected():
    msg = reader_error(
        "%%MatrixMarket matrix array real general\n1 1\ninf\n")
    assert "non-finite" in msg
