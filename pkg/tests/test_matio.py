import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from schattenlab.errors import ParseError
from schattenlab.matio import dumps_binary, dumps_text, load_matrix, loads_binary, loads_text, save_matrix

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
complex_matrices = hnp.arrays(
    np.complex128,
    hnp.array_shapes(min_dims=2, max_dims=2, min_side=0, max_side=5),
    elements=st.builds(complex, finite, finite),
)


@settings(max_examples=60)
@given(complex_matrices)
def test_text_round_trip_is_exact(M):
    back = loads_text(dumps_text(M))
    assert back.shape == M.shape
    assert np.array_equal(back.view(np.float64), M.view(np.float64))


@settings(max_examples=60)
@given(complex_matrices)
def test_binary_round_trip_is_exact(M):
    data = dumps_binary(M)
    assert len(data) == 12 + 16 * M.size
    back = loads_binary(data)
    assert np.array_equal(back.view(np.float64), M.view(np.float64))


def test_text_format_layout():
    text = dumps_text(np.array([[1 + 2j, 0.5]]))
    assert text == "1 2\n1.0,2.0 0.5,0.0\n"


def test_text_comments_and_blank_lines():
    M = loads_text("# a matrix\n\n2 1\n1,0  # first\n0,-1\n")
    assert np.array_equal(M, [[1], [-1j]])


@pytest.mark.parametrize(
    "text, line",
    [
        ("2 2\n1,0 0,0\n0,0\n", 3),
        ("2\n", 1),
        ("1 1\n1;0\n", 2),
        ("1 1\n1,0\n2,0\n", 3),
        ("a b\n", 1),
    ],
)
def test_text_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as err:
        loads_text(text)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


def test_text_missing_rows():
    with pytest.raises(ParseError):
        loads_text("3 1\n1,0\n")
    with pytest.raises(ParseError):
        loads_text("# only comments\n")


def test_binary_errors():
    with pytest.raises(ParseError):
        loads_binary(b"XXXX" + bytes(8))
    good = dumps_binary(np.eye(2))
    with pytest.raises(ParseError):
        loads_binary(good[:-1])


def test_files_sniff_format(tmp_path):
    M = np.array([[1.5, -2j], [3, 4 + 1e-300j]])
    for name in ("m.txt", "m.bin"):
        save_matrix(tmp_path / name, M)
        assert np.array_equal(load_matrix(tmp_path / name), M)
    assert (tmp_path / "m.bin").read_bytes()[:4] == b"SLM1"
