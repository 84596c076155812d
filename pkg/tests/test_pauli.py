from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probespec.errors import ParseError, ResourceLimitError, StructureError
from probespec.pauli import (
    PauliString,
    PauliSum,
    apply_string,
    canonicalize,
    check_cap,
    is_hermitian,
    multiply,
    parse_pauli_term,
    single,
    to_dense,
)

MATS = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
}


def kron_oracle(term: PauliString) -> np.ndarray:
    return term.coefficient * reduce(np.kron, [MATS[ch] for ch in term.letters])


letters = st.text(alphabet="IXYZ", min_size=1, max_size=5)
coefs = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(letters, coefs)
def test_dense_matches_kron(word, coef):
    term = PauliString(coef, word)
    np.testing.assert_allclose(to_dense(term), kron_oracle(term), atol=1e-12)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.text(alphabet="IXYZ", min_size=n, max_size=n), st.text(alphabet="IXYZ", min_size=n, max_size=n))))
def test_multiply_matches_matrix_product(pair):
    p, q = PauliString(1.0, pair[0]), PauliString(1.0, pair[1])
    np.testing.assert_allclose(to_dense(multiply(p, q)), to_dense(p) @ to_dense(q), atol=1e-12)


def test_single_qubit_table():
    assert multiply(PauliString(1, "X"), PauliString(1, "Y")) == PauliString(1j, "Z")
    assert multiply(PauliString(1, "Y"), PauliString(1, "Z")) == PauliString(1j, "X")
    assert multiply(PauliString(1, "Z"), PauliString(1, "X")) == PauliString(1j, "Y")
    assert multiply(PauliString(1, "Y"), PauliString(1, "X")) == PauliString(-1j, "Z")
    for ch in "IXYZ":
        assert multiply(PauliString(1, ch), PauliString(1, ch)) == PauliString(1, "I")


@given(letters, st.data())
def test_apply_string_matches_dense(word, data):
    n = len(word)
    re = data.draw(st.lists(st.floats(-1, 1), min_size=1 << n, max_size=1 << n))
    vec = np.array(re, dtype=complex)
    term = PauliString(0.7 - 0.2j, word)
    np.testing.assert_allclose(apply_string(term, vec), to_dense(term) @ vec, atol=1e-12)


def test_leftmost_letter_acts_on_highest_qubit():
    # X on the highest of two qubits maps |00> (index 0) to |10> (index 2)
    vec = np.zeros(4)
    vec[0] = 1
    assert np.argmax(np.abs(apply_string(PauliString(1, "XI"), vec))) == 2
    assert single("X", 1, 2) == PauliString(1, "XI")


@given(st.lists(st.tuples(coefs, st.text(alphabet="IXYZ", min_size=3, max_size=3)), min_size=1, max_size=8))
def test_canonicalize_preserves_operator(items):
    psum = PauliSum.from_terms([PauliString(c, w) for c, w in items])
    canon = canonicalize(psum)
    np.testing.assert_allclose(to_dense(canon), to_dense(psum), atol=1e-9)
    words = [t.letters for t in canon.terms]
    assert words == sorted(set(words))
    assert canonicalize(canon) == canon


def test_canonicalize_drops_cancelled_terms():
    psum = PauliSum.parse("1.0 XZ\n-1.0 XZ\n0.5 II")
    assert canonicalize(psum).terms == (PauliString(0.5, "II"),)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-5, 5), st.text(alphabet="IXYZ", min_size=2, max_size=2)), min_size=1, max_size=6))
def test_real_coefficients_are_hermitian(items):
    psum = PauliSum.from_terms([PauliString(c, w) for c, w in items])
    assert is_hermitian(psum)
    mat = to_dense(psum)
    assert np.max(np.abs(mat - mat.conj().T)) <= 1e-12


def test_imaginary_coefficient_is_not_hermitian():
    assert not is_hermitian(PauliSum.parse("0.5+0.25i XY"))
    # ... unless it cancels
    assert is_hermitian(PauliSum.parse("0.5+0.25i XY; 0.5-0.25i XY"))


@pytest.mark.parametrize("text,coef,word", [
    ("1.0 IIIIX", 1.0, "IIIIX"),
    ("-2e-3 ZZ", -2e-3, "ZZ"),
    ("0.5-0.5i XY", 0.5 - 0.5j, "XY"),
    (".25+1e-2i Z", 0.25 + 0.01j, "Z"),
    ("3i Y", 3j, "Y"),
])
def test_parse_term(text, coef, word):
    term = parse_pauli_term(text)
    assert term.letters == word
    assert term.coefficient == pytest.approx(coef)


@pytest.mark.parametrize("text", ["1.0 IXA", "abc XX", "1.0", "1.0 XX YY", "1..0 X", "1+i X"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse_pauli_term(text)


def test_text_and_json_round_trip():
    psum = PauliSum.parse("0.25 XIZ\n-1.5 YYI\n0.1+0.2i ZZZ")
    assert PauliSum.parse(str(psum)) == psum
    assert PauliSum.from_json(psum.to_json()) == psum


def test_width_mismatch():
    with pytest.raises(StructureError):
        PauliSum.parse("1 XX\n1 XXX")
    with pytest.raises(StructureError):
        PauliSum.parse("1 XX") + PauliSum.parse("1 XXX")


def test_dense_cap(monkeypatch):
    monkeypatch.setenv("PROBESPEC_DENSE_CAP", "3")
    check_cap(3)
    with pytest.raises(ResourceLimitError):
        to_dense(PauliString(1, "XXXX"))
    monkeypatch.setenv("PROBESPEC_DENSE_CAP", "many")
    with pytest.raises(ParseError):
        check_cap(1)


def test_one_norm_bounds_operator_norm(rng):
    from probespec.fixtures import random_pauli_sum

    psum = random_pauli_sum(3, 10, rng)
    assert np.linalg.norm(to_dense(psum), 2) <= psum.one_norm() + 1e-12
