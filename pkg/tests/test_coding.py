"""Elias gamma coding and the hex program-line format."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from agentgauge.coding import (
    bits_to_hex,
    elias_gamma_decode,
    elias_gamma_encode,
    format_program_line,
    hex_to_bits,
    parse_program_line,
)
from agentgauge.errors import InvalidProgramError


@pytest.mark.parametrize("value,code", [
    (1, "1"),
    (2, "010"),
    (3, "011"),
    (4, "00100"),
    (5, "00101"),
    (8, "0001000"),
])
def test_gamma_known_codewords(value, code):
    assert elias_gamma_encode(value) == code
    assert elias_gamma_decode(code) == (value, len(code))


def test_gamma_rejects_nonpositive():
    with pytest.raises(ValueError):
        elias_gamma_encode(0)


@pytest.mark.parametrize("bits", ["", "0", "00", "0001"])
def test_gamma_decode_truncated(bits):
    with pytest.raises(InvalidProgramError):
        elias_gamma_decode(bits)


@given(st.integers(1, 10 ** 6))
def test_gamma_round_trip(value):
    code = elias_gamma_encode(value)
    decoded, consumed = elias_gamma_decode(code + "1010")  # trailing noise
    assert decoded == value
    assert consumed == len(code)


def test_gamma_is_prefix_free_small_exhaustive():
    codes = [elias_gamma_encode(v) for v in range(1, 200)]
    for i, a in enumerate(codes):
        for b in codes[i + 1 :]:
            assert not b.startswith(a) and not a.startswith(b)


def test_hex_round_trip():
    bits = "1000110001100"
    line = format_program_line(bits)
    assert line == "len=13 hex=8C60"
    assert parse_program_line(line) == bits


def test_hex_rejects_dirty_padding():
    with pytest.raises(ValueError):
        hex_to_bits("FF", 4)  # nonzero bits beyond the declared length


def test_empty_program_line():
    assert parse_program_line(format_program_line("1")) == "1"


@given(st.text(alphabet="01", min_size=1, max_size=40))
def test_hex_round_trip_random(bits):
    assert hex_to_bits(bits_to_hex(bits), len(bits)) == bits
