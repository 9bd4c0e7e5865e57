import pytest

from lisvar.errors import SpecParseError
from lisvar.restrictions import (
    A0Element,
    A0InvElement,
    CirInfElement,
    EqualityAtom,
    IrhElement,
    LagElement,
    LinearCombo,
    RestrictionSpec,
    SignAtom,
)
from lisvar.specfile import format_spec, load_spec, parse_spec

FULL = """
# every record type
dims n=3 p=2
normalization diag_a0inv
eq a0inv i=1 j=1 value=0.5
eq a0 i=1 j=3
eq lag l=2 i=2 j=1 value=-0.25
eq cir i=1 j=2
eq irh h=4 i=1 j=2 value=0
eq a0inv_combo i=1 j=1 k=2 l=1 d=2
eq a0_combo i=2 j=2 k=3 l=2
eq irh_combo h=0 i=1 j=3 h2=2 k=2 l=3 d=0.5 value=0.1
sign i=1 j=1 h=0:4 dir=+
sign i=2 j=1 h=1 dir=-
"""


def test_parse_every_record():
    spec = parse_spec(FULL)
    assert (spec.n, spec.p, spec.normalization, spec.f) == (3, 2, "diag_a0inv", 8)
    targets = [a.target for a in spec.equalities]
    assert targets[0] == A0InvElement(1, 1) and spec.equalities[0].value == 0.5
    assert targets[1] == A0Element(1, 3)
    assert targets[2] == LagElement(2, 1, l=2) and spec.equalities[2].value == -0.25
    assert targets[3] == CirInfElement(1, 2)
    assert targets[4] == IrhElement(1, 2, h=4)
    assert targets[5] == LinearCombo.a0inv(1, 1, 2, 1, d=2)
    assert targets[6] == LinearCombo.a0(2, 2, 3, 2, d=1)
    assert targets[7] == LinearCombo.irh(0, 1, 3, 2, 2, 3, d=0.5)
    assert spec.signs == (SignAtom(1, 1, 0, 1, h_end=4), SignAtom(2, 1, 1, -1))


def test_round_trip():
    spec = parse_spec(FULL)
    assert parse_spec(format_spec(spec)) == spec


def test_round_trip_preserves_float_values():
    spec = RestrictionSpec(2, 1, (EqualityAtom(A0InvElement(1, 1), 0.1 + 0.2),))
    assert parse_spec(format_spec(spec)).equalities[0].value == 0.1 + 0.2


def test_load_from_file(tmp_path):
    path = tmp_path / "r.spec"
    path.write_text("dims n=2 p=1\neq a0inv i=1 j=1 value=0.5\n")
    assert load_spec(path).f == 1


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("eq a0 i=1 j=1\n", None, "dims"),
        ("dims n=2 p=1\nfoo i=1\n", 2, "unknown record"),
        ("dims n=2 p=1\neq a0 i=1\n", 2, "j"),
        ("dims n=2 p=1\neq a0 i=3 j=1\n", 2, "outside"),
        ("dims n=2 p=1\neq a0 i=1 j=1 value=abc\n", 2, "value"),
        ("dims n=2 p=1\nsign i=1 j=1 h=0 dir=*\n", 2, "dir"),
        ("dims n=2 p=1\neq bogus i=1 j=1\n", 2, "bogus"),
        ("dims n=2 p=1\ndims n=2 p=1\n", 2, "dims"),
        ("dims n=2 p=1\neq a0 i=1 j=1 colour=red\n", 2, "colour"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(SpecParseError) as info:
        parse_spec(text)
    assert fragment in str(info.value)
    if line is not None:
        assert info.value.line == line
