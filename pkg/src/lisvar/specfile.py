"""Line-oriented restriction files.

One record per line, ``#`` starts a comment. Every record is a keyword followed
by ``key=value`` fields::

    dims n=2 p=1
    normalization diag_a0
    eq a0inv i=1 j=1 value=0.5
    eq a0 i=1 j=3 value=0
    eq lag l=1 i=2 j=1 value=0
    eq cir i=1 j=2 value=0
    eq irh h=4 i=1 j=2 value=0
    eq a0inv_combo i=1 j=1 k=2 l=2 d=1 value=0
    eq a0_combo i=1 j=1 k=2 l=2 d=1 value=0
    eq irh_combo h=0 i=1 j=1 h2=0 k=2 l=2 d=1 value=0
    sign i=1 j=1 h=0:4 dir=+

``value`` defaults to 0 and ``d`` to 1. Combos read ``first - d * second`` where
the first entry is ``(i, j)`` and the second ``(k, l)``. A sign horizon is a
single integer or an inclusive range ``a:b``; ``dir`` is ``+`` or ``-``.
"""

from __future__ import annotations

import math
import shlex
from pathlib import Path

from .errors import InvalidRestriction, SpecParseError
from .restrictions import (
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

_EQ_FIELDS = {
    "a0inv": ("i", "j"),
    "a0": ("i", "j"),
    "lag": ("l", "i", "j"),
    "cir": ("i", "j"),
    "irh": ("h", "i", "j"),
    "a0inv_combo": ("i", "j", "k", "l"),
    "a0_combo": ("i", "j", "k", "l"),
    "irh_combo": ("h", "i", "j", "h2", "k", "l"),
}
_OPTIONAL = {"value", "d"}


def _fields(tokens: list[str], line: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for tok in tokens:
        if "=" not in tok:
            raise SpecParseError(f"expected key=value, got {tok!r}", line)
        key, val = tok.split("=", 1)
        key = key.strip().lower()
        if key in out:
            raise SpecParseError(f"duplicate field {key!r}", line)
        if not val:
            raise SpecParseError(f"field {key!r} has no value", line)
        out[key] = val.strip()
    return out


def _int(fields: dict, key: str, line: int) -> int:
    try:
        return int(fields[key])
    except KeyError:
        raise SpecParseError(f"missing field {key!r}", line) from None
    except ValueError:
        raise SpecParseError(f"field {key!r} must be an integer, got {fields[key]!r}", line) from None


def _float(fields: dict, key: str, default: float, line: int) -> float:
    if key not in fields:
        return default
    try:
        v = float(fields[key])
    except ValueError:
        raise SpecParseError(f"field {key!r} must be a number, got {fields[key]!r}", line) from None
    if not math.isfinite(v):
        raise SpecParseError(f"field {key!r} must be finite", line)
    return v


def _check_keys(fields: dict, allowed: set[str], line: int):
    extra = set(fields) - allowed
    if extra:
        raise SpecParseError(f"unknown field(s) {sorted(extra)}", line)


def _equality(kind: str, fields: dict, line: int) -> EqualityAtom:
    if kind not in _EQ_FIELDS:
        raise SpecParseError(f"unknown target {kind!r}; expected one of {sorted(_EQ_FIELDS)}", line)
    required = _EQ_FIELDS[kind]
    allowed = set(required) | {"value"} | ({"d"} if kind.endswith("_combo") else set())
    _check_keys(fields, allowed, line)
    ix = {k: _int(fields, k, line) for k in required}
    d = _float(fields, "d", 1.0, line)
    if kind == "a0inv":
        target = A0InvElement(ix["i"], ix["j"])
    elif kind == "a0":
        target = A0Element(ix["i"], ix["j"])
    elif kind == "lag":
        target = LagElement(ix["i"], ix["j"], l=ix["l"])
    elif kind == "cir":
        target = CirInfElement(ix["i"], ix["j"])
    elif kind == "irh":
        target = IrhElement(ix["i"], ix["j"], h=ix["h"])
    elif kind == "a0inv_combo":
        target = LinearCombo.a0inv(ix["i"], ix["j"], ix["k"], ix["l"], d)
    elif kind == "a0_combo":
        target = LinearCombo.a0(ix["i"], ix["j"], ix["k"], ix["l"], d)
    else:
        target = LinearCombo.irh(ix["h"], ix["i"], ix["j"], ix["h2"], ix["k"], ix["l"], d)
    return EqualityAtom(target, _float(fields, "value", 0.0, line))


def _sign(fields: dict, line: int) -> SignAtom:
    _check_keys(fields, {"i", "j", "h", "dir"}, line)
    i, j = _int(fields, "i", line), _int(fields, "j", line)
    raw = fields.get("h", "0")
    try:
        if ":" in raw:
            a, b = raw.split(":", 1)
            h, h_end = int(a), int(b)
        else:
            h, h_end = int(raw), None
    except ValueError:
        raise SpecParseError(f"horizon must be an integer or a:b range, got {raw!r}", line) from None
    direction = fields.get("dir")
    if direction not in ("+", "-"):
        raise SpecParseError("sign records need dir=+ or dir=-", line)
    return SignAtom(i, j, h, 1 if direction == "+" else -1, h_end)


def parse_spec(text: str, source: str = "<spec>") -> RestrictionSpec:
    n = p = None
    normalization = "diag_a0"
    eqs: list[tuple[int, EqualityAtom]] = []
    signs: list[tuple[int, SignAtom]] = []
    dims_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise SpecParseError(str(exc), lineno) from None
        if not tokens:
            continue
        head = tokens[0].lower()
        if head == "dims":
            if dims_line is not None:
                raise SpecParseError(f"dims already given on line {dims_line}", lineno)
            fields = _fields(tokens[1:], lineno)
            _check_keys(fields, {"n", "p"}, lineno)
            n, p = _int(fields, "n", lineno), _int(fields, "p", lineno)
            if n < 1 or p < 0:
                raise SpecParseError("need n >= 1 and p >= 0", lineno)
            dims_line = lineno
        elif head == "normalization":
            if len(tokens) != 2:
                raise SpecParseError("normalization takes exactly one rule name", lineno)
            normalization = tokens[1]
        elif head == "eq":
            if len(tokens) < 2:
                raise SpecParseError("eq record needs a target", lineno)
            eqs.append((lineno, _equality(tokens[1].lower(), _fields(tokens[2:], lineno), lineno)))
        elif head == "sign":
            signs.append((lineno, _sign(_fields(tokens[1:], lineno), lineno)))
        else:
            raise SpecParseError(f"unknown record type {tokens[0]!r}", lineno)
    if dims_line is None:
        raise SpecParseError(f"{source}: missing 'dims n=.. p=..' record")
    # validate atom by atom so errors point at the offending line
    for lineno, atom in eqs:
        try:
            RestrictionSpec(n, p, (atom,), ())
        except InvalidRestriction as exc:
            raise SpecParseError(str(exc), lineno) from None
    for lineno, s in signs:
        try:
            s.validate(n)
        except InvalidRestriction as exc:
            raise SpecParseError(str(exc), lineno) from None
    try:
        return RestrictionSpec(n, p, tuple(a for _, a in eqs), tuple(s for _, s in signs), normalization)
    except InvalidRestriction as exc:
        raise SpecParseError(f"{source}: {exc}") from None


def load_spec(path: str | Path) -> RestrictionSpec:
    path = Path(path)
    return parse_spec(path.read_text(), source=str(path))


def _fmt(x: float) -> str:
    return repr(float(x))


def _target_record(t) -> str:
    if isinstance(t, LinearCombo):
        a, b = t.first, t.second
        if isinstance(a, A0InvElement):
            return f"a0inv_combo i={a.i} j={a.j} k={b.i} l={b.j} d={_fmt(t.d)}"
        if isinstance(a, A0Element):
            return f"a0_combo i={a.i} j={a.j} k={b.i} l={b.j} d={_fmt(t.d)}"
        return f"irh_combo h={a.h} i={a.i} j={a.j} h2={b.h} k={b.i} l={b.j} d={_fmt(t.d)}"
    if isinstance(t, LagElement):
        return f"lag l={t.l} i={t.i} j={t.j}"
    if isinstance(t, IrhElement):
        return f"irh h={t.h} i={t.i} j={t.j}"
    return f"{t.kind} i={t.i} j={t.j}"


def format_spec(spec: RestrictionSpec) -> str:
    """Render a spec in the file format; ``parse_spec(format_spec(s))`` rebuilds ``s``."""
    lines = [f"dims n={spec.n} p={spec.p}", f"normalization {spec.normalization}"]
    for a in spec.equalities:
        lines.append(f"eq {_target_record(a.target)} value={_fmt(a.value)}")
    for s in spec.signs:
        h = f"{s.h}" if s.h_end is None else f"{s.h}:{s.h_end}"
        lines.append(f"sign i={s.i} j={s.j} h={h} dir={'+' if s.sign > 0 else '-'}")
    return "\n".join(lines) + "\n"
