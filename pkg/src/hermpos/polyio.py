"""JSON encoding of polynomials.

Hermitian polynomial files look like::

    {"n": 1, "d": 2, "terms": [{"alpha": [2, 0], "beta": [2, 0], "re": "1", "im": "0"}, ...]}

Only one of each conjugate pair needs to be listed; the partner is implied.
Coefficients given as strings (``"p/q"``, integers or decimals) are parsed
exactly; JSON floats switch the whole polynomial to floating arithmetic.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from . import multiindex as mi
from .errors import HermitianSymmetryError, ParseError
from .polyalg import HermitianBihomPoly, HoloPoly
from .scalars import GaussianRational, conj


def _parse_scalar(value, where, term_index):
    if value is None:
        return 0
    if isinstance(value, bool):
        raise ParseError(f"{where}: booleans are not coefficients", term_index)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: cannot parse rational {value!r} ({exc})", term_index) from None
    raise ParseError(f"{where}: unsupported coefficient {value!r}", term_index)


def _coefficient(term, term_index):
    re = _parse_scalar(term.get("re", 0), "re", term_index)
    im = _parse_scalar(term.get("im", 0), "im", term_index)
    if isinstance(re, float) or isinstance(im, float):
        return complex(float(re), float(im))
    return GaussianRational(re, im)


def _index(term, key, n, term_index):
    raw = term.get(key)
    if not isinstance(raw, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in raw):
        raise ParseError(f"'{key}' must be a list of integers", term_index)
    if len(raw) != n + 1:
        raise ParseError(f"'{key}' has {len(raw)} entries, expected {n + 1}", term_index)
    if any(a < 0 for a in raw):
        raise ParseError(f"'{key}' has a negative entry", term_index)
    return tuple(raw)


def hermitian_from_dict(doc) -> HermitianBihomPoly:
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    for key in ("n", "d", "terms"):
        if key not in doc:
            raise ParseError(f"missing field '{key}'")
    n, d = doc["n"], doc["d"]
    if not isinstance(n, int) or n < 0 or not isinstance(d, int) or d < 0:
        raise ParseError("'n' and 'd' must be nonnegative integers")
    if not isinstance(doc["terms"], list):
        raise ParseError("'terms' must be a list")

    explicit: dict = {}
    for i, term in enumerate(doc["terms"]):
        if not isinstance(term, dict):
            raise ParseError("term must be an object", i)
        a = _index(term, "alpha", n, i)
        b = _index(term, "beta", n, i)
        if sum(a) != d or sum(b) != d:
            raise ParseError(f"alpha {list(a)} / beta {list(b)} not of length d={d}", i)
        if (a, b) in explicit:
            raise ParseError(f"duplicate term alpha={list(a)} beta={list(b)}", i)
        c = _coefficient(term, i)
        if a == b and c.imag != 0:
            raise HermitianSymmetryError("diagonal coefficient must be real", i)
        explicit[(a, b)] = (c, i)

    terms = {}
    for (a, b), (c, i) in explicit.items():
        terms[(a, b)] = c
        if a == b:
            continue
        if (b, a) in explicit:
            partner, _ = explicit[(b, a)]
            if partner != conj(c):
                raise HermitianSymmetryError(
                    f"explicit pair alpha={list(a)} beta={list(b)} is not the conjugate of its transpose", i)
        else:
            terms[(b, a)] = conj(c)
    return HermitianBihomPoly(n, d, terms)


def _scalar_out(c, exact):
    if exact:
        return str(c.re), str(c.im)
    c = complex(c)
    return c.real, c.imag


def hermitian_to_dict(p: HermitianBihomPoly) -> dict:
    terms = []
    for (a, b), c in p.terms.items():
        if mi.grlex_key(a) > mi.grlex_key(b):
            continue
        re, im = _scalar_out(c, p.exact)
        terms.append({"alpha": list(a), "beta": list(b), "re": re, "im": im})
    return {"n": p.n, "d": p.d, "terms": terms}


def holo_to_dict(s: HoloPoly) -> dict:
    terms = []
    for a, c in s.terms.items():
        re, im = _scalar_out(c, s.exact)
        terms.append({"alpha": list(a), "re": re, "im": im})
    return {"n": s.n, "k": s.k, "terms": terms}


def holo_from_dict(doc) -> HoloPoly:
    try:
        n, k = doc["n"], doc["k"]
        terms = {}
        for i, t in enumerate(doc["terms"]):
            terms[_index(t, "alpha", n, i)] = _coefficient(t, i)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed holomorphic polynomial: {exc}") from None
    return HoloPoly(n, k, terms)


def loads(text: str) -> HermitianBihomPoly:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return hermitian_from_dict(doc)


def load(path) -> HermitianBihomPoly:
    return loads(Path(path).read_text())


def dumps(p: HermitianBihomPoly) -> str:
    return json.dumps(hermitian_to_dict(p), sort_keys=True)
