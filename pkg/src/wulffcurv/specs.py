"""Parsers for the anisotropy and surface description strings.

Anisotropies::

    const:c=1.0            (optional n=1 for plane curves)
    linear:a=[0.3,0,0]
    norm:B=[2,1,1]
    quad:c=0.2,d=[0,0,1]

Surfaces::

    sphere:R=1             (optional n=1)
    ellipsoid:a=1,b=1,c=2  (two axes give an ellipse)
    wulff:F=<anisotropy>
    radial:eps=[0.1],poly=[x*y]

followed by any number of ``*scale=s`` and ``*translate=[..]`` modifiers.
"""
from __future__ import annotations

from .anisotropy import AnisotropyModel
from .errors import SpecParseError
from .geometry import Ellipsoid, RadialGraph, Sphere, Transformed, WulffSurface


def _split_top(text, sep):
    """Split at ``sep`` outside square brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise SpecParseError(f"unbalanced ']' in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise SpecParseError(f"unbalanced '[' in {text!r}")
    parts.append("".join(cur))
    return parts


def _number(text, key):
    try:
        return float(text)
    except ValueError:
        raise SpecParseError(f"{key}: expected a number, got {text!r}") from None


def _vector(text, key):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise SpecParseError(f"{key}: expected a bracketed list, got {text!r}")
    body = text[1:-1].strip()
    if not body:
        raise SpecParseError(f"{key}: empty list")
    return [_number(v.strip(), key) for v in body.split(",")]


def _strings(text, key):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise SpecParseError(f"{key}: expected a bracketed list, got {text!r}")
    return [s.strip() for s in text[1:-1].split(",") if s.strip()]


def _kind_and_params(text, allowed):
    text = text.strip().replace(" ", "")
    kind, colon, rest = text.partition(":")
    if kind not in allowed:
        raise SpecParseError(f"unknown kind {kind!r}; expected one of {sorted(allowed)}")
    params = {}
    if colon and rest:
        for item in _split_top(rest, ","):
            key, eq, value = item.partition("=")
            if not eq or not key:
                raise SpecParseError(f"expected key=value, got {item!r}")
            if key in params:
                raise SpecParseError(f"duplicate key {key!r}")
            params[key] = value
    unknown = set(params) - allowed[kind]
    if unknown:
        raise SpecParseError(f"{kind}: unknown keys {sorted(unknown)}")
    return kind, params


_F_KEYS = {"const": {"c", "n"}, "linear": {"a"}, "norm": {"B"}, "quad": {"c", "d"}}


def parse_anisotropy(text, n=None):
    """AnisotropyModel from a string; ``n`` fixes the dimension of ``const``."""
    kind, params = _kind_and_params(text, _F_KEYS)
    try:
        if kind == "const":
            dim = int(_number(params["n"], "n")) if "n" in params else (2 if n is None else n)
            return AnisotropyModel.constant(_number(params.get("c", "1"), "c"), dim)
        if kind == "linear":
            return AnisotropyModel.linear(_vector(_require(params, "a", kind), "a"))
        if kind == "norm":
            return AnisotropyModel.norm(_vector(_require(params, "B", kind), "B"))
        return AnisotropyModel.quad(_number(_require(params, "c", kind), "c"),
                                    _vector(_require(params, "d", kind), "d"))
    except SpecParseError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecParseError(f"{text!r}: {exc}") from exc


def _require(params, key, kind):
    if key not in params:
        raise SpecParseError(f"{kind}: missing key {key!r}")
    return params[key]


_S_KEYS = {"sphere": {"R", "n"}, "ellipsoid": {"a", "b", "c", "d"}, "wulff": {"F"},
           "radial": {"eps", "poly", "n"}}


def parse_surface(text):
    """Surface object from a string, modifiers applied left to right."""
    pieces = _split_top(text.strip().replace(" ", ""), "*")
    base_text, mods = pieces[0], pieces[1:]
    if base_text.startswith("wulff:"):
        body = base_text[len("wulff:"):]
        if not body.startswith("F="):
            raise SpecParseError("wulff: expected F=<anisotropy>")
        surface = WulffSurface(parse_anisotropy(body[2:]))
    else:
        kind, params = _kind_and_params(base_text, _S_KEYS)
        try:
            if kind == "sphere":
                n = int(_number(params["n"], "n")) if "n" in params else 2
                surface = Sphere(_number(params.get("R", "1"), "R"), n)
            elif kind == "ellipsoid":
                keys = [k for k in "abcd" if k in params]
                if keys != list("abcd"[:len(keys)]) or len(keys) < 2:
                    raise SpecParseError("ellipsoid: give consecutive axes a,b[,c[,d]]")
                surface = Ellipsoid([_number(params[k], k) for k in keys])
            else:
                n = int(_number(params["n"], "n")) if "n" in params else 2
                eps = _vector(_require(params, "eps", kind), "eps")
                polys = _strings(_require(params, "poly", kind), "poly")
                surface = RadialGraph(eps, polys, n)
        except SpecParseError:
            raise
        except ValueError as exc:
            raise SpecParseError(f"{text!r}: {exc}") from exc
    for mod in mods:
        key, eq, value = mod.partition("=")
        if not eq:
            raise SpecParseError(f"modifier needs key=value, got {mod!r}")
        try:
            if key == "scale":
                surface = Transformed(surface, scale=_number(value, key))
            elif key == "translate":
                vec = _vector(value, key)
                if len(vec) != surface.n + 1:
                    raise SpecParseError(f"translate needs {surface.n + 1} components")
                surface = Transformed(surface, translate=vec)
            else:
                raise SpecParseError(f"unknown modifier {key!r}")
        except SpecParseError:
            raise
        except ValueError as exc:
            raise SpecParseError(f"{text!r}: {exc}") from exc
    return surface
