"""Sparse multivariate polynomials with batched value/gradient/Hessian."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_VARS = "xyzw"


@dataclass(frozen=True)
class Polynomial:
    """Sum of ``coef * prod_k y_k ** exps[k]`` over ``terms``."""

    terms: tuple  # ((coef, (e0, e1, ...)), ...)
    nvars: int

    @classmethod
    def parse(cls, text, nvars):
        """Parse strings such as ``"x*y"``, ``"z^2 - 0.5*x"`` or ``"x2*x3"``."""
        text = text.replace(" ", "").replace("**", "^")
        if not text:
            raise ValueError("empty polynomial")
        terms = []
        # collapse runs of signs, then split before every sign not in a float exponent
        while re.search(r"[+-]{2}", text):
            text = re.sub(r"\+-|-\+", "-", text).replace("--", "+").replace("++", "+")
        for chunk in re.split(r"(?<![0-9.][eE])(?=[+-])", text):
            if not chunk:
                continue
            sign, body = (chunk[0], chunk[1:]) if chunk[0] in "+-" else ("+", chunk)
            if not body:
                raise ValueError(f"dangling sign in {text!r}")
            coef = -1.0 if sign == "-" else 1.0
            exps = [0] * nvars
            for factor in body.split("*"):
                base, _, power = factor.partition("^")
                power = int(power) if power else 1
                if re.fullmatch(r"[0-9.]+([eE][+-]?[0-9]+)?", base):
                    coef *= float(base) ** power
                    continue
                m = re.fullmatch(r"x([1-9])", base)
                if m:
                    k = int(m.group(1)) - 1
                elif len(base) == 1 and base in _VARS:
                    k = _VARS.index(base)
                else:
                    raise ValueError(f"bad polynomial factor {factor!r}")
                if k >= nvars:
                    raise ValueError(f"variable {base!r} out of range for {nvars} variables")
                exps[k] += power
            terms.append((coef, tuple(exps)))
        return cls(tuple(terms), nvars)

    @classmethod
    def monomial(cls, exps, coef=1.0):
        return cls(((float(coef), tuple(int(e) for e in exps)),), len(exps))

    def __add__(self, other):
        return Polynomial(self.terms + other.terms, self.nvars)

    def scale(self, s):
        return Polynomial(tuple((c * s, e) for c, e in self.terms), self.nvars)

    def jet(self, y, order=0):
        """``[value, gradient, hessian]`` at y (shape (..., nvars))."""
        y = np.asarray(y, dtype=float)
        m = self.nvars
        val = np.zeros(y.shape[:-1])
        grad = np.zeros(y.shape[:-1] + (m,)) if order >= 1 else None
        hess = np.zeros(y.shape[:-1] + (m, m)) if order >= 2 else None

        def powk(k, e):
            return y[..., k] ** e if e > 0 else np.ones(y.shape[:-1])

        for coef, exps in self.terms:
            factors = [powk(k, e) for k, e in enumerate(exps)]
            val = val + coef * np.prod(factors, axis=0)
            if order >= 1:
                for i in range(m):
                    if exps[i] == 0:
                        continue
                    fi = list(factors)
                    fi[i] = exps[i] * powk(i, exps[i] - 1)
                    grad[..., i] += coef * np.prod(fi, axis=0)
                    if order >= 2:
                        for j in range(m):
                            ej = exps[j] - (1 if j == i else 0)
                            if ej <= 0:
                                continue
                            fij = list(fi)
                            if j == i:
                                fij[i] = exps[i] * (exps[i] - 1) * powk(i, exps[i] - 2)
                            else:
                                fij[j] = exps[j] * powk(j, exps[j] - 1)
                            hess[..., i, j] += coef * np.prod(fij, axis=0)
        return [val, grad, hess][: order + 1]

    def __call__(self, y):
        return self.jet(y, 0)[0]

    def __str__(self):
        parts = []
        for c, e in self.terms:
            mono = "*".join(f"x{k + 1}" + (f"^{p}" if p > 1 else "") for k, p in enumerate(e) if p)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)
