"""Loss specification files.

A loss file is a flat key-value text file (see ``kvio``) whose ``kind``
key selects the model:

``kind = quadratic``
    One ``row`` key per matrix row, whitespace-separated floats::

        kind = quadratic
        row = 2 0 0
        row = 0 1 0
        row = 0 0 0.5

``kind = toy4d``
    No further keys; the toy's constants are fixed.

``kind = factored``
    ``dim`` plus one ``datum`` key per data point, written as
    ``<label> | <polynomial>`` where the polynomial is a sum of terms,
    each an optional coefficient times ``x<i>`` or ``x<i>^<p>`` factors::

        kind = factored
        dim = 5
        datum = 1.5 | 2 x1 + 0.5 x2^2 x3 - 1
        datum = 0   | x4 - x5^2
"""

import re
from pathlib import Path

import numpy as np

from .kvio import parse_kv_text, read_kv_file
from .losses import (
    FactoredRegressionLoss,
    LossModel,
    PolynomialMap,
    QuadraticLoss,
    Toy4DLoss,
)

__all__ = ["load_loss", "parse_loss_text", "parse_polynomial"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)"
    r"|(?P<var>x[0-9]+(?:\^[0-9]+)?)"
    r"|(?P<op>[+\-*]))"
)


def parse_polynomial(expr: str, dimension: int) -> PolynomialMap:
    """Parse ``2 x1 + 0.5 x2^2 x3 - 1`` into a PolynomialMap."""
    pos = 0
    tokens = []
    while pos < len(expr):
        m = _TOKEN.match(expr, pos)
        if not m:
            if expr[pos:].strip():
                raise ValueError(f"bad polynomial near {expr[pos:]!r}")
            break
        pos = m.end()
        if m.group("num"):
            tokens.append(("num", float(m.group("num"))))
        elif m.group("var"):
            body = m.group("var")[1:]
            if "^" in body:
                var, _, power = body.partition("^")
            else:
                var, power = body, "1"
            tokens.append(("var", (int(var), int(power))))
        elif m.group("op") and m.group("op") != "*":
            tokens.append(("op", m.group("op")))

    terms: list[tuple[float, dict[int, int]]] = []
    sign = 1.0
    coeff: float | None = None
    powers: dict[int, int] = {}
    started = False

    def flush():
        nonlocal sign, coeff, powers, started
        if started:
            terms.append((sign * (1.0 if coeff is None else coeff), powers))
        sign, coeff, powers, started = 1.0, None, {}, False

    for tag, payload in tokens:
        if tag == "op":
            flush()
            if payload == "-":
                sign = -sign
        elif tag == "num":
            if started and (coeff is not None or powers):
                raise ValueError(f"misplaced coefficient in {expr!r}")
            coeff = payload
            started = True
        else:
            var, power = payload
            powers[var] = powers.get(var, 0) + power
            started = True
    flush()
    if not terms:
        raise ValueError(f"empty polynomial: {expr!r}")
    return PolynomialMap.from_terms(dimension, terms)


def parse_loss_text(text: str) -> LossModel:
    pairs = parse_kv_text(text)
    keys = dict(pairs)
    kind = keys.get("kind")
    if kind is None:
        raise ValueError("loss file is missing the 'kind' key")

    if kind == "toy4d":
        return Toy4DLoss()

    if kind == "quadratic":
        rows = [v for k, v in pairs if k == "row"]
        if not rows:
            raise ValueError("quadratic loss needs 'row' entries")
        matrix = np.array([[float(c) for c in row.split()] for row in rows])
        return QuadraticLoss(matrix)

    if kind == "factored":
        if "dim" not in keys:
            raise ValueError("factored loss needs a 'dim' key")
        dim = int(keys["dim"])
        maps, labels = [], []
        for k, v in pairs:
            if k != "datum":
                continue
            if "|" not in v:
                raise ValueError(f"datum needs '<label> | <polynomial>': {v!r}")
            label, _, poly = v.partition("|")
            labels.append(float(label))
            maps.append(parse_polynomial(poly, dim))
        if not maps:
            raise ValueError("factored loss needs 'datum' entries")
        return FactoredRegressionLoss(maps, labels)

    raise ValueError(f"unknown loss kind {kind!r}")


def load_loss(path) -> LossModel:
    """Load a loss model from a specification file."""
    read_kv_file(path)  # surfaces I/O errors with the path in the message
    return parse_loss_text(Path(path).read_text())
