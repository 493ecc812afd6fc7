"""
Versioned table of Gagliardo-Nirenberg constants.

For a field f on R^N and 2 <= q < 2N/(N-2) the quotient

    |f|_q / (|grad f|_2^g * |f|_2^(1-g)),   g = N(q-2)/(2q)

is bounded by a constant C_q(N). Sharp values are not available in closed
form for N > 1, so the shipped table stores conservative values: the largest
quotient found over several one-parameter families of radial profiles
(Gaussian, sech^s, (1+r^2)^-s, exp(-r^s)), multiplied by a safety factor of
1.1. For N = 1 the sech^s family contains the exact extremal profile.

The table is plain text, one ``C[N=<dim>,q=<q>] = <value>`` entry per line,
plus ``key = value`` metadata. Regenerate it with::

    python -m triwave.gnconst src/triwave/data/gn_constants.txt
"""

from __future__ import annotations

import math
import re
import sys
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from .exceptions import ConfigurationError, InputError

TABLE_FORMAT = "triwave-gn-table"
TABLE_VERSION = 1
SAFETY_FACTOR = 1.1
Q_DECIMALS = 2

_ENTRY = re.compile(r"^C\[N=(\d),\s*q=([0-9.]+)\]$")


def gn_exponent(q, dimension):
    """Exponent g = N(q-2)/(2q) on |grad f|_2 in the GN inequality."""
    return dimension * (q - 2.0) / (2.0 * q)


def q_upper(dimension):
    """Critical Sobolev exponent 2N/(N-2) (infinite for N <= 2)."""
    return math.inf if dimension <= 2 else 2.0 * dimension / (dimension - 2.0)


def _sphere_area(dimension):
    return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[dimension]


def _radial_integral(func, dimension):
    area = _sphere_area(dimension)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda r: func(r) * r ** (dimension - 1), 0.0, np.inf,
                                limit=400, epsabs=0.0, epsrel=1e-11)
    return area * val


def radial_quotient(profile, dprofile, q, dimension):
    """GN quotient of a radial profile, by adaptive quadrature."""
    g = gn_exponent(q, dimension)
    lq = _radial_integral(lambda r: abs(profile(r)) ** q, dimension) ** (1.0 / q)
    l2 = _radial_integral(lambda r: profile(r) ** 2, dimension) ** 0.5
    grad = _radial_integral(lambda r: dprofile(r) ** 2, dimension) ** 0.5
    return lq / (grad ** g * l2 ** (1.0 - g))


def _families(dimension, q):
    def _sech(r):
        # cosh overflows past r ~ 710, where quad does sample
        e = math.exp(-r)
        return 2.0 * e / (1.0 + e * e)

    def sech(s):
        return (lambda r: _sech(r) ** s,
                lambda r: -s * math.tanh(r) * _sech(r) ** s)

    def algebraic(s):
        return (lambda r: (1.0 + r * r) ** -s,
                lambda r: -2.0 * s * r * (1.0 + r * r) ** (-s - 1.0))

    def stretched(s):
        # quad never samples r = 0, where the derivative may be singular
        return (lambda r: math.exp(-r ** s),
                lambda r: -s * r ** (s - 1.0) * math.exp(-r ** s))

    s_alg = max(dimension / 4.0, (dimension - 2) / 4.0, dimension / (2.0 * q)) + 0.02
    return [
        (sech, 0.05, 25.0),
        (algebraic, s_alg, 25.0),
        (stretched, max(0.55, 1.0 - dimension / 2.0 + 0.05), 6.0),
    ]


def trial_gn_constant(dimension, q):
    """Largest GN quotient over the radial trial families (no safety factor)."""
    if q == 2.0:
        return 1.0
    best = radial_quotient(lambda r: math.exp(-r * r), lambda r: -2.0 * r * math.exp(-r * r),
                           q, dimension)
    for family, lo, hi in _families(dimension, q):
        def neg(s):
            try:
                return -radial_quotient(*family(s), q, dimension)
            except (OverflowError, ZeroDivisionError, ValueError):
                return 0.0

        grid = np.geomspace(lo, hi, 25)
        vals = [neg(s) for s in grid]
        i = int(np.argmin(vals))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-7})
        best = max(best, -vals[i], -res.fun)
    return best


def _key(q):
    return round(float(q), Q_DECIMALS)


@dataclass
class GNConstantTable:
    """Lookup of GN constants keyed by (dimension, q)."""

    constants: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    source: str = "<memory>"

    def lookup(self, dimension, q):
        key = (int(dimension), _key(q))
        if key not in self.constants:
            raise ConfigurationError(
                f"GN constant table {self.source} has no entry for N={dimension}, q={q:g}")
        return self.constants[key]

    def has(self, dimension, q):
        return (int(dimension), _key(q)) in self.constants

    def to_text(self):
        lines = ["# Gagliardo-Nirenberg constants |f|_q <= C |grad f|_2^g |f|_2^(1-g)",
                 "# g = N(q-2)/(2q); values are trial-family maxima times safety_factor"]
        meta = {"format": TABLE_FORMAT, "version": TABLE_VERSION}
        meta.update(self.metadata)
        lines += [f"{k} = {v}" for k, v in meta.items()]
        for (dim, q), val in sorted(self.constants.items()):
            lines.append(f"C[N={dim},q={q:.{Q_DECIMALS}f}] = {val:.12e}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_text())


def parse_gn_table(text, source="<string>"):
    table = GNConstantTable(source=source)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = line.rpartition("=")
        key, value = key.strip(), value.strip()
        m = _ENTRY.match(key)
        if m:
            try:
                val = float(value)
            except ValueError:
                raise InputError(f"{source}:{lineno}: bad constant {value!r}") from None
            if not (math.isfinite(val) and val > 0):
                raise InputError(f"{source}:{lineno}: constant must be positive and finite")
            table.constants[(int(m.group(1)), _key(m.group(2)))] = val
        else:
            table.metadata[key] = value
    if table.metadata.get("format") != TABLE_FORMAT:
        raise InputError(f"{source}: missing 'format = {TABLE_FORMAT}' header")
    if int(table.metadata.get("version", -1)) != TABLE_VERSION:
        raise InputError(f"{source}: unsupported table version {table.metadata.get('version')}")
    table.metadata.pop("format")
    table.metadata.pop("version")
    return table


def load_gn_table(path=None):
    """Load a GN table from ``path`` or the copy shipped with the package."""
    if path is None:
        ref = resources.files("triwave") / "data" / "gn_constants.txt"
        return parse_gn_table(ref.read_text(), source="gn_constants.txt")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read GN table {path}: {exc}") from exc
    return parse_gn_table(text, source=str(path))


def default_q_values(dimension):
    qs = np.round(np.arange(2.0, 6.0 + 1e-9, 0.05), Q_DECIMALS)
    return [float(q) for q in qs if q < q_upper(dimension)]


def generate_table(dimensions=(1, 2, 3), safety=SAFETY_FACTOR, verbose=False):
    table = GNConstantTable(metadata={
        "safety_factor": safety,
        "method": "max over gaussian, sech^s, (1+r^2)^-s, exp(-r^s) radial trials",
    })
    for dim in dimensions:
        for q in default_q_values(dim):
            val = trial_gn_constant(dim, q) * safety
            table.constants[(dim, _key(q))] = val
            if verbose:
                print(f"N={dim} q={q:.2f} C={val:.6f}", file=sys.stderr)
    return table


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "gn_constants.txt"
    generate_table(verbose=True).save(out)
