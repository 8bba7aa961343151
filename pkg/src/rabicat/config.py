"""key=value run configuration.

Example::

    # deep-strong coupling with the A^2 term
    model = a2
    omega_c = 1.0
    omega_a = 1.0
    epsilon = 0.3
    coupling = linear:1.0
    g_grid = 2,4,8,16
    trunc = auto:1e-8:512

Recognised keys and defaults are listed in ``KEYS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ParseError, RangeError, UnknownKey
from .fock import Truncation
from .models import CouplingPolicy, ModelParams
from .spectra import MODELS, QR, A2, default_epsilon_grid

KEYS = {
    "model": "qr",
    "omega_c": None,
    "omega_a": None,
    "epsilon": "0",
    "g": None,
    "hbar": "1",
    "coupling": "none",
    "g_grid": "",
    "epsilon_grid": "",
    "trunc": "auto:1e-8:512",
    "levels": "6",
    "resolvent_n": "300",
    "out": "",
}
REQUIRED = ("omega_c", "omega_a")


@dataclass(frozen=True)
class RunConfig:
    model: str
    params: ModelParams
    g_grid: tuple[float, ...]
    epsilon_grid: tuple[float, ...]
    trunc: Truncation
    levels: int = 6
    resolvent_n: int = 300
    out: str | None = None


def _float(value: str, key: str, line: int | None) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {value!r} as a number", line) from None
    if not math.isfinite(x):
        raise ParseError(f"{key}: {value!r} is not finite", line)
    return x


def _int(value: str, key: str, line: int | None) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {value!r} as an integer", line) from None


def _grid(value: str, key: str, line: int | None) -> tuple[float, ...]:
    """Comma list, or ``start:stop:count`` for a uniform grid."""
    value = value.strip()
    if not value:
        return ()
    if ":" in value and "," not in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ParseError(f"{key}: expected start:stop:count", line)
        a, b = _float(parts[0], key, line), _float(parts[1], key, line)
        n = _int(parts[2], key, line)
        if n < 1:
            raise RangeError(f"{key}: count must be >= 1", line)
        return tuple(float(x) for x in np.linspace(a, b, n))
    return tuple(_float(x, key, line) for x in value.split(",") if x.strip())


def _coupling(value: str, line: int | None) -> CouplingPolicy:
    kind, _, rest = value.strip().partition(":")
    try:
        if kind == "none" and not rest:
            return CouplingPolicy.none()
        if kind == "linear":
            return CouplingPolicy.linear(_float(rest, "coupling", line))
        if kind == "custom":
            pairs = []
            for item in rest.split(","):
                g, sep, c = item.partition(":")
                if not sep:
                    raise ParseError(f"coupling: bad custom pair {item!r} (want g:C_g)", line)
                pairs.append((_float(g, "coupling", line), _float(c, "coupling", line)))
            return CouplingPolicy.custom(pairs)
    except ValueError as exc:
        raise RangeError(f"coupling: {exc}", line) from None
    raise ParseError(f"coupling: unknown policy {value!r} (none, linear:C, custom:g:c,...)", line)


def _trunc(value: str, line: int | None) -> Truncation:
    parts = value.strip().split(":")
    try:
        if parts[0] == "auto" and len(parts) == 3:
            tol = _float(parts[1], "trunc", line)
            ceiling = _int(parts[2], "trunc", line)
            start = min(64, ceiling)
            return Truncation(start, tol, auto_grow=True, n_ceiling=ceiling)
        if parts[0] == "fixed" and len(parts) == 2:
            return Truncation(_int(parts[1], "trunc", line))
        if len(parts) == 1:
            return Truncation(_int(parts[0], "trunc", line))
    except ValueError as exc:
        raise RangeError(f"trunc: {exc}", line) from None
    raise ParseError(f"trunc: expected auto:tol:ceiling, fixed:N or N, got {value!r}", line)


def parse_config(text: str) -> RunConfig:
    raw: dict[str, tuple[str, int | None]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"expected key=value, got {line.strip()!r}", lineno)
        if key not in KEYS:
            raise UnknownKey(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno)
        raw[key] = (value.strip(), lineno)

    def get(key):
        return raw.get(key, (KEYS[key], None))

    model, model_line = get("model")
    if model not in MODELS:
        raise RangeError(f"model must be one of {', '.join(MODELS)}, got {model!r}", model_line)

    nums = {}
    for k in ("omega_c", "omega_a", "epsilon", "hbar"):
        value, line = get(k)
        if value is not None:
            nums[k] = _float(value, k, line)
    for key in REQUIRED:
        if key not in raw:
            raise ParseError(f"missing required key {key!r}")
    g_grid = _grid(get("g_grid")[0], "g_grid", get("g_grid")[1])
    if "g" in raw:
        g = _float(raw["g"][0], "g", raw["g"][1])
    else:
        g = g_grid[0] if g_grid else 0.0
    coupling = _coupling(*get("coupling"))

    try:
        params = ModelParams(nums["omega_c"], nums["omega_a"], nums["epsilon"], g, nums["hbar"], coupling)
    except ValueError as exc:
        raise RangeError(str(exc)) from None
    if any(x < 0 for x in g_grid):
        raise RangeError("g_grid values must be non-negative", get("g_grid")[1])

    if model == QR and params.epsilon != 0:
        raise RangeError("model qr requires epsilon = 0 (use gqr for a biased atom)", raw.get("epsilon", (0, None))[1])
    if model == A2 and not coupling.present:
        raise RangeError("model a2 needs a coupling policy", raw.get("coupling", (0, None))[1])
    if coupling.kind == "custom":
        lo, hi = coupling.table[0][0], coupling.table[-1][0]
        for x in (g,) + g_grid:
            if model == A2 and not lo <= x <= hi:
                raise RangeError(f"g={x} outside custom coupling table [{lo}, {hi}]", raw["coupling"][1])

    value, line = get("epsilon_grid")
    eps_grid = _grid(value, "epsilon_grid", line)
    if not eps_grid:
        eps_grid = tuple(float(x) for x in default_epsilon_grid(params))

    trunc = _trunc(*get("trunc"))
    levels = _int(get("levels")[0], "levels", get("levels")[1])
    if levels < 2:
        raise RangeError("levels must be >= 2", get("levels")[1])
    resolvent_n = _int(get("resolvent_n")[0], "resolvent_n", get("resolvent_n")[1])
    if resolvent_n < 0 or resolvent_n == 1:
        raise RangeError("resolvent_n must be 0 (off) or >= 2", get("resolvent_n")[1])
    out = get("out")[0] or None
    return RunConfig(model, params, g_grid, eps_grid, trunc, levels, resolvent_n, out)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"config is not UTF-8: {exc}") from None
    return parse_config(text)


def with_levels(cfg: RunConfig, levels: int) -> RunConfig:
    if levels < 2:
        raise RangeError("levels must be >= 2")
    return replace(cfg, levels=levels)
