"""Scenario config files (TOML).

A config holds the scalars ``kappa``, ``n_per_interval`` and ``rule``, a
``[kernel]`` table, and either a list of ``[[interval]]`` tables or a
``[two_block]`` table (``epsilon``, ``delta``) that generates the two-interval
configuration.  An optional ``[modulus]`` table (``mu``, ``R1`` and
optionally ``c``) configures the weak-monotonicity check.

Profiles (``rho0``, ``u0``) are a number, a list of polynomial
coefficients in x (ascending powers), or an inline table ``{x = [...],
y = [...]}`` of samples joined by a cubic spline.
"""

import hashlib
from dataclasses import replace

import tomli
import tomli_w

from .errors import ConfigError, InvalidKernel
from .kernel import Kernel
from .scenario import Interval, Profile, Scenario, two_block_scenario

_KERNEL_KEYS = {
    "constant": ("coef",),
    "exponential": ("coef", "rate"),
    "rational": ("coef", "rate"),
    "powerlaw": ("s", "coef", "r_cut"),
    "tabulated": ("samples",),
}


def _num(table, key, where, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"{where}: missing key {key!r}")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {val!r}")
    return float(val)


def kernel_from_table(table):
    if not isinstance(table, dict):
        raise ConfigError("kernel: expected a table")
    form = table.get("form")
    if form not in _KERNEL_KEYS:
        raise ConfigError(f"kernel.form: unknown form {form!r}")
    unknown = set(table) - {"form", "r0", *_KERNEL_KEYS[form]}
    if unknown:
        raise ConfigError(f"kernel: keys {sorted(unknown)} do not apply to form {form!r}")
    kw = {}
    if "r0" in table:
        kw["r0"] = _num(table, "r0", "kernel")
    try:
        if form == "tabulated":
            samples = table.get("samples")
            if not isinstance(samples, list) or not all(
                    isinstance(p, list) and len(p) == 2 for p in samples):
                raise ConfigError("kernel.samples: expected a list of [x, phi] pairs")
            return Kernel("tabulated", samples=tuple((float(x), float(y)) for x, y in samples), **kw)
        args = {key: _num(table, key, "kernel") for key in _KERNEL_KEYS[form]}
        return Kernel(form, **args, **kw)
    except InvalidKernel as exc:
        raise ConfigError(f"kernel: {exc}") from exc


def kernel_to_table(kernel):
    out = {"form": kernel.form}
    for key in _KERNEL_KEYS[kernel.form]:
        val = getattr(kernel, key)
        out[key] = [list(p) for p in val] if key == "samples" else val
    if kernel.r0 is not None:
        out["r0"] = kernel.r0
    return out


def _profile(value, where):
    try:
        if isinstance(value, dict):
            if set(value) != {"x", "y"}:
                raise ConfigError(f"{where}: sampled profile needs exactly keys x and y")
        elif isinstance(value, list):
            if not value or not all(isinstance(c, (int, float)) for c in value):
                raise ConfigError(f"{where}: polynomial coefficients must be numbers")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, list or {{x, y}} table")
        return Profile.coerce(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def scenario_from_dict(doc):
    unknown = set(doc) - {"kappa", "n_per_interval", "rule", "kernel", "interval", "two_block",
                          "modulus"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    if "kernel" not in doc:
        raise ConfigError("missing [kernel] table")
    kernel = kernel_from_table(doc["kernel"])
    kappa = _num(doc, "kappa", "config", 1.0)
    n = doc.get("n_per_interval", 200)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("n_per_interval: expected a positive integer")
    rule = doc.get("rule", "midpoint")
    if not isinstance(rule, str):
        raise ConfigError("rule: expected a string")
    opts = {"n_per_interval": n, "rule": rule}
    if ("two_block" in doc) == ("interval" in doc):
        raise ConfigError("give exactly one of [[interval]] or [two_block]")
    if "two_block" in doc:
        h = doc["two_block"]
        try:
            sc = two_block_scenario(_num(h, "epsilon", "two_block"), _num(h, "delta", "two_block"),
                                    kernel, kappa, **opts)
        except ValueError as exc:
            raise ConfigError(f"two_block: {exc}") from exc
    else:
        ivs = doc["interval"]
        if not isinstance(ivs, list) or not ivs:
            raise ConfigError("interval: expected an array of tables [[interval]]")
        intervals = []
        for j, t in enumerate(ivs):
            where = f"interval[{j}]"
            extra = set(t) - {"left", "right", "rho0", "u0"}
            if extra:
                raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
            intervals.append(Interval(_num(t, "left", where), _num(t, "right", where),
                                      _profile(t.get("rho0", 1.0), where + ".rho0"),
                                      _profile(t.get("u0", 0.0), where + ".u0")))
        sc = Scenario(tuple(intervals), kernel, kappa, **opts)
    if "modulus" in doc:
        m = doc["modulus"]
        extra = set(m) - {"mu", "R1", "c"}
        if extra:
            raise ConfigError(f"modulus: unknown keys {sorted(extra)}")
        mod = {"mu": _num(m, "mu", "modulus"), "R1": _num(m, "R1", "modulus")}
        if "c" in m:
            mod["c"] = _num(m, "c", "modulus")
        sc = replace(sc, modulus=mod)
    return sc


def scenario_to_dict(sc):
    doc = {"kappa": float(sc.kappa), "n_per_interval": int(sc.n_per_interval), "rule": sc.rule,
           "kernel": kernel_to_table(sc.kernel)}
    if sc.two_block is not None:
        doc["two_block"] = {"epsilon": sc.two_block[0], "delta": sc.two_block[1]}
    else:
        doc["interval"] = [{"left": iv.left, "right": iv.right, "rho0": iv.rho0.to_config(),
                            "u0": iv.u0.to_config()} for iv in sc.intervals]
    if sc.modulus:
        doc["modulus"] = dict(sc.modulus)
    return doc


def loads(text):
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    return scenario_from_dict(doc)


def dumps(sc):
    return tomli_w.dumps(scenario_to_dict(sc))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(sc, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(sc))


def scenario_hash(sc):
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(dumps(sc).encode()).hexdigest()
