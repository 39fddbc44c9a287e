"""Run configuration: an INI-like ``[section]`` / ``key = value`` format.

Grammar
-------
* ``#`` or ``;`` starts a comment line; blank lines are ignored.
* ``[name]`` opens a section; every key must live in a section.
* ``key = value`` sets a key once; repeated keys are an error.

Sections and keys (defaults in brackets)::

    [scenario] name = smooth | random | polycrystal      (required)
               seed [0]; mean [0.08]; amplitude [0.08]   (random)
    [grid]     L, M                 [per scenario: 32/64, 64/128, 200/256]
    [model]    epsilon [per scenario: 0.025, 0.1, 0.25]; beta [1]; S [epsilon]
               c0 = inv_tau | <positive number> [inv_tau]; c0_factor [1]
               sigma [1]; dealias = true | false [false]
    [time]     T                                          (required)
               mesh = uniform | perturbed | adaptive [uniform]
               tau [min(0.01, T)]; fraction [0.4]; mesh_seed [scenario seed]
               tau_min [0.01]; tau_max [1]; gamma_ada [1e5]
               rate_energy = original | modified [original]
               ratio_cap = <number> | none | auto
                   [auto: 4.8645 capped by the stability root for adaptive
                    meshes, none for prescribed meshes]
               starter_exponent = <number> | none [4/3]
    [output]   dir; snapshot_times = comma-separated reals []

Every error carries the 1-based line number it refers to.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .adaptive import STABLE_RATIO, AdaptiveParams, ratio_root
from .model import C0Policy, ModelParams
from .scenarios import MeshPlan

SCENARIO_DEFAULTS = {
    "smooth": {"L": 32.0, "M": 64, "epsilon": 0.025},
    "random": {"L": 64.0, "M": 128, "epsilon": 0.1},
    "polycrystal": {"L": 200.0, "M": 256, "epsilon": 0.25},
}

_KEYS = {
    "scenario": {"name": str, "seed": int, "mean": float, "amplitude": float},
    "grid": {"L": float, "M": int},
    "model": {"epsilon": float, "beta": float, "S": float, "c0": str, "c0_factor": float,
              "sigma": float, "dealias": str},
    "time": {"T": float, "mesh": str, "tau": float, "fraction": float, "mesh_seed": int,
             "tau_min": float, "tau_max": float, "gamma_ada": float, "ratio_cap": str,
             "rate_energy": str, "starter_exponent": str},
    "output": {"dir": str, "snapshot_times": str},
}


class ConfigError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    L: float
    M: int
    model: ModelParams
    mesh: MeshPlan
    sigma: float = 1.0
    seed: int = 0
    scenario_params: dict = field(default_factory=dict)
    snapshot_times: tuple[float, ...] = ()
    output_dir: Path | None = None
    dealias: bool = False

    @property
    def T(self) -> float:
        return self.mesh.T


def _number(text: str) -> float:
    if "/" in text:
        num, _, den = text.partition("/")
        return float(num) / float(den)
    return float(text)


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict[str, tuple[object, int]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(lineno, f"malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in _KEYS:
                raise ConfigError(lineno, f"unknown section [{section}]")
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(lineno, f"expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(lineno, "key outside of any section")
        key, _, value = (s.strip() for s in line.partition("="))
        kind = _KEYS[section].get(key)
        if kind is None:
            raise ConfigError(lineno, f"unknown key {key!r} in [{section}]")
        if key in values[section]:
            raise ConfigError(lineno, f"duplicate key {key!r} in [{section}]")
        try:
            parsed = _number(value) if kind is float else kind(value)
        except ValueError:
            raise ConfigError(lineno, f"{key} expects {kind.__name__}, got {value!r}") from None
        values[section][key] = (parsed, lineno)
    return _build(values)


def _build(values) -> RunConfig:
    def get(section, key, default=None):
        return values.get(section, {}).get(key, (default, None))

    name, ln = get("scenario", "name")
    if name is None:
        raise ConfigError(None, "[scenario] name is required")
    if name not in SCENARIO_DEFAULTS:
        raise ConfigError(ln, f"unknown scenario {name!r}; use one of {sorted(SCENARIO_DEFAULTS)}")
    defaults = SCENARIO_DEFAULTS[name]
    seed = get("scenario", "seed", 0)[0]
    scenario_params = {}
    if name == "random":
        scenario_params = {"mean": get("scenario", "mean", 0.08)[0],
                           "amplitude": get("scenario", "amplitude", 0.08)[0]}

    L, ln_L = get("grid", "L", defaults["L"])
    M, ln_M = get("grid", "M", defaults["M"])
    if not L > 0:
        raise ConfigError(ln_L, f"L must be positive, got {L}")
    if M < 4 or M % 2:
        raise ConfigError(ln_M, f"M must be an even integer >= 4, got {M}")

    sigma, ln = get("model", "sigma", 1.0)
    if not 0.5 <= sigma <= 1.0:
        raise ConfigError(ln, f"sigma must satisfy σ ∈ [½,1], got {sigma}")
    eps, ln_eps = get("model", "epsilon", defaults["epsilon"])
    beta = get("model", "beta", 1.0)[0]
    S = get("model", "S", None)[0]
    c0_text, ln_c0 = get("model", "c0", "inv_tau")
    factor, ln_f = get("model", "c0_factor", 1.0)
    try:
        if c0_text == "inv_tau":
            policy = C0Policy.inverse_tau(None if factor == 1.0 else factor)
        else:
            policy = C0Policy.fixed(_number(c0_text))
    except ValueError as exc:
        raise ConfigError(ln_c0 or ln_f, f"bad C0 policy: {exc}") from None
    try:
        model = ModelParams(epsilon=eps, beta=beta, S=S, c0_policy=policy)
    except ValueError as exc:
        raise ConfigError(ln_eps, str(exc)) from None
    dealias_text, ln = get("model", "dealias", "false")
    if dealias_text.lower() not in ("true", "false"):
        raise ConfigError(ln, f"dealias expects true or false, got {dealias_text!r}")

    mesh = _build_mesh(values, get, sigma, seed)

    snaps_text, ln = get("output", "snapshot_times", "")
    try:
        snaps = tuple(_number(s) for s in snaps_text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(ln, f"snapshot_times must be comma-separated reals, got {snaps_text!r}") from None
    if any(not 0 <= s <= mesh.T for s in snaps):
        raise ConfigError(ln, f"snapshot times must lie in [0, T={mesh.T}]")
    out = get("output", "dir", None)[0]
    return RunConfig(
        scenario=name, L=L, M=M, model=model, mesh=mesh, sigma=sigma, seed=seed,
        scenario_params=scenario_params, snapshot_times=tuple(sorted(snaps)),
        output_dir=Path(out) if out else None, dealias=dealias_text.lower() == "true",
    )


def _build_mesh(values, get, sigma, seed) -> MeshPlan:
    T, ln_T = get("time", "T")
    if T is None:
        raise ConfigError(None, "[time] T is required")
    if not T > 0:
        raise ConfigError(ln_T, f"T must be positive, got {T}")
    kind, ln_kind = get("time", "mesh", "uniform")
    if kind not in ("uniform", "perturbed", "adaptive"):
        raise ConfigError(ln_kind, f"unknown mesh {kind!r}")
    cap_text, ln_cap = get("time", "ratio_cap", "auto")
    root = ratio_root(sigma)
    if cap_text == "none":
        cap = None
    elif cap_text == "auto":
        cap = min(STABLE_RATIO, root) if kind == "adaptive" else None
    else:
        try:
            cap = _number(cap_text)
        except ValueError:
            raise ConfigError(ln_cap, f"ratio_cap expects a number, none or auto, got {cap_text!r}") from None
        if not 1 <= cap <= root:
            raise ConfigError(ln_cap, f"ratio_cap must lie in [1, {root:.6g}] for sigma={sigma}")
    exp_text, ln_exp = get("time", "starter_exponent", "4/3")
    try:
        exponent = None if exp_text == "none" else _number(exp_text)
    except ValueError:
        raise ConfigError(ln_exp, f"starter_exponent expects a number or none, got {exp_text!r}") from None
    rate_energy, ln_rate = get("time", "rate_energy", "original")
    if rate_energy not in ("original", "modified"):
        raise ConfigError(ln_rate, f"rate_energy must be original or modified, got {rate_energy!r}")
    try:
        if kind == "adaptive":
            ap = AdaptiveParams(
                tau_min=get("time", "tau_min", 0.01)[0],
                tau_max=get("time", "tau_max", 1.0)[0],
                gamma_ada=get("time", "gamma_ada", 1e5)[0],
                ratio_cap=cap,
                rate_energy=rate_energy,
            )
            return MeshPlan("adaptive", T=T, adaptive=ap, starter_exponent=exponent)
        tau, _ = get("time", "tau", min(0.01, T))
        return MeshPlan(
            kind, T=T, tau=tau, fraction=get("time", "fraction", 0.4)[0],
            seed=get("time", "mesh_seed", seed)[0], starter_exponent=exponent, ratio_cap=cap,
        )
    except ValueError as exc:
        raise ConfigError(ln_kind, str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())

