"""Flat key-value experiment configuration.

Config files are plain text, one `key = value` per line, `#` starts a
comment.  Values are parsed on demand as int, float, string, or
comma-separated lists.
"""

from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Bad or missing configuration; mapped to exit code 2 by the CLI."""


def parse_kv_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_kv_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_kv_text(path.read_text())


EXPERIMENT_KINDS = ("mc-comparison", "mcmc-cauchy", "cgmy-pricing", "diagnostics")

_PAPER_SCALE = {
    "mc-comparison": {"replicates": 100, "n": 100000},
    "mcmc-cauchy": {"replicates": 100, "n": 100000, "burn_in": 5000},
    "cgmy-pricing": {"replicates": 100, "n": 10000, "burn_in": 5000,
                     "dims": (2, 4, 6, 8)},
    "diagnostics": {},
}


@dataclass
class ExperimentConfig:
    """Typed view over a flat config, with desk-scale defaults."""

    kind: str
    seed: int = 1
    out_dir: str = "results"
    replicates: int = 20
    n: int = 20000
    burn_in: int = 5000
    d: int = 2
    alphas: tuple = (1.0, 1.2, 1.4, 1.6, 1.8)
    dims: tuple = (1, 2)
    tuning_grid: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    mala_grid: tuple = (0.01, 0.05, 0.1, 0.5)
    # CGMY parameters (paper's study values as defaults)
    cgmy_c: float = 1.0
    cgmy_g: float = 5.0
    cgmy_m: float = 5.0
    cgmy_y: float = 0.5
    rate: float = 0.1
    maturity: float = 1.0
    damping: float = -1.5
    strike: float = 100.0
    spot: float = 100.0
    alpha_q: float = 2.0
    theta: float = 2.0
    # diagnostics target description
    target: str = "ecsd"
    alpha: float = 1.5
    sigma_spec: str = "identity"
    nu_spec: str = ""
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, kv: dict, kind: str = None, seed: int = None,
                     out_dir: str = None, paper_scale: bool = False) -> "ExperimentConfig":
        kv = dict(kv)
        cfg_kind = kv.pop("experiment", None) or kind
        if cfg_kind is None:
            raise ConfigError("missing experiment kind")
        if kind is not None and cfg_kind != kind:
            raise ConfigError(
                f"config says experiment = {cfg_kind!r} but subcommand is {kind!r}")
        if cfg_kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment {cfg_kind!r}; "
                              f"expected one of {EXPERIMENT_KINDS}")
        cfg = cls(kind=cfg_kind, raw=dict(kv))

        def take(key, conv, attr=None):
            if key in kv:
                try:
                    setattr(cfg, attr or key, conv(kv.pop(key)))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {key!r}: {exc}") from exc

        as_int = int
        as_float = float
        as_floats = lambda s: tuple(float(v) for v in s.split(",") if v.strip())
        as_ints = lambda s: tuple(int(v) for v in s.split(",") if v.strip())

        take("seed", as_int)
        take("out", str, "out_dir")
        take("replicates", as_int)
        take("n", as_int)
        take("burn_in", as_int)
        take("d", as_int)
        take("alphas", as_floats)
        take("dims", as_ints)
        take("tuning_grid", as_floats)
        take("mala_grid", as_floats)
        take("c", as_float, "cgmy_c")
        take("g", as_float, "cgmy_g")
        take("m", as_float, "cgmy_m")
        take("y", as_float, "cgmy_y")
        take("rate", as_float)
        take("maturity", as_float)
        take("damping", as_float)
        take("strike", as_float)
        take("spot", as_float)
        take("alpha_q", as_float)
        take("theta", as_float)
        take("target", str)
        take("alpha", as_float)
        take("sigma", str, "sigma_spec")
        take("nu", str, "nu_spec")
        if kv:
            raise ConfigError(f"unknown config keys: {sorted(kv)}")

        if paper_scale:
            for attr, value in _PAPER_SCALE[cfg_kind].items():
                setattr(cfg, attr, value)
        if seed is not None:
            cfg.seed = seed
        if out_dir is not None:
            cfg.out_dir = out_dir
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, **kwargs) -> "ExperimentConfig":
        return cls.from_mapping(load_kv_file(path), **kwargs)

    def validate(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.n < 1 or self.burn_in < 0:
            raise ConfigError("need n >= 1 and burn_in >= 0")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")
        if self.kind == "mc-comparison":
            if not self.alphas or any(not 0.0 < a <= 2.0 for a in self.alphas):
                raise ConfigError("alphas must lie in (0, 2]")
        if self.kind == "cgmy-pricing":
            if not -self.cgmy_g < self.damping < 0.0:
                raise ConfigError("damping must satisfy -g < R < 0")
            if not self.dims or any(dd < 1 for dd in self.dims):
                raise ConfigError("dims must be positive")
            if self.strike <= 0.0 or self.spot <= 0.0:
                raise ConfigError("strike and spot must be positive")
        if self.kind in ("mcmc-cauchy",) and not self.tuning_grid:
            raise ConfigError("tuning_grid must be nonempty")
        if self.kind == "diagnostics":
            if self.target not in ("ecsd", "cauchy", "cgmy", "levy-triplet"):
                raise ConfigError(f"unknown diagnostics target {self.target!r}")
            if self.target in ("ecsd",) and not 0.0 < self.alpha <= 2.0:
                raise ConfigError("alpha must lie in (0, 2]")
