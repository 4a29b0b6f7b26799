"""Flat ``key = value`` run configuration.

One option per line; ``#`` starts a comment; blank lines are ignored.
Unknown keys and malformed values raise :class:`ConfigError` carrying the
line number and field name.
"""

from dataclasses import dataclass, fields

from ..errors import ConfigError

PROBLEMS = ("phase_retrieval", "sparse_pca", "lasso", "quadratic")
MODES = ("async", "sync", "drs", "equivalence_check")


@dataclass
class RunConfig:
    problem: str = "quadratic"
    graph: str = "ring"
    # explicit graphs: "1-2, 2-3, ..." and node sets "1,2,3;3,5;4,6"
    edges: str = ""
    cover: str = ""
    n: int = 3
    # per-node variable size; phase retrieval uses the complex dimension
    d: int = 2
    m_per_agent: int = 30
    noise_sigma: float = 0.01
    entry_sigma: float = 0.1
    lam: float = 0.0
    beta: str = "auto"
    gamma: float = 0.0
    activation: str = "fixed"
    subset_size: int = 0
    bernoulli_prob: float = 0.0
    iterations: int = 100
    seed: int = 1
    activation_seed: int = -1
    init: str = "auto"
    inner_tol: float = 0.0
    inner_max_iters: int = 0
    smoothness_radius: float = 1.0
    smoothness_samples: int = 100
    beta_safety: float = 1.0
    track_merit: bool = True
    timing: bool = True
    workers: int = 1
    output: str = ""
    mode: str = "async"

    def resolved_beta(self):
        """Numeric beta, or ``None`` when it is to be chosen automatically."""
        if self.gamma > 0:
            return 1.0 / self.gamma
        if self.beta == "auto":
            return None
        return float(self.beta)

    def to_text(self):
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool):
                val = "true" if val else "false"
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, raw, line):
    kind = _TYPES[key]
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        if kind in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {getattr(kind, '__name__', kind)}", key, line) from None
    return raw


def parse_config(text):
    """Parse config text into a validated :class:`RunConfig`."""
    cfg = RunConfig()
    where = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", None, lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError("unknown option", key, lineno)
        if key in seen:
            raise ConfigError("option given twice", key, lineno)
        seen.add(key)
        setattr(cfg, key, _convert(key, val, lineno))
        where[key] = lineno
    validate(cfg, where)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def validate(cfg, where=None):
    """Check ranges and mode-specific requirements; raises :class:`ConfigError`."""
    where = where or {}

    def fail(msg, key):
        raise ConfigError(msg, key, where.get(key))

    if cfg.problem not in PROBLEMS:
        fail(f"must be one of {', '.join(PROBLEMS)}", "problem")
    if cfg.mode not in MODES:
        fail(f"must be one of {', '.join(MODES)}", "mode")
    if cfg.graph not in ("ring", "explicit"):
        fail("must be 'ring' or 'explicit'", "graph")
    if cfg.graph == "explicit" and (not cfg.edges.strip() or not cfg.cover.strip()):
        fail("explicit graphs need both 'edges' and 'cover'", "cover")
    for key in ("n", "d", "m_per_agent", "iterations", "workers", "smoothness_samples"):
        if getattr(cfg, key) < 1:
            fail("must be >= 1", key)
    if cfg.graph == "ring" and cfg.n < 3:
        fail("a ring needs n >= 3", "n")
    for key in ("noise_sigma", "entry_sigma", "lam", "gamma", "inner_tol", "inner_max_iters",
                "subset_size", "bernoulli_prob"):
        if getattr(cfg, key) < 0:
            fail("must be nonnegative", key)
    if cfg.smoothness_radius <= 0:
        fail("must be positive", "smoothness_radius")
    if cfg.beta_safety < 1:
        fail("must be >= 1", "beta_safety")
    if cfg.beta != "auto":
        try:
            b = float(cfg.beta)
        except ValueError:
            fail("must be a positive number or 'auto'", "beta")
        if not b > 0:
            fail("must be a positive number or 'auto'", "beta")
    if cfg.activation not in ("fixed", "bernoulli"):
        fail("must be 'fixed' or 'bernoulli'", "activation")
    if cfg.activation == "bernoulli" and not 0 < cfg.bernoulli_prob <= 1:
        fail("bernoulli activation needs 0 < bernoulli_prob <= 1", "bernoulli_prob")
    if cfg.init not in ("auto", "zeros", "gaussian"):
        fail("must be 'auto', 'zeros' or 'gaussian'", "init")
    return cfg
