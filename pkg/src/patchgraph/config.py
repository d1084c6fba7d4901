"""Run configuration: defaults, key=value files, override precedence.

Every tunable of the solver and tracker lives on :class:`RunConfig`
with its default value.  Overrides apply in precedence order
flag > file > default, and the fully resolved configuration is echoed
into every report so runs are reproducible from their outputs alone.
"""

import dataclasses

from .errors import FormatError, InputError, ParameterError
from .graphlearn import VARIANTS, GraphParams


@dataclasses.dataclass
class RunConfig:
    """Solver and tracker settings with benchmark defaults."""

    # graph solver
    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 10.0
    lambda1: float = 5.0
    lambda2: float = 0.5
    lambda3: float = 1.0
    lambda4: float = 1.0
    xi: int = 6
    mu0: float = 0.1
    mu_max: float = 1e10
    rho: float = 1.1
    tol: float = 1e-6
    max_iter: int = 100
    unscaled_q: bool = False
    # tracker
    omega: float = 0.67
    theta: float = 0.25
    sigma: float = 37.0
    stride: int = 2
    budget: int = 100
    c: float = 100.0
    reprocess: int = 10
    scale_interval: int = 3
    n_scale_samples: int = 100
    scale_std_s: float = 0.05
    scale_std_a: float = 0.01
    scale_std_x: float = 1.0
    scale_std_y: float = 1.0
    xi_s: float = 0.01
    svrg_epochs: int = 2
    svrg_step: float = 0.1
    displacement_trigger: float = 5.0
    window_factor: float = 0.8
    window_factor_wide: float = 1.0
    polar_radii: int = 5
    polar_angles: int = 16
    alg2_literal: bool = False
    # run plumbing
    variant: str = "full"
    seed: int = 0

    def validate(self):
        if self.variant not in VARIANTS:
            raise ParameterError(
                f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if not 0.0 <= self.omega <= 1.0:
            raise ParameterError("omega must lie in [0, 1]")
        if self.stride < 1 or self.scale_interval < 1:
            raise ParameterError("stride and scale_interval must be >= 1")
        self.graph_params().validate()
        return self

    def graph_params(self):
        return GraphParams(
            alpha=self.alpha, beta=self.beta, gamma=self.gamma,
            lambda1=self.lambda1, lambda2=self.lambda2,
            lambda3=self.lambda3, lambda4=self.lambda4, xi=self.xi,
            mu0=self.mu0, mu_max=self.mu_max, rho=self.rho, tol=self.tol,
            max_iter=self.max_iter, unscaled_q=self.unscaled_q)

    def tracker_kwargs(self):
        """Keyword arguments for :class:`tracker.PatchGraphTracker`."""
        return dict(
            params=self.graph_params(), variant=self.variant,
            seed=self.seed, omega=self.omega, theta=self.theta,
            sigma=self.sigma, stride=self.stride, budget=self.budget,
            c=self.c, reprocess=self.reprocess,
            scale_interval=self.scale_interval,
            n_scale_samples=self.n_scale_samples,
            scale_stds=(self.scale_std_s, self.scale_std_a,
                        self.scale_std_x, self.scale_std_y),
            xi_s=self.xi_s, svrg_epochs=self.svrg_epochs,
            svrg_step=self.svrg_step,
            displacement_trigger=self.displacement_trigger,
            window_factor=self.window_factor,
            window_factor_wide=self.window_factor_wide,
            polar_radii=self.polar_radii, polar_angles=self.polar_angles,
            alg2_literal=self.alg2_literal)

    def echo_lines(self):
        """Sorted ``key = value`` lines of the resolved configuration."""
        fields = dataclasses.asdict(self)
        return [f"{k} = {fields[k]}" for k in sorted(fields)]


def _field_kind(annotation):
    # dataclass annotations may be type objects or plain strings
    return annotation.__name__ if isinstance(annotation, type) else annotation


_FIELD_TYPES = {f.name: _field_kind(f.type)
                for f in dataclasses.fields(RunConfig)}


def _coerce(name, raw, path=None, line=None):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise FormatError(f"bad value for {name}: {exc}", path=path,
                          line=line) from exc


def read_config_file(path):
    """Parse a ``key = value`` config file into an override dict.

    Blank lines and ``#`` comments are skipped; unknown keys raise a
    format error with the offending line number.
    """
    overrides = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from exc
    with fh:
        for lineno, text in enumerate(fh, start=1):
            line = text.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError("expected key = value", path=path,
                                  line=lineno)
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise FormatError(f"unknown config key {key!r}", path=path,
                                  line=lineno)
            overrides[key] = _coerce(key, raw, path=path, line=lineno)
    return overrides


def resolve_config(file_path=None, flag_overrides=None):
    """Build a validated RunConfig: flag > file > default."""
    cfg = RunConfig()
    if file_path is not None:
        for key, value in read_config_file(file_path).items():
            setattr(cfg, key, value)
    if flag_overrides:
        for key, value in flag_overrides.items():
            if value is not None:
                setattr(cfg, key, value)
    return cfg.validate()
