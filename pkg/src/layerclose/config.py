"""Run configuration: flat key = value text files with a strict schema."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields as dc_fields

class ConfigError(ValueError):
    """Malformed, unknown, or inconsistent configuration."""


def _parse_complex_pair(text: str) -> complex:
    try:
        a, b = text.split(",")
        return complex(float(a), float(b))
    except ValueError as exc:
        raise ConfigError(f"expected 'x,y' pair, got {text!r}") from exc


@dataclass
class RunConfig:
    """All knobs for one run; unspecified keys keep their defaults."""

    curve: str = "kite"
    seed: int = 0
    pde: str = "laplace"
    omega: float = 0.0
    side: str = "interior"
    bc: str = "dirichlet"
    data: str = "exp_cos"
    source: complex = 2.0 + 1.5j
    wave_angle: float = 0.0
    N: int = 130
    p: int = 10
    beta: float = 4.0
    n_boxes: int = 0               # 0 = default ceil(N/5)
    alpha_bad: float = 0.0         # 0 = default 10*pi/N
    alpha0: float = 0.0            # 0 = default alpha_bad/2
    path: str = "surrogate"        # native | surrogate | split
    backend: str = "direct"        # direct | tree
    method: str = "dense_lu"       # dense_lu | gmres
    gmres_tol: float = 1e-12
    grid: str = "-1.6:1.6:0.05,-1.5:1.5:0.05"
    reference: str = "analytic"    # analytic | fine_native
    contour_eps: str = ""          # comma list for predicted contours
    p_list: str = "6,10,14,18"
    beta_list: str = "2,3,4,5,6"
    sizes: str = "500,1000,2000,4000"
    threads: int = 1
    accuracy_eps: float = 1e-12    # tree backend accuracy
    cutoff_factor: float = 1.5     # near/far split cutoff multiplier

    _types = {int: int, float: float, str: str, complex: _parse_complex_pair}

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        known = {f.name: f.type for f in dc_fields(cls)
                 if not f.name.startswith("_")}
        typed = {f.name: type(getattr(cls(), f.name)) for f in dc_fields(cls)
                 if not f.name.startswith("_")}
        out = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            ty = typed[key]
            try:
                if ty is complex:
                    setattr(out, key, _parse_complex_pair(val))
                elif ty is int:
                    setattr(out, key, int(val))
                elif ty is float:
                    setattr(out, key, float(val))
                else:
                    setattr(out, key, val)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(
                    f"line {lineno}: bad value for {key}: {val!r}") from exc
        out.validate()
        return out

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def validate(self) -> None:
        checks = {
            "pde": ("laplace", "helmholtz"),
            "side": ("interior", "exterior"),
            "bc": ("dirichlet", "neumann"),
            "path": ("native", "surrogate", "split"),
            "backend": ("direct", "tree"),
            "method": ("dense_lu", "gmres"),
            "reference": ("analytic", "fine_native"),
        }
        for key, allowed in checks.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {allowed}")
        if self.curve == "random40" and self.seed == 0:
            raise ConfigError("random40 requires a nonzero seed")
        if self.pde == "helmholtz" and self.omega <= 0:
            raise ConfigError("helmholtz requires omega > 0")
        if self.N < 16:
            raise ConfigError("N must be >= 16")

    def to_text(self, skip: tuple = ()) -> str:
        lines = []
        for f in dc_fields(self):
            if f.name.startswith("_") or f.name in skip:
                continue
            v = getattr(self, f.name)
            if isinstance(v, complex):
                v = f"{v.real},{v.imag}"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        # threads is an execution knob with no effect on results
        return hashlib.sha256(
            self.to_text(skip=("threads",)).encode()).hexdigest()[:16]

    def parse_list(self, key: str, cast=float) -> list:
        text = getattr(self, key)
        if not text.strip():
            return []
        return [cast(tok) for tok in text.split(",") if tok.strip()]
