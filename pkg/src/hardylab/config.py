"""Experiment configuration: TOML files, defaults, and the built-in scenarios."""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .errors import HardyLabError
from .mesh import Interval, Radial, build_mesh
from .parabolic import EvolutionConfig
from .weights import WeightPair, weight_from_dict

COMMANDS = ("check-weights", "eigen", "eigen-study", "evolve", "sweep", "truncation-study")


class ConfigError(HardyLabError):
    """Unreadable or malformed configuration (CLI exit code 2)."""

    category = "parse"


@dataclass
class MeshSection:
    a: float = 0.0
    b: float = 1.0
    n: int = 256
    grading: float = 1.0
    metric: str = "interval"
    N: int = 1


@dataclass
class PhysicsSection:
    p: float = 3.0
    lam: float | None = None
    lam_fraction: float | None = None
    m: float | None = None
    m_list: list | None = None
    q: float | None = None
    s: float | None = None
    lam_lo: float | None = None
    lam_hi: float | None = None
    bisection_steps: int = 12
    hardy_constant: float | None = None


@dataclass
class TimeSection:
    dt: float = 1e-3
    T: float = 1.0
    dt_min: float = 1e-30


@dataclass
class SolverSection:
    tol: float = 1e-9
    max_iters: int = 20000
    seed: int = 0
    eps: float | None = None
    picard_tol: float = 1e-10
    picard_max: int = 200
    blowup_factor: float = 1e6
    relax: float | None = None


@dataclass
class InitialSection:
    shape: str = "bump"  # bump | zero | file
    amplitude: float = 1.0
    path: str | None = None


@dataclass
class IOSection:
    out: str = "out"


_SECTIONS = {
    "mesh": MeshSection,
    "physics": PhysicsSection,
    "time": TimeSection,
    "solver": SolverSection,
    "initial": InitialSection,
    "io": IOSection,
}


@dataclass
class ExperimentConfig:
    command: str = "eigen"
    weights: dict = field(default_factory=lambda: {
        "omega1": {"kind": "constant", "value": 1.0},
        "omega2": {"kind": "constant", "value": 1.0},
    })
    mesh: MeshSection = field(default_factory=MeshSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    time: TimeSection = field(default_factory=TimeSection)
    solver: SolverSection = field(default_factory=SolverSection)
    initial: InitialSection = field(default_factory=InitialSection)
    io: IOSection = field(default_factory=IOSection)
    scenario: str | None = None
    base_dir: Path | None = field(default=None, compare=False)

    # --- construction ----------------------------------------------------

    @classmethod
    def from_dict(cls, data, base_dir=None):
        data = copy.deepcopy(dict(data))
        scenario = data.pop("scenario", None)
        if scenario is not None:
            scenarios = builtin_scenarios()
            if scenario not in scenarios:
                raise ConfigError(f"unknown scenario {scenario!r}; known: {sorted(scenarios)}")
            cfg = copy.deepcopy(scenarios[scenario])
        else:
            cfg = cls()
        cfg.scenario = scenario
        cfg.base_dir = base_dir
        if "command" in data:
            cfg.command = data.pop("command")
        if "weights" in data:
            w = data.pop("weights")
            if not isinstance(w, dict) or not set(w) <= {"omega1", "omega2"}:
                raise ConfigError("[weights] must contain only omega1 and omega2 tables")
            cfg.weights = {**cfg.weights, **copy.deepcopy(w)}
        for name, section_cls in _SECTIONS.items():
            if name not in data:
                continue
            values = data.pop(name)
            if not isinstance(values, dict):
                raise ConfigError(f"[{name}] must be a table")
            known = {f.name for f in fields(section_cls)}
            unknown = set(values) - known
            if unknown:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
            section = getattr(cfg, name)
            for key, value in values.items():
                setattr(section, key, value)
        if data:
            raise ConfigError(f"unknown top-level keys: {sorted(data)}")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.mesh.metric not in ("interval", "radial"):
            raise ConfigError(f"mesh.metric must be 'interval' or 'radial', got {self.mesh.metric!r}")
        if self.initial.shape not in ("bump", "zero", "file"):
            raise ConfigError(f"initial.shape must be bump, zero or file, got {self.initial.shape!r}")
        for key in ("omega1", "omega2"):
            if not isinstance(self.weights.get(key), dict) or "kind" not in self.weights[key]:
                raise ConfigError(f"weights.{key} needs a 'kind'")
        # precondition checks (exit code 3) happen when objects are built

    # --- serialisation ---------------------------------------------------

    def to_dict(self):
        out = {"command": self.command, "weights": copy.deepcopy(self.weights)}
        for name in _SECTIONS:
            section = {k: v for k, v in asdict(getattr(self, name)).items() if v is not None}
            out[name] = section
        return out

    def dumps(self):
        return tomli_w.dumps(self.to_dict())

    # --- builders --------------------------------------------------------

    def build_mesh(self):
        m = self.mesh
        metric = Radial(int(m.N)) if m.metric == "radial" else Interval()
        return build_mesh(float(m.a), float(m.b), int(m.n), float(m.grading), metric)

    def build_weights(self):
        return WeightPair(
            weight_from_dict(self.weights["omega1"], self.base_dir),
            weight_from_dict(self.weights["omega2"], self.base_dir),
        )

    def evolution_config(self, lam=0.0, m=None):
        t, s = self.time, self.solver
        return EvolutionConfig(
            p=float(self.physics.p), lam=float(lam), m=m, dt=float(t.dt), T=float(t.T),
            eps=s.eps, picard_max=int(s.picard_max), picard_tol=float(s.picard_tol),
            blowup_factor=float(s.blowup_factor), dt_min=float(t.dt_min), relax=s.relax,
        )


def builtin_scenarios():
    """Two classical admissible weight pairs plus a linear p=2 control case."""
    radial = ExperimentConfig(
        command="eigen",
        weights={
            "omega1": {"kind": "power_radial", "exponent": -3.0},
            "omega2": {"kind": "constant", "value": 1.0},
        },
        mesh=MeshSection(a=0.0, b=1.0, n=512, grading=2.0, metric="radial", N=4),
        physics=PhysicsSection(p=3.0, q=4.0, s=6.0, m_list=[10.0, 100.0, 1000.0, 10000.0],
                               lam_fraction=0.5),
    )
    gamma = -1.0
    distance = ExperimentConfig(
        command="eigen",
        weights={
            "omega1": {"kind": "distance_boundary", "exponent": gamma - 3.0, "boundary": [0.0, 1.0]},
            "omega2": {"kind": "distance_boundary", "exponent": gamma, "boundary": [0.0, 1.0]},
        },
        mesh=MeshSection(a=0.0, b=1.0, n=512, grading=2.0, metric="interval", N=1),
        physics=PhysicsSection(p=3.0, q=4.0, s=6.0, m_list=[10.0, 100.0, 1000.0, 10000.0],
                               lam_fraction=0.5),
    )
    control = ExperimentConfig(
        command="eigen",
        mesh=MeshSection(a=0.0, b=1.0, n=256, grading=1.0, metric="interval", N=1),
        physics=PhysicsSection(p=2.0, lam_fraction=0.5),
    )
    scenarios = {"radial-power": radial, "distance-pair": distance, "unit-interval-p2": control}
    for name, cfg in scenarios.items():
        cfg.scenario = name
    return scenarios
