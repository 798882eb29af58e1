"""File formats, run configuration, built-in fixtures and the command line."""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fir_nakamura as fir
from . import hybrid, iir_filters as iir
from .freq_solver import SingularDynamicStiffnessError, solve_frequency_domain
from .impedance import (ImpedanceFunction, OutOfRangeError, cone_impedances,
                        rod_elastic_foundation, rod_exponential_area)
from .model import (DofLayout, GroundMotion, InvalidParameterError, NonConvergenceError,
                    SystemModel, _story_springs, period_lengthening, shear_building_matrices,
                    table41_fixture, table52_fixture, table63_building)
from .newmark import NewmarkParams, SingularStiffnessError, run_ground_motion, stability_map
from .records import G, synthetic_record

log = logging.getLogger("ssikit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NONCONVERGENCE = 4


class ParseError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# ground motions and impedance tables

def read_ground_motion(path, dt, scale=1.0) -> GroundMotion:
    """Whitespace-separated numbers, read row by row."""
    vals = []
    with open(path) as fh:
        for k, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            for tok in s.split():
                try:
                    vals.append(float(tok))
                except ValueError:
                    raise ParseError(f"cannot parse {tok!r}", k) from None
    if not vals:
        raise ParseError("no samples found")
    return GroundMotion(float(dt), np.array(vals), float(scale))


def write_ground_motion(path, values):
    np.savetxt(path, np.asarray(values, dtype=float), fmt="%.17g")


def read_impedance_table(path, nearest=False) -> ImpedanceFunction:
    """Three columns: frequency (Hz), real part, full imaginary part."""
    rows = []
    with open(path) as fh:
        for k, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            parts = s.split()
            if len(parts) != 3:
                raise ParseError(f"expected 3 columns, found {len(parts)}", k)
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                raise ParseError("non-numeric entry", k) from None
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    d = np.diff(arr[:, 0])
    if np.any(d < 0):
        raise ParseError("frequencies must be non-decreasing")
    dup = np.r_[False, d == 0]
    if np.any(dup):
        prev = arr[np.r_[dup[1:], False]]
        if not np.array_equal(prev[:, 1:], arr[dup][:, 1:]):
            raise ParseError("conflicting rows for a repeated frequency")
        arr = arr[~dup]
    if arr.shape[0] < 4:
        raise ParseError("a table needs at least 4 rows")
    return ImpedanceFunction.table(2 * np.pi * arr[:, 0], arr[:, 1] + 1j * arr[:, 2], nearest)


def write_impedance_table(path, S, freqs_hz, header=""):
    f = np.asarray(freqs_hz, dtype=float)
    s = np.asarray(S(2 * np.pi * f), dtype=complex)
    np.savetxt(path, np.column_stack([f, s.real, s.imag]), fmt="%.17g",
               header=header or "f(Hz) real imag")


# ---------------------------------------------------------------------------
# response export

def write_csv(path, t, columns: dict, raw=False):
    names = list(columns)
    data = np.column_stack([np.asarray(t, dtype=float)] + [np.asarray(columns[n]) for n in names])
    if raw:
        np.savetxt(path, data, fmt="%.17g")
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for row in data:
            w.writerow([f"{x:.17g}" for x in row])


def read_csv(path):
    """Returns ``(header, data)``; raw files get an empty header."""
    with open(path) as fh:
        first = fh.readline()
    if "," in first:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return first.strip().split(","), data
    return [], np.loadtxt(path, ndmin=2)


def history_columns(th, velocity=False, acceleration=False):
    cols = {}
    for i, lab in enumerate(th.labels):
        cols[lab] = th.u[:, i]
    if velocity:
        for i, lab in enumerate(th.labels):
            cols[f"v_{lab}"] = th.v[:, i]
    if acceleration:
        for i, lab in enumerate(th.labels):
            cols[f"a_{lab}"] = th.a[:, i]
    return cols


def write_diagnostics(path, diagnostics):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "iteration", "eps"])
        for win, it, eps in diagnostics:
            w.writerow([win, it, f"{eps:.17g}"])


def write_pseudo_force(path, fps):
    np.savetxt(path, np.atleast_2d(np.asarray(fps, dtype=float).T).T, fmt="%.17g")


# ---------------------------------------------------------------------------
# fixtures

@dataclass
class Fixture:
    """Everything the solvers need for one built-in case."""

    name: str
    physical: object = None          # SystemModel integrated in time
    actual: tuple | None = None      # (base model, C(w), K(w)) for the frequency solver
    hybrid_model: object = None      # model without the frequency-dependent terms
    impedances: list = field(default_factory=list)
    hybrid_boundary: list | None = None
    static_stiffness: list = field(default_factory=list)
    nonlinear: object = None         # physical model with yielding stories
    extra: dict = field(default_factory=dict)


def _table41(name):
    f = table41_fixture()
    sway, rock = cone_impedances(f.found)
    fx = Fixture(name, physical=f.physical(), actual=f.actual(), hybrid_model=f.base(),
                 impedances=[sway, rock], static_stiffness=[f.found.k0h, f.found.k0r],
                 extra=dict(fixture=f))
    return fx


def _table52(name):
    f = table52_fixture()
    fy = f.with_yield(f.extra["epsy"])
    B = fy.base(include_foundation=True)
    rock = cone_impedances(f.found)[1]
    return Fixture(name, physical=fy.physical(), actual=f.actual(), hybrid_model=B,
                   impedances=[rock], hybrid_boundary=[B.layout.boundary[1]],
                   static_stiffness=[f.found.k0r], nonlinear=fy.physical(),
                   extra=dict(fixture=fy))


def _table63(name):
    """Fixed-base shear building with yielding stories."""
    stories = table63_building()
    M, K = shear_building_matrices(stories)
    n = M.shape[0]
    labels = tuple(f"u{i + 1}" for i in range(n))
    P = SystemModel(M, np.zeros_like(M), K, np.ones(n), DofLayout(labels),
                    _story_springs(stories))
    return Fixture(name, physical=P, nonlinear=P, extra=dict(stories=stories))


def appendix_a_impedance(K=1.0, c1_over_f=20 * np.pi):
    """Rod with exponentially growing area; ``a0 = w f / c1``."""
    return ImpedanceFunction(lambda w: K * rod_exponential_area(np.asarray(w) / c1_over_f))


def appendix_b_impedance(K=1.0, c1_alpha=1.0, regular=True):
    part = 1 if regular else 0
    return ImpedanceFunction(lambda w: K * rod_elastic_foundation(np.asarray(w) / c1_alpha)[part])


def appendix_d_case(sway_damping_factor=1.0):
    """SDOF on sway and rocking springs with tap-represented impedances.

    The sway impedance is that of a rod with exponentially growing area
    (static stiffness ``k0h``, ``f/c1 = r / (4 Vs)``) and the rocking
    impedance is the condensed cone model; both are fitted with 20 points
    over 0-20 Hz.
    """
    f = table41_fixture(a0_fix=2.0)
    fd = f.found
    scale = f.extra["r"] / f.Vs / 4

    def sway(w):
        s = fd.k0h * rod_exponential_area(np.asarray(w) * scale)
        return s.real + 1j * sway_damping_factor * s.imag

    rock = cone_impedances(fd)[1]
    w = fir.fir_frequency_grid(20.0, 20)
    dt = 1 / 20.0
    filters = [fir.fit_fir(sway, w, dt), fir.fit_fir(rock, w, dt)]
    B = f.base()
    return dict(model=B, filters=filters, dofs=list(B.layout.boundary),
                params=NewmarkParams(dt), fixture=f)


FIXTURES = {
    "table4-1-physical": _table41,
    "table4-1-actual": _table41,
    "table5-1-sdof": _table41,
    "table5-2-mdof": _table52,
    "table6-3-building": _table63,
    "appendixA-rod": lambda name: Fixture(name, impedances=[appendix_a_impedance()]),
    "appendixB-rod": lambda name: Fixture(name, impedances=[appendix_b_impedance()]),
    "appendixD-example": lambda name: Fixture(name, extra=appendix_d_case()),
}


def load_fixture(name) -> Fixture:
    try:
        return FIXTURES[name](name)
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


# ---------------------------------------------------------------------------
# run configuration

SOLVERS = ("newmark", "freq", "hftd", "htfd", "fir-newmark")


@dataclass
class RunConfig:
    fixture: str
    solver: str
    record: str = "synthetic"
    dt: float = 0.01
    scale: float = G
    yield_factor: float | None = None
    impedance_tables: dict = field(default_factory=dict)
    tol: float = 1e-3
    max_iter: int = 1000
    window_length: float | None = None
    decay_length: int = 100
    zero_pad_length: int = 100
    k_ref: list | None = None
    c_ref: str = "formula"
    fir_fmax: float = 25.0
    fir_points: int = 20
    output: str = "response.csv"
    diagnostics: str | None = None
    raw: bool = False
    velocity: bool = False
    acceleration: bool = False

    def validate(self):
        if self.fixture not in FIXTURES:
            raise ConfigError(f"unknown fixture {self.fixture!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.record != "synthetic" and not os.path.isfile(self.record):
            raise ConfigError(f"ground motion file {self.record!r} not found")
        for p in self.impedance_tables.values():
            if not os.path.isfile(p):
                raise ConfigError(f"impedance table {p!r} not found")
        if self.solver in ("hftd", "htfd") and self.window_length is None:
            raise ConfigError(f"solver {self.solver} needs window_length")
        if not self.dt > 0 or not self.tol > 0 or self.max_iter < 1:
            raise ConfigError("dt and tol must be positive and max_iter at least 1")
        if self.c_ref not in ("formula", "c_inf"):
            try:
                float(self.c_ref)
            except ValueError:
                raise ConfigError("c_ref must be 'formula', 'c_inf' or a number") from None
        return self


def _floats(s):
    return [float(x) for x in s.replace(",", " ").split()]


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cp.read(path):
        raise ConfigError(f"cannot read config {path!r}")
    try:
        m = cp["model"]
        s = cp["solver"]
    except KeyError as exc:
        raise ConfigError(f"missing section {exc}") from None
    gm = cp["ground_motion"] if cp.has_section("ground_motion") else {}
    out = cp["output"] if cp.has_section("output") else {}
    imp = dict(cp["impedance"]) if cp.has_section("impedance") else {}
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if p == "synthetic" or os.path.isabs(p) else os.path.join(base, p)

    try:
        cfg = RunConfig(
            fixture=m.get("fixture", ""),
            solver=s.get("type", ""),
            record=resolve(gm.get("path", "synthetic")),
            dt=float(gm.get("dt", 0.01)),
            scale=float(gm.get("scale", G)),
            yield_factor=float(m["yield_factor"]) if "yield_factor" in m else None,
            impedance_tables={k: resolve(v) for k, v in imp.items()},
            tol=float(s.get("tol", 1e-3)),
            max_iter=int(s.get("max_iter", 1000)),
            window_length=float(s["window_length"]) if "window_length" in s else None,
            decay_length=int(s.get("decay_length", 100)),
            zero_pad_length=int(s.get("zero_pad_length", 100)),
            k_ref=_floats(s["k_ref"]) if "k_ref" in s else None,
            c_ref=s.get("c_ref", "formula"),
            fir_fmax=float(s.get("fir_fmax", 25.0)),
            fir_points=int(s.get("fir_points", 20)),
            output=resolve(out.get("path", "response.csv")),
            diagnostics=resolve(out["diagnostics"]) if "diagnostics" in out else None,
            raw=cp.getboolean("output", "raw", fallback=False),
            velocity=cp.getboolean("output", "velocity", fallback=False),
            acceleration=cp.getboolean("output", "acceleration", fallback=False),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def _ground_motion(cfg: RunConfig) -> GroundMotion:
    if cfg.record == "synthetic":
        return GroundMotion(cfg.dt, synthetic_record(dt=cfg.dt), cfg.scale)
    return read_ground_motion(cfg.record, cfg.dt, cfg.scale)


def _apply_yield(fx: Fixture, gm, factor):
    """Yield displacement ``factor * max |u_1|`` of the linear response."""
    f = fx.extra["fixture"]
    lin = run_ground_motion(f.physical(), gm.values, gm.dt)
    uy = factor * np.max(np.abs(lin.u[:, 0]))
    fy = f.with_yield(uy)
    fx.physical = fy.physical()
    fx.hybrid_model = fy.base(include_foundation=fx.hybrid_boundary is not None)
    return fx


def _impedances(fx: Fixture, cfg: RunConfig):
    S = list(fx.impedances)
    names = ["sway", "rocking"] if len(S) == 2 else ["rocking"]
    for i, nm in enumerate(names):
        if nm in cfg.impedance_tables:
            S[i] = read_impedance_table(cfg.impedance_tables[nm])
    return S


def run(cfg: RunConfig) -> int:
    """Run one analysis and write its outputs; returns the exit status."""
    try:
        cfg.validate()
        fx = load_fixture(cfg.fixture)
        gm = _ground_motion(cfg)
        if cfg.yield_factor is not None:
            if "fixture" not in fx.extra:
                raise ConfigError("yield_factor is not supported for this fixture")
            fx = _apply_yield(fx, gm, cfg.yield_factor)
    except (ConfigError, ParseError, InvalidParameterError, OSError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    diags = None
    status = EXIT_OK
    try:
        th, diags, converged = _solve(fx, cfg, gm)
        if not converged:
            status = EXIT_NONCONVERGENCE
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        log.error("no convergence: %s", exc)
        return EXIT_NONCONVERGENCE
    except (SingularStiffnessError, SingularDynamicStiffnessError, OutOfRangeError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    write_csv(cfg.output, th.t, history_columns(th, cfg.velocity, cfg.acceleration), cfg.raw)
    if diags is not None and cfg.diagnostics:
        write_diagnostics(cfg.diagnostics, diags)
    if status != EXIT_OK:
        log.error("solver did not meet its convergence criterion")
    return status


def _solve(fx: Fixture, cfg: RunConfig, gm: GroundMotion):
    if cfg.solver == "newmark":
        if fx.physical is None:
            raise ConfigError("fixture has no time-domain model")
        return run_ground_motion(fx.physical, gm.values, gm.dt), None, True
    if cfg.solver == "freq":
        if fx.actual is None:
            raise ConfigError("fixture has no frequency-domain model")
        base, C_of, K_of = fx.actual
        if cfg.fixture.endswith("physical"):
            P = fx.physical
            th = solve_frequency_domain(P.M, P.C, P.K, P.L, gm, labels=P.layout.labels)
        else:
            th = solve_frequency_domain(base.M, C_of, K_of, base.L, gm, labels=base.layout.labels)
        return th, None, True
    if cfg.solver == "fir-newmark":
        if "filters" in fx.extra:
            d = fx.extra
            return fir.fir_newmark_solve(d["model"], d["filters"], d["dofs"], gm), None, True
        if fx.hybrid_model is None:
            raise ConfigError("fixture has no boundary model")
        S = _impedances(fx, cfg)
        w = fir.fir_frequency_grid(cfg.fir_fmax, cfg.fir_points)
        filters = [fir.fit_fir(s, w, 1.0 / cfg.fir_fmax) for s in S]
        dofs = fx.hybrid_boundary or list(fx.hybrid_model.layout.boundary)
        hm = fx.hybrid_model
        if abs(1.0 / cfg.fir_fmax - gm.dt) < 1e-12:
            ok, rho = fir.fir_stability_certificate(hm.M, hm.C, hm.K, filters, dofs,
                                                    NewmarkParams(gm.dt))
            if not ok:
                log.warning("tap recursion is not certified stable (max rho %.3g)", np.max(rho))
        th = fir.fir_newmark_solve(fx.hybrid_model, filters, dofs, gm)
        return th, None, True
    if fx.hybrid_model is None:
        raise ConfigError("fixture has no hybrid model")
    S = _impedances(fx, cfg)
    window = max(1, int(round(cfg.window_length / gm.dt)))
    if cfg.solver == "hftd":
        res = hybrid.hftd_solve(fx.hybrid_model, S, gm, window, tol=cfg.tol,
                                max_iter=cfg.max_iter)
        return res.history, res.diagnostics, res.converged
    hc = hybrid.HtfdConfig(window_steps=window, tol=cfg.tol, max_iter=cfg.max_iter,
                           n_decay=cfg.decay_length, n_zero=cfg.zero_pad_length,
                           newmark=NewmarkParams(gm.dt))
    ref = htfd_reference(fx, S, gm.n, hc, cfg.k_ref, cfg.c_ref)
    res = hybrid.htfd_solve(fx.hybrid_model, S, ref, gm, hc, boundary=fx.hybrid_boundary)
    return res.history, res.diagnostics, res.converged


def htfd_reference(fx: Fixture, S, n_steps, hc, k_ref=None, c_ref="formula"):
    sing = hybrid.boundary_singular_parts(S, n_steps, hc, hc.newmark.dt)
    nb = len(S)
    kr = np.diag(fx.static_stiffness if k_ref is None else k_ref)
    if kr.shape != (nb, nb):
        raise ConfigError(f"k_ref needs {nb} values")
    mr = np.zeros((nb, nb))
    if c_ref == "formula":
        cr = hybrid.htfd_reference_damping(sing, mr, kr, hc.newmark)
    elif c_ref == "c_inf":
        cr = hybrid.singular_matrices(sing)[1]
    else:
        cr = np.eye(nb) * float(c_ref)
    return hybrid.ReferenceSubstructure(mr, cr, kr)


# ---------------------------------------------------------------------------
# command line

def _add_common(p):
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def _analyze_one(path, overrides):
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        log.error("configuration error in %s: %s", path, exc)
        return EXIT_CONFIG
    for key, v in overrides.items():
        if v is not None and v is not False:
            setattr(cfg, key, v)
    return run(cfg)


def _cmd_analyze(a):
    over = dict(tol=a.tol, max_iter=a.max_iter, window_length=a.window_length,
                decay_length=a.decay_length, zero_pad_length=a.zero_pad_length, raw=a.raw)
    if len(a.config) == 1:
        if a.output:
            over["output"] = a.output
        return _analyze_one(a.config[0], over)
    if a.output:
        log.error("--output applies to a single config only")
        return EXIT_CONFIG
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=a.jobs) as pool:
        codes = list(pool.map(_analyze_one, a.config, [over] * len(a.config)))
    for path, code in zip(a.config, codes):
        log.info("%s: exit %d", path, code)
    return max(codes)


def _cmd_impedance(a):
    fx = load_fixture(a.fixture)
    if not fx.impedances:
        log.error("fixture %s has no impedance functions", a.fixture)
        return EXIT_CONFIG
    f = np.linspace(0.0, a.fmax, a.points)
    for i, S in enumerate(fx.impedances):
        path = a.output if len(fx.impedances) == 1 else f"{a.output}.{i}"
        write_impedance_table(path, S, f)
    return EXIT_OK


def _source(a):
    if a.table:
        return read_impedance_table(a.table)
    fx = load_fixture(a.fixture)
    if not fx.impedances:
        raise ConfigError(f"fixture {a.fixture} has no impedance functions")
    return fx.impedances[a.index]


def _cmd_fit_fir(a):
    S = _source(a)
    w = fir.fir_frequency_grid(a.fmax, a.points)
    flt = fir.fit_fir(S, w, 1.0 / a.fmax, mass=a.mass)
    log.info("tap system condition number %.3g", flt.condition)
    _emit(a.output, flt.to_text())
    return EXIT_OK


def _cmd_fit_iir(a):
    S = _source(a)
    w = np.linspace(0.0, a.wmax, a.points)
    flt = iir.fit_iir_least_squares(w * a.dt, S(w), a.nb, a.na, dt=a.dt, iterations=a.iterations)
    if a.stabilize:
        flt = iir.stabilize_poles(flt)
    log.info("poles %s", np.abs(flt.poles))
    _emit(a.output, flt.to_text())
    return EXIT_OK


def _cmd_stability_map(a):
    beta = np.linspace(a.beta_min, a.beta_max, a.n)
    dtT = np.linspace(a.dtT_min, a.dtT_max, a.n)
    rho = stability_map(beta, dtT, a.xi)
    with open(a.output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt_over_T"] + [f"{b:.17g}" for b in beta])
        for x, row in zip(dtT, rho):
            w.writerow([f"{x:.17g}"] + [f"{v:.17g}" for v in row])
    return EXIT_OK


def _cmd_htfd_indicator(a):
    fx = load_fixture(a.fixture)
    if fx.hybrid_model is None:
        raise ConfigError("fixture has no hybrid model")
    hc = hybrid.HtfdConfig(window_steps=1, n_decay=a.decay_length, n_zero=a.zero_pad_length,
                           newmark=NewmarkParams(a.dt))
    ref = htfd_reference(fx, fx.impedances, a.steps, hc, a.k_ref, a.c_ref)
    sing = hybrid.boundary_singular_parts(fx.impedances, a.steps, hc, a.dt)
    b = fx.hybrid_boundary or list(fx.hybrid_model.layout.boundary)
    Mbb = fx.hybrid_model.M[np.ix_(b, b)]
    val = hybrid.htfd_convergence_indicator(sing, ref, Mbb, hc.newmark)
    print(f"c_ref {' '.join(f'{x:.16g}' for x in np.diag(ref.C_ref))}")
    print(f"indicator {val:.6g}")
    return EXIT_OK


def _cmd_period(a):
    fx = load_fixture(a.fixture)
    if "fixture" not in fx.extra:
        raise ConfigError("fixture has no foundation description")
    f = fx.extra["fixture"]
    st = f.stories[0]
    sway, rock = cone_impedances(f.found)
    xi = f.extra.get("xi", 0.0)
    ratio, xi_f = period_lengthening(st.k, st.mass, f.h, sway, rock, xi=xi)
    print(f"period_ratio {ratio:.10g}")
    print(f"damping_flexible {xi_f:.10g}")
    return EXIT_OK


def _emit(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def build_parser():
    p = argparse.ArgumentParser(prog="ssikit", description="soil-structure interaction solvers")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("analyze", help="run an analysis from a config file")
    q.add_argument("config", nargs="+", help="one or more config files, run in parallel")
    q.add_argument("--jobs", type=int, default=None, help="worker processes for batch runs")
    q.add_argument("--tol", type=float)
    q.add_argument("--max-iter", type=int)
    q.add_argument("--window-length", type=float, help="seconds")
    q.add_argument("--decay-length", type=int, help="samples")
    q.add_argument("--zero-pad-length", type=int, help="samples")
    q.add_argument("--output")
    q.add_argument("--raw", action="store_true", help="whitespace table instead of CSV")
    _add_common(q)
    q.set_defaults(func=_cmd_analyze)

    for name, func in (("fit-fir", _cmd_fit_fir), ("fit-iir", _cmd_fit_iir)):
        q = sub.add_parser(name)
        g = q.add_mutually_exclusive_group(required=True)
        g.add_argument("--fixture")
        g.add_argument("--table")
        q.add_argument("--index", type=int, default=0)
        q.add_argument("--points", type=int, default=20 if name == "fit-fir" else 58)
        q.add_argument("--output", default="-")
        if name == "fit-fir":
            q.add_argument("--fmax", type=float, default=20.0, help="Hz")
            q.add_argument("--mass", action="store_true")
        else:
            q.add_argument("--wmax", type=float, default=3.0, help="rad/s")
            q.add_argument("--dt", type=float, default=0.1)
            q.add_argument("--nb", type=int, default=8)
            q.add_argument("--na", type=int, default=8)
            q.add_argument("--iterations", type=int, default=0)
            q.add_argument("--stabilize", action="store_true")
        _add_common(q)
        q.set_defaults(func=func)

    q = sub.add_parser("impedance", help="tabulate analytical impedance functions")
    q.add_argument("--fixture", required=True)
    q.add_argument("--fmax", type=float, default=50.0)
    q.add_argument("--points", type=int, default=501)
    q.add_argument("--output", required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_impedance)

    q = sub.add_parser("stability-map", help="Newmark spectral radius grid")
    q.add_argument("--beta-min", type=float, default=0.0)
    q.add_argument("--beta-max", type=float, default=0.5)
    q.add_argument("--dtT-min", type=float, default=0.01)
    q.add_argument("--dtT-max", type=float, default=1.0)
    q.add_argument("--n", type=int, default=100)
    q.add_argument("--xi", type=float, default=0.0)
    q.add_argument("--output", required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_stability_map)

    q = sub.add_parser("htfd-indicator", help="reference damping and convergence indicator")
    q.add_argument("--fixture", default="table4-1-physical")
    q.add_argument("--dt", type=float, default=0.01)
    q.add_argument("--steps", type=int, default=4000)
    q.add_argument("--k-ref", type=_floats)
    q.add_argument("--c-ref", default="formula")
    q.add_argument("--decay-length", type=int, default=100)
    q.add_argument("--zero-pad-length", type=int, default=100)
    _add_common(q)
    q.set_defaults(func=_cmd_htfd_indicator)

    q = sub.add_parser("period-lengthening")
    q.add_argument("--fixture", default="table4-1-physical")
    _add_common(q)
    q.set_defaults(func=_cmd_period)
    return p


def main(argv=None):
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, a.log_level), format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except (ConfigError, ParseError, OSError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except NonConvergenceError as exc:
        log.error("no convergence: %s", exc)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
