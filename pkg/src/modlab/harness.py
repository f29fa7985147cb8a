"""Growth experiment, slope fits, theoretical exponents and report I/O."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .counterexample import build_input, shell_band
from .errors import ConfigError, ModlabError
from .grid import Grid, make_grid
from .quantize import apply_separable
from .spectral import NYQUIST_MARGIN
from .symbols import DEFAULT_RADIUS, CounterexampleParams, min_j0, tau_symbol, unit_symbol
from .tfa import StftPlan, _atomic_write_json, bspline_lower_bound, mpq_estimate

log = logging.getLogger("modlab")

SCHEMA_VERSION = 1
NYQUIST_HEADROOM = 1.1
REFINE_GATE_PCT = 0.5
CSV_COLUMNS = ["j", "input_norm", "output_norm", "output_lower_bound", "ratio", "log2_N", "refinement_delta_pct"]

DEFAULT_CONFIG = {
    "n": 1,
    "m": 0.5,
    "delta_tau": 0.3,
    "epsilon": 0.05,
    "p": 2.0,
    "q": 4.0,
    "j_lo": 10,
    "j_hi": 14,
    "L": 8.0,
    "stft_step": 0.25,
    "seed": 0x5EED,
    "truncation_radius": DEFAULT_RADIUS,
    "refine": True,
    "control": True,
}
_TYPES = {"n": int, "j_lo": int, "j_hi": int, "seed": int, "refine": bool, "control": bool}


def validate_config(raw: dict) -> dict:
    """Fill defaults and check types and ranges; errors name the offending field path."""
    if not isinstance(raw, dict):
        raise ConfigError("$: config must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULT_CONFIG))
    if unknown:
        raise ConfigError(f"$.{unknown[0]}: unknown field")
    cfg = dict(DEFAULT_CONFIG)
    for key, value in raw.items():
        want = _TYPES.get(key, float)
        if want is bool:
            ok = isinstance(value, bool)
        elif want is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        else:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
        if not ok:
            raise ConfigError(f"$.{key}: expected {want.__name__}, got {value!r}")
        cfg[key] = float(value) if want is float else value
    if "j_lo" not in raw:
        try:
            cfg["j_lo"] = min_j0(cfg["delta_tau"], cfg["n"])
        except ModlabError as exc:
            raise ConfigError(f"$.delta_tau: {exc}") from exc
    if "j_hi" not in raw:
        cfg["j_hi"] = cfg["j_lo"] + 4
    if cfg["n"] not in (1, 2):
        raise ConfigError(f"$.n: experiments run in dimension 1 or 2, got {cfg['n']}")
    for key in ("L", "stft_step", "truncation_radius"):
        if cfg[key] <= 0:
            raise ConfigError(f"$.{key}: must be positive")
    if cfg["j_hi"] - cfg["j_lo"] < 3:
        raise ConfigError("$.j_hi: the j-range needs at least 4 points for a slope fit")
    try:
        params_from_config(cfg)
    except ModlabError as exc:
        field_name = "delta_tau" if "delta" in str(exc) else "j_lo" if "j_lo" in str(exc) else "p"
        raise ConfigError(f"$.{field_name}: {exc}") from exc
    return cfg


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: invalid JSON ({exc})") from exc
    return validate_config(raw)


def params_from_config(cfg: dict) -> CounterexampleParams:
    return CounterexampleParams(n=cfg["n"], m=cfg["m"], delta=cfg["delta_tau"], epsilon=cfg["epsilon"],
                                p=cfg["p"], q=cfg["q"], j_lo=cfg["j_lo"], j_hi=cfg["j_hi"])


def plan_from_config(cfg: dict) -> StftPlan:
    return StftPlan(n=cfg["n"], step=cfg["stft_step"])


# --- grids -----------------------------------------------------------------------

def grid_for(j: int, prm: CounterexampleParams, R: float = DEFAULT_RADIUS, L_min: float = 8.0,
             extra_log2: int = 0) -> Grid:
    """Box holding the dilated tails and resolving the shell ``2^{j+1/2}`` with headroom.

    ``L`` is the smallest power of two ``>= max(L_min, (K + R)/K)``; ``N`` the
    smallest power of two with ``0.8 pi / dx >= 1.1 * 2^{j + 1/2}``.
    """
    K = prm.dilation(j)
    L = 2.0 ** math.ceil(math.log2(max(L_min, (K + R) / K)))
    need = NYQUIST_HEADROOM * max(2.0 ** (j + 0.5), shell_band(j, prm))
    log2_N = math.ceil(math.log2(2.0 * L * need / (NYQUIST_MARGIN * math.pi)))
    return make_grid(prm.n, L, log2_N + extra_log2)


# --- exponents and fits -------------------------------------------------------------

@dataclass(frozen=True)
class Exponents:
    input: float
    output_lower: float
    ratio: float
    theorem_condition: bool
    theorem_margin: float


def theoretical_exponents(prm: CounterexampleParams) -> Exponents:
    d, n, q, m, e = prm.delta, prm.n, prm.q, prm.m, prm.epsilon
    inp = d * n * (1.0 / q - 1.0)
    out = m - d * (n / q + e)
    margin = m + abs(1.0 / q - 0.5) * prm.delta_sigma * n
    return Exponents(inp, out, out - inp, prm.theorem_condition, margin)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def fit_slope(points) -> SlopeFit:
    """Least squares of ``log2 value`` on ``j``."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("a slope fit needs at least 3 points")
    j = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(~(v > 0)):
        raise ValueError("slope fit needs positive values")
    y = np.log2(v)
    A = np.vstack([j, np.ones_like(j)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * j + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return SlopeFit(float(slope), float(icpt), r2)


# --- the experiment -------------------------------------------------------------------

@dataclass
class GrowthRow:
    j: int
    input_norm: float
    output_norm: float
    output_lower_bound: float
    ratio: float
    log2_N: int
    refinement_delta_pct: float
    grid: dict = field(default_factory=dict)


@dataclass
class GrowthReport:
    config: dict
    rows: list
    slopes: dict
    theory: dict
    verdict: dict
    control: dict | None = None
    schema_version: int = SCHEMA_VERSION
    tool_version: str = __version__

    def to_json(self) -> dict:
        return asdict(self)


class ExperimentStageError(ModlabError):
    def __init__(self, j: int, stage: str, cause: Exception):
        super().__init__(f"j = {j}, stage '{stage}': {cause}")
        self.exit_code = getattr(cause, "exit_code", 1)


def _norms(j, prm, grid, plan, R, cache_path, symbol_kind="tau"):
    stage = "build input"
    try:
        u = build_input(j, prm, grid, R)
        stage = "apply symbol"
        S = tau_symbol(prm, grid, R) if symbol_kind == "tau" else unit_symbol(prm, grid)
        Tu = apply_separable(S, u)
        stage = "input norm"
        mp = prm.norm_params
        ein = mpq_estimate(u, mp, plan)
        stage = "output norm"
        eout = mpq_estimate(Tu, mp, plan)
        stage = "lower bound"
        demod = Tu * np.exp(-1j * 2.0**j * grid.points()[..., 0])
        lower = bspline_lower_bound(demod, mp, plan, cache_path)
    except ModlabError as exc:
        raise ExperimentStageError(j, stage, exc) from exc
    for name, est in (("input", ein), ("output", eout)):
        log.debug("j=%d %s norm %.6g (extend %.2e, refine %.2e)", j, name, est.value,
                  est.extend_change, est.refine_change)
    return ein, eout, lower


def _gate(j, est, what):
    from .errors import TruncationGateError
    from .tfa import EXTEND_TOL, REFINE_TOL

    if est.extend_change >= EXTEND_TOL or est.refine_change >= REFINE_TOL:
        raise ExperimentStageError(j, what, TruncationGateError(
            f"lattice gates failed (extend {est.extend_change:.2e}, refine {est.refine_change:.2e})"))


def run_growth_experiment(config: dict | None = None, cache_path=None) -> GrowthReport:
    cfg = validate_config(config or {})
    prm = params_from_config(cfg)
    plan = plan_from_config(cfg)
    R = cfg["truncation_radius"]
    rows = []
    for j in prm.js:
        grid = grid_for(j, prm, R, cfg["L"])
        log.info("j=%d grid L=%g N=2^%d", j, grid.L, grid.log2_N)
        ein, eout, lower = _norms(j, prm, grid, plan, R, cache_path)
        _gate(j, ein, "input norm")
        _gate(j, eout, "output norm")
        delta_pct = 0.0
        if cfg["refine"]:
            fine = grid_for(j, prm, R, cfg["L"], extra_log2=1)
            fin, fout, flow = _norms(j, prm, fine, plan, R, cache_path)
            delta_pct = 100.0 * max(abs(fin.value / ein.value - 1.0), abs(fout.value / eout.value - 1.0),
                                    abs(flow / lower - 1.0))
            if delta_pct >= REFINE_GATE_PCT:
                log.warning("j=%d: doubling N moved a norm by %.3f%%", j, delta_pct)
        rows.append(GrowthRow(j, ein.value, eout.value, lower, eout.value / ein.value, grid.log2_N,
                              delta_pct, grid.fingerprint()))
    fits = {
        "input": fit_slope((r.j, r.input_norm) for r in rows),
        "output_lower": fit_slope((r.j, r.output_lower_bound) for r in rows),
        "ratio": fit_slope((r.j, r.ratio) for r in rows),
    }
    th = theoretical_exponents(prm)
    control = None
    if cfg["control"]:
        ratios = []
        for j in prm.js:
            grid = grid_for(j, prm, R, cfg["L"])
            ein, eout, _ = _control_norms(j, prm, grid, plan, R)
            ratios.append((j, eout / ein))
        cfit = fit_slope(ratios)
        control = {"ratios": [r for _, r in ratios], "ratio_slope": asdict(cfit)}
    unbounded = fits["ratio"].slope >= 0.5 and fits["ratio"].r_squared >= 0.9
    verdict = {
        "unbounded_growth": bool(unbounded),
        "r_squared": fits["ratio"].r_squared,
        "statement": ("growth consistent with unboundedness at predicted exponent" if unbounded
                      else "no growth consistent with unboundedness detected"),
        "theorem_condition": th.theorem_condition,
        "refinement_within_gate": all(r.refinement_delta_pct < REFINE_GATE_PCT for r in rows),
    }
    if control is not None:
        verdict["discriminates_from_control"] = bool(
            fits["ratio"].slope - control["ratio_slope"]["slope"] >= 0.4)
    return GrowthReport(
        config=cfg,
        rows=rows,
        slopes={k: asdict(v) for k, v in fits.items()},
        theory={"input": th.input, "output_lower": th.output_lower, "ratio": th.ratio,
                "theorem_condition": th.theorem_condition, "theorem_margin": th.theorem_margin},
        verdict=verdict,
        control=control,
    )


def _control_norms(j, prm, grid, plan, R):
    try:
        u = build_input(j, prm, grid, R)
        Tu = apply_separable(unit_symbol(prm, grid), u)
        mp = prm.norm_params
        return mpq_estimate(u, mp, plan).value, mpq_estimate(Tu, mp, plan).value, None
    except ModlabError as exc:
        raise ExperimentStageError(j, "control run", exc) from exc


# --- persistence ------------------------------------------------------------------------

def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.j] + [repr(float(getattr(r, c))) for c in CSV_COLUMNS[1:5]] + [r.log2_N, repr(float(r.refinement_delta_pct))])
    return buf.getvalue()


def emit_report(report: GrowthReport, path) -> tuple[Path, Path]:
    """Write ``report.csv`` and ``report.json`` into directory ``path`` atomically."""
    import os
    import tempfile

    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    fd, tmp = tempfile.mkstemp(dir=out, prefix="report.csv", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(rows_csv(report.rows))
    os.replace(tmp, csv_path)
    json_path = out / "report.json"
    _atomic_write_json(json_path, report.to_json())
    return csv_path, json_path


def load_report(path) -> GrowthReport:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"$.schema_version: expected {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    data["rows"] = [GrowthRow(**r) for r in data["rows"]]
    return GrowthReport(**data)


# --- identity suite -----------------------------------------------------------------------

TRANSFORM_TOL = 1e-8
ACTION_TOL = 1e-4
MOYAL_TOL = 1e-6
ADJOINT_TOL = 1e-12


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    value: float
    tol: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


def transform_residual(j: int, prm: CounterexampleParams, L_y: float = 1024.0, R: float = 512.0) -> float:
    """Relative L2 gap between the FFT of the modulated family and its closed form.

    Runs in the undilated frame with a dyadic step resolving ``w + K + 1/2``.
    """
    from .counterexample import build_modulated_f, fhat_closed_form, modulation_frequency
    from .spectral import fourier

    K = prm.dilation(j)
    band = modulation_frequency(j, prm) + K * math.sqrt(prm.n) + 0.5
    dy = 2.0 ** math.floor(math.log2(NYQUIST_MARGIN * math.pi / band))
    grid = make_grid(prm.n, L_y, int(round(math.log2(2.0 * L_y / dy))))
    F = fourier(build_modulated_f(j, prm, grid, R))
    C = fhat_closed_form(j, prm, F.fgrid)
    return float(np.linalg.norm(F.values - C.values) / np.linalg.norm(C.values))


def action_residual(j: int, prm: CounterexampleParams, R: float = DEFAULT_RADIUS, L_min: float = 8.0,
                    extra_log2: int = 0) -> float:
    """Relative L2 gap between the separable quantization of ``u_j`` and the closed-form action."""
    from .counterexample import closed_form_action

    grid = grid_for(j, prm, R, L_min, extra_log2)
    u = build_input(j, prm, grid, R)
    Tu = apply_separable(tau_symbol(prm, grid, R), u)
    ref = closed_form_action(j, prm, grid, R)
    return (Tu - ref).norm() / ref.norm()


def adjoint_residuals(pairs: int = 20, seed: int = 0x5EED, log2_N: int = 8) -> tuple[float, float]:
    """Worst ``|<Tf,g> - <f,T*g>| / (|f||g|)`` over random pairs, (separable, dense)."""
    from .grid import SampledField, inner_product
    from .quantize import DenseSymbolMatrix, adjoint_separable
    from .symbols import DyadicSeparableSymbol, SymbolTerm, dyadic_cutoff

    rng = np.random.default_rng(seed)
    grid = make_grid(1, 8.0, log2_N)
    def rand():
        return SampledField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))

    a = rand()
    terms = [SymbolTerm(j, 2.0 ** (0.5 * j), (lambda a=a: a), dyadic_cutoff(j, 1)) for j in (2, 3, 4)]
    S = DyadicSeparableSymbol(grid, terms, 0.5, 0.3)
    sym = lambda X, XI: np.cos(X[..., 0]) * np.exp(-0.1 * XI[..., 0] ** 2) + 1j * np.sin(0.5 * X[..., 0] * XI[..., 0] / 8)
    D = DenseSymbolMatrix.build(grid, sym)
    worst_sep = worst_dense = 0.0
    for _ in range(pairs):
        f, g = rand(), rand()
        scale = f.norm() * g.norm()
        r1 = abs(inner_product(apply_separable(S, f, skip_negligible=False), g) - inner_product(f, adjoint_separable(S, g)))
        r2 = abs(inner_product(D.apply(f), g) - inner_product(f, D.adjoint(g)))
        worst_sep, worst_dense = max(worst_sep, r1 / scale), max(worst_dense, r2 / scale)
    return worst_sep, worst_dense


def identity_suite(cfg: dict | None = None) -> list[IdentityCheck]:
    import time

    from .tfa import moyal_constant, moyal_constant_oracle

    cfg = validate_config(cfg or {})
    prm = params_from_config(cfg)
    R = cfg["truncation_radius"]
    checks = []

    def timed(name, tol, fn, *args):
        t0 = time.perf_counter()
        value = fn(*args)
        checks.append(IdentityCheck(name, float(value), tol, time.perf_counter() - t0))

    for j in prm.js:
        timed(f"closed-form transform j={j}", TRANSFORM_TOL, transform_residual, j, prm)
        timed(f"closed-form action j={j}", ACTION_TOL, action_residual, j, prm, R, cfg["L"])
    timed("moyal constant", MOYAL_TOL, lambda: abs(moyal_constant_oracle(1) / moyal_constant(1) - 1.0))
    sep, dense = adjoint_residuals(seed=cfg["seed"])
    checks.append(IdentityCheck("adjoint (separable)", sep, ADJOINT_TOL))
    checks.append(IdentityCheck("adjoint (dense)", dense, ADJOINT_TOL))
    return checks
