"""Experiment orchestration.

Builds the benchmark scenario, synthesizes per-frame signals with sensor
noise, runs the adaptive filters while recording metric traces, and
provides the calibration routines (radiation target C, penalty weight
lambda), the frequency sweep, and the amplitude-switch experiment.

Reproducibility contract: every random draw is a pure function of
(scenario.seed, purpose, frame index) through counter-based Philox
streams, so a frame's signals do not depend on which algorithm is
running or on how many draws earlier frames consumed. Two runs with the
same scenario produce bitwise-identical traces.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__, cxla
from .acoustics import (ArrayGeometry, FrequencyPoint, Medium,
                        build_radiation_matrix, build_transfer_matrix,
                        exterior_radiation_power)
from .algorithms import (NlmsControlFilter, PenaltyNlmsControlFilter,
                         RiemannianNlmsControlFilter)
from .errors import AncradError, CalibrationError, DomainError
from .validation import as_real_scalar

__all__ = [
    "SwitchSpec",
    "Scenario",
    "MetricsTrace",
    "build_default_scenario",
    "FrameSynthesizer",
    "run",
    "calibrate_C",
    "calibrate_lambda",
    "frequency_sweep",
    "amplitude_switch_experiment",
    "moving_average",
    "write_trace_csv",
    "read_trace_csv",
    "write_meta_json",
    "write_sweep_csv",
]

logger = logging.getLogger(__name__)

ALGORITHMS = ("nlms", "penalty", "riemannian")

# Substream tags for deriving independent Philox keys from one seed.
_STREAM_FRAMES = 0
_STREAM_INIT = 1
_STREAM_HOLDOUT = 2

TRACE_COLUMNS = ("n", "algorithm", "frequency_hz", "p_red", "p_red_db",
                 "epsilon_n", "epsilon_target", "mu_n", "muted",
                 "feasibility_residual")

SWEEP_COLUMNS = ("frequency_hz", "algorithm", "p_red_db_mean100",
                 "epsilon_mean100", "lambda", "C", "delta_reg", "seed")


@dataclass(frozen=True)
class SwitchSpec:
    """Mid-run change of the primary source amplitudes."""

    iteration: int
    new_amplitudes: tuple


@dataclass(frozen=True)
class Scenario:
    """Full configuration of one adaptive run.

    gamma, lam and C may be None, meaning: resolve gamma automatically
    (1e-4 times the largest eigenvalue of G^H G), calibrate lam for the
    penalty method, calibrate C for the constrained method. snr_db None
    disables sensor noise entirely (the documented noiseless mode);
    finite values set the per-channel SNR against the clean signal power.
    """

    geometry: ArrayGeometry
    medium: Medium
    frequency: float
    source_amplitudes: tuple
    snr_db: Optional[float]
    seed: int
    n_iterations: int
    algorithm: str = "nlms"
    gamma: Optional[float] = None
    lam: Optional[float] = 0.0
    mu0: float = 1.0
    C: Optional[float] = None
    moving_average_window: int = 100
    muted_update: str = "predicted"
    switch_spec: Optional[SwitchSpec] = None

    def __post_init__(self):
        if self.n_iterations < 1:
            raise DomainError("n_iterations must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise DomainError(f"algorithm must be one of {ALGORITHMS}")
        if self.snr_db is not None:
            as_real_scalar(self.snr_db, "snr_db")
        amps = tuple(complex(a) for a in self.source_amplitudes)
        object.__setattr__(self, "source_amplitudes", amps)
        n_src = len(self.geometry.primary_positions)
        if len(amps) != n_src:
            raise DomainError(
                f"need one amplitude per primary source ({n_src}), got {len(amps)}"
            )
        if self.geometry.reference_count != n_src:
            raise DomainError(
                "reference channels must observe the primary sources one to "
                f"one (R={self.geometry.reference_count}, sources={n_src})"
            )
        if self.switch_spec is not None:
            sw = self.switch_spec
            if not 0 <= sw.iteration < self.n_iterations:
                raise DomainError("switch iteration must lie inside the run")
            new = tuple(complex(a) for a in sw.new_amplitudes)
            if len(new) != n_src:
                raise DomainError("switch must provide one amplitude per source")
            object.__setattr__(self, "switch_spec",
                               SwitchSpec(int(sw.iteration), new))


@dataclass
class MetricsTrace:
    """Per-iteration metrics of one run plus its metadata."""

    algorithm: str
    frequency: float
    p_red: np.ndarray
    epsilon: np.ndarray
    epsilon_target: np.ndarray   # nan where the algorithm has no target
    mu: np.ndarray
    muted: np.ndarray            # bool
    feasibility: np.ndarray      # nan for the flat algorithms
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.p_red)

    def converged_mean(self, values, window=None):
        w = window or self.meta.get("moving_average_window", 100)
        return float(np.mean(values[-w:]))


def moving_average(values, window):
    """Causal moving average: mean over the trailing `window` samples."""
    v = np.asarray(values, dtype=np.float64)
    c = np.concatenate([[0.0], np.cumsum(v)])
    n = np.arange(1, len(v) + 1)
    lo = np.maximum(n - window, 0)
    return (c[n] - c[lo]) / (n - lo)


# ---------------------------------------------------------------------------
# scenario construction


def build_ring_positions(radii=(1.0, 1.2), counts=(6, 6), offsets_deg=(0.0, 30.0)):
    """Loudspeaker layout: `counts[i]` speakers uniformly on each circle.

    The default staggers the outer ring by half a spacing so no two
    speakers are radially collinear.
    """
    pos = []
    for radius, count, off in zip(radii, counts, offsets_deg):
        for i in range(count):
            th = math.radians(off) + 2.0 * math.pi * i / count
            pos.append([radius * math.cos(th), radius * math.sin(th)])
    return np.asarray(pos)


def build_default_scenario(frequency, **overrides):
    """Benchmark scenario: two primary sources, 12 speakers on two rings,
    4 error microphones, one reference channel per source.

    Amplitudes 10 and 5, 40 dB SNR sensor noise, 50000 iterations,
    mu0 = 1. gamma is left to auto-resolution against G at run time.
    Keyword overrides replace any Scenario field.
    """
    geometry = ArrayGeometry(
        dimension=2,
        primary_positions=np.array([[-3.0, 0.5], [3.0, 0.0]]),
        secondary_positions=build_ring_positions(),
        error_positions=np.array([[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]),
    )
    base = dict(
        geometry=geometry,
        medium=Medium(c=343.0, rho=1.3),
        frequency=float(frequency),
        source_amplitudes=(10.0, 5.0),
        snr_db=40.0,
        seed=0,
        n_iterations=50000,
        algorithm="nlms",
        gamma=None,
        lam=0.0,
        mu0=1.0,
        C=None,
        moving_average_window=100,
        muted_update="predicted",
        switch_spec=None,
    )
    base.update(overrides)
    return Scenario(**base)


# ---------------------------------------------------------------------------
# frame synthesis


def _philox_key(seed, stream):
    ss = np.random.SeedSequence(entropy=[int(seed) & (2**64 - 1), stream])
    return ss.generate_state(2, dtype=np.uint64)


def derive_seed(seed, stream):
    """A derived integer seed independent of the frame streams."""
    return int(_philox_key(seed, stream)[0])


class FrameSynthesizer:
    """Deterministic per-frame signal source.

    Each reference channel carries one primary source's tone with a fresh
    uniform random phase every frame; the primary noise at the error
    microphones is d = P x_clean. Sensor noise is circular complex
    Gaussian, scaled per channel so the SNR against the clean mean power
    equals scenario.snr_db. Frame n uses a Philox stream at counter
    n << 64, so signals are a function of (seed, n) alone.

    Draw order within a frame: phases, reference noise, error noise.
    """

    def __init__(self, scenario: Scenario, P):
        self.scenario = scenario
        self.P = P
        self._key = _philox_key(scenario.seed, _STREAM_FRAMES)
        self._amps0 = np.asarray(scenario.source_amplitudes, dtype=np.complex128)
        sw = scenario.switch_spec
        self._switch_at = sw.iteration if sw is not None else None
        self._amps1 = (np.asarray(sw.new_amplitudes, dtype=np.complex128)
                       if sw is not None else None)
        if scenario.snr_db is None:
            self._noise_scale = None
        else:
            self._noise_scale = 10.0 ** (-scenario.snr_db / 10.0)

    def amplitudes_at(self, n):
        if self._switch_at is not None and n >= self._switch_at:
            return self._amps1
        return self._amps0

    def _noise_std(self, amps):
        # per-channel std of the complex noise (real/imag each std/sqrt(2))
        ref_var = np.abs(amps) ** 2 * self._noise_scale
        err_var = (np.abs(self.P) ** 2 @ np.abs(amps) ** 2) * self._noise_scale
        return np.sqrt(ref_var), np.sqrt(err_var)

    def frame(self, n):
        """Return (x_observed, x_clean, d_clean, error_noise) for frame n."""
        rng = np.random.Generator(np.random.Philox(key=self._key,
                                                   counter=int(n) << 64))
        amps = self.amplitudes_at(n)
        R = len(amps)
        M = self.P.shape[0]
        phases = rng.random(R) * (2.0 * math.pi)
        x_clean = amps * np.exp(1j * phases)
        d_clean = self.P @ x_clean
        if self._noise_scale is None:
            return x_clean, x_clean, d_clean, np.zeros(M, dtype=np.complex128)
        ref_std, err_std = self._noise_std(amps)
        zr = rng.standard_normal(2 * R)
        ze = rng.standard_normal(2 * M)
        nx = ref_std * (zr[:R] + 1j * zr[R:]) * math.sqrt(0.5)
        ne = err_std * (ze[:M] + 1j * ze[M:]) * math.sqrt(0.5)
        return x_clean + nx, x_clean, d_clean, ne


# ---------------------------------------------------------------------------
# run


def _resolve_gamma(scenario, G):
    if scenario.gamma is not None:
        return as_real_scalar(scenario.gamma, "gamma", minimum=0.0)
    GG = G.conj().T @ G
    return 1e-4 * cxla.spectral_norm(GG, "G^H G")


def _build_plant(scenario: Scenario):
    fp = FrequencyPoint.for_medium(scenario.frequency, scenario.medium)
    geo = scenario.geometry
    G = build_transfer_matrix(geo.secondary_positions, geo.error_positions,
                              fp, scenario.medium, geo.dimension)
    P = build_transfer_matrix(geo.primary_positions, geo.error_positions,
                              fp, scenario.medium, geo.dimension)
    model = build_radiation_matrix(geo.secondary_positions, fp, scenario.medium,
                                   geo.dimension)
    return fp, G, P, model


def _make_filter(scenario, G, P, model, gamma, lam, C):
    kw = dict(gamma=gamma, mu0=scenario.mu0, P_hat=P,
              muted_update=scenario.muted_update)
    if scenario.algorithm == "nlms":
        return NlmsControlFilter(G, **kw)
    if scenario.algorithm == "penalty":
        return PenaltyNlmsControlFilter(G, model.effective, lam=lam, **kw)
    return RiemannianNlmsControlFilter(
        G, model.with_target_power(C),
        init_seed=derive_seed(scenario.seed, _STREAM_INIT), **kw)


def run(scenario: Scenario) -> MetricsTrace:
    """Execute one adaptive run and record its metric trace.

    Unresolved parameters are filled in first: gamma from the plant norm,
    lam by calibrate_lambda (penalty), C by calibrate_C (riemannian).
    The trace is a deterministic function of the scenario.
    """
    fp, G, P, model = _build_plant(scenario)
    gamma = _resolve_gamma(scenario, G)
    lam = scenario.lam
    C = scenario.C
    calibration_meta = {}
    if scenario.algorithm == "penalty" and lam is None:
        cal = calibrate_lambda(scenario)
        lam = cal["lam"]
        calibration_meta["lambda"] = cal
    if scenario.algorithm == "riemannian" and C is None:
        cal = calibrate_C(scenario)
        C = cal["C"]
        calibration_meta["C"] = cal
    filt = _make_filter(scenario, G, P, model, gamma, lam, C)
    synth = FrameSynthesizer(scenario, P)

    N = scenario.n_iterations
    p_red = np.empty(N)
    epsilon = np.empty(N)
    eps_target = np.full(N, np.nan)
    mu = np.zeros(N)
    muted = np.zeros(N, dtype=bool)
    feas = np.full(N, np.nan)
    has_target = scenario.algorithm == "riemannian"

    for n in range(N):
        x, _x_clean, d, noise_e = synth.frame(n)
        y, is_muted = filt.control(x)
        e = d + G @ y + noise_e
        report = filt.update(x, e)
        p_red[n] = float(np.real(e.conj() @ e) / np.real(d.conj() @ d))
        epsilon[n] = exterior_radiation_power(y, model)
        if has_target:
            eps_target[n] = C * float(np.real(x.conj() @ x))
        mu[n] = report.mu
        muted[n] = is_muted
        if report.feasibility_residual is not None:
            feas[n] = report.feasibility_residual

    w = scenario.moving_average_window
    meta = {
        "scenario": scenario_to_dict(scenario),
        "resolved": {
            "gamma": gamma,
            "lambda": lam,
            "C": C,
            "delta_reg": model.delta,
            "norm_term": filt.norm_term_,
        },
        "moving_average_window": w,
        "converged": {
            "p_red_mean": float(np.mean(p_red[-w:])),
            "p_red_db": 10.0 * math.log10(float(np.mean(p_red[-w:]))),
            "epsilon_mean": float(np.mean(epsilon[-w:])),
        },
        "counts": {
            "muted": int(filt.n_muted_),
            "skipped": int(filt.n_skipped_),
        },
        "version": __version__,
    }
    if calibration_meta:
        meta["calibration"] = calibration_meta
    return MetricsTrace(
        algorithm=scenario.algorithm, frequency=scenario.frequency,
        p_red=p_red, epsilon=epsilon, epsilon_target=eps_target,
        mu=mu, muted=muted, feasibility=feas, meta=meta,
    )


# ---------------------------------------------------------------------------
# calibration


def _plateaued(p_red, window):
    """Convergence check: moving-average P_red changed < 1% over the last
    10% of iterations."""
    ma = moving_average(p_red, window)
    k = max(1, len(ma) // 10)
    if k >= len(ma):
        return False
    a, b = ma[-1 - k], ma[-1]
    return abs(b - a) <= 0.01 * max(abs(a), 1e-300)


def calibrate_C(scenario: Scenario) -> dict:
    """Radiation target from an unconstrained baseline.

    Runs plain NLMS on the same frames (same seed, any switch removed),
    averages the radiated power and the reference power over the last
    moving-average window, and returns C = 0.5 * eps_mean / x_mean, the
    constant that pins the constrained method at half the baseline
    radiation.
    """
    base = replace(scenario, algorithm="nlms", lam=0.0, C=None, switch_spec=None)
    trace = run(base)
    w = scenario.moving_average_window
    eps_bar = float(np.mean(trace.epsilon[-w:]))
    _, _, P, _ = _build_plant(base)
    synth = FrameSynthesizer(base, P)
    x_bar = 0.0
    for n in range(base.n_iterations - w, base.n_iterations):
        x, _, _, _ = synth.frame(n)
        x_bar += float(np.real(x.conj() @ x))
    x_bar /= w
    out = {
        "C": 0.5 * eps_bar / x_bar,
        "epsilon_mean": eps_bar,
        "x_power_mean": x_bar,
        "plateaued": _plateaued(trace.p_red, w),
    }
    if not out["plateaued"]:
        out["warning"] = "baseline P_red has not plateaued; C may be premature"
        logger.warning(out["warning"])
    return out


def calibrate_lambda(scenario: Scenario, target_ratio=0.5) -> dict:
    """Penalty weight by bisection on the converged radiation ratio.

    Searches log lambda between 1e-6 and 1e6 times the plant-to-radiation
    norm ratio for the weight at which the penalty method's converged
    radiated power is `target_ratio` times the unconstrained baseline's,
    within 2% relative (or 40 bisection steps). Sampled ratios are audited
    for monotonicity and the returned weight is validated on a held-out
    run with a fresh seed.
    """
    if not 0.0 < target_ratio <= 1.0:
        raise DomainError(f"target_ratio must be in (0,1], got {target_ratio}")
    base = replace(scenario, algorithm="nlms", lam=0.0, C=None, switch_spec=None)
    fp, G, P, model = _build_plant(base)
    nlms_trace = run(base)
    w = scenario.moving_average_window
    eps_nlms = float(np.mean(nlms_trace.epsilon[-w:]))

    scale = (cxla.spectral_norm(G.conj().T @ G, "G^H G")
             / cxla.spectral_norm(model.effective, "A"))
    lam_lo, lam_hi = 1e-6 * scale, 1e6 * scale

    samples = []

    def ratio_at(lam):
        tr = run(replace(base, algorithm="penalty", lam=lam))
        r = float(np.mean(tr.epsilon[-w:])) / eps_nlms
        samples.append((lam, r))
        return r

    r_lo = ratio_at(lam_lo)
    if target_ratio >= 1.0:
        # boundary: no reduction requested, the weakest weight wins outright
        lam, r, steps = lam_lo, r_lo, 0
        return _finish_lambda_calibration(scenario, base, lam, r, steps,
                                          samples, w, target_ratio)
    r_hi = ratio_at(lam_hi)
    if not (r_lo > target_ratio > r_hi):
        raise CalibrationError(
            f"bracket failure: ratio({lam_lo:.3e}) = {r_lo:.4f}, "
            f"ratio({lam_hi:.3e}) = {r_hi:.4f} do not straddle {target_ratio}"
        )
    lo, hi = math.log(lam_lo), math.log(lam_hi)
    lam = math.exp(0.5 * (lo + hi))
    r = ratio_at(lam)
    steps = 1
    while abs(r - target_ratio) > 0.02 * target_ratio and steps < 40:
        if r > target_ratio:
            lo = math.log(lam)
        else:
            hi = math.log(lam)
        lam = math.exp(0.5 * (lo + hi))
        r = ratio_at(lam)
        steps += 1

    return _finish_lambda_calibration(scenario, base, lam, r, steps,
                                      samples, w, target_ratio)


def _finish_lambda_calibration(scenario, base, lam, r, steps, samples, w,
                               target_ratio):
    ordered = sorted(samples)
    ratios = [s[1] for s in ordered]
    # small slack: converged averages carry O(0.1%) measurement noise
    monotone = all(ratios[i] >= ratios[i + 1] - 5e-3 for i in range(len(ratios) - 1))
    if not monotone:
        logger.warning("calibrate_lambda: sampled ratios are not monotone: %s",
                       ordered)

    holdout_seed = derive_seed(scenario.seed, _STREAM_HOLDOUT)
    held_base = replace(base, seed=holdout_seed)
    held_nlms = run(held_base)
    held_pen = run(replace(held_base, algorithm="penalty", lam=lam))
    v = (float(np.mean(held_pen.epsilon[-w:]))
         / float(np.mean(held_nlms.epsilon[-w:])))

    out = {
        "lam": lam,
        "ratio": r,
        "steps": steps,
        "samples": samples,
        "monotone": monotone,
        "validation_ratio": v,
        "validation_seed": holdout_seed,
    }
    if abs(v - target_ratio) > 0.02:
        out["warning"] = (f"held-out ratio {v:.4f} misses target "
                          f"{target_ratio} by more than 0.02")
        logger.warning(out["warning"])
    return out


# ---------------------------------------------------------------------------
# experiments


def _sweep_cell(args):
    scenario, frequency = args
    scen = replace(scenario, frequency=frequency)
    rows, failures, traces = [], [], {}
    try:
        cal_c = calibrate_C(scen)
        cal_l = calibrate_lambda(scen)
    except AncradError as exc:
        return [], [(frequency, "calibration", str(exc))], {}
    variants = {
        "nlms": replace(scen, algorithm="nlms", lam=0.0, C=None),
        "penalty": replace(scen, algorithm="penalty", lam=cal_l["lam"], C=None),
        "riemannian": replace(scen, algorithm="riemannian", C=cal_c["C"], lam=0.0),
    }
    for name in sorted(variants):
        try:
            tr = run(variants[name])
        except AncradError as exc:
            failures.append((frequency, name, str(exc)))
            continue
        p_mean = float(np.mean(tr.p_red[-100:]))
        rows.append({
            "frequency_hz": frequency,
            "algorithm": name,
            "p_red_db_mean100": 10.0 * math.log10(p_mean),
            "epsilon_mean100": float(np.mean(tr.epsilon[-100:])),
            "lambda": cal_l["lam"] if name == "penalty" else "",
            "C": cal_c["C"] if name == "riemannian" else "",
            "delta_reg": tr.meta["resolved"]["delta_reg"],
            "seed": scen.seed,
        })
        traces[name] = tr
    return rows, failures, {frequency: traces}


def frequency_sweep(frequencies, base_scenario: Scenario, jobs=1):
    """Recalibrate and run all three algorithms at each frequency.

    Returns a dict with summary `rows` ordered by (frequency, algorithm),
    a `failures` list of (frequency, stage, message) for cells that
    errored (the sweep continues past them), and the per-cell `traces`.
    """
    freqs = sorted(float(f) for f in frequencies)
    if not freqs:
        raise DomainError("frequency list must not be empty")
    cells = [(base_scenario, f) for f in freqs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    rows, failures, traces = [], [], {}
    for r, f, t in results:
        rows.extend(r)
        failures.extend(f)
        traces.update(t)
    return {"rows": rows, "failures": failures, "traces": traces}


def amplitude_switch_experiment(base_scenario: Scenario, switch_iteration=25000,
                                new_amplitudes=(5.0, 10.0)):
    """Run all three algorithms through a mid-run amplitude change.

    C and lambda are calibrated on the switch-free scenario first, then
    each algorithm runs with the switch installed. Returns
    {"traces": {algorithm: MetricsTrace}, "C": ..., "lambda": ...}.
    """
    cal_c = calibrate_C(base_scenario)
    cal_l = calibrate_lambda(base_scenario)
    sw = SwitchSpec(iteration=switch_iteration, new_amplitudes=tuple(new_amplitudes))
    scen = replace(base_scenario, switch_spec=sw)
    traces = {}
    for name in ALGORITHMS:
        traces[name] = run(replace(
            scen, algorithm=name,
            lam=cal_l["lam"] if name == "penalty" else 0.0,
            C=cal_c["C"] if name == "riemannian" else None,
        ))
    return {"traces": traces, "C": cal_c["C"], "lambda": cal_l["lam"],
            "calibration": {"C": cal_c, "lambda": cal_l}}


# ---------------------------------------------------------------------------
# serialization


def scenario_to_dict(s: Scenario) -> dict:
    geo = s.geometry
    d = {
        "frequency": s.frequency,
        "source_amplitudes": [[a.real, a.imag] for a in s.source_amplitudes],
        "snr_db": s.snr_db,
        "seed": s.seed,
        "n_iterations": s.n_iterations,
        "algorithm": s.algorithm,
        "gamma": s.gamma,
        "lambda": s.lam,
        "mu0": s.mu0,
        "C": s.C,
        "moving_average_window": s.moving_average_window,
        "muted_update": s.muted_update,
        "medium": {"c": s.medium.c, "rho": s.medium.rho},
        "geometry": {
            "dimension": geo.dimension,
            "primary_positions": geo.primary_positions.tolist(),
            "secondary_positions": geo.secondary_positions.tolist(),
            "error_positions": geo.error_positions.tolist(),
            "reference_count": geo.reference_count,
        },
        "switch": None,
    }
    if s.switch_spec is not None:
        d["switch"] = {
            "iteration": s.switch_spec.iteration,
            "new_amplitudes": [[a.real, a.imag]
                               for a in s.switch_spec.new_amplitudes],
        }
    return d


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return ""
    return repr(f)


def write_trace_csv(trace: MetricsTrace, path):
    """Write the per-iteration trace in the documented column order.

    Float fields use shortest round-trip decimal form; inapplicable
    fields (radiation target and feasibility for the flat algorithms)
    are left empty. Byte-for-byte deterministic for a given trace.
    """
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for n in range(len(trace)):
            pr = trace.p_red[n]
            row = (
                str(n), trace.algorithm, _fmt(trace.frequency), _fmt(pr),
                _fmt(10.0 * math.log10(pr) if pr > 0 else float("-inf")),
                _fmt(trace.epsilon[n]), _fmt(trace.epsilon_target[n]),
                _fmt(trace.mu[n]), _fmt(bool(trace.muted[n])),
                _fmt(trace.feasibility[n]),
            )
            fh.write(",".join(row) + "\n")


def read_trace_csv(path):
    """Parse a trace CSV back into column arrays (round-trip helper)."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames) != TRACE_COLUMNS:
            raise DomainError(f"unexpected trace columns: {reader.fieldnames}")
        rows = list(reader)
    out = {c: [] for c in TRACE_COLUMNS}
    for r in rows:
        for c in TRACE_COLUMNS:
            out[c].append(r[c])
    for c in ("p_red", "p_red_db", "epsilon_n", "epsilon_target", "mu_n",
              "feasibility_residual"):
        out[c] = np.array([float(v) if v != "" else np.nan for v in out[c]])
    out["n"] = np.array([int(v) for v in out["n"]])
    out["muted"] = np.array([v == "1" for v in out["muted"]])
    return out


def write_meta_json(trace: MetricsTrace, path):
    with open(path, "w") as fh:
        json.dump(trace.meta, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in SWEEP_COLUMNS) + "\n")
