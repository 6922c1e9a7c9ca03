"""Config-driven experiments: spectra, perturbations, lengths, traces, density, rigidity.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes its tables
and a JSON summary into ``config.output_dir`` and returns the summary dict.
Every summary embeds the config hash and the tolerances in force.
"""
from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import perturbation as pt
from .eigensolver import full_spectrum, lowest_modes, write_eigenfunctions
from .profiles import (BoundaryCondition, OperatorVariant, ProfileError, RadialFunction,
                       herglotz_margin, profile_from_dict)
from .rays import find_periodic_orbits, speed_variation_abel
from .wave_trace import (Window, detect_peaks, isolated_lengths, match_peaks,
                         trace_series, write_peaks_json)

log = logging.getLogger(__name__)

EXPERIMENTS = ("spectrum", "perturb", "lengths", "trace", "density", "rigidity")

DEFAULT_TOLERANCES = {
    "tol_null_rel": 1e-8,      # times max|lam|
    "tol_detect_rel": 1e-6,    # times max|lam|
    "fd_step": pt.FD_STEP,
    "fd_step2": pt.FD_STEP2,
    "hf_rel": 1e-4,
    "ibp_abs": 1e-8,
    "second_order_rel": 1e-3,
    "match_tol": 0.05,
    "separation": 0.15,
    "prominence_rel": 0.2,
    "coverage_prominence_rel": 0.02,
    "reconstruction_rel": 1e-6,
}

DISCLAIMER = ("note: countable conjugacy, clean intersection and geometric spreading "
              "injectivity are assumed, not checked")


class ConfigError(ValueError):
    pass


def _fn(spec):
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, dict):
        if spec.get("kind") == "samples":
            return np.asarray(spec["params"]["values"], dtype=float)
        try:
            return RadialFunction.from_dict(spec)
        except (KeyError, ProfileError) as exc:
            raise ConfigError(f"bad function spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad function spec {spec!r}")


@dataclass
class ExperimentConfig:
    experiment: str = "spectrum"
    profile: dict = field(default_factory=dict)
    bc: Any = "dirichlet"
    variant: str = "standard"
    ell_max: int = 4
    n_max: int = 10
    family: dict = field(default_factory=dict)
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    lengths: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    density: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        R = float(self.profile.get("R", 0.0))
        if not 0.0 <= R < 1.0:
            raise ConfigError("R out of range")
        if int(self.profile.get("N", 400)) < 16:
            raise ConfigError("N must be at least 16")
        if self.ell_max < 0 or self.n_max < 1:
            raise ConfigError("ell_max >= 0 and n_max >= 1 required")
        if self.variant == "toroidal" and R == 0.0:
            raise ConfigError("toroidal variant needs an annulus (R > 0)")
        try:
            OperatorVariant(self.variant)
            BoundaryCondition.from_dict(self.bc)
        except (ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        for k, v in self.tolerances.items():
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {k!r}")
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k} must be positive")
        for key in ("a_dir", "b_dir", "b_dir2"):
            _fn(self.family.get(key))

    # derived objects

    @property
    def tol(self) -> dict:
        return {**DEFAULT_TOLERANCES, **self.tolerances}

    @property
    def config_hash(self) -> str:
        # where results go and how many threads compute them do not change them
        d = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "threads")}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def make_profile(self):
        try:
            return profile_from_dict(self.profile)
        except ProfileError as exc:
            raise ConfigError(str(exc)) from exc

    def boundary(self) -> BoundaryCondition:
        return BoundaryCondition.from_dict(self.bc)

    def make_family(self) -> pt.PerturbationFamily:
        return pt.PerturbationFamily(_fn(self.family.get("a_dir")),
                                     _fn(self.family.get("b_dir")),
                                     _fn(self.family.get("b_dir2")))

    def out(self) -> Path:
        p = Path(self.output_dir)
        p.mkdir(parents=True, exist_ok=True)
        return p


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _header(cfg: ExperimentConfig) -> dict:
    return {"experiment": cfg.experiment, "config_hash": cfg.config_hash,
            "tolerances": cfg.tol, "disclaimer": DISCLAIMER}


# --------------------------------------------------------------------------


def run_spectrum(cfg: ExperimentConfig) -> dict:
    prof = cfg.make_profile()
    spec = full_spectrum(prof, cfg.boundary(), cfg.variant, cfg.ell_max, cfg.n_max, cfg.threads)
    out = cfg.out()
    spec.to_csv(out / "spectrum.csv")
    write_eigenfunctions(out / "eigenfunctions.csv", prof, spec.modes)
    summary = {**_header(cfg), "n_modes": len(spec.modes),
               "expanded_count": int(spec.expanded.size),
               "lowest": [{"l": m.ell, "n": m.n, "lambda": m.lam} for m in spec.modes[:5]],
               "degeneracies": [list(map(list, d)) for d in spec.degeneracies],
               "herglotz_margin": herglotz_margin(prof)}
    _write_json(out / "spectrum_summary.json", summary)
    return summary


def run_perturb(cfg: ExperimentConfig) -> dict:
    prof = cfg.make_profile()
    bc = cfg.boundary()
    fam = cfg.make_family()
    tol = cfg.tol
    shifts = pt.delta_spectrum(prof, bc, cfg.variant, fam, cfg.ell_max, cfg.n_max, cfg.threads)
    fd = pt.fd_delta_spectrum(prof, bc, cfg.variant, fam, cfg.ell_max, cfg.n_max,
                              tol["fd_step"], cfg.threads)
    rows = []
    for s in shifts:
        d_fd = fd[(s.ell, s.n)]
        rows.append({"l": s.ell, "n": s.n, "lambda": s.lam, "dlambda_formula": s.dlam,
                     "dlambda_fd": d_fd, "rel_err": abs(s.dlam - d_fd) / max(abs(s.lam), 1e-300)})
    worst = max(r["rel_err"] for r in rows)
    summary = {**_header(cfg), "modes": rows, "max_rel_err": worst,
               "pass": worst <= tol["hf_rel"]}
    _write_json(cfg.out() / "perturbation.json", summary)
    return summary


def run_lengths(cfg: ExperimentConfig) -> dict:
    prof = cfg.make_profile()
    n_chords = int(cfg.lengths.get("n_max_chords", 12))
    m_max = int(cfg.lengths.get("m_max", 6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ls = find_periodic_orbits(prof, n_chords, m_max)
    ls.to_csv(cfg.out() / "lengths.csv")
    summary = {**_header(cfg), "n_orbits": len(ls.orbits), "herglotz_margin": herglotz_margin(prof),
               "failures": [list(f) for f in ls.failures],
               "non_simple": [[a.T, b.T] for a, b in ls.merged]}
    _write_json(cfg.out() / "lengths_summary.json", summary)
    return summary


def labelled_lengths(ls, t_max: float) -> tuple[np.ndarray, list]:
    """Orbit lengths up to t_max with k-fold iterates, labelled [n, m, k]."""
    rows = sorted((k * o.T, [o.n_chords, o.m_windings, k]) for o in ls.orbits
                  for k in range(1, int(t_max // o.T) + 1))
    return np.array([r[0] for r in rows]), [r[1] for r in rows]


def trace_vs_lengths(prof, spec, lengths, window: Window, t: np.ndarray, tol: dict,
                     t_lo: float, t_hi: float, labels=None) -> dict:
    """Compare trace peaks on [t_lo, t_hi] with orbit lengths (iterates included).

    Every peak above the coverage threshold is reported; the "prominent" ones
    (relative prominence >= prominence_rel) must each sit on an orbit length.
    """
    series = trace_series(spec, window, t)
    env = series.envelope
    inside = (t >= t_lo) & (t <= t_hi)
    top = float(env[inside].max()) if inside.any() else 0.0
    weak = detect_peaks(series, tol["coverage_prominence_rel"] * top)
    in_window = [p for p in weak if t_lo <= p.t <= t_hi]
    matches = match_peaks(in_window, lengths, tol["match_tol"], labels)
    for m in matches:
        m["prominent"] = bool(m["prominence"] >= tol["prominence_rel"] * top)
    iso = isolated_lengths(lengths, t_lo, t_hi, tol["separation"])
    coverage = []
    for T in iso:
        gaps = [abs(p.t - T) for p in weak]
        g = float(min(gaps)) if gaps else None
        coverage.append({"T": float(T), "gap": g,
                         "covered": g is not None and g <= tol["match_tol"]})
    return {"series": series, "matches": matches, "coverage": coverage,
            "peaks_ok": bool(all(m["matched"] for m in matches if m["prominent"])),
            "coverage_ok": bool(all(c["covered"] for c in coverage))}


def run_trace(cfg: ExperimentConfig) -> dict:
    prof = cfg.make_profile()
    tr = cfg.trace
    omega_max = float(tr.get("omega_max", 60.0))
    t_min, t_max = float(tr.get("t_min", 0.5)), float(tr.get("t_max", 8.0))
    pad = float(tr.get("pad", 0.5))
    dt = float(tr.get("dt", 0.002))
    spec = full_spectrum(prof, cfg.boundary(), cfg.variant, cfg.ell_max, cfg.n_max, cfg.threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ls = find_periodic_orbits(prof, int(cfg.lengths.get("n_max_chords", 40)),
                                  int(cfg.lengths.get("m_max", 20)))
    lengths, labels = labelled_lengths(ls, t_max + pad)
    t = np.arange(max(t_min - pad, 1e-3), t_max + pad + 0.5 * dt, dt)
    res = trace_vs_lengths(prof, spec, lengths, Window(omega_max), t, cfg.tol, t_min, t_max,
                           labels)
    out = cfg.out()
    res["series"].to_csv(out / "trace.csv")
    write_peaks_json(out / "peaks.json", res["matches"])
    ls.to_csv(out / "lengths.csv")
    summary = {**_header(cfg), "omega_max": omega_max, "t_range": [t_min, t_max],
               "matches": res["matches"], "coverage": res["coverage"],
               "peaks_ok": res["peaks_ok"], "coverage_ok": res["coverage_ok"]}
    _write_json(out / "trace_summary.json", summary)
    return summary


def density_modes(prof, bc, variant, K: int, threads: int = 1):
    return lowest_modes(prof, K, bc, variant, threads)


def run_density(cfg: ExperimentConfig) -> dict:
    prof = cfg.make_profile()
    bc = cfg.boundary()
    J = int(cfg.density.get("J", 8))
    Ks = sorted(int(k) for k in cfg.density.get("K", [20, 40, 60, 80]))
    basis = pt.legendre_basis(prof, J)
    modes = density_modes(prof, bc, cfg.variant, max(Ks), cfg.threads)
    trend = []
    Q = None
    for K in Ks:
        Q, smin = pt.density_gram(modes[:K], basis, prof)
        trend.append({"K": K, "J": J, "sigma_min": smin})
    np.savetxt(cfg.out() / "gram.csv", Q, delimiter=",", fmt="%.17g")

    rng = np.random.default_rng(cfg.seed)
    test = cfg.density.get("test_function")
    if test is None:
        coef_true = rng.normal(size=J)
        f = sum(c * phi for c, phi in zip(coef_true, basis))
    else:
        f = prof.sample(_fn(test))
        coef_true = None
    pairings = np.array([pt.pairing(f, m, prof) for m in modes[:Ks[-1]]])
    if np.linalg.norm(pairings) == 0.0:
        coef, resid, f_err = np.zeros(J), 0.0, 0.0
    else:
        coef, resid = pt.reconstruct(Q, pairings)
        f_hat = sum(c * phi for c, phi in zip(coef, basis))
        f_err = float(np.linalg.norm(f_hat - f) / np.linalg.norm(f))
    monotone = all(b["sigma_min"] >= 0.99 * a["sigma_min"] for a, b in zip(trend, trend[1:]))
    summary = {**_header(cfg), "trend": trend, "monotone": monotone,
               "pairing_residual": resid, "reconstruction_rel_err": f_err,
               "coefficients": [float(c) for c in coef],
               "true_coefficients": None if coef_true is None else [float(c) for c in coef_true]}
    _write_json(cfg.out() / "density.json", summary)
    return summary


def _is_zero(x: np.ndarray) -> bool:
    return bool(np.all(x == 0.0))


def run_rigidity(cfg: ExperimentConfig) -> dict:
    """Forward check of each link of the rigidity argument for one family."""
    prof = cfg.make_profile()
    bc = cfg.boundary()
    tol = cfg.tol
    fam = cfg.make_family()
    variant = cfg.variant
    spec = full_spectrum(prof, bc, variant, cfg.ell_max, cfg.n_max, cfg.threads)
    lam_max = float(np.max(np.abs(spec.lams)))
    dl = np.array([pt.delta_lambda(m, fam, prof, variant) for m in spec.modes])
    max_dl = float(np.max(np.abs(dl)))
    a_s = prof.sample(fam.a_dir) if fam.a_dir is not None else np.zeros(prof.n)
    b_s = prof.sample(fam.b_dir) if fam.b_dir is not None else np.zeros(prof.n)
    db = np.diff(b_s) / np.diff(prof.r)
    # constant b-directions are the gauge b -> b + const, hence null
    null = _is_zero(a_s) and _is_zero(db)
    links = {}
    verdict = []

    if null:
        ok = max_dl <= tol["tol_null_rel"] * lam_max
        links["first_order_null"] = ok
        verdict.append(f"null family: max|dlam| = {max_dl:.3e} "
                       f"{'<=' if ok else '>'} tol_null; spectrum unchanged to first order")
    else:
        ok = max_dl >= tol["tol_detect_rel"] * lam_max
        links["detects_perturbation"] = ok
        verdict.append(f"non-null family: max|dlam| = {max_dl:.3e} "
                       f"{'>=' if ok else '<'} tol_detect; the spectrum sees the change, "
                       "consistent with a_s = a_0 and b_s flat for isospectral families")

    # a-side: Abel transform of d/ds c_s^-2 over a radius grid
    a_resid = 0.0
    if fam.a_dir is not None and not _is_zero(a_s):
        if herglotz_margin(prof) > 0:
            lo = prof.inner_radius + 0.05 * (1 - prof.inner_radius)
            radii = np.linspace(lo, 0.95, 12)
            adir = fam.a_dir
            if isinstance(adir, np.ndarray):
                adir = lambda r, _s=a_s: np.interp(r, prof.r, _s)
            a_resid = float(np.max(np.abs(speed_variation_abel(prof, adir, radii))))
        else:
            verdict.append("Herglotz margin not positive: a-side residual skipped")

    # b-side: the flux form of delta lambda and the energy identity
    ibp = 0.0
    energy = pair = 0.0
    if fam.b_dir is not None:
        grad = np.array([pt.delta_lambda_b(m, fam.b_dir, prof) for m in spec.modes])
        div = np.array([pt.delta_lambda_b_divergence(m, fam.b_dir, prof) for m in spec.modes])
        ibp = float(np.max(np.abs(grad - div)))
        links["integration_by_parts"] = ibp <= tol["ibp_abs"]
        energy, pair = pt.energy_identity(fam.b_dir, prof)
        links["energy_identity"] = abs(energy - pair) <= tol["ibp_abs"] * max(1.0, abs(energy))
        verdict.append(f"-int e^b |b'_r|^2 = {energy:.6e}; "
                       f"int b' div(e^b grad b') = {pair:.6e}")

    second = None
    if fam.b_dir2 is not None and _is_zero(db) and _is_zero(a_s):
        d2 = {(m.ell, m.n): pt.delta2_lambda_b(m, fam.b_dir2, prof, variant) for m in spec.modes}
        fd2 = pt.fd_second_derivative(prof, bc, variant, fam.b_dir2, cfg.ell_max, cfg.n_max,
                                      tol["fd_step2"])
        scale = max(abs(v) for v in d2.values())
        err = max(abs(d2[k] - fd2[k]) for k in d2) / scale if scale > 0 else 0.0
        second = {"max_rel_err": err, "max_abs_lambda2": scale}
        links["second_order"] = err <= tol["second_order_rel"]
        verdict.append(f"second order: lam'' = <L'' psi, psi> matches FD to {err:.2e}")

    report = {**_header(cfg), "max_abs_dlambda": max_dl, "max_abs_lambda": lam_max,
              "tol_null": tol["tol_null_rel"] * lam_max,
              "tol_detect": tol["tol_detect_rel"] * lam_max,
              "null_family": null, "a_side_abel_residual": a_resid,
              "b_side_grad_residual": float(np.max(np.abs(db))),
              "ibp_max_abs_diff": ibp, "energy": energy, "energy_pairing": pair,
              "second_order": second, "links": links,
              "failed_links": [k for k, v in links.items() if not v],
              "verdict": verdict}
    _write_json(cfg.out() / "rigidity.json", report)
    return report


RUNNERS = {"spectrum": run_spectrum, "perturb": run_perturb, "lengths": run_lengths,
           "trace": run_trace, "density": run_density, "rigidity": run_rigidity}


def run(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.experiment](cfg)
