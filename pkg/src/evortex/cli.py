"""Command-line front end.

    evortex <mode|observables|evolve|oracle|phases> [CONFIG] [--config PATH]
            [--out DIR] [--set key=value ...] [--format csv|png|pgm|json ...]

Configs are flat ``key = value`` text files (``#`` starts a comment); every
``--set`` overrides one key.  ``scenario = <name>`` loads a named recipe whose
keys can themselves be overridden.  Exit codes: 0 success, 1 tolerance
failure, 2 usage or configuration error.
"""

import argparse
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import export
from .evolution import (SuperpositionSpec, centroid_tracks, evolve, fit_rate, make_balanced, make_offaxis,
                        orbit_rate, propagate_analytic)
from .field import CartesianGrid, density_current, sample
from .modes import (UNIT_CONVENTION, ModeError, ModeSpec, delta_kz_paraxial, landau_kz_exact, landau_levels,
                    lg_radial, make_context, transverse_energy)
from .observables import bessel_cutoff_grid, observables_report
from . import propagator as prop

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2
FORMATS = ("csv", "png", "pgm", "json")
DEFAULT_FORMATS = ("csv", "png", "json")


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ parsing


def _int_list(text):
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..")
            a, b = int(a), int(b)
            out.extend(range(a, b + 1) if a <= b else range(a, b - 1, -1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("empty list")
    return out


def _float_list(text):
    vals = [float(p) for p in text.replace(" ", "").split(",") if p]
    if not vals:
        raise ValueError("empty list")
    return vals


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _word(*choices):
    def parse(text):
        t = text.strip().lower()
        if t not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}")
        return t
    return parse


def _words(*choices):
    def parse(text):
        items = [t.strip().lower() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if bad or not items:
            raise ValueError(f"expected a list drawn from {', '.join(choices)}")
        return items
    return parse


def _terms(text):
    """``ell:n:coeff; ell:n:coeff`` with an optional complex coefficient."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"term {chunk!r} is not ell:n[:coeff]")
        c = complex(parts[2].replace(" ", "")) if len(parts) == 3 else 1.0
        out.append((int(parts[0]), int(parts[1]), c))
    if not out:
        raise ValueError("no terms")
    return out


SCENARIO_NAMES = ("bessel_modes", "lg_modes", "ab_modes", "landau_modes", "balanced", "offaxis_parallel",
                  "offaxis_antiparallel", "ehrenfest", "offaxis_multi", "fourmode", "oracle")

KEYS = {
    "scenario": _word(*SCENARIO_NAMES),
    "B": float,
    "E": float,
    "family": _word("landau", "free_bessel", "free_lg", "ab_bessel"),
    "ell": _int_list,
    "n": _int_list,
    "kappa": float,
    "alpha": float,
    "w0": float,
    "z": float,
    "grid_n": int,
    "extent": float,
    "cutoff_zero": int,
    "cutoff_nr": int,
    "superposition": _word("balanced", "offaxis", "terms"),
    "terms": _terms,
    "a": complex,
    "z_max": float,
    "nz": int,
    "frames": _float_list,
    "exact_kz": _bool,
    "ehrenfest": _bool,
    "vortices": _bool,
    "checks": _words("stationarity", "width", "eigenphase", "rotation", "unitarity"),
    "nr": int,
    "r_max": float,
    "dz_steps": int,
    "ell_truncation": int,
    "nphi": int,
    "halvings": int,
    "tol_corr": float,
    "tol_width": float,
    "tol_phase": float,
    "tol_rate": float,
}

BASE = {"B": "2.0", "E": "2000.0", "grid_n": "256", "extent": "5.0", "z": "0.0", "cutoff_zero": "6",
        "cutoff_nr": "512", "kappa": "0.6", "w0": "1.0", "n": "0", "a": "1", "z_max": "2.0", "nz": "41",
        "frames": "", "exact_kz": "false", "ehrenfest": "false", "vortices": "true"}

SCENARIOS = {
    "bessel_modes": {"family": "free_bessel", "B": "0", "E": "0.5", "ell": "0..3", "extent": "12"},
    "lg_modes": {"family": "free_lg", "B": "0", "ell": "0..3", "n": "0,1", "extent": "3.5"},
    "ab_modes": {"family": "ab_bessel", "B": "0", "E": "0.5", "ell": "-2..2", "alpha": "-1.5", "extent": "12"},
    "landau_modes": {"family": "landau", "ell": "-3..3", "n": "0", "extent": "4"},
    "balanced": {"superposition": "balanced", "ell": "1,3", "frames": "0,0.5,1,1.5,2"},
    "offaxis_parallel": {"superposition": "offaxis", "ell": "1,3", "frames": "0,0.5,1,1.5,2"},
    "offaxis_antiparallel": {"superposition": "offaxis", "ell": "-1,-3", "frames": "0,0.5,1,1.5,2"},
    "ehrenfest": {"superposition": "offaxis", "ell": "1,-1", "ehrenfest": "true", "z_max": "3.14159265358979",
             "frames": "0"},
    "offaxis_multi": {"superposition": "offaxis", "ell": "-1..-4", "frames": "0", "z_max": "1", "nz": "11"},
    "fourmode": {"superposition": "terms", "terms": "-2:0:1; -1:0:1; 1:0:1; 2:0:1", "z_max": "1.4",
                 "nz": "43", "frames": "0,0.5,1"},
    "oracle": {"checks": "stationarity,width,eigenphase,rotation,unitarity", "ell": "1,-1,2,-3",
               "n": "0", "nr": "1024", "r_max": "8", "dz_steps": "4096", "ell_truncation": "4",
               "nphi": "64", "halvings": "2", "z_max": "1", "nz": "17", "tol_corr": "0.999",
               "tol_width": "0.01", "tol_phase": "0.01", "tol_rate": "0.02"},
}


@dataclass
class Setting:
    value: object
    origin: str


def parse_config_text(text, source):
    """Raw ``{key: (text, origin)}`` from config text; origin is ``file:line``."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = (value, f"{source}:{lineno}")
    return out


def resolve(raw, overrides):
    """Merge base defaults, scenario recipe, file keys and --set overrides; parse types."""
    merged = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"--set {item!r}: unknown key {key!r}")
        merged[key] = (value, f"--set {item}")
    layered = dict(raw)
    layered.update(merged)
    scen = layered.get("scenario")
    texts = {k: (v, "default") for k, v in BASE.items()}
    if scen is not None:
        name = scen[0].strip().lower()
        if name not in SCENARIOS:
            raise ConfigError(f"{scen[1]}: unknown scenario {scen[0]!r}")
        texts.update({k: (v, f"scenario {name}") for k, v in SCENARIOS[name].items()})
    texts.update(layered)
    settings = {}
    for key, (text, origin) in texts.items():
        if text == "" and key == "frames":
            settings[key] = Setting([], origin)
            continue
        try:
            settings[key] = Setting(KEYS[key](text), origin)
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from None
    return settings


class Config:
    def __init__(self, settings):
        self._s = settings

    def get(self, key, default=None):
        s = self._s.get(key)
        return default if s is None else s.value

    def need(self, key):
        if key not in self._s:
            raise ConfigError(f"missing required key {key!r}")
        return self._s[key].value

    def origin(self, key):
        s = self._s.get(key)
        return s.origin if s else "default"

    def error(self, key, msg):
        return ConfigError(f"{self.origin(key)}: {key}: {msg}")

    def context(self):
        try:
            return make_context(self.need("B"), self.need("E"))
        except ModeError as exc:
            raise self.error("E", str(exc)) from None

    def as_dict(self):
        out = {}
        for k, s in sorted(self._s.items()):
            v = s.value
            if isinstance(v, complex):
                v = [v.real, v.imag]
            elif k == "terms":
                v = [[l, n, [c.real, c.imag]] for l, n, c in v]
            out[k] = v
        return out


# ------------------------------------------------------------ mode / obs


def _mode_specs(cfg):
    fam = cfg.need("family")
    ells = cfg.need("ell")
    ns = cfg.get("n", [0])
    specs = []
    for n in ns:
        for ell in ells:
            if fam == "landau":
                specs.append(ModeSpec.landau(ell, n))
            elif fam == "free_lg":
                specs.append(ModeSpec.free_lg(ell, n, cfg.need("w0")))
            elif fam == "free_bessel":
                specs.append(ModeSpec.free_bessel(ell, cfg.need("kappa")))
            else:
                specs.append(ModeSpec.ab_bessel(ell, cfg.need("alpha"), cfg.need("kappa")))
        if fam in ("free_bessel", "ab_bessel"):
            break  # no radial index for Bessel families
    return specs


def _scale(spec, ctx, cfg):
    if spec.is_bessel:
        return 1.0 / spec.kappa
    if spec.family.value == "landau_lg":
        return ctx.w_m
    return spec.w0


def _label(spec):
    parts = [spec.family.value, f"l{spec.ell:+d}"]
    if spec.is_lg:
        parts.append(f"n{spec.n}")
    if spec.family.value == "ab_bessel":
        parts.append(f"a{spec.alpha:+g}")
    return "_".join(parts).replace("+", "p").replace("-", "m").replace(".", "d")


def _report_for(spec, ctx, cfg):
    if spec.is_bessel:
        grid = bessel_cutoff_grid(spec, cfg.get("cutoff_zero"), nr=cfg.get("cutoff_nr"),
                                  nphi=max(128, 32 * (abs(spec.ell) + 2)))
    else:
        grid = CartesianGrid(cfg.get("grid_n"), cfg.get("grid_n"), cfg.get("extent") * _scale(spec, ctx, cfg))
    field = sample([spec], ctx, grid, z=cfg.get("z"))
    rep = observables_report(field).to_dict()
    rep["grid"] = grid.to_dict()
    expected = {}
    if spec.family.value == "landau_lg":
        expected["L_kinetic"] = spec.ell + ctx.sigma * (2 * spec.n + abs(spec.ell) + 1)
        expected["spot2"] = 2 * spec.n + abs(spec.ell) + 1
        expected["M_z_times_B"] = -transverse_energy(ctx, spec.ell, spec.n)
    elif spec.family.value == "ab_bessel":
        expected["L_kinetic"] = spec.ell - spec.alpha
    else:
        expected["L_kinetic"] = spec.ell
    rep["closed_form"] = expected
    rep["M_z_times_B"] = rep["M_z"] * ctx.B
    return rep


def run_mode(cfg, out, formats, with_files=True):
    ctx = cfg.context()
    try:
        specs = _mode_specs(cfg)
    except ModeError as exc:
        raise cfg.error("family", str(exc)) from None
    prefix = cfg.get("scenario") or "mode"
    reports = []
    for spec in specs:
        try:
            rep = _report_for(spec, ctx, cfg)
        except ModeError as exc:
            raise cfg.error("family", str(exc)) from None
        label = _label(spec)
        reports.append({"label": label, **rep})
        if with_files:
            grid = CartesianGrid(cfg.get("grid_n"), cfg.get("grid_n"), cfg.get("extent") * _scale(spec, ctx, cfg))
            field = sample([spec], ctx, grid, z=cfg.get("z"))
            stem = out / f"{prefix}_{label}"
            if "csv" in formats:
                Path(f"{stem}.csv").write_text(export.field_csv(field, density_current(field, check=False)))
            export.write_images(field, stem, formats)
    doc = {"config": cfg.as_dict(), "units": UNIT_CONVENTION, "context": ctx.describe(), "modes": reports}
    if "json" in formats:
        export.write_json(out / f"{prefix}_report.json", doc)
    return doc


def cmd_mode(cfg, out, formats):
    doc = run_mode(cfg, out, formats)
    for r in doc["modes"]:
        print(f"{r['label']}: L_kinetic = {r['L_kinetic']:.6f} (closed form {r['closed_form']['L_kinetic']:g})")
    return EXIT_OK


def cmd_observables(cfg, out, formats):
    doc = run_mode(cfg, out, ("json",) if "json" in formats else (), with_files=False)
    sys.stdout.write(export.dumps(doc["modes"]))
    return EXIT_OK


# ------------------------------------------------------------------ evolve


def _superpositions(cfg, ctx):
    kind = cfg.need("superposition")
    n = cfg.get("n", [0])[0]
    if kind == "terms":
        terms = tuple((ModeSpec.landau(l, nn), c) for l, nn, c in cfg.need("terms"))
        label = "terms_" + "_".join(f"{l:+d}" for l, _, _ in cfg.need("terms"))
        return [(label.replace("+", "p").replace("-", "m"), SuperpositionSpec(terms, ctx))]
    out = []
    for ell in cfg.need("ell"):
        if kind == "balanced":
            sup = make_balanced(ell, n, ctx)
        else:
            sup = make_offaxis(ell, n, cfg.get("a"), ctx)
        out.append((f"{kind}_l{ell:+d}_n{n}".replace("+", "p").replace("-", "m"), sup))
    return out


def _expected_rate(kind, ell, sigma):
    if kind == "balanced":
        return float(sigma)
    if kind == "offaxis":
        return 2.0 * sigma if sigma * ell > 0 else 0.0
    return None


def run_evolve(cfg, out, formats):
    ctx = cfg.context()
    if not ctx.has_field:
        raise cfg.error("B", "evolution scenarios need B != 0")
    zm, wm = ctx.z_m, ctx.w_m
    zs = np.linspace(0.0, cfg.get("z_max") * zm, cfg.get("nz"))
    frame_Z = cfg.get("frames")
    grid = CartesianGrid(cfg.get("grid_n"), cfg.get("grid_n"), cfg.get("extent") * wm)
    prefix = cfg.get("scenario") or "evolve"
    try:
        sups = _superpositions(cfg, ctx)
    except ModeError as exc:
        raise cfg.error("superposition", str(exc)) from None
    results = []
    for label, sup in sups:
        res = evolve(sup, grid, zs, exact_kz=cfg.get("exact_kz"), vortices=cfg.get("vortices"))
        entry = {"label": label, "superposition": sup.to_dict(), **res.to_dict(z_unit=zm)}
        ok = np.isfinite(res.rotation_angle)
        kind = cfg.need("superposition")
        if ok.sum() >= 2:
            window = ok
            if kind == "terms":
                # Mirror-symmetric Larmor-frame densities flip the correlation
                # peak at the half period; fit the first branch only.
                window = ok & (zs <= 0.45 * math.pi * zm)
            slope, resid = fit_rate(zs[window] / zm, res.rotation_angle[window])
            entry["rotation_rate"] = slope
            entry["rotation_fit_residual"] = resid
            entry["min_correlation_peak"] = float(np.nanmin(res.correlation_peak[window]))
        if kind != "terms":
            entry["expected_rate"] = _expected_rate(kind, sup.terms[-1][0].ell, ctx.sigma)
        travel = np.hypot(*(res.centroid_track - res.centroid_track[0]).T)
        if np.max(travel) > 1e-6 * wm:
            entry["centroid_orbit_rate"] = orbit_rate(res.centroid_track, zs / zm)
        entry["centroid_max_travel_over_wm"] = float(np.max(travel) / wm)
        rows = [[zs[i], zs[i] / zm, res.rotation_angle[i], res.correlation_peak[i],
                 res.centroid_track[i, 0], res.centroid_track[i, 1]] for i in range(len(zs))]
        header = ["z", "Z", "rotation_angle", "correlation_peak", "cx", "cy"]
        if cfg.get("ehrenfest"):
            q, c = centroid_tracks(sup, grid, zs, exact_kz=cfg.get("exact_kz"))
            dev = np.hypot(*(q - c).T)
            entry["ehrenfest_max_deviation_over_wm"] = float(np.max(dev) / wm)
            entry["classical_track"] = c.tolist()
            header += ["classical_x", "classical_y"]
            rows = [r + [c[i, 0], c[i, 1]] for i, r in enumerate(rows)]
        if "csv" in formats:
            Path(out / f"{prefix}_{label}_track.csv").write_text(export.table_csv(header, rows))
        for Z in frame_Z:
            fr = propagate_analytic(sup, grid, Z * zm, exact_kz=cfg.get("exact_kz"))
            stem = out / f"{prefix}_{label}_Z{Z:g}".replace(".", "p")
            if "csv" in formats:
                Path(f"{stem}.csv").write_text(export.field_csv(fr, density_current(fr, check=False)))
            export.write_images(fr, stem, formats)
        results.append(entry)
    doc = {"config": cfg.as_dict(), "units": UNIT_CONVENTION, "context": ctx.describe(), "results": results}
    if "json" in formats:
        export.write_json(out / f"{prefix}_evolution.json", doc)
    return doc


def cmd_evolve(cfg, out, formats):
    doc = run_evolve(cfg, out, formats)
    for r in doc["results"]:
        parts = [r["label"]]
        if "rotation_rate" in r:
            parts.append(f"rate = {r['rotation_rate']:.4f} /z_m")
        if r.get("expected_rate") is not None:
            parts.append(f"(expected {r['expected_rate']:g})")
        if "centroid_orbit_rate" in r:
            parts.append(f"centroid orbit {r['centroid_orbit_rate']:.4f} /z_m")
        if "ehrenfest_max_deviation_over_wm" in r:
            parts.append(f"Ehrenfest dev {r['ehrenfest_max_deviation_over_wm']:.2e} w_m")
        nv = sum(1 for v in r["samples"][0]["vortices"])
        parts.append(f"vortices at z=0: {nv}")
        print("  ".join(parts))
    return EXIT_OK


# ------------------------------------------------------------------ oracle


def run_oracle(cfg):
    ctx = cfg.context()
    if not ctx.has_field:
        raise cfg.error("B", "oracle checks need B != 0 (the width check builds its own B = 0 context)")
    zm, wm = ctx.z_m, ctx.w_m
    steps = cfg.get("dz_steps", 4096)
    config = prop.PropagatorConfig(nr=cfg.get("nr", 1024), r_max=cfg.get("r_max", 8.0) * wm, dz=zm / steps,
                                   ell_truncation=cfg.get("ell_truncation", 4))
    checks = cfg.get("checks", ["stationarity", "width", "eigenphase", "rotation", "unitarity"])
    ells = cfg.get("ell", [1])
    n0 = cfg.get("n", [0])[0]
    report = {"config": cfg.as_dict(), "context": ctx.describe(), "units": UNIT_CONVENTION,
              "propagator": {"nr": config.nr, "r_max": config.r_max, "dz": config.dz,
                             "ell_truncation": config.ell_truncation}, "checks": {}}
    violations = config.check(ctx, ells + [1], mode_radius=wm * math.sqrt(2 * n0 + max(map(abs, ells)) + 1))
    report["config_violations"] = violations
    failed = bool(violations)
    for name in checks:
        try:
            res = _oracle_check(name, cfg, ctx, config, ells, n0)
        except prop.PropagationError as exc:
            res = {"passed": False, "error": str(exc), "diagnostics": exc.diagnostics}
        report["checks"][name] = res
        failed |= not res["passed"]
    report["passed"] = not failed
    return report


def _oracle_check(name, cfg, ctx, config, ells, n0):
    zm, wm = ctx.z_m, ctx.w_m
    if name == "stationarity":
        sup = SuperpositionSpec(((ModeSpec.landau(1, 0), 1.0),), ctx)
        c = prop.stationarity(sup, config, zm, nphi=cfg.get("nphi", 64))
        return {"mode": [1, 0], "z": zm, "correlation": c, "threshold": cfg.get("tol_corr"),
                "passed": c >= cfg.get("tol_corr")}
    if name == "width":
        ctx0 = make_context(0.0, ctx.E)
        w0 = cfg.get("w0", 1.0)
        zR = ctx0.k * w0**2 / 2
        c0 = replace(config, r_max=10 * w0, dz=zR / cfg.get("dz_steps", 4096), ell_truncation=0)
        w = prop.free_lg_width(w0, ctx0, c0, zR)
        rel = abs(w / (w0 * math.sqrt(2)) - 1)
        return {"w0": w0, "z_R": zR, "fitted_width": w, "expected": w0 * math.sqrt(2), "rel_error": rel,
                "threshold": cfg.get("tol_width"), "passed": rel <= cfg.get("tol_width")}
    if name == "eigenphase":
        rows, ok = [], True
        for ell in ells:
            rep = prop.eigenphase_convergence(ModeSpec.landau(ell, n0), ctx, config, zm,
                                              halvings=cfg.get("halvings", 2))
            good = rep["rel_error"] <= cfg.get("tol_phase") and all(3.0 <= r <= 5.0 for r in rep["ratios"])
            rows.append({"ell": ell, "n": n0, **rep, "passed": good})
            ok &= good
        return {"modes": rows, "threshold": cfg.get("tol_phase"), "passed": ok}
    if name == "rotation":
        zs = np.linspace(0, cfg.get("z_max", 1.0) * zm, cfg.get("nz", 17))
        cases = [("balanced", make_balanced(1, 0, ctx), ctx.sigma * 1.0),
                 ("offaxis_parallel", make_offaxis(ctx.sigma, 0, 1, ctx), 2.0 * ctx.sigma),
                 ("offaxis_antiparallel", make_offaxis(-ctx.sigma, 0, 1, ctx), 0.0)]
        rows, ok = [], True
        for label, sup, rate in cases:
            num, ana = prop.oracle_rotation(sup, replace(config, nr=min(config.nr, 512)), zs,
                                            nphi=cfg.get("nphi", 64))
            expect = rate * zs[-1] / zm
            good = abs(num[-1] - expect) <= cfg.get("tol_rate") and np.max(np.abs(num - ana)) <= cfg.get("tol_rate")
            rows.append({"case": label, "numerical": num.tolist(), "analytic": ana.tolist(),
                         "expected_final": expect, "passed": bool(good)})
            ok &= good
        return {"z": zs.tolist(), "cases": rows, "passed": ok}
    if name == "unitarity":
        r = (np.arange(config.nr) + 0.5) * config.r_max / config.nr
        u = lg_radial(2, 0, wm, r)[None, :] + 0j
        ch = prop.ChannelSet(ells=np.array([2]), u=u, nr=config.nr, r_max=config.r_max)
        n0_ = ch.norm()
        stepper = prop.Propagator(ch.ells, ch.nr, ch.r_max, ctx, config.dz)
        ch = stepper.advance(ch, 4096)
        drift = abs(ch.norm() / n0_ - 1)
        return {"steps": 4096, "norm_drift": drift, "threshold": 1e-8, "passed": drift < 1e-8}
    raise ConfigError(f"unknown oracle check {name!r}")


def cmd_oracle(cfg, out, formats):
    report = run_oracle(cfg)
    export.write_json(out / f"{cfg.get('scenario') or 'oracle'}_convergence.json", report)
    for name, res in report["checks"].items():
        print(f"{name}: {'PASS' if res['passed'] else 'FAIL'}")
    for v in report["config_violations"]:
        print(f"config: {v}")
    return EXIT_OK if report["passed"] else EXIT_TOLERANCE


# ------------------------------------------------------------------ phases


def phase_table(cfg):
    ctx = cfg.context()
    ells = cfg.get("ell", list(range(-3, 4)))
    ns = cfg.get("n", [0, 1, 2])
    header = ["ell", "n", "N", "E_perp_over_Omega", "E_Zeeman_over_Omega", "E_Gouy_over_Omega",
              "gouy_total_over_pi"]
    if ctx.has_field:
        header += ["dkz_paraxial_times_zm", "kz_exact_minus_k_times_zm"]
    rows = []
    for n in ns:
        for ell in ells:
            if ctx.has_field:
                lv = landau_levels(ell, n, ctx.sigma)
                row = [ell, n, lv.N, lv.e_perp, lv.e_zeeman, lv.e_gouy, 2 * n + abs(ell) + 1]
                try:
                    row.append(delta_kz_paraxial(ctx, ell, n, threshold=math.inf) * ctx.z_m)
                except ModeError:
                    row.append("nan")
                try:
                    row.append((landau_kz_exact(ctx, ell, n) - ctx.k) * ctx.z_m)
                except ModeError:
                    row.append("bound")
            else:
                row = [ell, n, "", "", "", "", 2 * n + abs(ell) + 1]
            rows.append(row)
    return header, rows


def cmd_phases(cfg, out, formats):
    header, rows = phase_table(cfg)
    text = export.table_csv(header, rows)
    sys.stdout.write(text)
    if "csv" in formats:
        Path(out / "phases.csv").write_text(text)
    return EXIT_OK


COMMANDS = {"mode": cmd_mode, "observables": cmd_observables, "evolve": cmd_evolve, "oracle": cmd_oracle,
            "phases": cmd_phases}


# -------------------------------------------------------------------- main


def build_parser():
    p = argparse.ArgumentParser(prog="evortex", description="Electron vortex beams in magnetic fields.")
    sub = p.add_subparsers(dest="command", metavar="{mode,observables,evolve,oracle,phases}")
    helps = {"mode": "single-mode images, current CSV and observables report",
             "observables": "observables report only (JSON to stdout)",
             "evolve": "propagate superpositions: rotation, centroid, vortices",
             "oracle": "numerical propagator cross-checks (exit 1 on failure)",
             "phases": "Landau level / dispersion / phase table"}
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config_path", nargs="?", help="config file (same as --config)")
        sp.add_argument("--config", dest="config", help="flat key = value config file")
        sp.add_argument("--out", default=".", help="output directory (created if missing)")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--format", dest="formats", action="append", choices=FORMATS)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.config and args.config_path and args.config != args.config_path:
        sys.stderr.write("evortex: give the config either positionally or with --config, not both\n")
        return EXIT_USAGE
    path = args.config or args.config_path
    try:
        raw = {}
        if path is not None:
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
            raw = parse_config_text(text, path)
        if not raw and not args.overrides and args.command != "phases":
            sys.stderr.write(f"evortex {args.command}: empty configuration\n")
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        cfg = Config(resolve(raw, args.overrides))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        formats = tuple(args.formats) if args.formats else DEFAULT_FORMATS
        return COMMANDS[args.command](cfg, out, formats)
    except ConfigError as exc:
        sys.stderr.write(f"evortex: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
