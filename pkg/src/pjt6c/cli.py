"""Command-line front end: ``pjt6c <subcommand> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constants as C
from . import emission, lineshape, polaron, thermo, vibronic
from ._io import fmt, write_text
from .config import ConfigError, RunConfig, apply_override, load_preset, parse_config

SUBCOMMANDS = ("solve", "apes", "fit", "spectrum", "isotope", "rates", "zpl", "thermo")
MODULE_OF = {
    "solve": "polaron-solver",
    "apes": "vibronic-model",
    "fit": "vibronic-model",
    "spectrum": "lineshape",
    "isotope": "lineshape",
    "rates": "emission-observables",
    "zpl": "emission-observables",
    "thermo": "defect-thermo",
}

# every warning a run can emit
WARN_SINGLE_MODE = lineshape.NOTE_SINGLE_MODE
WARN_SIMPLE_SCALING = lineshape.NOTE_SIMPLE_SCALING
WARN_BOLTZMANN = emission.MODEL_NOTE
WARN_PRESET_OMEGA = "hbar_omega_meV of the preset is the sideband spacing, not a fitted E quantum"


class RunError(RuntimeError):
    pass


@dataclass
class RunReport:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    overrides: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def warn(self, message: str):
        if message not in self.warnings:
            self.warnings.append(message)

    def to_json(self) -> str:
        return json.dumps(
            {
                "subcommand": self.subcommand,
                "parameters": self.parameters,
                "files": self.files,
                "warnings": self.warnings,
                "overrides": self.overrides,
                "errors": self.errors,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"


def _require(cfg: RunConfig, section: str, *keys):
    missing = [k for k in keys if k not in cfg.section(section)]
    if missing:
        raise ConfigError(f"[{section}] missing required key(s): {', '.join(missing)}")


def resolve_params(cfg: RunConfig, report: RunReport | None = None) -> vibronic.VibronicParameterSet:
    """Build the parameter set from ``[params]``, layering explicit keys over a preset."""
    explicit = dict(cfg.section("params"))
    merged = {}
    preset = explicit.pop("preset", None)
    if preset is not None:
        merged.update(load_preset(preset).section("params"))
        if report is not None and "hbar_omega_meV" not in explicit:
            report.warn(WARN_PRESET_OMEGA)
    if {"f_o_meV", "f_u_meV"} & set(explicit):
        for k in ("e_jt1_meV", "e_jt2_meV"):
            merged.pop(k, None)
    merged.update(explicit)
    have_f = {"f_o_meV", "f_u_meV"} & set(merged)
    have_e = {"e_jt1_meV", "e_jt2_meV"} & set(merged)
    if have_f and have_e:
        raise ConfigError("[params] give either f_o_meV/f_u_meV or e_jt1_meV/e_jt2_meV, not both")
    need = ["lambda_meV", "delta_meV", "hbar_omega_meV"] + (
        ["e_jt1_meV", "e_jt2_meV"] if have_e else ["f_o_meV", "f_u_meV"]
    )
    missing = [k for k in need if k not in merged]
    if missing:
        raise ConfigError(f"[params] missing required key(s): {', '.join(missing)}")
    spin = merged.get("spin", "singlet")
    prov = merged.get("provenance", preset or "user")
    if have_e:
        p = vibronic.VibronicParameterSet.from_jt_energies(
            spin, merged["lambda_meV"], merged["delta_meV"], merged["e_jt1_meV"],
            merged["e_jt2_meV"], merged["hbar_omega_meV"], prov,
        )
    else:
        p = vibronic.VibronicParameterSet(
            spin, merged["lambda_meV"], merged["delta_meV"], merged["f_o_meV"],
            merged["f_u_meV"], merged["hbar_omega_meV"], prov,
        )
    if report is not None:
        e1, e2 = p.jt_energies
        report.parameters["params"] = {
            "spin": p.spin.value, "lambda_meV": p.lambda_meV, "delta_meV": p.delta_meV,
            "f_o_meV": p.f_o_meV, "f_u_meV": p.f_u_meV, "hbar_omega_meV": p.hbar_omega_meV,
            "e_jt1_meV": e1, "e_jt2_meV": e2, "provenance": p.provenance,
            "preset": preset,
        }
    return p


def _emit(report: RunReport, out: Path, name: str, text: str):
    write_text(out / name, text)
    report.files.append(name)


def _cmd_solve(cfg, out, report, base):
    p = resolve_params(cfg, report)
    s = cfg.section("solve")
    n_max = s.get("n_max", 40)
    k = s.get("k", 6)
    method = s.get("method", "auto")
    tol = s.get("degeneracy_tol_meV", polaron.DEFAULT_DEGENERACY_TOL_MEV)
    sweep = s.get("sweep", [max(n_max - 4, 0), n_max] if n_max >= 4 else [n_max])
    report.parameters["solve"] = {"n_max": n_max, "k": k, "method": method,
                                  "degeneracy_tol_meV": tol, "sweep": sweep}
    H = vibronic.build_total_hamiltonian(p, n_max)
    states = polaron.classify(polaron.solve_lowest(H, min(k, H.dim), method=method), tol)
    conv = polaron.convergence_sweep(p, sweep, k=min(2, k), method=method)
    _emit(report, out, "states.csv", polaron.states_csv(states, conv))
    rows = ["n_max,level,energy_meV"]
    for n, energies in zip(conv.n_max_values, conv.energies_meV):
        rows += [f"{n},{i},{fmt(e)}" for i, e in enumerate(energies)]
    _emit(report, out, "convergence.csv", "\n".join(rows) + "\n")


def _cmd_apes(cfg, out, report, base):
    p = resolve_params(cfg, report)
    a = cfg.section("apes")
    x_min, x_max = a.get("x_min", -3.0), a.get("x_max", 3.0)
    n_points = a.get("n_points", 121)
    y = a.get("y", 0.0)
    report.parameters["apes"] = {"x_min": x_min, "x_max": x_max, "n_points": n_points, "y": y}
    xs = np.linspace(x_min, x_max, n_points)
    rows = ["x,y,E1_meV,E2_meV,E3_meV,E4_meV"]
    for smp in vibronic.apes_slice(p, xs, y):
        rows.append(",".join([fmt(smp.x), fmt(smp.y), *(fmt(e) for e in smp.branch_energies)]))
    _emit(report, out, "apes.csv", "\n".join(rows) + "\n")


def _read_samples(path: Path):
    import csv

    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if not header or header[0] != "x":
            raise ConfigError(f"{path.name}: header must start with 'x' followed by branch energies")
        return [(float(r[0]), [float(v) for v in r[1:]]) for r in reader if r]


def _cmd_fit(cfg, out, report, base):
    guess = resolve_params(cfg, report)
    _require(cfg, "fit", "samples_file")
    f = cfg.section("fit")
    samples = _read_samples(base / f["samples_file"])
    fit_el = f.get("fit_electronic", False)
    max_iter = f.get("max_iter", 200)
    report.parameters["fit"] = {"samples_file": f["samples_file"], "fit_electronic": fit_el,
                                "max_iter": max_iter}
    fitted, rep = vibronic.fit_apes(samples, guess, fit_electronic=fit_el, max_iter=max_iter)
    e1, e2 = fitted.jt_energies
    rows = ["parameter,value,stderr"]
    rows += [f"{n},{fmt(v)},{fmt(s)}" for n, v, s in zip(rep.parameter_names, rep.values, rep.stderr)]
    rows += [f"f_o_meV,{fmt(fitted.f_o_meV)},", f"f_u_meV,{fmt(fitted.f_u_meV)},",
             f"e_jt1_meV,{fmt(e1)},", f"e_jt2_meV,{fmt(e2)},",
             f"relative_std,{fmt(rep.relative_std)},"]
    _emit(report, out, "fit.csv", "\n".join(rows) + "\n")
    rows = ["x,branch,residual_meV"]
    for (x, _), res in zip(samples, rep.residuals):
        rows += [f"{fmt(x)},{b + 1},{fmt(r)}" for b, r in enumerate(res)]
    _emit(report, out, "residuals.csv", "\n".join(rows) + "\n")


def _spectral_model(cfg, report, base) -> lineshape.SpectralModel:
    s = cfg.section("spectrum")
    _require(cfg, "spectrum", "zpl_eV")
    if "modes_file" in s:
        if "S" in s or "hbar_omega_meV" in s:
            raise ConfigError("[spectrum] give modes_file or S/hbar_omega_meV, not both")
        modes = lineshape.read_modes_csv((base / s["modes_file"]).read_text(encoding="utf-8"))
    else:
        _require(cfg, "spectrum", "S", "hbar_omega_meV")
        if len(s["S"]) != len(s["hbar_omega_meV"]):
            raise ConfigError("[spectrum] S and hbar_omega_meV must have equal length")
        modes = tuple(zip(s["hbar_omega_meV"], s["S"]))
    notes = (lineshape.NOTE_SINGLE_MODE,) if len(modes) == 1 else ()
    model = lineshape.SpectralModel(
        s["zpl_eV"], modes, s.get("broadening_meV", lineshape.DEFAULT_BROADENING_MEV),
        s.get("alignment_shift_eV", 0.0), notes,
    )
    S, dw = lineshape.hr_and_dw(model)
    report.parameters["spectrum"] = {
        "zpl_eV": model.zpl_eV, "modes": [list(m) for m in model.modes],
        "broadening_meV": model.broadening_meV, "alignment_shift_eV": model.alignment_shift_eV,
        "step_meV": s.get("step_meV", lineshape.DEFAULT_STEP_MEV), "S_total": S, "debye_waller": dw,
    }
    for n in model.notes:
        report.warn(n)
    return model


def _cmd_spectrum(cfg, out, report, base):
    model = _spectral_model(cfg, report, base)
    step = cfg.get("spectrum", "step_meV", lineshape.DEFAULT_STEP_MEV)
    spec = lineshape.franck_condon_spectrum(model, step_meV=step)
    _emit(report, out, "spectrum.csv", lineshape.spectrum_csv(spec))


def _cmd_isotope(cfg, out, report, base):
    model = _spectral_model(cfg, report, base)
    step = cfg.get("spectrum", "step_meV", lineshape.DEFAULT_STEP_MEV)
    iso = cfg.section("isotope")
    scale = iso.get("scale", [C.CARBON13_SCALE])
    if len(scale) == 1:
        scale = scale * len(model.modes)
    if "S_13C" in iso and "S_13C_total" in iso:
        raise ConfigError("[isotope] give S_13C or S_13C_total, not both")
    override = iso.get("S_13C", iso.get("S_13C_total"))
    heavy = lineshape.isotope_rescale(model, scale, override)
    for n in heavy.notes:
        report.warn(n)
    n_rep = iso.get("replicas", 4)
    report.parameters["isotope"] = {"scale": scale, "S_override": override, "replicas": n_rep,
                                    "S_total_13C": heavy.total_S}
    light = lineshape.franck_condon_spectrum(model, step_meV=step)
    grid = light.energy_eV
    lo = lineshape.default_grid(heavy, step, lineshape.franck_condon_sticks(heavy)[0])[0]
    if lo < grid[0]:
        extra = int(math.ceil((grid[0] - lo) / (1e-3 * step)))
        grid = np.concatenate([grid[0] - 1e-3 * step * np.arange(extra, 0, -1), grid])
        light = lineshape.franck_condon_spectrum(model, energy_eV=grid)
    heavy_spec = lineshape.franck_condon_spectrum(heavy, energy_eV=grid)
    _emit(report, out, "spectrum_12C.csv", lineshape.spectrum_csv(light))
    _emit(report, out, "spectrum_13C.csv", lineshape.spectrum_csv(heavy_spec))
    p12 = lineshape.replica_peaks(light, n_rep + 1)
    p13 = lineshape.replica_peaks(heavy_spec, n_rep + 1)
    rows = ["replica,energy_12C_eV,energy_13C_eV,shift_meV"]
    for i, (a, b) in enumerate(zip(p12, p13)):
        rows.append(f"{i},{fmt(a)},{fmt(b)},{fmt((b - a) * 1e3)}")
    _emit(report, out, "replica_shifts.csv", "\n".join(rows) + "\n")


def _emission_levels(cfg, report) -> emission.EmissionLevels:
    r = cfg.section("rates")
    if r.get("from_polaron", False):
        p = resolve_params(cfg, report)
        n_max = r.get("n_max", 40)
        H = vibronic.build_total_hamiltonian(p, n_max)
        states = polaron.classify(polaron.solve_lowest(H, min(6, H.dim)))
        lv = emission.EmissionLevels.from_states(states, n_levels=2)
    else:
        _require(cfg, "rates", "level_energies_meV", "level_degeneracies", "level_brightness")
        lv = emission.EmissionLevels(
            tuple(r["level_energies_meV"]), tuple(r["level_degeneracies"]), tuple(r["level_brightness"])
        )
    report.parameters["levels"] = {
        "energies_meV": list(lv.energies_meV), "degeneracies": list(lv.degeneracies),
        "brightness": list(lv.brightness),
    }
    return lv


def _cmd_rates(cfg, out, report, base):
    _require(cfg, "rates", "e_zpl_eV")
    r = cfg.section("rates")
    if ("oscillator_strength" in r) == ("dipole_sq_au" in r):
        raise ConfigError("[rates] give exactly one of oscillator_strength and dipole_sq_au")
    inputs = emission.RateInputs(
        r["e_zpl_eV"], r.get("refractive_index", 2.5),
        dipole_sq=r.get("dipole_sq_au"), oscillator_strength=r.get("oscillator_strength"),
    )
    lv = _emission_levels(cfg, report)
    report.warn(WARN_BOLTZMANN)
    temps = r.get("temperatures_K", [150.0, 300.0])
    gamma_nr = r.get("gamma_nr_MHz")
    report.parameters["rates"] = {k: r[k] for k in sorted(r)}
    rows = [("dipole_sq", inputs.dipole_sq_SI(), "C2m2", None)]
    gamma_full, tau_full = emission.radiative_rate(inputs, 1.0)
    rows += [("gamma_rad_full", gamma_full, "1/s", None), ("tau_rad_full", tau_full, "ns", None)]
    for T in temps:
        eta = emission.thermal_brightness(lv, T)
        g, tau = emission.radiative_rate(inputs, eta)
        rows += [("eta", eta, "1", T), ("gamma_rad", g, "1/s", T), ("tau_rad", tau, "ns", T)]
        if gamma_nr is not None:
            rows.append(("quantum_efficiency", emission.quantum_efficiency(g, gamma_nr * 1e6), "1", T))
    if "lambda_z_GHz" in r:
        model = lineshape.SpectralModel(
            r["e_zpl_eV"], ((r.get("isc_hbar_omega_meV", 180.3), r.get("isc_S", 2.16)),),
            r.get("isc_broadening_meV", lineshape.DEFAULT_BROADENING_MEV),
        )
        for gap in r.get("isc_gap_meV", [300.0]):
            F = float(lineshape.spectral_density_per_eV(model, gap)[0])
            rows += [("isc_overlap", F, "1/eV", None),
                     ("isc_rate", emission.isc_rate(r["lambda_z_GHz"], F), "1/s", None),
                     ("isc_gap", gap, "meV", None)]
    _emit(report, out, "rates.csv", emission.rates_csv(rows))


def _cmd_zpl(cfg, out, report, base):
    _require(cfg, "zpl", "e_excited_eV", "e_ground_eV")
    z = cfg.section("zpl")
    p = resolve_params(cfg, report)
    if "polaron_ground_meV" in z:
        e0 = z["polaron_ground_meV"]
    else:
        H = vibronic.build_total_hamiltonian(p, z.get("n_max", 40))
        e0 = polaron.solve_lowest(H, 1)[0].energy_meV
    report.parameters["zpl"] = {**{k: z[k] for k in sorted(z)}, "polaron_ground_meV": e0}
    zin = emission.ZplInputs(z["e_excited_eV"], z["e_ground_eV"], p.lambda_meV, p.delta_meV,
                             p.hbar_omega_meV, e0)
    rows = [
        ("delta_scf", zin.e_excited_eV - zin.e_ground_eV, "eV", None),
        ("half_lambda_plus_delta", 0.5 * (p.lambda_meV + p.delta_meV), "meV", None),
        ("minus_hbar_omega", -p.hbar_omega_meV, "meV", None),
        ("polaron_ground", e0, "meV", None),
        ("e_zpl", emission.zpl_energy(zin), "eV", None),
    ]
    _emit(report, out, "zpl.csv", emission.rates_csv(rows))


def _potentials(cfg, section) -> thermo.ChemicalPotentials:
    _require(cfg, section, "mu_C_eV", "mu_B_eV", "mu_N_eV", "e_vbm_eV", "e_pristine_eV")
    s = cfg.section(section)
    tag = section.split(".", 1)[1]
    return thermo.ChemicalPotentials(
        s["mu_C_eV"], s["mu_B_eV"], s["mu_N_eV"], s["e_vbm_eV"], s["e_pristine_eV"],
        s.get("condition", tag), s.get("gap_eV", thermo.DEFAULT_GAP_EV),
    )


def _cmd_thermo(cfg, out, report, base):
    _require(cfg, "thermo", "defects_file")
    t = cfg.section("thermo")
    entries = thermo.read_defects_csv((base / t["defects_file"]).read_text(encoding="utf-8"))
    sections = cfg.potential_sections()
    if not sections:
        raise ConfigError("thermo needs at least one [potentials.<condition>] section")
    n_points = t.get("n_points", 61)
    report.parameters["thermo"] = {k: t[k] for k in sorted(t)}
    summary = ["condition,defect,photostable_neutral"]
    for sec in sections:
        mu = _potentials(cfg, sec)
        tag = sec.split(".", 1)[1]
        report.parameters[sec] = cfg.section(sec)
        grid = np.linspace(0.0, mu.gap_eV, n_points)
        _emit(report, out, f"formation_{tag}.csv", thermo.diagram_export(entries, mu, grid))
        tables = []
        for name, group in sorted(thermo.group_entries(entries).items()):
            if len(group) < 2:
                continue
            tab = thermo.transition_levels(group, mu, t.get("fermi_step_eV", 0.01))
            tables.append(tab)
            window = tuple(t["stable_window_eV"]) if "stable_window_eV" in t else None
            summary.append(f"{tag},{name},{str(tab.is_photostable_neutral(window)).lower()}")
        _emit(report, out, f"ctl_{tag}.csv", thermo.ctl_csv(tables))
    _emit(report, out, "stability.csv", "\n".join(summary) + "\n")


_COMMANDS = {
    "solve": _cmd_solve, "apes": _cmd_apes, "fit": _cmd_fit, "spectrum": _cmd_spectrum,
    "isotope": _cmd_isotope, "rates": _cmd_rates, "zpl": _cmd_zpl, "thermo": _cmd_thermo,
}


def run_subcommand(name: str, config: RunConfig, output_dir, base_dir=None) -> RunReport:
    """Run one subcommand, writing its CSV files and ``report.json`` into ``output_dir``.

    Relative input paths in the config resolve against ``base_dir``.  Module
    errors are re-raised as :class:`RunError` prefixed with the module name.
    """
    if name not in _COMMANDS:
        raise ValueError(f"unknown subcommand {name!r}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    report = RunReport(name, overrides=list(config.overrides))
    try:
        _COMMANDS[name](config, out, report, base)
    except ConfigError as exc:
        report.errors.append(f"config: {exc}")
    except (ValueError, RuntimeError, OSError) as exc:
        report.errors.append(f"{MODULE_OF[name]}: {exc}")
    report.files.append("report.json")
    write_text(out / "report.json", report.to_json())
    if report.errors:
        raise RunError("; ".join(report.errors))
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pjt6c",
        description="Product Jahn-Teller vibronic model of the 6C colour centre.",
        epilog=(
            "Warnings a run may record: "
            + "; ".join(repr(w) for w in (WARN_SINGLE_MODE, WARN_SIMPLE_SCALING, WARN_BOLTZMANN, WARN_PRESET_OMEGA))
        ),
    )
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, type=Path, help="run configuration file")
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override one config key (repeatable, last wins)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
        for assignment in args.set:
            cfg = apply_override(cfg, assignment)
    except (OSError, ConfigError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    try:
        report = run_subcommand(args.subcommand, cfg, args.out, base_dir=args.config.parent)
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for f in report.files:
        print(args.out / f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
