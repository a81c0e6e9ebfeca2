"""Batch command-line front end: config in, tables/plots out.

Subcommands: envelope, beating, polarization, tomography, chsh, states.
Every command is deterministic given (config, seed): outputs are
byte-identical across runs.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, detection, svgplot, temporal, tomography
from .config import ConfigError, RunConfig, load_config, validate
from .detection import CoincidenceHistogram, derive_seed, expected_counts, sample_histogram
from .optics import PolarizerState, build_hyperentangled, catalog_states, project_analyzers
from .qalgebra import PolDensityMatrix, fidelity_pure, singlet
from .temporal import BeatingParams, beating_g2, envelope_eval, two_branch_g2

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _json_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


class OutputWriter:
    def __init__(self, out_dir: str, formats: list[str]):
        self.dir = Path(out_dir)
        self.formats = formats
        self.dir.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str) -> None:
        (self.dir / name).write_text(text, encoding="utf-8")

    def write_histogram(self, stem: str, hist: CoincidenceHistogram) -> None:
        if "csv" in self.formats:
            self.write_text(stem + ".csv", hist.to_csv())
        if "json" in self.formats:
            self.write_text(stem + ".json", hist.to_json())

    def maybe_svg(self, name: str, series: list[dict], **kw) -> None:
        if "svg" in self.formats:
            self.write_text(name, svgplot.line_plot(series, **kw))


def _write_config_echo(writer: OutputWriter, cfg: RunConfig, command: str) -> None:
    writer.write_text(f"{command}_config.ini", cfg.to_ini())


def _two_sided_envelope(cfg: RunConfig, tau: np.ndarray) -> np.ndarray:
    env = cfg.envelope_model()
    vals = envelope_eval(env, tau)
    if cfg.envelope.mirrored:
        vals = vals + envelope_eval(env, -tau)
    return vals


def cmd_envelope(cfg: RunConfig, writer: OutputWriter) -> None:
    tau = temporal.tau_grid(cfg.grid.tau_min_ns, cfg.grid.tau_max_ns,
                            cfg.detection.bin_width_ns)
    det = cfg.detection_config()
    expected = expected_counts(_two_sided_envelope(cfg, tau), tau, det)
    sampled = sample_histogram(expected, derive_seed(det.seed, "envelope"))
    writer.write_histogram("envelope_expected", expected)
    writer.write_histogram("envelope_sampled", sampled)
    writer.maybe_svg(
        "envelope.svg",
        [dict(x=tau, y=sampled.counts, label="sampled", mode="markers"),
         dict(x=tau, y=expected.counts, label="expected")],
        title="Two-photon coincidences vs delay",
        xlabel="tau (ns)", ylabel="counts per bin")
    _write_config_echo(writer, cfg, "envelope")


def _beating_curve(cfg: RunConfig):
    """Expected beat correlation on the positive-delay grid.

    Returns (tau, g2 values, normalization prefactor)."""
    delta = cfg.delta_rad_ns
    env = cfg.envelope_model()
    tau = temporal.tau_grid(0.0, cfg.beating.tau_max_ns, cfg.detection.bin_width_ns)
    if cfg.beating.mode == "direct":
        params = BeatingParams(delta=delta, prefactor=0.5, sign="minus_cos")
    else:
        state = build_hyperentangled(cfg.source_params())
        theta = cfg.beating.theta_rad
        p3 = PolarizerState(np.array([1.0, -np.exp(-1j * theta)]) / np.sqrt(2))
        p4 = PolarizerState.from_name("D")
        freq_amps, _ = project_analyzers(state, p3, p4)
        params = BeatingParams.from_freq_amplitudes(freq_amps, delta)
    return tau, beating_g2(env, params, tau), params.prefactor


def cmd_beating(cfg: RunConfig, writer: OutputWriter) -> None:
    direct = cfg.beating.mode == "direct"
    tau, g2_vals, prefactor = _beating_curve(cfg)
    duration = cfg.detection.duration_s if direct else cfg.beating.phase_duration_s
    frac = (cfg.beating.direct_background_frac if direct
            else cfg.beating.phase_background_frac)
    gain = cfg.detection.eta * cfg.detection.bin_width_ns * duration
    background = frac * float(g2_vals.max()) * gain
    det = cfg.detection_config(background_rate=background, duration=duration)

    env_vals = envelope_eval(cfg.envelope_model(), tau)
    signal_expected = expected_counts(g2_vals, tau, det)
    envelope_expected = expected_counts(env_vals, tau, det)
    signal = sample_histogram(signal_expected, derive_seed(det.seed, "beat-signal"))
    envelope = sample_histogram(envelope_expected, derive_seed(det.seed, "beat-envelope"))

    x, ratio, ratio_std = analysis.normalize_beating(signal, envelope, prefactor)
    window = x <= cfg.beating.fit_window_ns
    delta = cfg.delta_rad_ns

    if direct:
        vis_fit = analysis.fit_sinusoid(x[window], ratio[window],
                                        fixed_period=2 * np.pi / delta,
                                        sigma=ratio_std[window])
        free_fit = analysis.fit_sinusoid(x[window], ratio[window],
                                         sigma=ratio_std[window])
        report = {
            "mode": "direct",
            "frequency_mhz": 1e3 / free_fit.period,
            "visibility": vis_fit.visibility,
            "visibility_std": vis_fit.visibility_std,
            "phase_rad": vis_fit.phase,
            "visibility_fit": json.loads(vis_fit.to_json()),
            "frequency_fit": json.loads(free_fit.to_json()),
        }
    else:
        phase_fit = analysis.beat_phase_extract(x[window], ratio[window],
                                                ratio_std[window], delta)
        report = {
            "mode": "phase_shifted",
            "theta_rad": phase_fit.theta,
            "theta_std": phase_fit.theta_std,
            "visibility": phase_fit.visibility,
            "visibility_std": phase_fit.visibility_std,
            "chi2": phase_fit.chi2,
            "dof": phase_fit.dof,
        }

    writer.write_histogram("beating_signal_expected", signal_expected)
    writer.write_histogram("beating_signal_sampled", signal)
    writer.write_histogram("beating_envelope_expected", envelope_expected)
    writer.write_histogram("beating_envelope_sampled", envelope)
    if "csv" in writer.formats:
        lines = ["tau_ns,ratio,ratio_std"]
        lines += [f"{repr(float(t))},{repr(float(r))},{repr(float(s))}"
                  for t, r, s in zip(x, ratio, ratio_std)]
        writer.write_text("beating_normalized.csv", "\n".join(lines) + "\n")
    writer.write_text("beating_fit.json", _json_dumps(report))
    writer.maybe_svg(
        "beating.svg",
        [dict(x=x[window], y=ratio[window], yerr=ratio_std[window],
              label="normalized", mode="markers")],
        title="Normalized two-photon beating",
        xlabel="tau (ns)", ylabel="normalized coincidences")
    _write_config_echo(writer, cfg, "beating")


def cmd_polarization(cfg: RunConfig, writer: OutputWriter) -> None:
    delta = cfg.delta_rad_ns
    if delta != 0:
        print("warning: delta != 0; polarization and frequency stay coupled "
              "and the fringe visibility collapses over the full window",
              file=sys.stderr)
    env = cfg.envelope_model()
    source = cfg.source_params()
    state = build_hyperentangled(source)
    window_bins = temporal.tau_grid(0.0, cfg.polarization.window_ns,
                                    cfg.detection.bin_width_ns)
    p4_angles = np.arange(0.0, 360.0 + cfg.polarization.p4_step_deg,
                          cfg.polarization.p4_step_deg)
    gain = cfg.detection.eta * cfg.detection.bin_width_ns * cfg.polarization.exposure_s

    svg_series = []
    for p3_deg in cfg.p3_angles():
        p3 = PolarizerState.linear(np.deg2rad(p3_deg))
        expected = np.empty(p4_angles.size)
        for i, p4_deg in enumerate(p4_angles):
            p4 = PolarizerState.linear(np.deg2rad(p4_deg))
            amps, _ = project_analyzers(state, p3, p4)
            expected[i] = two_branch_g2(env, amps, delta, window_bins).sum() * gain
        background = cfg.polarization.background_frac * expected.max()
        expected = expected + background
        counts = detection.poisson_counts(
            expected, derive_seed(cfg.detection.seed, f"polarization-{p3_deg}"))

        fit = analysis.fit_sinusoid(p4_angles, counts.astype(float),
                                    fixed_period=180.0)
        stem = f"polarization_p3_{p3_deg:g}"
        if "csv" in writer.formats:
            lines = ["p4_angle_deg,counts,expected"]
            lines += [f"{repr(float(a))},{int(c)},{repr(float(e))}"
                      for a, c, e in zip(p4_angles, counts, expected)]
            writer.write_text(stem + ".csv", "\n".join(lines) + "\n")
        writer.write_text(stem + "_fit.json", fit.to_json())
        svg_series.append(dict(x=p4_angles, y=counts,
                               yerr=np.sqrt(np.maximum(counts, 1)),
                               label=f"P3 = {p3_deg:g} deg", mode="both"))
    writer.maybe_svg("polarization.svg", svg_series,
                     title="Polarization correlation",
                     xlabel="P4 angle (deg)", ylabel="coincidences")
    _write_config_echo(writer, cfg, "polarization")


def _target_state(cfg: RunConfig) -> PolDensityMatrix:
    if cfg.tomography.target == "measured":
        return tomography.measured_bell_density_matrix()
    return PolDensityMatrix.from_pure(singlet())


def _reconstruct(cfg: RunConfig, records_path: str | None):
    if records_path is not None:
        records = tomography.records_from_csv(
            Path(records_path).read_text(encoding="utf-8"))
    else:
        det = cfg.detection_config()
        records = tomography.simulate_tomography(
            _target_state(cfg), det, pair_rate=cfg.tomography.pair_rate_hz)
    return records, tomography.mle_reconstruct(records)


def cmd_tomography(cfg: RunConfig, writer: OutputWriter,
                   records_path: str | None = None) -> None:
    records, rho = _reconstruct(cfg, records_path)
    fid = fidelity_pure(rho, singlet())
    report = {
        "fidelity_to_singlet": fid,
        "singlet_overlap": fid ** 2,
        "purity": rho.purity(),
        "total_counts": int(sum(r.counts for r in records)),
    }
    if cfg.tomography.bootstrap_resamples > 0:
        boot = tomography.tomo_error_bars(
            records, n_resamples=cfg.tomography.bootstrap_resamples,
            seed=derive_seed(cfg.detection.seed, "tomo-bootstrap"))
        report["s_std"] = boot.s_std
        report["rho_std_real"] = boot.rho_std_real.tolist()
        report["rho_std_imag"] = boot.rho_std_imag.tolist()
    writer.write_text("tomography_records.csv", tomography.records_to_csv(records))
    writer.write_text("tomography_rho.json", _json_dumps(rho.to_json_dict()))
    writer.write_text("tomography_report.json", _json_dumps(report))
    _write_config_echo(writer, cfg, "tomography")


def cmd_chsh(cfg: RunConfig, writer: OutputWriter,
             records_path: str | None = None,
             rho_path: str | None = None) -> None:
    records = None
    if rho_path is not None:
        rho = PolDensityMatrix.from_json_dict(
            json.loads(Path(rho_path).read_text(encoding="utf-8")))
    else:
        records, rho = _reconstruct(cfg, records_path)
    s_max, settings = tomography.chsh_optimize(rho)
    report = {
        "s_max": s_max,
        "violates_classical_bound": bool(s_max > 2.0),
        "tsirelson_bound": tomography.TSIRELSON,
        "settings_bloch": {
            "a": settings.a.tolist(),
            "a_prime": settings.a_prime.tolist(),
            "b": settings.b.tolist(),
            "b_prime": settings.b_prime.tolist(),
        },
    }
    angles = settings.linear_angles()
    if angles is not None:
        report["settings_linear_rad"] = angles
    if records is not None and cfg.chsh.bootstrap_resamples > 0:
        boot = tomography.tomo_error_bars(
            records, n_resamples=cfg.chsh.bootstrap_resamples,
            seed=derive_seed(cfg.detection.seed, "chsh-bootstrap"))
        report["s_std"] = boot.s_std
    writer.write_text("chsh_report.json", _json_dumps(report))
    _write_config_echo(writer, cfg, "chsh")


def cmd_states(cfg: RunConfig, writer: OutputWriter) -> None:
    basis_pol = ("H", "V")
    out_lines = []
    payload = {}
    for ordering in ("stokes_at_3", "stokes_at_4"):
        out_lines.append(f"{ordering}:")
        payload[ordering] = {}
        for name, state in catalog_states(ordering).items():
            terms = []
            amp_list = []
            for idx, amp in enumerate(state.amplitudes):
                amp_list.append([float(amp.real), float(amp.imag)])
                if abs(amp) > 1e-12:
                    pol3, pol4, branch = idx >> 2, (idx >> 1) & 1, idx & 1
                    sign = "+" if amp.real >= 0 else "-"
                    terms.append(f"{sign} {abs(amp):.4f} "
                                 f"|{basis_pol[pol3]}{basis_pol[pol4]}; "
                                 f"shift@{3 + branch}>")
            out_lines.append(f"  {name:6s} = " + " ".join(terms))
            payload[ordering][name] = amp_list
        out_lines.append("")
    text = "\n".join(out_lines)
    print(text, end="")
    if "json" in writer.formats:
        writer.write_text("states.json", _json_dumps(payload))
    _write_config_echo(writer, cfg, "states")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (INI)")
    common.add_argument("--seed", type=int, help="override the sampling seed")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--format", help="comma list of csv,json,svg")

    parser = argparse.ArgumentParser(
        prog="hyperbeat",
        description="Simulator for a narrowband-biphoton hyperentanglement "
                    "experiment: beating, polarization correlations, "
                    "tomography and Bell tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("envelope", parents=[common],
                   help="two-sided coincidence histogram of the source waveform")
    p_beat = sub.add_parser("beating", parents=[common],
                            help="quantum-beating histograms and visibility fit")
    p_beat.add_argument("--mode", choices=("direct", "phase-shifted"))
    p_beat.add_argument("--theta", type=float,
                        help="beat phase in radians (phase-shifted mode)")
    p_pol = sub.add_parser("polarization", parents=[common],
                           help="polarizer-scan correlation fringes")
    p_pol.add_argument("--p3", help="comma list of fixed P3 angles in degrees")
    p_tomo = sub.add_parser("tomography", parents=[common],
                            help="simulate or ingest 16-setting tomography")
    p_tomo.add_argument("--records", help="ingest a records CSV instead of simulating")
    p_tomo.add_argument("--target", choices=("singlet", "measured"))
    p_tomo.add_argument("--bootstrap", type=int, help="bootstrap resamples")
    p_chsh = sub.add_parser("chsh", parents=[common],
                            help="optimal CHSH statistic of a state")
    p_chsh.add_argument("--records", help="ingest a records CSV")
    p_chsh.add_argument("--rho", help="density-matrix JSON file")
    p_chsh.add_argument("--target", choices=("singlet", "measured"))
    p_chsh.add_argument("--bootstrap", type=int, help="bootstrap resamples")
    sub.add_parser("states", parents=[common],
                   help="print the hyperentangled state catalog")
    return parser


def _apply_flag_overrides(cfg: RunConfig, args: argparse.Namespace) -> None:
    if args.seed is not None:
        cfg.detection.seed = args.seed
    if args.out_dir is not None:
        cfg.output.out_dir = args.out_dir
    if args.format is not None:
        cfg.output.formats = args.format
    if getattr(args, "mode", None) is not None:
        cfg.beating.mode = args.mode.replace("-", "_")
    if getattr(args, "theta", None) is not None:
        cfg.beating.theta_rad = args.theta
    if getattr(args, "p3", None) is not None:
        cfg.polarization.p3_angles_deg = args.p3
    if getattr(args, "target", None) is not None:
        cfg.tomography.target = args.target
    if getattr(args, "bootstrap", None) is not None:
        cfg.tomography.bootstrap_resamples = args.bootstrap
        cfg.chsh.bootstrap_resamples = args.bootstrap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_flag_overrides(cfg, args)
        validate(cfg)
        writer = OutputWriter(cfg.output.out_dir, cfg.formats())
        if args.command == "envelope":
            cmd_envelope(cfg, writer)
        elif args.command == "beating":
            cmd_beating(cfg, writer)
        elif args.command == "polarization":
            cmd_polarization(cfg, writer)
        elif args.command == "tomography":
            cmd_tomography(cfg, writer, records_path=args.records)
        elif args.command == "chsh":
            cmd_chsh(cfg, writer, records_path=args.records, rho_path=args.rho)
        elif args.command == "states":
            cmd_states(cfg, writer)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (analysis.FitError, ValueError, RuntimeError,
            ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
