"""Command-line front end: energy reports, spectra, verification, sweeps.

Exit codes: 0 success, 1 invalid input, 2 numerical non-convergence,
3 verification failure.  JSON is the canonical output format; CSV is
available for the row-shaped outputs (spectrum, sweep).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import checks, correlation, energy
from .bogoliubov import ModelRegimeError, build_coefficients
from .lattice import ResourceError
from .quadrature import ConvergenceError
from .scattering import BracketError, GasParameters, ParameterError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NONCONVERGED = 2
EXIT_VERIFY_FAILED = 3


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; flags override config file override defaults."""

    a: float = 1.0
    N: int = 1000
    ell: float | None = None
    ell_exponent: float | None = 0.8
    ell0: float = 0.25
    n_max: int = 10_000
    n_switch: int = 1_000_000
    conv_cutoff: float = 200.0 * np.pi
    m_max: int = 80
    quad_tol: float = 1e-10
    format: str = "json"
    out: str | None = None
    workers: int = 1

    def gas_parameters(self) -> GasParameters:
        if self.ell is not None and self.ell_exponent is not None:
            raise ParameterError("give either ell or ell-exponent, not both")
        if self.ell is not None:
            ell = self.ell
        elif self.ell_exponent is not None:
            ell = float(self.N) ** (-self.ell_exponent)
        else:
            raise ParameterError("one of ell or ell-exponent is required")
        return GasParameters(self.a, self.N, ell, self.ell0)


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ParameterError(f"config file {path} must hold a flat JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = replace(cfg, **load_config(args.config))
    overrides = {}
    for name in _CONFIG_KEYS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if "ell" in overrides and "ell_exponent" not in overrides:
        overrides.setdefault("ell_exponent", None)
        if args.config and "ell_exponent" in load_config(args.config):
            overrides["ell_exponent"] = load_config(args.config)["ell_exponent"]
        else:
            overrides["ell_exponent"] = None
    cfg = replace(cfg, **overrides)
    if cfg.format not in ("json", "csv"):
        raise ParameterError(f"unknown format {cfg.format!r}")
    if cfg.workers < 1:
        raise ParameterError("workers must be >= 1")
    return cfg


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_energy(cfg: RunConfig) -> int:
    if cfg.format != "json":
        raise ParameterError("the energy report is JSON only; csv covers spectrum/sweep")
    params = cfg.gas_parameters()
    report = energy.compute_report(
        params,
        n_max=cfg.n_max,
        tol=cfg.quad_tol,
        m_max=cfg.m_max,
        workers=cfg.workers,
        n_switch=cfg.n_switch,
    )
    payload = report.to_json_dict()
    _assert_finite(payload)
    _emit(_json_text(payload), cfg.out)
    return EXIT_OK


def _assert_finite(obj, path="report"):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _assert_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _assert_finite(v, f"{path}[{i}]")
    elif isinstance(obj, float) and not np.isfinite(obj):
        raise ConvergenceError(f"non-finite value at {path}")


def cmd_spectrum(cfg: RunConfig) -> int:
    params = cfg.gas_parameters()
    profiles = correlation.build_profiles(params)
    tables = correlation.build_tables(
        profiles, cfg.n_max, cfg.quad_tol, cfg.workers, cfg.n_switch
    )
    rows = energy.spectrum_rows(build_coefficients(tables), params.scattering_length)
    header = ["n", "p_norm", "F", "G", "tau", "epsilon", "reference", "rel_deviation"]
    if cfg.format == "csv":
        _emit(_csv_text(header, [[r[k] for k in header] for r in rows]), cfg.out)
    else:
        _emit(_json_text(rows), cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, n_list: list[int]) -> int:
    if not n_list:
        raise ParameterError("sweep needs a nonempty N list")
    rows = []
    for n_particles in n_list:
        point = replace(cfg, N=int(n_particles))
        report = energy.compute_report(
            point.gas_parameters(),
            n_max=cfg.n_max,
            tol=cfg.quad_tol,
            m_max=cfg.m_max,
            workers=cfg.workers,
            n_switch=cfg.n_switch,
        )
        rows.append(
            [
                int(n_particles),
                report.params.short_scale,
                report.mvac,
                report.closed_total_i0,
                report.delta,
            ]
        )
    header = ["N", "ell", "mvac", "closed_total", "delta"]
    if cfg.format == "csv":
        _emit(_csv_text(header, rows), cfg.out)
    else:
        _emit(
            _json_text([dict(zip(header, row)) for row in rows]),
            cfg.out,
        )
    return EXIT_OK


def cmd_verify(cfg: RunConfig, perturb_eta: float) -> int:
    params = cfg.gas_parameters()
    results = checks.run_checks(
        params,
        n_max=min(cfg.n_max, 4000),
        tol=cfg.quad_tol,
        conv_cutoff=cfg.conv_cutoff,
        workers=cfg.workers,
        perturb_eta=perturb_eta,
        m_max=cfg.m_max,
    )
    lines = [f"{'check':34s} {'measured':>14s} {'threshold':>12s}  status"]
    lines += [r.row() for r in results]
    n_failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_failed}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_VERIFY_FAILED if n_failed else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsgas",
        description="Second-order energy bound for the hard-sphere Bose gas on the unit torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--a", type=float, default=None, help="scattering length")
        p.add_argument("--N", type=int, default=None, help="particle count")
        p.add_argument("--ell", type=float, default=None, help="short correlation scale")
        p.add_argument(
            "--ell-exponent",
            dest="ell_exponent",
            type=float,
            default=None,
            help="use ell = N^(-exponent) instead of --ell",
        )
        p.add_argument("--ell0", type=float, default=None, help="reference scale")
        p.add_argument("--n-max", dest="n_max", type=int, default=None)
        p.add_argument("--n-switch", dest="n_switch", type=int, default=None)
        p.add_argument("--conv-cutoff", dest="conv_cutoff", type=float, default=None)
        p.add_argument("--m-max", dest="m_max", type=int, default=None)
        p.add_argument("--quad-tol", dest="quad_tol", type=float, default=None)
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--config", default=None, help="flat JSON config file")

    p_energy = sub.add_parser("energy", help="full energy report (JSON)")
    add_common(p_energy)

    p_spec = sub.add_parser("spectrum", help="per-shell dispersion table")
    add_common(p_spec)

    p_verify = sub.add_parser("verify", help="run the verification battery")
    add_common(p_verify)
    p_verify.add_argument(
        "--perturb-eta",
        dest="perturb_eta",
        type=float,
        default=0.0,
        help="test-only: multiply the eta table by (1+x) to exercise failures",
    )

    p_sweep = sub.add_parser("sweep", help="energy report over a list of N")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--N-list",
        dest="n_list",
        default="",
        help="comma-separated particle counts, e.g. 250,500,1000",
    )
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "energy":
            return cmd_energy(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.perturb_eta)
        if args.command == "sweep":
            n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
            return cmd_sweep(cfg, n_list)
        raise ParameterError(f"unknown command {args.command!r}")
    except (ParameterError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, BracketError, ModelRegimeError, ResourceError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
