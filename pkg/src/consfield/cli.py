"""``consfield`` command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .analysis import conservativity_report, curl_grid, grid_points
from .autoencoder import AeParams
from .config import ExperimentConfig
from .errors import ConfigError, DivergenceError, FormatError
from .fields import ae_dynamics_field
from .numerics import Rng
from .plots import line_plot, quiver

log = logging.getLogger("consfield")


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _quiver_svg(field, box, n, title):
    pts = grid_points(box, n)
    spacing = float(np.min((box[:, 1] - box[:, 0]) / (n - 1)))
    return quiver(pts, field.evaluate(pts), spacing, title=title)


def _bbox(X):
    lo, hi = X.min(axis=0), X.max(axis=0)
    return np.column_stack([lo, np.where(hi > lo, hi, lo + 1.0)])


def cmd_train(cfg: ExperimentConfig) -> int:
    run = ex.run_train(cfg)
    out = cfg.out
    _write(out, "config.ini", cfg.to_ini())
    _write(out, "params.json", run.params.to_json() + "\n")
    _write(out, "history.csv", run.history.to_csv())
    h = run.history
    _write(out, "field_sym.svg", line_plot({"sym(dr/dx)": (h.column("epoch"), h.column("sym_mean"))},
                                           ylabel="mean symmetricity", title="Jacobian symmetricity"))
    last = h[-1]
    print(f"epoch {last.epoch}: loss {last.loss:.6g}, sym_mean {last.sym_mean:.4f} "
          f"(initial {h[0].sym_mean:.4f}); artifacts in {out}")
    return 0


def cmd_curl_scan(cfg: ExperimentConfig) -> int:
    run = ex.run_curl_scan(cfg)
    out = cfg.out
    h = run.history
    _write(out, "config.ini", cfg.to_ini())
    _write(out, "params.json", run.params.to_json() + "\n")
    _write(out, "history.csv", h.to_csv())
    _write(out, "curl.csv", "epoch,curl_mean\n" + "".join(f"{r.epoch},{r.curl_mean!r}\n" for r in h.records))
    box = _bbox(run.data)
    qn = cfg.get_int("probe", "quiver_grid")
    grid, _ = curl_grid(ae_dynamics_field(run.params), box, cfg.get_int("probe", "curl_grid"))
    _write(out, "curl_grid.csv", "x,y,curl\n" + "".join(f"{a!r},{b!r},{c!r}\n" for a, b, c in grid))
    _write(out, "field_initial.svg", _quiver_svg(ae_dynamics_field(run.initial), box, qn, "initial r(x) - x"))
    _write(out, "field_final.svg", _quiver_svg(ae_dynamics_field(run.params), box, qn, "final r(x) - x"))
    _write(out, "field_curl.svg", line_plot({"mean |curl|": (h.column("epoch"), h.column("curl_mean"))},
                                            ylabel="mean |curl|", title="Curl magnitude during training"))
    print(f"mean |curl|: initial {h[0].curl_mean:.4g}, final {h[-1].curl_mean:.4g}; artifacts in {out}")
    return 0


def cmd_extract(cfg: ExperimentConfig) -> int:
    run = ex.run_extract(cfg)
    out = cfg.out
    box = ex.parse_box(cfg.get("extract", "box"))
    qn = cfg.get_int("probe", "quiver_grid")
    _write(out, "config.ini", cfg.to_ini())
    _write(out, "params.json", run.params.to_json() + "\n")
    _write(out, "history.csv", run.history.to_csv())
    _write(out, "samples.csv", run.samples.to_csv())
    _write(out, "field_source.svg", _quiver_svg(run.source, box, qn, f"source: {run.source.name}"))
    _write(out, "field_learned.svg", _quiver_svg(run.learned, box, qn, "learned conservative part"))
    _write(out, "report.json", _dump(run.report))
    print(_dump(run.report), end="")
    return 0


def cmd_beta_sweep(cfg: ExperimentConfig) -> int:
    run = ex.run_beta_sweep(cfg)
    out = cfg.out
    _write(out, "config.ini", cfg.to_ini())
    _write(out, "table2.csv", run.result.to_csv())
    _write(out, "summary.json", _dump(run.summary))
    _write(out, "params_conservative.json", run.conservative.to_json() + "\n")
    print(run.result.to_csv(), end="")
    return 0


def cmd_report(cfg: ExperimentConfig, params_path: str, probes: str) -> int:
    path = Path(params_path or cfg.get("report", "params"))
    if not path.is_file():
        raise ConfigError(f"params file not found: {path}")
    try:
        p = AeParams.from_json(path.read_text())
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read params from {path}: {exc}") from exc
    probe_rng, loop_rng = Rng(cfg.seed).spawn(2)
    if probes == "data":
        pts = ex.make_dataset(cfg, probe_rng).points
        pts = pts[: cfg.get_int("probe", "count")]
        if pts.shape[1] != p.D:
            raise ConfigError(f"probe data dimension {pts.shape[1]} does not match model dimension {p.D}")
    else:
        box = ex.parse_box(cfg.get("probe", "box"), p.D)
        pts = box[:, 0] + (box[:, 1] - box[:, 0]) * probe_rng.random((cfg.get_int("probe", "count"), p.D))
    rep = conservativity_report(ae_dynamics_field(p), pts, tol=cfg.get_float("report", "tol"),
                                tol_curl=cfg.get_float("report", "tol_curl"), rng=loop_rng)
    text = rep.to_json() + "\n"
    _write(cfg.out, "report.json", text)
    print(text, end="")
    return 0


def cmd_gen_data(cfg: ExperimentConfig) -> int:
    ds = ex.make_dataset(cfg, Rng(cfg.seed))
    _write(cfg.out, "dataset.csv", ds.to_csv())
    print(f"{len(ds)} points of dimension {ds.dim} written to {cfg.out / 'dataset.csv'}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "curl-scan": cmd_curl_scan,
    "extract": cmd_extract,
    "beta-sweep": cmd_beta_sweep,
    "report": cmd_report,
    "gen-data": cmd_gen_data,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consfield", description="Auto-encoders as vector fields.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH", help="INI experiment config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="section.key=value, repeatable; wins over the config file")
        if name == "report":
            sp.add_argument("--params", metavar="PATH", default="")
            sp.add_argument("--probes", choices=("box", "data"), default="box",
                            help="probe points: uniform in probe.box, or the configured dataset")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig.build(args.command, args.config, args.override, args.seed, args.out)
        if args.command == "report":
            return cmd_report(cfg, args.params, args.probes)
        return COMMANDS[args.command](cfg)
    except (ConfigError, FormatError) as exc:
        print(f"consfield: error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"consfield: diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
