"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 numerical guard tripped.
"""

import argparse
import logging
import sys
import warnings
from dataclasses import replace

from .config import check_resolution, load_config
from .driver import required_box_n, run_convergence, run_lgf_table, run_solve
from .errors import ConfigError, ConvergenceError, DegenerateNodeError, DomainError, GeometryError, UlgfError
from .geometry import GridSpec, count_components, covering_extent, cut_geometry
from .lgf import CACHE_ENV, MIN_BOX_N
from .recon import Region

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_GUARD = 0, 2, 3, 4


def _exit_code(exc):
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_CONFIG
    if isinstance(exc, GeometryError) and not isinstance(exc, DegenerateNodeError):
        return EXIT_CONFIG
    return EXIT_GUARD


def _cmd_solve(args):
    config = load_config(args.config)
    if args.out_dir:
        config = replace(config, output=replace(config.output, dir=args.out_dir))
    art = run_solve(config)
    print(art.report_text, end="")
    for name, path in art.paths.items():
        print(f"wrote {name}: {path}")


def _cmd_converge(args):
    config = load_config(args.config)
    table = run_convergence(config, args.levels, reference=args.reference)
    table.write_csv(args.out)
    print(f"{'N':>6} {'h':>10} {'err_max':>11} {'err_l2':>11} {'order_max':>9} {'order_l2':>9}")
    def fo(v):
        return f"{v:9.3f}" if v is not None else f"{'':9}"

    for n, h, em, el, om, ol in zip(table.n, table.h, table.err_max, table.err_l2,
                                    table.order_max, table.order_l2):
        print(f"{n:>6} {h:>10.4g} {em:>11.3e} {el:>11.3e} {fo(om)} {fo(ol)}")
    print(f"reference = {table.reference}; nodes within 3h of the boundary excluded")
    print(f"wrote {args.out}")


def _cmd_lgf_table(args):
    report = run_lgf_table(args.omega2, args.box_n, args.out, boundary=args.boundary)
    print(report.to_text(), end="")


def _cmd_validate(args):
    config = load_config(args.config)
    h = config.h
    ppw = check_resolution(config.k, h)
    cut = cut_geometry(config.shape, GridSpec(h, config.grid.center,
                                              covering_extent(config.shape, h, config.grid.center,
                                                              minimum=(config.grid.n // 2,) * 2)))
    region = Region.centered(config.target_nodes)
    need = max(MIN_BOX_N, required_box_n(cut, region, config.kernel, (config.k * h) ** 2))
    if config.lgf.box_n is not None and config.lgf.box_n < need:
        raise ConfigError(f"lgf.box_n = {config.lgf.box_n} is below the required {need}")
    print("[validate]")
    print(f"h = {h:.6g}")
    print(f"points_per_wavelength = {ppw:.2f}")
    print(f"omega2 = {(config.k * h) ** 2:.6g}")
    print(f"gamma_minus = {len(cut.gamma_minus)}")
    print(f"components = {count_components(cut.gamma_minus)}")
    print(f"required_box_n = {need}")
    print("ok")


def build_parser():
    p = argparse.ArgumentParser(prog="ulgf", description="Unfitted lattice Green's function scattering solver.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one configuration")
    s.add_argument("config")
    s.add_argument("--out-dir", help="override output.dir")
    s.set_defaults(func=_cmd_solve)

    c = sub.add_parser("converge", help="convergence study over doubling grids")
    c.add_argument("config")
    c.add_argument("--levels", type=int, nargs="+", required=True, help="cells per side, each doubling")
    c.add_argument("--reference", choices=("analytic", "finest"), default="analytic",
                   help="Mie series (circle) or the last level")
    c.add_argument("--out", default="convergence.csv")
    c.set_defaults(func=_cmd_converge)

    t = sub.add_parser("lgf-table", help="tabulate and validate a lattice Green's function",
                       epilog=f"Solves read cached tables from ${CACHE_ENV} when set.")
    t.add_argument("--omega2", type=float, required=True)
    t.add_argument("--box-n", type=int, default=256)
    t.add_argument("--out", required=True, help="table file (reused when it already matches)")
    t.add_argument("--boundary", choices=("lattice", "hankel"), default="lattice")
    t.set_defaults(func=_cmd_lgf_table)

    v = sub.add_parser("validate", help="check a configuration without solving")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    warnings.simplefilter("default")
    try:
        args.func(args)
    except UlgfError as exc:
        stage = getattr(exc, "stage", None)
        where = f" [{stage}]" if stage else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
