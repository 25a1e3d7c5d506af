"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 at least one hard violation.
Settings come from ``--config FILE`` (JSON or YAML, same keys as the long
flags with dashes replaced by underscores) and are overridden by flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import campaigns, thermo
from .classical import DEFAULT_LAMBDA_GRID
from .matrix_core import PAULI_X, PAULI_Y, PAULI_Z, DensityMatrix, random_density_matrix, random_observable
from .report import write_report

log = logging.getLogger("qtur")

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2
TOL_KEYS = ("entropy", "chi2", "triangular", "ns_kl", "ns_mean", "ns_variance", "flux", "reduce", "cr")
NAMED_OPERATORS = {"pauli_x": PAULI_X, "pauli_y": PAULI_Y, "pauli_z": PAULI_Z}
DEFAULT_ANGLES = tuple(round(0.1 * k, 1) for k in range(16))

DEFAULTS = {
    "verify": {"n": 1000, "dims": [2, 3, 4, 5, 6], "seed": 0},
    "bound-table": {"n": 100, "dims": [2, 3, 4], "seed": 0},
    "reduce": {"n": 500, "dims": [2, 3, 4, 5, 6, 7, 8], "seed": 0},
    "flux": {"angles": list(DEFAULT_ANGLES), "betas": [thermo.DEFAULT_BETA_S, thermo.DEFAULT_BETA_E],
             "protocol": "bath-reset", "hamiltonian": "pauli_z", "observables": 10, "seed": 0},
    "cr-limit": {"taus": [float(t) for t in thermo.DEFAULT_CR_TAUS], "hamiltonian": "pauli_y",
                 "observable": "pauli_x", "state": [0.8, 0.2], "random": False, "dims": [2], "seed": 0},
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def _common(p: argparse.ArgumentParser, campaign: bool = True) -> None:
    p.add_argument("--config", help="JSON/YAML file with default settings")
    p.add_argument("--seed", type=int, help="campaign seed (64-bit integer)")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    if campaign:
        p.add_argument("--dims", type=_ints, help="comma-separated dimensions")
        p.add_argument("--n", type=int, help="number of instances")
        p.add_argument("--lambda-grid", type=_floats, help="comma-separated lambda values in [0, 1]")
    for key in TOL_KEYS:
        p.add_argument(f"--tol-{key.replace('_', '-')}", type=float, dest=f"tol_{key}", metavar="TOL", help=f"override the '{key}' tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtur", description="Entropy-production uncertainty relations: campaigns and scans.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="randomized campaign over all bounds and embedding identities")
    _common(p)

    p = sub.add_parser("bound-table", help="entropy production vs F bound and best lambda bound")
    _common(p)
    p.add_argument("--identical", action="store_true", default=None, help="use sigma = rho")

    p = sub.add_parser("reduce", help="classical vs quantum routes on diagonal inputs")
    _common(p)

    p = sub.add_parser("flux", help="entropy-flux bound over a partial-swap angle grid")
    _common(p, campaign=False)
    p.add_argument("--angles", type=_floats)
    p.add_argument("--betas", type=_floats, help="beta_S,beta_E")
    p.add_argument("--protocol", choices=("bath-reset", "both-reset"))
    p.add_argument("--hamiltonian", choices=sorted(NAMED_OPERATORS))
    p.add_argument("--observables", type=int, help="random joint observables per angle")

    p = sub.add_parser("cr-limit", help="finite-tau relation and its Cramer-Rao limit")
    _common(p, campaign=False)
    p.add_argument("--dims", type=_ints, help="dimension for --random")
    p.add_argument("--taus", type=_floats)
    p.add_argument("--hamiltonian", choices=sorted(NAMED_OPERATORS) + ["random"])
    p.add_argument("--observable", choices=sorted(NAMED_OPERATORS) + ["random"])
    p.add_argument("--state", type=_floats, help="diagonal of a qubit state in the Z basis")
    p.add_argument("--random", action="store_true", default=None, help="random full-rank state from --seed")
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
        if p.suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (OSError, ValueError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults < config file < flags and validate."""
    cfg = {"lambda_grid": list(DEFAULT_LAMBDA_GRID), "format": "csv"}
    cfg.update({k.replace("-", "_"): v for k, v in DEFAULTS[args.command].items()})
    file_cfg = _load_config(args.config)
    tolerances = dict(file_cfg.pop("tolerances", {}) or {})
    cfg.update(file_cfg)
    for key, val in vars(args).items():
        if key in ("config", "command", "verbose") or val is None:
            continue
        if key.startswith("tol_"):
            tolerances[key[4:]] = val
        else:
            cfg[key] = val
    unknown = set(tolerances) - set(TOL_KEYS)
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
    cfg["tolerances"] = {**campaigns.DEFAULT_TOLERANCES, **tolerances}
    cfg["command"] = args.command

    if "n" in cfg and int(cfg["n"]) < 1:
        raise ConfigError("--n must be >= 1")
    if "dims" in cfg and (not cfg["dims"] or min(cfg["dims"]) < 2):
        raise ConfigError("--dims must be a non-empty list of integers >= 2")
    if any(not 0 <= lam <= 1 for lam in cfg["lambda_grid"]) or not cfg["lambda_grid"]:
        raise ConfigError("--lambda-grid values must lie in [0, 1]")
    if args.command == "flux" and (len(cfg["betas"]) != 2 or min(cfg["betas"]) < 0):
        raise ConfigError("--betas needs two nonnegative values beta_S,beta_E")
    if args.command == "cr-limit" and any(t <= 0 for t in cfg["taus"]):
        raise ConfigError("--taus must be positive")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("--format must be csv or json")
    return cfg


def _echo(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in ("out", "format")}


def _operator(name: str, dim: int, rng) -> np.ndarray:
    if name == "random":
        return random_observable(dim, 1.0, rng).matrix
    if dim != 2:
        raise ConfigError(f"named operator {name} is a qubit operator; use 'random' for dim {dim}")
    return NAMED_OPERATORS[name]


def run(cfg: dict):
    cmd = cfg["command"]
    tol = cfg["tolerances"]
    if cmd == "verify":
        return campaigns.verify_campaign(cfg["n"], cfg["dims"], cfg["seed"], cfg["lambda_grid"], tol)
    if cmd == "bound-table":
        return campaigns.bound_table(cfg["n"], cfg["dims"], cfg["seed"], cfg["lambda_grid"], bool(cfg.get("identical")), tol)
    if cmd == "reduce":
        return campaigns.reduce_campaign(cfg["n"], cfg["dims"], cfg["seed"], cfg["lambda_grid"], tol)
    if cmd == "flux":
        h = NAMED_OPERATORS[cfg["hamiltonian"]]
        return campaigns.flux_campaign(
            cfg["angles"], cfg["betas"][0], cfg["betas"][1], h, h,
            cfg["protocol"].replace("-", "_"), int(cfg["observables"]), cfg["seed"], tol,
        )
    if cmd == "cr-limit":
        rng = campaigns.instance_rng(cfg["seed"], 0)
        if cfg.get("random"):
            dim = int(cfg["dims"][0])
            rho = random_density_matrix(dim, dim, rng)
        else:
            diag = np.asarray(cfg["state"], float)
            rho = DensityMatrix(np.diag(diag / diag.sum()))
            dim = rho.dim
        h = _operator(cfg["hamiltonian"], dim, rng)
        theta = _operator(cfg["observable"], dim, rng)
        return campaigns.cr_limit_scan(rho, h, theta, cfg["taus"], tol["cr"])
    raise ConfigError(f"unknown command {cmd}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        result = run(cfg)
    except ConfigError as err:
        print(f"qtur: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"qtur: invalid input: {err}", file=sys.stderr)
        return EXIT_CONFIG
    write_report(cfg.get("out"), cfg["format"], cfg["command"], _echo(cfg), result)
    s = result.summary
    log.info("%s: %s rows, %s violations", cfg["command"], s.get("rows"), s.get("violations"))
    if result.violations:
        print(f"qtur: {len(result.violations)} violation(s); see report", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
