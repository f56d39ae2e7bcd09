"""Command-line harness: ``bmp ellipse|gpa|validate``.

Every command prints a JSON report ``{command, seed, config, results}`` to
stdout, where each result is ``{name, value, expected, tolerance, pass}``.
With ``--out PATH`` the report is also written to ``PATH``; ``ellipse``
additionally writes its samples to ``<PATH stem>_samples.csv``.

Exit status: 0 when every check passes, 1 when any fails, 2 on usage or
I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import models, validation
from .distributions import UniformUnitCircle
from .inference import FlipProposal, mh_chain
from .validation import Check

DEFAULT_SEED = 42
COMMANDS = ("ellipse", "gpa", "validate")


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = DEFAULT_SEED
    n_samples: int = 3000
    n_steps: int = 10_000
    quadrature_nodes: int = 512
    tolerance: float = 1e-6
    output_path: str = ""


def run_ellipse(cfg: RunConfig) -> tuple[list[Check], list[tuple[float, float, str]]]:
    rng = np.random.default_rng(cfg.seed)
    dist = models.stretched_circle()
    base = UniformUnitCircle().sample_n(rng, cfg.n_samples)
    moved = np.stack([dist.bijector.forward(p) for p in base])
    rows = [(x, y, "base") for x, y in base.tolist()] + [(x, y, "transformed") for x, y in moved.tolist()]

    checks = validation.ellipse_normalization(cfg.quadrature_nodes, cfg.tolerance)
    perimeter = models.ellipse_integral(lambda p: 0.0, cfg.quadrature_nodes)
    at_side = math.exp(dist.log_density([2.0, 0.0]))
    at_top = math.exp(dist.log_density([0.0, 20.0]))
    checks += [
        Check("ellipse.perimeter", perimeter, 81.28, 5e-3, abs(perimeter - 81.28) <= 5e-3),
        validation._close("ellipse.density_at_(2,0)", at_side, 1 / (40 * math.pi), validation.ANALYTIC_TOL),
        validation._close("ellipse.density_at_(0,20)", at_top, 1 / (4 * math.pi), validation.ANALYTIC_TOL),
        validation._close("ellipse.density_ratio", at_top / at_side, 10.0, validation.ANALYTIC_TOL),
    ]
    return checks, rows


def run_gpa(cfg: RunConfig) -> list[Check]:
    rng = np.random.default_rng(cfg.seed)
    target = models.GPATarget()
    label = lambda s: models.GPA_LABELS[float(s[0])]  # noqa: E731
    states, stats = mh_chain(target, FlipProposal(), [models.INDIAN], cfg.n_steps, rng, label=label)
    checks = []
    for latent, name in models.GPA_LABELS.items():
        w = target.likelihood(latent)
        checks.append(Check(f"gpa.likelihood_dim.{name}", float(w.dim), float(latent), 0.0, w.dim == latent))
        checks.append(validation._close(f"gpa.likelihood.{name}", w.weight, 0.1, validation.ANALYTIC_TOL))
    for key in sorted(stats.proposed):
        n, acc = stats.proposed[key], stats.accepted[key]
        checks.append(Check(f"gpa.proposed.{key[0]}->{key[1]}", float(n), float(n), 0.0, True))
        checks.append(Check(f"gpa.accepted.{key[0]}->{key[1]}", float(acc), float(acc), 0.0, True))
    to_american = stats.acceptance_rate(("Indian", "American"))
    # vacuously zero when the chain never proposed to leave American
    to_indian = stats.acceptance_rate(("American", "Indian"))
    to_indian = 0.0 if math.isnan(to_indian) else to_indian
    freq = float(np.mean(states[1:, 0] == models.AMERICAN))
    checks += [
        Check("gpa.indian_to_american_rate", to_american, 1.0, 0.0, to_american == 1.0),
        Check("gpa.american_to_indian_rate", to_indian, 0.0, 0.0, to_indian == 0.0),
        Check("gpa.posterior_american", freq, 1.0, 0.0, freq == 1.0),
    ]
    return checks


def run_validate(cfg: RunConfig) -> list[Check]:
    return validation.run_all(cfg.seed, cfg.tolerance, cfg.quadrature_nodes)


def _finite_or_str(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def make_report(cfg: RunConfig, checks: list[Check]) -> dict:
    results = [{k: _finite_or_str(v) for k, v in c.as_dict().items()} for c in checks]
    config = asdict(cfg)
    del config["command"]
    return {"command": cfg.command, "seed": cfg.seed, "config": config, "results": results}


def _positive_int(s):
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _seed(s):
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {s}")
    return v


def _default_seed():
    env = os.environ.get("BMP_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return _seed(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise SystemExit(f"bmp: error: invalid BMP_SEED {env!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmp",
        description="Reproduce the stretched-circle and GPA examples and run the self-checks.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--seed", type=_seed, default=None, help="RNG seed (default: $BMP_SEED or 42)")
    parser.add_argument("--samples", type=_positive_int, default=3000, help="samples drawn by ellipse")
    parser.add_argument("--steps", type=_positive_int, default=10_000, help="MH steps run by gpa")
    parser.add_argument("--quad-nodes", type=_positive_int, default=512, help="Gauss-Legendre nodes")
    parser.add_argument("--tol", type=_positive_float, default=1e-6, help="tolerance cap for the checks")
    parser.add_argument("--out", default="", help="also write the JSON report here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        seed=_default_seed() if args.seed is None else args.seed,
        n_samples=args.samples,
        n_steps=args.steps,
        quadrature_nodes=args.quad_nodes,
        tolerance=args.tol,
        output_path=args.out,
    )
    rows = None
    if cfg.command == "ellipse":
        checks, rows = run_ellipse(cfg)
    elif cfg.command == "gpa":
        checks = run_gpa(cfg)
    else:
        checks = run_validate(cfg)

    text = json.dumps(make_report(cfg, checks), indent=2) + "\n"
    try:
        if cfg.output_path:
            out = Path(cfg.output_path)
            out.write_text(text)
            if rows is not None:
                with open(out.with_name(out.stem + "_samples.csv"), "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["x", "y", "label"])
                    writer.writerows((repr(x), repr(y), label) for x, y, label in rows)
    except OSError as e:
        print(f"bmp: error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(text)

    failed = [c.name for c in checks if not c.passed]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
