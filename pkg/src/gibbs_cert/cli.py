from __future__ import annotations

import argparse
import logging
import math
import os
import time
from typing import Any
from typing import Callable
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

import numpy as np
from gibbs_cert.cache import configure_cache
from gibbs_cert.dobrushin import dobrushin_bound
from gibbs_cert.dobrushin import exact_dobrushin_matrix
from gibbs_cert.dobrushin import neumann_series
from gibbs_cert.errors import CertificateError
from gibbs_cert.errors import ConfigError
from gibbs_cert.errors import GibbsCertError
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import SphereSpace
from gibbs_cert.modelfile import ModelFile
from gibbs_cert.modelfile import parse_model_file
from gibbs_cert.report import make_report
from gibbs_cert.report import write_matrix_csv
from gibbs_cert.report import write_report
from gibbs_cert.rotator import bar_q_matrix
from gibbs_cert.rotator import first_passage_bound
from gibbs_cert.rotator import gibbs_time_threshold
from gibbs_cert.rotator import mean_height
from gibbs_cert.rotator import strip_survival
from gibbs_cert.settings import FLAVORS
from gibbs_cert.settings import resolve_settings
from gibbs_cert.settings import Settings
from gibbs_cert.simulate import first_passage_prob
from gibbs_cert.simulate import heat_bath_sampler
from gibbs_cert.simulate import monitoring_allowance
from gibbs_cert.simulate import rng_spec
from gibbs_cert.simulate import SdeConfig
from gibbs_cert.simulate import simulate_height
from gibbs_cert.simulate import soundness_check
from gibbs_cert.simulate.heat_bath import mean_pair_alignment
from gibbs_cert.two_layer import continuity_certificate
from gibbs_cert.two_layer import FuzzyChannel
from gibbs_cert.two_layer import fuzzy_check

EXIT_CERTIFIED = 0
EXIT_ERROR = 1
EXIT_NOT_CERTIFIED = 2
TASKS = ("certify", "rotator-threshold", "rotator-qbar", "simulate", "oracle")


class RunConfig(NamedTuple):
    """A parsed invocation: task, model file, output directory and resolved settings."""

    task: str
    model_path: str | None
    out: str
    phi0: float | None
    settings: Settings


class Outcome(NamedTuple):
    certified: bool
    results: dict[str, Any]
    matrices: dict[str, tuple[Any, Sequence[str]]] = {}  # noqa: RUF012


def _run_option(run: Mapping[str, Any], key: str, default: Any = None) -> Any:  # noqa: ANN401
    value = run.get(key, default)
    if value is None:
        msg = f"the [run] section needs {key!r} for this task"
        raise ConfigError(msg)
    return value


def _sphere_dimension(model: InteractionModel) -> int:
    if isinstance(model.space, SphereSpace):
        return model.space.q
    if model.space.coords is not None and model.potential.form == "rotator":
        return int(model.space.coords.shape[1])
    msg = "rotator tasks need a rotator model"
    raise ConfigError(msg)


def _horizon(loaded: ModelFile) -> float | None:
    if "t" in loaded.run:
        return float(loaded.run["t"])
    channel = loaded.channel
    return float(channel.t) if channel is not None and hasattr(channel, "t") else None


def certify(loaded: ModelFile, config: RunConfig) -> Outcome:
    model, channel = loaded.model, loaded.channel
    labels = model.graph.labels
    flavor = config.settings.flavor
    if channel is None:
        flavor = flavor or "linear"
        bound = dobrushin_bound(model, flavor)
        results: dict[str, Any] = {"flavor": flavor, "c": bound.c_bound}
        try:
            series = neumann_series(bound.entries)
        except CertificateError as e:
            results["statement"] = str(e)
            return Outcome(False, results, {"c_matrix": (bound.entries, labels)})
        results["statement"] = "Dobrushin uniqueness condition holds"
        return Outcome(
            True, results, {"c_matrix": (bound.entries, labels), "d_matrix": (series.d, labels)}
        )
    if isinstance(channel, FuzzyChannel):
        report = fuzzy_check(model, channel.partition)
        results = {"lhs": report.lhs, "fineness": report.fineness, "flavor": "lipschitz"}
        return Outcome(report.certified, results, {"c_bar": (report.c_bar, labels)})
    certificate = continuity_certificate(model, channel, flavor, nodes=config.settings.quad_nodes)
    results = {
        "flavor": certificate.flavor,
        "c_bar": certificate.c_bar,
        "grid_sup": certificate.conditional.grid_sup,
        "statement": certificate.statement,
    }
    matrices: dict[str, tuple[Any, Sequence[str]]] = {
        "c_bar": (certificate.conditional.entries, labels)
    }
    if certificate.q is not None:
        results["provenance"] = certificate.q.provenance
        matrices["q_matrix"] = (certificate.q.entries, labels)
    return Outcome(certificate.certified, results, matrices)


def rotator_threshold(loaded: ModelFile, _config: RunConfig) -> Outcome:
    q = _sphere_dimension(loaded.model)
    report = gibbs_time_threshold(loaded.model.couplings, q, _horizon(loaded))
    results = report._asdict()
    results["certified"] = report.certified
    return Outcome(report.certified is not False, results)


def rotator_qbar(loaded: ModelFile, _config: RunConfig) -> Outcome:
    q = _sphere_dimension(loaded.model)
    t = _horizon(loaded)
    if t is None:
        msg = "rotator-qbar needs a time (run.t or channel.t)"
        raise ConfigError(msg)
    labels = loaded.model.graph.labels
    try:
        qbar = bar_q_matrix(loaded.model.couplings, q, t)
    except CertificateError as e:
        return Outcome(False, {"t": t, "q": q, "margin": e.margin, "statement": str(e)})
    results = {
        "t": t,
        "q": q,
        "margin": qbar.margin,
        "ceiling_active": int(qbar.ceiling_active.sum()),
    }
    return Outcome(True, results, {"qbar_matrix": (qbar.entries, labels)})


def simulate(loaded: ModelFile, config: RunConfig) -> Outcome:
    settings = config.settings
    rng = rng_spec(settings.seed)
    run = loaded.run
    kind = _run_option(run, "kind", "height")
    sde = SdeConfig(dt=settings.dt)
    if kind == "height":
        q = _sphere_dimension(loaded.model)
        t = float(_run_option(run, "t"))
        z0 = float(run.get("z0", 1.0))
        estimate = simulate_height(q, z0, t, rng, config=sde, n_paths=settings.n_paths)
        target = mean_height(q, t) * z0
        results = {"kind": kind, "estimate": estimate._asdict(), "target": target}
        return Outcome(True, results)
    if kind == "first-passage":
        q = _sphere_dimension(loaded.model)
        t = float(_run_option(run, "t"))
        phi0 = config.phi0 if config.phi0 is not None else float(_run_option(run, "phi0"))
        estimate = first_passage_prob(q, phi0, t, rng, config=sde, n_paths=settings.n_paths)
        bound = float(first_passage_bound(phi0, t))
        allowance = monitoring_allowance(phi0, t, settings.dt)
        results = {
            "kind": kind,
            "estimate": estimate._asdict(),
            "reflection_bound": bound,
            "strip_survival": strip_survival(phi0, t),
            "monitoring_allowance": allowance,
        }
        dominated = estimate.mean <= bound + 3.0 * estimate.stderr + allowance
        return Outcome(dominated, results)
    if kind == "heat-bath":
        sweeps = int(_run_option(run, "sweeps", 10_000))
        burn_in = int(run.get("burn_in", sweeps // 10))
        samples = heat_bath_sampler(loaded.model, sweeps, burn_in, rng)
        results = {"kind": kind, "sweeps": sweeps, "acceptance": samples.acceptance}
        if samples.samples.ndim == 3:  # noqa: PLR2004
            results["alignment"] = {
                f"{i}-{j}": samples.estimate(mean_pair_alignment(samples, i, j))._asdict()
                for i, j in loaded.model.graph.edges
            }
        return Outcome(True, results)
    msg = f"unknown simulation kind {kind!r}"
    raise ConfigError(msg)


def oracle(loaded: ModelFile, config: RunConfig) -> Outcome:
    settings = config.settings
    run = loaded.run
    kind = _run_option(run, "kind", "soundness")
    labels = loaded.model.graph.labels
    if kind == "exact-dobrushin":
        matrix = exact_dobrushin_matrix(loaded.model, None, settings.enumeration_budget)
        bound = dobrushin_bound(loaded.model, settings.flavor or "linear")
        dominated = bool(np.all(matrix <= bound.entries + 1e-10))
        results = {"kind": kind, "dominated": dominated, "c_exact": float(matrix.sum(1).max())}
        return Outcome(dominated, results, {"exact_matrix": (matrix, labels)})
    if kind == "soundness":
        if loaded.channel is None:
            msg = "the soundness oracle needs a [channel] section"
            raise ConfigError(msg)
        report = soundness_check(
            loaded.model,
            loaded.channel,
            rng_spec(settings.seed),
            n_pairs=int(run.get("pairs", 200)),
            flavor=settings.flavor,
            budget=settings.enumeration_budget,
        )
        results = {
            "kind": kind,
            "pairs": report.n_pairs,
            "checks": report.checks,
            "violations": report.violations,
            "worst_ratio": report.worst_ratio,
        }
        return Outcome(report.violations == 0, results, {"q_matrix": (report.q.entries, labels)})
    msg = f"unknown oracle kind {kind!r}"
    raise ConfigError(msg)


TASK_RUNNERS: Mapping[str, Callable[[ModelFile, RunConfig], Outcome]] = {
    "certify": certify,
    "rotator-threshold": rotator_threshold,
    "rotator-qbar": rotator_qbar,
    "simulate": simulate,
    "oracle": oracle,
}


def run(config: RunConfig) -> int:
    """Run one task and write its report; returns the exit code."""
    if config.model_path is None:
        msg = f"{config.task} needs --model"
        raise ConfigError(msg)
    loaded = parse_model_file(config.model_path)
    started = time.perf_counter()
    outcome = TASK_RUNNERS[config.task](loaded, config)
    wall_time = time.perf_counter() - started
    os.makedirs(config.out, exist_ok=True)
    results = dict(outcome.results)
    results["certified"] = outcome.certified
    for name, (matrix, labels) in outcome.matrices.items():
        path = os.path.join(config.out, f"{name}.csv")
        write_matrix_csv(path, matrix, labels)
        results.setdefault("files", []).append(os.path.basename(path))
    report = make_report(
        config.task,
        results,
        raw=loaded.raw,
        wall_time=wall_time,
        seed=config.settings.seed,
    )
    write_report(os.path.join(config.out, "report.json"), report)
    logging.info("%s finished in %.3fs (certified: %s)", config.task, wall_time, outcome.certified)
    return EXIT_CERTIFIED if outcome.certified else EXIT_NOT_CERTIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbs-cert", add_help=True)
    parser.add_argument("task", choices=TASKS, help="Task to run")
    parser.add_argument("--model", help="Model file (TOML)")
    parser.add_argument("--out", default=".", help="Output directory for report.json and CSVs")
    parser.add_argument("--seed", type=int, help="Root seed (env GIBBS_CERT_SEED)")
    parser.add_argument("--paths", type=int, help="Monte Carlo paths (env GIBBS_CERT_PATHS)")
    parser.add_argument("--dt", type=float, help="SDE step size (env GIBBS_CERT_DT)")
    parser.add_argument(
        "--quad-nodes", type=int, help="Quadrature nodes (env GIBBS_CERT_QUAD_NODES)"
    )
    parser.add_argument("--flavor", choices=FLAVORS, help="Bound flavor (env GIBBS_CERT_FLAVOR)")
    parser.add_argument("--cache-dir", help="Oracle cache directory (env GIBBS_CERT_CACHE_DIR)")
    parser.add_argument("--phi0", type=float, help="Initial angle for first-passage runs")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log pipeline stages")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = resolve_settings(
            seed=args.seed,
            n_paths=args.paths,
            dt=args.dt,
            quad_nodes=args.quad_nodes,
            flavor=args.flavor,
            cache_dir=args.cache_dir,
        )
        if args.phi0 is not None and not 0 < args.phi0 < math.pi / 2:
            msg = f"--phi0 must lie in (0, π/2), got {args.phi0}"
            raise ConfigError(msg)
        configure_cache(settings.cache_dir)
        config = RunConfig(
            task=args.task,
            model_path=args.model,
            out=args.out,
            phi0=args.phi0,
            settings=settings,
        )
        return run(config)
    except (GibbsCertError, OSError) as e:
        logging.error("%s: %s", args.task, e)  # noqa: TRY400
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
