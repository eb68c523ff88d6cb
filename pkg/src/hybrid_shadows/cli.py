"""Command-line entry point for the hybrid-shadow pipeline.

All outputs are plain comma-delimited text with '#'-prefixed header lines
embedding the run configuration; report commands additionally render a PNG
figure next to the table unless ``--no-figure`` is given.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 tomographic incompleteness, 4 contradiction (corrupted record).
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import random
import sys
from pathlib import Path

import numpy as np

from . import __version__, figures
from .circuits import sample_shot
from .estimation import (
    TomographicIncompletenessError,
    estimate_observable,
    ghz_demo_estimates,
    mc_weight_provider,
    monte_carlo_pauli_weights,
    ObservableSpec,
)
from .paulis import PauliString
from .shadow_io import ShadowParseError, read_shadows, record_to_json
from .tableau import ContradictionError
from .scaling import MpsParams, shadow_norm_curve, sweep_and_minimize
from .weights_exact import evolve_exact, evolve_exact_steady, prior_snapshot_weights
from .weights_mps import evolve_to_steady, init_identity_weight

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3
EXIT_CONTRADICTION = 4


class ConfigError(Exception):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path, config: dict, columns: list[str], rows) -> None:
    """Delimited text with '#'-prefixed header embedding the run config."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# hybrid-shadows {__version__}\n")
        for key in sorted(config):
            fh.write(f"# {key} = {_fmt(config[key])}\n")
        fh.write("# columns: " + ",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _config_from_args(args, skip=("out", "figure", "workers", "func")) -> dict:
    return {
        k: v for k, v in sorted(vars(args).items())
        if k not in skip and not k.startswith("_")
    }


def _parse_grid(text: str) -> list[float]:
    """p-grid as 'start:stop:step' (inclusive stop) or comma list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ConfigError("grid step must be positive")
        count = int(round((stop - start) / step))
        grid = [round(start + i * step, 10) for i in range(count + 1)]
        return [p for p in grid if p <= stop + 1e-12]
    return [float(x) for x in text.split(",")]


def _parse_sizes(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _observable_from_text(text: str, n_qubits: int) -> tuple[str, ObservableSpec]:
    """Accept a full Pauli label ('ZZII...') or 'Z^k' for a leading Z-string."""
    if "^" in text:
        basis, k = text.split("^")
        k = int(k)
        if basis not in ("X", "Y", "Z") or not 1 <= k <= n_qubits:
            raise ConfigError(f"bad observable {text!r}")
        label = basis * k + "I" * (n_qubits - k)
    else:
        label = text
        if len(label) != n_qubits:
            raise ConfigError(
                f"observable {text!r} has {len(label)} sites, records have {n_qubits}"
            )
    return text, ObservableSpec.from_label(label)


def _default_workers() -> int:
    env = os.environ.get("HYBRID_SHADOWS_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return 1


# -- subcommands -----------------------------------------------------------------


def _sample_chunk(job) -> list[str]:
    state, n, layers, p, seed, start, count = job
    return [
        record_to_json(sample_shot(state, n, layers, p, seed, start + i))
        for i in range(count)
    ]


def cmd_sample(args) -> int:
    if not 0.0 <= args.p <= 1.0:
        raise ConfigError("p must lie in [0, 1]")
    jobs = []
    chunk = max(256, (args.shots + args.workers - 1) // args.workers)
    for start in range(0, args.shots, chunk):
        jobs.append(
            (args.state, args.n, args.layers, args.p, args.seed, start,
             min(chunk, args.shots - start))
        )
    if args.workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(args.workers) as pool:
            parts = pool.map(_sample_chunk, jobs)
    else:
        parts = [_sample_chunk(job) for job in jobs]
    with open(args.out, "w", encoding="ascii") as fh:
        for part in parts:
            for line in part:
                fh.write(line)
                fh.write("\n")
    print(f"wrote {args.shots} shadow records to {args.out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    records = read_shadows(args.records)
    if not records:
        raise ConfigError(f"no records in {args.records}")
    n = records[0].n_qubits
    p = records[0].p
    layers = records[0].n_unitary_layers
    for rec in records:
        if (rec.n_qubits, rec.p, rec.n_unitary_layers) != (n, p, layers):
            raise ConfigError("records mix different circuit geometries")
    observables = [_observable_from_text(t, n) for t in args.observable]
    if args.weights == "exact":
        weights = prior_snapshot_weights(n, layers, p)
    else:
        supports = sorted(
            {pauli.support for _, obs in observables for _, pauli in obs.terms}
        )
        weights = mc_weight_provider(
            n, layers, p, args.weight_shots, args.weight_seed, supports,
            fallback=prior_snapshot_weights(n, layers, p), workers=args.workers,
        )
    rows = []
    for text, obs in observables:
        report = estimate_observable(records, obs, weights, args.batches)
        rows.append(
            (text, p, report.value, report.std_error, report.n_samples, report.n_batches)
        )
    write_table(
        args.out,
        _config_from_args(args, skip=("out", "figure", "workers", "func", "observable")),
        ["observable_label", "p", "value", "std_error", "n_samples", "n_batches"],
        rows,
    )
    print(f"wrote {len(rows)} estimates to {args.out}")
    return EXIT_OK


def cmd_weights(args) -> int:
    config = _config_from_args(args)
    if args.engine == "exact":
        if args.demo_layers is not None:
            vec = prior_snapshot_weights(args.n, args.demo_layers, args.p)
        elif args.periods is not None:
            vec = evolve_exact(args.n, args.periods, args.p,
                               final_measurement=args.final_measurement)
        else:
            vec, periods = evolve_exact_steady(args.n, args.p)
            config["converged_periods"] = periods
        rows = vec.weight_table()
        write_table(args.out, config, ["support_mask", "support_size", "weight"], rows)
        if args.figure:
            decay = [(k, vec.consecutive_weight((args.n - k) // 2, k))
                     for k in range(1, args.n + 1)]
            figures.save_weight_decay(decay, Path(args.out).with_suffix(".png"))
    else:
        mps = init_identity_weight(args.n, args.chi, args.tol)
        if args.periods is not None:
            mps.apply_layers(args.periods, args.p)
            if args.final_measurement:
                mps.apply_measurement_layer(args.p)
            mps.normalize()
        else:
            probes = [((args.n - k) // 2, k) for k in (1, args.n // 2)]
            mps, periods = evolve_to_steady(mps, args.p, probes)
            config["converged_periods"] = periods
        config["discarded_mass"] = mps.discarded_mass
        rows = []
        for k in range(1, args.n + 1):
            w = mps.query_consecutive_weight((args.n - k) // 2, k)
            rows.append((k, w, float(-np.log(max(w, 1e-300)))))
        write_table(args.out, config, ["k", "w", "log_norm"], rows)
        if args.figure:
            figures.save_weight_decay(
                [(k, w) for k, w, _ in rows], Path(args.out).with_suffix(".png")
            )
    print(f"wrote weight table to {args.out}")
    return EXIT_OK


def cmd_scaling(args) -> int:
    grid = _parse_grid(args.p_grid)
    if any(not 0 < p <= 1 for p in grid):
        raise ConfigError("grid rates must lie in (0, 1]")
    params = MpsParams(
        chi_max=args.chi, trunc_tol=args.tol, depth_factor=args.depth_factor
    )
    report = sweep_and_minimize(
        grid, args.n, (args.kmin, args.kmax), params,
        refine_points=args.refine, workers=args.workers,
    )
    config = _config_from_args(args)
    config.update(
        p_star=report.p_star, beta_min=report.beta_min,
        delta_at_min=report.delta_at_min, quadratic_ok=report.quadratic_ok,
    )
    curves_rows = [
        (c.p, k, ln) for c in report.curves for k, ln in c.points
    ]
    write_table(
        f"{args.out}_curves.csv", config, ["p", "k", "log_norm"], curves_rows
    )
    sweep_rows = [(r.p, r.beta, r.delta, r.fit_rms) for r in report.rows]
    write_table(
        f"{args.out}_sweep.csv", config, ["p", "beta", "delta", "fit_rms"], sweep_rows
    )
    if args.figure:
        figures.save_scaling(
            report.curves, sweep_rows, (report.p_star, report.beta_min),
            f"{args.out}.png",
        )
    print(
        f"sweep minimum: beta={report.beta_min:.4f} at p*={report.p_star:.4f} "
        f"(delta={report.delta_at_min:.3f}); tables at {args.out}_*.csv"
    )
    return EXIT_OK


def cmd_toy(args) -> int:
    from .toymodels import BlockToySpec, toy_area, toy_monte_carlo, toy_volume

    rng = random.Random(args.seed)
    rows = []
    fig_rows = []
    for n in _parse_sizes(args.block_size):
        for m in _parse_sizes(args.blocks):
            if args.model == "area":
                w, beta = toy_area(n, m)
                spec = BlockToySpec(n, m, "area")
                total = n * m
            else:
                total = args.total_qubits
                w, beta = toy_volume(n, m, total)
                spec = BlockToySpec(n, m, "volume", total)
            support = (1 << (n * m)) - 1
            est, err = toy_monte_carlo(spec, support, args.shots, rng)
            rows.append((args.model, n, m, total, n * m, w, beta, est, err))
            fig_rows.append((f"{args.model} n={n} m={m}", w, est, err))
    write_table(
        args.out,
        _config_from_args(args),
        ["model", "block_size", "blocks_covered", "total_qubits", "support_size",
         "analytic_w", "analytic_beta", "monte_carlo", "std_error"],
        rows,
    )
    if args.figure:
        figures.save_toy(fig_rows, Path(args.out).with_suffix(".png"))
    print(f"wrote {len(rows)} toy-model rows to {args.out}")
    return EXIT_OK


def cmd_statmech(args) -> int:
    from .toymodels import statmech_pauli_weight, tfim_ground_state

    rows = []
    for h in (float(x) for x in args.h_over_j.split(",")):
        psi = tfim_ground_state(args.sites, h)
        for k in range(1, args.kmax + 1):
            start = (args.sites - k) // 2
            w = statmech_pauli_weight(psi, ((1 << k) - 1) << start)
            w_vol = (1.0 + 2.0 / np.tanh(h / 4.0)) ** -k if h > 0 else 0.0
            w_area = (3.0 * np.exp(-2.0 / (9.0 * h))) ** -k if h > 0 else 0.0
            rows.append((h, k, w, w_vol, w_area))
    write_table(
        args.out,
        _config_from_args(args),
        ["h_over_j", "k", "weight_ed", "volume_form", "area_form"],
        rows,
    )
    if args.figure:
        figures.save_statmech(rows, Path(args.out).with_suffix(".png"))
    print(f"wrote {len(rows)} stat-mech rows to {args.out}")
    return EXIT_OK


def cmd_demo_ghz(args) -> int:
    sizes = _parse_sizes(args.sizes)
    p_values = _parse_grid(args.p)
    est_rows = []
    norm_rows = []
    for p in p_values:
        exact = prior_snapshot_weights(args.n, args.layers, p)
        if args.weights == "mc":
            supports = [(1 << k) - 1 for k in sizes]
            weights = mc_weight_provider(
                args.n, args.layers, p, args.weight_shots, args.seed + 1,
                supports, min_hits=args.min_hits, fallback=exact,
                workers=args.workers,
            )
        else:
            weights = exact
        reports = ghz_demo_estimates(
            args.n, args.layers, p, args.shots, args.seed, sizes, weights,
            n_batches=args.batches, workers=args.workers,
        )
        for k in sizes:
            rep = reports[k]
            est_rows.append(
                (f"Z^{k}", k, p, rep.value, rep.std_error, rep.n_samples, rep.n_batches)
            )
        if args.norm_shots:
            from .estimation import collect_pauli_traces

            paulis = [PauliString(args.n, 0, (1 << k) - 1) for k in sizes]
            traces = collect_pauli_traces(
                "maximally-mixed", args.n, args.layers, p, args.seed + 2,
                args.norm_shots, paulis, args.workers,
            )
            for k, tr in zip(sizes, traces):
                w = exact.consecutive_weight(0, k)
                emp = float(np.mean((tr.astype(float) / w) ** 2))
                norm_rows.append((k, p, emp, 1.0 / w))
    config = _config_from_args(args)
    write_table(
        f"{args.out}_estimates.csv", config,
        ["observable_label", "k", "p", "value", "std_error", "n_samples", "n_batches"],
        [(r[0], r[1], r[2], r[3], r[4], r[5], r[6]) for r in est_rows],
    )
    if args.figure:
        figures.save_demo_estimates(
            [(r[0], r[1], r[2], r[3], r[4]) for r in est_rows],
            f"{args.out}_estimates.png",
        )
    if norm_rows:
        write_table(
            f"{args.out}_norms.csv", config,
            ["k", "p", "empirical_second_moment", "inverse_weight"],
            norm_rows,
        )
        if args.figure:
            figures.save_demo_norms(norm_rows, f"{args.out}_norms.png")
    print(f"wrote demo tables to {args.out}_*.csv")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import dense
    from .circuits import reconstruct_snapshot, sample_circuit
    from .dense import (
        all_pauli_traces,
        channel_apply,
        enumerate_outcome_probs,
        maximally_mixed,
        sample_outcomes_dense,
        tableau_density_matrix,
    )
    from .toymodels import random_stabilizer_tableau

    if args.n > 4:
        raise ConfigError("verify is capped at 4 qubits")
    rng = random.Random(args.seed)
    n = args.n
    dim = 2**n
    failures = []

    def check(name: str, ok: bool, detail: str) -> None:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        if not ok:
            failures.append(name)

    max_bayes = 0.0
    max_snap = 0.0
    max_total = 0.0
    for _ in range(args.records):
        rho_t = random_stabilizer_tableau(n, rng)
        rho = tableau_density_matrix(rho_t)
        circuit = sample_circuit(n, args.layers, args.p, rng)
        record = sample_outcomes_dense(rho, circuit, rng)
        prob, sigma = channel_apply(rho, record)
        prior_prob, _ = channel_apply(maximally_mixed(n), record)
        bayes = np.trace(sigma @ rho).real - prob / (prior_prob * dim)
        max_bayes = max(max_bayes, abs(bayes))
        snap = reconstruct_snapshot(record)
        diff = np.abs(
            all_pauli_traces(sigma, n)
            - all_pauli_traces(tableau_density_matrix(snap), n)
        ).max()
        max_snap = max(max_snap, diff)
        if sum(len(l.events) for l in circuit.layers if l.kind == "measurement") <= 12:
            total = sum(enumerate_outcome_probs(rho, circuit).values())
            max_total = max(max_total, abs(total - 1.0))
    check("bayes-ratio identity", max_bayes < 1e-10, f"max deviation {max_bayes:.2e}")
    check("snapshot equivalence", max_snap < 1e-10, f"max trace diff {max_snap:.2e}")
    check("outcome completeness", max_total < 1e-10, f"max deviation {max_total:.2e}")

    if args.channel_shots:
        report = dense.verify_measurement_channel(
            n, args.layers, args.p, args.channel_shots, rng
        )
        check(
            "measurement-channel diagonality",
            report.max_offdiagonal_sigma < 5.0,
            f"max offdiag {report.max_offdiagonal:.3e} "
            f"({report.max_offdiagonal_sigma:.2f} sigma)",
        )
    return EXIT_OK if not failures else EXIT_VERIFY_FAILED


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybrid-shadows",
        description="Classical shadow tomography with hybrid quantum circuits",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, figure=False):
        sp.add_argument("--workers", type=int, default=_default_workers(),
                        help="worker processes (env HYBRID_SHADOWS_WORKERS)")
        if figure:
            sp.add_argument("--figure", action=argparse.BooleanOptionalAction,
                            default=True, help="render a PNG next to the table")

    sp = sub.add_parser("sample", help="sample shadow records to a file")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--layers", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--shots", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--state", default="ghz",
                    choices=["ghz", "zero", "plus", "maximally-mixed"])
    sp.add_argument("--out", required=True)
    add_common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("estimate", help="estimate observables from records")
    sp.add_argument("--records", required=True)
    sp.add_argument("--observable", action="append", required=True,
                    help="Pauli label (e.g. ZZII) or Z^k; repeatable")
    sp.add_argument("--batches", type=int, default=10)
    sp.add_argument("--weights", default="exact", choices=["exact", "mc"])
    sp.add_argument("--weight-shots", type=int, default=200000)
    sp.add_argument("--weight-seed", type=int, default=1)
    sp.add_argument("--out", required=True)
    add_common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("weights", help="weight tables from the transfer engines")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--engine", default="exact", choices=["exact", "mps"])
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--periods", type=int, default=None,
                       help="explicit [measurement, unitary] period count")
    group.add_argument("--demo-layers", type=int, default=None,
                       help="snapshot ensemble of an L-unitary-layer circuit")
    sp.add_argument("--final-measurement", action=argparse.BooleanOptionalAction,
                    default=True)
    sp.add_argument("--chi", type=int, default=128)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--out", required=True)
    add_common(sp, figure=True)
    sp.set_defaults(func=cmd_weights)

    sp = sub.add_parser("scaling", help="shadow-norm scaling sweep (Fig. 4 recipe)")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--p-grid", default="0.05:0.95:0.05")
    sp.add_argument("--chi", type=int, default=128)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--kmin", type=int, default=8)
    sp.add_argument("--kmax", type=int, default=48)
    sp.add_argument("--depth-factor", type=float, default=0.75)
    sp.add_argument("--refine", type=int, default=5)
    sp.add_argument("--out", required=True, help="output prefix")
    add_common(sp, figure=True)
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("toy", help="block toy models: closed form vs Monte Carlo")
    sp.add_argument("--model", required=True, choices=["area", "volume"])
    sp.add_argument("--block-size", default="2", help="comma list of n")
    sp.add_argument("--blocks", default="1,2", help="comma list of m")
    sp.add_argument("--total-qubits", type=int, default=12)
    sp.add_argument("--shots", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    add_common(sp, figure=True)
    sp.set_defaults(func=cmd_toy)

    sp = sub.add_parser("statmech", help="Ising-ansatz weights from exact diagonalization")
    sp.add_argument("--sites", type=int, default=12)
    sp.add_argument("--h-over-j", default="0.2,1.0,5.0")
    sp.add_argument("--kmax", type=int, default=4)
    sp.add_argument("--out", required=True)
    add_common(sp, figure=True)
    sp.set_defaults(func=cmd_statmech)

    sp = sub.add_parser("demo-ghz", help="GHZ estimation demo (Fig. 3 recipe)")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--layers", type=int, default=3)
    sp.add_argument("--p", default="0.1,0.3,0.5,0.7,0.9",
                    help="rate, comma list, or start:stop:step")
    sp.add_argument("--shots", type=int, default=50000)
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--sizes", default="1,2,4,6")
    sp.add_argument("--batches", type=int, default=10)
    sp.add_argument("--weights", default="mc", choices=["exact", "mc"])
    sp.add_argument("--weight-shots", type=int, default=200000)
    sp.add_argument("--min-hits", type=int, default=25)
    sp.add_argument("--norm-shots", type=int, default=0,
                    help="prior samples for the shadow-norm comparison (0 = skip)")
    sp.add_argument("--out", required=True, help="output prefix")
    add_common(sp, figure=True)
    sp.set_defaults(func=cmd_demo_ghz)

    sp = sub.add_parser("verify", help="dense-oracle cross-checks (N <= 4)")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--layers", type=int, default=2)
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--records", type=int, default=100)
    sp.add_argument("--channel-shots", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    add_common(sp)
    sp.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TomographicIncompletenessError as exc:
        print(f"tomographic incompleteness: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except ContradictionError as exc:
        print(f"contradiction: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTION
    except ShadowParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
