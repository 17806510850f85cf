"""Command-line interface.

Subcommands: ``spectrum`` (levels, transition frequencies, genericity),
``rates`` (reservoir constant tables), ``generator`` (structured export
plus optional dense binary), ``evolve`` (trajectory CSV), ``glauber``
(spin-chain kinetics in classical or quantum mode), and ``check``
(invariant suites).  Exit codes: 0 success, 1 check failure, 2
configuration error.

All CSV floats are printed with 17 significant digits so round-trips are
lossless; JSON numbers use Python's shortest exact representation.  The
dense generator export is little-endian complex doubles, row-major, with
an 8-byte unsigned dimension header.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import struct
import sys

import numpy as np

from .bath import (
    BathConfigurationError,
    BathDomainError,
    BathSpec,
    correlation_table,
    emission_rate,
)
from .config import ConfigError, RunConfig, load_config
from .evolution import (
    ClassicalKineticSystem,
    detailed_balance_residual,
    diagonal_restriction,
    evolve,
    gibbs_distribution,
    gibbs_state,
)
from .generator import (
    StructureMapSet,
    build_generator,
    genericity_check,
    leibniz_defect,
)
from .glauber import (
    SpinChainSpec,
    classical_glauber_generator,
    configuration_energies,
    configuration_magnetizations,
    n_scaling_experiment,
    quantum_glauber_generator,
)
from .operators import bohr_frequencies, dag, spectral_decompose

__all__ = ["main"]

CHECK_SUITES = (
    "detailed-balance",
    "leibniz",
    "positivity",
    "scaling",
    "coherence-control",
)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _cjson(mat: np.ndarray) -> list:
    """Complex matrix as nested [re, im] pairs."""
    arr = np.asarray(mat, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def _write_text(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> RunConfig | None:
    cfg = load_config(args.config) if getattr(args, "config", None) else None
    if cfg is not None and cfg.bath is not None and getattr(args, "dos", None):
        cfg.bath = dataclasses.replace(cfg.bath, dos=args.dos)
    return cfg


def _require_config(args) -> RunConfig:
    cfg = _load(args)
    if cfg is None:
        raise ConfigError("this command needs --config")
    return cfg


# ---------------------------------------------------------------------------
# spectrum


def cmd_spectrum(args) -> int:
    cfg = _require_config(args)
    spec, _ = cfg.system()
    bohr = bohr_frequencies(spec)
    report = genericity_check(spec, bohr)
    if args.json:
        doc = {
            "energies": [float(e) for e in spec.energies],
            "multiplicities": [spec.multiplicity(k) for k in range(spec.n_levels)],
            "frequencies": [float(w) for w in bohr.frequencies],
            "generic": report.is_generic,
            "degenerate_levels": report.degenerate_levels,
            "ambiguous_frequencies": report.ambiguous_frequencies,
        }
        _write_text(args, json.dumps(doc, indent=2) + "\n")
        return 0
    lines = [f"dimension {spec.dim}, {spec.n_levels} levels"]
    for k, e in enumerate(spec.energies):
        lines.append(
            f"  level {k}: energy {_fmt(e)} multiplicity {spec.multiplicity(k)}"
        )
    lines.append(
        "frequencies: " + " ".join(_fmt(w) for w in bohr.frequencies)
    )
    if report.is_generic:
        lines.append("generic: yes")
    else:
        lines.append(
            "generic: no "
            f"(degenerate levels: {report.degenerate_levels}, "
            f"ambiguous frequencies: {report.ambiguous_frequencies})"
        )
    _write_text(args, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# rates


def cmd_rates(args) -> int:
    cfg = _require_config(args)
    spec, couplings = cfg.system()
    bath = cfg.require_bath()
    bohr = bohr_frequencies(spec)
    n = max(1, len(couplings))
    table = correlation_table(bath, bohr, n_couplings=n)
    if args.json:
        doc = {
            "frequencies": [float(w) for w in table.frequencies],
            "minus": [_cjson(m) for m in table.minus],
            "plus": [_cjson(p) for p in table.plus],
        }
        _write_text(args, json.dumps(doc, indent=2) + "\n")
        return 0
    header = ["omega"]
    for name in ("minus", "plus"):
        for i in range(n):
            for j in range(n):
                header.append(f"re_{name}_{i}_{j}")
                header.append(f"im_{name}_{i}_{j}")
    rows = [",".join(header)]
    for k, w in enumerate(table.frequencies):
        cells = [_fmt(w)]
        for block in (table.minus[k], table.plus[k]):
            for i in range(n):
                for j in range(n):
                    cells.append(_fmt(block[i, j].real))
                    cells.append(_fmt(block[i, j].imag))
        rows.append(",".join(cells))
    _write_text(args, "\n".join(rows) + "\n")
    return 0


# ---------------------------------------------------------------------------
# generator


def _build_from_config(cfg: RunConfig):
    """Generator for a config: per-site reservoirs for the spin shorthand,
    one shared reservoir for an explicit system."""
    bath = cfg.require_bath()
    if cfg.spin is not None:
        return quantum_glauber_generator(cfg.spin, bath)
    spec, couplings = cfg.system()
    bohr = bohr_frequencies(spec)
    table = correlation_table(bath, bohr, n_couplings=max(1, len(couplings)))
    return build_generator(spec, couplings, table, bohr)


def cmd_generator(args) -> int:
    cfg = _require_config(args)
    gen = _build_from_config(cfg)
    doc = {
        "dim": gen.dim,
        "energies": [float(e) for e in gen.spec.energies],
        "h_shift": _cjson(gen.h_shift),
        "channels": [
            {
                "omega": float(ch.omega),
                "gamma_minus": _cjson(ch.gamma_minus),
                "gamma_plus": _cjson(ch.gamma_plus),
                "lowering": [_cjson(a) for a in ch.lowering],
            }
            for ch in gen.channels
        ],
    }
    _write_text(args, json.dumps(doc, indent=2) + "\n")
    if args.dense:
        dense = gen.dense_adjoint
        side = dense.shape[0]
        with open(args.dense, "wb") as fh:
            fh.write(struct.pack("<Q", side))
            fh.write(np.ascontiguousarray(dense).astype("<c16").tobytes())
    return 0


# ---------------------------------------------------------------------------
# evolve


def _initial_state(cfg: RunConfig, args, spec) -> np.ndarray:
    choice = args.initial or cfg.run.get("initial", "mixed")
    d = spec.dim
    if isinstance(choice, str) and choice.lstrip("-").isdigit():
        choice = int(choice)
    if choice == "mixed":
        return np.eye(d, dtype=complex) / d
    if choice == "gibbs":
        return gibbs_state(cfg.require_bath().beta, spec)
    if isinstance(choice, int):
        if not 0 <= choice < d:
            raise ConfigError(f"initial basis state {choice} outside 0..{d - 1}")
        rho = np.zeros((d, d), dtype=complex)
        rho[choice, choice] = 1.0
        return rho
    raise ConfigError(
        f"initial: expected 'mixed', 'gibbs' or a basis index, got {choice!r}"
    )


def _times(args, cfg: RunConfig | None) -> np.ndarray:
    run = cfg.run if cfg is not None else {}
    t_max = args.t_max if args.t_max is not None else run.get("t_max", 10.0)
    points = args.points if args.points is not None else run.get("points", 100)
    t_max = float(t_max)
    points = int(points)
    if t_max <= 0 or points < 2:
        raise ConfigError("need t_max > 0 and at least 2 points")
    return np.linspace(0.0, t_max, points)


def cmd_evolve(args) -> int:
    cfg = _require_config(args)
    gen = _build_from_config(cfg)
    spec = gen.spec
    rho0 = _initial_state(cfg, args, spec)
    times = _times(args, cfg)
    traj = evolve(gen, rho0, times)
    d = spec.dim
    header = ["t"]
    for mu in range(d):
        for nu in range(d):
            header.append(f"re_{mu}_{nu}")
            header.append(f"im_{mu}_{nu}")
    rows = [",".join(header)]
    basis = spec.basis
    for t, rho in zip(traj.times, traj.states):
        eig = dag(basis) @ rho @ basis  # eigenbasis, energy-ordered
        cells = [_fmt(t)]
        for mu in range(d):
            for nu in range(d):
                cells.append(_fmt(eig[mu, nu].real))
                cells.append(_fmt(eig[mu, nu].imag))
        rows.append(",".join(cells))
    _write_text(args, "\n".join(rows) + "\n")
    return 0


# ---------------------------------------------------------------------------
# glauber


def _glauber_setup(args) -> tuple[SpinChainSpec, BathSpec]:
    cfg = _load(args)
    if args.sites is not None:
        coupling = args.coupling if args.coupling is not None else 1.0
        cs = SpinChainSpec(
            n_sites=args.sites, coupling=coupling, boundary=args.boundary
        )
    elif cfg is not None and cfg.spin is not None:
        cs = cfg.spin
    else:
        raise ConfigError("glauber needs --sites or a config with a spin block")
    if cfg is not None and cfg.bath is not None:
        bath = cfg.bath
        if args.beta is not None:
            bath = dataclasses.replace(bath, beta=args.beta)
    elif args.beta is not None:
        bath = BathSpec(beta=args.beta, dos=args.dos or "paper")
    else:
        raise ConfigError("glauber needs --beta or a config with a bath block")
    return cs, bath


def cmd_glauber(args) -> int:
    cs, bath = _glauber_setup(args)
    if args.observable not in ("magnetization", "energy"):
        raise ConfigError(f"unknown observable {args.observable!r}")
    times = _times(args, None)
    mags = configuration_magnetizations(cs)
    energies = configuration_energies(cs)
    idx = args.initial_configuration
    if not 0 <= idx < cs.dim:
        raise ConfigError(
            f"initial configuration {idx} outside 0..{cs.dim - 1}"
        )
    rows = []
    if args.mode == "classical":
        cks = classical_glauber_generator(cs, bath)
        p0 = np.zeros(cks.size)
        p0[idx] = 1.0
        dist = cks.evolve(p0, times)
        rows.append("t,magnetization,energy")
        for t, p in zip(times, dist):
            rows.append(
                ",".join(
                    (_fmt(t), _fmt(mags @ p), _fmt(energies @ p))
                )
            )
    else:
        gen = quantum_glauber_generator(cs, bath)
        rho0 = np.zeros((cs.dim, cs.dim), dtype=complex)
        rho0[idx, idx] = 1.0
        traj = evolve(gen, rho0, times)
        rows.append("t,magnetization,energy,offdiag_l1")
        for t, rho in zip(traj.times, traj.states):
            pops = np.real(np.diag(rho))
            l1 = float(np.abs(rho).sum() - np.abs(np.diag(rho)).sum())
            rows.append(
                ",".join(
                    (_fmt(t), _fmt(mags @ pops), _fmt(energies @ pops), _fmt(l1))
                )
            )
    _write_text(args, "\n".join(rows) + "\n")
    return 0


# ---------------------------------------------------------------------------
# check suites


def _default_spin_config(beta: float = 1.0) -> tuple[SpinChainSpec, BathSpec]:
    return (
        SpinChainSpec(n_sites=4, coupling=1.0, boundary="periodic"),
        BathSpec(beta=beta),
    )


def _suite_detailed_balance(cfg: RunConfig | None, args) -> tuple[bool, dict]:
    if cfg is not None and cfg.spin is not None:
        cs = cfg.spin
        bath = cfg.require_bath()
        cks = classical_glauber_generator(cs, bath)
    elif cfg is not None:
        bath = cfg.require_bath()
        gen = _build_from_config(cfg)
        cks = diagonal_restriction(gen)
    else:
        cs, bath = _default_spin_config()
        cks = classical_glauber_generator(cs, bath)
    if bath.beta == math.inf:
        raise ConfigError("detailed balance needs a finite temperature")
    k = np.asarray(
        cks.rate_matrix.toarray() if cks.is_sparse() else cks.rate_matrix,
        dtype=float,
    ).copy()
    injected = None
    if args.corrupt_rate:
        try:
            a_s, b_s, f_s = args.corrupt_rate.split(",")
            a, b, factor = int(a_s), int(b_s), float(f_s)
        except ValueError as exc:
            raise ConfigError(
                f"--corrupt-rate wants 'from,to,factor', got {args.corrupt_rate!r}"
            ) from exc
        k[b, a] *= factor
        k[np.diag_indices(len(k))] = 0.0
        k[np.diag_indices(len(k))] = -k.sum(axis=0)
        injected = [a, b, factor]
    cks = ClassicalKineticSystem(
        labels=cks.labels, energies=cks.energies, rate_matrix=k
    )
    p = gibbs_distribution(bath.beta, cks.energies)
    residual = detailed_balance_residual(cks, p)
    flow = k * p[np.newaxis, :]
    np.fill_diagonal(flow, 0.0)
    gap = np.abs(flow - flow.T)
    b_worst, a_worst = np.unravel_index(int(np.argmax(gap)), gap.shape)
    passed = residual <= 1e-10
    report = {
        "residual": residual,
        "threshold": 1e-10,
        "worst_pair": [int(a_worst), int(b_worst)],
    }
    if injected:
        report["injected_fault"] = injected
    return passed, report


def _leibniz_system(cfg: RunConfig | None):
    if cfg is not None:
        return _build_from_config(cfg)
    h = np.diag([0.0, 1.0]).astype(complex)
    d = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    spec = spectral_decompose(h)
    bohr = bohr_frequencies(spec)
    table = correlation_table(BathSpec(beta=1.0), bohr, n_couplings=1)
    return build_generator(spec, [d], table, bohr)


def _suite_leibniz(cfg: RunConfig | None, args) -> tuple[bool, dict]:
    gen = _leibniz_system(cfg)
    maps = StructureMapSet(gen)
    rng = np.random.default_rng(416)
    d = gen.dim
    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        y = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        x = 0.5 * (x + dag(x)) / np.linalg.norm(x)
        y = 0.5 * (y + dag(y)) / np.linalg.norm(y)
        worst = max(worst, leibniz_defect(maps, x, y))
    return worst <= 1e-10, {"max_defect": worst, "threshold": 1e-10, "trials": 20}


def _suite_positivity(cfg: RunConfig | None, args) -> tuple[bool, dict]:
    if cfg is not None:
        gen = _build_from_config(cfg)
    else:
        cs, bath = _default_spin_config()
        gen = quantum_glauber_generator(cs, bath)
    rng = np.random.default_rng(2617)
    d = gen.dim
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho0 = a @ dag(a)
    rho0 /= np.real(np.trace(rho0))
    scale = gen.norm_scale()
    times = np.linspace(0.0, 5.0 / scale, 21)
    traj = evolve(gen, rho0, times)
    lo = min(
        float(np.linalg.eigvalsh(0.5 * (r + dag(r))).min()) for r in traj.states
    )
    return lo >= -1e-10, {"min_eigenvalue": lo, "floor": -1e-10}


def _suite_scaling(cfg: RunConfig | None, args) -> tuple[bool, dict]:
    bath = cfg.require_bath() if cfg is not None else BathSpec(beta=1.0)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else [2, 3, 4, 5, 6]
    result = n_scaling_experiment(sizes, bath, threads=args.threads)
    passed = result.r_squared >= 0.999
    return passed, {
        "sizes": list(result.sizes),
        "measured": [float(v) for v in result.measured],
        "closed_form": [float(v) for v in result.closed_form],
        "slope": result.slope,
        "intercept": result.intercept,
        "r_squared": result.r_squared,
    }


def _suite_coherence_control(cfg: RunConfig | None, args) -> tuple[bool, dict]:
    # two nearly degenerate levels far below a third; the pass band admits
    # only the intra-group frequency, and switching off spontaneous decay
    # silences every channel out of the upper group
    h = np.diag([0.0, 0.7, 5.0]).astype(complex)
    d_op = np.ones((3, 3), dtype=complex) - np.eye(3)
    beta = 1.0
    spec = spectral_decompose(h)
    bohr = bohr_frequencies(spec)
    filtered = BathSpec(
        beta=beta, filter_max=2.0, spontaneous_emission=False
    )
    gen_f = build_generator(
        spec, [d_op], correlation_table(filtered, bohr, 1), bohr
    )
    intra = diagonal_restriction(gen_f).rate_matrix
    intra_rate = float(-np.diag(intra).min())
    horizon = 100.0 / intra_rate
    rho0 = np.diag([0.3, 0.1, 0.6]).astype(complex)
    traj = evolve(gen_f, rho0, np.linspace(0.0, horizon, 11))
    pops = traj.populations()
    transfer = float(np.abs(pops[:, 2] - pops[0, 2]).max())
    # without the spontaneous term the active channel carries weight N both
    # ways, so the lower pair settles on the flat distribution
    moved = float(abs(pops[1, 0] - pops[0, 0]))
    settle = float(abs(pops[-1, 0] - pops[-1, 1]))
    thermalized = moved > 1e-3 and settle <= 1e-10
    open_bath = BathSpec(beta=beta)
    gen_o = build_generator(
        spec, [d_op], correlation_table(open_bath, bohr, 1), bohr
    )
    krest = np.asarray(diagonal_restriction(gen_o).rate_matrix)
    expected = emission_rate(open_bath, 5.0) + emission_rate(open_bath, 4.3)
    outflow = float(-krest[2, 2])
    resumed = abs(outflow - expected) <= 1e-8 * expected
    passed = transfer <= 1e-10 and thermalized and resumed
    return passed, {
        "transfer": transfer,
        "transfer_bound": 1e-10,
        "intra_moved": moved,
        "intra_settle": settle,
        "unfiltered_outflow": outflow,
        "unfiltered_expected": expected,
    }


_SUITES = {
    "detailed-balance": _suite_detailed_balance,
    "leibniz": _suite_leibniz,
    "positivity": _suite_positivity,
    "scaling": _suite_scaling,
    "coherence-control": _suite_coherence_control,
}


def cmd_check(args) -> int:
    if args.suite not in _SUITES:
        raise ConfigError(
            f"unknown suite {args.suite!r}; choose from {', '.join(CHECK_SUITES)}"
        )
    cfg = _load(args)
    passed, report = _SUITES[args.suite](cfg, args)
    doc = {"suite": args.suite, "passed": bool(passed)}
    doc.update(report)
    _write_text(args, json.dumps(doc, indent=2) + "\n")
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# wiring


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--json", action="store_true", help="JSON output")
    common.add_argument(
        "--dos",
        choices=("paper", "physical"),
        help="override the mode-density convention",
    )
    common.add_argument("--threads", type=int, help="parallel workers for sweeps")

    parser = argparse.ArgumentParser(
        prog="stoclim",
        description="Stochastic-limit dynamics of small open quantum systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="levels and frequencies")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("rates", parents=[common], help="reservoir constant table")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("generator", parents=[common], help="export the generator")
    p.add_argument("--dense", help="also write the dense form to this binary file")
    p.set_defaults(func=cmd_generator)

    p = sub.add_parser("evolve", parents=[common], help="integrate a trajectory")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--points", type=int)
    p.add_argument("--initial", help="'mixed', 'gibbs', or a basis index")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("glauber", parents=[common], help="spin-chain kinetics")
    p.add_argument("--sites", type=int)
    p.add_argument("--coupling", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--boundary", choices=("open", "periodic"), default="open")
    p.add_argument("--mode", choices=("classical", "quantum"), default="classical")
    p.add_argument(
        "--observable",
        default="magnetization",
        help="headline observable (magnetization or energy)",
    )
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--points", type=int)
    p.add_argument(
        "--initial-configuration",
        type=int,
        default=0,
        help="starting configuration index (0 = all spins up)",
    )
    p.set_defaults(func=cmd_glauber)

    p = sub.add_parser("check", parents=[common], help="run an invariant suite")
    p.add_argument("--suite", required=True, choices=CHECK_SUITES)
    p.add_argument(
        "--corrupt-rate",
        help="fault fixture for detailed-balance: 'from,to,factor'",
    )
    p.add_argument("--sizes", help="comma-separated ring sizes for scaling")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BathConfigurationError, BathDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
