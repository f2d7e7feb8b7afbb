"""Command-line front end: build, sweep, verify, dispersion.

Each command loads a strict JSON config, runs the requested suite and
emits machine-readable output (CSV tables, JSON reports).  Identical
configs produce byte-identical outputs on one platform; floats in CSV
are serialized at 17 significant digits.  The verify command exits
nonzero when any check fails.
"""

from __future__ import annotations

import json
import math
import os
import sys
from contextlib import nullcontext

import click

from .config import ConfigError, RunConfig, load_config

SQRT2 = math.sqrt(2.0)


def _load(config_path: str, tol_overrides) -> RunConfig:
    cfg = load_config(config_path)
    overrides = {}
    for item in tol_overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects KEY=VALUE, got '{item}'")
        try:
            overrides[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--tol value for '{key}' is not a number") from exc
    return cfg.with_tolerance_overrides(overrides) if overrides else cfg


def _thread_scope(threads: int | None):
    if threads is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _emit(path: str | None, text: str) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        _write_atomic(path, text)


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _build_model(cfg: RunConfig):
    from .fock import build_mode_grid, enumerate_basis

    m = cfg.model
    grid = build_mode_grid(
        alpha=m.alpha,
        lambda_max=m.lambda_max,
        n_shells=m.n_shells,
        n_dirs=m.n_dirs,
        r_min=m.r_min,
    )
    basis = enumerate_basis(grid.n_modes, m.n_max)
    return grid, basis


def _flip_interaction(op):
    import scipy.sparse as sp

    from .fock import SparseOperator

    diag = sp.diags(op.matrix.diagonal())
    flipped = (2.0 * diag - op.matrix).tocsr()
    flipped.sum_duplicates()
    return SparseOperator(flipped, symmetric=True)


def _hamiltonian(cfg: RunConfig, grid, basis, P, cutoff):
    from .polaron import assemble_hamiltonian

    h = assemble_hamiltonian(grid, basis, P, cutoff)
    return h if cfg.model.coupling_sign == 1 else _flip_interaction(h)


def _local_hamiltonian(cfg: RunConfig, grid, basis, P, cutoff):
    from .polaron import assemble_local_hamiltonian

    k = assemble_local_hamiltonian(grid, basis, P, cutoff)
    return k if cfg.model.coupling_sign == 1 else _flip_interaction(k)


def _common_options(fn):
    fn = click.option(
        "--tol",
        "tol_overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a named tolerance (repeatable).",
    )(fn)
    fn = click.option("--threads", type=int, default=None, help="Cap linear-algebra threads.")(fn)
    fn = click.option(
        "--format",
        "fmt",
        type=click.Choice(["json", "csv"]),
        default=None,
        help="Override the output format from the config.",
    )(fn)
    fn = click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)(fn)
    fn = click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(exists=True, dir_okay=False),
    )(fn)
    return fn


@click.group()
def main():
    """Truncated Fock-space polaron diagnostics."""


# ---------------------------------------------------------------------------
# build


@main.command()
@_common_options
def build(config_path, out_path, fmt, threads, tol_overrides):
    """Build the model and report its dimensions and coupling norms."""
    try:
        cfg = _load(config_path, tol_overrides)
        with _thread_scope(threads):
            import numpy as np

            grid, basis = _build_model(cfg)
            summary = {
                "dimension": basis.dim,
                "mode_count": grid.n_modes,
                "n_max": basis.n_max,
                "shell_radii": [float(r) for r in grid.shell_radii()],
                "coupling_norm_l2": float(np.linalg.norm(grid.g)),
                "coupling_max": float(np.max(grid.g)) if grid.n_modes else 0.0,
            }
        _emit(out_path or cfg.outputs.report_path, _json_text(summary))
    except (ConfigError, ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc)) from exc


# ---------------------------------------------------------------------------
# sweep


def _sweep_csv(table) -> str:
    lines = ["lambda,cutoff_index,energy,gap,strict_decrease"]
    for row in table.rows:
        lines.append(
            ",".join(
                [
                    _fmt(row.cutoff),
                    str(row.cutoff_index),
                    _fmt(row.energy),
                    _fmt(row.gap),
                    _fmt_bool(row.strict_decrease),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _sweep_json(table) -> str:
    rows = [
        {
            "lambda": row.cutoff,
            "cutoff_index": row.cutoff_index,
            "energy": row.energy,
            "gap": row.gap,
            "strict_decrease": row.strict_decrease,
        }
        for row in table.rows
    ]
    return _json_text({"rows": rows})


@main.command()
@_common_options
def sweep(config_path, out_path, fmt, threads, tol_overrides):
    """Ground energy versus ultraviolet cutoff."""
    try:
        cfg = _load(config_path, tol_overrides)
        with _thread_scope(threads):
            from .spectral import cutoff_sweep

            grid, basis = _build_model(cfg)
            if cfg.model.coupling_sign == -1:
                raise ConfigError("sweep does not support the flipped coupling sign")
            table = cutoff_sweep(
                grid,
                basis,
                cfg.run.P,
                cfg.run.lambdas,
                solve_tol=cfg.tolerance("solve"),
                strictness_tol=cfg.tolerance("energy_strictness"),
            )
        chosen = fmt or cfg.outputs.format
        text = _sweep_csv(table) if chosen == "csv" else _sweep_json(table)
        _emit(out_path or cfg.outputs.table_path, text)
    except (ConfigError, ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc)) from exc


# ---------------------------------------------------------------------------
# dispersion


def _dispersion_csv(table) -> str:
    lines = ["Px,Py,Pz,energy,gap,min_at_zero_ok"]
    for row in table.rows:
        lines.append(
            ",".join(
                [
                    _fmt(row.P[0]),
                    _fmt(row.P[1]),
                    _fmt(row.P[2]),
                    _fmt(row.energy),
                    _fmt(row.gap),
                    _fmt_bool(row.min_at_zero_ok),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _dispersion_json(table) -> str:
    rows = []
    for row in table.rows:
        p_norm = math.sqrt(float(row.P @ row.P))
        rows.append(
            {
                "P": [float(v) for v in row.P],
                "energy": row.energy,
                "gap": row.gap,
                "min_at_zero_ok": row.min_at_zero_ok,
                "p_norm": p_norm,
                # annotation only: ground states of the untruncated model are
                # guaranteed in this regime, nothing is asserted here
                "within_sqrt2_regime": p_norm < SQRT2,
            }
        )
    return _json_text({"energy_at_zero": table.energy_at_zero, "rows": rows})


@main.command()
@_common_options
def dispersion(config_path, out_path, fmt, threads, tol_overrides):
    """Ground energy versus total momentum at the outermost cutoff."""
    try:
        cfg = _load(config_path, tol_overrides)
        with _thread_scope(threads):
            from .spectral import dispersion as run_dispersion

            grid, basis = _build_model(cfg)
            if cfg.model.coupling_sign == -1:
                raise ConfigError("dispersion does not support the flipped coupling sign")
            momenta = cfg.run.P_list or (cfg.run.P,)
            table = run_dispersion(
                grid,
                basis,
                cfg.run.lambdas[-1],
                momenta,
                solve_tol=cfg.tolerance("solve"),
                min_tol=cfg.tolerance("dispersion"),
            )
        chosen = fmt or cfg.outputs.format
        text = _dispersion_csv(table) if chosen == "csv" else _dispersion_json(table)
        _emit(out_path or cfg.outputs.table_path, text)
    except (ConfigError, ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc)) from exc


# ---------------------------------------------------------------------------
# verify


def _run_verify(cfg: RunConfig) -> dict:
    import numpy as np

    from .polaron import lieb_yamazaki_bound
    from .spectral import (
        DECOUPLED_G,
        EigenSystem,
        convergence_diagnostic,
        local_identity_check,
        pf_faris_check,
        order_equivalence_check,
    )
    from . import cone

    grid, basis = _build_model(cfg)
    lambdas = list(cfg.run.lambdas)
    t_list = list(cfg.run.t_list)
    momentum = cfg.run.P

    hams = {lam: _hamiltonian(cfg, grid, basis, momentum, lam) for lam in lambdas}
    eigs = {lam: EigenSystem.compute(h) for lam, h in hams.items()}

    energies = {lam: float(eigs[lam].w[0]) for lam in lambdas}
    if cfg.run.mu_policy == "auto":
        mu = 1.0 + max(0.0, -min(energies.values()))
    else:
        mu = float(cfg.run.mu_policy)

    checks: list[dict] = []

    def add(check_id: str, claim: str, verdict: bool, margin, details: dict):
        checks.append(
            {
                "check_id": check_id,
                "claim": claim,
                "verdict": bool(verdict),
                "margin": None if margin is None else float(margin),
                "details": details,
            }
        )

    # 1. ground energy decreases monotonically in the cutoff
    strictness = cfg.tolerance("energy_strictness")
    drops = []
    verdict = True
    for low, high in zip(lambdas, lambdas[1:]):
        drop = energies[low] - energies[high]
        drops.append(drop)
        if drop < -strictness:
            verdict = False
        added = grid.g[grid.prefix_count(low) : grid.prefix_count(high)]
        if added.size and float(np.max(added)) > DECOUPLED_G and drop <= strictness:
            verdict = False
    add(
        "energy_cutoff_monotonicity",
        "ground energy is nonincreasing in the cutoff and strictly decreasing "
        "whenever the added shells carry coupling",
        verdict,
        min(drops) if drops else 0.0,
        {"energies": [energies[lam] for lam in lambdas], "drops": drops},
    )

    # 2. heat semigroup has nonnegative entries
    semis = {(lam, t): eigs[lam].expm(t) for lam in lambdas for t in t_list}
    reports = {key: cone.positivity_preserving(mat, tol=cfg.tolerance("positivity"))
               for key, mat in semis.items()}
    add(
        "semigroup_positivity_preserving",
        "every heat-semigroup entry is nonnegative at all cutoffs and times",
        all(rep.holds for rep in reports.values()),
        min(rep.margin for rep in reports.values()),
        {f"lambda={lam},t={t}": rep.margin for (lam, t), rep in reports.items()},
    )

    # 3. growing the cutoff lowers the Hamiltonian entrywise
    pair_reports = []
    for low, high in zip(lambdas, lambdas[1:]):
        pair_reports.append(
            cone.op_order_geq(hams[low], hams[high], tol=cfg.tolerance("order"))
        )
    add(
        "interaction_monotonicity",
        "the Hamiltonian decreases entrywise as the cutoff grows",
        all(rep.holds for rep in pair_reports) if pair_reports else True,
        min((rep.margin for rep in pair_reports), default=0.0),
        {"pair_margins": [rep.margin for rep in pair_reports]},
    )

    # 4. order statement implies reversed resolvent and semigroup orders;
    # a positivity-hypothesis violation fails the check instead of aborting
    def run_order_equivalences():
        equiv_details = []
        equiv_ok = True
        equiv_margin = math.inf
        for low, high in zip(lambdas, lambdas[1:]):
            report = order_equivalence_check(
                hams[low],
                hams[high],
                mu,
                t_list,
                order_tol=cfg.tolerance("order"),
                resolvent_tol=cfg.tolerance("resolvent_order"),
                semigroup_tol=cfg.tolerance("semigroup_order"),
                positivity_tol=cfg.tolerance("positivity"),
                eig_upper=eigs[low],
                eig_lower=eigs[high],
            )
            ok = (
                report.consistent
                and report.hamiltonian.holds
                and report.resolvent.holds
                and all(rep.holds for _, rep in report.semigroup)
            )
            equiv_ok = equiv_ok and ok
            margins = [report.hamiltonian.margin, report.resolvent.margin] + [
                rep.margin for _, rep in report.semigroup
            ]
            equiv_margin = min(equiv_margin, *margins)
            equiv_details.append(
                {
                    "pair": [low, high],
                    "hamiltonian_margin": report.hamiltonian.margin,
                    "resolvent_margin": report.resolvent.margin,
                    "semigroup_margins": {
                        str(t): rep.margin for t, rep in report.semigroup
                    },
                }
            )
        return (
            equiv_ok,
            0.0 if math.isinf(equiv_margin) else equiv_margin,
            {"pairs": equiv_details},
        )

    def run_faris():
        faris = pf_faris_check(
            hams[lambdas[-1]],
            mu,
            [max(t_list)],
            strict_tol=cfg.tolerance("strict_positivity"),
            preserve_tol=cfg.tolerance("positivity"),
            gap_tol=cfg.tolerance("gap"),
            eig=eigs[lambdas[-1]],
        )
        verdict = (
            faris.consistent
            and faris.ground_simple_positive
            and faris.semigroup_improving
        )
        details = {
            "gap": faris.gap,
            "ground_min_entry": faris.ground_min_entry,
            "verdicts": {
                "ground_simple_positive": faris.ground_simple_positive,
                "resolvent_improving_once": faris.resolvent_improving_once,
                "connectivity": faris.connectivity,
                "resolvent_improving_all": faris.resolvent_improving_all,
                "semigroup_improving": faris.semigroup_improving,
            },
            "margins": faris.margins,
        }
        return verdict, min(faris.margins.values()), details

    def guarded(check_id, claim, runner):
        try:
            verdict, margin, details = runner()
        except ValueError as exc:
            verdict, margin, details = False, None, {"hypothesis_failure": str(exc)}
        add(check_id, claim, verdict, margin, details)

    guarded(
        "order_equivalences",
        "cutoff order reverses for resolvents and semigroups on every pair",
        run_order_equivalences,
    )
    guarded(
        "perron_frobenius_equivalences",
        "the five positivity-improving conditions agree and hold: open gap, "
        "strictly positive ground vector, improving resolvents and semigroup",
        run_faris,
    )

    # 6. cutoff-uniform lower bound from splitting the interaction
    candidates = [float(r) for r in grid.shell_radii()] + [grid.lambda_max + 1.0]
    bound = None
    for split in candidates:
        probe = lieb_yamazaki_bound(grid, grid.alpha, split)
        if probe.valid:
            bound = probe
            break
    min_energy = min(energies.values())
    slack = cfg.tolerance("lower_bound")
    add(
        "uniform_lower_bound",
        "every swept ground energy sits above the interaction-splitting bound",
        bound is not None and min_energy >= bound.lower_bound - slack,
        min_energy - (bound.lower_bound if bound else math.inf),
        {
            "valid": bound.valid if bound else False,
            "split_radius": bound.split_radius if bound else None,
            "lower_bound": bound.lower_bound if bound else None,
            "condition_value": bound.condition_value if bound else None,
            "min_energy": min_energy,
        },
    )

    # 7/8. projected resolvent identity and local ergodicity
    local_cut = lambdas[1] if len(lambdas) > 1 else lambdas[0]
    local = local_identity_check(
        grid,
        basis,
        momentum,
        local_cut,
        mu,
        t=max(t_list),
        h=hams[local_cut] if local_cut in hams else _hamiltonian(cfg, grid, basis, momentum, local_cut),
        k=_local_hamiltonian(cfg, grid, basis, momentum, local_cut),
    )
    add(
        "local_resolvent_identity",
        "projected resolvents of the full and local Hamiltonians agree",
        local.resolvent_deviation < cfg.tolerance("local_identity"),
        local.resolvent_deviation,
        {"cutoff": local_cut, "block_dim": local.block_dim},
    )
    inside_g = grid.g[: grid.prefix_count(local_cut)]
    add(
        "local_ergodicity",
        "the local semigroup is entrywise positive on the projected block",
        local.local_semigroup_min > cfg.tolerance("strict_positivity"),
        local.local_semigroup_min,
        {"cutoff": local_cut, "min_inside_coupling": float(np.min(inside_g)) if inside_g.size else 0.0},
    )

    # 9. quadratic form bounds for the configured couplings
    from .polaron import form_bound_margins

    crea, vhove = form_bound_margins(basis, np.ones(grid.n_modes), grid.g)
    fb_tol = cfg.tolerance("form_bound")
    add(
        "form_bounds",
        "number-operator form bounds dominate the interaction",
        crea >= -fb_tol and vhove >= -fb_tol,
        min(crea, vhove),
        {"margin_crea": crea, "margin_vhove": vhove},
    )

    # 10. monotone semigroup entries and finite resolvent tails
    conv_rows = convergence_diagnostic(
        grid,
        basis,
        momentum,
        lambdas,
        mu,
        t=max(t_list),
        eigensystems=eigs,
        hamiltonians=hams,
    )
    conv_ok = all(
        row.semigroup_margin >= -cfg.tolerance("semigroup_order")
        and all(math.isfinite(d) for d in row.resolvent_probe_diffs)
        for row in conv_rows
    )
    add(
        "convergence_diagnostics",
        "semigroup entries grow with the cutoff and resolvent tails stay finite",
        conv_ok,
        min((row.semigroup_margin for row in conv_rows), default=0.0),
        {
            "rows": [
                {
                    "pair": [row.cutoff_low, row.cutoff_high],
                    "resolvent_probe_diffs": list(row.resolvent_probe_diffs),
                    "semigroup_margin": row.semigroup_margin,
                    "added_coupling_sq": row.added_coupling_sq,
                }
                for row in conv_rows
            ]
        },
    )

    # 11. semigroup law
    eig_full = eigs[lambdas[-1]]
    s, t = min(t_list), max(t_list)
    law = float(
        np.max(np.abs(eig_full.expm(s) @ eig_full.expm(t) - eig_full.expm(s + t)))
    )
    add(
        "semigroup_law",
        "the semigroup satisfies T_s T_t = T_(s+t)",
        law < cfg.tolerance("semigroup_law"),
        law,
        {"s": s, "t": t},
    )

    all_passed = all(entry["verdict"] for entry in checks)
    return {
        "model": {
            "dimension": basis.dim,
            "mode_count": grid.n_modes,
            "lambdas": lambdas,
            "P": list(momentum),
            "mu": mu,
            "coupling_sign": cfg.model.coupling_sign,
        },
        "checks": checks,
        "summary": {
            "all_passed": all_passed,
            "n_checks": len(checks),
            "n_failed": sum(not entry["verdict"] for entry in checks),
        },
    }


@main.command()
@_common_options
def verify(config_path, out_path, fmt, threads, tol_overrides):
    """Run the structural check suite; exit nonzero when any check fails."""
    try:
        cfg = _load(config_path, tol_overrides)
        with _thread_scope(threads):
            report = _run_verify(cfg)
        _emit(out_path or cfg.outputs.report_path, _json_text(report))
    except (ConfigError, ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc)) from exc
    if not report["summary"]["all_passed"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
