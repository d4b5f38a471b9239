"""Result emission: delimited data files, a JSON summary, and figures.

Every solve writes, under one output directory,

  trajectory.csv   n, x, y, speed          (speed blank on the start row)
  allocation.csv   per-(slot, ue) bit schedules and bandwidth shares
  energy.csv       per-(slot, ue) energy components; the propulsion column
                   is carried on the first UE's rows so the grand total of
                   all numeric cells equals the reported total
  convergence.csv  outer iteration vs total energy
  summary.json     totals, iterations, residuals, scenario echo

plus rendered figures (trajectory.png, convergence.png, energy.png) next
to the data.  Floats are written with shortest round-trip formatting so
re-parsing reproduces them bit-exactly.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .config import config_echo
from .model import (BandwidthAllocation, ScenarioConfig, TaskAllocation,
                    Trajectory, total_energy)


def _fmt(v) -> str:
    return repr(float(v))


def write_solution_files(outdir, cfg: ScenarioConfig, solution, scheme="proposed",
                         metadata=None, figures=True):
    os.makedirs(outdir, exist_ok=True)
    tasks, bw, traj = solution.tasks, solution.bandwidth, solution.trajectory
    report = solution.report
    n = cfg.n_slots
    grid = cfg.grid()
    speeds = traj.speeds(grid)

    with open(os.path.join(outdir, "trajectory.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "x", "y", "speed"])
        for i in range(n + 1):
            w.writerow([i, _fmt(traj.points[i, 0]), _fmt(traj.points[i, 1]),
                        _fmt(speeds[i]) if i > 0 else ""])

    with open(os.path.join(outdir, "allocation.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "ue", "l_local", "l_offload", "l_uav_compute",
                    "l_uav_forward", "b_offload", "b_forward"])
        for slot in range(1, n + 1):
            for k in range(cfg.num_ues):
                w.writerow([slot, k + 1,
                            _fmt(tasks.l_local[k, slot]),
                            _fmt(tasks.l_offload[k, slot]),
                            _fmt(tasks.l_uav[k, slot]),
                            _fmt(tasks.l_forward[k, slot]),
                            _fmt(bw.b_offload[k, slot]),
                            _fmt(bw.b_forward[k, slot])])

    breakdown = report.final_breakdown or total_energy(tasks, bw, traj, cfg)
    with open(os.path.join(outdir, "energy.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "ue", "e_local", "e_ue_offload", "e_uav_compute",
                    "e_uav_forward", "e_fly"])
        for slot in range(1, n + 1):
            for k in range(cfg.num_ues):
                w.writerow([slot, k + 1,
                            _fmt(breakdown.e_local[k, slot]),
                            _fmt(breakdown.e_offload[k, slot]),
                            _fmt(breakdown.e_uav_compute[k, slot]),
                            _fmt(breakdown.e_forward[k, slot]),
                            _fmt(breakdown.e_fly[slot]) if k == 0 else _fmt(0.0)])

    with open(os.path.join(outdir, "convergence.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "tec"])
        for i, tec in enumerate(report.tec_trace):
            w.writerow([i, _fmt(tec)])

    summary = {
        "scheme": scheme,
        "tec_joules": report.tec_trace[-1],
        "component_totals_joules": breakdown.component_totals(),
        "outer_iterations": report.outer_iterations,
        "converged": report.converged,
        "residuals": _residuals(report),
        "metadata": metadata or {},
        "config": config_echo(cfg),
    }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if figures:
        render_solution_figures(outdir, cfg, solution)
    return summary


def _residuals(report):
    out = {}
    tr = getattr(report, "task_report", None)
    if tr is not None:
        out["task_max_causality_violation_bits"] = tr.max_causality_violation
        out["task_duality_gap_joules"] = tr.duality_gap_estimate
        out["task_comp_slack_normalized"] = tr.comp_slack_max
        out["task_stationarity_normalized"] = tr.stationarity_max
        out["task_equality_residual_bits"] = float(
            np.max(np.abs(tr.task_equality_residual)))
        out["relay_equality_residual_bits"] = float(
            np.max(np.abs(tr.relay_equality_residual)))
    br = getattr(report, "bandwidth_report", None)
    if br is not None:
        out["bandwidth_split_residual_relative"] = br.max_split_residual
        out["bandwidth_stationarity_relative"] = br.max_stationarity_residual
    return out


def render_solution_figures(outdir, cfg: ScenarioConfig, solution):
    """Trajectory, convergence, and energy figures next to the CSVs."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    traj = solution.trajectory
    report = solution.report

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(traj.points[:, 0], traj.points[:, 1], "-o", markersize=2.5,
            color="tab:blue", label="UAV path")
    ax.plot(*cfg.uav_start, "s", color="tab:green", label="start")
    ax.plot(*cfg.uav_end, "s", color="tab:red", label="end")
    ax.plot(*cfg.ap_pos, "^", color="black", markersize=10, label="AP")
    for k, ue in enumerate(cfg.ues):
        ax.plot(*ue.pos, "*", markersize=12, color="tab:orange")
        ax.annotate(f"UE{k + 1}", ue.pos, textcoords="offset points",
                    xytext=(6, 6), fontsize=9)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "trajectory.png"), dpi=130)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(report.tec_trace)), report.tec_trace, "-o", markersize=3)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("total energy (J)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "convergence.png"), dpi=130)
    plt.close(fig)

    breakdown = report.final_breakdown
    if breakdown is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        totals = breakdown.component_totals()
        ax.bar(list(totals.keys()), list(totals.values()), color="tab:blue")
        ax.set_ylabel("energy (J)")
        ax.set_yscale("log") if max(totals.values()) > 0 else None
        ax.tick_params(axis="x", rotation=20)
        ax.grid(alpha=0.3, axis="y")
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "energy.png"), dpi=130)
        plt.close(fig)


def write_sweep_files(outdir, rows, figures=True):
    """One row per (parameter value, scheme): the data behind trend plots."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "value", "scheme", "tec_joules",
                    "outer_iterations", "converged"])
        for r in rows:
            w.writerow([r["parameter"], r["value"], r["scheme"],
                        _fmt(r["tec_joules"]), r["outer_iterations"],
                        r["converged"]])
    if figures and rows:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        schemes = sorted({r["scheme"] for r in rows})
        numeric = all(isinstance(r["value"], (int, float)) for r in rows)
        for scheme in schemes:
            pts = [(r["value"], r["tec_joules"]) for r in rows
                   if r["scheme"] == scheme]
            pts.sort(key=lambda t: t[0] if numeric else str(t[0]))
            ax.plot([p[0] for p in pts], [p[1] for p in pts], "-o",
                    markersize=4, label=scheme)
        ax.set_xlabel(rows[0]["parameter"])
        ax.set_ylabel("total energy (J)")
        ax.set_yscale("log")
        ax.grid(alpha=0.3, which="both")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "sweep.png"), dpi=130)
        plt.close(fig)


def read_solution_files(outdir, cfg: ScenarioConfig):
    """Reload the emitted schedules/path for round-trip checks."""
    n = cfg.n_slots
    tasks = TaskAllocation.zeros(cfg.num_ues, n)
    bw = BandwidthAllocation.zeros(cfg.num_ues, n)
    with open(os.path.join(outdir, "allocation.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            slot, k = int(row["n"]), int(row["ue"]) - 1
            tasks.l_local[k, slot] = float(row["l_local"])
            tasks.l_offload[k, slot] = float(row["l_offload"])
            tasks.l_uav[k, slot] = float(row["l_uav_compute"])
            tasks.l_forward[k, slot] = float(row["l_uav_forward"])
            bw.b_offload[k, slot] = float(row["b_offload"])
            bw.b_forward[k, slot] = float(row["b_forward"])
    points = np.zeros((n + 1, 2))
    with open(os.path.join(outdir, "trajectory.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            points[int(row["n"])] = (float(row["x"]), float(row["y"]))
    return tasks, bw, Trajectory(points)
