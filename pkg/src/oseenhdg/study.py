"""Experiment drivers: manufactured-solution convergence studies, the
pressure-penalty sweep, the joint penalty grid, and csv/json output."""

import datetime
import json
import math
from dataclasses import dataclass

import numpy as np

from .analysis import compute_rates, error_report, l2_error
from .forms import OseenConfig, assemble_global, default_eta
from .linsys import condense_and_solve, pressure_mean, solve_direct
from .mesh import build_uniform_mesh
from .spaces import MethodVariant, build_layout

CSV_HEADER = "h,e_u,r_u,e_p,r_p,e_DG,r_DG"
SWEEP_HEADER = "alpha,h,e_u,e_p,e_DG"
GRID_HEADER = "eta,alpha,h,e_u,e_p,e_DG,status"


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form solution with hand-derived derivatives and the matching
    momentum source; the velocity is divergence-free and vanishes on the
    boundary of the unit square."""

    u: object
    grad_u: object
    laplace_u: object
    p: object
    grad_p: object
    f: object


def manufactured_case(config):
    """The trigonometric benchmark case for the given parameters."""
    pi = math.pi
    wind = config.wind_fn()

    def u(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack(
            [
                np.sin(pi * x) ** 2 * np.sin(2 * pi * y),
                -np.sin(2 * pi * x) * np.sin(pi * y) ** 2,
            ]
        )

    def grad_u(pts):
        x, y = pts[:, 0], pts[:, 1]
        g = np.empty((len(pts), 2, 2))
        g[:, 0, 0] = pi * np.sin(2 * pi * x) * np.sin(2 * pi * y)
        g[:, 0, 1] = 2 * pi * np.sin(pi * x) ** 2 * np.cos(2 * pi * y)
        g[:, 1, 0] = -2 * pi * np.cos(2 * pi * x) * np.sin(pi * y) ** 2
        g[:, 1, 1] = -pi * np.sin(2 * pi * x) * np.sin(2 * pi * y)
        return g

    def laplace_u(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack(
            [
                2 * pi**2 * np.cos(2 * pi * x) * np.sin(2 * pi * y)
                - 4 * pi**2 * np.sin(pi * x) ** 2 * np.sin(2 * pi * y),
                4 * pi**2 * np.sin(2 * pi * x) * np.sin(pi * y) ** 2
                - 2 * pi**2 * np.sin(2 * pi * x) * np.cos(2 * pi * y),
            ]
        )

    def p(pts):
        return np.sin(2 * pi * pts[:, 0]) * np.sin(2 * pi * pts[:, 1])

    def grad_p(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack(
            [
                2 * pi * np.cos(2 * pi * x) * np.sin(2 * pi * y),
                2 * pi * np.sin(2 * pi * x) * np.cos(2 * pi * y),
            ]
        )

    def f(pts):
        b = wind(pts)
        adv = np.einsum("mcd,md->mc", grad_u(pts), b)
        return (
            -config.nu * laplace_u(pts)
            + adv
            + config.sigma * u(pts)
            + grad_p(pts)
        )

    return ManufacturedCase(u=u, grad_u=grad_u, laplace_u=laplace_u, p=p,
                            grad_p=grad_p, f=f)


@dataclass
class StudyConfig:
    method: str = "hdg"
    degree: int = 1
    nu: float = 1.0
    sigma: float = 1.0
    wind: tuple = (1.0, 0.0)
    eta: float = None  # default 6k^2 (hdg) / 4k^2 (edg, e-hdg)
    alpha: float = 1e-2
    gamma: float = 1.0
    n_min: int = 2
    n_max: int = None  # default 64 for k=1, 32 for k=2
    solver: str = "direct"
    out: str = None
    fmt: str = "csv"

    def variant(self):
        return MethodVariant.parse(self.method)

    def mesh_sizes(self):
        n_max = self.n_max
        if n_max is None:
            n_max = 64 if self.degree == 1 else 32
        for n in (self.n_min, n_max):
            if n < 1 or n & (n - 1):
                raise ValueError(f"mesh sizes must be powers of two, got {n}")
        if n_max > 256:
            raise ValueError("mesh sizes beyond n=256 are not supported")
        if n_max < self.n_min:
            raise ValueError("empty mesh range")
        sizes = []
        n = self.n_min
        while n <= n_max:
            sizes.append(n)
            n *= 2
        return sizes

    def oseen_config(self, alpha=None, eta=None):
        eta = eta if eta is not None else self.eta
        if eta is None:
            eta = default_eta(self.variant(), self.degree)
        return OseenConfig(
            nu=self.nu,
            sigma=self.sigma,
            wind=tuple(self.wind) if not callable(self.wind) else self.wind,
            eta=eta,
            alpha=alpha if alpha is not None else self.alpha,
            gamma=self.gamma,
        )

    def validate(self):
        if self.solver not in ("direct", "condensed"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        self.variant()
        self.mesh_sizes()
        return self


def solve_on_mesh(n, variant, k, config, solver="direct", case=None):
    """Build, assemble and solve one mesh; returns (solution, report)."""
    case = case or manufactured_case(config)
    mesh = build_uniform_mesh(n)
    layout = build_layout(mesh, k, variant)
    system = assemble_global(mesh, layout, config, case.f)
    if solver == "condensed":
        solution = condense_and_solve(system, layout)
    else:
        solution = solve_direct(system)
    solution.diagnostics["pressure_mean"] = pressure_mean(layout, solution.p)
    solution.diagnostics["pressure_l2"] = l2_error(
        solution.p, lambda pts: np.zeros(len(pts)), mesh, layout, "pressure"
    )
    return solution, error_report(mesh, layout, config, solution, case)


def run_convergence_study(study):
    """Solve the halving sequence of meshes and tabulate errors and rates."""
    study.validate()
    config = study.oseen_config()
    case = manufactured_case(config)
    reports = []
    for n in study.mesh_sizes():
        try:
            _, rep = solve_on_mesh(
                n, study.variant(), study.degree, config, study.solver, case
            )
        except Exception as exc:
            raise RuntimeError(f"solve failed at n={n}: {exc}") from exc
        reports.append(rep)
    record = compute_rates(reports)
    if study.out:
        if study.fmt == "json":
            write_convergence_json(record, study, study.out)
        else:
            write_convergence_csv(record, study, study.out)
    return record


def run_alpha_sweep(study, alphas):
    """Errors over the mesh range for each pressure penalty value."""
    study.validate()
    if not list(alphas):
        raise ValueError("alpha sweep needs at least one value")
    for a in alphas:
        if a <= 0:
            raise ValueError(f"pressure penalty must be positive, got {a}")
    rows = []
    for alpha in sorted(set(float(a) for a in alphas)):
        config = study.oseen_config(alpha=alpha)
        case = manufactured_case(config)
        for n in study.mesh_sizes():
            _, rep = solve_on_mesh(
                n, study.variant(), study.degree, config, study.solver, case
            )
            rows.append({"alpha": alpha, "report": rep})
    if study.out:
        write_sweep_csv(rows, study, study.out)
    return rows


def run_eta_alpha_grid(study, etas, alphas):
    """Joint penalty grid; solver failures are recorded per cell and do not
    abort the remaining cells."""
    study.validate()
    if not list(etas) or not list(alphas):
        raise ValueError("grid needs at least one eta and one alpha")
    rows = []
    for eta in sorted(set(float(e) for e in etas)):
        for alpha in sorted(set(float(a) for a in alphas)):
            if alpha <= 0 or eta <= 0:
                raise ValueError("grid parameters must be positive")
            config = study.oseen_config(alpha=alpha, eta=eta)
            case = manufactured_case(config)
            for n in study.mesh_sizes():
                try:
                    _, rep = solve_on_mesh(
                        n, study.variant(), study.degree, config, study.solver, case
                    )
                    rows.append(
                        {"eta": eta, "alpha": alpha, "report": rep, "status": "ok"}
                    )
                except Exception as exc:
                    rows.append(
                        {
                            "eta": eta,
                            "alpha": alpha,
                            "n": n,
                            "report": None,
                            "status": f"failed: {exc}",
                        }
                    )
    if study.out:
        write_grid_csv(rows, study, study.out)
    return rows


def _fmt(x):
    return np.format_float_scientific(x, unique=True)


def _stamp(study, kind):
    ts = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return (
        f"# oseen-hdg {kind} method={study.method} k={study.degree} "
        f"nu={study.nu} generated={ts}"
    )


def write_convergence_csv(record, study, path):
    lines = [_stamp(study, "study"), CSV_HEADER]
    for i, rep in enumerate(record.reports):
        rates = [record.r_u[i], record.r_p[i], record.r_dg[i]]
        cells = [_fmt(rep.h), _fmt(rep.e_u), "", _fmt(rep.e_p), "",
                 _fmt(rep.e_energy), ""]
        for j, r in enumerate(rates):
            if r is not None:
                cells[2 * j + 2] = _fmt(r)
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_convergence_csv(path):
    """Parse a study csv back into row dicts (None for blank rates)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line == CSV_HEADER:
                continue
            cells = line.split(",")
            keys = CSV_HEADER.split(",")
            rows.append(
                {
                    k: (None if c == "" else float(c))
                    for k, c in zip(keys, cells)
                }
            )
    return rows


def write_convergence_json(record, study, path):
    payload = {
        "method": study.method,
        "degree": study.degree,
        "nu": study.nu,
        "sigma": study.sigma,
        "eta": study.oseen_config().eta,
        "alpha": study.alpha,
        "gamma": study.gamma,
        "rows": [
            {
                "n": rep.n,
                "h": rep.h,
                "e_u": rep.e_u,
                "r_u": record.r_u[i],
                "e_p": rep.e_p,
                "r_p": record.r_p[i],
                "e_DG": rep.e_energy,
                "r_DG": record.r_dg[i],
                "energy_components": rep.components,
                "solver": rep.diagnostics.get("method"),
                "relative_residual": rep.diagnostics.get("relative_residual"),
            }
            for i, rep in enumerate(record.reports)
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_sweep_csv(rows, study, path):
    lines = [_stamp(study, "alpha-sweep"), SWEEP_HEADER]
    for row in rows:
        rep = row["report"]
        lines.append(
            ",".join(
                [_fmt(row["alpha"]), _fmt(rep.h), _fmt(rep.e_u), _fmt(rep.e_p),
                 _fmt(rep.e_energy)]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_grid_csv(rows, study, path):
    lines = [_stamp(study, "eta-alpha-grid"), GRID_HEADER]
    for row in rows:
        rep = row["report"]
        if rep is None:
            h = 1.0 / row["n"]
            lines.append(
                ",".join(
                    [_fmt(row["eta"]), _fmt(row["alpha"]), _fmt(h), "", "",
                     "", row["status"].replace(",", ";")]
                )
            )
        else:
            lines.append(
                ",".join(
                    [_fmt(row["eta"]), _fmt(row["alpha"]), _fmt(rep.h),
                     _fmt(rep.e_u), _fmt(rep.e_p), _fmt(rep.e_energy), "ok"]
                )
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
