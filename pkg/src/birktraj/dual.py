"""Discrete costates: multiplier mapping, adjoint-system checks, indirect solves.

The discretized first-order system has two anchoring choices on the state side
and two on the costate side, each in a plain (pointwise) or weighted (Galerkin)
flavor — sixteen variants in all, built here from one parameterized assembler.
Three of them are reachable from a converged NLP by relabeling multipliers:

    form a (plain)      ->  variant (a, b_star)
    form a_star         ->  variant (a_star, b_star)
    form a (scaled)     ->  variant (a, b)

Every other (form -> variant) pairing is refused by :func:`map_covectors`, and
reports for the remaining variants are marked experimental.  The weighted
anti-symmetry of the Birkhoff matrices holds only up to the integration-by-
parts defect, so costate residuals are judged against a tolerance with that
defect built in (see :func:`default_tolerance`).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .birkhoff import BirkhoffSystem, ibp_defect_norm
from .errors import (
    DegenerateWeightError,
    NoConvergenceError,
    ShapeError,
    UnsupportedMappingError,
    UnsupportedProblemError,
)
from .ocp import ConstraintKind, OcpDefinition, complementarity_violation, prepared
from .solver import NlpResult
from .transcription import (
    FormTag,
    PrimalForm,
    PrimalSolution,
    endpoint_seed,
)

Array = np.ndarray

_STARRED = (FormTag.A_STAR, FormTag.B_STAR)
_LEFT_ANCHORED = (FormTag.A, FormTag.A_STAR)


@dataclass(frozen=True)
class DualVariant:
    """Anchor/weighting choice for the state side and the costate side."""

    state_form: FormTag
    costate_form: FormTag

    def __post_init__(self):
        object.__setattr__(self, "state_form", FormTag(self.state_form))
        object.__setattr__(self, "costate_form", FormTag(self.costate_form))

    @property
    def verified(self) -> bool:
        return (self.state_form, self.costate_form) in (
            (FormTag.A, FormTag.B_STAR),
            (FormTag.A_STAR, FormTag.B_STAR),
            (FormTag.A, FormTag.B),
        )

    @property
    def experimental(self) -> bool:
        return not self.verified

    @staticmethod
    def parse(text: str) -> "DualVariant":
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 2:
            raise ShapeError(f"expected 'state,costate' pair, got {text!r}")
        return DualVariant(FormTag(parts[0]), FormTag(parts[1]))

    def __str__(self):
        return f"{self.state_form.value},{self.costate_form.value}"


@dataclass(frozen=True)
class DualTrajectory:
    """Discrete costate estimates at the nodes.

    ``costates`` and ``costate_derivs`` are (N+1, n_x) node tables; the
    interpolant anchored at ``costate_final`` with derivative values
    ``costate_derivs`` reproduces ``costates`` up to the reported residuals.
    """

    costates: Array
    costate_derivs: Array
    costate_initial: Array  # value at the left endpoint
    costate_final: Array  # value at the right endpoint
    endpoint: Array  # multipliers of the endpoint constraint rows

    def to_json_dict(self) -> dict:
        return {
            "costates": self.costates.tolist(),
            "costate_derivs": self.costate_derivs.tolist(),
            "costate_initial": self.costate_initial.tolist(),
            "costate_final": self.costate_final.tolist(),
            "endpoint": self.endpoint.tolist(),
        }

    def write_csv(self, path) -> None:
        m, n = self.costates.shape
        header = (
            ["node"]
            + [f"costate_{j}" for j in range(n)]
            + [f"costate_deriv_{j}" for j in range(n)]
        )
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(m):
                row = [i] + [f"{v:.17g}" for v in self.costates[i]]
                row += [f"{v:.17g}" for v in self.costate_derivs[i]]
                writer.writerow(row)


def verified_variant(form: PrimalForm) -> DualVariant:
    """The dual variant whose root system a converged solve of ``form``
    satisfies after relabeling (the three proven pairings)."""
    if form.tag is FormTag.A and not form.scaled:
        return DualVariant(FormTag.A, FormTag.B_STAR)
    if form.tag is FormTag.A_STAR:
        return DualVariant(FormTag.A_STAR, FormTag.B_STAR)
    if form.tag is FormTag.A and form.scaled:
        return DualVariant(FormTag.A, FormTag.B)
    raise UnsupportedMappingError(
        f"no verified multiplier-to-costate map for form {form}"
    )


def map_covectors(result: NlpResult, form: PrimalForm, sys: BirkhoffSystem) -> DualTrajectory:
    """Relabel converged KKT multipliers as discrete costates.

    The dynamics multipliers become the costates, the state-interpolation
    multipliers the costate derivatives; the grid-equivalency multiplier is
    the right-endpoint costate and the left one follows from the costate
    grid-equivalency identity.  With scaled variables the costate is the
    weight-normalized dynamics multiplier.
    """
    variant = verified_variant(form)  # raises for the unverified pairings
    if not result.converged:
        raise NoConvergenceError(
            f"covector mapping needs a converged result, got status {result.status.value!r}"
        )
    cov = result.covectors
    if cov is None:
        raise ShapeError("result carries no relabeled multipliers")
    w = sys.w_B
    if form.scaled:
        if np.any(w == 0.0):
            raise DegenerateWeightError("zero quadrature weight in costate normalization")
        costates = cov.dynamics / w[:, None]
    else:
        costates = cov.dynamics.copy()
    derivs = cov.state_interp.copy()
    lam_b = cov.equivalency.copy()
    lam_a = lam_b - w @ derivs
    assert variant.verified
    return DualTrajectory(
        costates=costates,
        costate_derivs=derivs,
        costate_initial=lam_a,
        costate_final=lam_b,
        endpoint=cov.endpoint.copy(),
    )


# --- adjoint-system verification -------------------------------------------------


@dataclass(frozen=True)
class PontryaginReport:
    """Infinity norms of every block of one variant's root system.

    ``hamiltonian_constancy`` is informational (autonomous problems make the
    node Hamiltonian constant in the limit) and does not gate ``passed``.
    """

    variant: DualVariant
    tolerance: float
    blocks: dict
    hamiltonian_constancy: float
    experimental: bool

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.blocks.values())

    def worst_block(self) -> tuple[str, float]:
        name = max(self.blocks, key=self.blocks.get)
        return name, self.blocks[name]

    def to_json_dict(self) -> dict:
        return {
            "variant": str(self.variant),
            "tolerance": self.tolerance,
            "blocks": dict(self.blocks),
            "hamiltonian_constancy": self.hamiltonian_constancy,
            "experimental": self.experimental,
            "passed": self.passed,
        }

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def default_tolerance(sys: BirkhoffSystem, floor: float = 1e-6) -> float:
    """Costate residuals inherit the integration-by-parts defect; anything
    below ten times its norm is indistinguishable from that budget."""
    return max(floor, 10.0 * ibp_defect_norm(sys))


def _node_tables(ocp: OcpDefinition, X: Array, U: Array):
    m = X.shape[0]
    f_tab = np.empty_like(X)
    fx_tab = np.empty((m, X.shape[1], X.shape[1]))
    fu_tab = np.empty((m, X.shape[1], U.shape[1]))
    for i in range(m):
        f_tab[i] = ocp.dynamics(X[i], U[i])
        fx_tab[i] = ocp.jac_fx(X[i], U[i])
        fu_tab[i] = ocp.jac_fu(X[i], U[i])
    return f_tab, fx_tab, fu_tab


def verify_pontryagin(
    ocp: OcpDefinition,
    primal: PrimalSolution,
    dual: DualTrajectory,
    sys: BirkhoffSystem,
    variant: DualVariant,
    tol: Optional[float] = None,
) -> PontryaginReport:
    """Evaluate one variant's root system at (primal, dual) and report norms."""
    p = prepared(ocp)
    m, n = sys.N + 1, p.n_x
    if primal.X.shape != (m, n) or dual.costates.shape != (m, n):
        raise ShapeError(
            f"trajectory shapes {primal.X.shape}/{dual.costates.shape} do not match "
            f"(N+1, n_x) = ({m}, {n})"
        )
    if tol is None:
        tol = default_tolerance(sys)
    w = sys.w_B
    theta, phi = variant.state_form, variant.costate_form

    X, U, V = primal.X, primal.U, primal.V
    lam, om = dual.costates, dual.costate_derivs
    f_tab, fx_tab, fu_tab = _node_tables(p, X, U)

    # state side
    if theta in _LEFT_ANCHORED:
        r_interp = X - primal.x_a[None, :] - sys.B_a @ V
    else:
        r_interp = X - primal.x_b[None, :] - sys.B_b @ V
    r_dyn = V - f_tab
    if theta in _STARRED:
        r_interp = w[:, None] * r_interp
        r_dyn = w[:, None] * r_dyn
    r_state_eq = primal.x_b - primal.x_a - w @ V

    # costate side
    if phi in _LEFT_ANCHORED:
        r_costate = lam - dual.costate_initial[None, :] - sys.B_a @ om
    else:
        r_costate = lam - dual.costate_final[None, :] - sys.B_b @ om
    r_adjoint = om + np.einsum("ijk,ij->ik", fx_tab, lam)
    r_control = np.einsum("ijk,ij->ik", fu_tab, lam)
    if phi in _STARRED:
        r_costate = w[:, None] * r_costate
        r_adjoint = w[:, None] * r_adjoint
        r_control = w[:, None] * r_control
    r_costate_eq = dual.costate_final - dual.costate_initial - w @ om

    # endpoint block with the constraint terms folded into the endpoint cost
    con = p.constraints
    e_vals = np.asarray(con.fun(primal.x_a, primal.x_b), dtype=float)
    eq = con.equality_mask()
    r_endpoint = np.where(eq, np.abs(e_vals), np.maximum(e_vals, 0.0)) if e_vals.size else e_vals
    nu = dual.endpoint
    g_xa = np.asarray(p.grad_cost_xa(primal.x_a, primal.x_b), dtype=float)
    g_xb = np.asarray(p.grad_cost_xb(primal.x_a, primal.x_b), dtype=float)
    if e_vals.size:
        g_xa = g_xa + np.asarray(con.jac_xa(primal.x_a, primal.x_b), dtype=float).T @ nu
        g_xb = g_xb + np.asarray(con.jac_xb(primal.x_a, primal.x_b), dtype=float).T @ nu
    r_trans_a = dual.costate_initial + g_xa
    r_trans_b = dual.costate_final - g_xb

    ham = np.einsum("ij,ij->i", lam, f_tab)
    ham_dev = float(np.max(np.abs(ham - np.mean(ham)))) if m else 0.0

    def norm(a) -> float:
        a = np.asarray(a, dtype=float)
        return float(np.max(np.abs(a))) if a.size else 0.0

    blocks = {
        "state_interpolation": norm(r_interp),
        "dynamics": norm(r_dyn),
        "state_equivalency": norm(r_state_eq),
        "costate_interpolation": norm(r_costate),
        "adjoint": norm(r_adjoint),
        "control_stationarity": norm(r_control),
        "costate_equivalency": norm(r_costate_eq),
        "endpoint_feasibility": norm(r_endpoint),
        "transversality_initial": norm(r_trans_a),
        "transversality_final": norm(r_trans_b),
        "complementarity": complementarity_violation(nu, e_vals, con.kinds),
    }
    return PontryaginReport(
        variant=variant,
        tolerance=float(tol),
        blocks=blocks,
        hamiltonian_constancy=ham_dev,
        experimental=variant.experimental,
    )


# --- indirect solve ------------------------------------------------------------


def _recover_controls(ocp: OcpDefinition, X: Array, lam: Array) -> Array:
    """Per-node Newton on the Hamiltonian stationarity condition, from u = 0.

    The second derivative is probed by finite differences; a singular one at
    the seed point means the stationarity condition cannot be solved for u.
    """
    m, k = X.shape[0], ocp.n_u
    U = np.zeros((m, k))
    if k == 0:
        return U
    h = 1e-6
    for i in range(m):
        u = np.zeros(k)

        def grad(u_):
            return np.asarray(ocp.jac_fu(X[i], u_), dtype=float).T @ lam[i]

        for _ in range(25):
            g = grad(u)
            if np.max(np.abs(g)) <= 1e-12:
                break
            hess = np.empty((k, k))
            for j in range(k):
                up, um = u.copy(), u.copy()
                up[j] += h
                um[j] -= h
                hess[:, j] = (grad(up) - grad(um)) / (2.0 * h)
            try:
                step = np.linalg.solve(hess, -g)
            except np.linalg.LinAlgError:
                raise UnsupportedProblemError(
                    "Hamiltonian is not regular: stationarity not solvable for the control"
                ) from None
            u = u + step
        U[i] = u
    return U


class _IndirectSystem:
    """Square root-finding system for one (ocp, grid, variant) triple."""

    def __init__(self, ocp: OcpDefinition, sys: BirkhoffSystem, variant: DualVariant):
        self.ocp = ocp
        self.sys = sys
        self.variant = variant
        m, n, k, n_e = sys.N + 1, ocp.n_x, ocp.n_u, ocp.n_e
        self.m, self.n, self.k, self.n_e = m, n, k, n_e
        sizes = [m * n, m * k, m * n, m * n, m * n, n, n, n, n, n_e]
        names = ["X", "U", "V", "lam", "om", "x_a", "x_b", "lam_a", "lam_b", "nu"]
        edges = np.concatenate([[0], np.cumsum(sizes)])
        self.sl = {nm: slice(int(a), int(b)) for nm, a, b in zip(names, edges[:-1], edges[1:])}
        self.n_y = int(edges[-1])
        # rows share the unknown layout sizes: interp, dyn, seq, ci, adj, ctl,
        # ceq, endpoint, trans_a, trans_b
        row_sizes = [m * n, m * n, n, m * n, m * n, m * k, n, n_e, n, n]
        row_names = ["interp", "dyn", "seq", "ci", "adj", "ctl", "ceq", "end", "tva", "tvb"]
        redges = np.concatenate([[0], np.cumsum(row_sizes)])
        self.rows = {
            nm: slice(int(a), int(b)) for nm, a, b in zip(row_names, redges[:-1], redges[1:])
        }
        assert int(redges[-1]) == self.n_y

        w = sys.w_B
        self.w = w
        self.th_scale = w if variant.state_form in _STARRED else np.ones(m)
        self.ph_scale = w if variant.costate_form in _STARRED else np.ones(m)
        self.B_state = sys.B_a if variant.state_form in _LEFT_ANCHORED else sys.B_b
        self.B_costate = sys.B_a if variant.costate_form in _LEFT_ANCHORED else sys.B_b
        self.state_anchor = "x_a" if variant.state_form in _LEFT_ANCHORED else "x_b"
        self.costate_anchor = "lam_a" if variant.costate_form in _LEFT_ANCHORED else "lam_b"

    def split(self, y: Array):
        m, n, k = self.m, self.n, self.k
        parts = {nm: y[s] for nm, s in self.sl.items()}
        return (
            parts["X"].reshape(m, n),
            parts["U"].reshape(m, k),
            parts["V"].reshape(m, n),
            parts["lam"].reshape(m, n),
            parts["om"].reshape(m, n),
            parts["x_a"],
            parts["x_b"],
            parts["lam_a"],
            parts["lam_b"],
            parts["nu"],
        )

    def _endpoint_grads(self, x_a, x_b, nu):
        p = self.ocp
        g_xa = np.asarray(p.grad_cost_xa(x_a, x_b), dtype=float)
        g_xb = np.asarray(p.grad_cost_xb(x_a, x_b), dtype=float)
        if self.n_e:
            con = p.constraints
            g_xa = g_xa + np.asarray(con.jac_xa(x_a, x_b), dtype=float).T @ nu
            g_xb = g_xb + np.asarray(con.jac_xb(x_a, x_b), dtype=float).T @ nu
        return g_xa, g_xb

    def residual(self, y: Array) -> Array:
        X, U, V, lam, om, x_a, x_b, lam_a, lam_b, nu = self.split(y)
        p, w = self.ocp, self.w
        f_tab, fx_tab, fu_tab = _node_tables(p, X, U)
        anchor_s = x_a if self.state_anchor == "x_a" else x_b
        anchor_c = lam_a if self.costate_anchor == "lam_a" else lam_b
        r = np.empty(self.n_y)
        ths, phs = self.th_scale[:, None], self.ph_scale[:, None]
        r[self.rows["interp"]] = (ths * (X - anchor_s[None, :] - self.B_state @ V)).ravel()
        r[self.rows["dyn"]] = (ths * (V - f_tab)).ravel()
        r[self.rows["seq"]] = x_b - x_a - w @ V
        r[self.rows["ci"]] = (
            phs * (lam - anchor_c[None, :] - self.B_costate @ om)
        ).ravel()
        adj = om + np.einsum("ijk,ij->ik", fx_tab, lam)
        r[self.rows["adj"]] = (phs * adj).ravel()
        if self.k:
            ctl = np.einsum("ijk,ij->ik", fu_tab, lam)
            r[self.rows["ctl"]] = (phs * ctl).ravel()
        r[self.rows["ceq"]] = lam_b - lam_a - w @ om
        if self.n_e:
            r[self.rows["end"]] = p.constraints.fun(x_a, x_b)
        g_xa, g_xb = self._endpoint_grads(x_a, x_b, nu)
        r[self.rows["tva"]] = lam_a + g_xa
        r[self.rows["tvb"]] = lam_b - g_xb
        return r

    def jacobian(self, y: Array, fd_step: float = 1e-6) -> Array:
        X, U, V, lam, om, x_a, x_b, lam_a, lam_b, nu = self.split(y)
        p, w = self.ocp, self.w
        m, n, k = self.m, self.n, self.k
        _, fx_tab, fu_tab = _node_tables(p, X, U)
        jac = np.zeros((self.n_y, self.n_y))
        sl, rows = self.sl, self.rows
        eye_n = np.eye(n)
        ths = np.repeat(self.th_scale, n)
        phs = np.repeat(self.ph_scale, n)

        jac[rows["interp"], sl["X"]] = np.diag(ths)
        jac[rows["interp"], sl["V"]] = -np.kron(self.B_state, eye_n) * ths[:, None]
        jac[rows["interp"], sl[self.state_anchor]] = -np.tile(eye_n, (m, 1)) * ths[:, None]

        jac[rows["dyn"], sl["V"]] = np.diag(ths)
        for i in range(m):
            rr = slice(rows["dyn"].start + i * n, rows["dyn"].start + (i + 1) * n)
            cx = slice(sl["X"].start + i * n, sl["X"].start + (i + 1) * n)
            jac[rr, cx] = -self.th_scale[i] * fx_tab[i]
            if k:
                cu = slice(sl["U"].start + i * k, sl["U"].start + (i + 1) * k)
                jac[rr, cu] = -self.th_scale[i] * fu_tab[i]

        jac[rows["seq"], sl["x_b"]] = eye_n
        jac[rows["seq"], sl["x_a"]] = -eye_n
        jac[rows["seq"], sl["V"]] = -np.kron(w[None, :], eye_n)

        jac[rows["ci"], sl["lam"]] = np.diag(phs)
        jac[rows["ci"], sl["om"]] = -np.kron(self.B_costate, eye_n) * phs[:, None]
        jac[rows["ci"], sl[self.costate_anchor]] = -np.tile(eye_n, (m, 1)) * phs[:, None]

        # adjoint and control rows: lam enters linearly, (x, u) through the
        # dynamics Jacobians; differentiate those products numerically
        jac[rows["adj"], sl["om"]] = np.diag(phs)
        for i in range(m):
            rr = slice(rows["adj"].start + i * n, rows["adj"].start + (i + 1) * n)
            jac[rr, sl["lam"].start + i * n : sl["lam"].start + (i + 1) * n] = (
                self.ph_scale[i] * fx_tab[i].T
            )
            if k:
                rc = slice(rows["ctl"].start + i * k, rows["ctl"].start + (i + 1) * k)
                jac[rc, sl["lam"].start + i * n : sl["lam"].start + (i + 1) * n] = (
                    self.ph_scale[i] * fu_tab[i].T
                )

            def node_term(x_, u_):
                gx = np.asarray(p.jac_fx(x_, u_), dtype=float).T @ lam[i]
                if k:
                    gu = np.asarray(p.jac_fu(x_, u_), dtype=float).T @ lam[i]
                    return np.concatenate([gx, gu])
                return gx

            y0 = np.concatenate([X[i], U[i]])
            for j in range(n + k):
                h = fd_step * max(1.0, abs(y0[j]))
                yp, ym = y0.copy(), y0.copy()
                yp[j] += h
                ym[j] -= h
                col = (node_term(yp[:n], yp[n:]) - node_term(ym[:n], ym[n:])) / (2.0 * h)
                tgt = (
                    sl["X"].start + i * n + j if j < n else sl["U"].start + i * k + (j - n)
                )
                jac[rr, tgt] += self.ph_scale[i] * col[:n]
                if k:
                    rc = slice(rows["ctl"].start + i * k, rows["ctl"].start + (i + 1) * k)
                    jac[rc, tgt] += self.ph_scale[i] * col[n:]

        jac[rows["ceq"], sl["lam_b"]] = eye_n
        jac[rows["ceq"], sl["lam_a"]] = -eye_n
        jac[rows["ceq"], sl["om"]] = -np.kron(w[None, :], eye_n)

        if self.n_e:
            con = p.constraints
            jac[rows["end"], sl["x_a"]] = np.asarray(con.jac_xa(x_a, x_b), dtype=float)
            jac[rows["end"], sl["x_b"]] = np.asarray(con.jac_xb(x_a, x_b), dtype=float)
            jac[rows["tva"], sl["nu"]] = np.asarray(con.jac_xa(x_a, x_b), dtype=float).T
            jac[rows["tvb"], sl["nu"]] = -np.asarray(con.jac_xb(x_a, x_b), dtype=float).T
        jac[rows["tva"], sl["lam_a"]] = eye_n
        jac[rows["tvb"], sl["lam_b"]] = eye_n

        # curvature of the endpoint Lagrangian, by central differences
        y0 = np.concatenate([x_a, x_b])
        for j in range(2 * n):
            h = fd_step * max(1.0, abs(y0[j]))
            yp, ym = y0.copy(), y0.copy()
            yp[j] += h
            ym[j] -= h
            gp_a, gp_b = self._endpoint_grads(yp[:n], yp[n:], nu)
            gm_a, gm_b = self._endpoint_grads(ym[:n], ym[n:], nu)
            tgt = sl["x_a"].start + j if j < n else sl["x_b"].start + (j - n)
            jac[rows["tva"], tgt] += (gp_a - gm_a) / (2.0 * h)
            jac[rows["tvb"], tgt] += -(gp_b - gm_b) / (2.0 * h)
        return jac


def _default_indirect_init(system: _IndirectSystem) -> Array:
    p, sys = system.ocp, system.sys
    m, n = system.m, system.n
    x_a, x_b = endpoint_seed(p.constraints, n)
    t0, tf = p.horizon
    theta = (sys.grid.nodes - t0) / (tf - t0)
    X = x_a[None, :] + theta[:, None] * (x_b - x_a)[None, :]
    V = np.tile((x_b - x_a) / (tf - t0), (m, 1))
    nu = np.zeros(system.n_e)
    lam_b = np.asarray(p.grad_cost_xb(x_a, x_b), dtype=float)
    lam = np.tile(lam_b, (m, 1))
    om = np.zeros((m, n))
    U = _recover_controls(p, X, lam)
    y = np.empty(system.n_y)
    for nm, val in [
        ("X", X.ravel()),
        ("U", U.ravel()),
        ("V", V.ravel()),
        ("lam", lam.ravel()),
        ("om", om.ravel()),
        ("x_a", x_a),
        ("x_b", x_b),
        ("lam_a", lam_b.copy()),
        ("lam_b", lam_b),
        ("nu", nu),
    ]:
        y[system.sl[nm]] = val
    return y


def solve_indirect(
    ocp: OcpDefinition,
    sys: BirkhoffSystem,
    variant: DualVariant,
    init=None,
    tol: float = 1e-10,
    max_iter: int = 100,
):
    """Damped-Newton root of the variant's full first-order system.

    Independent of the NLP solver: no objective, no multipliers — just the
    square system.  Returns ``(PrimalSolution, DualTrajectory)``.  ``init``
    may be a ``(PrimalSolution, DualTrajectory)`` pair (e.g. a direct solve's
    output) to warm-start; the default builds a linear-interpolation state
    profile with costates seeded from the endpoint-cost gradient.
    """
    p = prepared(ocp)
    if any(kind is not ConstraintKind.EQUALITY for kind in p.constraints.kinds):
        raise UnsupportedProblemError(
            "indirect solve requires all endpoint constraints to be equalities"
        )
    system = _IndirectSystem(p, sys, variant)

    if init is None:
        y = _default_indirect_init(system)
    else:
        primal0, dual0 = init
        y = np.empty(system.n_y)
        for nm, val in [
            ("X", primal0.X.ravel()),
            ("U", primal0.U.ravel()),
            ("V", primal0.V.ravel()),
            ("lam", dual0.costates.ravel()),
            ("om", dual0.costate_derivs.ravel()),
            ("x_a", primal0.x_a),
            ("x_b", primal0.x_b),
            ("lam_a", dual0.costate_initial),
            ("lam_b", dual0.costate_final),
            ("nu", dual0.endpoint),
        ]:
            y[system.sl[nm]] = val
    if not np.all(np.isfinite(y)):
        raise ShapeError("indirect initial point must be finite")

    r = system.residual(y)
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            break
        jac = system.jacobian(y)
        dy = None
        shift = 0.0
        for _attempt in range(8):
            try:
                dy = np.linalg.solve(jac + shift * np.eye(system.n_y), -r)
            except np.linalg.LinAlgError:
                dy = None
            if dy is not None and np.all(np.isfinite(dy)):
                break
            shift = 1e-10 if shift == 0.0 else shift * 100.0
        if dy is None or not np.all(np.isfinite(dy)):
            raise NoConvergenceError("singular Newton matrix in indirect solve")
        norm0 = float(np.linalg.norm(r))
        alpha = 1.0
        while alpha >= 2.0**-30:
            y_try = y + alpha * dy
            r_try = system.residual(y_try)
            if np.all(np.isfinite(r_try)) and float(np.linalg.norm(r_try)) <= (
                1.0 - 1e-4 * alpha
            ) * norm0:
                y, r = y_try, r_try
                break
            alpha *= 0.5
        else:
            raise NoConvergenceError("indirect line search made no progress")
    if np.max(np.abs(r)) > tol:
        raise NoConvergenceError(
            f"indirect solve did not reach {tol:g} in {max_iter} iterations"
        )

    X, U, V, lam, om, x_a, x_b, lam_a, lam_b, nu = system.split(y)
    f_tab, _, _ = _node_tables(p, X, U)
    feas = max(
        float(np.max(np.abs(X - (x_a if system.state_anchor == "x_a" else x_b)[None, :] - system.B_state @ V))),
        float(np.max(np.abs(V - f_tab))),
        float(np.max(np.abs(x_b - x_a - sys.w_B @ V))),
        float(np.max(np.abs(p.constraints.fun(x_a, x_b)))) if system.n_e else 0.0,
    )
    primal = PrimalSolution(
        X=X.copy(),
        U=U.copy(),
        V=V.copy(),
        x_a=x_a.copy(),
        x_b=x_b.copy(),
        objective=float(p.endpoint_cost(x_a, x_b)),
        feasibility=feas,
    )
    dual = DualTrajectory(
        costates=lam.copy(),
        costate_derivs=om.copy(),
        costate_initial=lam_a.copy(),
        costate_final=lam_b.copy(),
        endpoint=nu.copy(),
    )
    return primal, dual
