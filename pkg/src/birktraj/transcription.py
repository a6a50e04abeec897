"""Transcription of endpoint-cost problems into dense NLPs on a Birkhoff basis.

Four anchored forms are supported.  Form ``a`` pins the state interpolant to
the left endpoint value x_a, form ``b`` to x_b; the starred forms impose the
same rows premultiplied by the quadrature weights (Galerkin weighting), which
is implemented as a row scaling of the plain residuals so the two code paths
agree bit for bit.  Independently of the form tag, ``scaled=True`` replaces
the node variables by their weight-scaled counterparts (w o X, w o U, w o V)
while keeping the constraint set unchanged.

Decision vector layout (stored order):
    [X.ravel()  (node-major), U.ravel(), V.ravel(), x_a, x_b]
with X, V of shape (N+1, n_x) and U of shape (N+1, n_u); total length
(N+1)(2 n_x + n_u) + 2 n_x.

Constraint rows, in order:
    state interpolation   (N+1) n_x   X - x_anchor 1 - B_anchor V
    dynamics              (N+1) n_x   V - f(X, U)
    grid equivalency            n_x   x_b - x_a - w^T V
    endpoint rows               n_e   e(x_a, x_b)   (equality or <= 0)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse

from .birkhoff import BirkhoffSystem
from .errors import (
    DegenerateWeightError,
    DomainMismatchError,
    EvaluationError,
    NotFoundError,
    ShapeError,
    UnsupportedGridError,
    UnsupportedProblemError,
)
from .ocp import OcpDefinition, prepared

Array = np.ndarray

# equality constraints are imposed to this tolerance, never exactly;
# anything tighter than sqrt(machine eps) is refused
DEFAULT_FEASIBILITY_TOL = 2e-8
MIN_FEASIBILITY_TOL = float(np.sqrt(np.finfo(float).eps))


class FormTag(str, Enum):
    A = "a"
    B = "b"
    A_STAR = "a_star"
    B_STAR = "b_star"


@dataclass(frozen=True)
class PrimalForm:
    tag: FormTag
    scaled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tag", FormTag(self.tag))
        if self.scaled and self.tag not in (FormTag.A, FormTag.B):
            raise UnsupportedProblemError(
                "variable scaling is defined only for the plain a/b forms"
            )

    @property
    def starred(self) -> bool:
        return self.tag in (FormTag.A_STAR, FormTag.B_STAR)

    @property
    def anchored_left(self) -> bool:
        return self.tag in (FormTag.A, FormTag.A_STAR)

    def __str__(self):
        return self.tag.value + ("+scaled" if self.scaled else "")


@dataclass(frozen=True)
class CovectorMultipliers:
    """Multipliers in the weighted-Lagrangian convention.

    ``state_interp`` and ``dynamics`` are (N+1, n_x); ``equivalency`` and
    ``endpoint`` are flat.  When built from a solver multiplier vector the
    original vector is retained so the inverse relabeling is exact.
    """

    state_interp: Array
    dynamics: Array
    equivalency: Array
    endpoint: Array
    raw: Array | None = None


@dataclass(frozen=True)
class PrimalSolution:
    X: Array
    U: Array
    V: Array
    x_a: Array
    x_b: Array
    objective: float
    feasibility: float

    def equivalency_gap(self, w_B: Array) -> float:
        return float(np.max(np.abs(self.x_b - self.x_a - w_B @ self.V)))

    def to_json_dict(self) -> dict:
        return {
            "X": self.X.tolist(),
            "U": self.U.tolist(),
            "V": self.V.tolist(),
            "x_a": self.x_a.tolist(),
            "x_b": self.x_b.tolist(),
            "objective": self.objective,
            "feasibility": self.feasibility,
        }


class DiscretizedNlp:
    """Dense NLP view of one problem/grid/form triple.

    Immutable after construction; residual and Jacobian evaluation are pure
    and reentrant (dynamics callbacks are assumed pure).
    """

    def __init__(
        self,
        ocp: OcpDefinition,
        sys: BirkhoffSystem,
        form: PrimalForm,
        feas_tol: float = DEFAULT_FEASIBILITY_TOL,
    ):
        if feas_tol < MIN_FEASIBILITY_TOL:
            raise UnsupportedProblemError(
                f"feasibility tolerance {feas_tol:g} below sqrt(machine eps)"
            )
        self.ocp = ocp
        self.sys = sys
        self.form = form
        self.feas_tol = float(feas_tol)
        self.n_x = ocp.n_x
        self.n_u = ocp.n_u
        self.n_e = ocp.n_e
        self.n_nodes = sys.N + 1

        m, n = self.n_nodes, self.n_x
        self.n_z = m * (2 * n + self.n_u) + 2 * n
        i_x = m * n
        i_u = i_x + m * self.n_u
        i_v = i_u + m * n
        self.slice_x = slice(0, i_x)
        self.slice_u = slice(i_x, i_u)
        self.slice_v = slice(i_u, i_v)
        self.slice_xa = slice(i_v, i_v + n)
        self.slice_xb = slice(i_v + n, i_v + 2 * n)

        # constraint rows
        self.n_eq_core = 2 * m * n + n  # interpolation + dynamics + equivalency
        self.n_rows = self.n_eq_core + self.n_e
        self.row_interp = slice(0, m * n)
        self.row_dyn = slice(m * n, 2 * m * n)
        self.row_equiv = slice(2 * m * n, 2 * m * n + n)
        self.row_endpoint = slice(2 * m * n + n, self.n_rows)

        mask = np.ones(self.n_rows, dtype=bool)
        mask[self.row_endpoint] = ocp.constraints.equality_mask()
        self.equality_mask = mask

        w = sys.w_B
        if form.scaled and np.any(w == 0.0):
            raise DegenerateWeightError("zero quadrature weight; cannot scale variables")
        self._w = w
        self._w_rep = np.repeat(w, n)  # node-major broadcast per state
        # Galerkin row weighting for the starred forms; ones elsewhere so the
        # scaled path multiplies by exactly 1.0 and stays bit-identical
        scale = np.ones(self.n_rows)
        if form.starred:
            scale[self.row_interp] = self._w_rep
            scale[self.row_dyn] = self._w_rep
        self._row_scale = scale

        anchor = sys.B_a if form.anchored_left else sys.B_b
        eye_n = np.eye(n)
        self._anchor_matrix = anchor
        self._jac_interp_v = -np.kron(anchor, eye_n)
        self._jac_interp_anchor = -np.tile(eye_n, (m, 1))
        self._jac_equiv_v = -np.kron(w[None, :], eye_n)

    # --- variable packing -----------------------------------------------------

    def unpack(self, z: Array):
        """Stored vector -> physical (X, U, V, x_a, x_b)."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_z,):
            raise ShapeError(f"expected decision vector of length {self.n_z}")
        m, n = self.n_nodes, self.n_x
        X = z[self.slice_x].reshape(m, n)
        U = z[self.slice_u].reshape(m, self.n_u)
        V = z[self.slice_v].reshape(m, n)
        if self.form.scaled:
            X = X / self._w[:, None]
            U = U / self._w[:, None]
            V = V / self._w[:, None]
        else:
            X, U, V = X.copy(), U.copy(), V.copy()
        return X, U, V, z[self.slice_xa].copy(), z[self.slice_xb].copy()

    def pack(self, X, U, V, x_a, x_b) -> Array:
        """Physical matrices -> stored vector (applies variable scaling)."""
        X, U, V = (np.asarray(a, dtype=float) for a in (X, U, V))
        if self.form.scaled:
            X = X * self._w[:, None]
            U = U * self._w[:, None]
            V = V * self._w[:, None]
        return np.concatenate(
            [X.ravel(), U.ravel(), V.ravel(), np.asarray(x_a, float), np.asarray(x_b, float)]
        )

    # --- objective --------------------------------------------------------------

    def objective(self, z: Array) -> float:
        _, _, _, x_a, x_b = self.unpack(z)
        return float(self.ocp.endpoint_cost(x_a, x_b))

    def objective_gradient(self, z: Array) -> Array:
        _, _, _, x_a, x_b = self.unpack(z)
        g = np.zeros(self.n_z)
        g[self.slice_xa] = self.ocp.grad_cost_xa(x_a, x_b)
        g[self.slice_xb] = self.ocp.grad_cost_xb(x_a, x_b)
        return g

    # --- constraints --------------------------------------------------------------

    def _dynamics_table(self, X, U) -> Array:
        out = np.empty_like(X)
        for i in range(self.n_nodes):
            fi = np.asarray(self.ocp.dynamics(X[i], U[i]), dtype=float)
            if not np.all(np.isfinite(fi)):
                raise EvaluationError(f"dynamics returned non-finite values at node {i}")
            out[i] = fi
        return out

    def constraints(self, z: Array) -> Array:
        X, U, V, x_a, x_b = self.unpack(z)
        anchor_val = x_a if self.form.anchored_left else x_b
        r = np.empty(self.n_rows)
        r[self.row_interp] = (X - anchor_val[None, :] - self._anchor_matrix @ V).ravel()
        r[self.row_dyn] = (V - self._dynamics_table(X, U)).ravel()
        r[self.row_equiv] = x_b - x_a - self._w @ V
        r[self.row_endpoint] = self.ocp.constraints.fun(x_a, x_b)
        return r * self._row_scale

    def jacobian(self, z: Array) -> Array:
        """Dense Jacobian of the (row-scaled) constraints wrt stored variables."""
        X, U, V, x_a, x_b = self.unpack(z)
        m, n, n_u = self.n_nodes, self.n_x, self.n_u
        jac = np.zeros((self.n_rows, self.n_z))

        jac[self.row_interp, self.slice_x] = np.eye(m * n)
        jac[self.row_interp, self.slice_v] = self._jac_interp_v
        anchor_slice = self.slice_xa if self.form.anchored_left else self.slice_xb
        jac[self.row_interp, anchor_slice] = self._jac_interp_anchor

        jac[self.row_dyn, self.slice_v] = np.eye(m * n)
        for i in range(m):
            rows = slice(self.row_dyn.start + i * n, self.row_dyn.start + (i + 1) * n)
            fx = np.asarray(self.ocp.jac_fx(X[i], U[i]), dtype=float)
            jac[rows, self.slice_x.start + i * n : self.slice_x.start + (i + 1) * n] = -fx
            if n_u:
                fu = np.asarray(self.ocp.jac_fu(X[i], U[i]), dtype=float)
                jac[rows, self.slice_u.start + i * n_u : self.slice_u.start + (i + 1) * n_u] = -fu

        jac[self.row_equiv, self.slice_xb] = np.eye(n)
        jac[self.row_equiv, self.slice_xa] = -np.eye(n)
        jac[self.row_equiv, self.slice_v] = self._jac_equiv_v

        if self.n_e:
            con = self.ocp.constraints
            jac[self.row_endpoint, self.slice_xa] = con.jac_xa(x_a, x_b)
            jac[self.row_endpoint, self.slice_xb] = con.jac_xb(x_a, x_b)

        jac *= self._row_scale[:, None]
        if self.form.scaled:
            col = np.ones(self.n_z)
            inv = 1.0 / self._w_rep
            col[self.slice_x] = inv
            col[self.slice_v] = inv
            if n_u:
                col[self.slice_u] = np.repeat(1.0 / self._w, n_u)
            jac *= col[None, :]
        return jac

    # --- Lagrangian pieces used by the solver ------------------------------------

    def lagrangian_hessian(self, z: Array, mu: Array, fd_step: float = 1e-6) -> Array:
        """Hessian of F + mu^T c wrt stored variables.

        Interpolation and equivalency rows are linear and drop out; the
        dynamics rows contribute a node-block-diagonal term obtained by
        central differences of the analytic Jacobians, the endpoint terms a
        single (x_a, x_b) block.
        """
        X, U, V, x_a, x_b = self.unpack(z)
        m, n, n_u = self.n_nodes, self.n_x, self.n_u
        hess = np.zeros((self.n_z, self.n_z))
        mu_dyn = (mu[self.row_dyn] * self._row_scale[self.row_dyn]).reshape(m, n)

        def node_grad(x, u, w_vec):
            # gradient wrt (x, u) of  w_vec . f(x, u)
            gx = np.asarray(self.ocp.jac_fx(x, u), dtype=float).T @ w_vec
            if n_u:
                gu = np.asarray(self.ocp.jac_fu(x, u), dtype=float).T @ w_vec
                return np.concatenate([gx, gu])
            return gx

        for i in range(m):
            w_vec = -mu_dyn[i]  # dynamics rows carry -f
            if not np.any(w_vec):
                continue
            y0 = np.concatenate([X[i], U[i]])
            k = y0.size
            block = np.zeros((k, k))
            for j in range(k):
                h = fd_step * max(1.0, abs(y0[j]))
                yp, ym = y0.copy(), y0.copy()
                yp[j] += h
                ym[j] -= h
                gp = node_grad(yp[:n], yp[n:], w_vec)
                gm = node_grad(ym[:n], ym[n:], w_vec)
                block[:, j] = (gp - gm) / (2.0 * h)
            block = 0.5 * (block + block.T)
            ix = slice(self.slice_x.start + i * n, self.slice_x.start + (i + 1) * n)
            hess[ix, ix] = block[:n, :n]
            if n_u:
                iu = slice(self.slice_u.start + i * n_u, self.slice_u.start + (i + 1) * n_u)
                hess[ix, iu] = block[:n, n:]
                hess[iu, ix] = block[n:, :n]
                hess[iu, iu] = block[n:, n:]

        mu_e = mu[self.row_endpoint]

        def endpoint_grad(y):
            xa, xb = y[:n], y[n:]
            g = np.concatenate(
                [self.ocp.grad_cost_xa(xa, xb), self.ocp.grad_cost_xb(xa, xb)]
            )
            if self.n_e:
                con = self.ocp.constraints
                g[:n] += np.asarray(con.jac_xa(xa, xb), dtype=float).T @ mu_e
                g[n:] += np.asarray(con.jac_xb(xa, xb), dtype=float).T @ mu_e
            return g

        y0 = np.concatenate([x_a, x_b])
        block = np.zeros((2 * n, 2 * n))
        for j in range(2 * n):
            h = fd_step * max(1.0, abs(y0[j]))
            yp, ym = y0.copy(), y0.copy()
            yp[j] += h
            ym[j] -= h
            block[:, j] = (endpoint_grad(yp) - endpoint_grad(ym)) / (2.0 * h)
        block = 0.5 * (block + block.T)
        iab = slice(self.slice_xa.start, self.slice_xb.stop)
        hess[iab, iab] += block

        if self.form.scaled:
            col = np.ones(self.n_z)
            inv = 1.0 / self._w_rep
            col[self.slice_x] = inv
            col[self.slice_v] = inv
            if n_u:
                col[self.slice_u] = np.repeat(1.0 / self._w, n_u)
            hess *= col[:, None]
            hess *= col[None, :]
        return hess

    # --- multiplier relabeling ------------------------------------------------

    def relabel(self, mu: Array) -> CovectorMultipliers:
        """Solver multipliers (L = F + mu^T c over stored rows) -> weighted
        Lagrangian convention.

        Plain forms divide the node blocks by the quadrature weights (the
        reference Lagrangian weights those rows); starred forms already carry
        the weights in the rows, so only signs change.  With scaled variables
        only the interpolation block is reweighted.
        """
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.n_rows,):
            raise ShapeError(f"expected one multiplier per constraint row ({self.n_rows})")
        m, n = self.n_nodes, self.n_x
        mu_i = mu[self.row_interp].reshape(m, n)
        mu_d = mu[self.row_dyn].reshape(m, n)
        if self.form.starred:
            state_interp = mu_i.copy()
            dynamics = -mu_d
        elif self.form.scaled:
            state_interp = mu_i / self._w[:, None]
            dynamics = -mu_d
        else:
            state_interp = mu_i / self._w[:, None]
            dynamics = -mu_d / self._w[:, None]
        return CovectorMultipliers(
            state_interp=state_interp,
            dynamics=dynamics,
            equivalency=-mu[self.row_equiv],
            endpoint=mu[self.row_endpoint].copy(),
            raw=mu.copy(),
        )

    def unrelabel(self, cov: CovectorMultipliers) -> Array:
        """Inverse of :meth:`relabel`; exact when the container carries the
        original vector, algebraic otherwise."""
        if cov.raw is not None:
            return cov.raw.copy()
        mu = np.empty(self.n_rows)
        if self.form.starred:
            mu_i = cov.state_interp
            mu_d = -cov.dynamics
        elif self.form.scaled:
            mu_i = cov.state_interp * self._w[:, None]
            mu_d = -cov.dynamics
        else:
            mu_i = cov.state_interp * self._w[:, None]
            mu_d = -cov.dynamics * self._w[:, None]
        mu[self.row_interp] = mu_i.ravel()
        mu[self.row_dyn] = mu_d.ravel()
        mu[self.row_equiv] = -cov.equivalency
        mu[self.row_endpoint] = cov.endpoint
        return mu

    # --- serialization -----------------------------------------------------------

    def to_json_dict(self) -> dict:
        def span(s: slice):
            return [s.start or 0, s.stop]

        return {
            "problem": self.ocp.name,
            "form": {"tag": self.form.tag.value, "scaled": self.form.scaled},
            "sizes": {
                "N": self.sys.N,
                "n_x": self.n_x,
                "n_u": self.n_u,
                "n_e": self.n_e,
                "decision": self.n_z,
                "constraint_rows": self.n_rows,
                "equality_rows": int(np.count_nonzero(self.equality_mask)),
            },
            "layout": {
                "X": span(self.slice_x),
                "U": span(self.slice_u),
                "V": span(self.slice_v),
                "x_a": span(self.slice_xa),
                "x_b": span(self.slice_xb),
            },
            "rows": {
                "state_interpolation": span(self.row_interp),
                "dynamics": span(self.row_dyn),
                "grid_equivalency": span(self.row_equiv),
                "endpoint": span(self.row_endpoint),
            },
            "tolerances": {"feasibility": self.feas_tol},
            # the constant blocks are fully determined by the grid
            "constant_matrices": "by reference: rebuild from the grid entry",
            "grid": self.sys.grid.to_json_dict(),
        }

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def transcribe(
    ocp: OcpDefinition,
    sys: BirkhoffSystem,
    form: PrimalForm,
    feas_tol: float = DEFAULT_FEASIBILITY_TOL,
) -> DiscretizedNlp:
    """Discretize; staged running costs are absorbed into a cost state first."""
    if not sys.grid.endpoint_inclusive:
        raise UnsupportedGridError("transcription requires an endpoint-inclusive grid")
    dom = sys.grid.domain
    if not np.allclose(dom, ocp.horizon, rtol=1e-12, atol=1e-12):
        raise DomainMismatchError(
            f"grid domain {tuple(dom)} does not match problem horizon {ocp.horizon}"
        )
    return DiscretizedNlp(prepared(ocp), sys, form, feas_tol=feas_tol)


def residual_and_jacobian(nlp: DiscretizedNlp, z: Array):
    """(residuals, sparse Jacobian, objective, objective gradient) at z."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ShapeError("decision vector must be finite")
    return (
        nlp.constraints(z),
        scipy.sparse.csr_matrix(nlp.jacobian(z)),
        nlp.objective(z),
        nlp.objective_gradient(z),
    )


# --- initial guesses ---------------------------------------------------------

GUESS_STRATEGIES = ("constant-midpoint", "linear-endpoint-interpolation", "user-supplied")


def endpoint_seed(con, n: int):
    """Gauss-Newton on the equality endpoint rows from the origin; gives the
    pinned values exactly for linear boundary conditions."""
    x_a, x_b = np.zeros(n), np.zeros(n)
    eq = con.equality_mask()
    if not eq.any():
        return x_a, x_b
    for _ in range(8):
        r = np.asarray(con.fun(x_a, x_b), dtype=float)[eq]
        if np.max(np.abs(r)) < 1e-12:
            break
        jac = np.hstack(
            [
                np.asarray(con.jac_xa(x_a, x_b), dtype=float)[eq],
                np.asarray(con.jac_xb(x_a, x_b), dtype=float)[eq],
            ]
        )
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        x_a = x_a + step[:n]
        x_b = x_b + step[n:]
    return x_a, x_b


def initial_guess(nlp: DiscretizedNlp, strategy: str = "constant-midpoint", user=None) -> Array:
    if strategy == "user-supplied":
        z = np.asarray(user, dtype=float)
        if z.shape != (nlp.n_z,):
            raise ShapeError(
                f"user guess has shape {z.shape}, expected ({nlp.n_z},)"
            )
        if not np.all(np.isfinite(z)):
            raise ShapeError("user guess contains non-finite entries")
        return z.copy()
    if strategy not in GUESS_STRATEGIES:
        raise NotFoundError(f"unknown guess strategy {strategy!r}; use one of {GUESS_STRATEGIES}")

    m, n = nlp.n_nodes, nlp.n_x
    x_a, x_b = endpoint_seed(nlp.ocp.constraints, n)
    U = np.zeros((m, nlp.n_u))
    if strategy == "constant-midpoint":
        X = np.tile(0.5 * (x_a + x_b), (m, 1))
        V = np.zeros((m, n))
    else:
        t0, tf = nlp.ocp.horizon
        theta = (nlp.sys.grid.nodes - t0) / (tf - t0)
        X = x_a[None, :] + theta[:, None] * (x_b - x_a)[None, :]
        V = np.tile((x_b - x_a) / (tf - t0), (m, 1))
    z = nlp.pack(X, U, V, x_a, x_b)
    assert np.all(np.isfinite(z))
    return z


def extract_primal(nlp: DiscretizedNlp, z: Array) -> PrimalSolution:
    X, U, V, x_a, x_b = nlp.unpack(z)
    r = nlp.constraints(z)
    viol = np.where(nlp.equality_mask, np.abs(r), np.maximum(r, 0.0))
    return PrimalSolution(
        X=X,
        U=U,
        V=V,
        x_a=x_a,
        x_b=x_b,
        objective=nlp.objective(z),
        feasibility=float(np.max(viol)) if viol.size else 0.0,
    )
