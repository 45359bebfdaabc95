"""MILP formulations of the joint scheduling and data-allocation problem.

One emitter covers the whole family.  Decision groups can independently be
left free or pinned to constants, and the emitter picks, per constraint
family, the tightest linear form the pins allow:

* precedence coupling uses exact binary-product linearization when both the
  assignment X and the order Y are free, and collapses to plain big-A rows
  or pure timing rows as one or both get pinned;
* the transfer-stage rows use X*Z product variables only when both sides
  are free.

Pinned binaries stay in the model as fixed-bound variables, so every family
member exposes the same variable set.  That keeps warm starts, extraction
and file export uniform, and lets a solution of one model seed any other.

Big-A rows never appear with a pinned activation: a deactivated row is
simply not emitted, which keeps the relaxations tight and the row count
proportional to what is actually undecided.
"""

from __future__ import annotations

import numpy as np

from .environment import GridEnvironment
from .evaluator import compute_big_a, evaluate
from .schedule import Schedule, order_from_tournament


class ModelError(ValueError):
    """Inconsistent builder arguments."""


class MilpModel:
    """A built model: variables, rows in CSR form, objective, warm start.

    Not meant to be constructed directly; use the ``build_*`` functions.
    """

    def __init__(self, kind, names, lower, upper, integer, objective,
                 row_names, row_lower, row_upper, indptr, indices, data,
                 big_a, warm_start):
        self.kind = kind
        self.names = names
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        self.integer = np.asarray(integer, dtype=bool)
        self.objective = np.asarray(objective, dtype=np.float64)
        self.row_names = row_names
        self.row_lower = np.asarray(row_lower, dtype=np.float64)
        self.row_upper = np.asarray(row_upper, dtype=np.float64)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        self.big_a = big_a
        self.warm_start = warm_start
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.row_names)

    def var_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"model has no variable named {name!r}") from None

    def row_terms(self, r: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[r], self.indptr[r + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def vector_from(self, values) -> np.ndarray:
        """Dense variable vector from a name-to-value mapping (all required)."""
        x = np.empty(self.num_vars, dtype=np.float64)
        for i, name in enumerate(self.names):
            if name not in values:
                raise KeyError(f"assignment is missing variable {name!r}")
            x[i] = values[name]
        return x

    def objective_value(self, values) -> float:
        x = values if isinstance(values, np.ndarray) else self.vector_from(values)
        return float(self.objective @ x)

    def check_assignment(self, values, tol: float = 1e-6) -> list[str]:
        """Constraint, bound and integrality violations of an assignment.

        Returns human-readable violation strings, empty when the point is
        feasible.  Tolerances scale with each row's absolute activity so
        rows carrying the big-A constant are not judged more harshly than
        their arithmetic allows.
        """
        x = values if isinstance(values, np.ndarray) else self.vector_from(values)
        problems = []
        for i in np.flatnonzero(self.integer):
            if abs(x[i] - round(x[i])) > tol:
                problems.append(f"{self.names[i]} = {x[i]!r} is not integral")
        scale = np.maximum(1.0, np.maximum(np.abs(self.lower), np.abs(self.upper)))
        scale[~np.isfinite(scale)] = 1.0
        low = x < self.lower - tol * scale
        high = x > self.upper + tol * scale
        for i in np.flatnonzero(low | high):
            problems.append(
                f"{self.names[i]} = {x[i]!r} outside bounds "
                f"[{self.lower[i]!r}, {self.upper[i]!r}]"
            )
        for r in range(self.num_rows):
            cols, coefs = self.row_terms(r)
            terms = coefs * x[cols]
            act = terms.sum()
            slack = tol * max(1.0, np.abs(terms).sum())
            if act < self.row_lower[r] - slack or act > self.row_upper[r] + slack:
                problems.append(
                    f"row {self.row_names[r]}: activity {act!r} outside "
                    f"[{self.row_lower[r]!r}, {self.row_upper[r]!r}]"
                )
        return problems


class _Builder:
    def __init__(self, kind):
        self.kind = kind
        self.names = []
        self.lower = []
        self.upper = []
        self.integer = []
        self.index = {}
        self.row_names = []
        self.row_lower = []
        self.row_upper = []
        self.indptr = [0]
        self.indices = []
        self.data = []

    def var(self, name, lo=0.0, hi=np.inf, is_int=False):
        i = len(self.names)
        self.index[name] = i
        self.names.append(name)
        self.lower.append(lo)
        self.upper.append(hi)
        self.integer.append(is_int)
        return i

    def binary(self, name, pin=None):
        if pin is None:
            return self.var(name, 0.0, 1.0, True)
        return self.var(name, float(pin), float(pin), True)

    def row(self, name, terms, lo=-np.inf, hi=np.inf):
        self.row_names.append(name)
        self.row_lower.append(lo)
        self.row_upper.append(hi)
        for col, coef in terms:
            self.indices.append(col)
            self.data.append(coef)
        self.indptr.append(len(self.indices))

    def finish(self, objective_var, big_a, warm_start):
        objective = np.zeros(len(self.names))
        objective[objective_var] = 1.0
        return MilpModel(
            self.kind, self.names, self.lower, self.upper, self.integer,
            objective, self.row_names, self.row_lower, self.row_upper,
            self.indptr, self.indices, self.data, big_a, warm_start,
        )


def _one_hot(values, width):
    out = np.zeros((len(values), width))
    out[np.arange(len(values)), values] = 1.0
    return out


def _build(env: GridEnvironment, x_const=None, order_const=None, z_const=None,
           warm_schedule: Schedule | None = None) -> MilpModel:
    nj, nc = env.num_jobs, env.num_cns
    nd, nl = env.num_objects, env.num_local_sns

    pinned = "".join(p for p, c in
                     (("x", x_const), ("y", order_const), ("z", z_const))
                     if c is not None)
    kind = f"fixed-{pinned}" if pinned else "monolithic"

    if x_const is not None:
        x_const = np.asarray(x_const, dtype=np.int64)
        if x_const.shape != (nj,) or x_const.min() < 0 or x_const.max() >= nc:
            raise ModelError("x_const must assign every job a valid CN")
    y01 = None
    if order_const is not None:
        order_const = np.asarray(order_const, dtype=np.int64)
        if not np.array_equal(np.sort(order_const), np.arange(nj)):
            raise ModelError("order_const is not a permutation of all job ids")
        pos = np.empty(nj, dtype=np.int64)
        pos[order_const] = np.arange(nj)
        y01 = (pos[:, None] < pos[None, :]).astype(np.int64)
    if z_const is not None:
        z_const = np.asarray(z_const, dtype=np.int64)
        if z_const.shape != (nd,) or z_const.min() < 0 or z_const.max() >= nl:
            raise ModelError("z_const must place every object on a valid local SN")

    if warm_schedule is not None:
        if x_const is not None and not np.array_equal(warm_schedule.job_cn, x_const):
            raise ModelError("warm schedule contradicts the pinned assignment")
        if order_const is not None and not np.array_equal(warm_schedule.order, order_const):
            raise ModelError("warm schedule contradicts the pinned order")
        if z_const is not None and not np.array_equal(warm_schedule.object_sn, z_const):
            raise ModelError("warm schedule contradicts the pinned placement")

    big_a = compute_big_a(env)
    sizes = env.object_sizes
    rd = env.remote_delay_table()                                   # (D, L)
    ld = sizes[:, None, None] / env.lan_bandwidth[None, :, :]       # (D, L, C)
    exec_coef = env.gamma * env.job_input_sizes()[:, None] / env.cn_speeds[None, :]

    b = _Builder(kind)
    m = b.var("m")
    u = [b.var(f"u[{j}]") for j in range(nj)]
    v = [b.var(f"v[{j}]") for j in range(nj)]
    e = [b.var(f"e[{j}]") for j in range(nj)]
    t = [b.var(f"t[{d}]") for d in range(nd)]
    x = [[b.binary(f"X[{j},{c}]",
                   None if x_const is None else int(x_const[j] == c))
          for c in range(nc)] for j in range(nj)]
    y = {}
    for i in range(nj):
        for j in range(nj):
            if i != j:
                y[i, j] = b.binary(f"Y[{i},{j}]",
                                   None if y01 is None else int(y01[i, j]))
    z = [[b.binary(f"Z[{d},{l}]",
                   None if z_const is None else int(z_const[d] == l))
          for l in range(nl)] for d in range(nd)]

    for j in range(nj):
        b.row(f"makespan[{j}]", [(m, 1.0), (v[j], -1.0), (e[j], -1.0)], lo=0.0)
        b.row(f"assign[{j}]", [(x[j][c], 1.0) for c in range(nc)], lo=1.0, hi=1.0)
        b.row(f"exec[{j}]",
              [(e[j], 1.0)] + [(x[j][c], -exec_coef[j, c]) for c in range(nc)],
              lo=0.0, hi=0.0)
        b.row(f"vu[{j}]", [(v[j], 1.0), (u[j], -1.0)], lo=0.0)
    for i in range(nj):
        for j in range(i + 1, nj):
            b.row(f"orderpair[{i},{j}]", [(y[i, j], 1.0), (y[j, i], 1.0)],
                  lo=1.0, hi=1.0)
    for d in range(nd):
        b.row(f"replica[{d}]", [(z[d][l], 1.0) for l in range(nl)], lo=1.0, hi=1.0)
        b.row(f"tdelay[{d}]",
              [(t[d], 1.0)] + [(z[d][l], -rd[d, l]) for l in range(nl)],
              lo=0.0, hi=0.0)

    # precedence coupling: whenever i precedes j on a shared CN, j's slot
    # starts no earlier than i completes
    products = {}
    if x_const is None and y01 is None:
        for i in range(nj):
            for j in range(nj):
                if i == j:
                    continue
                for c in range(nc):
                    w1 = b.binary(f"W1[{i},{j},{c}]")
                    w2 = b.binary(f"W2[{i},{j},{c}]")
                    products[f"W1[{i},{j},{c}]"] = (y[i, j], x[i][c])
                    products[f"W2[{i},{j},{c}]"] = (y[i, j], x[j][c])
                    _link_product(b, f"W1[{i},{j},{c}]", w1, y[i, j], x[i][c])
                    _link_product(b, f"W2[{i},{j},{c}]", w2, y[i, j], x[j][c])
                    b.row(f"prec[{i},{j},{c}]",
                          [(u[j], 1.0), (w1, -big_a), (w2, -big_a),
                           (y[i, j], big_a), (v[i], -1.0), (e[i], -1.0)],
                          lo=-big_a)
    elif x_const is None:
        # order known: couple only realized predecessor pairs, across every
        # CN they might share
        for i in range(nj):
            for j in range(nj):
                if i != j and y01[i, j]:
                    for c in range(nc):
                        b.row(f"prec[{i},{j},{c}]",
                              [(u[j], 1.0), (x[i][c], -big_a), (x[j][c], -big_a),
                               (v[i], -1.0), (e[i], -1.0)],
                              lo=-2.0 * big_a)
    elif y01 is None:
        # assignment known: couple ordered pairs that actually share a CN
        for i in range(nj):
            for j in range(nj):
                if i != j and x_const[i] == x_const[j]:
                    b.row(f"prec[{i},{j}]",
                          [(u[j], 1.0), (y[i, j], -big_a),
                           (v[i], -1.0), (e[i], -1.0)],
                          lo=-big_a)
    else:
        for i in range(nj):
            for j in range(nj):
                if i != j and x_const[i] == x_const[j] and y01[i, j]:
                    b.row(f"prec[{i},{j}]",
                          [(u[j], 1.0), (v[i], -1.0), (e[i], -1.0)], lo=0.0)

    # transfer stages: inputs reach the CN only after replication (via t_d)
    # and no earlier than the job's slot start
    for j in range(nj):
        for d in env.job_inputs[j]:
            if x_const is None and z_const is None:
                terms_t = [(v[j], 1.0), (t[d], -1.0)]
                terms_u = [(v[j], 1.0), (u[j], -1.0)]
                for l in range(nl):
                    for c in range(nc):
                        name = f"XZ[{j},{d},{l},{c}]"
                        p = b.binary(name)
                        products[name] = (x[j][c], z[d][l])
                        _link_product(b, name, p, x[j][c], z[d][l])
                        terms_t.append((p, -ld[d, l, c]))
                        terms_u.append((p, -ld[d, l, c]))
                b.row(f"stage_t[{j},{d}]", terms_t, lo=0.0)
                b.row(f"stage_u[{j},{d}]", terms_u, lo=0.0)
            elif x_const is None:
                l = int(z_const[d])
                coefs = [(x[j][c], -ld[d, l, c]) for c in range(nc)]
                b.row(f"stage_t[{j},{d}]", [(v[j], 1.0), (t[d], -1.0)] + coefs, lo=0.0)
                b.row(f"stage_u[{j},{d}]", [(v[j], 1.0), (u[j], -1.0)] + coefs, lo=0.0)
            elif z_const is None:
                c = int(x_const[j])
                coefs = [(z[d][l], -ld[d, l, c]) for l in range(nl)]
                b.row(f"stage_t[{j},{d}]", [(v[j], 1.0), (t[d], -1.0)] + coefs, lo=0.0)
                b.row(f"stage_u[{j},{d}]", [(v[j], 1.0), (u[j], -1.0)] + coefs, lo=0.0)
            else:
                delay = ld[d, int(z_const[d]), int(x_const[j])]
                b.row(f"stage_t[{j},{d}]", [(v[j], 1.0), (t[d], -1.0)], lo=delay)
                b.row(f"stage_u[{j},{d}]", [(v[j], 1.0), (u[j], -1.0)], lo=delay)

    warm = None
    if warm_schedule is not None:
        warm = _warm_values(env, b.names, products, warm_schedule)
    return b.finish(m, big_a, warm)


def _link_product(b, name, p, a1, a2):
    # p = a1 * a2 for binaries
    b.row(f"{name}:le1", [(p, 1.0), (a1, -1.0)], hi=0.0)
    b.row(f"{name}:le2", [(p, 1.0), (a2, -1.0)], hi=0.0)
    b.row(f"{name}:ge", [(p, 1.0), (a1, -1.0), (a2, -1.0)], lo=-1.0)


def _warm_values(env, names, products, schedule: Schedule) -> dict[str, float]:
    rep = evaluate(env, schedule)
    xs = _one_hot(schedule.job_cn, env.num_cns)
    zs = _one_hot(schedule.object_sn, env.num_local_sns)
    ys = schedule.precedence_matrix()
    values = {"m": rep.makespan}
    for j in range(env.num_jobs):
        values[f"u[{j}]"] = float(rep.exec_start[j])
        values[f"v[{j}]"] = float(rep.ready[j])
        values[f"e[{j}]"] = float(rep.exec_length[j])
        for c in range(env.num_cns):
            values[f"X[{j},{c}]"] = xs[j, c]
    for i in range(env.num_jobs):
        for j in range(env.num_jobs):
            if i != j:
                values[f"Y[{i},{j}]"] = float(ys[i, j])
    for d in range(env.num_objects):
        values[f"t[{d}]"] = float(rep.replication_done[d])
        for l in range(env.num_local_sns):
            values[f"Z[{d},{l}]"] = zs[d, l]
    flat = {name: values[name] for name in names if name in values}
    for name, (i1, i2) in products.items():
        flat[name] = values[names[i1]] * values[names[i2]]
    return flat


# -- public builders ----------------------------------------------------------


def build_monolithic(env: GridEnvironment, warm_schedule: Schedule | None = None) -> MilpModel:
    """Exact joint model: assignment, order and placement all free."""
    return _build(env, warm_schedule=warm_schedule)


def build_fixed_yz(env: GridEnvironment, order, object_sn, warm_cn=None) -> MilpModel:
    """Optimize the job-to-CN assignment under a pinned order and placement."""
    warm = None
    if warm_cn is not None:
        warm = Schedule(job_cn=warm_cn, order=order, object_sn=object_sn)
    return _build(env, order_const=order, z_const=object_sn, warm_schedule=warm)


def build_fixed_x(env: GridEnvironment, job_cn, warm_order=None, warm_object_sn=None,
                  fix_order=None) -> MilpModel:
    """Optimize order and placement under a pinned assignment.

    ``fix_order`` additionally pins the order, leaving only the placement
    free (the data-allocation-only model).
    """
    warm = None
    if (warm_order is None) != (warm_object_sn is None):
        raise ModelError("warm_order and warm_object_sn must be given together")
    if warm_order is not None:
        warm = Schedule(job_cn=job_cn, order=warm_order, object_sn=warm_object_sn)
    return _build(env, x_const=job_cn, order_const=fix_order, warm_schedule=warm)


def build_fixed_all(env: GridEnvironment, schedule: Schedule) -> MilpModel:
    """Every decision pinned; only the timing variables remain.

    The LP optimum of this model equals the replayed makespan of the same
    schedule, which makes it the consistency bridge between the evaluator
    and the MILP family.
    """
    return _build(env, x_const=schedule.job_cn, order_const=schedule.order,
                  z_const=schedule.object_sn)


def extract_schedule(env: GridEnvironment, values) -> Schedule:
    """Schedule encoded by a feasible model assignment.

    Reads the one-hot groups by arg-max and canonicalizes the precedence
    matrix into a priority list.  Requires the full variable assignment of
    any model in the family (they all share the naming scheme).
    """
    nj, nc = env.num_jobs, env.num_cns
    nd, nl = env.num_objects, env.num_local_sns
    xs = np.array([[values[f"X[{j},{c}]"] for c in range(nc)] for j in range(nj)])
    zs = np.array([[values[f"Z[{d},{l}]"] for l in range(nl)] for d in range(nd)])
    job_cn = xs.argmax(axis=1)
    object_sn = zs.argmax(axis=1)
    wins = np.zeros((nj, nj), dtype=np.int64)
    for i in range(nj):
        for j in range(nj):
            if i != j:
                wins[i, j] = int(round(values[f"Y[{i},{j}]"]))
    order = order_from_tournament(wins, job_cn)
    return Schedule(job_cn=job_cn, order=order, object_sn=object_sn)


def write_mps(model: MilpModel, path) -> None:
    """Write the model as a free-format MPS file."""
    def clean(name):
        return name.replace("[", "_").replace(",", "_").replace("]", "").replace(":", "_")

    rows_kind = []
    for r in range(model.num_rows):
        lo, hi = model.row_lower[r], model.row_upper[r]
        if lo == hi:
            rows_kind.append("E")
        elif np.isfinite(lo) and np.isfinite(hi):
            rows_kind.append("G")  # with a RANGES entry
        elif np.isfinite(lo):
            rows_kind.append("G")
        else:
            rows_kind.append("L")

    by_col = [[] for _ in range(model.num_vars)]
    for r in range(model.num_rows):
        cols, coefs = model.row_terms(r)
        for col, coef in zip(cols, coefs):
            by_col[col].append((r, coef))

    lines = ["NAME gridopt", "ROWS", " N  OBJ"]
    for r, kind in enumerate(rows_kind):
        lines.append(f" {kind}  {clean(model.row_names[r])}")
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for i, name in enumerate(model.names):
        if model.integer[i] != in_int:
            flag = "'INTORG'" if model.integer[i] else "'INTEND'"
            lines.append(f"    MARKER{marker}  'MARKER'  {flag}")
            marker += 1
            in_int = bool(model.integer[i])
        col = clean(name)
        if model.objective[i]:
            lines.append(f"    {col}  OBJ  {model.objective[i]!r}")
        for r, coef in by_col[i]:
            lines.append(f"    {col}  {clean(model.row_names[r])}  {coef!r}")
    if in_int:
        lines.append(f"    MARKER{marker}  'MARKER'  'INTEND'")
    lines.append("RHS")
    for r, kind in enumerate(rows_kind):
        rhs = model.row_lower[r] if kind in ("E", "G") else model.row_upper[r]
        if rhs:
            lines.append(f"    RHS  {clean(model.row_names[r])}  {rhs!r}")
    ranged = [r for r in range(model.num_rows)
              if np.isfinite(model.row_lower[r]) and np.isfinite(model.row_upper[r])
              and model.row_lower[r] != model.row_upper[r]]
    if ranged:
        lines.append("RANGES")
        for r in ranged:
            span = model.row_upper[r] - model.row_lower[r]
            lines.append(f"    RNG  {clean(model.row_names[r])}  {span!r}")
    lines.append("BOUNDS")
    for i, name in enumerate(model.names):
        col = clean(name)
        lo, hi = model.lower[i], model.upper[i]
        if lo == hi:
            lines.append(f" FX BND  {col}  {lo!r}")
        elif model.integer[i]:
            lines.append(f" LI BND  {col}  {int(lo)}")
            lines.append(f" UI BND  {col}  {int(hi)}")
        else:
            if lo != 0.0:
                lines.append(f" LO BND  {col}  {lo!r}")
            if np.isfinite(hi):
                lines.append(f" UP BND  {col}  {hi!r}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
