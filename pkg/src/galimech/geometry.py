"""Derived geometric structure on spacetime and phase-space charts.

Everything is expressed in the coordinate basis with the ordering
(d0, d^a, dv^a) on phase space.  Two-forms are represented by their
evaluation matrices M[A][B] = omega(e_A, e_B) under the wedge convention
(alpha ^ beta)(X, Y) = alpha(X) beta(Y) - alpha(Y) beta(X).

Index conventions: spacetime indices lam, mu run 0..n with 0 the time
slot; spatial indices a, b, h, k run 1..n; the velocity slot of spatial
index a is n+a.

Connection coefficients follow the sign convention in which the geodesic
acceleration is a *plus* contraction, i.e. the spatial coefficients of a
metric-compatible connection are minus the usual Christoffel symbols.
"""

import numpy as np

from . import duals
from .fields import Field, ZERO, as_field, constant
from .units import ScaledScalar, DIMENSIONLESS


class SingularMetricError(RuntimeError):
    """Metric failed a positive-definiteness probe."""


class SingularOmegaError(RuntimeError):
    """Constrained contraction solve was rank deficient."""


def _sym_key(a, b):
    return (a, b) if a <= b else (b, a)


class Metric:
    """Spacelike metric: symmetric positive-definite matrix of fields on E."""

    def __init__(self, chart, entries):
        """``entries`` maps (a, b) with 1 <= a <= b <= n to a Field."""
        self.chart = chart
        self._e = {}
        n = chart.n
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                f = entries.get((a, b), ZERO if a != b else None)
                if f is None:
                    raise ValueError(f"metric diagonal entry ({a},{a}) missing")
                self._e[(a, b)] = as_field(f)
        self.is_constant = all(f.const_value is not None for f in self._e.values())
        self._const_mat = None
        self._const_inv = None
        if self.is_constant:
            m = [
                [self._e[_sym_key(a, b)].const_value for b in range(1, n + 1)]
                for a in range(1, n + 1)
            ]
            self._const_mat = m
            self._const_inv = np.linalg.inv(np.array(m)).tolist()

    def entry(self, a, b):
        return self._e[_sym_key(a, b)]

    def mat(self, xs):
        n = self.chart.n
        if self._const_mat is not None:
            return [row[:] for row in self._const_mat]
        vals = {k: f(xs) for k, f in self._e.items()}
        return [[vals[_sym_key(a, b)] for b in range(1, n + 1)] for a in range(1, n + 1)]

    def inv(self, xs):
        if self._const_inv is not None:
            return [row[:] for row in self._const_inv]
        return duals.invert_generic(self.mat(xs))

    def check_spd(self, points):
        """Cholesky probe at sample points; raises on failure."""
        for xs in points:
            m = np.array([[float(v) for v in row] for row in self.mat(xs)])
            try:
                np.linalg.cholesky(m)
            except np.linalg.LinAlgError:
                raise SingularMetricError(
                    f"metric not positive definite at {list(xs)}"
                ) from None


def identity_metric(chart):
    return Metric(
        chart,
        {(a, b): constant(1.0 if a == b else 0.0) for a in range(1, chart.n + 1) for b in range(a, chart.n + 1)},
    )


class SpacetimeConnection:
    """dt-preserving torsion-free linear connection, stored by its
    coefficient fields K[lam][i][mu] with the (lam, mu) symmetry shared
    structurally (one field object per unordered pair)."""

    def __init__(self, chart, sym):
        """``sym`` maps (lam, mu) with lam <= mu to a list of n fields
        (component index i = 1..n)."""
        self.chart = chart
        n = chart.n
        self.sym = {}
        for lam in range(0, n + 1):
            for mu in range(lam, n + 1):
                fields = sym.get((lam, mu))
                if fields is None:
                    fields = [ZERO] * n
                self.sym[(lam, mu)] = list(fields)

    def entry(self, lam, i, mu):
        """Coefficient field K_lam^i_mu (i spatial, 1..n)."""
        return self.sym[_sym_key(lam, mu)][i - 1]

    def values(self, xs):
        """All coefficients at a point: dict {(lam, mu): [n values]}."""
        return {k: [f(xs) for f in fs] for k, fs in self.sym.items()}

    def is_flat_zero(self):
        return all(f.is_zero for fs in self.sym.values() for f in fs)


def zero_connection(chart):
    return SpacetimeConnection(chart, {})


def metric_connection(chart, G, phi2=None, time_gauge=None, probe_points=None):
    """Metric-compatible connection with explicit gauge inputs.

    The spatial block and the symmetric time part are determined by the
    metric; ``phi2`` (antisymmetric spatial fields, entered as a dict
    {(a, b): Field} for a < b) fixes the antisymmetric part of the lowered
    time-space coefficients, and ``time_gauge`` (n fields, raised index)
    fixes the time-time coefficients.  Both default to zero.
    """
    n = chart.n
    phi2 = {k: as_field(f) for k, f in (phi2 or {}).items() if not as_field(f).is_zero}
    if probe_points is not None:
        G.check_spd(probe_points)

    # per-point shared state: the metric inverse and the metric partials are
    # reused across all coefficient fields evaluated at the same point
    import threading

    local = threading.local()

    def shared(xs):
        st = getattr(local, "st", None)
        if st is None or st["xs"] is not xs:
            st = {"xs": xs, "ginv": None, "dg": {}}
            local.st = st
        return st

    def ginv_at(xs):
        st = shared(xs)
        if st["ginv"] is None:
            st["ginv"] = G.inv(xs)
        return st["ginv"]

    def dg(xs, lam, a, b):
        st = shared(xs)
        key = (lam, a, b) if a <= b else (lam, b, a)
        if key not in st["dg"]:
            st["dg"][key] = G.entry(key[1], key[2]).partial((lam,), xs)
        return st["dg"][key]

    def make_spatial(a, b):
        def vec(xs):
            ginv = ginv_at(xs)
            low = [
                -0.5 * (dg(xs, a, h, b) + dg(xs, b, h, a) - dg(xs, h, a, b))
                for h in range(1, n + 1)
            ]
            return [
                sum(ginv[i - 1][h - 1] * low[h - 1] for h in range(1, n + 1))
                for i in range(1, n + 1)
            ]

        return vec

    def make_time_space(b):
        def vec(xs):
            ginv = ginv_at(xs)
            low = []
            for h in range(1, n + 1):
                v = -0.5 * dg(xs, 0, h, b)
                key = _sym_key(h, b)
                if key in phi2 and h != b:
                    sgn = 1.0 if h < b else -1.0
                    v = v + 0.5 * sgn * phi2[key](xs)
                low.append(v)
            return [
                sum(ginv[i - 1][h - 1] * low[h - 1] for h in range(1, n + 1))
                for i in range(1, n + 1)
            ]

        return vec

    sym = {}
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            if G.is_constant:
                sym[(a, b)] = [ZERO] * n
                continue
            vec = make_spatial(a, b)
            sym[(a, b)] = [
                Field(lambda xs, v=vec, i=i: v(xs)[i - 1]) for i in range(1, n + 1)
            ]
    for b in range(1, n + 1):
        if G.is_constant and not any(b in key for key in phi2):
            sym[(0, b)] = [ZERO] * n
            continue
        vec = make_time_space(b)
        sym[(0, b)] = [
            Field(lambda xs, v=vec, i=i: v(xs)[i - 1]) for i in range(1, n + 1)
        ]
    if time_gauge is not None:
        sym[(0, 0)] = [as_field(f) for f in time_gauge]
    return SpacetimeConnection(chart, sym)


def gauge_from_potential(G, A):
    """Gauge inputs (phi2, time_gauge) of a metric connection induced by a
    spacetime 1-form potential, chosen so the derived two-form is exact."""
    chart = G.chart
    n = chart.n
    if all(as_field(a).is_zero for a in A):
        return {}, None
    phi2 = {}
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            def fn(xs, a=a, b=b):
                return A[b].partial((a,), xs) - A[a].partial((b,), xs)

            phi2[(a, b)] = Field(fn)

    def tg_vec(xs):
        ginv = G.inv(xs)
        low = [A[0].partial((a,), xs) - A[a].partial((0,), xs) for a in range(1, n + 1)]
        return [
            sum(ginv[i - 1][a - 1] * low[a - 1] for a in range(1, n + 1))
            for i in range(1, n + 1)
        ]

    time_gauge = [Field(lambda xs, v=tg_vec, i=i: v(xs)[i - 1]) for i in range(1, n + 1)]
    return phi2, time_gauge


class PhaseConnection:
    """Affine connection of the velocity bundle.

    ``vel[(lam, k)]`` holds the n fields multiplying v^k in the lift along
    d^lam; ``aff[lam]`` the velocity-independent part.  The correspondence
    with a spacetime connection is pure re-indexing, so the maps below
    share field objects and round-trip exactly.
    """

    def __init__(self, chart, vel, aff):
        self.chart = chart
        self.vel = vel
        self.aff = aff

    def lift_values(self, xs):
        """gl[k][lam]: value of the lift coefficient for component k along
        d^lam, as a full (affine in velocity) function of the phase point."""
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        vel_vals = {key: [f(xs) for f in fs] for key, fs in self.vel.items()}
        aff_vals = {lam: [f(xs) for f in fs] for lam, fs in self.aff.items()}
        gl = []
        for k in range(1, n + 1):
            row = []
            for lam in range(0, n + 1):
                s = aff_vals[lam][k - 1]
                for j in range(1, n + 1):
                    s = s + vel_vals[(lam, j)][k - 1] * v[j - 1]
                row.append(s)
            gl.append(row)
        return gl


def phase_from_spacetime(K):
    chart = K.chart
    n = chart.n
    vel = {}
    aff = {}
    for lam in range(0, n + 1):
        vel.update({(lam, k): K.sym[_sym_key(lam, k)] for k in range(1, n + 1)})
        aff[lam] = K.sym[_sym_key(lam, 0)]
    return PhaseConnection(chart, vel, aff)


def spacetime_from_phase(gamma):
    chart = gamma.chart
    n = chart.n
    sym = {}
    for lam in range(0, n + 1):
        for mu in range(lam, n + 1):
            if mu == 0:
                sym[(lam, mu)] = gamma.aff[lam]
            else:
                sym[(lam, mu)] = gamma.vel[(lam, mu)]
    return SpacetimeConnection(chart, sym)


class DynamicalConnection:
    """Second-order connection with coefficients polynomial in velocity."""

    def __init__(self, chart, quad, lin, const):
        self.chart = chart
        self.quad = quad  # {(h, k) h <= k: [n fields]}
        self.lin = lin  # {h: [n fields]}
        self.const = const  # [n fields]

    def gamma00_values(self, xs):
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        out = []
        quad_vals = {key: [f(xs) for f in fs] for key, fs in self.quad.items()}
        lin_vals = {h: [f(xs) for f in fs] for h, fs in self.lin.items()}
        const_vals = [f(xs) for f in self.const]
        for i in range(self.chart.n):
            s = const_vals[i]
            for h in range(1, n + 1):
                s = s + 2.0 * lin_vals[h][i] * v[h - 1]
                for k in range(h, n + 1):
                    mult = 1.0 if h == k else 2.0
                    s = s + mult * quad_vals[(h, k)][i] * v[h - 1] * v[k - 1]
            out.append(s)
        return out

    def vector_values(self, xs):
        """Components of the associated phase vector field (time part 1)."""
        n = self.chart.n
        return [1.0, *xs[n + 1 : 2 * n + 1], *self.gamma00_values(xs)]


def dynamical_from_phase(gamma):
    chart = gamma.chart
    n = chart.n
    quad = {}
    lin = {}
    for h in range(1, n + 1):
        lin[h] = gamma.aff[h]
        for k in range(h, n + 1):
            quad[(h, k)] = gamma.vel[(h, k)]
    return DynamicalConnection(chart, quad, lin, gamma.aff[0])


def phase_from_dynamical(dyn):
    chart = dyn.chart
    n = chart.n
    vel = {}
    aff = {0: dyn.const}
    for h in range(1, n + 1):
        aff[h] = dyn.lin[h]
        vel[(0, h)] = dyn.lin[h]
        for k in range(1, n + 1):
            vel[(h, k)] = dyn.quad[_sym_key(h, k)]
    return PhaseConnection(chart, vel, aff)


class EMField:
    """Antisymmetric spacetime 2-form with particle data.

    Stores the raw field entries f[(lam, mu)] for lam < mu; the coupling
    scale q/m multiplies everywhere the field enters derived objects.
    """

    def __init__(self, chart, entries, q, m):
        self.chart = chart
        self._e = {k: as_field(f) for k, f in entries.items()}
        for (lam, mu) in self._e:
            if not lam < mu:
                raise ValueError("field entries must be given with lam < mu")
        self.q = q if isinstance(q, ScaledScalar) else ScaledScalar(float(q), DIMENSIONLESS)
        self.m = m if isinstance(m, ScaledScalar) else ScaledScalar(float(m), DIMENSIONLESS)

    @property
    def coupling(self):
        return self.q.value / self.m.value

    def entry(self, lam, mu):
        if lam == mu:
            return ZERO
        if lam < mu:
            return self._e.get((lam, mu), ZERO)
        return -self._e.get((mu, lam), ZERO)

    def value(self, lam, mu, xs):
        if lam == mu:
            return 0.0
        sgn = 1.0
        if lam > mu:
            lam, mu, sgn = mu, lam, -1.0
        f = self._e.get((lam, mu))
        return 0.0 if f is None else sgn * f(xs)

    def raised_entry(self, G, i, lam):
        """Field for f^i_lam with the first index raised by the metric."""
        n = self.chart.n

        def fn(xs):
            ginv = G.inv(xs)
            return sum(
                ginv[i - 1][a - 1] * self.value(a, lam, xs) for a in range(1, n + 1)
            )

        return Field(fn)


class Observer:
    """Section of the phase bundle: n velocity fields on E."""

    def __init__(self, chart, comps=None):
        self.chart = chart
        self.comps = [as_field(c) for c in (comps or [ZERO] * chart.n)]

    def is_adapted(self):
        return all(c.is_zero for c in self.comps)

    def phase_point(self, xs_e):
        return list(xs_e[: self.chart.n + 1]) + [c(xs_e) for c in self.comps]


class PhaseTwoForm:
    """Cosymplectic two-form of a metric and a phase connection.

    Carries back-references to (G, Gamma); the associated second-order
    connection is the unique one annihilated by the form.
    """

    def __init__(self, G, gamma_conn):
        self.chart = G.chart
        self.G = G
        self.conn = gamma_conn
        self.dyn = dynamical_from_phase(gamma_conn)

    def matrix(self, xs):
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        gm = self.G.mat(xs)
        gl = self.conn.lift_values(xs)
        dim = 2 * n + 1
        m = [[0.0] * dim for _ in range(dim)]
        gv = [sum(gm[a][b] * v[b] for b in range(n)) for a in range(n)]
        for a in range(n):
            for b in range(n):
                m[n + 1 + a][1 + b] = gm[a][b]
                m[1 + b][n + 1 + a] = -gm[a][b]
            m[n + 1 + a][0] = -gv[a]
            m[0][n + 1 + a] = gv[a]
        for a in range(n):
            for b in range(n):
                s = sum(gm[a][k] * gl[k][1 + b] - gm[b][k] * gl[k][1 + a] for k in range(n))
                m[1 + a][1 + b] = s
        for b in range(n):
            s = -sum(gm[k][b] * gl[k][0] for k in range(n))
            s = s - sum(gv[k] * gl[k][1 + b] for k in range(n))
            m[0][1 + b] = s
            m[1 + b][0] = -s
        return m

    def contraction(self, vec_vals, xs):
        """Components of the one-form i_Y Omega for Y given by components."""
        m = self.matrix(xs)
        dim = len(m)
        return [
            sum(vec_vals[a] * m[a][b] for a in range(dim)) for b in range(dim)
        ]

    def nondegeneracy_det(self, xs):
        """Determinant probe for dt ^ Omega^n: first row is dt, the rest are
        the rows of Omega on the kernel basis of dt."""
        n = self.chart.n
        m = self.matrix(xs)
        dim = 2 * n + 1
        rows = [[1.0] + [0.0] * (dim - 1)]
        for a in range(1, dim):
            rows.append([float(x) for x in m[a]])
        return float(np.linalg.det(np.array(rows)))


def dynamical_two_form(G, gamma_conn, p):
    """Evaluation matrix of the two-form at a phase point."""
    return PhaseTwoForm(G, gamma_conn).matrix(p.coords() if hasattr(p, "coords") else p)


def minimal_coupling(omega, em):
    """Total structure absorbing an electromagnetic field.

    Returns the two-form of the total connection, whose time-space and
    time-time coefficients pick up the raised field entries scaled by
    q/(2m) and q/m respectively.  Entrywise the evaluation matrix equals
    the matrix of ``omega`` plus the (q/m)-scaled field embedded in the
    spacetime block.
    """
    if em is None or em.coupling == 0.0 or not em._e:
        return omega
    G = omega.G
    chart = G.chart
    n = chart.n
    k_nat = spacetime_from_phase(omega.conn)
    qm = em.coupling
    sym = {}
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            sym[(a, b)] = k_nat.sym[(a, b)]
    for b in range(1, n + 1):
        sym[(0, b)] = [
            k_nat.sym[(0, b)][i - 1] + constant(0.5 * qm) * em.raised_entry(G, i, b)
            for i in range(1, n + 1)
        ]
    sym[(0, 0)] = [
        k_nat.sym[(0, 0)][i - 1] + constant(qm) * em.raised_entry(G, i, 0)
        for i in range(1, n + 1)
    ]
    k_total = SpacetimeConnection(chart, sym)
    return PhaseTwoForm(G, phase_from_spacetime(k_total))


def euler_lagrange_matrix(G, dyn, p, accel):
    """Horizontal two-form of the motion residual at second-order data."""
    chart = G.chart
    n = chart.n
    xs = p.coords() if hasattr(p, "coords") else list(p)
    gm = G.mat(xs)
    g00 = dyn.gamma00_values(xs)
    m = [[0.0] * (n + 1) for _ in range(n + 1)]
    for b in range(n):
        s = sum(gm[a][b] * (accel[a] - g00[a]) for a in range(n))
        m[0][1 + b] = s
        m[1 + b][0] = -s
    return m


class PoincareCartan:
    """Horizontal potential one-form, stored by its metric and gauge data."""

    def __init__(self, G, A):
        self.chart = G.chart
        self.G = G
        self.A = [as_field(a) for a in A]

    def theta0(self, xs):
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        gm = self.G.mat(xs)
        kin = 0.0
        for a in range(n):
            for b in range(n):
                kin = kin + gm[a][b] * v[a] * v[b]
        return -0.5 * kin + self.A[0](xs)

    def theta_spatial(self, a, xs):
        """Component along d^a, a = 1..n."""
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        return (
            sum(self.G.entry(a, b)(xs) * v[b - 1] for b in range(1, n + 1))
            + self.A[a](xs)
        )

    def components(self, xs):
        n = self.chart.n
        out = [self.theta0(xs)]
        out += [self.theta_spatial(a, xs) for a in range(1, n + 1)]
        out += [0.0] * n
        return out


class LagrangianForm:
    """Time-horizontal part of a Poincare-Cartan form (its d0 coefficient)."""

    def __init__(self, G, A):
        self.chart = G.chart
        self.G = G
        self.A = A

    def value(self, xs):
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        gm = self.G.mat(xs)
        kin = 0.0
        for a in range(n):
            for b in range(n):
                kin = kin + gm[a][b] * v[a] * v[b]
        lin = sum(self.A[a](xs) * v[a - 1] for a in range(1, n + 1))
        return 0.5 * kin + lin + self.A[0](xs)


class MomentumForm:
    """Velocity derivative of the Lagrangian, contact-horizontal components."""

    def __init__(self, G, A):
        self.chart = G.chart
        self.G = G
        self.A = A

    def component(self, a, xs):
        n = self.chart.n
        v = xs[n + 1 : 2 * n + 1]
        return (
            sum(self.G.entry(a, b)(xs) * v[b - 1] for b in range(1, n + 1))
            + self.A[a](xs)
        )


def poincare_cartan(G, A):
    """Build the potential one-form from metric and gauge fields."""
    return PoincareCartan(G, A)


def lagrangian_and_momentum(theta):
    """Contact splitting of the potential form; shares its coefficient data."""
    return LagrangianForm(theta.G, theta.A), MomentumForm(theta.G, theta.A)


def cartan_from_lagrangian(lag, mom):
    """Inverse of the splitting; exact because the data is shared."""
    if lag.G is not mom.G or lag.A is not mom.A:
        raise ValueError("Lagrangian and momentum must come from one splitting")
    return PoincareCartan(lag.G, lag.A)


def observed_split(theta, observer):
    """Observer decomposition of a potential form.

    Returns the observed Hamiltonian as a phase function and the observed
    momentum components (the spatial components of the form, expressed in
    the observer's coframe d^a - o^a d^0).
    """
    n = theta.chart.n

    def ham(xs):
        s = theta.theta0(xs)
        for a in range(1, n + 1):
            c = observer.comps[a - 1]
            if not c.is_zero:
                s = s + c(xs) * theta.theta_spatial(a, xs)
        return -s

    moms = [
        (lambda xs, a=a: theta.theta_spatial(a, xs)) for a in range(1, n + 1)
    ]
    return ham, moms


def observed_two_form(omega, observer, xs_e):
    """Component matrix of the observed spacetime 2-form (twice the observer
    pullback of the phase 2-form; the doubling cancels against the
    antisymmetric-pair count, so for a flat model with a pure field the
    matrix reproduces the coupled field entries)."""
    chart = omega.chart
    n = chart.n
    phase_pt = observer.phase_point(xs_e)
    m = omega.matrix(phase_pt)
    # tangent map of the section: d(o^i)/dx^lam fills the velocity rows
    do = [
        [observer.comps[i].partial((lam,), xs_e) for lam in range(0, n + 1)]
        for i in range(n)
    ]
    out = [[0.0] * (n + 1) for _ in range(n + 1)]
    for lam in range(0, n + 1):
        for mu in range(0, n + 1):
            s = m[lam][mu]
            for i in range(n):
                s = s + do[i][mu] * m[lam][n + 1 + i]
                s = s + do[i][lam] * m[n + 1 + i][mu]
                for j in range(n):
                    s = s + do[i][lam] * do[j][mu] * m[n + 1 + i][n + 1 + j]
            out[lam][mu] = s
    return out


def closure_residual(omega, p):
    """Max cyclic-derivative residual of the two-form at a phase point."""
    xs = p.coords() if hasattr(p, "coords") else list(p)
    dim = 2 * omega.chart.n + 1
    dm = [duals.partial_multi(omega.matrix, xs, d) for d in range(dim)]
    worst = 0.0
    for a in range(dim):
        for b in range(a + 1, dim):
            for c in range(b + 1, dim):
                r = dm[a][b][c] + dm[b][c][a] + dm[c][a][b]
                worst = max(worst, abs(duals.value(r)))
    return worst


def reeb_residual(omega, dyn, p):
    """Contraction norm and time-normalisation defect of a second-order
    connection against the two-form; both vanish for the associated one."""
    xs = p.coords() if hasattr(p, "coords") else list(p)
    vec = dyn.vector_values(xs)
    contr = omega.contraction(vec, xs)
    return (
        max(abs(duals.value(c)) for c in contr),
        abs(duals.value(vec[0]) - 1.0),
    )


def metric_compat_residual(K, G, xs):
    """Covariant-constancy defect of the metric under the vertical
    restriction of a spacetime connection."""
    n = G.chart.n
    kv = K.values(xs)

    def kval(lam, i, mu):
        return kv[_sym_key(lam, mu)][i - 1]

    worst = 0.0
    for lam in range(0, n + 1):
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                r = G.entry(a, b).partial((lam,), xs)
                for k in range(1, n + 1):
                    r = r + kval(lam, k, a) * G.entry(k, b)(xs)
                    r = r + kval(lam, k, b) * G.entry(a, k)(xs)
                worst = max(worst, abs(duals.value(r)))
    return worst


def dphi_residual(omega, observer, xs_e):
    """Closure defect of the observed 2-form at a spacetime point."""
    n = omega.chart.n

    def comp(xs):
        return observed_two_form(omega, observer, xs)

    dm = [duals.partial_multi(comp, list(xs_e), d) for d in range(n + 1)]
    worst = 0.0
    for a in range(n + 1):
        for b in range(a + 1, n + 1):
            for c in range(b + 1, n + 1):
                r = dm[a][b][c] + dm[b][c][a] + dm[c][a][b]
                worst = max(worst, abs(duals.value(r)))
    return worst
