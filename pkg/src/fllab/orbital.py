"""Orbital integrals of unit characteristic functions as finite lattice counts.

Unitary side: cosets of U_{n-1}(F)/U_{n-1}(O_F) correspond to self-dual
O_E-lattices L = g^-1 O_E^{n-1}; integrality of g X g^-1 becomes
X' L <= L, b in L, lambda in O_F, so the integral is the number of self-dual
stable lattices between the Krylov closure of b and its dual.

General-linear side: cosets correspond to arbitrary lattices, each weighted
by (-1)^(val det g) = index sign, and the result carries the transfer sign
omega(Y) in front.

A structurally independent oracle re-derives both counts by enumerating
canonical coset representatives in a bounded box and testing g . Y . g^-1
integrality entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    NoHermitianOrbit,
    NormalFormFailure,
    NotRss,
    OracleTooLarge,
)
from .geometry import (
    GlnElement,
    HnElement,
    InvariantPoint,
    gl_representative,
    invariants_of,
    is_rss,
    transfer_sign,
    u_representative,
)
from .lattice import (
    Lattice,
    enumerate_all_between,
    enumerate_selfdual_stable,
    enumerate_stable_between,
    largest_stable_sublattice,
    module_closure,
    stabilizes,
)
from .linalg import Matrix, hermitian_split, inverse, val_det
from .padic import INF, solve_norm_equation


@dataclass
class OrbitalResult:
    value: int
    side: str  # "u" or "gl"
    omega: int | None
    lattice_count: int
    contributions: list = field(default_factory=list)  # [(Lattice, sign)]

    def __post_init__(self):
        if self.side == "gl":
            assert self.omega in (1, -1)
            assert self.value == self.omega * sum(s for _, s in self.contributions)
        else:
            assert self.omega is None
            assert self.value == self.lattice_count >= 0


def _zero_result(side, omega=None):
    return OrbitalResult(0, side, omega, 0, [])


def orbital_u_unit(X: HnElement, bound_exp: int = 12) -> OrbitalResult:
    """O(X, 1_{h_n(O)}): count of self-dual stable lattices, or 0 off support."""
    if not is_rss(X):
        raise NotRss("unitary orbital integral needs an rss element")
    cfg = X.cfg
    n = X.n
    if n == 1:
        ok = X.mat[0, 0].f_part().is_integral()
        return OrbitalResult(1 if ok else 0, "u", None, 1 if ok else 0, [])
    lam = X.lam()
    if not lam.is_integral():
        return _zero_result("u")
    Xp = X.corner()
    b = X.b_col()
    closure = module_closure(Xp, b, kind="E")
    if not closure.full_rank:
        raise NotRss("cyclic closure degenerate despite rss test")
    Lmin = closure.to_lattice()
    if not stabilizes(Xp, Lmin):
        return _zero_result("u")
    if not Lmin.gram().is_integral():
        return _zero_result("u")
    found = enumerate_selfdual_stable(Lmin, Xp, bound_exp)
    contributions = [(L, 1) for L in found]
    return OrbitalResult(len(found), "u", None, len(found), contributions)


def orbital_gl_unit(Y: GlnElement, bound_exp: int = 12) -> OrbitalResult:
    """O(Y, 1_{gl_n(O)}) = omega(Y) * sum of index signs over admissible lattices."""
    if not is_rss(Y):
        raise NotRss("general-linear orbital integral needs an rss element")
    cfg = Y.cfg
    n = Y.n
    omega = transfer_sign(Y).omega
    if n == 1:
        ok = Y.mat[0, 0].is_integral()
        val = 1 if ok else 0
        return OrbitalResult(val, "gl", omega, val, [(None, 1)] if ok else [])
    lam = Y.lam()
    if not lam.is_integral():
        return _zero_result("gl", omega)
    Yp = Y.corner()
    b = Y.b_col()
    c = Y.c_row()
    closure = module_closure(Yp, b, kind="F")
    if not closure.full_rank:
        raise NotRss("cyclic closure degenerate despite rss test")
    Lmin = closure.to_lattice()
    if not stabilizes(Yp, Lmin):
        return _zero_result("gl", omega)
    K0 = _row_constraint_lattice(Yp, c)
    Lmax = largest_stable_sublattice(Yp, K0, floor=Lmin)
    if Lmax is None or not Lmax.contains_lattice(Lmin):
        return _zero_result("gl", omega)
    found = enumerate_stable_between(Lmin, Lmax, Yp, bound_exp)
    contributions = [(L, L.index_sign()) for L in found]
    total = sum(s for _, s in contributions)
    return OrbitalResult(omega * total, "gl", omega, len(found), contributions)


def _row_constraint_lattice(Yp: Matrix, c) -> Lattice:
    """K0 = {v : c Y'^k v in O, k = 0..m-1} = dual of the Krylov span of c."""
    m = Yp.rows
    rows = module_closure(Yp.transpose(), list(c), kind="F")
    if not rows.full_rank:
        raise NotRss("row Krylov space degenerate despite rss test")
    return rows.to_lattice().dual()


# ----------------------------------------------------------------------
# independent oracle


def orbital_oracle(side: str, elt, max_exp: int = 4) -> int:
    """Same value by direct enumeration of canonical coset representatives.

    Enumerates all canonical lattices in the box given by the Krylov bounds,
    rebuilds the coset representative g from each candidate basis (for the
    unitary side through a Gram-matrix split), and tests g . elt . g^-1 for
    entrywise integrality.  Supported for rank n-1 <= 2 and small boxes.
    """
    n = elt.n
    if n - 1 > 2:
        raise OracleTooLarge("oracle supports rank at most 2")
    if n == 1:
        entry = elt.mat[0, 0]
        entry = entry.f_part() if side == "u" else entry
        return 1 if entry.is_integral() else 0
    if side == "u":
        return _oracle_u(elt, max_exp)
    return _oracle_gl(elt, max_exp)


def _embed_full(g: Matrix, n: int) -> Matrix:
    cfg = g.cfg
    quad = g.kind == "E"
    one = cfg.quad(1, 0) if quad else cfg.one()
    zero = cfg.quad(0, 0) if quad else cfg.zero()
    rows = []
    for i in range(n):
        row = [g[i, j] if (i < n - 1 and j < n - 1) else (one if i == j else zero)
               for j in range(n)]
        rows.append(row)
    return Matrix(cfg, rows)


def _oracle_gl(Y: GlnElement, max_exp: int) -> int:
    cfg = Y.cfg
    n = Y.n
    Yp, b, c = Y.corner(), Y.b_col(), Y.c_row()
    Lmin = module_closure(Yp, b, kind="F").to_lattice()
    K0 = _row_constraint_lattice(Yp, c)
    if not K0.contains_lattice(Lmin):
        return 0
    box = enumerate_all_between(Lmin, K0, max_quotient_exp=max_exp)
    total = 0
    for L in box:
        g = inverse(L.basis)
        conj = _embed_full(g, n) * Y.mat * _embed_full(inverse(g), n)
        if conj.is_integral():
            vg = int(val_det(g))
            total += -1 if vg % 2 else 1
    return transfer_sign(Y).omega * total


def _oracle_u(X: HnElement, max_exp: int) -> int:
    cfg = X.cfg
    n = X.n
    Xp, b = X.corner(), X.b_col()
    Lmin = module_closure(Xp, b, kind="E").to_lattice()
    Lmax = Lmin.dual()
    if not Lmax.contains_lattice(Lmin):
        return 0
    box = enumerate_all_between(Lmin, Lmax, max_quotient_exp=max_exp)
    count = 0
    for L in box:
        G = L.gram()
        if not G.is_integral():
            continue
        vd = val_det(G)
        if vd is INF or vd != 0:
            continue
        C = hermitian_split(G)
        Bprime = L.basis * inverse(C)
        g = inverse(Bprime)
        resid = g.sigma_transpose() * g - Matrix.identity(cfg, n - 1, quad=True)
        for row in resid.entries:
            for x in row:
                assert x.is_zero_at_precision() or x.valuation_lower_bound() >= cfg.D - 6
        conj = _embed_full(g, n) * X.mat * _embed_full(inverse(g), n)
        if conj.is_integral():
            count += 1
    return count


# ----------------------------------------------------------------------
# the matching comparison and the descent identities


@dataclass
class FlComparison:
    o_u: int
    o_gl: int
    hermitian_exists: bool
    equal: bool


def fl_compare(a: InvariantPoint, bound_exp: int = 12) -> FlComparison:
    """Both orbital integrals above one invariant point; equal iff they agree.

    The unitary value is 0 by definition when no hermitian preimage exists.
    """
    if not a.is_rss():
        raise NotRss("comparison needs an rss invariant point")
    exists = a.hermitian_exists()
    if exists:
        X = u_representative(a)
        o_u = orbital_u_unit(X, bound_exp).value
    else:
        o_u = 0
    Y = gl_representative(a)
    o_gl = orbital_gl_unit(Y, bound_exp).value
    return FlComparison(o_u, o_gl, exists, o_u == o_gl)


def _annihilator_rows(b, cfg):
    """m-1 row vectors spanning {r : r . b = 0}, for b != 0 (exact or not)."""
    m = len(b)
    piv = None
    best = None
    for i, x in enumerate(b):
        if x.is_exact_zero() or x.is_zero_at_precision():
            continue
        v = x.valuation()
        if best is None or v < best:
            best, piv = v, i
    if piv is None:
        raise NormalFormFailure("b vanishes; unit q expected")
    rows = []
    inv = b[piv].inv()
    for i in range(m):
        if i == piv:
            continue
        row = [cfg.zero()] * m
        row[i] = cfg.one()
        row[piv] = -(b[i] * inv)
        rows.append(row)
    return rows


def _unitary_moving_b(b, nu, cfg) -> Matrix:
    """g in U_m(F) with g b = nu * e_m, given h(b, b) = N(nu)."""
    m = len(b)
    nuinv = nu.inv()
    w = [x * nuinv for x in b]  # h(w, w) = 1
    if m == 1:
        U = Matrix(cfg, [[w[0]]])
    else:
        # complement w: z_i = e_i - sigma(w_i) w, drop the most singular index
        drop = None
        best = None
        for i, x in enumerate(w):
            if x.is_exact_zero() or x.is_zero_at_precision():
                continue
            v = x.valuation()
            if best is None or v < best:
                best, drop = v, i
        zs = []
        for i in range(m):
            if i == drop:
                continue
            z = [cfg.quad(1, 0) if j == i else cfg.quad(0, 0) for j in range(m)]
            coef = w[i].sigma()
            z = [zj - coef * wj for zj, wj in zip(z, w)]
            zs.append(z)
        Z = Matrix(cfg, [[zs[j][i] for j in range(len(zs))] for i in range(m)])
        G = Z.sigma_transpose() * Z
        C = hermitian_split(G)
        Zp = Z * inverse(C)
        cols = [Zp.col(j) for j in range(m - 1)] + [w]
        U = Matrix(cfg, [[cols[j][i] for j in range(m)] for i in range(m)])
    g = U.sigma_transpose()
    # sanity: g b = nu e_m
    gb = g.apply(b)
    for i, x in enumerate(gb):
        target = nu if i == m - 1 else None
        delta = (x - target) if target is not None else x
        if not (delta.is_zero_at_precision() or delta.valuation_lower_bound() >= cfg.D - 8):
            raise NormalFormFailure("unitary normal form did not move b onto e_m")
    return g


@dataclass
class Lemma1Report:
    eq_u: bool
    eq_gl: bool
    o_u: int
    o_u_corner: int
    o_gl: int
    o_gl_corner: int
    lam_integral: bool

    @property
    def ok(self) -> bool:
        return self.eq_u and self.eq_gl


def lemma1_check(X: HnElement, bound_exp: int = 12) -> Lemma1Report:
    """Descent identities at unit q: conjugate X (and the matched Y) to the
    normal form with b = nu e_{n-1}, and compare each orbital integral with
    1_O(lambda) times the corner orbital integral one size down.

    Requires q(X) to be a unit and the corner element to be rss in its own
    right (raises NotRss otherwise, callers resample).
    """
    from .geometry import block_q

    cfg = X.cfg
    n = X.n
    if n < 2:
        raise ValueError("descent needs n >= 2")
    q = block_q(X)
    if q.valuation() != 0:
        raise ValueError("descent identity requires |q| = 1")
    if not is_rss(X):
        raise NotRss("need an rss element")

    nu = solve_norm_equation(q, cfg)
    g = _unitary_moving_b(X.b_col(), nu, cfg)
    Xn = X.conjugate_small(g)
    corner_u = HnElement(Xn.corner(), check=False)
    if n > 2 and not is_rss(corner_u):
        raise NotRss("corner element not rss; resample")
    lam = X.lam()
    lam_ok = lam.is_integral()

    o_u = orbital_u_unit(X, bound_exp).value
    o_u_corner = orbital_u_unit(corner_u, bound_exp).value if n > 2 else (
        1 if corner_u.mat[0, 0].f_part().is_integral() else 0)
    rhs_u = (o_u_corner if lam_ok else 0)
    eq_u = o_u == rhs_u

    # matched general-linear side
    Y = gl_representative(invariants_of(X))
    m = n - 1
    gamma_rows = _annihilator_rows(Y.b_col(), cfg) + [Y.c_row()]
    gamma = Matrix(cfg, gamma_rows)
    if val_det(gamma) is INF:
        raise NormalFormFailure("gamma is singular despite unit q")
    Yn = Y.conjugate_small(gamma)
    corner_gl = GlnElement(Yn.corner())
    if n > 2 and not is_rss(corner_gl):
        raise NotRss("gl corner element not rss; resample")
    o_gl = orbital_gl_unit(Y, bound_exp).value
    o_gl_corner = orbital_gl_unit(corner_gl, bound_exp).value if n > 2 else (
        1 if corner_gl.mat[0, 0].is_integral() else 0)
    rhs_gl = (o_gl_corner if lam_ok else 0)
    eq_gl = o_gl == rhs_gl

    return Lemma1Report(eq_u, eq_gl, o_u, o_u_corner, o_gl, o_gl_corner, lam_ok)
