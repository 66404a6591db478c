"""Contact transformations preserving ``dy - p dx`` up to a unit.

Every transformation is stored as ``S o J``: first the map
``J: (x, y, p) -> (x + alpha, y + beta, p + gamma)``, then the scaling
``S: (x, y, p) -> (lam x, mu y, (mu/lam) p)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from flint import fmpq

from .branch import BranchParam, default_trunc, normalize_with_reparam
from .conormal import ConormalParam, conormal
from .errors import (
    DegenerateJacobian,
    NotContact,
    NotInGroupJ,
    NotLegendrianImage,
    WeightMismatch,
)
from .series import INF, TruncSeries3, UniSeries, WeightSystem, compose3, rat, rat_str, substitute


def _zero(ws: WeightSystem) -> TruncSeries3:
    return TruncSeries3(ws, None, INF)


@dataclass(frozen=True)
class Certificate:
    """``u`` with ``Phi^*(dy - p dx) = u (dy - p dx)``, checked up to weight ``window``."""

    u: TruncSeries3
    window: float


def check_membership(alpha: TruncSeries3, beta: TruncSeries3, gamma: TruncSeries3) -> None:
    """``alpha, beta, gamma`` and ``d_x alpha, d_y beta, d_p gamma`` vanish at the origin."""
    for name, f in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if f.constant_term() != 0:
            raise NotInGroupJ(f"{name} has a constant term")
    if alpha[(1, 0, 0)] != 0:
        raise NotInGroupJ("d_x alpha does not vanish at the origin")
    if beta[(0, 1, 0)] != 0:
        raise NotInGroupJ("d_y beta does not vanish at the origin")
    if gamma[(0, 0, 1)] != 0:
        raise NotInGroupJ("d_p gamma does not vanish at the origin")


def pullback_coefficients(alpha, beta, gamma):
    """``(A, B, C)`` with ``J^*(dy - p dx) = A dx + B dy + C dp``."""
    ws = alpha.ws
    x, y, p = TruncSeries3.gens(ws)
    X, Y, P = x + alpha, y + beta, p + gamma
    A = Y.partial("x") - P.mul(X.partial("x"))
    B = Y.partial("y") - P.mul(X.partial("y"))
    C = Y.partial("p") - P.mul(X.partial("p"))
    return A, B, C


def _bound_json(bound):
    return None if bound == INF else int(bound)


@dataclass(frozen=True)
class ContactTx:
    ws: WeightSystem
    lam: fmpq
    mu: fmpq
    alpha: TruncSeries3
    beta: TruncSeries3
    gamma: TruncSeries3
    certificate: Certificate | None = None

    # construction -----------------------------------------------------
    @classmethod
    def identity(cls, ws: WeightSystem) -> "ContactTx":
        z = _zero(ws)
        return cls(ws, fmpq(1), fmpq(1), z, z, z, Certificate(TruncSeries3.constant(ws, 1), INF))

    @classmethod
    def scaling(cls, ws: WeightSystem, lam, mu) -> "ContactTx":
        lam, mu = rat(lam), rat(mu)
        if lam == 0 or mu == 0:
            raise ValueError("scaling factors must be nonzero")
        z = _zero(ws)
        return cls(ws, lam, mu, z, z, z, Certificate(TruncSeries3.constant(ws, mu), INF))

    @classmethod
    def jtype(cls, alpha: TruncSeries3, beta: TruncSeries3, gamma: TruncSeries3, lam=1, mu=1) -> "ContactTx":
        ws = alpha.ws
        if beta.ws != ws or gamma.ws != ws:
            raise WeightMismatch("components use different weight systems")
        check_membership(alpha, beta, gamma)
        tx = cls(ws, rat(lam), rat(mu), alpha, beta, gamma)
        return cls(ws, tx.lam, tx.mu, alpha, beta, gamma, verify_contact(tx))

    # properties -------------------------------------------------------
    @property
    def has_j_part(self) -> bool:
        return not (self.alpha.is_zero() and self.beta.is_zero() and self.gamma.is_zero())

    @property
    def has_scaling(self) -> bool:
        return self.lam != 1 or self.mu != 1

    @property
    def kind(self) -> str:
        if self.has_j_part and self.has_scaling:
            return "composite"
        return "jtype" if self.has_j_part else "scaling"

    @property
    def bound(self):
        return min(self.alpha.bound, self.beta.bound, self.gamma.bound)

    def j_part(self) -> "ContactTx":
        return ContactTx(self.ws, fmpq(1), fmpq(1), self.alpha, self.beta, self.gamma)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.has_scaling or not self.has_j_part:
            out["lambda"] = rat_str(self.lam)
            out["mu"] = rat_str(self.mu)
        if self.has_j_part:
            out["alpha"] = self.alpha.to_json()
            out["beta"] = self.beta.to_json()
            out["gamma"] = self.gamma.to_json()
            out["bound"] = _bound_json(self.bound)
            out["bounds"] = {key: _bound_json(getattr(self, key).bound) for key in ("alpha", "beta", "gamma")}
        return out

    @classmethod
    def from_json(cls, ws: WeightSystem, data: dict, verify: bool = True) -> "ContactTx":
        lam = rat(data.get("lambda", "1/1"))
        mu = rat(data.get("mu", "1/1"))
        if "alpha" not in data:
            return cls.scaling(ws, lam, mu)
        common = data.get("bound")
        bounds = data.get("bounds") or {}
        parts = []
        for key in ("alpha", "beta", "gamma"):
            bound = bounds.get(key, common)
            parts.append(TruncSeries3.from_json(ws, data[key], INF if bound is None else int(bound)))
        if verify:
            return cls.jtype(*parts, lam=lam, mu=mu)
        return cls(ws, lam, mu, *parts)


# ---------------------------------------------------------------------------


def verify_contact(tx: ContactTx) -> Certificate:
    """Certificate ``u``: asserts ``C = 0`` and ``A = -p B`` to their tracked bounds."""
    if not tx.has_j_part:
        return Certificate(TruncSeries3.constant(tx.ws, tx.mu), INF)
    A, B, C = pullback_coefficients(tx.alpha, tx.beta, tx.gamma)
    if not C.is_zero():
        raise NotContact(f"dp-coefficient of the pullback is nonzero: {C}")
    x, y, p = TruncSeries3.gens(tx.ws)
    resid = A + p.mul(B)
    if not resid.is_zero():
        raise NotContact(f"dx-coefficient is not -p times the dy-coefficient: residual {resid}")
    if B.constant_term() == 0:
        raise NotContact("pullback factor is not a unit")
    return Certificate(B.scale(tx.mu), min(C.bound, resid.bound))


def solve_cauchy(alpha: TruncSeries3, beta0: TruncSeries3 | None = None, bound=None) -> TruncSeries3:
    """``beta`` with ``beta = beta0 mod p`` solving the Cauchy problem of ``alpha``.

    Writing ``alpha = sum alpha_l p^l`` and ``U = 1 + alpha_x + p alpha_y``,
    the ``p^l`` coefficient of the equation determines ``beta_{l+1}``.
    """
    ws = alpha.ws
    wp = ws.wp
    beta0 = _zero(ws) if beta0 is None else beta0
    if beta0.ws != ws:
        raise WeightMismatch("alpha and beta0 use different weight systems")
    if not beta0.is_p_free():
        raise NotInGroupJ("beta0 must not depend on p")
    if alpha.constant_term() != 0 or alpha[(1, 0, 0)] != 0:
        raise NotInGroupJ("alpha and d_x alpha must vanish at the origin")
    if beta0.constant_term() != 0 or beta0[(0, 1, 0)] != 0:
        raise NotInGroupJ("beta0 and d_y beta0 must vanish at the origin")

    top = min(alpha.bound, beta0.bound) if bound is None else bound
    if top == INF:
        top = default_trunc(ws.k, ws.n)
    top = int(top)

    a_slices = alpha.p_slices()

    def a(l):
        s = a_slices.get(l)
        if s is None:
            return TruncSeries3(ws, None, alpha.bound - l * wp)
        return s

    dxa = {}

    def U(m):
        if m == 0:
            return a(0).partial("x") + 1
        if m not in dxa:
            dxa[m] = a(m).partial("x") + a(m - 1).partial("y")
        return dxa[m]

    betas = {0: beta0.truncate(top)}
    dxb = {0: betas[0].partial("x")}
    dyb = {0: betas[0].partial("y")}
    u0 = U(0)
    lmax = top // wp
    for l in range(lmax):
        cap = top - (l + 1) * wp
        rhs = a(l).scale(l) if l else TruncSeries3(ws, None, a(0).bound)
        for m in range(l + 1):
            am = a(m + 1)
            if not am.is_zero():
                rhs = rhs + am.mul(dxb[l - m], cap=cap).scale(m + 1)
        for m in range(l):
            am = a(m + 1)
            if not am.is_zero():
                rhs = rhs + am.mul(dyb[l - 1 - m], cap=cap).scale(m + 1)
        for m in range(1, l + 1):
            um = U(m)
            if not um.is_zero():
                rhs = rhs - um.mul(betas[l - m + 1], cap=cap).scale(l - m + 1)
        rhs = rhs.truncate(cap)
        nxt = rhs.div(u0.scale(l + 1), bound=cap)
        betas[l + 1] = nxt
        dxb[l + 1] = nxt.partial("x")
        dyb[l + 1] = nxt.partial("y")

    terms = {}
    out_bound = top
    for l, bl in betas.items():
        out_bound = min(out_bound, bl.bound + l * wp)
        for (i, j, _), c in bl.terms.items():
            terms[(i, j, l)] = c
    return TruncSeries3(ws, terms, out_bound)


def cauchy_residual(alpha: TruncSeries3, beta: TruncSeries3) -> TruncSeries3:
    """``U beta_p - p alpha_p beta_y - alpha_p beta_x - p alpha_p``."""
    ws = alpha.ws
    _, _, p = TruncSeries3.gens(ws)
    ax, ay, ap = alpha.partial("x"), alpha.partial("y"), alpha.partial("p")
    U = ax + p.mul(ay) + 1
    bx, by, bp = beta.partial("x"), beta.partial("y"), beta.partial("p")
    pap = p.mul(ap)
    return U.mul(bp) - pap.mul(by) - ap.mul(bx) - pap


def solve_gamma(alpha: TruncSeries3, beta: TruncSeries3, bound=None) -> TruncSeries3:
    """``gamma = (beta_x + p beta_y - p(alpha_x + p alpha_y)) / (1 + alpha_x + p alpha_y)``."""
    ws = alpha.ws
    _, _, p = TruncSeries3.gens(ws)
    ax, ay = alpha.partial("x"), alpha.partial("y")
    shear = ax + p.mul(ay)
    den = shear + 1
    if den.constant_term() == 0:
        raise DegenerateJacobian("1 + alpha_x + p alpha_y is not a unit")
    num = beta.partial("x") + p.mul(beta.partial("y")) - p.mul(shear)
    if bound is None:
        bound = min(alpha.bound, beta.bound)
    if num.is_zero() and num.bound == INF:
        return _zero(ws)
    den_is_const = all(m == (0, 0, 0) for m in den.terms)
    if bound == INF and not den_is_const:
        raise ValueError("gamma is an infinite series here; pass a bound")
    return num.div(den, bound=bound)


def plane_lift(alpha: TruncSeries3, beta: TruncSeries3, bound=None) -> ContactTx:
    """Prolongation of the plane change ``(x + alpha, y + beta)`` (``alpha, beta`` p-free)."""
    if not (alpha.is_p_free() and beta.is_p_free()):
        raise NotInGroupJ("plane changes must not depend on p")
    ws = alpha.ws
    if bound is None:
        bound = default_trunc(ws.k, ws.n)
    gamma = solve_gamma(alpha, beta, bound)
    return ContactTx.jtype(alpha.truncate(bound), beta.truncate(bound), gamma)


def cauchy_tx(alpha: TruncSeries3, beta0: TruncSeries3 | None = None, bound=None) -> ContactTx:
    """The J-type transformation built from ``alpha`` and the initial value ``beta0``."""
    ws = alpha.ws
    if bound is None:
        bound = default_trunc(ws.k, ws.n)
    beta = solve_cauchy(alpha, beta0, bound)
    gamma = solve_gamma(alpha, beta, bound)
    return ContactTx.jtype(alpha.truncate(bound), beta, gamma)


# ---------------------------------------------------------------------------


def _rescale(f: TruncSeries3, lam: fmpq, mu: fmpq, factor: fmpq) -> TruncSeries3:
    """``factor * f(lam x, mu y, (mu/lam) p)``."""
    nu = mu / lam
    return TruncSeries3._raw(
        f.ws,
        {m: c * factor * lam ** m[0] * mu ** m[1] * nu ** m[2] for m, c in f.terms.items()},
        f.bound,
    )


def conjugate(tx: ContactTx, lam: fmpq, mu: fmpq) -> ContactTx:
    """``S^{-1} J S`` for the J-part of ``tx`` and ``S = (lam, mu)``; again of J-type."""
    return ContactTx(
        tx.ws,
        fmpq(1),
        fmpq(1),
        _rescale(tx.alpha, lam, mu, 1 / lam),
        _rescale(tx.beta, lam, mu, 1 / mu),
        _rescale(tx.gamma, lam, mu, lam / mu),
    )


def _compose_j(j1: ContactTx, j2: ContactTx) -> tuple[TruncSeries3, TruncSeries3, TruncSeries3]:
    """Components of ``J1 o J2``."""
    ws = j1.ws
    x, y, p = TruncSeries3.gens(ws)
    X2, Y2, P2 = x + j2.alpha, y + j2.beta, p + j2.gamma
    a = j2.alpha + compose3(j1.alpha, X2, Y2, P2)
    b = j2.beta + compose3(j1.beta, X2, Y2, P2)
    c = j2.gamma + compose3(j1.gamma, X2, Y2, P2)
    return a, b, c


def compose(tx1: ContactTx, tx2: ContactTx) -> ContactTx:
    """``tx1 o tx2`` (``tx2`` acts first)."""
    if tx1.ws != tx2.ws:
        raise WeightMismatch("transformations use different weight systems")
    lam, mu = tx1.lam * tx2.lam, tx1.mu * tx2.mu
    if not tx1.has_j_part and not tx2.has_j_part:
        return ContactTx.scaling(tx1.ws, lam, mu)
    j1 = conjugate(tx1, tx2.lam, tx2.mu)
    if not tx2.has_j_part:
        parts = (j1.alpha, j1.beta, j1.gamma)
    elif not tx1.has_j_part:
        parts = (tx2.alpha, tx2.beta, tx2.gamma)
    else:
        parts = _compose_j(j1, tx2.j_part())
    return ContactTx.jtype(*parts, lam=lam, mu=mu)


def invert(tx: ContactTx, max_iter: int = 200) -> ContactTx:
    """Inverse by successive approximation ``h' = -h o (id + h')`` on the J-part."""
    ws = tx.ws
    lam_inv, mu_inv = 1 / tx.lam, 1 / tx.mu
    if not tx.has_j_part:
        return ContactTx.scaling(ws, lam_inv, mu_inv)
    x, y, p = TruncSeries3.gens(ws)
    a, b, c = -tx.alpha, -tx.beta, -tx.gamma
    for _ in range(max_iter):
        X, Y, P = x + a, y + b, p + c
        na = -compose3(tx.alpha, X, Y, P)
        nb = -compose3(tx.beta, X, Y, P)
        nc = -compose3(tx.gamma, X, Y, P)
        if na == a and nb == b and nc == c:
            break
        a, b, c = na, nb, nc
    else:
        raise NotContact("inverse iteration did not stabilize")
    j_inv = ContactTx(ws, fmpq(1), fmpq(1), a, b, c)
    # (S J)^{-1} = J^{-1} S^{-1} = S^{-1} (S J^{-1} S^{-1})
    conj = conjugate(j_inv, lam_inv, mu_inv)
    return ContactTx.jtype(conj.alpha, conj.beta, conj.gamma, lam=lam_inv, mu=mu_inv)


# ---------------------------------------------------------------------------


def transport_sigma(tx: ContactTx, L: ConormalParam) -> tuple[UniSeries, UniSeries, UniSeries]:
    """``tx o sigma`` componentwise, before renormalization."""
    x, y, p = L.sigma()
    if tx.has_j_part:
        x = x + substitute(tx.alpha, *L.sigma())
        y = y + substitute(tx.beta, *L.sigma())
        p = p + substitute(tx.gamma, *L.sigma())
    if tx.has_scaling:
        x, y, p = x.scale(tx.lam), y.scale(tx.mu), p.scale(tx.mu / tx.lam)
    return x, y, p


def apply_to_conormal(tx: ContactTx, L: ConormalParam) -> ConormalParam:
    """Image of ``L`` under ``tx``, renormalized so that ``x = s^k`` again."""
    if tx.ws.k != L.k:
        raise WeightMismatch("transformation and curve have different types")
    xs, ys, ps = transport_sigma(tx, L)
    branch, s_of_tau = normalize_with_reparam(xs, ys, k=L.k, trunc=L.trunc)
    image = conormal(branch)
    moved_p = ps.compose(s_of_tau)
    if not moved_p.agrees(image.p):
        raise NotLegendrianImage("transported p-component differs from y'/x' of the image")
    return image


def apply_to_branch(tx: ContactTx, b: BranchParam) -> BranchParam:
    return apply_to_conormal(tx, conormal(b)).branch
