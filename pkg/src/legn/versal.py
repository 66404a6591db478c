"""Deformation bases and the two reduction algorithms.

``equisingular_reduce`` brings a branch of type ``y^k = x^n`` to the form
``F = y^k - x^n + sum_B xi_ij x^i y^j`` by plane coordinate changes;
``microlocal_reduce`` then removes the coordinates outside ``C`` with contact
transformations built from the Cauchy solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from flint import fmpq

from .branch import (
    BranchParam,
    branch_to_dict,
    curve_from_dict,
    normalize_with_reparam,
    parametrize_equation,
    puiseux_invariants,
    rescale_lead,
)
from .conormal import AtLeast, ConormalParam, conormal, order_in_window, valuation, window
from .contact import ContactTx, apply_to_conormal, cauchy_tx, plane_lift
from .errors import (
    BelowConductor,
    BelowConductorRegion,
    HypothesisViolated,
    NotEquisingular,
    NotSemiQuasiHomogeneous,
    ReductionFailed,
)
from .series import TruncSeries3, UniSeries, WeightSystem, rat, rat_str, substitute


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class DeformBasis:
    k: int
    n: int
    flavor: str
    pairs: tuple[tuple[int, int], ...]

    @property
    def ws(self) -> WeightSystem:
        return WeightSystem(self.k, self.n)

    def weight(self, pair) -> int:
        return self.k * pair[0] + self.n * pair[1]

    def excess(self, pair) -> int:
        """``d_ij = ki + nj - kn``, the scaling exponent of ``t_ij``."""
        return self.weight(pair) - self.k * self.n

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(self.weight(p) for p in self.pairs)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def determinacy_bound(k: int, n: int) -> int:
    """Largest weight of a monomial in the rectangle ``i <= n-2, j <= k-2``."""
    return k * (n - 2) + n * (k - 2)


def basis(k: int, n: int, flavor: str = "B") -> DeformBasis:
    WeightSystem(k, n)
    flavor = flavor.upper()
    if flavor not in ("B", "C"):
        raise ValueError(f"flavor must be B or C, got {flavor!r}")
    if flavor == "C" and not n > 2 * k:
        raise HypothesisViolated(f"the microlocal basis needs n > 2k, got k={k}, n={n}")
    pairs = [
        (i, j)
        for i in range(n - 1)
        for j in range(k - 1)
        if k * i + n * j > k * n and (flavor == "B" or i + j <= n - 2)
    ]
    pairs.sort(key=lambda p: k * p[0] + n * p[1])
    weights = [k * i + n * j for i, j in pairs]
    assert len(set(weights)) == len(weights), "basis weights must be distinct"
    return DeformBasis(k, n, flavor, tuple(pairs))


@dataclass(frozen=True)
class VersalCoords:
    basis: DeformBasis
    values: Mapping[tuple[int, int], fmpq] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for pair, c in self.values.items():
            pair = tuple(pair)
            if pair not in self.basis:
                raise ValueError(f"{pair} is not in basis {self.basis.flavor}")
            c = rat(c)
            if c != 0:
                clean[pair] = c
        object.__setattr__(self, "values", dict(sorted(clean.items(), key=lambda t: self.basis.weight(t[0]))))

    def __getitem__(self, pair) -> fmpq:
        return self.values.get(tuple(pair), fmpq(0))

    def support(self) -> list[tuple[int, int]]:
        return list(self.values)

    def vector(self) -> tuple[fmpq, ...]:
        return tuple(self[p] for p in self.basis.pairs)

    def equation(self) -> TruncSeries3:
        k, n = self.basis.k, self.basis.n
        terms = {(0, k, 0): fmpq(1), (n, 0, 0): fmpq(-1)}
        for (i, j), c in self.values.items():
            terms[(i, j, 0)] = c
        return TruncSeries3(self.basis.ws, terms)

    def restrict(self, other: DeformBasis) -> "VersalCoords":
        extra = [p for p in self.values if p not in other]
        if extra:
            raise ValueError(f"coordinates {extra} lie outside basis {other.flavor}")
        return VersalCoords(other, self.values)

    def below(self, weight: int) -> dict:
        return {p: c for p, c in self.values.items() if self.basis.weight(p) < weight}

    def to_json(self) -> list:
        return [{"i": i, "j": j, "c": rat_str(c)} for (i, j), c in self.values.items()]

    def __str__(self):
        body = ", ".join(f"t{p}={c}" for p, c in self.values.items())
        return f"{self.basis.flavor}({body})"


# ---------------------------------------------------------------------------
# cleaning and reduction to the plane


def unique_xy(m: int, k: int, n: int) -> tuple[int, int] | None:
    """The ``(a, b)`` with ``ka + nb = m``, ``0 <= b < k``, ``a >= 0``, if any."""
    for b in range(k):
        rest = m - n * b
        if rest >= 0 and rest % k == 0:
            return rest // k, b
    return None


def clean_monomial(i: int, j: int, l: int, k: int, n: int, strict: bool = True) -> tuple[int, int, fmpq]:
    """``x^i y^j p^l = (n/k)^l x^a y^b`` modulo the ideal of the curve ``y^k = x^n``.

    Rewrites with ``xp -> (n/k) y``, ``p^k -> (n/k)^k x^(n-k)``,
    ``y^j p^l -> (n/k)^l x^(n-l) y^(j+l-k)`` (for ``l < k``) and ``y^k -> x^n``.
    ``strict`` enforces weight ``> kn``; without it low-weight monomials are
    rewritten whenever the rules apply (``p^k``, ``xp``).
    """
    w = k * i + n * j + (n - k) * l
    if strict and w <= k * n:
        raise BelowConductorRegion(f"x^{i} y^{j} p^{l} has weight {w} <= {k * n}")
    coef = fmpq(n, k) ** l
    while l:
        if i:
            t = min(i, l)
            i, j, l = i - t, j + t, l - t
        elif l >= k:
            q, l = divmod(l, k)
            i += q * (n - k)
        elif j + l >= k:
            # always the case above weight kn
            i, j, l = n - l, j + l - k, 0
        else:
            raise BelowConductorRegion(f"no rewrite rule removes p from x^{i} y^{j} p^{l}")
    q, j = divmod(j, k)
    i += q * n
    assert k * i + n * j == w and 0 <= j < k
    return i, j, coef


def reference_conormal(k: int, n: int, trunc: int | None = None) -> ConormalParam:
    return conormal(BranchParam.monomial_curve(k, n, trunc))


def certify_cleaning(
    i: int, j: int, l: int, k: int, n: int, L: ConormalParam | None = None, strict: bool = True
) -> bool:
    """Residual of the cleaning rewrite has valuation above the monomial's weight."""
    a, b, coef = clean_monomial(i, j, l, k, n, strict)
    L = reference_conormal(k, n) if L is None else L
    ws = L.ws
    resid = TruncSeries3(ws, {(i, j, l): 1, (a, b, 0): -coef}) if (i, j, l) != (a, b, 0) else TruncSeries3(ws)
    v = valuation(L, resid)
    return isinstance(v, AtLeast) or v > k * a + n * b


def reduce_to_xy(u: TruncSeries3, L: ConormalParam, guard: int | None = None) -> TruncSeries3:
    """p-free ``v`` with ``u - v`` vanishing on ``L`` within the window."""
    if u.is_p_free():
        return u
    ws = L.ws
    k, n = ws.k, ws.n
    c = puiseux_invariants(L.branch).conductor
    top = window(L, guard)
    h = substitute(u, *L.sigma())
    m = order_in_window(h, top)
    if not isinstance(m, AtLeast) and m < c:
        raise BelowConductor(f"w(u) = {m} is below the conductor {c}")
    x, y, _ = L.sigma()
    found: dict = {}
    while True:
        m = order_in_window(h, top)
        if isinstance(m, AtLeast):
            break
        a, b = unique_xy(m, k, n)
        mono = substitute(TruncSeries3.monomial(ws, (a, b, 0)), *L.sigma())
        xi = h[m] / mono[m]
        found[(a, b, 0)] = found.get((a, b, 0), 0) + xi
        h = h - mono.scale(xi)
        top = min(top, h.bound)
    return TruncSeries3(ws, found, int(top))


def jacobian_divide(g: TruncSeries3, k: int, n: int) -> tuple[TruncSeries3, TruncSeries3, TruncSeries3]:
    """``g = A * n x^(n-1) + Bq * k y^(k-1) + R``, ``R`` inside the rectangle."""
    ws = g.ws
    A, Bq, R = {}, {}, {}
    for (i, j, l), c in g.terms.items():
        if l:
            raise ValueError("jacobian_divide expects a p-free series")
        if i >= n - 1:
            A[(i - n + 1, j, 0)] = c / n
        elif j >= k - 1:
            Bq[(i, j - k + 1, 0)] = c / k
        else:
            R[(i, j, 0)] = c
    return TruncSeries3(ws, A), TruncSeries3(ws, Bq), TruncSeries3(ws, R)


# ---------------------------------------------------------------------------
# reduction log


@dataclass
class Step:
    stage: int
    weight: int
    kind: str  # "absorb" | "plane" | "contact" | "scale"
    monomial: tuple[int, int]
    coefficient: fmpq
    alpha: TruncSeries3 | None = None
    beta: TruncSeries3 | None = None
    tx: ContactTx | None = None

    def transformation(self, bound: int) -> ContactTx | None:
        if self.kind == "plane":
            if self.tx is None:
                self.tx = plane_lift(self.alpha, self.beta, bound)
            return self.tx
        if self.kind in ("contact", "scale"):
            return self.tx
        return None

    def to_json(self, bound: int | None = None) -> dict:
        out = {
            "stage": self.stage,
            "weight": self.weight,
            "kind": self.kind,
            "monomial": list(self.monomial),
            "c": rat_str(self.coefficient),
        }
        tx = self.transformation(bound) if bound is not None else self.tx
        if tx is not None:
            out["tx"] = tx.to_json()
        elif self.alpha is not None:
            out["tx"] = {"kind": "jtype", "alpha": self.alpha.to_json(), "beta": self.beta.to_json()}
        return out


@dataclass
class ReductionLog:
    k: int
    n: int
    trunc: int
    steps: list[Step] = field(default_factory=list)
    final_branch: BranchParam | None = None
    window: int | None = None

    def transformations(self) -> list[Step]:
        return [s for s in self.steps if s.kind != "absorb"]

    def stages(self) -> dict[int, list[Step]]:
        out: dict[int, list[Step]] = {}
        for s in self.steps:
            out.setdefault(s.stage, []).append(s)
        return out

    def weights_increase(self) -> bool:
        """Within each stage, the eliminated weights strictly increase."""
        for steps in self.stages().values():
            ws = [s.weight for s in steps]
            if any(a >= b for a, b in zip(ws, ws[1:])):
                return False
        return True

    def to_json(self, with_gamma: bool = True) -> list:
        bound = self.trunc if with_gamma else None
        return [s.to_json(bound) for s in self.steps]


# ---------------------------------------------------------------------------
# equisingular reduction


def require_type(b: BranchParam) -> None:
    """A single Puiseux pair ``(n, k)``."""
    pairs = puiseux_invariants(b).pairs
    if pairs != ((b.n, b.k),):
        raise NotSemiQuasiHomogeneous(f"branch has Puiseux pairs {list(pairs)}, expected [({b.n}, {b.k})]")


def _xy_power(X: UniSeries, Y: UniSeries, a: int, b: int) -> UniSeries:
    return (X**a).mul(Y**b)


def equisingular_reduce(
    b: BranchParam,
    *,
    exact: bool = False,
    stop_weight: int | None = None,
    guard: int | None = None,
    cutoff: int | None = None,
    stage: int = 0,
    log: ReductionLog | None = None,
) -> tuple[VersalCoords, ReductionLog]:
    """Coordinates ``xi`` over ``B`` with the branch on ``F(x, y, xi)`` up to the cutoff.

    ``cutoff`` defaults to the determinacy bound; with ``exact=True`` defects
    beyond it are still removed by plane changes, so that the final branch lies
    on ``F(x, y, xi)`` within the whole reliable window.
    """
    k, n = b.k, b.n
    require_type(b)
    B = basis(k, n, "B")
    ws = B.ws
    cutoff = determinacy_bound(k, n) if cutoff is None else cutoff
    if log is None:
        log = ReductionLog(k, n, b.trunc)
    if b.lead != 1:
        b, mu = rescale_lead(b)
        log.steps.append(Step(stage, k * n, "scale", (0, k), mu, tx=ContactTx.scaling(ws, 1, mu)))
    X, Y = b.x, b.y
    zero = UniSeries.zero()
    top = b.trunc - (k * n if guard is None else guard)
    xi: dict = {}
    while True:
        F = VersalCoords(B, xi).equation()
        h = substitute(F, X, Y, zero)
        top = min(top, h.bound)
        m = order_in_window(h, top)
        if isinstance(m, AtLeast):
            break
        if m <= k * n:
            raise NotEquisingular(f"defect of weight {m} <= {k * n} changes the topological type")
        if stop_weight is not None and m > stop_weight:
            break
        if not exact and m > cutoff:
            break
        a, bb = unique_xy(m, k, n)
        lead = _xy_power(X, Y, a, bb)[m]
        c = h[m] / lead
        if (a, bb) in B:
            xi[(a, bb)] = xi.get((a, bb), 0) - c
            log.steps.append(Step(stage, m, "absorb", (a, bb), -c))
            continue
        g = TruncSeries3.monomial(ws, (a, bb, 0), c)
        A, Bq, R = jacobian_divide(g, k, n)
        assert R.is_zero()
        alpha, beta = A, -Bq
        # keep both components finite: exact polynomials would grow in degree
        X, Y = (
            (X + substitute(alpha, X, Y, zero)).truncate(b.trunc),
            (Y + substitute(beta, X, Y, zero)).truncate(b.trunc),
        )
        log.steps.append(Step(stage, m, "plane", (a, bb), c, alpha=alpha, beta=beta))
    final, _ = normalize_with_reparam(X, Y, k=k, trunc=b.trunc)
    log.final_branch = final
    log.window = int(top)
    return VersalCoords(B, xi), log


# ---------------------------------------------------------------------------
# microlocal reduction


def contact_exponents(a: int, b: int, n: int) -> tuple[int, int]:
    """Exponents of ``alpha = lam y^(a+b-n+1) p^(n-1-a)`` killing ``x^a y^b``."""
    return a + b - n + 1, n - 1 - a


def closed_form_lambda(t, a: int, k: int, n: int) -> fmpq:
    """First-order multiplier ``t (n-a) (k/n)^(n-1-a) / n``.

    With ``d = n-1-a``, ``alpha = lam y^c p^d`` and the leading part
    ``lam d y^c p^(d+1) / (d+1)`` of ``beta`` move the coefficient of
    ``x^a y^b`` by ``-lam n (n/k)^d / (d+1)`` once ``xp -> (n/k) y`` is applied.
    """
    return rat(t) * (n - a) * fmpq(k, n) ** (n - 1 - a) / n


def inverted_ratio_lambda(t, a: int, k: int, n: int) -> fmpq:
    """The same multiplier with the ratio ``n/k`` in place of ``k/n``; kept for comparison."""
    return rat(t) * (n - a) * fmpq(n, k) ** (n - 1 - a) / n


def contact_step(ws: WeightSystem, a: int, b: int, lam, bound: int) -> ContactTx:
    ey, ep = contact_exponents(a, b, ws.n)
    alpha = TruncSeries3.monomial(ws, (0, ey, ep), lam)
    return cauchy_tx(alpha, None, bound)


def microlocal_reduce(
    b: BranchParam, *, guard: int | None = None, weight_trunc: int | None = None
) -> tuple[VersalCoords, ReductionLog]:
    """Coordinates over ``C``; the log holds every plane change and contact step.

    Stage 0 is an equisingular reduction. Each later stage starts with the
    contact step removing one coordinate of ``B \\ C`` (ascending weight) and
    re-reduces the transformed branch. Contact steps are computed up to
    weight ``weight_trunc`` (default: the branch truncation).
    """
    k, n = b.k, b.n
    if not n > 2 * k:
        raise HypothesisViolated(f"microlocal reduction needs n > 2k, got k={k}, n={n}")
    require_type(b)
    B, C = basis(k, n, "B"), basis(k, n, "C")
    ws = B.ws
    trunc = b.trunc if weight_trunc is None else weight_trunc
    log = ReductionLog(k, n, b.trunc)
    coords, _ = equisingular_reduce(b, exact=True, guard=guard, stage=0, log=log)
    current = log.final_branch
    stage = 0
    for pair in B.pairs:
        if pair in C or coords[pair] == 0:
            continue
        a, bb = pair
        v = B.weight(pair)
        t = coords[pair]
        L = conormal(current)
        trial_b = apply_to_conormal(contact_step(ws, a, bb, 1, trunc), L).branch
        trial, _ = equisingular_reduce(trial_b, stop_weight=v, guard=guard)
        if trial.below(v) != coords.below(v):
            raise ReductionFailed(f"contact step for {pair} disturbed coordinates below weight {v}")
        kappa = trial[pair] - t
        if kappa == 0:
            raise ReductionFailed(f"contact step for {pair} does not move the coordinate")
        lam = -t / kappa
        expected = -closed_form_lambda(t, a, k, n)
        if lam != expected:
            raise ReductionFailed(f"lambda {lam} differs from the closed form {expected}")
        stage += 1
        tx = contact_step(ws, a, bb, lam, trunc)
        moved = apply_to_conormal(tx, L).branch
        log.steps.append(Step(stage, v, "contact", pair, lam, alpha=tx.alpha, beta=tx.beta, tx=tx))
        new, _ = equisingular_reduce(moved, exact=True, guard=guard, stage=stage, log=log)
        if new.below(v) != coords.below(v) or new[pair] != 0:
            raise ReductionFailed(f"re-reduction after the contact step for {pair} failed: {new}")
        coords = new
        current = log.final_branch
    if any(p not in C for p in coords.support()):
        raise ReductionFailed(f"coordinates {coords} not supported on C")
    return coords.restrict(C), log


# ---------------------------------------------------------------------------
# transport certification


@dataclass(frozen=True)
class TransportCheck:
    on_normal_form: bool
    matches_log: bool
    matches_parametrization: bool
    agreement_order: int

    @property
    def ok(self) -> bool:
        return self.on_normal_form and self.matches_log and self.matches_parametrization


def transport(log: ReductionLog, L: ConormalParam) -> ConormalParam:
    """Apply every logged transformation, in order, to ``L``."""
    for step in log.steps:
        tx = step.transformation(log.trunc)
        if tx is not None:
            L = apply_to_conormal(tx, L)
    return L


def verify_transport(log: ReductionLog, coords: VersalCoords, b: BranchParam) -> TransportCheck:
    """Transport the input and compare with the normal form ``F(x, y, coords)``.

    Agreement of y-coefficients is certified up to ``window - n(k-1)``: a
    branch on which ``F`` vanishes to order ``W`` differs from the exact
    branch of ``F`` only from ``s^(W + 1 - n(k-1))`` on.
    """
    k, n = b.k, b.n
    moved = transport(log, conormal(b))
    F = coords.equation()
    v = valuation(moved, F)
    on_nf = isinstance(v, AtLeast)
    direct = log.final_branch
    matches_log = moved.y.agrees(direct.y)
    exact_branch = parametrize_equation(F, k, n, b.trunc)
    top = (v.bound if on_nf else 0) - n * (k - 1)
    matches = on_nf and moved.y.agrees(exact_branch.y, upto=top)
    return TransportCheck(on_nf, matches_log, matches, top)


# ---------------------------------------------------------------------------
# report files


def report_to_dict(
    source: Mapping, coords: VersalCoords, log: ReductionLog, with_gamma: bool = True
) -> dict:
    k, n = coords.basis.k, coords.basis.n
    return {
        "input": dict(source),
        "basis": coords.basis.flavor,
        "coords": coords.to_json(),
        "log": log.to_json(with_gamma),
        "trunc": log.trunc,
        "determinacy_bound": determinacy_bound(k, n),
        "final_branch": branch_to_dict(log.final_branch) if log.final_branch else None,
    }


def coords_from_report(data: Mapping) -> VersalCoords:
    k, n = int(data["input"]["k"]), int(data["input"]["n"])
    B = basis(k, n, data["basis"])
    return VersalCoords(B, {(int(t["i"]), int(t["j"])): rat(t["c"]) for t in data["coords"]})


def log_from_report(data: Mapping) -> ReductionLog:
    """Rebuild the transformation log (verifying every stored certificate)."""
    k, n = int(data["input"]["k"]), int(data["input"]["n"])
    ws = WeightSystem(k, n)
    log = ReductionLog(k, n, int(data["trunc"]))
    for entry in data["log"]:
        step = Step(
            int(entry["stage"]),
            int(entry["weight"]),
            entry["kind"],
            tuple(entry["monomial"]),
            rat(entry["c"]),
        )
        txd = entry.get("tx")
        if txd is not None:
            if "gamma" in txd or "lambda" in txd:
                step.tx = ContactTx.from_json(ws, txd)
                step.alpha, step.beta = step.tx.alpha, step.tx.beta
            else:
                step.alpha = TruncSeries3.from_json(ws, txd["alpha"])
                step.beta = TruncSeries3.from_json(ws, txd["beta"])
        log.steps.append(step)
    final = data.get("final_branch")
    if final:
        log.final_branch = curve_from_dict(final).to_branch()
    return log
