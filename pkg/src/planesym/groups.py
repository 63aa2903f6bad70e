"""Plane-group settings, projected Laue classes, and their subgroup trees.

Symmetry operations are pairs ``(M, t)`` acting on fractional coordinates
as ``x -> M x + t (mod 1)``, with ``M`` a 2x2 integer matrix and ``t`` a
pair of exact rationals.  On Fourier indices the same operation acts on
row vectors, ``h -> h M``, and relates coefficients through

    F(h M) = F(h) * exp(+2 pi i * h . t)

which is the convention matched by the forward transform used throughout
(``I(x) = sum_h F(h) exp(+2 pi i h . x)``).

Centered (``c``-type) settings are represented on the primitive rhombic
basis that lattice determination returns, where their mirror lines are the
index-swap actions; ``conventional_index`` maps primitive indices to the
conventional centered cell for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

Mat = tuple[tuple[int, int], tuple[int, int]]
Vec = tuple[Fraction, Fraction]
Op = tuple[Mat, Vec]

IDENT: Mat = ((1, 0), (0, 1))
NEG_IDENT: Mat = ((-1, 0), (0, -1))
# Mirror line along the a axis (y -> -y) and along the b axis (x -> -x).
MIR_A: Mat = ((1, 0), (0, -1))
MIR_B: Mat = ((-1, 0), (0, 1))
# Diagonal mirrors of square/rhombic bases.
SWAP: Mat = ((0, 1), (1, 0))
NSWAP: Mat = ((0, -1), (-1, 0))
ROT3: Mat = ((0, -1), (1, -1))
ROT4: Mat = ((0, -1), (1, 0))
ROT6: Mat = ((1, -1), (1, 0))

_ZERO: Vec = (Fraction(0), Fraction(0))
_HALF = Fraction(1, 2)


def mat_mul(a: Mat, b: Mat) -> Mat:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def mat_vec(m: Mat, v: Vec) -> Vec:
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


def index_action(h: tuple[int, int], m: Mat) -> tuple[int, int]:
    """Row-vector action of an operation's matrix part on a Fourier index."""
    return (h[0] * m[0][0] + h[1] * m[1][0], h[0] * m[0][1] + h[1] * m[1][1])


def compose(first: Op, second: Op) -> Op:
    """Composite operation applying ``second`` after ``first`` fails order
    conventions easily; here ``compose(g, g2) = g o g2`` (apply g2, then g).
    """
    m1, t1 = first
    m2, t2 = second
    tv = mat_vec(m1, t2)
    return (mat_mul(m1, m2), ((tv[0] + t1[0]) % 1, (tv[1] + t1[1]) % 1))


def closure(generators: tuple[Op, ...]) -> tuple[Op, ...]:
    """Group closure of ``generators`` with translations reduced mod 1."""
    ops = {(IDENT, _ZERO)}
    frontier = list(ops)
    while frontier:
        new: list[Op] = []
        for g in frontier:
            for h in tuple(ops) + generators:
                for cand in (compose(g, h), compose(h, g)):
                    if cand not in ops:
                        ops.add(cand)
                        new.append(cand)
        frontier = new
    return tuple(sorted(ops, key=lambda op: (op[0] != IDENT, op[0], op[1])))


@dataclass(frozen=True)
class PlaneGroup:
    """One plane-group setting with a fixed lattice orientation.

    Attributes
    ----------
    name : str
        Full Hermann-Mauguin setting symbol (``p1g1`` and ``p11g`` are the
        two orientations of pg, and so on).
    lattice : str
        Lattice constraint: ``oblique``, ``rectangular``, ``rhombic``,
        ``square``, or ``hexagonal``.
    centered : bool
        True for c-type settings, evaluated on the primitive rhombic basis.
    ops : tuple of (M, t)
        Full operation list; identity first.
    """

    name: str
    lattice: str
    centered: bool
    ops: tuple[Op, ...]

    @property
    def k(self) -> int:
        return len(self.ops)

    @property
    def centrosymmetric(self) -> bool:
        return any(m == NEG_IDENT for m, _ in self.ops)

    def __repr__(self) -> str:  # pragma: no cover
        return f"PlaneGroup({self.name!r}, k={self.k})"


def _group(name: str, lattice: str, *gens: Op, centered: bool = False) -> PlaneGroup:
    return PlaneGroup(name, lattice, centered, closure(tuple(gens)))


SETTINGS: dict[str, PlaneGroup] = {
    g.name: g
    for g in (
        _group("p1", "oblique"),
        _group("p2", "oblique", (NEG_IDENT, _ZERO)),
        _group("p1m1", "rectangular", (MIR_A, _ZERO)),
        _group("p11m", "rectangular", (MIR_B, _ZERO)),
        _group("p1g1", "rectangular", (MIR_A, (_HALF, Fraction(0)))),
        _group("p11g", "rectangular", (MIR_B, (Fraction(0), _HALF))),
        _group("c1m1", "rhombic", (SWAP, _ZERO), centered=True),
        _group("c11m", "rhombic", (NSWAP, _ZERO), centered=True),
        _group("p2mm", "rectangular", (NEG_IDENT, _ZERO), (MIR_A, _ZERO)),
        _group("p2mg", "rectangular", (NEG_IDENT, _ZERO), (MIR_A, (Fraction(0), _HALF))),
        _group("p2gm", "rectangular", (NEG_IDENT, _ZERO), (MIR_A, (_HALF, Fraction(0)))),
        _group("p2gg", "rectangular", (NEG_IDENT, _ZERO), (MIR_A, (_HALF, _HALF))),
        _group("c2mm", "rhombic", (NEG_IDENT, _ZERO), (SWAP, _ZERO), centered=True),
        _group("p4", "square", (ROT4, _ZERO)),
        _group("p4mm", "square", (ROT4, _ZERO), (MIR_A, _ZERO)),
        _group("p4gm", "square", (ROT4, _ZERO), (MIR_A, (_HALF, _HALF))),
        _group("p3", "hexagonal", (ROT3, _ZERO)),
        _group("p3m1", "hexagonal", (ROT3, _ZERO), (NSWAP, _ZERO)),
        _group("p31m", "hexagonal", (ROT3, _ZERO), (SWAP, _ZERO)),
        _group("p6", "hexagonal", (ROT6, _ZERO)),
        _group("p6mm", "hexagonal", (ROT6, _ZERO), (SWAP, _ZERO)),
    )
}

# Fixed evaluation order: translation-only first, then ascending order k,
# ties in the order the settings are tried during classification.
SETTING_ORDER: tuple[str, ...] = (
    "p1",
    "p2",
    "p1m1",
    "p11m",
    "p1g1",
    "p11g",
    "c1m1",
    "c11m",
    "p3",
    "p2mm",
    "p2mg",
    "p2gm",
    "p2gg",
    "c2mm",
    "p4",
    "p3m1",
    "p31m",
    "p6",
    "p4mm",
    "p4gm",
    "p6mm",
)

# Maximal translationengleiche subgroup edges within the 21 settings.
PLANE_MAXIMAL: dict[str, tuple[str, ...]] = {
    "p1": (),
    "p2": ("p1",),
    "p1m1": ("p1",),
    "p11m": ("p1",),
    "p1g1": ("p1",),
    "p11g": ("p1",),
    "c1m1": ("p1",),
    "c11m": ("p1",),
    "p3": ("p1",),
    "p2mm": ("p2", "p1m1", "p11m"),
    "p2mg": ("p2", "p1m1", "p11g"),
    "p2gm": ("p2", "p11m", "p1g1"),
    "p2gg": ("p2", "p1g1", "p11g"),
    "c2mm": ("p2", "c1m1", "c11m"),
    "p4": ("p2",),
    "p3m1": ("p3", "c11m"),
    "p31m": ("p3", "c1m1"),
    "p6": ("p3", "p2"),
    "p4mm": ("p4", "p2mm", "c2mm"),
    "p4gm": ("p4", "p2gg", "c2mm"),
    "p6mm": ("p6", "p3m1", "p31m", "c2mm"),
}


@dataclass(frozen=True)
class LaueClass:
    """A projected Laue class; ``k`` counts its point operations.

    Classes beyond 6mm (the axiomatic generalization to 8-, 10- and
    12-fold) take part in the subgroup tree and the selection inequalities
    but have no plane-group models behind them.
    """

    name: str
    k: int
    generators: tuple[Mat, ...] | None


LAUE_CLASSES: dict[str, LaueClass] = {
    c.name: c
    for c in (
        LaueClass("2", 2, (NEG_IDENT,)),
        LaueClass("2mm", 4, (NEG_IDENT, MIR_A)),
        LaueClass("4", 4, (ROT4,)),
        LaueClass("4mm", 8, (ROT4, MIR_A)),
        LaueClass("6", 6, (ROT6,)),
        LaueClass("6mm", 12, (ROT6, SWAP)),
        LaueClass("8", 8, None),
        LaueClass("8mm", 16, None),
        LaueClass("10", 10, None),
        LaueClass("10mm", 20, None),
        LaueClass("12", 12, None),
        LaueClass("12mm", 24, None),
    )
}

# Maximal-subclass edges.  The classical part stops at 6mm; the generalized
# part follows the N -> Nmm, N -> 2N and Nmm -> (2N)mm families, plus
# 2 -> 10 so that 10-fold (whose natural parent 5 is not a Laue class)
# stays connected to the root.
LAUE_MAXIMAL: dict[str, tuple[str, ...]] = {
    "2": (),
    "2mm": ("2",),
    "4": ("2",),
    "6": ("2",),
    "4mm": ("2mm", "4"),
    "6mm": ("2mm", "6"),
    "8": ("4",),
    "10": ("2",),
    "12": ("6",),
    "8mm": ("4mm", "8"),
    "10mm": ("10",),
    "12mm": ("6mm", "12"),
}

# Projected Laue class compatible with each plane group (Friedel symmetry
# included, so mirror-free groups still project to a centrosymmetric class).
_COMPATIBLE: dict[str, str] = {
    "p1": "2",
    "p2": "2",
    "p1m1": "2mm",
    "p11m": "2mm",
    "p1g1": "2mm",
    "p11g": "2mm",
    "c1m1": "2mm",
    "c11m": "2mm",
    "p2mm": "2mm",
    "p2mg": "2mm",
    "p2gm": "2mm",
    "p2gg": "2mm",
    "c2mm": "2mm",
    "p4": "4",
    "p4mm": "4mm",
    "p4gm": "4mm",
    "p3": "6",
    "p6": "6",
    "p3m1": "6mm",
    "p31m": "6mm",
    "p6mm": "6mm",
}


def compatible(setting: str) -> str:
    """Projected Laue class induced by a plane-group setting."""
    return _COMPATIBLE[setting]


def laue_ops(group: PlaneGroup) -> tuple[Mat, ...]:
    """Point operations of the Laue class induced by ``group``.

    The point parts of the group's operations extended by the inversion
    that Fourier amplitudes always carry, expressed in the group's own
    working basis (so diagonal mirrors of centered settings stay diagonal).
    """
    mats = {m for m, _ in group.ops}
    mats.add(NEG_IDENT)
    grown = True
    while grown:
        grown = False
        for a in tuple(mats):
            for b in tuple(mats):
                p = mat_mul(a, b)
                if p not in mats:
                    mats.add(p)
                    grown = True
    return tuple(sorted(mats, key=lambda m: (m != IDENT, m)))


def is_subgroup(lower: str, upper: str, tree: dict[str, tuple[str, ...]] | None = None) -> bool:
    """True when ``lower`` is reachable from ``upper`` along tree edges
    (or equal to it)."""
    if tree is None:
        tree = PLANE_MAXIMAL
    if lower == upper:
        return True
    return any(is_subgroup(lower, sub, tree) for sub in tree.get(upper, ()))


def disjoint(a: str, b: str, tree: dict[str, tuple[str, ...]] | None = None) -> bool:
    """True when neither setting is a (tree) subgroup of the other."""
    return not is_subgroup(a, b, tree) and not is_subgroup(b, a, tree)


def canonical_index(h: int, k: int) -> tuple[tuple[int, int], bool]:
    """Friedel representative of ``(h, k)`` in the stored half set.

    Returns the representative and a flag telling whether the coefficient
    at ``(h, k)`` is the conjugate of the stored one.  ``(0, 0)`` is not a
    stored index (the mean is carried separately).
    """
    if h > 0 or (h == 0 and k > 0):
        return (h, k), False
    if h == 0 and k == 0:
        raise ValueError("(0, 0) has no stored representative")
    return (-h, -k), True


def conventional_index(h: int, k: int) -> tuple[int, int]:
    """Map primitive rhombic indices to the conventional centered cell."""
    return (h + k, k - h)


def is_absent(group: PlaneGroup, h: tuple[int, int]) -> bool:
    """Systematic absence of index ``h`` under ``group``.

    An index is extinct when some operation fixes it while carrying a
    translation with a non-integral projection ``h . t`` (the stabilizer
    character sum then vanishes).  Independent of the phase origin.
    """
    for m, t in group.ops:
        if index_action(h, m) == h:
            ht = h[0] * t[0] + h[1] * t[1]
            if ht % 1 != 0:
                return True
    return False


def absence_rules(name: str) -> tuple[tuple[str, Callable[[int, int], bool]], ...]:
    """Human-readable systematic-absence rules in the conventional frame.

    Each entry pairs a reflection-condition string with a predicate on
    conventional indices returning True when the index is extinct.
    """
    rules: list[tuple[str, Callable[[int, int], bool]]] = []
    if name in ("p1g1", "p2gm", "p2gg", "p4gm"):
        rules.append(("(h,0) absent for h odd", lambda h, k: k == 0 and h % 2 != 0))
    if name in ("p11g", "p2mg", "p2gg", "p4gm"):
        rules.append(("(0,k) absent for k odd", lambda h, k: h == 0 and k % 2 != 0))
    if SETTINGS[name].centered:
        rules.append(("(h,k) absent for h+k odd", lambda h, k: (h + k) % 2 != 0))
    return tuple(rules)


# Lattice-constraint metadata used when deciding which settings a refined
# basis supports.  ``oblique`` always applies; ``square`` and ``hexagonal``
# bases also satisfy the weaker rectangular/rhombic constraints.
LATTICE_IMPLIES: dict[str, tuple[str, ...]] = {
    "oblique": ("oblique",),
    "rectangular": ("oblique", "rectangular"),
    "rhombic": ("oblique", "rhombic"),
    "square": ("oblique", "rectangular", "rhombic", "square"),
    "hexagonal": ("oblique", "rhombic", "hexagonal"),
}
