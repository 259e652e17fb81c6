"""Element data for the supported atom set.

Covers the eleven elements the toolkit accepts: H, B, C, N, O, P, S and the
halogens F, Cl, Br, I.  Average weights follow the IUPAC 2021 standard atomic
weights (conventional values); isotope masses and abundances follow the
AME2020 / CIAAW isotopic composition tables, rounded to a precision far below
the tolerances used anywhere in this package.
"""

from __future__ import annotations

# Order is fixed: it defines the element one-hot layout used by the models.
ELEMENTS = ("H", "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")

# Elements that may be written bare (outside brackets) in SMILES input.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})

# Elements that may carry the aromatic (lowercase) flag.
AROMATIC_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S"})

AVERAGE_WEIGHT = {
    "H": 1.008,
    "B": 10.811,
    "C": 12.011,
    "N": 14.007,
    "O": 15.999,
    "P": 30.973762,
    "S": 32.065,
    "F": 18.998403,
    "Cl": 35.453,
    "Br": 79.904,
    "I": 126.90447,
}

# (exact mass, fractional abundance) per naturally occurring isotope.
ISOTOPES = {
    "H": ((1.0078250319, 0.999885), (2.0141017779, 0.000115)),
    "B": ((10.0129370, 0.199), (11.0093055, 0.801)),
    "C": ((12.0, 0.9893), (13.0033548378, 0.0107)),
    "N": ((14.0030740052, 0.99636), (15.0001088984, 0.00364)),
    "O": ((15.9949146221, 0.99757), (16.9991315, 0.00038), (17.9991604, 0.00205)),
    "P": ((30.97376151, 1.0),),
    "S": ((31.97207069, 0.9499), (32.9714585, 0.0075), (33.96786683, 0.0425), (35.96708088, 0.0001)),
    "F": ((18.99840322, 1.0),),
    "Cl": ((34.96885271, 0.7576), (36.9659026, 0.2424)),
    "Br": ((78.9183376, 0.5069), (80.916291, 0.4931)),
    "I": ((126.904473, 1.0),),
}

# Allowed valence levels for neutral atoms, lowest first.
BASE_VALENCES = {
    "H": (1,),
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


def monoisotopic_mass_of(element: str) -> float:
    """Exact mass of the most abundant isotope."""
    return max(ISOTOPES[element], key=lambda iso: iso[1])[0]


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...]:
    """Valence levels an atom may occupy, shifted for its formal charge.

    Carbocations and carbanions both bond three times; for heteroatoms a
    positive charge adds a bond (ammonium, oxonium) and a negative charge
    removes one (alkoxide, thiolate).
    """
    base = BASE_VALENCES[element]
    if charge == 0:
        return base
    if element == "C":
        return (max(0, 4 - abs(charge)),)
    return tuple(max(0, v + charge) for v in base)
