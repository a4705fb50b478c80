"""JSON-friendly encodings of the package's data: tuples, vectors, realizations.

Complex scalars travel as ``[re, im]`` pairs; matrices as row-major nested
lists of pairs.  Values parse as doubles; bit-exact round-tripping of
decimal literals is not promised.
"""

from __future__ import annotations

import numpy as np

from .linalg import DEFAULT_TOLERANCES, Tolerances
from .modelspace import ModelVector, TruncatedModelSpace
from .optuple import OperatorTuple
from .realization import PolyOperatorFunction, Realization


def matrix_to_lists(a) -> list:
    m = np.asarray(a, dtype=np.complex128)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_lists(rows, expected_shape=None) -> np.ndarray:
    try:
        m = np.array([[complex(c[0], c[1]) for c in row] for row in rows], dtype=np.complex128)
    except (TypeError, IndexError, ValueError) as exc:
        raise ValueError(f"malformed complex matrix: {exc}") from exc
    if m.ndim == 1:
        m = m.reshape(0, 0) if m.size == 0 else m.reshape(1, -1)
    if expected_shape is not None and m.shape != tuple(expected_shape):
        raise ValueError(f"matrix shape {m.shape} does not match expected {expected_shape}")
    return m


def tuple_to_dict(t: OperatorTuple) -> dict:
    return {
        "n": t.n,
        "dim": t.dim,
        "matrices": [matrix_to_lists(m) for m in t.matrices],
    }


def tuple_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOLERANCES) -> OperatorTuple:
    try:
        n = int(doc["n"])
        dim = int(doc["dim"])
        raw = doc["matrices"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed tuple document: {exc}") from exc
    if len(raw) != n:
        raise ValueError(f"document announces n={n} but carries {len(raw)} matrices")
    mats = [matrix_from_lists(r, expected_shape=(dim, dim)) for r in raw]
    return OperatorTuple(mats, tol)


def vector_to_dict(f: ModelVector) -> dict:
    space = f.space
    return {
        "n": space.n,
        "l": space.level,
        "p": space.coeff_dim,
        "N": space.degree,
        "coeffs": [[[float(v.real), float(v.imag)] for v in block] for block in f.coeffs],
    }


def vector_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOLERANCES) -> ModelVector:
    try:
        space = TruncatedModelSpace(
            int(doc["n"]), int(doc["l"]), int(doc["p"]), int(doc["N"]), tol=tol
        )
        coeffs = np.array(
            [[complex(c[0], c[1]) for c in block] for block in doc["coeffs"]],
            dtype=np.complex128,
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ValueError(f"malformed vector document: {exc}") from exc
    return space.vector(coeffs)


def realization_to_dict(r: Realization) -> dict:
    return {
        "m": r.m,
        "state": None if r.state is None else tuple_to_dict(r.state),
        "B": matrix_to_lists(r.b),
        "C": matrix_to_lists(r.c),
        "D": matrix_to_lists(r.d),
    }


def realization_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOLERANCES) -> Realization:
    try:
        m = int(doc["m"])
        state = None if doc.get("state") is None else tuple_from_dict(doc["state"], tol)
        b = matrix_from_lists(doc["B"])
        c = matrix_from_lists(doc["C"])
        d = matrix_from_lists(doc["D"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed realization document: {exc}") from exc
    if state is None and b.size == 0:
        b = b.reshape(0, d.shape[1])
        c = c.reshape(d.shape[0], 0)
    return Realization(m=m, state=state, b=b, c=c, d=d)


def poly_to_dict(w: PolyOperatorFunction) -> dict:
    return {
        "m": w.m,
        "n": w.n,
        "N": w.degree,
        "coeffs": [matrix_to_lists(c) for c in w.coeffs],
        "exact": bool(w.exact),
    }


def poly_from_dict(doc: dict) -> PolyOperatorFunction:
    try:
        m = int(doc["m"])
        n = int(doc["n"])
        degree = int(doc["N"])
        exact = bool(doc["exact"])
        mats = [matrix_from_lists(c) for c in doc["coeffs"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed function document: {exc}") from exc
    if not mats:
        raise ValueError("function document carries no coefficients")
    coeffs = np.stack(mats)
    return PolyOperatorFunction(m=m, n=n, degree=degree, coeffs=coeffs, exact=exact)
