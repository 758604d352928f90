"""JSON file formats for graphs, families, polynomials, triples, kernels and characters.

References between files (a family naming its graph file, a triple naming
its family file) are resolved relative to the referring file.  Complex
numbers are accepted as a bare number, ``[re, im]`` or ``{"re", "im"}``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path as FsPath
from typing import Any

import numpy as np

from .errors import GraphSpecError, InputError, ShapeMismatch
from .family import OperatorFamily, validate_family
from .kgraph import KGraph, Path, graph_from_dict
from .linalg import matrix_from_dict, matrix_to_dict
from .polynomial import PolySpec
from .states import StateKernel, StateTriple, kernel_symbols, make_triple

SIG_DIGITS = 12


def read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def parse_complex(value) -> complex:
    if isinstance(value, bool):
        raise InputError(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, dict) and set(value) <= {"re", "im"} and "re" in value:
        return complex(value["re"], value.get("im", 0.0))
    raise InputError(f"cannot read a complex number from {value!r}")


def complex_to_json(z: complex) -> list[float]:
    return [round_sig(z.real), round_sig(z.imag)]


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    x = float(x)
    if x == 0 or not math.isfinite(x):
        return 0.0 if x == 0 else x
    return float(f"{x:.{digits}g}")


def jsonable(obj):
    """Recursively convert numbers, arrays and tuples to rounded JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(complex(obj))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2)


def _resolve(base: FsPath | None, ref: str) -> FsPath:
    p = FsPath(ref)
    if not p.is_absolute() and base is not None:
        p = base.parent / p
    return p


def load_graph(path) -> KGraph:
    data = read_json(path)
    if not isinstance(data, dict):
        raise GraphSpecError(f"{path}: a graph file holds one JSON object")
    return graph_from_dict(data)


def _graph_ref(value, base: FsPath | None, fallback: KGraph | None = None) -> KGraph:
    if value is None and fallback is not None:
        return fallback
    if isinstance(value, str):
        return load_graph(_resolve(base, value))
    if isinstance(value, dict):
        return graph_from_dict(value)
    raise InputError("'graph' must be a file reference or an inline graph object")


def _check_keys(obj: dict, required: set[str], optional: set[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{what} must be a JSON object")
    missing = required - set(obj)
    extra = set(obj) - required - optional
    if missing:
        raise InputError(f"{what} is missing {sorted(missing)}")
    if extra:
        raise InputError(f"{what} has unknown fields {sorted(extra)}")


def family_from_dict(data: dict, base: FsPath | None = None) -> OperatorFamily:
    _check_keys(data, {"graph", "dims", "edges"}, set(), "family file")
    graph = _graph_ref(data["graph"], base)
    if not isinstance(data["dims"], dict) or not isinstance(data["edges"], dict):
        raise ShapeMismatch("'dims' and 'edges' must be objects")
    edges = {name: matrix_from_dict(m) for name, m in data["edges"].items()}
    return validate_family(graph, data["dims"], edges)


def load_family(path) -> OperatorFamily:
    path = FsPath(path)
    return family_from_dict(read_json(path), path)


def family_to_dict(fam: OperatorFamily, graph_ref: str | None = None) -> dict:
    return {
        "graph": graph_ref if graph_ref is not None else fam.graph.to_dict(),
        "dims": dict(fam.dims),
        "edges": {name: matrix_to_dict(m) for name, m in fam.blocks.items()},
    }


def poly_from_json(data, graph: KGraph) -> PolySpec:
    if isinstance(data, dict) and "terms" in data:
        _check_keys(data, {"terms"}, {"unit"}, "polynomial")
        items = list(data["terms"]) + ([{"unit": data["unit"]}] if "unit" in data else [])
    elif isinstance(data, list):
        items = data
    else:
        raise InputError("a polynomial is a JSON array of terms")
    unit = 0.0
    terms = []
    for item in items:
        if not isinstance(item, dict):
            raise InputError(f"polynomial entries must be objects, got {item!r}")
        if "unit" in item:
            _check_keys(item, {"unit"}, set(), "unit entry")
            unit += parse_complex(item["unit"])
            continue
        _check_keys(item, {"mu", "nu", "coeff"}, set(), "polynomial term")
        mu = graph.parse_path(item["mu"])
        nu = graph.parse_path(item["nu"])
        terms.append((mu, nu, parse_complex(item["coeff"])))
    return PolySpec.build(graph, terms, unit)


def load_poly(path, graph: KGraph) -> PolySpec:
    return poly_from_json(read_json(path), graph)


def path_to_str(lam: Path) -> str:
    return lam.range if lam.is_vertex else f"{lam.range}:{'.'.join(lam.edges)}"


def poly_to_json(p: PolySpec) -> list:
    out: list = [{"mu": path_to_str(m), "nu": path_to_str(n), "coeff": complex_to_json(c)} for m, n, c in p.terms]
    if p.unit:
        out.append({"unit": complex_to_json(p.unit)})
    return out


def _vector(value, what: str) -> np.ndarray:
    if not isinstance(value, list):
        raise InputError(f"{what} must be a JSON array")
    return np.array([parse_complex(v) for v in value], dtype=complex)


def load_triple(path) -> StateTriple:
    path = FsPath(path)
    data = read_json(path)
    _check_keys(data, {"family", "omega"}, set(), "triple file")
    ref = data["family"]
    fam = load_family(_resolve(path, ref)) if isinstance(ref, str) else family_from_dict(ref, path)
    return make_triple(fam, _vector(data["omega"], "omega"))


def _symbol(graph: KGraph, text):
    if text in (None, "", "()"):
        return None
    return graph.parse_path(text)


def kernel_from_json(data: dict, base: FsPath | None = None, graph: KGraph | None = None) -> StateKernel:
    _check_keys(data, {"cap", "entries"} | (set() if graph else {"graph"}), {"graph"}, "kernel file")
    graph = _graph_ref(data.get("graph"), base, graph)
    from . import kgraph as kg

    cap = kg.as_degree(data["cap"], graph.rank)
    syms = kernel_symbols(graph, cap)
    index = {s: i for i, s in enumerate(syms)}
    n = len(syms)
    mat = np.full((n, n), np.nan, dtype=complex)
    for entry in data["entries"]:
        _check_keys(entry, {"lam", "mu", "re"}, {"im"}, "kernel entry")
        a, b = _symbol(graph, entry["lam"]), _symbol(graph, entry["mu"])
        if a not in index or b not in index:
            raise ShapeMismatch(f"kernel entry ({entry['lam']}, {entry['mu']}) lies outside the cap")
        mat[index[a], index[b]] = complex(entry["re"], entry.get("im", 0.0))
    missing = np.isnan(mat.real)
    mat[missing] = np.conj(mat.T[missing])
    if np.any(np.isnan(mat.real)):
        i, j = map(int, np.argwhere(np.isnan(mat.real))[0])
        raise ShapeMismatch(f"kernel value missing for ({syms[i]}, {syms[j]})")
    return StateKernel(graph, cap, syms, mat)


def load_kernel(path, graph: KGraph | None = None) -> StateKernel:
    """Read a kernel file; ``graph`` is used when the file has no ``"graph"`` field."""
    path = FsPath(path)
    return kernel_from_json(read_json(path), path, graph)


def kernel_to_json(k: StateKernel, graph_ref) -> dict:
    entries = []
    for i, a in enumerate(k.symbols):
        for j, b in enumerate(k.symbols):
            z = k.matrix[i, j]
            entries.append(
                {
                    "lam": "" if a is None else path_to_str(a),
                    "mu": "" if b is None else path_to_str(b),
                    "re": round_sig(z.real),
                    "im": round_sig(z.imag),
                }
            )
    return {"graph": graph_ref, "cap": list(k.cap), "entries": entries}


def load_character(path, graph: KGraph | None = None):
    """Return ``(graph, vertex, alphas)`` from a character file."""
    path = FsPath(path)
    data = read_json(path)
    _check_keys(data, {"vertex", "alphas"} | (set() if graph else {"graph"}), {"graph"}, "character file")
    graph = _graph_ref(data.get("graph"), path, graph)
    if not isinstance(data["alphas"], dict):
        raise InputError("'alphas' must be an object")
    return graph, data["vertex"], {k: parse_complex(v) for k, v in data["alphas"].items()}


def load_derivation(path, graph: KGraph | None = None):
    """Return ``(graph, a, b, alpha_b, alphas)`` from a derivation file."""
    path = FsPath(path)
    data = read_json(path)
    _check_keys(data, {"a", "b", "alpha_b", "alphas"} | (set() if graph else {"graph"}), {"graph"}, "derivation file")
    graph = _graph_ref(data.get("graph"), path, graph)
    if not isinstance(data["alphas"], dict):
        raise InputError("'alphas' must be an object")
    alphas = {k: parse_complex(v) for k, v in data["alphas"].items()}
    return graph, data["a"], data["b"], parse_complex(data["alpha_b"]), alphas
