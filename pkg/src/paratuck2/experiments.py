"""File formats and the experiment harness.

Tensor files are JSON objects::

    {"dims": [N1, N2, N3], "data_re": [...], "data_im": [...]}

with the flat arrays in slice-major, column-major-within-slice order.  Factor
files map each of ``A, B, F, G, H`` to ``{"rows", "cols", "data_re",
"data_im"}`` in column-major order.  Python's float repr is the shortest
string that round-trips, so values survive a save/load bit for bit.
"""
from concurrent.futures import ProcessPoolExecutor
import json
import math
import time

import numpy as np

from .algebraic import decompose
from .als import AlsOptions, als_run
from .errors import ParaTuckError, TensorFileError, TensorParseError
from .model import ParaTuck2Factors, random_instance, reconstruct, relative_error
from .tensor_core import as_tensor, frob_dist_sq, from_flat, to_flat

# the worked example: T_k = A D_k(G) F D_k(H) B^T for k = 1..10
DETERMINISTIC_F = [[1, 1], [2, -1]]
DETERMINISTIC_A = [[1, 1], [-1, 2]]
DETERMINISTIC_B = [[1, 1], [1, -3]]
DETERMINISTIC_G = [
    [-5, -4, -3, -2, -1, 0, 1, 2, 3, 4],
    [1, 0, 2, 1, -3, 2, -2, -1, 0, 1],
]
DETERMINISTIC_H = [
    [-5, -4, -3, -2, -1, 0, 1, 2, 3, 4],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
]

DEFAULT_THRESHOLD = 1e-16
METHODS = ("algebraic", "als", "both")


def deterministic_factors():
    return ParaTuck2Factors(
        DETERMINISTIC_A, DETERMINISTIC_B, DETERMINISTIC_F, DETERMINISTIC_G, DETERMINISTIC_H
    )


def deterministic_tensor():
    return reconstruct(deterministic_factors())


# -- serialization -----------------------------------------------------------

def _read_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise TensorFileError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise TensorParseError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(obj, path):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise TensorFileError(f"cannot write {path}: {exc}") from exc


def _floats(values, what):
    try:
        out = [float(x) for x in values]
    except (TypeError, ValueError) as exc:
        raise TensorParseError(f"{what} must be a list of numbers") from exc
    if not all(math.isfinite(x) for x in out):
        raise TensorParseError(f"{what} has non-finite values")
    return out


def tensor_to_dict(T):
    flat = to_flat(T)
    return {
        "dims": list(T.shape),
        "data_re": flat.real.tolist(),
        "data_im": flat.imag.tolist(),
    }


def tensor_from_dict(obj, what="tensor"):
    try:
        dims = [int(n) for n in obj["dims"]]
        re = _floats(obj["data_re"], f"{what} data_re")
        im = _floats(obj["data_im"], f"{what} data_im")
    except (KeyError, TypeError) as exc:
        raise TensorParseError(f"{what} needs dims, data_re and data_im") from exc
    if len(dims) != 3 or min(dims) < 1:
        raise TensorParseError(f"{what} dims must be three positive integers, got {dims}")
    n = dims[0] * dims[1] * dims[2]
    if len(re) != n or len(im) != n:
        raise TensorParseError(
            f"{what} dims {dims} need {n} values, got {len(re)} real and {len(im)} imaginary"
        )
    return from_flat(dims, np.array(re) + 1j * np.array(im))


def save_tensor(T, path):
    _write_json(tensor_to_dict(as_tensor(T)), path)


def load_tensor(path):
    return tensor_from_dict(_read_json(path), what=str(path))


def _matrix_to_dict(M):
    flat = M.ravel(order="F")
    return {
        "rows": M.shape[0],
        "cols": M.shape[1],
        "data_re": flat.real.tolist(),
        "data_im": flat.imag.tolist(),
    }


def _matrix_from_dict(obj, what):
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = _floats(obj["data_re"], f"{what} data_re")
        im = _floats(obj["data_im"], f"{what} data_im")
    except (KeyError, TypeError) as exc:
        raise TensorParseError(f"matrix {what} needs rows, cols, data_re, data_im") from exc
    if rows < 1 or cols < 1 or len(re) != rows * cols or len(im) != rows * cols:
        raise TensorParseError(f"matrix {what} data length does not match {rows}x{cols}")
    return (np.array(re) + 1j * np.array(im)).reshape((rows, cols), order="F")


def save_factors(f, path):
    _write_json({name: _matrix_to_dict(M) for name, M in zip("ABFGH", f.astuple())}, path)


def load_factors(path):
    obj = _read_json(path)
    try:
        mats = [_matrix_from_dict(obj[name], name) for name in "ABFGH"]
    except (KeyError, TypeError) as exc:
        raise TensorParseError(f"{path} must hold matrices A, B, F, G, H") from exc
    try:
        return ParaTuck2Factors(*mats)
    except ValueError as exc:
        raise TensorParseError(f"{path}: {exc}") from exc


# -- reports -----------------------------------------------------------------

def _complex_or_none(z):
    return None if z is None else [float(z.real), float(z.imag)]


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def decomposition_report(T, factors=None, diag=None, error=None, wall_time=0.0):
    """Schema-stable record of one :func:`decompose` call."""
    d = diag
    rep = {
        "kind": "decomposition",
        "dims": list(T.shape),
        "status": "ok" if error is None else error.name,
        "stage": None if error is None else error.stage,
        "message": None if error is None else str(error),
        "exit_code": 0 if error is None else error.exit_code,
        "residual_abs": None,
        "residual_rel": None,
        "residual_abs_algebraic": None,
        "als_iterations": 0,
        "als_trace": [],
        "diagnostics": {
            "compression_ratio_mode1": None,
            "compression_ratio_mode2": None,
            "phi_kernel_ratio": None,
            "phi_gap": None,
            "kernel_ambiguous": None,
            "rank_one_ratio": None,
            "pivot": None,
            "slice_rank_one_max": None,
        },
        "generators": {"alpha": None, "beta": None},
        "wall_time_s": wall_time,
    }
    if d is not None:
        for key in rep["diagnostics"]:
            val = getattr(d, key)
            rep["diagnostics"][key] = _finite_or_none(val) if isinstance(val, float) else val
        if d.alpha is not None:
            rep["generators"]["alpha"] = [_complex_or_none(z) for z in d.alpha]
            rep["generators"]["beta"] = [_complex_or_none(z) for z in d.beta]
        rep["residual_abs_algebraic"] = _finite_or_none(d.residual_abs_algebraic)
        rep["als_iterations"] = d.als_iterations
        rep["als_trace"] = [float(e) for e in d.als_trace]
    if factors is not None:
        That = reconstruct(factors)
        rep["residual_abs"] = frob_dist_sq(T, That)
        rep["residual_rel"] = relative_error(T, That)
    return rep


def run_decomposition(T, als_refine=0, tol=None):
    """Decompose ``T`` and report; solver errors are captured in the report.

    Returns
    -------
    factors : ParaTuck2Factors or None
        Best-effort factors, also on verification failure.
    report : dict
    error : ParaTuckError or None
    """
    T = as_tensor(T)
    t0 = time.perf_counter()
    try:
        factors, diag = decompose(T, als_iters=als_refine, verify_tol=tol)
        error = None
    except ParaTuckError as exc:
        factors = getattr(exc, "factors", None)
        diag = getattr(exc, "diagnostics", None)
        error = exc
    wall = time.perf_counter() - t0
    return factors, decomposition_report(T, factors, diag, error, wall), error


def run_deterministic_repro(als_refine=0, report_path=None):
    """Decompose the built-in worked example and optionally write the report."""
    T = deterministic_tensor()
    _, report, _ = run_decomposition(T, als_refine=als_refine)
    report["kind"] = "deterministic-repro"
    report["als_refine"] = als_refine
    if report_path is not None:
        _write_json(report, report_path)
    return report


def _trial(args):
    trial, seed, dims, method, threshold, als_max_iters, tensor = args
    if tensor is None:
        _, T = random_instance(dims, seed)
    else:
        T = tensor
    rows = []
    if method in ("algebraic", "both"):
        t0 = time.perf_counter()
        try:
            _, diag = decompose(T)
            res, rel, status = diag.residual_abs, diag.residual_rel, "ok"
        except ParaTuckError as exc:
            res, rel, status = None, None, exc.name
        rows.append(_row(trial, seed, "algebraic", status, res, rel, threshold, None, t0))
    if method in ("als", "both"):
        t0 = time.perf_counter()
        f, trace = als_run(T, seed, AlsOptions(max_iters=als_max_iters))
        res = frob_dist_sq(T, reconstruct(f))
        rows.append(
            _row(trial, seed, "als", "ok", res, relative_error(T, reconstruct(f)),
                 threshold, trace.iterations, t0)
        )
    return rows


def _row(trial, seed, method, status, res, rel, threshold, iters, t0):
    return {
        "trial": trial,
        "seed": seed,
        "method": method,
        "status": status,
        "residual_abs": res,
        "residual_rel": rel,
        "success": res is not None and res < threshold,
        "iterations": iters,
        "wall_time_s": time.perf_counter() - t0,
    }


def run_monte_carlo(trials, dims=(10, 10, 15), base_seed=0, threshold=DEFAULT_THRESHOLD,
                    method="algebraic", report_path=None, tensor=None, als_max_iters=5000,
                    jobs=1):
    """Repeated decompositions with per-trial seeds ``base_seed + i``.

    Each trial draws a random model tensor from its seed, unless ``tensor`` is
    given, in which case every trial uses it and the seed only drives the
    random ALS start.  Failures count as non-successes.  Rows are ordered by
    trial index, so the numeric content does not depend on ``jobs``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    dims = tuple(int(n) for n in (tensor.shape if tensor is not None else dims))
    if tensor is not None:
        tensor = as_tensor(tensor)
    tasks = [
        (i, base_seed + i, dims, method, threshold, als_max_iters, tensor) for i in range(trials)
    ]
    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial, tasks))
    else:
        results = [_trial(t) for t in tasks]
    rows = sorted((r for rs in results for r in rs), key=lambda r: (r["trial"], r["method"]))

    methods = ["algebraic", "als"] if method == "both" else [method]
    report = {
        "kind": "monte-carlo",
        "method": method,
        "dims": list(dims),
        "fixed_tensor": tensor is not None,
        "base_seed": base_seed,
        "trials": trials,
        "threshold": threshold,
        "als_max_iters": als_max_iters,
        "success_count": {m: sum(r["success"] for r in rows if r["method"] == m) for m in methods},
        "rows": rows,
        "wall_time_s": time.perf_counter() - t0,
    }
    if report_path is not None:
        _write_json(report, report_path)
    return report
