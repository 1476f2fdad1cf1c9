"""Reading and writing spectra, density curves and reports.

Spectrum files hold one real per line (equal weights) or ``value,weight``
lines. Blank lines and lines starting with ``#`` are skipped. Density CSVs have
the header ``x,density`` and one row per grid point written with ``repr`` so
that they round-trip exactly.
"""
import json

import numpy as np

from .spectral import DensityCurve, Spectrum


def read_spectrum(path):
    values, weights = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [t.strip() for t in line.split(",")]
            if len(parts) > 2:
                raise ValueError(f"{path}:{lineno}: expected 'value' or 'value,weight'")
            try:
                values.append(float(parts[0]))
                weights.append(float(parts[1]) if len(parts) == 2 else None)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r}") from None
    if not values:
        raise ValueError(f"{path}: no spectrum values")
    given = [w is not None for w in weights]
    if any(given) and not all(given):
        raise ValueError(f"{path}: mix of weighted and unweighted lines")
    if all(given):
        w = np.array(weights)
        return Spectrum(values, w / w.sum())
    return Spectrum(values)


def write_spectrum(s, path):
    with open(path, "w") as fh:
        if s.is_uniform:
            fh.writelines(f"{float(v)!r}\n" for v in s.values)
        else:
            fh.writelines(f"{float(v)!r},{float(w)!r}\n" for v, w in zip(s.values, s.weights))


def write_density_csv(curve, path):
    with open(path, "w") as fh:
        fh.write("x,density\n")
        for x, y in zip(curve.grid, curve.values):
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def read_density_csv(path, meta=None):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,density":
            raise ValueError(f"{path}: expected header 'x,density', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return DensityCurve(data[:, 0], data[:, 1], dict(meta or {}))


def dumps(obj):
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def write_diagnostics(curve, path):
    """Per-grid-point root diagnostics of an analytic free density."""
    write_json(curve.meta.get("diagnostics", []), path)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj
