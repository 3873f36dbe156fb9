"""Small shared helpers."""

from __future__ import annotations

import numpy as np

DB_CAP = 200.0


def to_db(x, cap: float = DB_CAP):
    """10*log10 with +/-cap sentinels for zero/infinite ratios."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -cap)
    np.log10(x, out=out, where=x > 0)
    out = np.where(x > 0, 10.0 * out, out)
    out = np.where(np.isposinf(x), cap, out)
    out = np.clip(out, -cap, cap)
    if np.ndim(x) == 0:
        return float(out)
    return out


def from_db(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
