"""Dense-dimension caps, overridable through the ETALAB_DENSE_LIMIT env var."""

import os

# Default caps per code path. The density-matrix integrator stores full rho,
# so it is capped much lower than spectral decompositions.
DENSE_DIAG_LIMIT = 5000
MASTER_DIM_LIMIT = 500
SUPEROP_ENTRIES_LIMIT = 4096  # cap on dim**2 of a dense Liouvillian


def dense_limit(default):
    """Resolve a dense cap, honouring the ETALAB_DENSE_LIMIT override."""
    raw = os.environ.get("ETALAB_DENSE_LIMIT")
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"ETALAB_DENSE_LIMIT must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError("ETALAB_DENSE_LIMIT must be positive")
    return value
