"""Resource caps and numeric tolerances, overridable via environment variables.

Every cap can be overridden by setting GROUPBIAS_<NAME>, e.g.
GROUPBIAS_DENSE_VERIFY_CAP=2048. Tolerances are fixed constants; they are part
of the certificate semantics and are not meant to be tuned per run.
"""

from __future__ import annotations

import os

# Caps (env-overridable).
_DEFAULTS = {
    # Largest group order certified by a dense SVD of the walk operator.
    "DENSE_VERIFY_CAP": 4096,
    # Largest group order certified by matrix-free power iteration.
    "ITER_VERIFY_CAP": 65536,
    # Largest character count enumerated by the exact abelian oracle.
    "CHAR_ENUM_CAP": 1 << 20,
    # Largest field size q used by the powering construction (set size is q^2).
    "FIELD_SIZE_CAP": 1024,
    # Largest group order for which a full multiplication table is materialized.
    "TABLE_CAP": 512,
    # Largest per-side size for which the expander count matrix is stored densely.
    "EXPANDER_SIDE_CAP": 13000,
    # Largest per-side size certified by a dense eigensolve (above: power iteration).
    "EXPANDER_DENSE_CAP": 4096,
    # Upper bound on prime search (both p and q) before giving up.
    "PRIME_SEARCH_CAP": 10**14,
    # Largest element count written into a JSON certificate.
    "SERIALIZE_CAP": 4_000_000,
    # Largest edge count written into an edge-list file.
    "EDGE_FILE_CAP": 20_000_000,
}

# Tolerances (fixed).
CERT_TOL = 1e-9        # certification agreement (oracle vs spectral, quotients, covers)
SOUNDNESS_TOL = 1e-6   # certified_bias <= claimed_bias + SOUNDNESS_TOL for bound claims
LEMMA_TOL = 1e-12      # exact-inequality Monte-Carlo checks
POWER_RESIDUAL = 1e-8  # power-iteration convergence residual
POWER_MAX_ITER = 200_000


def cap(name: str) -> int:
    """Return the named cap, honoring a GROUPBIAS_<name> environment override."""
    if name not in _DEFAULTS:
        raise KeyError(f"unknown cap {name!r}")
    raw = os.environ.get(f"GROUPBIAS_{name}")
    if raw is None:
        return _DEFAULTS[name]
    value = int(raw)
    if value < 1:
        raise ValueError(f"GROUPBIAS_{name} must be positive, got {value}")
    return value
