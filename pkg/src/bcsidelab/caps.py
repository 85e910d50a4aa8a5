"""Resource caps guarding codebook and candidate enumeration.

Resolution order: explicit values (e.g. a scenario file's ``caps``), then the
``BCSIDELAB_CAP`` environment variable (applies to both caps), then defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

CAP_ENV = "BCSIDELAB_CAP"
DEFAULT_CODEBOOK_CAP = 2**24
DEFAULT_CANDIDATE_CAP = 2**20


class ResourceCapError(RuntimeError):
    """Raised when a codebook or candidate set would exceed its configured cap."""


def _env_cap() -> int | None:
    raw = os.environ.get(CAP_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{CAP_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{CAP_ENV} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class Caps:
    codebook: int = DEFAULT_CODEBOOK_CAP
    candidates: int = DEFAULT_CANDIDATE_CAP

    @classmethod
    def resolve(cls, codebook: int | None = None, candidates: int | None = None) -> "Caps":
        env = _env_cap()
        return cls(
            codebook=codebook if codebook is not None else (env or DEFAULT_CODEBOOK_CAP),
            candidates=candidates if candidates is not None else (env or DEFAULT_CANDIDATE_CAP),
        )


def check(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise ResourceCapError(f"{what} needs {count} entries, cap is {cap} (set {CAP_ENV} to raise it)")
