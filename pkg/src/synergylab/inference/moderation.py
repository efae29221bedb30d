"""Interaction model y = b0 + b1 g + b2 R + b3 W + b4 (R x W) + e."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .ols import OlsResult, ols, with_intercept

TERMS = ("const", "g", "R", "W", "RxW")


@dataclass(frozen=True, eq=False)
class ModerationResult:
    fit: OlsResult
    moderator: str = "W"

    @property
    def beta4(self) -> dict:
        return self.fit["RxW"]

    def as_dict(self) -> dict:
        b = self.beta4
        return {
            "moderator": self.moderator,
            "n_obs": self.fit.n_obs,
            "beta4": b["estimate"],
            "se": b["se"],
            "ci_low": b["ci_low"],
            "ci_high": b["ci_high"],
            "p": b["p"],
        }


def moderate(y, g, r, w, moderator: str = "W", robust: bool = False, level: float = 0.95) -> ModerationResult:
    y, g, r, w = (np.asarray(v, dtype=float) for v in (y, g, r, w))
    if not (len(y) == len(g) == len(r) == len(w)):
        raise DataError("moderation inputs are not aligned")
    if len(w) == 0 or np.ptp(w) == 0:
        raise DataError(f"degenerate moderator {moderator!r}: no variation")
    X = with_intercept(g, r, w, r * w)
    return ModerationResult(ols(y, X, TERMS, robust=robust, level=level), moderator)
