"""
Size-limit policy shared by the enumerators and the Q recursion.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from . import config
from .config import Settings
from .errors import SizeLimitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LimitPolicy:
    """Point limits in force for one computation."""
    enumeration_limit: int = 9
    kernel_limit: int = 14

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "LimitPolicy":
        settings = settings or config.settings
        return cls(
            enumeration_limit=settings.effective_enumeration_limit,
            kernel_limit=settings.effective_kernel_limit,
        )

    def resolve(self, requested_limit: Optional[int], kernel: bool = False) -> int:
        """
        Get the effective limit.

        Args:
            requested_limit: Explicit limit passed by the caller, if any
            kernel: Whether the limit is for the Q recursion

        Returns:
            The explicit limit when given, otherwise the policy limit
        """
        if requested_limit is not None:
            return requested_limit
        return self.kernel_limit if kernel else self.enumeration_limit


def check_size(total: int, limit: Optional[int] = None, kernel: bool = False) -> None:
    """
    Raise SizeLimitError when total points exceed the effective limit.
    """
    effective = LimitPolicy.from_settings().resolve(limit, kernel=kernel)
    if total > effective:
        logger.warning(f"Size {total} over limit {effective}")
        raise SizeLimitError(total, effective)
