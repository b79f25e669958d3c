"""
Platform role assignment: training, validation and cross-platform test.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

from src.preprocessing.data_loader import PlatformDataset
from src.utils.errors import SplitError

logger = logging.getLogger(__name__)

STANDARD_TRAIN_PLATFORMS = ("fb-yt", "twitter", "wiki")
STANDARD_VALIDATION_PLATFORM = "stormfront"


@dataclass
class SplitPlan:
    train: List[PlatformDataset]
    validation: Optional[PlatformDataset]
    test: List[PlatformDataset]

    @property
    def train_names(self):
        return [d.platform for d in self.train]

    @property
    def test_names(self):
        return [d.platform for d in self.test]

    @property
    def validation_name(self):
        return None if self.validation is None else self.validation.platform

    def role_of(self, platform: str) -> Optional[str]:
        if platform in self.train_names:
            return "train"
        if platform == self.validation_name:
            return "validation"
        if platform in self.test_names:
            return "test"
        return None

    def as_dict(self):
        return {
            "train_platforms": self.train_names,
            "val_platform": self.validation_name,
            "test_platforms": self.test_names,
        }


def make_splits(
    datasets: Sequence[PlatformDataset],
    train_platforms: Sequence[str],
    validation_platform: Optional[str],
    test_platforms: Optional[Sequence[str]] = None,
) -> SplitPlan:
    """
    Assign platforms to roles.

    test_platforms=None puts every platform not named elsewhere into test;
    an explicit empty list gives an empty test role.
    """
    by_name = {d.platform: d for d in datasets}

    train_platforms = list(train_platforms)
    if not train_platforms:
        raise SplitError("at least one training platform is required")

    named = list(train_platforms)
    if validation_platform is not None:
        named.append(validation_platform)
    if test_platforms is not None:
        named.extend(test_platforms)

    unknown = [name for name in named if name not in by_name]
    if unknown:
        raise SplitError(f"unknown platform(s): {', '.join(unknown)}; available: {', '.join(by_name)}")

    seen = set()
    for name in named:
        if name in seen:
            raise SplitError(f"platform {name} is assigned to more than one role")
        seen.add(name)

    if test_platforms is None:
        test_platforms = [d.platform for d in datasets if d.platform not in seen]

    plan = SplitPlan(
        train=[by_name[name] for name in train_platforms],
        validation=None if validation_platform is None else by_name[validation_platform],
        test=[by_name[name] for name in test_platforms],
    )
    logger.info(
        f"Split: train={plan.train_names} validation={plan.validation_name} test={plan.test_names}"
    )
    return plan
