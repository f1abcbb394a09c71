from typing import Dict, Type

from .base import KernelFamily, KernelFamilyDetails
from .indicator import Indicator
from .powercap import PowerCap
from .tabulated import Tabulated, validate_samples
from .triangular import Triangular

KERNEL_FAMILIES: Dict[KernelFamily, Type[KernelFamilyDetails]] = {
    KernelFamily.INDICATOR: Indicator,
    KernelFamily.TRIANGULAR: Triangular,
    KernelFamily.POWER_CAP: PowerCap,
    KernelFamily.TABULATED: Tabulated,
}

__all__ = [
    "KERNEL_FAMILIES",
    "KernelFamily",
    "KernelFamilyDetails",
    "validate_samples",
]
