"""Colocation of periodic resource reservations through safe SLA rewriting."""
from .sla import FluidSla, InvalidSla, SlaType, validate
from .transform import BoundedTransform, GenLimits, gen_transforms, subtype_ct, subtype_ctdw

__all__ = ["FluidSla", "InvalidSla", "SlaType", "validate", "BoundedTransform", "GenLimits",
           "gen_transforms", "subtype_ct", "subtype_ctdw"]
