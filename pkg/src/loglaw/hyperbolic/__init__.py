"""Geodesic flows on hyperbolic surfaces, from Mobius algebra up to the
compiled target scans."""

from loglaw.hyperbolic.cache import TranslateCache, build_cache
from loglaw.hyperbolic.domains import BOLZA, MODULAR, FuchsianDomain
from loglaw.hyperbolic.flow import (GeodesicFlow, ball_entry_scan, base_ball, liouville_sample,
                                    reduce_to_domain, sasaki_ball, scan_entry, target_vector)
from loglaw.hyperbolic.mobius import MobiusTransform, hyp_distance
from loglaw.hyperbolic.tangent import UnitTangent, geodesic_advance, sasaki_distance

__all__ = [
    "BOLZA", "MODULAR", "FuchsianDomain", "GeodesicFlow", "MobiusTransform", "TranslateCache",
    "UnitTangent", "ball_entry_scan", "base_ball", "build_cache", "geodesic_advance", "hyp_distance",
    "liouville_sample", "reduce_to_domain", "sasaki_ball", "sasaki_distance", "scan_entry", "target_vector",
]
