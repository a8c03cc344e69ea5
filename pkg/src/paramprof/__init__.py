"""Parameter-centric energy profiling for constants buried in source code.

The pipeline is: scan a corpus for constant literals, filter them down to
candidate deep parameters, plan replacement values, measure baseline and
mutated builds back to back, and flag values whose energy drop survives a
thresholded one-sided t-test.
"""

from paramprof.source_model import (
    AdapterConfig,
    ConstantSite,
    Enclosure,
    EnumDomain,
    ScanResult,
    SyntaxContext,
    scan_corpus,
    scan_source,
)

__all__ = [
    "AdapterConfig",
    "ConstantSite",
    "Enclosure",
    "EnumDomain",
    "ScanResult",
    "SyntaxContext",
    "scan_corpus",
    "scan_source",
]

__version__ = "0.1.0"
