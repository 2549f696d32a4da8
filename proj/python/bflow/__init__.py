"""Boundary detection and boundary-flow estimation.

Thin python surface over the C++ core: network inference, the edgelet
matching pipeline, the synthetic scene generator with analytic ground
truth, and the evaluation metrics.
"""

from bflow._core import (
    BflowError,
    Fcsn,
    FcsnConfig,
    boundary_flow,
    boundary_summary,
    conv2d,
    deconv2d,
    epe,
    extract_edgelets,
    nms_thin,
    oversegment,
    read_pgm,
    read_ppm,
    render_entry,
    synth_dataset,
    write_pgm,
    write_ppm,
)

__all__ = [
    "BflowError",
    "Fcsn",
    "FcsnConfig",
    "boundary_flow",
    "boundary_summary",
    "conv2d",
    "deconv2d",
    "epe",
    "extract_edgelets",
    "nms_thin",
    "oversegment",
    "read_pgm",
    "read_ppm",
    "render_entry",
    "synth_dataset",
    "write_pgm",
    "write_ppm",
]
