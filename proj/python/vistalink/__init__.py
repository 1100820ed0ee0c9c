"""Python access to the vistalink registration engine."""

from ._vistalink import (
    Image,
    Project,
    VistalinkError,
    auto_group,
    decode_image,
    estimate_exact,
    estimate_robust,
    extract_features,
    fit_homography,
    image_from_gray,
    load_image,
    match_descriptors,
    render_focus_view,
    verify_pair,
    warp_point,
)

__all__ = [
    "Image",
    "Project",
    "VistalinkError",
    "auto_group",
    "decode_image",
    "estimate_exact",
    "estimate_robust",
    "extract_features",
    "fit_homography",
    "image_from_gray",
    "load_image",
    "match_descriptors",
    "render_focus_view",
    "verify_pair",
    "warp_point",
]
