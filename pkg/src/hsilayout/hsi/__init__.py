from .collision import collision_loss, penetration_sum
from .contact import (
    CATEGORIES,
    ContactAssignment,
    ContactParams,
    ContactRegions,
    ObjectContacts,
    assign_contacts,
    contact_loss,
    dilate_masks,
    extract_contact_regions,
    object_contact_term,
    split_contacts,
)
from .depth import (
    DepthRangeMaps,
    accumulate_depth_ranges,
    depth_order_loss,
    frame_depth_ranges,
    object_depth_penalty,
)
from .scene_terms import bbox_loss, bbox_term, projected_box, scale_loss, scale_term

__all__ = [
    "CATEGORIES", "ContactAssignment", "ContactParams", "ContactRegions", "DepthRangeMaps", "ObjectContacts",
    "accumulate_depth_ranges", "assign_contacts", "bbox_loss", "bbox_term", "collision_loss", "contact_loss",
    "depth_order_loss", "dilate_masks", "extract_contact_regions", "frame_depth_ranges", "object_contact_term",
    "object_depth_penalty", "penetration_sum", "projected_box", "scale_loss", "scale_term", "split_contacts",
]
