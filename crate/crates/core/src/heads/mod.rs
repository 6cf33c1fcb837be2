//! Box (center-point) and mask (reparameterizable) prediction heads.

mod decode;
mod msrep;
mod rec;
mod res;

pub use decode::{decode_boxes, is_peak, DetectionBox, MIN_BOX_SIDE};
pub use msrep::{msrep_forward, msrep_fuse, MsRepBranches, MsRepParams};
pub use rec::{rec_head_forward, RecBranch, RecHeadOutput, RecHeadParams};
pub use res::{binarize, res_head_forward, BinaryMask, ResHeadParams};
