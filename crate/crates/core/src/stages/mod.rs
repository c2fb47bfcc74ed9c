//! The five optional correction stages, applied between NUC and tonemapping:
//! bad-pixel replacement, destriping, spatial denoising, temporal denoising,
//! and flare correction. Every stage preserves dimensions, bit depth, and the
//! frame's FPA temperature, and keeps samples within the valid range.

mod bpr;
mod destripe;
mod flare;
mod spatial;
mod temporal;

pub use bpr::{replace_bad_pixels, BprParams};
pub use destripe::{destripe, DestripeParams};
pub use flare::{flare_correct, FlareParams};
pub use spatial::{spatial_denoise, SpatialDenoiseParams};
pub use temporal::{match_block, temporal_denoise, BlockMatch, TdnState, TemporalDenoiseParams};

pub(crate) use destripe::smooth_means;

/// Symmetric (mirror) boundary index: ...2 1 0 | 0 1 2 ... n-1 | n-1 n-2...
/// Valid for any offset via periodic folding.
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut j = i.rem_euclid(2 * n);
    if j >= n {
        j = 2 * n - 1 - j;
    }
    j as usize
}
