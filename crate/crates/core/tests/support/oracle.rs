//! Independent numeric references for the block split. Nothing here calls
//! into the closed-form geometry.

use proplane_core::Block;

/// Midpoint Riemann sum of `clamp(w h^r - t, p_lo, p_hi) - p_lo` over the
/// block's abscissa range.
///
/// Cells are graded quadratically toward `h_lo` (node `i` sits at
/// `h_lo + width * (i/n)^2`). A uniform partition loses about 1e-7 near the
/// origin, where `h^r` has an unbounded derivative for small `r`.
pub fn riemann_b_r(block: &Block, w: f64, r: f64, t: f64, n: usize) -> f64 {
    let (h_lo, width) = (block.h_lo(), block.width());
    let (p_lo, p_hi) = (block.p_lo(), block.p_hi());
    let mut sum = 0.0;
    let mut left = h_lo;
    for i in 1..=n {
        let u = i as f64 / n as f64;
        let right = h_lo + width * u * u;
        let mid = 0.5 * (left + right);
        let s = w * mid.powf(r) - t;
        sum += (s.clamp(p_lo, p_hi) - p_lo) * (right - left);
        left = right;
    }
    sum
}

/// Decision by the strict rule from oracle areas.
pub fn riemann_deploys(block: &Block, w: f64, r: f64, t: f64, n: usize) -> bool {
    let b_r = riemann_b_r(block, w, r, t, n);
    b_r > block.area() - b_r
}
