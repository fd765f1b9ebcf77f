//! Evaluation of the implementation curve and exact block splitting.
//!
//! The curve `s(h) = w * h^r - t` is nondecreasing on `h >= 0`, so a block
//! `[h_lo, h_hi] x [p_lo, p_hi]` meets it in at most one band bounded by the
//! abscissas where `s` crosses `p_lo` and `p_hi`. The deploy-side area is
//!
//! ```text
//! b_r = ∫ (clamp(s(h), p_lo, p_hi) - p_lo) dh   over [h_lo, h_hi]
//! ```
//!
//! and is evaluated in closed form from the antiderivative
//! `w * h^(r+1) / (r+1) - t * h` between those two crossings.

use thiserror::Error;

use crate::domain::{Block, BlockSplit, Decision, DomainError, DynamicFunction, PlaneGrid, TMode};

/// Stopping tolerance on `|b_r - b_l|` for the frontier search.
pub const FRONTIER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("abscissa must be non-negative, got {0}")]
    NegativeAbscissa(f64),
    #[error("invalid interval [{0}, {1}]: need 0 <= a <= b")]
    InvalidInterval(f64, f64),
}

/// Where the curve meets a given ordinate inside an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    At(f64),
    /// The ordinate lies above the curve over the whole interval.
    NoneAbove,
    /// The ordinate lies below the curve over the whole interval.
    NoneBelow,
}

impl Crossing {
    pub fn abscissa(self) -> Option<f64> {
        match self {
            Self::At(h) => Some(h),
            _ => None,
        }
    }
}

pub fn eval_s(f: &DynamicFunction, h: f64) -> Result<f64, GeometryError> {
    if !(h >= 0.0) {
        return Err(GeometryError::NegativeAbscissa(h));
    }
    Ok(curve(f.w(), f.r(), f.t(), h))
}

pub fn crossing(f: &DynamicFunction, p: f64, a: f64, b: f64) -> Crossing {
    let (a, b) = (a.max(0.0), b.max(0.0));
    if p + f.t() < 0.0 {
        return Crossing::NoneBelow;
    }
    let h = inverse(f.w(), f.r(), f.t(), p);
    if h < a {
        Crossing::NoneBelow
    } else if h > b {
        Crossing::NoneAbove
    } else {
        Crossing::At(h)
    }
}

/// Signed integral of `s` over `[a, b]`.
pub fn integral_s(f: &DynamicFunction, a: f64, b: f64) -> Result<f64, GeometryError> {
    if !(0.0 <= a && a <= b) || !b.is_finite() {
        return Err(GeometryError::InvalidInterval(a, b));
    }
    Ok(antiderivative(f.w(), f.r(), f.t(), b) - antiderivative(f.w(), f.r(), f.t(), a))
}

pub fn split_block(block: &Block, f: &DynamicFunction) -> BlockSplit {
    split_raw(block, f.w(), f.r(), f.t())
}

/// Splits every block of the grid, in the grid's row-major order.
pub fn decision_matrix(grid: &PlaneGrid, f: &DynamicFunction) -> Vec<BlockSplit> {
    grid.blocks().iter().map(|b| split_block(b, f)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frontier {
    /// Smallest appearance probability that deploys, to within
    /// [`FRONTIER_TOLERANCE`] of the tie.
    At(f64),
    /// Even `w = 1` does not deploy.
    Unreachable,
}

impl Frontier {
    pub fn w(self) -> Option<f64> {
        match self {
            Self::At(w) => Some(w),
            Self::Unreachable => None,
        }
    }
}

/// Bisects on `w` for the point where the block flips to deploy.
///
/// `b_r` is continuous and nondecreasing in `w`, zero at `w = 0` for any
/// first-quadrant block, and strictly increasing wherever the curve cuts the
/// block, so the flip point is unique.
pub fn deployment_frontier_w(block: &Block, r: f64, t: f64) -> Result<Frontier, DomainError> {
    // validates r and t
    DynamicFunction::with_mode(1.0, r, t, TMode::Continuous)?;

    let margin = |w: f64| {
        let s = split_raw(block, w, r, t);
        s.b_r - s.b_l
    };
    if margin(1.0) <= 0.0 {
        return Ok(Frontier::Unreachable);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        if margin(hi) <= FRONTIER_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Frontier::At(hi))
}

fn curve(w: f64, r: f64, t: f64, h: f64) -> f64 {
    w * h.powf(r) - t
}

fn antiderivative(w: f64, r: f64, t: f64, h: f64) -> f64 {
    w * h.powf(r + 1.0) / (r + 1.0) - t * h
}

/// Abscissa with `s(h) = p`, assuming `p + t >= 0`. May be `inf` when the
/// curve is too flat to reach `p` in floating point.
fn inverse(w: f64, r: f64, t: f64, p: f64) -> f64 {
    ((p + t) / w).powf(1.0 / r)
}

/// Same as [`split_block`] on raw parameters; `w` may be zero here.
fn split_raw(block: &Block, w: f64, r: f64, t: f64) -> BlockSplit {
    let (h_lo, h_hi) = (block.h_lo(), block.h_hi());
    let (p_lo, p_hi) = (block.p_lo(), block.p_hi());
    let area = block.area();

    let enter = |p: f64| -> f64 {
        if w <= 0.0 {
            return h_hi;
        }
        if p + t <= 0.0 {
            return h_lo;
        }
        inverse(w, r, t, p).clamp(h_lo, h_hi)
    };
    // curve is inside the band on [a, b] and above p_hi on [b, h_hi]
    let a = enter(p_lo);
    let b = enter(p_hi).max(a);

    let inside = if a < b {
        antiderivative(w, r, t, b) - antiderivative(w, r, t, a) - p_lo * (b - a)
    } else {
        0.0
    };
    let b_r = (inside + (p_hi - p_lo) * (h_hi - b)).clamp(0.0, area);
    let b_l = area - b_r;
    BlockSplit {
        block: *block,
        b_l,
        b_r,
        decision: Decision::from_areas(b_l, b_r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{HarmLevel, PrivacyLevel};
    use proptest::prelude::*;

    fn f(w: f64, r: f64, t: f64) -> DynamicFunction {
        DynamicFunction::with_mode(w, r, t, TMode::Continuous).unwrap()
    }

    fn block(h_lo: f64, h_hi: f64, p_lo: f64, p_hi: f64) -> Block {
        Block::new(PrivacyLevel::P1, HarmLevel::H1, h_lo, h_hi, p_lo, p_hi).unwrap()
    }

    /// Midpoint sum of the clamped integrand on a partition graded
    /// quadratically toward `h_lo`, where `h^r` is singular for blocks
    /// touching the origin.
    fn riemann_b_r(b: &Block, w: f64, r: f64, t: f64, n: usize) -> f64 {
        let node = |i: usize| {
            let u = i as f64 / n as f64;
            b.h_lo() + b.width() * u * u
        };
        let mut sum = 0.0;
        let mut left = node(0);
        for i in 1..=n {
            let right = node(i);
            let mid = 0.5 * (left + right);
            let s = w * mid.powf(r) - t;
            sum += (s.clamp(b.p_lo(), b.p_hi()) - b.p_lo()) * (right - left);
            left = right;
        }
        sum
    }

    #[test]
    fn eval_matches_direct_formula() {
        assert_eq!(eval_s(&f(0.5, 1.0, 0.0), 1.0).unwrap(), 0.5);
        assert_eq!(eval_s(&f(0.5, 1.0, 0.25), 1.0).unwrap(), 0.25);
        // 0.3 * 2^0.85, computed to 30 digits with mpmath: 0.540750277566498146...
        let v = eval_s(&f(0.3, 0.85, 0.0), 2.0).unwrap();
        assert!((v - 0.540_750_277_566_498).abs() < 1e-14, "{v}");
        assert!((v - 0.54075).abs() < 1e-5);
    }

    #[test]
    fn eval_may_go_negative_with_penalty() {
        assert_eq!(eval_s(&f(0.5, 1.0, 0.25), 0.0).unwrap(), -0.25);
    }

    #[test]
    fn eval_rejects_negative_abscissa() {
        assert_eq!(
            eval_s(&f(0.5, 1.0, 0.0), -0.1),
            Err(GeometryError::NegativeAbscissa(-0.1))
        );
        assert!(eval_s(&f(0.5, 1.0, 0.0), f64::NAN).is_err());
    }

    #[test]
    fn crossing_examples() {
        assert_eq!(
            crossing(&f(0.5, 1.0, 0.25), 0.25, 0.0, 2.0),
            Crossing::At(1.0)
        );
        let h = crossing(&f(0.25, 1.0, 0.0), 3.0 / 13.0, 0.0, 1.0)
            .abscissa()
            .unwrap();
        assert!((h - 12.0 / 13.0).abs() < 1e-15);
        assert!((eval_s(&f(0.25, 1.0, 0.0), h).unwrap() - 3.0 / 13.0).abs() < 1e-12);
        assert_eq!(
            crossing(&f(0.5, 1.0, 0.0), 0.75, 0.0, 1.0),
            Crossing::NoneAbove
        );
        assert_eq!(
            crossing(&f(0.5, 1.0, 0.25), -0.5, 0.0, 1.0),
            Crossing::NoneBelow
        );
        assert_eq!(
            crossing(&f(0.5, 1.0, 0.0), 0.1, 1.0, 2.0),
            Crossing::NoneBelow
        );
    }

    #[test]
    fn integral_examples() {
        assert!((integral_s(&f(0.5, 1.0, 0.0), 0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        // antiderivative value 0.3/1.85; a plain 10^6-cell midpoint sum of
        // 0.3*h^0.85 on [0,1] agrees to 1e-9.
        let v = integral_s(&f(0.3, 0.85, 0.0), 0.0, 1.0).unwrap();
        assert!((v - 0.3 / 1.85).abs() < 1e-15);
        assert!((v - 0.162_162).abs() < 1e-6);
        // 0.125 * (12/13)^2 = 18/169
        let v = integral_s(&f(0.25, 1.0, 0.0), 0.0, 12.0 / 13.0).unwrap();
        assert!((v - 18.0 / 169.0).abs() < 1e-15);
        assert!((v - 0.106_509).abs() < 1e-6);
    }

    #[test]
    fn integral_rejects_bad_intervals() {
        let g = f(0.5, 1.0, 0.0);
        assert!(matches!(
            integral_s(&g, 1.0, 0.5),
            Err(GeometryError::InvalidInterval(..))
        ));
        assert!(matches!(
            integral_s(&g, -1.0, 0.5),
            Err(GeometryError::InvalidInterval(..))
        ));
        assert_eq!(integral_s(&g, 0.7, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn integral_agrees_with_riemann_oracle() {
        let g = f(0.3, 0.85, 0.0);
        let b = block(0.0, 1.0, 0.0, 10.0);
        let oracle = riemann_b_r(&b, 0.3, 0.85, 0.0, 200_000);
        assert!((integral_s(&g, 0.0, 1.0).unwrap() - oracle).abs() < 1e-9);
    }

    // Frozen values below are exact rationals from hand clip-integration of
    // the linear curves, each checked against riemann_b_r in the test.
    #[test]
    fn split_tolerant_p1_h1() {
        let b = block(0.0, 1.0, 0.0, 3.0 / 13.0);
        let s = split_block(&b, &f(0.25, 1.0, 0.0));
        // 18/169 under the curve up to 12/13, then a full strip 3/169
        assert!((s.b_r - 21.0 / 169.0).abs() < 1e-15);
        assert!((s.b_r - 0.124_260).abs() < 1e-6);
        assert!((s.b_l - 0.106_509).abs() < 1e-6);
        assert_eq!(s.decision, Decision::Deploy);
        assert!((s.b_r - riemann_b_r(&b, 0.25, 1.0, 0.0, 100_000)).abs() < 1e-9);
    }

    #[test]
    fn split_p3_h2_under_half_slope() {
        let b = block(1.0, 2.0, 2.0 / 3.0, 1.0);
        let s = split_block(&b, &f(0.5, 1.0, 0.0));
        assert!((s.b_r - 1.0 / 9.0).abs() < 1e-15);
        assert!((s.b_l - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(s.decision, Decision::NotDeploy);
        assert!((s.b_r - riemann_b_r(&b, 0.5, 1.0, 0.0, 100_000)).abs() < 1e-9);
    }

    #[test]
    fn split_curve_clears_block() {
        let b = block(1.0, 2.0, 0.0, 3.0 / 13.0);
        let s = split_block(&b, &f(0.25, 1.0, 0.0));
        assert_eq!(s.b_r, b.area());
        assert_eq!(s.b_l, 0.0);
        assert_eq!(s.decision, Decision::Deploy);
    }

    #[test]
    fn split_curve_misses_block() {
        let b = block(0.0, 1.0, 0.6, 1.0);
        let s = split_block(&b, &f(0.5, 1.0, 0.0));
        assert_eq!(s.b_r, 0.0);
        assert_eq!(s.decision, Decision::NotDeploy);
    }

    #[test]
    fn split_with_penalty_handles_negative_curve() {
        let b = block(0.0, 1.0, 0.0, 0.5);
        let g = f(0.5, 1.0, 0.25);
        let s = split_block(&b, &g);
        // triangle from h=0.5 to 1 with height 0.25
        assert!((s.b_r - 0.0625).abs() < 1e-15);
        assert!((s.b_r - riemann_b_r(&b, 0.5, 1.0, 0.25, 100_000)).abs() < 1e-9);
    }

    #[test]
    fn frontier_round_trips() {
        let b = block(0.0, 1.0, 0.0, 3.0 / 13.0);
        let w = deployment_frontier_w(&b, 1.0, 0.0).unwrap().w().unwrap();
        let s = split_block(&b, &f(w, 1.0, 0.0));
        assert!((s.b_r - s.b_l).abs() <= FRONTIER_TOLERANCE);
        assert_eq!(s.decision, Decision::Deploy);
        // below the frontier the block does not deploy
        let below = split_block(&b, &f(w * (1.0 - 1e-6), 1.0, 0.0));
        assert_eq!(below.decision, Decision::NotDeploy);
    }

    #[test]
    fn frontier_for_column_clear_of_origin() {
        // For [1,2]x[0,H] with a line the deploy side is at least half as
        // soon as w*1.5 >= H/2 when the line stays inside, i.e. w = H/3.
        let h = 3.0 / 13.0;
        let b = block(1.0, 2.0, 0.0, h);
        let w = deployment_frontier_w(&b, 1.0, 0.0).unwrap().w().unwrap();
        assert!((w - h / 3.0).abs() < 1e-9, "{w}");
        let s = split_block(&b, &f(w, 1.0, 0.0));
        assert!((s.b_r - s.b_l).abs() <= FRONTIER_TOLERANCE);
    }

    #[test]
    fn frontier_unreachable_when_w_one_fails() {
        let b = block(0.0, 1.0, 2.0, 3.0);
        assert_eq!(
            split_block(&b, &f(1.0, 1.0, 0.0)).decision,
            Decision::NotDeploy
        );
        assert_eq!(
            deployment_frontier_w(&b, 1.0, 0.0).unwrap(),
            Frontier::Unreachable
        );
    }

    #[test]
    fn frontier_validates_parameters() {
        let b = block(0.0, 1.0, 0.0, 1.0);
        assert!(deployment_frontier_w(&b, 0.0, 0.0).is_err());
        assert!(deployment_frontier_w(&b, 1.0, 0.7).is_err());
    }

    fn arb_block() -> impl Strategy<Value = Block> {
        (
            0.0f64..2.0,
            0.05f64..1.5,
            0.0f64..1.5,
            0.02f64..1.0,
            any::<bool>(),
            any::<bool>(),
        )
            .prop_map(|(h_lo, dh, p_lo, dp, zero_h, zero_p)| {
                let h_lo = if zero_h { 0.0 } else { h_lo };
                let p_lo = if zero_p { 0.0 } else { p_lo };
                block(h_lo, h_lo + dh, p_lo, p_lo + dp)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn areas_are_conserved(b in arb_block(), w in 1e-3f64..=1.0, r in 1e-3f64..=1.0, t in 0.0f64..=0.5) {
            let s = split_block(&b, &f(w, r, t));
            prop_assert!(s.b_l >= 0.0 && s.b_r >= 0.0);
            prop_assert!((s.b_l + s.b_r - b.area()).abs() <= 1e-12);
        }

        #[test]
        fn closed_form_matches_oracle(b in arb_block(), w in 1e-3f64..=1.0, r in 1e-3f64..=1.0, t in 0.0f64..=0.5) {
            let s = split_block(&b, &f(w, r, t));
            let oracle = riemann_b_r(&b, w, r, t, 100_000);
            prop_assert!((s.b_r - oracle).abs() <= 1e-9, "closed {} oracle {}", s.b_r, oracle);
        }

        #[test]
        fn monotone_in_w_and_t(b in arb_block(), w in 1e-3f64..0.9, dw in 0.0f64..0.1, r in 1e-3f64..=1.0, t in 0.0f64..0.4, dt in 0.0f64..0.1) {
            let base = split_block(&b, &f(w, r, t)).b_r;
            prop_assert!(split_block(&b, &f(w + dw, r, t)).b_r >= base);
            prop_assert!(split_block(&b, &f(w, r, t + dt)).b_r <= base);
        }

        #[test]
        fn crossing_round_trips(w in 1e-3f64..=1.0, r in 0.05f64..=1.0, t in 0.0f64..=0.5, p in 0.0f64..2.0) {
            let g = f(w, r, t);
            if let Crossing::At(h) = crossing(&g, p, 0.0, 10.0) {
                prop_assert!((eval_s(&g, h).unwrap() - p).abs() <= 1e-12);
            }
        }

        #[test]
        fn clipping_extremes(b in arb_block(), w in 1e-3f64..=1.0, r in 1e-3f64..=1.0, t in 0.0f64..=0.5) {
            let g = f(w, r, t);
            let s = split_block(&b, &g);
            if eval_s(&g, b.h_lo()).unwrap() >= b.p_hi() {
                prop_assert_eq!(s.b_r, b.area());
            }
            if eval_s(&g, b.h_hi()).unwrap() <= b.p_lo() {
                prop_assert_eq!(s.b_r, 0.0);
            }
        }

        #[test]
        fn linear_case_is_scale_invariant(b in arb_block(), w in 1e-3f64..=1.0, lambda in 0.1f64..10.0) {
            let g = f(w, 1.0, 0.0);
            let s = split_block(&b, &g);
            let scaled = block(b.h_lo() * lambda, b.h_hi() * lambda, b.p_lo() * lambda, b.p_hi() * lambda);
            let t = split_block(&scaled, &g);
            let l2 = lambda * lambda;
            prop_assert!((t.b_r - l2 * s.b_r).abs() <= 1e-10 * l2.max(1.0));
            prop_assert!((t.b_l - l2 * s.b_l).abs() <= 1e-10 * l2.max(1.0));
            // decisions can only differ at an exact tie
            if (s.b_r - s.b_l).abs() > 1e-9 {
                prop_assert_eq!(s.decision, t.decision);
            }
        }
    }
}
