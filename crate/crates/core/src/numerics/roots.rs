//! Scanning root finder for the first positive zero of a real function.

use crate::error::{Error, Result};

/// A sign-change bracket: `lo < hi` and `f_lo · f_hi < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Option<Self> {
        (lo < hi && f_lo * f_hi < 0.0).then_some(Self { lo, hi, f_lo, f_hi })
    }

    /// Bisects to width `tol`; returns the midpoint of the final bracket.
    pub fn bisect<F: Fn(f64) -> f64>(mut self, f: F, tol: f64) -> f64 {
        let mut iterations = 0;
        while self.hi - self.lo > tol && iterations < 200 {
            let mid = 0.5 * (self.lo + self.hi);
            if mid <= self.lo || mid >= self.hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == self.f_lo.signum() {
                self.lo = mid;
                self.f_lo = fm;
            } else {
                self.hi = mid;
                self.f_hi = fm;
            }
            iterations += 1;
        }
        0.5 * (self.lo + self.hi)
    }
}

/// First positive zero located by [`first_positive_zero`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: f64,
    /// The function touches zero without changing sign.
    pub tangential: bool,
}

/// Relative threshold (against the largest `|f|` seen so far) below which a
/// sign-preserving local minimum of `|f|` counts as a touching zero.
pub const TOUCH_TOL: f64 = 1e-9;

/// Scans `λ = h, 2h, …` up to `lambda_max` for the first zero of `f` and
/// refines it to width `tol`.
///
/// A sign change is bisected. A local minimum of `|f|` without sign change is
/// refined by golden-section search; if the refined minimum crosses zero the
/// resulting bracket is bisected, and if it only touches zero (below
/// [`TOUCH_TOL`] relative) it is reported as a tangential root.
pub fn first_positive_zero<F>(f: F, scan_step: f64, lambda_max: f64, tol: f64) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    if !(scan_step > 0.0) || !(tol > 0.0) || !(lambda_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scan_step {scan_step}, lambda_max {lambda_max} and tol {tol} must be positive"
        )));
    }
    let steps = (lambda_max / scan_step).ceil() as usize;
    let x_at = |i: usize| (i as f64 * scan_step).min(lambda_max);

    let mut xs = [0.0f64; 3];
    let mut fs = [0.0f64; 3];
    let mut scale = 0.0f64;
    let mut filled = 0usize;

    for i in 1..=steps {
        let x = x_at(i);
        let fx = f(x);
        if !fx.is_finite() {
            continue;
        }
        if fx == 0.0 {
            return Ok(Root {
                value: x,
                tangential: false,
            });
        }
        scale = scale.max(fx.abs());
        xs.rotate_left(1);
        fs.rotate_left(1);
        xs[2] = x;
        fs[2] = fx;
        filled += 1;

        if filled >= 2 {
            if let Some(b) = RootBracket::new(xs[1], xs[2], fs[1], fs[2]) {
                return Ok(Root {
                    value: b.bisect(&f, tol),
                    tangential: false,
                });
            }
        }
        if filled >= 3 {
            let (a, m, c) = (fs[0].abs(), fs[1].abs(), fs[2].abs());
            if m < a && m <= c && fs[0].signum() == fs[1].signum() {
                if let Some(root) = refine_touch(&f, xs[0], xs[2], fs[1].signum(), scale, tol) {
                    return Ok(root);
                }
            }
        }
    }
    Err(Error::NoRootInRange { lambda_max })
}

/// Golden-section minimization of `sign·f` on `[a, b]`.
fn refine_touch<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    sign: f64,
    scale: f64,
    tol: f64,
) -> Option<Root> {
    let g = |x: f64| sign * f(x);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    let fa = g(a);
    for _ in 0..200 {
        for (x, gx) in [(x1, g1), (x2, g2)] {
            if gx <= 0.0 {
                if gx == 0.0 {
                    return Some(Root {
                        value: x,
                        tangential: true,
                    });
                }
                let bracket = RootBracket::new(a, x, sign * fa, sign * gx)?;
                return Some(Root {
                    value: bracket.bisect(f, tol),
                    tangential: false,
                });
            }
        }
        if hi - lo <= tol {
            break;
        }
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        }
    }
    let (x, gx) = if g1 < g2 { (x1, g1) } else { (x2, g2) };
    (gx.abs() <= TOUCH_TOL * scale).then_some(Root {
        value: x,
        tangential: true,
    })
}
