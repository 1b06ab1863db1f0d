use std::cell::{Cell, RefCell};

use super::adaptive::{adaptive, graded_partition, SingularEnd};
use super::tail::shifted_tail;
use super::{QuadConfig, QuadError, QuadResult, TailModel};

/// One factor of a product domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    /// `[a, b]`, optionally graded toward singular endpoints.
    Interval { a: f64, b: f64, singular: SingularEnd },
    /// `[a, ∞)`: an adaptive piece `[a, a + scale]` and a substituted tail.
    HalfLine {
        a: f64,
        scale: f64,
        singular_at_a: bool,
        tail: TailModel,
    },
    /// `ℝ`, split at the sorted breakpoints; the outermost finite pieces
    /// have length `width` and are followed by substituted tails.
    Line {
        breakpoints: Vec<f64>,
        width: f64,
        tail: TailModel,
    },
}

impl Axis {
    pub fn interval(a: f64, b: f64) -> Self {
        Axis::Interval {
            a,
            b,
            singular: SingularEnd::None,
        }
    }

    pub fn half_line(a: f64, tail: TailModel) -> Self {
        Axis::HalfLine {
            a,
            scale: 1.0,
            singular_at_a: false,
            tail,
        }
    }

    pub fn line(breakpoints: Vec<f64>, width: f64, tail: TailModel) -> Self {
        Axis::Line { breakpoints, width, tail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain2D {
    pub x: Axis,
    pub y: Axis,
}

/// `∫ f` over one axis. Tail pieces are not checked for divergence.
pub fn integrate_axis<F>(f: F, axis: &Axis, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    axis_integral(&f, axis, cfg)
}

fn axis_integral<F>(f: &F, axis: &Axis, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    match axis {
        Axis::Interval { a, b, singular } => {
            let (a, b) = (*a, *b);
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(QuadError::InvalidInterval { a, b });
            }
            let initial = graded_partition(a, b, *singular);
            adaptive(f, &initial, cfg, cfg.max_subdivisions + initial.len())
        }
        Axis::HalfLine {
            a,
            scale,
            singular_at_a,
            tail,
        } => {
            let (a, scale) = (*a, *scale);
            if !a.is_finite() || !(scale > 0.0) {
                return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
            }
            let grading = if *singular_at_a { SingularEnd::Left } else { SingularEnd::None };
            let initial = graded_partition(a, a + scale, grading);
            let near = adaptive(f, &initial, cfg, cfg.max_subdivisions + initial.len())?;
            let far = shifted_tail(f, a, scale, &cfg.with_tail(*tail))?;
            Ok(QuadResult::combine(&[near, far]))
        }
        Axis::Line { breakpoints, width, tail } => {
            let width = *width;
            let mut pts: Vec<f64> = if breakpoints.is_empty() { vec![0.0] } else { breakpoints.clone() };
            if pts.iter().any(|p| !p.is_finite()) || !(width > 0.0) {
                return Err(QuadError::InvalidInterval {
                    a: f64::NEG_INFINITY,
                    b: f64::INFINITY,
                });
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let lo = pts[0];
            let hi = pts[pts.len() - 1];
            let mut initial = vec![(lo - width, lo)];
            initial.extend(pts.windows(2).map(|w| (w[0], w[1])));
            initial.push((hi, hi + width));
            let middle = adaptive(f, &initial, cfg, cfg.max_subdivisions + initial.len())?;
            let tail_cfg = cfg.with_tail(*tail);
            let right = shifted_tail(f, hi, width, &tail_cfg)?;
            let mirrored = |u: f64| f(-u);
            let left = shifted_tail(&mirrored, -lo, width, &tail_cfg)?;
            Ok(QuadResult::combine(&[left, middle, right]))
        }
    }
}

/// Iterated integral `∫_x ∫_y f(x, y)`. The inner integral's failures
/// propagate; its worst relative error is charged to the total.
pub fn integrate_2d<F>(f: F, domain: &Domain2D, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64, f64) -> f64,
{
    cfg.validate()?;
    let failure: RefCell<Option<QuadError>> = RefCell::new(None);
    let worst_rel = Cell::new(0.0f64);
    let all_converged = Cell::new(true);
    let inner_evals = Cell::new(0usize);

    let outer = |x: f64| -> f64 {
        if failure.borrow().is_some() {
            return f64::NAN;
        }
        match axis_integral(&|y: f64| f(x, y), &domain.y, cfg) {
            Ok(r) => {
                let rel = if r.value != 0.0 {
                    r.error_estimate / r.value.abs()
                } else {
                    0.0
                };
                worst_rel.set(worst_rel.get().max(rel));
                all_converged.set(all_converged.get() && r.converged);
                inner_evals.set(inner_evals.get() + r.subdivisions_used);
                r.value
            }
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                f64::NAN
            }
        }
    };

    let result = axis_integral(&outer, &domain.x, cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut r = result?;
    r.error_estimate += worst_rel.get() * r.value.abs();
    r.subdivisions_used += inner_evals.get();
    r.converged = r.converged && all_converged.get();
    Ok(r)
}
