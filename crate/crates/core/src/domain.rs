//! Observation domains and score-matching weight functions.
//!
//! A finite point process here lives on a bounded window: a time horizon
//! `(0, t_max)`, optionally crossed with an axis-aligned spatial rectangle,
//! optionally carrying one of `n_marks` event types. Weighted score matching
//! multiplies each event's score residual by a weight `h ≥ 0` that vanishes
//! on the boundary of the window and is positive inside; this module supplies
//! the three built-in weight families
//!
//! ```text
//! distance      h0 = dist(x, boundary)                (1-Lipschitz)
//! product       h1 = (t - t_prev) (T - t)             (and the per-axis
//! square root   h2 = sqrt(h1)                          spatial analogues)
//! ```
//!
//! plus user-supplied callables. Temporal weights act on the conditional
//! inter-event window `(t_prev, T)`; spatial weights act on the rectangle.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Axis-aligned rectangle, `x[0] < x[1]`, `y[0] < y[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        let r = Rect { x, y };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.x[0].is_finite()
            && self.x[1].is_finite()
            && self.y[0].is_finite()
            && self.y[1].is_finite()
            && self.x[0] < self.x[1]
            && self.y[0] < self.y[1];
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "degenerate rectangle x={:?} y={:?}",
                self.x, self.y
            )))
        }
    }

    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
    }

    pub fn contains(&self, s: [f64; 2]) -> bool {
        s[0] > self.x[0] && s[0] < self.x[1] && s[1] > self.y[0] && s[1] < self.y[1]
    }
}

/// Bounded observation window for a point process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationDomain {
    /// Time horizon; events live in `(0, t_max)`.
    pub t_max: f64,
    /// Spatial window, when the process has locations.
    pub space: Option<Rect>,
    /// Number of event types; 1 for unmarked processes.
    pub n_marks: usize,
}

impl ObservationDomain {
    pub fn new(t_max: f64, space: Option<Rect>, n_marks: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
        }
        if n_marks == 0 {
            return Err(Error::Config("n_marks must be at least 1".into()));
        }
        if let Some(r) = &space {
            r.validate()?;
        }
        Ok(ObservationDomain { t_max, space, n_marks })
    }

    /// Purely temporal, unmarked window.
    pub fn temporal(t_max: f64) -> Result<Self> {
        Self::new(t_max, None, 1)
    }

    /// Square planar window `(−half, half)²`, unmarked. The time key of a
    /// planar sequence is `s₀ − x_lo`, so the horizon is the x-extent.
    pub fn planar_square(half: f64) -> Result<Self> {
        let rect = Rect::new([-half, half], [-half, half])?;
        Self::new(2.0 * half, Some(rect), 1)
    }

    /// The spatial rectangle, or a configuration error for temporal domains.
    pub fn require_space(&self) -> Result<&Rect> {
        self.space
            .as_ref()
            .ok_or_else(|| Error::Config("operation requires a spatial domain".into()))
    }
}

/// Distance from `t` to the boundary of the interval `(t_prev, t_max)`,
/// with its derivative in `t`. On the equidistant ridge the one-sided
/// subgradient toward the lower face (+1) is returned.
pub fn dist_to_boundary_interval(t_prev: f64, t: f64, t_max: f64) -> (f64, f64) {
    let lo = t - t_prev;
    let hi = t_max - t;
    if lo <= hi {
        (lo, 1.0)
    } else {
        (hi, -1.0)
    }
}

/// Distance from `s` to the boundary of `rect`, with its gradient.
/// Ties scan faces in the order x-low, y-low, x-high, y-high, so equidistant
/// points resolve toward the lower faces.
pub fn dist_to_boundary_rect(rect: &Rect, s: [f64; 2]) -> (f64, [f64; 2]) {
    let faces = [
        (s[0] - rect.x[0], [1.0, 0.0]),
        (s[1] - rect.y[0], [0.0, 1.0]),
        (rect.x[1] - s[0], [-1.0, 0.0]),
        (rect.y[1] - s[1], [0.0, -1.0]),
    ];
    let mut best = faces[0];
    for f in &faces[1..] {
        if f.0 < best.0 {
            best = *f;
        }
    }
    best
}

/// Built-in weight families.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// Distance to the boundary of the window.
    #[default]
    Distance,
    /// Product of distances to the two faces (per axis, for rectangles).
    Product,
    /// Square root of the product weight.
    SqrtProduct,
}

type TemporalFn = dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync;
type SpatialFn = dyn Fn(&Rect, [f64; 2]) -> (f64, [f64; 2]) + Send + Sync;

/// Weight on the conditional time window `(t_prev, t_max)`.
///
/// Evaluation returns `(h, ∂h/∂t)`.
#[derive(Clone)]
pub enum TemporalWeight {
    Named(WeightKind),
    Custom(Arc<TemporalFn>),
}

impl std::fmt::Debug for TemporalWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TemporalWeight::Named(k) => write!(f, "TemporalWeight::{k:?}"),
            TemporalWeight::Custom(_) => write!(f, "TemporalWeight::Custom"),
        }
    }
}

impl TemporalWeight {
    pub fn distance() -> Self {
        TemporalWeight::Named(WeightKind::Distance)
    }

    pub fn product() -> Self {
        TemporalWeight::Named(WeightKind::Product)
    }

    pub fn sqrt_product() -> Self {
        TemporalWeight::Named(WeightKind::SqrtProduct)
    }

    /// User-supplied weight. The callable is spot-checked to vanish at both
    /// window endpoints on a 64-point grid of `(t_prev, t_max)` pairs.
    pub fn custom(f: Arc<TemporalFn>, t_max: f64) -> Result<Self> {
        for i in 0..32 {
            let t_prev = t_max * (i as f64 + 0.5) / 33.0;
            let (at_left, _) = f(t_prev, t_prev, t_max);
            let (at_right, _) = f(t_prev, t_max, t_max);
            if at_left.abs() > 1e-9 || at_right.abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "custom temporal weight does not vanish on the boundary: \
                     h(t_prev={t_prev:.4}) = {at_left:.3e} at the left end, {at_right:.3e} at t_max"
                )));
            }
        }
        Ok(TemporalWeight::Custom(f))
    }

    /// User-supplied weight with no boundary check. Intended for deliberately
    /// boundary-violating baselines (e.g. the constant weight h ≡ 1 that turns
    /// weighted score matching back into plain score matching).
    pub fn custom_unchecked(f: Arc<TemporalFn>) -> Self {
        TemporalWeight::Custom(f)
    }

    /// Constant weight h ≡ 1 (violates the boundary condition on purpose).
    pub fn constant_one() -> Self {
        TemporalWeight::custom_unchecked(Arc::new(|_, _, _| (1.0, 0.0)))
    }

    /// Evaluate `(h, ∂h/∂t)` at `t` in the window `(t_prev, t_max)`.
    pub fn eval(&self, t_prev: f64, t: f64, t_max: f64) -> (f64, f64) {
        match self {
            TemporalWeight::Named(WeightKind::Distance) => {
                dist_to_boundary_interval(t_prev, t, t_max)
            }
            TemporalWeight::Named(WeightKind::Product) => {
                let a = t - t_prev;
                let b = t_max - t;
                (a * b, b - a)
            }
            TemporalWeight::Named(WeightKind::SqrtProduct) => {
                let a = t - t_prev;
                let b = t_max - t;
                let h = (a * b).sqrt();
                (h, (b - a) / (2.0 * h))
            }
            TemporalWeight::Custom(f) => f(t_prev, t, t_max),
        }
    }
}

/// Weight on a spatial rectangle. Evaluation returns `(h, ∇h)`.
#[derive(Clone)]
pub enum SpatialWeight {
    Named(WeightKind),
    Custom(Arc<SpatialFn>),
}

impl std::fmt::Debug for SpatialWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpatialWeight::Named(k) => write!(f, "SpatialWeight::{k:?}"),
            SpatialWeight::Custom(_) => write!(f, "SpatialWeight::Custom"),
        }
    }
}

impl SpatialWeight {
    pub fn distance() -> Self {
        SpatialWeight::Named(WeightKind::Distance)
    }

    pub fn product() -> Self {
        SpatialWeight::Named(WeightKind::Product)
    }

    pub fn sqrt_product() -> Self {
        SpatialWeight::Named(WeightKind::SqrtProduct)
    }

    /// User-supplied weight, spot-checked to vanish on a 64-point grid along
    /// the rectangle's perimeter.
    pub fn custom(f: Arc<SpatialFn>, rect: &Rect) -> Result<Self> {
        let mut boundary = Vec::with_capacity(64);
        for i in 0..16 {
            let fx = rect.x[0] + (rect.x[1] - rect.x[0]) * (i as f64 + 0.5) / 16.0;
            let fy = rect.y[0] + (rect.y[1] - rect.y[0]) * (i as f64 + 0.5) / 16.0;
            boundary.push([fx, rect.y[0]]);
            boundary.push([fx, rect.y[1]]);
            boundary.push([rect.x[0], fy]);
            boundary.push([rect.x[1], fy]);
        }
        for s in boundary {
            let (h, _) = f(rect, s);
            if h.abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "custom spatial weight does not vanish on the boundary: h({s:?}) = {h:.3e}"
                )));
            }
        }
        Ok(SpatialWeight::Custom(f))
    }

    /// User-supplied weight with no boundary check (deliberate baselines).
    pub fn custom_unchecked(f: Arc<SpatialFn>) -> Self {
        SpatialWeight::Custom(f)
    }

    /// Evaluate `(h, ∇h)` at `s` inside `rect`.
    pub fn eval(&self, rect: &Rect, s: [f64; 2]) -> (f64, [f64; 2]) {
        match self {
            SpatialWeight::Named(WeightKind::Distance) => dist_to_boundary_rect(rect, s),
            SpatialWeight::Named(WeightKind::Product) => {
                let (px, dpx) = axis_product(rect.x, s[0]);
                let (py, dpy) = axis_product(rect.y, s[1]);
                (px * py, [dpx * py, px * dpy])
            }
            SpatialWeight::Named(WeightKind::SqrtProduct) => {
                let (px, dpx) = axis_product(rect.x, s[0]);
                let (py, dpy) = axis_product(rect.y, s[1]);
                let h = (px * py).sqrt();
                (h, [dpx * py / (2.0 * h), px * dpy / (2.0 * h)])
            }
            SpatialWeight::Custom(f) => f(rect, s),
        }
    }
}

/// ((u−lo)(hi−u), d/du) for one axis.
fn axis_product(limits: [f64; 2], u: f64) -> (f64, f64) {
    let a = u - limits[0];
    let b = limits[1] - u;
    (a * b, b - a)
}
