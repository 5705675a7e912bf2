//! Constrained quadratic Bézier splines for limit-set boundaries.
//!
//! The boundary is three quadratic curves joined at four knots,
//!
//! ```text
//! B1: p0 -> p1 -> p2     p0 = (0, p02)    p2 = (p21, 1)
//! B2: p2 -> p3 -> p4     p3 = (p31, p31)
//! B3: p4 -> p5 -> p6     p4 = (1, p42)    p6 = (p61, 0)
//! ```
//!
//! so it touches all four edges of the unit box. Nine free coordinates
//! remain; together with the ordering constraints checked in [`validate`]
//! they make the enclosed set star-shaped, which lets every ray from the
//! origin meet the boundary exactly once.
//!
//! Radii are measured with the sum norm `x + y`, matching `R = X1 + X2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roots within this distance outside `[0, 1]` are clamped onto the segment.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Quadratic coefficients below this magnitude are treated as zero.
pub const LINEAR_TOLERANCE: f64 = 1e-14;

const SPAN_PADDING: f64 = 1e-12;
/// Boundary points closer than this to the origin (sum norm) are the origin.
const ORIGIN_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    /// Sum-norm radius.
    #[inline]
    pub fn radius(self) -> f64 {
        self.x + self.y
    }

    #[inline]
    pub fn coord(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Evaluates the quadratic Bézier curve with control points `p0, p1, p2` at `t`.
pub fn eval_curve(p0: Point, p1: Point, p2: Point, t: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("curve parameter t = {t} outside [0, 1]")));
    }
    Ok(Segment::new(p0, p1, p2).eval(t))
}

/// The free spline coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    P02,
    P11,
    P12,
    P21,
    P31,
    P42,
    P51,
    P52,
    P61,
}

impl Param {
    pub const ALL: [Param; 9] = [
        Param::P02,
        Param::P11,
        Param::P12,
        Param::P21,
        Param::P31,
        Param::P42,
        Param::P51,
        Param::P52,
        Param::P61,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name used in CSV and JSON output.
    pub fn name(self) -> &'static str {
        match self {
            Param::P02 => "p02",
            Param::P11 => "p11",
            Param::P12 => "p12",
            Param::P21 => "p21",
            Param::P31 => "p31",
            Param::P42 => "p42",
            Param::P51 => "p51",
            Param::P52 => "p52",
            Param::P61 => "p61",
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Param::P02 => "p₀,₂",
            Param::P11 => "p₁,₁",
            Param::P12 => "p₁,₂",
            Param::P21 => "p₂,₁",
            Param::P31 => "p₃,₁",
            Param::P42 => "p₄,₂",
            Param::P51 => "p₅,₁",
            Param::P52 => "p₅,₂",
            Param::P61 => "p₆,₁",
        }
    }

    /// Spline segments (1-based) whose shape depends on this coordinate.
    pub fn segments(self) -> &'static [usize] {
        match self {
            Param::P02 | Param::P11 | Param::P12 => &[1],
            Param::P21 => &[1, 2],
            Param::P31 => &[2],
            Param::P42 => &[2, 3],
            Param::P51 | Param::P52 | Param::P61 => &[3],
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// The nine free coordinates, in the order `p02, p11, p12, p21, p31, p42, p51, p52, p61`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineParams {
    pub p02: f64,
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p31: f64,
    pub p42: f64,
    pub p51: f64,
    pub p52: f64,
    pub p61: f64,
}

impl SplineParams {
    pub fn from_array(v: [f64; 9]) -> SplineParams {
        SplineParams {
            p02: v[0],
            p11: v[1],
            p12: v[2],
            p21: v[3],
            p31: v[4],
            p42: v[5],
            p51: v[6],
            p52: v[7],
            p61: v[8],
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.p02, self.p11, self.p12, self.p21, self.p31, self.p42, self.p51, self.p52,
            self.p61,
        ]
    }

    pub fn get(&self, param: Param) -> f64 {
        self.to_array()[param.index()]
    }

    pub fn set(&mut self, param: Param, value: f64) {
        let slot = match param {
            Param::P02 => &mut self.p02,
            Param::P11 => &mut self.p11,
            Param::P12 => &mut self.p12,
            Param::P21 => &mut self.p21,
            Param::P31 => &mut self.p31,
            Param::P42 => &mut self.p42,
            Param::P51 => &mut self.p51,
            Param::P52 => &mut self.p52,
            Param::P61 => &mut self.p61,
        };
        *slot = value;
    }

    pub fn with(mut self, param: Param, value: f64) -> SplineParams {
        self.set(param, value);
        self
    }

    /// Piecewise-linear spline that reproduces the logistic boundary
    /// `(0, γ) – (1, 1) – (γ, 0)` exactly.
    pub fn logistic_shape(gamma: f64) -> SplineParams {
        let mid = 0.5 * (1.0 + gamma);
        SplineParams {
            p02: gamma,
            p11: 0.5,
            p12: mid,
            p21: 1.0,
            p31: 1.0,
            p42: 1.0,
            p51: mid,
            p52: 0.5,
            p61: gamma,
        }
    }

    /// The seven control points with the fixed coordinates filled in.
    pub fn control_points(&self) -> [Point; 7] {
        [
            Point::new(0.0, self.p02),
            Point::new(self.p11, self.p12),
            Point::new(self.p21, 1.0),
            Point::new(self.p31, self.p31),
            Point::new(1.0, self.p42),
            Point::new(self.p51, self.p52),
            Point::new(self.p61, 0.0),
        ]
    }
}

/// A named validity condition of the spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Range(Param),
    EdgeLeft,
    EdgeBottom,
    EdgeTop,
    EdgeRight,
    P11AtMostP21,
    SlopeP1AtLeastP2,
    SlopeP4AtLeastP5,
    P42AtLeastP52,
    P3OnDiagonal,
    P31AtLeastMin,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Range(p) => write!(f, "{p} ∈ [0,1]"),
            Constraint::EdgeLeft => f.write_str("p₀,₁ = 0"),
            Constraint::EdgeBottom => f.write_str("p₆,₂ = 0"),
            Constraint::EdgeTop => f.write_str("p₂,₂ = 1"),
            Constraint::EdgeRight => f.write_str("p₄,₁ = 1"),
            Constraint::P11AtMostP21 => f.write_str("p₁,₁ ≤ p₂,₁"),
            Constraint::SlopeP1AtLeastP2 => f.write_str("m(0,p₁) ≥ m(0,p₂)"),
            Constraint::SlopeP4AtLeastP5 => f.write_str("m(0,p₄) ≥ m(0,p₅)"),
            Constraint::P42AtLeastP52 => f.write_str("p₄,₂ ≥ p₅,₂"),
            Constraint::P3OnDiagonal => f.write_str("p₃,₁ = p₃,₂"),
            Constraint::P31AtLeastMin => f.write_str("p₃,₁ ≥ min(p₂,₁,p₄,₂)"),
        }
    }
}

/// Returns every violated constraint for the given control points.
///
/// Slopes from the origin are compared by cross-multiplication, so a point
/// on the vertical axis has infinite slope.
pub fn validate(points: &[Point; 7]) -> Vec<Constraint> {
    let [p0, p1, p2, p3, p4, p5, p6] = *points;
    let mut violated = Vec::new();

    let free = [
        (Param::P02, p0.y),
        (Param::P11, p1.x),
        (Param::P12, p1.y),
        (Param::P21, p2.x),
        (Param::P31, p3.x),
        (Param::P42, p4.y),
        (Param::P51, p5.x),
        (Param::P52, p5.y),
        (Param::P61, p6.x),
    ];
    for (param, value) in free {
        if !(0.0..=1.0).contains(&value) {
            violated.push(Constraint::Range(param));
        }
    }
    if !violated.is_empty() {
        return violated;
    }

    if p0.x != 0.0 {
        violated.push(Constraint::EdgeLeft);
    }
    if p6.y != 0.0 {
        violated.push(Constraint::EdgeBottom);
    }
    if p2.y != 1.0 {
        violated.push(Constraint::EdgeTop);
    }
    if p4.x != 1.0 {
        violated.push(Constraint::EdgeRight);
    }
    if p1.x > p2.x {
        violated.push(Constraint::P11AtMostP21);
    }
    // p1.y / p1.x >= p2.y / p2.x
    if p1.y * p2.x < p2.y * p1.x {
        violated.push(Constraint::SlopeP1AtLeastP2);
    }
    // p4.y / p4.x >= p5.y / p5.x
    if p4.y * p5.x < p5.y * p4.x {
        violated.push(Constraint::SlopeP4AtLeastP5);
    }
    if p4.y < p5.y {
        violated.push(Constraint::P42AtLeastP52);
    }
    if p3.x != p3.y {
        violated.push(Constraint::P3OnDiagonal);
    }
    if p3.x < p2.x.min(p4.y) {
        violated.push(Constraint::P31AtLeastMin);
    }
    violated
}

/// Up to three roots of a segment/line equation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Roots {
    buf: [f64; 3],
    len: usize,
}

impl Roots {
    fn push(&mut self, t: f64) {
        if self.len < self.buf.len() {
            self.buf[self.len] = t;
            self.len += 1;
        }
    }

    fn push_clamped(&mut self, t: f64) {
        if (-ROOT_TOLERANCE..=1.0 + ROOT_TOLERANCE).contains(&t) {
            self.push(t.clamp(0.0, 1.0));
        }
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.buf[..self.len]
    }
}

/// One quadratic Bézier curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub control: Point,
    pub end: Point,
}

impl Segment {
    pub const fn new(start: Point, control: Point, end: Point) -> Segment {
        Segment {
            start,
            control,
            end,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Point {
        let s = 1.0 - t;
        let (a, b, c) = (s * s, 2.0 * t * s, t * t);
        Point::new(
            a * self.start.x + b * self.control.x + c * self.end.x,
            a * self.start.y + b * self.control.y + c * self.end.y,
        )
    }

    pub fn is_collapsed(&self) -> bool {
        self.start == self.control && self.control == self.end
    }

    /// Parameters in `[0, 1]` where `cx * x(t) + cy * y(t) = 0`.
    ///
    /// When the whole segment lies on the line, the endpoints and the
    /// interior maximum of the radius are returned instead.
    pub(crate) fn line_roots(&self, cx: f64, cy: f64) -> Roots {
        let d0 = cx * self.start.x + cy * self.start.y;
        let d1 = cx * self.control.x + cy * self.control.y;
        let d2 = cx * self.end.x + cy * self.end.y;
        let mut roots = Roots::default();

        if d0 == 0.0 && d1 == 0.0 && d2 == 0.0 {
            roots.push(0.0);
            roots.push(1.0);
            if let Some(t) = stationary(self.start.radius(), self.control.radius(), self.end.radius())
            {
                roots.push(t);
            }
            return roots;
        }

        let a = d0 - 2.0 * d1 + d2;
        let b = 2.0 * (d1 - d0);
        let c = d0;
        if a.abs() < LINEAR_TOLERANCE {
            if b != 0.0 {
                roots.push_clamped(-c / b);
            } else if c.abs() < LINEAR_TOLERANCE {
                roots.push(0.0);
                roots.push(1.0);
            }
            return roots;
        }

        let mut disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            if disc > -LINEAR_TOLERANCE * (b * b + (4.0 * a * c).abs()) {
                disc = 0.0;
            } else {
                return roots;
            }
        }
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        if q == 0.0 {
            // b == 0 and disc == 0, so c == 0: double root at zero.
            roots.push_clamped(0.0);
            return roots;
        }
        roots.push_clamped(q / a);
        roots.push_clamped(c / q);
        roots
    }

    /// Interior stationary parameter of one coordinate, if any.
    pub fn stationary_t(&self, axis: Axis) -> Option<f64> {
        stationary(
            self.start.coord(axis),
            self.control.coord(axis),
            self.end.coord(axis),
        )
    }
}

/// Interior stationary point of the scalar quadratic Bézier `c0, c1, c2`.
fn stationary(c0: f64, c1: f64, c2: f64) -> Option<f64> {
    let denom = c0 - 2.0 * c1 + c2;
    if denom.abs() < LINEAR_TOLERANCE {
        return None;
    }
    let t = (c0 - c1) / denom;
    (t > 0.0 && t < 1.0).then_some(t)
}

/// A located point on the spline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub y: f64,
    /// 1-based segment index.
    pub segment: usize,
    pub t: f64,
}

impl BoundaryPoint {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn radius(&self) -> f64 {
        self.x + self.y
    }
}

/// A validated limit-set boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSpline {
    params: SplineParams,
    points: [Point; 7],
    segments: [Segment; 3],
    /// Angular coordinate of the knots p0, p2, p4, p6.
    knot_angles: [f64; 4],
}

/// Assembles and validates a spline.
pub fn build_spline(params: SplineParams) -> Result<GaugeSpline> {
    GaugeSpline::new(params)
}

impl GaugeSpline {
    pub fn new(params: SplineParams) -> Result<GaugeSpline> {
        let points = params.control_points();
        let violated = validate(&points);
        if !violated.is_empty() {
            return Err(Error::InvalidSpline(violated));
        }
        let segments = [
            Segment::new(points[0], points[1], points[2]),
            Segment::new(points[2], points[3], points[4]),
            Segment::new(points[4], points[5], points[6]),
        ];
        let angle = |p: Point| p.x / (p.x + p.y);
        let knot_angles = [0.0, angle(points[2]), angle(points[4]), 1.0];
        Ok(GaugeSpline {
            params,
            points,
            segments,
            knot_angles,
        })
    }

    pub fn params(&self) -> &SplineParams {
        &self.params
    }

    pub fn control_points(&self) -> &[Point; 7] {
        &self.points
    }

    pub fn segments(&self) -> &[Segment; 3] {
        &self.segments
    }

    /// Angular range `[w_start, w_end]` covered by a segment (1-based).
    pub fn segment_span(&self, segment: usize) -> (f64, f64) {
        (self.knot_angles[segment - 1], self.knot_angles[segment])
    }

    /// Angular range of boundary affected by a change of `param`.
    pub fn affected_span(&self, param: Param) -> (f64, f64) {
        let segs = param.segments();
        let first = self.segment_span(segs[0]).0;
        let last = self.segment_span(segs[segs.len() - 1]).1;
        (first, last)
    }

    pub fn knots(&self) -> [BoundaryPoint; 4] {
        let bp = |p: Point, segment: usize, t: f64| BoundaryPoint {
            x: p.x,
            y: p.y,
            segment,
            t,
        };
        [
            bp(self.points[0], 1, 0.0),
            bp(self.points[2], 1, 1.0),
            bp(self.points[4], 2, 1.0),
            bp(self.points[6], 3, 1.0),
        ]
    }

    /// True when the boundary passes through the corner (1, 1).
    pub fn touches_corner(&self) -> bool {
        self.params.p21 == 1.0 || self.params.p42 == 1.0
    }

    fn best_on_ray(&self, w: f64, segments: impl Iterator<Item = usize>) -> Option<BoundaryPoint> {
        let (cx, cy) = (-(1.0 - w), w);
        let mut best: Option<BoundaryPoint> = None;
        for s in segments {
            let seg = &self.segments[s - 1];
            for &t in seg.line_roots(cx, cy).as_slice() {
                let p = seg.eval(t);
                if best.is_none_or(|b| p.radius() > b.radius()) {
                    best = Some(BoundaryPoint {
                        x: p.x,
                        y: p.y,
                        segment: s,
                        t,
                    });
                }
            }
        }
        best
    }

    fn locate(&self, w: f64) -> Option<BoundaryPoint> {
        let spanned = (1..=3).filter(|&s| {
            let (lo, hi) = self.segment_span(s);
            w >= lo - SPAN_PADDING && w <= hi + SPAN_PADDING
        });
        self.best_on_ray(w, spanned)
            .or_else(|| self.best_on_ray(w, 1..=3))
            .map(|mut p| {
                if p.radius() < ORIGIN_SNAP {
                    p.x = 0.0;
                    p.y = 0.0;
                }
                p
            })
    }

    /// Intersection of the ray in direction `(w, 1 - w)` with the boundary.
    pub fn ray_boundary_point(&self, w: f64) -> Result<BoundaryPoint> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("angle w = {w} outside [0, 1]")));
        }
        self.locate(w).ok_or(Error::Geometry { w })
    }

    /// Sum-norm radius of the boundary along angle `w`; NaN if no intersection.
    #[inline]
    pub fn boundary_radius(&self, w: f64) -> f64 {
        self.locate(w).map_or(f64::NAN, |p| p.radius())
    }

    /// Gauge of the unit-radius point `(w, 1 - w)`. Infinite when the
    /// boundary passes through the origin along that ray.
    #[inline]
    pub fn gauge_at_angle(&self, w: f64) -> f64 {
        1.0 / self.boundary_radius(w)
    }

    /// Gauge function induced by the boundary: `g(x) = |x| / |x_boundary|`.
    pub fn gauge_value(&self, x: Point) -> Result<f64> {
        if !(x.x.is_finite() && x.y.is_finite()) || x.x < 0.0 || x.y < 0.0 {
            return Err(Error::Domain(format!(
                "gauge needs finite nonnegative coordinates, got ({}, {})",
                x.x, x.y
            )));
        }
        let r = x.radius();
        if r == 0.0 {
            return Err(Error::Domain("gauge is undefined at the origin".into()));
        }
        let boundary = self.ray_boundary_point(x.x / r)?;
        Ok(r / boundary.radius())
    }

    /// Knots plus interior stationary points of each coordinate of each segment.
    pub fn coordinate_extrema(&self) -> Vec<BoundaryPoint> {
        let mut out = self.knots().to_vec();
        for (i, seg) in self.segments.iter().enumerate() {
            for axis in [Axis::X, Axis::Y] {
                if let Some(t) = seg.stationary_t(axis) {
                    let p = seg.eval(t);
                    out.push(BoundaryPoint {
                        x: p.x,
                        y: p.y,
                        segment: i + 1,
                        t,
                    });
                }
            }
        }
        out
    }

    /// Every point of the boundary on the line `cx * x + cy * y = 0`.
    pub fn line_crossings(&self, cx: f64, cy: f64) -> Vec<BoundaryPoint> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            for &t in seg.line_roots(cx, cy).as_slice() {
                let p = seg.eval(t);
                out.push(BoundaryPoint {
                    x: p.x,
                    y: p.y,
                    segment: i + 1,
                    t,
                });
            }
        }
        out
    }
}
