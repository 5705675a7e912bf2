#![allow(dead_code)]

use limitset::geometry::{GaugeSpline, Point, SplineParams};
use rand::Rng;

/// Draws from `[0, 1]` with atoms at both ends.
fn unit_with_atoms<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

/// A random spline satisfying every constraint by construction.
pub fn random_valid<R: Rng>(rng: &mut R) -> SplineParams {
    let p21 = unit_with_atoms(rng);
    let p42 = unit_with_atoms(rng);
    let p12: f64 = unit_with_atoms(rng);
    let p51: f64 = unit_with_atoms(rng);
    let lo = p21.min(p42);
    SplineParams {
        p02: unit_with_atoms(rng),
        p11: unit_with_atoms(rng) * p21 * p12,
        p12,
        p21,
        p31: lo + (1.0 - lo) * unit_with_atoms(rng),
        p42,
        p51,
        p52: unit_with_atoms(rng) * p42 * p51,
        p61: unit_with_atoms(rng),
    }
}

pub const DENSE_POINTS: usize = 1_000_000;

/// Boundary sampled at `DENSE_POINTS` parameter values spread over the three segments.
pub struct DenseBoundary<'a> {
    spline: &'a GaugeSpline,
    per_segment: usize,
    points: Vec<Point>,
}

impl<'a> DenseBoundary<'a> {
    pub fn new(spline: &'a GaugeSpline) -> DenseBoundary<'a> {
        let per_segment = DENSE_POINTS / 3;
        let mut points = Vec::with_capacity(3 * (per_segment + 1));
        for seg in spline.segments() {
            for i in 0..=per_segment {
                points.push(seg.eval(i as f64 / per_segment as f64));
            }
        }
        DenseBoundary {
            spline,
            per_segment,
            points,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Maximum of `f` over the sampled points with `feasible` true, refined by
    /// bisection wherever `switch` changes sign between neighbouring samples.
    pub fn maximize(
        &self,
        f: impl Fn(Point) -> f64,
        switch: impl Fn(Point) -> f64,
        feasible: impl Fn(Point) -> bool,
    ) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let n = self.per_segment;
        for (s, seg) in self.spline.segments().iter().enumerate() {
            let pts = &self.points[s * (n + 1)..(s + 1) * (n + 1)];
            for (i, &p) in pts.iter().enumerate() {
                if feasible(p) {
                    best = best.max(f(p));
                }
                if i == 0 {
                    continue;
                }
                let (a, b) = (switch(pts[i - 1]), switch(p));
                if a == 0.0 || b == 0.0 || (a < 0.0) == (b < 0.0) {
                    continue;
                }
                let (mut lo, mut hi) = ((i - 1) as f64 / n as f64, i as f64 / n as f64);
                let lo_negative = a < 0.0;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (switch(seg.eval(mid)) < 0.0) == lo_negative {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                for t in [lo, hi] {
                    let q = seg.eval(t);
                    best = best.max(f(q));
                }
            }
        }
        best
    }

    pub fn eta(&self) -> f64 {
        self.maximize(|q| q.x.min(q.y), |q| q.y - q.x, |_| true)
    }

    pub fn lambda(&self, omega: f64) -> f64 {
        if omega <= 0.0 || omega >= 1.0 {
            return 1.0;
        }
        let s = self.maximize(
            |q| (q.x / omega).min(q.y / (1.0 - omega)),
            |q| q.x / omega - q.y / (1.0 - omega),
            |_| true,
        );
        1.0 / s
    }

    pub fn tau1(&self, delta: f64) -> f64 {
        let d = delta;
        // Bisection endpoints straddle the cone edge by ~1e-18 in t.
        self.maximize(|q| q.x, |q| q.y - d * q.x, |q| q.y <= d * q.x + 1e-12)
    }

    pub fn tau2(&self, delta: f64) -> f64 {
        let d = delta;
        self.maximize(|q| q.y, |q| q.x - d * q.y, |q| q.x <= d * q.y + 1e-12)
    }

    pub fn min_radius(&self) -> f64 {
        self.points.iter().map(|p| p.x + p.y).fold(f64::INFINITY, f64::min)
    }
}
