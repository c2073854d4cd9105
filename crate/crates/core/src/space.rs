//! Constant-curvature base spaces: Euclidean space, the round sphere S² of
//! radius ρ, and the hyperbolic plane H² in hyperboloid coordinates.
//!
//! Points are stored in ambient coordinates. Tangent vectors are ambient
//! vectors orthogonal to the base point (Euclidean inner product on the
//! sphere, Minkowski product `-x0y0 + x1y1 + x2y2` on the hyperboloid).
//!
//! The heat semigroup is `e^{tΔ}`: in ℝ^d the kernel is Gaussian with
//! variance `2t` per coordinate. On the curved models it is sampled by a
//! geodesic random walk with substep `GRW_STEP`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::fill_normal;

/// Default substep of the geodesic random walk on curved models.
pub const GRW_STEP: f64 = 1e-3;

const POINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Euclidean,
    Sphere2,
    Hyperbolic2,
}

/// A base space of constant sectional curvature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDescriptor", into = "SpaceDescriptor")]
pub struct SpaceForm {
    kind: SpaceKind,
    dim: usize,
    radius: f64,
}

/// Wire form `{"kind": ..., "dim": n, "radius": ρ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl TryFrom<SpaceDescriptor> for SpaceForm {
    type Error = Error;

    fn try_from(d: SpaceDescriptor) -> Result<Self> {
        match d.kind {
            SpaceKind::Euclidean => {
                let dim = d
                    .dim
                    .ok_or_else(|| Error::Parse("euclidean space needs \"dim\"".into()))?;
                SpaceForm::euclidean(dim)
            }
            SpaceKind::Sphere2 => {
                if d.dim.is_some_and(|n| n != 2) {
                    return Err(Error::Parse("sphere2 has dim 2".into()));
                }
                SpaceForm::sphere2(d.radius.unwrap_or(1.0))
            }
            SpaceKind::Hyperbolic2 => {
                if d.dim.is_some_and(|n| n != 2) {
                    return Err(Error::Parse("hyperbolic2 has dim 2".into()));
                }
                Ok(SpaceForm::hyperbolic2())
            }
        }
    }
}

impl From<SpaceForm> for SpaceDescriptor {
    fn from(s: SpaceForm) -> Self {
        SpaceDescriptor {
            kind: s.kind,
            dim: Some(s.dim),
            radius: (s.kind == SpaceKind::Sphere2).then_some(s.radius),
        }
    }
}

/// A point of a space form in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasePoint(Vec<f64>);

impl BasePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        BasePoint(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for BasePoint {
    fn from(v: Vec<f64>) -> Self {
        BasePoint(v)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `sinh(x)/x`, accurate near zero.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `sin(x)/x`, accurate near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

impl SpaceForm {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("euclidean dimension must be at least 1"));
        }
        Ok(SpaceForm {
            kind: SpaceKind::Euclidean,
            dim,
            radius: 1.0,
        })
    }

    pub fn sphere2(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(SpaceForm {
            kind: SpaceKind::Sphere2,
            dim: 2,
            radius,
        })
    }

    pub fn hyperbolic2() -> Self {
        SpaceForm {
            kind: SpaceKind::Hyperbolic2,
            dim: 2,
            radius: 1.0,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sphere radius ρ (1 for the other models).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Sphere2 => "sphere2",
            SpaceKind::Hyperbolic2 => "hyperbolic2",
        }
    }

    /// Sectional curvature: 0, 1/ρ², or −1.
    pub fn sec_lower(&self) -> f64 {
        match self.kind {
            SpaceKind::Euclidean => 0.0,
            SpaceKind::Sphere2 => 1.0 / (self.radius * self.radius),
            SpaceKind::Hyperbolic2 => -1.0,
        }
    }

    /// Ricci lower bound `(dim − 1)·sec_lower`.
    pub fn ric_lower(&self) -> f64 {
        (self.dim as f64 - 1.0) * self.sec_lower()
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Euclidean => self.dim,
            _ => 3,
        }
    }

    /// Reference point: the origin, the north pole `(0,0,ρ)`, or `(1,0,0)`.
    pub fn origin(&self) -> BasePoint {
        match self.kind {
            SpaceKind::Euclidean => BasePoint(vec![0.0; self.dim]),
            SpaceKind::Sphere2 => BasePoint(vec![0.0, 0.0, self.radius]),
            SpaceKind::Hyperbolic2 => BasePoint(vec![1.0, 0.0, 0.0]),
        }
    }

    /// Point from intrinsic coordinates: Cartesian coordinates in ℝ^d,
    /// (colatitude, longitude) on S², geodesic polar (r, θ) about the origin on H².
    pub fn point(&self, intrinsic: &[f64]) -> Result<BasePoint> {
        match self.kind {
            SpaceKind::Euclidean => {
                if intrinsic.len() != self.dim {
                    return Err(Error::domain("wrong number of coordinates"));
                }
                Ok(BasePoint(intrinsic.to_vec()))
            }
            SpaceKind::Sphere2 => {
                let [th, ph] = two(intrinsic)?;
                let r = self.radius;
                Ok(BasePoint(vec![
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    r * th.cos(),
                ]))
            }
            SpaceKind::Hyperbolic2 => {
                let [s, th] = two(intrinsic)?;
                Ok(BasePoint(vec![s.cosh(), s.sinh() * th.cos(), s.sinh() * th.sin()]))
            }
        }
    }

    /// Ambient inner product used for tangent vectors.
    #[inline]
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            SpaceKind::Hyperbolic2 => minkowski(a, b),
            _ => dot(a, b),
        }
    }

    #[inline]
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Checks that a point lies on the model surface.
    pub fn validate(&self, p: &BasePoint) -> Result<()> {
        let c = p.coords();
        let bad = |reason: String| Error::InvalidPoint {
            space: self.name(),
            reason,
        };
        if c.len() != self.ambient_dim() {
            return Err(bad(format!(
                "expected {} coordinates, got {}",
                self.ambient_dim(),
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite coordinate".into()));
        }
        match self.kind {
            SpaceKind::Euclidean => Ok(()),
            SpaceKind::Sphere2 => {
                let n = dot(c, c).sqrt();
                if (n - self.radius).abs() > POINT_TOL * self.radius.max(1.0) {
                    Err(bad(format!("|x| = {n}, expected {}", self.radius)))
                } else {
                    Ok(())
                }
            }
            SpaceKind::Hyperbolic2 => {
                let q = minkowski(c, c);
                if c[0] <= 0.0 || (q + 1.0).abs() > POINT_TOL * c[0] * c[0] {
                    Err(bad(format!("<x,x> = {q}, expected -1 on the upper sheet")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Pulls ambient coordinates back onto the model surface.
    pub fn project(&self, mut c: Vec<f64>) -> BasePoint {
        match self.kind {
            SpaceKind::Euclidean => {}
            SpaceKind::Sphere2 => {
                let n = dot(&c, &c).sqrt();
                let s = self.radius / n;
                c.iter_mut().for_each(|v| *v *= s);
            }
            SpaceKind::Hyperbolic2 => {
                c[0] = (1.0 + c[1] * c[1] + c[2] * c[2]).sqrt();
            }
        }
        BasePoint(c)
    }

    /// Geodesic distance between two valid points.
    pub fn distance(&self, x: &BasePoint, y: &BasePoint) -> Result<f64> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.dist(x, y))
    }

    /// Distance without validation; callers guarantee valid points.
    pub fn dist(&self, x: &BasePoint, y: &BasePoint) -> f64 {
        self.dist2(x, y).sqrt()
    }

    /// Squared geodesic distance without validation.
    pub fn dist2(&self, x: &BasePoint, y: &BasePoint) -> f64 {
        let (a, b) = (x.coords(), y.coords());
        match self.kind {
            SpaceKind::Euclidean => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum(),
            SpaceKind::Sphere2 => {
                let cr = cross(a, b);
                let s = dot(&cr, &cr).sqrt();
                let c = dot(a, b);
                let d = self.radius * s.atan2(c);
                d * d
            }
            SpaceKind::Hyperbolic2 => {
                let d0 = a[0] - b[0];
                let d1 = a[1] - b[1];
                let d2 = a[2] - b[2];
                let chord2 = (-d0 * d0 + d1 * d1 + d2 * d2).max(0.0);
                let d = 2.0 * (chord2.sqrt() / 2.0).asinh();
                d * d
            }
        }
    }

    /// Projects an ambient vector onto the tangent space at `x`.
    pub fn to_tangent(&self, x: &BasePoint, v: &[f64]) -> Vec<f64> {
        let c = x.coords();
        match self.kind {
            SpaceKind::Euclidean => v.to_vec(),
            SpaceKind::Sphere2 => {
                let k = dot(v, c) / (self.radius * self.radius);
                v.iter().zip(c).map(|(a, b)| a - k * b).collect()
            }
            SpaceKind::Hyperbolic2 => {
                let k = minkowski(v, c);
                v.iter().zip(c).map(|(a, b)| a + k * b).collect()
            }
        }
    }

    /// Exponential map at `x` applied to the tangent vector `v`.
    pub fn exp(&self, x: &BasePoint, v: &[f64]) -> BasePoint {
        let c = x.coords();
        match self.kind {
            SpaceKind::Euclidean => BasePoint(c.iter().zip(v).map(|(a, b)| a + b).collect()),
            SpaceKind::Sphere2 => {
                let n = dot(v, v).sqrt();
                let th = n / self.radius;
                let (cs, sc) = (th.cos(), sinc(th));
                let out = c.iter().zip(v).map(|(p, q)| cs * p + sc * q).collect();
                self.project(out)
            }
            SpaceKind::Hyperbolic2 => {
                let n = minkowski(v, v).max(0.0).sqrt();
                let (ch, sh) = (n.cosh(), sinhc(n));
                let out = c.iter().zip(v).map(|(p, q)| ch * p + sh * q).collect();
                self.project(out)
            }
        }
    }

    /// Logarithm map: the initial velocity of the unit-time geodesic from `x` to `y`.
    pub fn log(&self, x: &BasePoint, y: &BasePoint) -> Result<Vec<f64>> {
        let (a, b) = (x.coords(), y.coords());
        match self.kind {
            SpaceKind::Euclidean => Ok(b.iter().zip(a).map(|(p, q)| p - q).collect()),
            SpaceKind::Sphere2 => {
                let r2 = self.radius * self.radius;
                let c = dot(a, b) / r2;
                let p: Vec<f64> = b.iter().zip(a).map(|(q, s)| q - c * s).collect();
                let pn = dot(&p, &p).sqrt();
                let cr = cross(a, b);
                let th = dot(&cr, &cr).sqrt().atan2(dot(a, b));
                if th == 0.0 || pn == 0.0 {
                    if c < 0.0 {
                        return Err(Error::NonUniqueGeodesic);
                    }
                    return Ok(vec![0.0; 3]);
                }
                if PI - th < 1e-12 {
                    return Err(Error::NonUniqueGeodesic);
                }
                let s = self.radius * th / pn;
                Ok(p.iter().map(|v| v * s).collect())
            }
            SpaceKind::Hyperbolic2 => {
                let bb = -minkowski(a, b);
                let p: Vec<f64> = b.iter().zip(a).map(|(q, s)| q - bb * s).collect();
                let pn = minkowski(&p, &p).max(0.0).sqrt();
                if pn == 0.0 {
                    return Ok(vec![0.0; 3]);
                }
                let d = self.dist(x, y);
                Ok(p.iter().map(|v| v * d / pn).collect())
            }
        }
    }

    /// Point at fraction `s` along the minimizing geodesic from `x` to `y`.
    pub fn geodesic_point(&self, x: &BasePoint, y: &BasePoint, s: f64) -> Result<BasePoint> {
        self.validate(x)?;
        self.validate(y)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("geodesic parameter {s} outside [0,1]")));
        }
        if s == 0.0 {
            return Ok(x.clone());
        }
        if s == 1.0 {
            return Ok(y.clone());
        }
        let v = self.log(x, y)?;
        let v: Vec<f64> = v.iter().map(|c| c * s).collect();
        Ok(self.exp(x, &v))
    }

    /// Orthonormal frame of the tangent space at `x`, `dim` ambient vectors.
    ///
    /// On H² the frame is the image of the standard frame at the origin under
    /// the boost taking the origin to `x`, so it depends smoothly on `x`.
    pub fn tangent_frame(&self, x: &BasePoint) -> Vec<Vec<f64>> {
        let c = x.coords();
        match self.kind {
            SpaceKind::Euclidean => (0..self.dim)
                .map(|i| {
                    let mut e = vec![0.0; self.dim];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            SpaceKind::Sphere2 => {
                let u: Vec<f64> = c.iter().map(|v| v / self.radius).collect();
                let k = (0..3).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap_or(0);
                let mut e1 = vec![0.0; 3];
                e1[k] = 1.0;
                let p = u[k];
                for (e, ui) in e1.iter_mut().zip(&u) {
                    *e -= p * ui;
                }
                let n = dot(&e1, &e1).sqrt();
                e1.iter_mut().for_each(|v| *v /= n);
                let e2 = cross(&u, &e1).to_vec();
                vec![e1, e2]
            }
            SpaceKind::Hyperbolic2 => {
                let (x0, a1, a2) = (c[0], c[1], c[2]);
                let w = 1.0 / (1.0 + x0);
                vec![
                    vec![a1, 1.0 + a1 * a1 * w, a1 * a2 * w],
                    vec![a2, a1 * a2 * w, 1.0 + a2 * a2 * w],
                ]
            }
        }
    }

    /// Parallel transport of the tangent vector `v` at `x` to `y` along the
    /// minimizing geodesic.
    pub fn transport(&self, x: &BasePoint, y: &BasePoint, v: &[f64]) -> Vec<f64> {
        let (a, b) = (x.coords(), y.coords());
        match self.kind {
            SpaceKind::Euclidean => v.to_vec(),
            SpaceKind::Sphere2 => {
                let r2 = self.radius * self.radius;
                let k = dot(v, b) / (r2 + dot(a, b));
                v.iter().enumerate().map(|(i, vi)| vi - k * (a[i] + b[i])).collect()
            }
            SpaceKind::Hyperbolic2 => {
                let k = minkowski(v, b) / (1.0 - minkowski(a, b));
                v.iter().enumerate().map(|(i, vi)| vi + k * (a[i] + b[i])).collect()
            }
        }
    }

    /// Re-orthonormalizes a frame at `x` (Gram–Schmidt in the tangent metric).
    pub fn reorthonormalize(&self, x: &BasePoint, frame: &mut [Vec<f64>]) {
        if self.kind == SpaceKind::Euclidean {
            return;
        }
        for i in 0..frame.len() {
            let mut e = self.to_tangent(x, &frame[i]);
            for f in frame.iter().take(i) {
                let k = self.inner(&e, f);
                e.iter_mut().zip(f).for_each(|(a, b)| *a -= k * b);
            }
            let n = self.norm(&e);
            e.iter_mut().for_each(|a| *a /= n);
            frame[i] = e;
        }
    }

    /// Tangent vector with coordinates `coeffs` in `frame`.
    pub fn combine(&self, frame: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.ambient_dim()];
        for (e, c) in frame.iter().zip(coeffs) {
            v.iter_mut().zip(e).for_each(|(a, b)| *a += c * b);
        }
        v
    }

    /// Number of random-walk substeps used to reach time `t` (1 on ℝ^d, where sampling is exact).
    pub fn heat_substeps(&self, t: f64) -> usize {
        match self.kind {
            SpaceKind::Euclidean => 1,
            _ => ((t / GRW_STEP).ceil() as usize).max(1),
        }
    }

    /// Length of the standard-normal buffer consumed by one heat path over time `t`.
    pub fn heat_noise_len(&self, t: f64) -> usize {
        self.heat_substeps(t) * self.dim
    }

    /// Runs a heat path from `x` with frame `frame` driven by given standard normals.
    ///
    /// Two calls with the same `noise` and nearby starting frames produce
    /// nearby endpoints (the frame is parallel-transported along the walk),
    /// which is what common-random-number estimators rely on.
    pub fn heat_path(&self, x: &BasePoint, frame: &[Vec<f64>], t: f64, noise: &[f64]) -> BasePoint {
        if t == 0.0 {
            return x.clone();
        }
        let m = self.heat_substeps(t);
        let scale = (2.0 * t / m as f64).sqrt();
        if self.kind == SpaceKind::Euclidean {
            return BasePoint(x.coords().iter().zip(noise).map(|(a, z)| a + scale * z).collect());
        }
        let mut p = x.clone();
        let mut fr = frame.to_vec();
        let mut coeffs = vec![0.0; self.dim];
        for step in noise.chunks(self.dim).take(m) {
            coeffs.iter_mut().zip(step).for_each(|(c, z)| *c = scale * z);
            let v = self.combine(&fr, &coeffs);
            let q = self.exp(&p, &v);
            for e in fr.iter_mut() {
                *e = self.transport(&p, &q, e);
            }
            p = q;
            self.reorthonormalize(&p, &mut fr);
        }
        p
    }

    /// Runs two heat paths from `x` and `y` driven by the same normals. At
    /// every substep the frame at the second point is the parallel transport
    /// of the first point's frame along the geodesic joining them, so the
    /// increments are synchronous. Each path on its own is a heat path.
    pub fn heat_path_coupled(&self, x: &BasePoint, y: &BasePoint, t: f64, noise: &[f64]) -> (BasePoint, BasePoint) {
        if t == 0.0 {
            return (x.clone(), y.clone());
        }
        let frame = self.tangent_frame(x);
        if self.kind == SpaceKind::Euclidean {
            return (self.heat_path(x, &frame, t, noise), self.heat_path(y, &frame, t, noise));
        }
        let m = self.heat_substeps(t);
        let scale = (2.0 * t / m as f64).sqrt();
        let (mut p, mut q) = (x.clone(), y.clone());
        let mut fr = frame;
        let mut coeffs = vec![0.0; self.dim];
        for step in noise.chunks(self.dim).take(m) {
            coeffs.iter_mut().zip(step).for_each(|(c, z)| *c = scale * z);
            let p1 = self.exp(&p, &self.combine(&fr, &coeffs));
            let q1 = if p == q {
                p1.clone()
            } else {
                let mut fq: Vec<Vec<f64>> = fr.iter().map(|e| self.transport(&p, &q, e)).collect();
                self.reorthonormalize(&q, &mut fq);
                self.exp(&q, &self.combine(&fq, &coeffs))
            };
            for e in fr.iter_mut() {
                *e = self.transport(&p, &p1, e);
            }
            p = p1;
            q = q1;
            self.reorthonormalize(&p, &mut fr);
        }
        (p, q)
    }

    /// Samples `y ~ p_t(x, ·)` for the heat kernel of `e^{tΔ}`.
    pub fn heat_step<R: Rng + ?Sized>(&self, x: &BasePoint, t: f64, rng: &mut R) -> Result<BasePoint> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("heat time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(x.clone());
        }
        let mut noise = vec![0.0; self.heat_noise_len(t)];
        fill_normal(rng, &mut noise);
        let frame = self.tangent_frame(x);
        Ok(self.heat_path(x, &frame, t, &noise))
    }

    /// Tail bound `P[sup_{s≤t} d(B_s, x) ≥ r]` for Brownian motion, with
    /// curvature constant `max(0, −ric_lower)`.
    pub fn heat_tail_bound(&self, r: f64, t: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::domain(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if !(t > 0.0) {
            return Err(Error::domain(format!("t must be positive, got {t}")));
        }
        if !(r >= 0.0) {
            return Err(Error::domain(format!("r must be nonnegative, got {r}")));
        }
        let d = self.dim as f64;
        let k = (-self.ric_lower()).max(0.0);
        let expo = -lambda * r * r / (2.0 * t) + lambda * (2.0 * d + k * d * d * t) / (1.0 - lambda);
        Ok(2.0 / (1.0 - lambda).sqrt() * expo.exp())
    }

    /// Riemannian volume of a closed ball of radius `r`.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
        }
        match self.kind {
            SpaceKind::Euclidean => Ok(unit_ball_volume(self.dim) * r.powi(self.dim as i32)),
            SpaceKind::Sphere2 => {
                let rho = self.radius;
                if r > PI * rho {
                    return Err(Error::domain(format!(
                        "radius {r} exceeds the sphere diameter {}",
                        PI * rho
                    )));
                }
                Ok(2.0 * PI * rho * rho * (1.0 - (r / rho).cos()))
            }
            SpaceKind::Hyperbolic2 => Ok(2.0 * PI * (r.cosh() - 1.0)),
        }
    }

    /// Uniform sample from the closed ball `B(center, r)`.
    pub fn sample_ball<R: Rng + ?Sized>(&self, center: &BasePoint, r: f64, rng: &mut R) -> BasePoint {
        match self.kind {
            SpaceKind::Euclidean => {
                let mut dir = vec![0.0; self.dim];
                let n = loop {
                    fill_normal(rng, &mut dir);
                    let n = dot(&dir, &dir).sqrt();
                    if n > 0.0 {
                        break n;
                    }
                };
                let u: f64 = rng.random();
                let rad = r * u.powf(1.0 / self.dim as f64);
                BasePoint(center.coords().iter().zip(&dir).map(|(c, d)| c + rad * d / n).collect())
            }
            SpaceKind::Sphere2 => {
                let rho = self.radius;
                let beta = (r / rho).min(PI);
                let u: f64 = rng.random();
                // cos θ uniform on [cos β, 1] gives uniform area on the cap.
                let cos_th = 1.0 - u * (1.0 - beta.cos());
                let th = cos_th.clamp(-1.0, 1.0).acos();
                let ph = 2.0 * PI * rng.random::<f64>();
                let frame = self.tangent_frame(center);
                let v = self.combine(&frame, &[rho * th * ph.cos(), rho * th * ph.sin()]);
                self.exp(center, &v)
            }
            SpaceKind::Hyperbolic2 => {
                let u: f64 = rng.random();
                // radial density ∝ sinh s on [0, r]
                let s = (1.0 + u * (r.cosh() - 1.0)).acosh();
                let ph = 2.0 * PI * rng.random::<f64>();
                let frame = self.tangent_frame(center);
                let v = self.combine(&frame, &[s * ph.cos(), s * ph.sin()]);
                self.exp(center, &v)
            }
        }
    }

    /// `r · ct(r)` where `ct` is the generalized cotangent of curvature
    /// `sec_lower`; equals 1 at `r = 0`.
    pub fn r_cot(&self, r: f64) -> f64 {
        let k = self.sec_lower();
        if k == 0.0 {
            return 1.0;
        }
        let x = k.abs().sqrt() * r;
        if x < 1e-4 {
            let x2 = x * x;
            return if k > 0.0 { 1.0 - x2 / 3.0 } else { 1.0 + x2 / 3.0 };
        }
        if k > 0.0 {
            x / x.tan()
        } else {
            x / x.tanh()
        }
    }
}

fn two(c: &[f64]) -> Result<[f64; 2]> {
    match c {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::domain("expected two intrinsic coordinates")),
    }
}
