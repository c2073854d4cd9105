//! Cylinder functions `F(γ) = g(⟨φ_1,γ⟩, …, ⟨φ_n,γ⟩)` and their Gamma
//! calculus in closed form.
//!
//! The inner functions are radial bumps `φ(x) = a·ψ(d(x,c)/R)` with
//! `ψ(u) = exp(1 − 1/(1−u²))` on `[0,1)`. Their Hessians follow from
//! `Hess r = ct_K(r)(g − dr⊗dr)`; all jets are expressed in an orthonormal
//! tangent frame at the evaluation point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::space::{BasePoint, SpaceForm, SpaceKind};

/// The bump profile and its first two derivatives at `u ≥ 0`.
pub fn bump_profile(u: f64) -> (f64, f64, f64) {
    if u >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - u * u;
    let psi = (1.0 - 1.0 / q).exp();
    let h1 = -2.0 * u / (q * q);
    let h2 = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
    (psi, psi * h1, psi * (h1 * h1 + h2))
}

/// A radial bump `a·ψ(d(x, center)/radius)`, compactly supported in the
/// closed ball of the given radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: BasePoint,
    pub radius: f64,
    pub amplitude: f64,
}

/// Value, gradient and Hessian of a function at a point, in frame coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `dim × dim`.
    pub hess: Vec<f64>,
}

impl Jet {
    fn zero(dim: usize) -> Jet {
        Jet {
            value: 0.0,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    pub fn laplacian(&self) -> f64 {
        let d = self.grad.len();
        (0..d).map(|a| self.hess[a * d + a]).sum()
    }

    /// `Hess(v, w)`.
    pub fn hess_apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let d = self.grad.len();
        self.hess.chunks(d).zip(v).map(|(row, va)| va * dot(row, w)).sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TestFunction {
    pub fn new(center: BasePoint, radius: f64, amplitude: f64) -> Self {
        TestFunction {
            center,
            radius,
            amplitude,
        }
    }

    pub fn validate(&self, space: &SpaceForm) -> Result<()> {
        space.validate(&self.center)?;
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(format!(
                "bump radius must be positive, got {}",
                self.radius
            )));
        }
        if space.kind() == SpaceKind::Sphere2 && self.radius >= std::f64::consts::PI * space.radius() {
            return Err(Error::domain("bump radius must stay below the antipodal distance"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::domain("bump amplitude must be finite"));
        }
        Ok(())
    }

    pub fn value(&self, space: &SpaceForm, x: &BasePoint) -> f64 {
        let r = space.dist(x, &self.center);
        self.amplitude * bump_profile(r / self.radius).0
    }

    /// Jet at `x` in the given orthonormal frame of `T_x M`.
    pub fn jet(&self, space: &SpaceForm, x: &BasePoint, frame: &[Vec<f64>]) -> Jet {
        let dim = space.dim();
        let r = space.dist(x, &self.center);
        let big_r = self.radius;
        if r >= big_r {
            return Jet::zero(dim);
        }
        let u = r / big_r;
        let (psi, dpsi, d2psi) = bump_profile(u);
        let a = self.amplitude;
        let f1 = a * dpsi / big_r;
        let f2 = a * d2psi / (big_r * big_r);
        // f'(r)/r without dividing by r
        let q = 1.0 - u * u;
        let f1_over_r = a * psi * (-2.0 / (q * q)) / (big_r * big_r);
        let tangential = f1_over_r * space.r_cot(r);

        let unit: Vec<f64> = if r > 0.0 {
            match space.log(x, &self.center) {
                Ok(v) => frame.iter().map(|e| -space.inner(&v, e) / r).collect(),
                Err(_) => vec![0.0; dim],
            }
        } else {
            vec![0.0; dim]
        };
        let grad = unit.iter().map(|c| f1 * c).collect();
        let mut hess = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let uu = unit[i] * unit[j];
                let delta = if i == j { 1.0 } else { 0.0 };
                hess[i * dim + j] = f2 * uu + tangential * (delta - uu);
            }
        }
        Jet {
            value: a * psi,
            grad,
            hess,
        }
    }
}

/// A scalar function with its first two derivatives, used for ridge outers.
#[derive(Clone, Copy, Debug)]
struct Jet1 {
    v: f64,
    d1: f64,
    d2: f64,
}

fn tanh_jet(w: Jet1, scale: f64) -> Jet1 {
    // scale·tanh(w/scale)
    let tau = (w.v / scale).tanh();
    let sech2 = 1.0 - tau * tau;
    Jet1 {
        v: scale * tau,
        d1: sech2 * w.d1,
        d2: sech2 * w.d2 - 2.0 * tau * sech2 * w.d1 * w.d1 / scale,
    }
}

/// The outer function `g` of a cylinder function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outer {
    /// `offset + Σ c_i s_i`.
    Linear { coeffs: Vec<f64>, offset: f64 },
    /// `scale · Π s_i`.
    Product { scale: f64 },
    /// `h(Σ c_i s_i)` with `h(u) = u^p`, or `L·tanh(u^p/L)` when saturated.
    PowerSaturated {
        coeffs: Vec<f64>,
        exponent: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        saturation: Option<f64>,
    },
    /// `A·tanh(Σ c_i s_i − shift)`.
    Tanh {
        coeffs: Vec<f64>,
        amplitude: f64,
        shift: f64,
    },
}

impl Outer {
    fn ridge(&self) -> Option<&[f64]> {
        match self {
            Outer::Linear { coeffs, .. } | Outer::PowerSaturated { coeffs, .. } | Outer::Tanh { coeffs, .. } => {
                Some(coeffs)
            }
            Outer::Product { .. } => None,
        }
    }

    fn profile(&self, u: f64) -> Jet1 {
        match self {
            Outer::Linear { offset, .. } => Jet1 {
                v: offset + u,
                d1: 1.0,
                d2: 0.0,
            },
            Outer::PowerSaturated {
                exponent, saturation, ..
            } => {
                let p = *exponent as i32;
                let pf = p as f64;
                let pow = Jet1 {
                    v: u.powi(p),
                    d1: if p >= 1 { pf * u.powi(p - 1) } else { 0.0 },
                    d2: if p >= 2 { pf * (pf - 1.0) * u.powi(p - 2) } else { 0.0 },
                };
                match saturation {
                    Some(l) => tanh_jet(pow, *l),
                    None => pow,
                }
            }
            Outer::Tanh { amplitude, shift, .. } => {
                let tau = (u - shift).tanh();
                let sech2 = 1.0 - tau * tau;
                Jet1 {
                    v: amplitude * tau,
                    d1: amplitude * sech2,
                    d2: -2.0 * amplitude * tau * sech2,
                }
            }
            Outer::Product { .. } => unreachable!("product outer is not a ridge"),
        }
    }

    /// `g(s)`, `∂_i g(s)` and `∂_{ij} g(s)` (row-major).
    pub fn derivatives(&self, s: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = s.len();
        if let Some(c) = self.ridge() {
            let j = self.profile(dot(c, s));
            let grad = c.iter().map(|ci| j.d1 * ci).collect();
            let mut hess = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    hess[a * n + b] = j.d2 * c[a] * c[b];
                }
            }
            return (j.v, grad, hess);
        }
        let Outer::Product { scale } = self else { unreachable!() };
        let prod_except = |skip: &[usize]| -> f64 {
            s.iter()
                .enumerate()
                .filter(|(k, _)| !skip.contains(k))
                .map(|(_, v)| v)
                .product()
        };
        let value = scale * prod_except(&[]);
        let grad = (0..n).map(|a| scale * prod_except(&[a])).collect();
        let mut hess = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    hess[a * n + b] = scale * prod_except(&[a, b]);
                }
            }
        }
        (value, grad, hess)
    }

    fn arity(&self) -> Option<usize> {
        self.ridge().map(<[f64]>::len)
    }
}

/// `F(γ) = g(⟨φ_1,γ⟩, …, ⟨φ_n,γ⟩)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunction {
    pub outer: Outer,
    pub inners: Vec<TestFunction>,
}

/// Per-configuration sums of the base Gamma quantities for all inner pairs.
struct Pairings {
    n: usize,
    s: Vec<f64>,
    /// `⟨Γ(φ_i,φ_j), γ⟩`.
    gamma: Vec<f64>,
    /// `⟨Δφ_i, γ⟩`.
    lap: Vec<f64>,
    /// `⟨Γ₂(φ_i,φ_j), γ⟩`.
    gamma2: Vec<f64>,
    /// `⟨Γ(φ_j, Γ(φ_i,φ_k)), γ⟩` at index `[j][i][k]`.
    third: Vec<f64>,
}

impl CylinderFunction {
    pub fn new(outer: Outer, inners: Vec<TestFunction>) -> Result<Self> {
        if let Some(k) = outer.arity() {
            if k != inners.len() {
                return Err(Error::domain(format!(
                    "outer expects {k} coefficients, got {} inner functions",
                    inners.len()
                )));
            }
        }
        Ok(CylinderFunction { outer, inners })
    }

    /// Single-bump linear functional `⟨φ, γ⟩`.
    pub fn linear(phi: TestFunction) -> Self {
        CylinderFunction {
            outer: Outer::Linear {
                coeffs: vec![1.0],
                offset: 0.0,
            },
            inners: vec![phi],
        }
    }

    pub fn validate(&self, space: &SpaceForm) -> Result<()> {
        if let Some(k) = self.outer.arity() {
            if k != self.inners.len() {
                return Err(Error::domain("outer arity does not match the inner functions"));
            }
        }
        if let Outer::PowerSaturated {
            saturation: Some(l), ..
        } = &self.outer
        {
            if !(*l > 0.0) {
                return Err(Error::domain("saturation level must be positive"));
            }
        }
        self.inners.iter().try_for_each(|phi| phi.validate(space))
    }

    fn slots(&self, gamma: &Configuration) -> Vec<f64> {
        let space = gamma.space();
        self.inners
            .iter()
            .map(|phi| gamma.points().iter().map(|x| phi.value(space, x)).sum())
            .collect()
    }

    /// Jets of all inner functions at `x`, in one shared frame.
    fn jets_at(&self, space: &SpaceForm, x: &BasePoint) -> (Vec<Vec<f64>>, Vec<Jet>) {
        let frame = space.tangent_frame(x);
        let jets = self.inners.iter().map(|phi| phi.jet(space, x, &frame)).collect();
        (frame, jets)
    }

    fn pairings(&self, gamma: &Configuration) -> Pairings {
        let space = gamma.space();
        let n = self.inners.len();
        let ric = space.ric_lower();
        let mut p = Pairings {
            n,
            s: vec![0.0; n],
            gamma: vec![0.0; n * n],
            lap: vec![0.0; n],
            gamma2: vec![0.0; n * n],
            third: vec![0.0; n * n * n],
        };
        for x in gamma.points() {
            let (_, jets) = self.jets_at(space, x);
            for i in 0..n {
                p.s[i] += jets[i].value;
                p.lap[i] += jets[i].laplacian();
                for j in 0..n {
                    let g = dot(&jets[i].grad, &jets[j].grad);
                    let hs = dot(&jets[i].hess, &jets[j].hess);
                    p.gamma[i * n + j] += g;
                    p.gamma2[i * n + j] += hs + ric * g;
                    for k in 0..n {
                        // Γ(φ_j, Γ(φ_i, φ_k)) = Hφ_i(∇φ_k, ∇φ_j) + Hφ_k(∇φ_i, ∇φ_j)
                        p.third[(j * n + i) * n + k] += jets[i].hess_apply(&jets[k].grad, &jets[j].grad)
                            + jets[k].hess_apply(&jets[i].grad, &jets[j].grad);
                    }
                }
            }
        }
        p
    }

    pub fn eval(&self, gamma: &Configuration) -> f64 {
        self.outer.derivatives(&self.slots(gamma)).0
    }
}

impl crate::functional::Functional for CylinderFunction {
    fn eval(&self, gamma: &Configuration) -> f64 {
        CylinderFunction::eval(self, gamma)
    }
}

pub fn eval_cylinder(f: &CylinderFunction, gamma: &Configuration) -> f64 {
    f.eval(gamma)
}

/// `∇^Υ F(γ; x) = Σ_i ∂_i g · ∇φ_i(x)` at every point, as ambient tangent vectors.
pub fn grad_cylinder(f: &CylinderFunction, gamma: &Configuration) -> Vec<Vec<f64>> {
    let space = gamma.space();
    let (_, g1, _) = f.outer.derivatives(&f.slots(gamma));
    gamma
        .points()
        .iter()
        .map(|x| {
            let (frame, jets) = f.jets_at(space, x);
            let mut coeffs = vec![0.0; space.dim()];
            for (gi, jet) in g1.iter().zip(&jets) {
                coeffs.iter_mut().zip(&jet.grad).for_each(|(c, v)| *c += gi * v);
            }
            space.combine(&frame, &coeffs)
        })
        .collect()
}

/// `Γ^Υ(F)(γ) = Σ_{i,j} ∂_i g ∂_j g ⟨Γ(φ_i,φ_j), γ⟩`.
pub fn gamma_cylinder(f: &CylinderFunction, gamma: &Configuration) -> f64 {
    let p = f.pairings(gamma);
    let (_, g1, _) = f.outer.derivatives(&p.s);
    let n = p.n;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g1[i] * g1[j] * p.gamma[i * n + j];
        }
    }
    acc.max(0.0)
}

/// Bilinear `Γ^Υ(F, G)(γ) = Σ_x ⟨∇^Υ F(γ;x), ∇^Υ G(γ;x)⟩`.
pub fn gamma_cylinder_pair(f: &CylinderFunction, g: &CylinderFunction, gamma: &Configuration) -> f64 {
    let space = gamma.space();
    grad_cylinder(f, gamma)
        .iter()
        .zip(grad_cylinder(g, gamma))
        .map(|(a, b)| space.inner(a, &b))
        .sum()
}

/// `Δ^Υ F = Σ_i ∂_i g ⟨Δφ_i, γ⟩ + Σ_{i,j} ∂_{ij} g ⟨Γ(φ_i,φ_j), γ⟩`.
pub fn laplacian_cylinder(f: &CylinderFunction, gamma: &Configuration) -> f64 {
    let p = f.pairings(gamma);
    let (_, g1, g2) = f.outer.derivatives(&p.s);
    let n = p.n;
    let mut acc = 0.0;
    for i in 0..n {
        acc += g1[i] * p.lap[i];
        for j in 0..n {
            acc += g2[i * n + j] * p.gamma[i * n + j];
        }
    }
    acc
}

/// `Γ₂^Υ(F)(γ)` by the three-group expansion
/// `Σ g_i g_j ⟨Γ₂(φ_i,φ_j)⟩ + Σ g_ik g_jl ⟨Γ(φ_i,φ_j)⟩⟨Γ(φ_k,φ_l)⟩
///  + Σ g_i g_jk [2⟨Γ(φ_j,Γ(φ_i,φ_k))⟩ − ⟨Γ(φ_i,Γ(φ_j,φ_k))⟩]`.
pub fn gamma2_cylinder(f: &CylinderFunction, gamma: &Configuration) -> f64 {
    let p = f.pairings(gamma);
    let (_, g1, g2) = f.outer.derivatives(&p.s);
    let n = p.n;
    let gm = |i: usize, j: usize| p.gamma[i * n + j];
    let third = |j: usize, i: usize, k: usize| p.third[(j * n + i) * n + k];
    let mut first = 0.0;
    let mut second = 0.0;
    let mut mixed = 0.0;
    for i in 0..n {
        for j in 0..n {
            first += g1[i] * g1[j] * p.gamma2[i * n + j];
            for k in 0..n {
                mixed += g1[i] * g2[j * n + k] * (2.0 * third(j, i, k) - third(i, j, k));
                for l in 0..n {
                    second += g2[i * n + k] * g2[j * n + l] * gm(i, j) * gm(k, l);
                }
            }
        }
    }
    first + second + mixed
}

/// A random catalog cylinder function with bumps centered in `B(around, spread)`.
pub fn random_cylinder<R: Rng + ?Sized>(
    space: &SpaceForm,
    around: &BasePoint,
    spread: f64,
    rng: &mut R,
) -> CylinderFunction {
    let n = rng.random_range(1..=3usize);
    let max_radius = match space.kind() {
        SpaceKind::Sphere2 => 1.5 * space.radius(),
        _ => 2.0,
    };
    let inners: Vec<TestFunction> = (0..n)
        .map(|_| {
            TestFunction::new(
                space.sample_ball(around, spread, rng),
                rng.random_range(0.4 * max_radius..max_radius),
                rng.random_range(-1.5..1.5),
            )
        })
        .collect();
    let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let outer = match rng.random_range(0..4u32) {
        0 => Outer::Linear {
            coeffs,
            offset: rng.random_range(-1.0..1.0),
        },
        1 => Outer::Product {
            scale: rng.random_range(-1.0..1.0),
        },
        2 => Outer::PowerSaturated {
            coeffs,
            exponent: rng.random_range(1..=3),
            saturation: if rng.random_bool(0.5) {
                Some(rng.random_range(0.5..2.0))
            } else {
                None
            },
        },
        _ => Outer::Tanh {
            coeffs,
            amplitude: rng.random_range(-1.5..1.5),
            shift: rng.random_range(-0.5..0.5),
        },
    };
    CylinderFunction { outer, inners }
}
