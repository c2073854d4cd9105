//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use upsilon_core::calculus::CylinderFunction;
use upsilon_core::{BasePoint, Configuration, SpaceForm};

/// `n` points drawn uniformly from the ball of radius `r` around the origin.
pub fn random_config<R: Rng + ?Sized>(space: &SpaceForm, n: usize, r: f64, rng: &mut R) -> Configuration {
    let o = space.origin();
    let pts = (0..n).map(|_| space.sample_ball(&o, r, rng)).collect();
    Configuration::new(space.clone(), pts).unwrap()
}

/// Minimum of `Σ d²(x_i, y_π(i))` over all permutations, by Heap's algorithm.
pub fn brute_force_d2(a: &Configuration, b: &Configuration) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len());
    let space = a.space();
    let cost: Vec<Vec<f64>> = a
        .points()
        .iter()
        .map(|x| b.points().iter().map(|y| space.dist2(x, y)).collect())
        .collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = total(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(total(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Moves point `i` of `gamma` along the geodesic with unit initial velocity `e`.
fn moved(gamma: &Configuration, i: usize, e: &[f64], s: f64) -> Configuration {
    let p = gamma
        .space()
        .exp(&gamma.points()[i], &e.iter().map(|v| v * s).collect::<Vec<_>>());
    gamma.with_point(i, p)
}

/// Fourth-order central first derivative of `g` at 0.
fn d1(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (8.0 * (g(h) - g(-h)) - (g(2.0 * h) - g(-2.0 * h))) / (12.0 * h)
}

/// Fourth-order central second derivative of `g` at 0.
fn d2(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (16.0 * (g(h) + g(-h)) - (g(2.0 * h) + g(-2.0 * h)) - 30.0 * g(0.0)) / (12.0 * h * h)
}

/// Frame-by-frame geodesic directions at every point of `gamma`.
fn directions(gamma: &Configuration) -> Vec<(usize, Vec<f64>)> {
    let space = gamma.space();
    gamma
        .points()
        .iter()
        .enumerate()
        .flat_map(|(i, x)| space.tangent_frame(x).into_iter().map(move |e| (i, e)))
        .collect()
}

/// `Γ(F, G)(γ)` from geodesic finite differences of `F` and `G` alone.
pub fn fd_gamma_pair(
    f: &dyn Fn(&Configuration) -> f64,
    g: &dyn Fn(&Configuration) -> f64,
    gamma: &Configuration,
    h: f64,
) -> f64 {
    directions(gamma)
        .iter()
        .map(|(i, e)| d1(|s| f(&moved(gamma, *i, e, s)), h) * d1(|s| g(&moved(gamma, *i, e, s)), h))
        .sum()
}

/// `ΔF(γ)` as the sum of second derivatives along geodesics in every frame direction.
pub fn fd_laplacian(f: &dyn Fn(&Configuration) -> f64, gamma: &Configuration, h: f64) -> f64 {
    directions(gamma)
        .iter()
        .map(|(i, e)| d2(|s| f(&moved(gamma, *i, e, s)), h))
        .sum()
}

/// `Γ₂(F) = ½ΔΓ(F) − Γ(F, ΔF)` with every operator replaced by nested finite
/// differences, Richardson-extrapolated over the outer step.
pub fn fd_gamma2(f: &CylinderFunction, gamma: &Configuration) -> f64 {
    let h_in = 5e-4;
    let ev = |c: &Configuration| f.eval(c);
    let gam = |c: &Configuration| fd_gamma_pair(&ev, &ev, c, h_in);
    let lap = |c: &Configuration| fd_laplacian(&ev, c, h_in);
    let at = |h: f64| 0.5 * fd_laplacian(&gam, gamma, h) - fd_gamma_pair(&ev, &lap, gamma, h);
    // the outer stencils are fourth order
    (16.0 * at(2.5e-3) - at(5e-3)) / 15.0
}

/// Builds a point from intrinsic coordinates, panicking on bad input.
pub fn pt(space: &SpaceForm, c: &[f64]) -> BasePoint {
    space.point(c).unwrap()
}
