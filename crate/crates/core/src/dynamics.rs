//! The independent-particle heat semigroup on configurations.
//!
//! `p_t^Υ(γ, ·)` is the image of the product of the base heat kernels at
//! the points of `γ`: every particle diffuses on its own.

use std::io::Write;

use rand::Rng;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::rng::{child_seed, fill_normal, run_blocks};
use crate::stats::{Estimate, Welford};
use crate::transport::align;

/// One draw from `p_t^Υ(γ, ·)`.
pub fn heat_step_config<R: Rng + ?Sized>(gamma: &Configuration, t: f64, rng: &mut R) -> Result<Configuration> {
    let space = gamma.space();
    let pts = gamma
        .points()
        .iter()
        .map(|x| space.heat_step(x, t, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Configuration::from_valid(space.clone(), pts))
}

/// Monte Carlo estimate of `T_t F(γ) = ∫ F dp_t^Υ(γ, ·)`.
///
/// The samples are split into fixed blocks with their own streams, so the
/// result depends only on the seed drawn from `rng`, not on the thread count.
pub fn semigroup_expectation<R: Rng + ?Sized>(
    f: &dyn Functional,
    gamma: &Configuration,
    t: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::domain("semigroup expectation needs at least one sample"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("heat time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(Estimate {
            mean: f.eval(gamma),
            std_error: 0.0,
        });
    }
    let seed = child_seed(rng);
    let blocks = run_blocks(seed, n_samples, |r, len| -> Result<Welford> {
        let mut w = Welford::new();
        for _ in 0..len {
            w.push(f.eval(&heat_step_config(gamma, t, r)?));
        }
        Ok(w)
    });
    let mut total = Welford::new();
    for b in blocks {
        total.merge(&b?);
    }
    Ok(Estimate::from(&total))
}

/// Synchronous coupling of `p_t^Υ(γ, ·)` and `p_t^Υ(σ, ·)`.
///
/// Points are paired by the optimal matching; each pair is driven by the
/// same normals with frames kept parallel along the connecting geodesic.
/// The second output is labeled so that its point `i` is the partner of
/// point `i` of the first output.
pub fn coupled_heat_step<R: Rng + ?Sized>(
    gamma: &Configuration,
    sigma: &Configuration,
    t: f64,
    rng: &mut R,
) -> Result<(Configuration, Configuration)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("heat time must be nonnegative, got {t}")));
    }
    let (_, aligned) = align(gamma, sigma)?;
    let space = gamma.space();
    let mut noise = vec![0.0; space.heat_noise_len(t)];
    let mut xs = Vec::with_capacity(gamma.len());
    let mut ys = Vec::with_capacity(gamma.len());
    for (x, y) in gamma.points().iter().zip(aligned.points()) {
        fill_normal(rng, &mut noise);
        let (a, b) = space.heat_path_coupled(x, y, t, &noise);
        xs.push(a);
        ys.push(b);
    }
    Ok((
        Configuration::from_valid(space.clone(), xs),
        Configuration::from_valid(space.clone(), ys),
    ))
}

/// Sum of squared distances between equally labeled points.
pub fn labeled_cost(a: &Configuration, b: &Configuration) -> f64 {
    let s = a.space();
    a.points().iter().zip(b.points()).map(|(x, y)| s.dist2(x, y)).sum()
}

/// A heat trajectory sampled at nondecreasing times, starting from `γ` at time 0.
pub fn evolve<R: Rng + ?Sized>(gamma: &Configuration, times: &[f64], rng: &mut R) -> Result<Vec<Configuration>> {
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut cur = gamma.clone();
    for &t in times {
        if !(t >= now) {
            return Err(Error::domain(format!(
                "trajectory times must be nondecreasing from 0, got {t} after {now}"
            )));
        }
        cur = heat_step_config(&cur, t - now, rng)?;
        now = t;
        out.push(cur.clone());
    }
    Ok(out)
}

/// CSV sink for trajectories: rows `sample_id,time,point_id,x0,x1,…`.
pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
    width: usize,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W, ambient_dim: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id".to_string(), "time".into(), "point_id".into()];
        header.extend((0..ambient_dim).map(|k| format!("x{k}")));
        inner.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        Ok(TrajectoryWriter {
            inner,
            width: ambient_dim,
        })
    }

    pub fn write(&mut self, sample_id: usize, times: &[f64], configs: &[Configuration]) -> Result<()> {
        for (t, c) in times.iter().zip(configs) {
            for (i, p) in c.points().iter().enumerate() {
                debug_assert_eq!(p.coords().len(), self.width);
                let mut row = vec![sample_id.to_string(), format!("{t:?}"), i.to_string()];
                row.extend(p.coords().iter().map(|x| format!("{x:?}")));
                self.inner.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}
