//! Synthetic benchmark manifolds.
//!
//! Parameterizations (`t`, `u`, `v` uniform unless stated; extra embedding
//! coordinates are zero before noise):
//!
//! | family        | d     | min embed  | coordinates |
//! |---------------|-------|------------|-------------|
//! | `spiral1d`    | 1     | 2          | `(t cos 6t, t sin 6t)`, `t ∈ [0,1]` |
//! | `hypercube`   | any   | d          | uniform on `[0,1]^d` |
//! | `gaussian`    | any   | d          | standard normal in `R^d` |
//! | `moebius`     | 2     | 3          | 10-twist strip: `((1 + v/2 cos 5u) cos u, (1 + v/2 cos 5u) sin u, v/2 sin 5u)`, `u ∈ [0,2π]`, `v ∈ [-1,1]` |
//! | `swissroll`   | 2     | 3          | `(t cos t, h, t sin t)`, `t = 3π/2 (1 + 2s)`, `s ∈ [0,1]`, `h ∈ [0,21]` |
//! | `sphere`      | any   | d+1        | normalized standard normal in `R^{d+1}` |
//! | `paraboloid`  | any   | 3(d+1)     | `x_j = 1/(1 + E_j/E_0)` with `E ~ Exp(1)`, `y = (x, Σx²)`, output `(y, sin y, y²)` |
//! | `nonlinear36` | any   | 2d         | `z_{2j} = p_{j+1} cos 2πp_j`, `z_{2j+1} = p_{j+1} sin 2πp_j` (cyclic `j+1`), `p ∈ [0,1]^d`; the `2d` block is tiled over all embedding coordinates |
//!
//! Isotropic Gaussian noise of standard deviation `noise_sigma` is added to
//! every embedding coordinate. Point `i` draws everything from its own
//! stream, so generation is a pure function of the `ManifoldSpec` and runs
//! in parallel.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{purpose_stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Spiral1d,
    Hypercube,
    Gaussian,
    Moebius,
    Swissroll,
    Sphere,
    Paraboloid,
    Nonlinear36,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Spiral1d,
        Family::Hypercube,
        Family::Gaussian,
        Family::Moebius,
        Family::Swissroll,
        Family::Sphere,
        Family::Paraboloid,
        Family::Nonlinear36,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Spiral1d => "spiral1d",
            Family::Hypercube => "hypercube",
            Family::Gaussian => "gaussian",
            Family::Moebius => "moebius",
            Family::Swissroll => "swissroll",
            Family::Sphere => "sphere",
            Family::Paraboloid => "paraboloid",
            Family::Nonlinear36 => "nonlinear36",
        }
    }

    /// Number of coordinates the noiseless parameterization produces.
    fn native_dim(self, d: usize) -> usize {
        match self {
            Family::Spiral1d => 2,
            Family::Hypercube | Family::Gaussian => d,
            Family::Moebius | Family::Swissroll => 3,
            Family::Sphere => d + 1,
            Family::Paraboloid => 3 * (d + 1),
            Family::Nonlinear36 => 2 * d,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub family: Family,
    pub intrinsic_dim: usize,
    pub embed_dim: usize,
    pub n_points: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ManifoldSpec {
    /// Spec with no noise, seed 0, embedded in the family's native dimension.
    pub fn new(family: Family, intrinsic_dim: usize, n_points: usize) -> Self {
        Self {
            family,
            intrinsic_dim,
            embed_dim: family.native_dim(intrinsic_dim),
            n_points,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn embed(mut self, embed_dim: usize) -> Self {
        self.embed_dim = embed_dim;
        self
    }

    pub fn noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.intrinsic_dim;
        if d == 0 {
            return Err(Error::InvalidSpec("intrinsic_dim must be positive".into()));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidSpec("n_points must be at least 2".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec("noise_sigma must be finite and >= 0".into()));
        }
        let fixed = match self.family {
            Family::Spiral1d => Some(1),
            Family::Moebius | Family::Swissroll => Some(2),
            _ => None,
        };
        if let Some(req) = fixed {
            if d != req {
                return Err(Error::InvalidSpec(format!(
                    "{} requires intrinsic_dim = {req}, got {d}",
                    self.family
                )));
            }
        }
        let need = self.family.native_dim(d);
        if self.embed_dim < need {
            return Err(Error::InvalidSpec(format!(
                "{} with d = {d} needs embed_dim >= {need}, got {}",
                self.family, self.embed_dim
            )));
        }
        Ok(())
    }
}

/// Samples `spec.n_points` points of the requested manifold.
pub fn generate(spec: &ManifoldSpec) -> Result<Dataset> {
    spec.validate()?;
    let embed = spec.embed_dim;
    let mut points = vec![0.0; spec.n_points * embed];
    points
        .par_chunks_mut(embed)
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = purpose_stream(spec.seed, Purpose::Point, i as u64);
            sample_point(spec.family, spec.intrinsic_dim, &mut rng, row);
            if spec.noise_sigma > 0.0 {
                let mut noise = purpose_stream(spec.seed, Purpose::Noise, i as u64);
                for v in row.iter_mut() {
                    let z: f64 = noise.sample(StandardNormal);
                    *v += spec.noise_sigma * z;
                }
            }
        });
    let name = format!("{}_d{}_D{}", spec.family, spec.intrinsic_dim, embed);
    Dataset::new(spec.n_points, embed, points, None, name)
}

fn sample_point<R: Rng>(family: Family, d: usize, rng: &mut R, row: &mut [f64]) {
    match family {
        Family::Spiral1d => {
            let t: f64 = rng.random();
            row[0] = t * (6.0 * t).cos();
            row[1] = t * (6.0 * t).sin();
        }
        Family::Hypercube => {
            for v in &mut row[..d] {
                *v = rng.random();
            }
        }
        Family::Gaussian => {
            for v in &mut row[..d] {
                *v = rng.sample(StandardNormal);
            }
        }
        Family::Moebius => {
            let u = TAU * rng.random::<f64>();
            let v = 2.0 * rng.random::<f64>() - 1.0;
            let twist = 5.0 * u;
            let radial = 1.0 + 0.5 * v * twist.cos();
            row[0] = radial * u.cos();
            row[1] = radial * u.sin();
            row[2] = 0.5 * v * twist.sin();
        }
        Family::Swissroll => {
            let t = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
            let h = 21.0 * rng.random::<f64>();
            row[0] = t * t.cos();
            row[1] = h;
            row[2] = t * t.sin();
        }
        Family::Sphere => {
            let mut norm2 = 0.0;
            for v in &mut row[..=d] {
                let z: f64 = rng.sample(StandardNormal);
                *v = z;
                norm2 += z * z;
            }
            let inv = 1.0 / norm2.sqrt();
            for v in &mut row[..=d] {
                *v *= inv;
            }
        }
        Family::Paraboloid => {
            let e0: f64 = rng.sample(Exp1);
            let mut sq = 0.0;
            for j in 0..d {
                let e: f64 = rng.sample(Exp1);
                let x = 1.0 / (1.0 + e / e0);
                row[j] = x;
                sq += x * x;
            }
            row[d] = sq;
            let m = d + 1;
            for j in 0..m {
                let y = row[j];
                row[m + j] = y.sin();
                row[2 * m + j] = y * y;
            }
        }
        Family::Nonlinear36 => {
            let p: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let block = 2 * d;
            for (c, v) in row.iter_mut().enumerate() {
                let b = c % block;
                let j = b / 2;
                let radius = p[(j + 1) % d];
                let angle = TAU * p[j];
                *v = if b.is_multiple_of(2) {
                    radius * angle.cos()
                } else {
                    radius * angle.sin()
                };
            }
        }
    }
}
