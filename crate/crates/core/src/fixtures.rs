//! Seeded test densities: Gaussian mixtures, compact bumps and curl-free
//! currents `jp = rho grad chi` with polynomial `chi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityPair;
use crate::grid::{integrate, GridSpec, ScalarField, VectorField};

/// `rho` rescaled so that its midpoint integral is `n`.
pub fn with_mass(rho: &ScalarField, n: f64) -> ScalarField {
    let m = integrate(rho);
    rho.scaled(n / m)
}

/// Sum of `weight * exp(-|x - center|^2 / width^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub centers: Vec<[f64; 3]>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianMixture {
    pub fn single(center: [f64; 3], width: f64) -> Self {
        GaussianMixture {
            centers: vec![center],
            widths: vec![width],
            weights: vec![1.0],
        }
    }

    pub fn eval(&self, x: [f64; 3], dim: usize) -> f64 {
        self.centers
            .iter()
            .zip(&self.widths)
            .zip(&self.weights)
            .map(|((c, w), a)| {
                let r2: f64 = (0..dim).map(|k| (x[k] - c[k]).powi(2)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    }

    /// Samples scaled to mass `n`.
    pub fn density(&self, grid: &GridSpec, n: f64) -> ScalarField {
        let d = grid.dim();
        with_mass(&ScalarField::from_fn(*grid, |x| self.eval(x, d)), n)
    }
}

/// `chi(x) = b.x + x^T M x / 2` with symmetric `M`; its gradient `b + M x` is
/// linear, so trapezoidal line integrals of it are exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPhase {
    pub b: [f64; 3],
    pub m: [[f64; 3]; 3],
}

impl QuadraticPhase {
    pub fn zero() -> Self {
        QuadraticPhase {
            b: [0.0; 3],
            m: [[0.0; 3]; 3],
        }
    }

    pub fn linear(b: [f64; 3]) -> Self {
        QuadraticPhase { b, m: [[0.0; 3]; 3] }
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            s += self.b[i] * x[i];
            for j in 0..3 {
                s += 0.5 * x[i] * self.m[i][j] * x[j];
            }
        }
        s
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let mut g = self.b;
        for (i, gi) in g.iter_mut().enumerate() {
            for j in 0..3 {
                *gi += self.m[i][j] * x[j];
            }
        }
        g
    }

    /// `jp = rho grad chi`.
    pub fn current(&self, rho: &ScalarField) -> VectorField {
        let g = *rho.grid();
        let d = g.dim();
        let mut vals = Vec::with_capacity(g.len() * d);
        for (i, &r) in rho.values().iter().enumerate() {
            let gr = self.gradient(g.center(i));
            vals.extend((0..d).map(|k| r * gr[k]));
        }
        VectorField::new(g, vals).expect("grid length")
    }

    pub fn pair(&self, rho: ScalarField) -> DensityPair {
        let jp = self.current(&rho);
        DensityPair::new(rho, jp).expect("shared grid")
    }
}

/// Separable phase with `d chi / d x_k = beta_k (1 + gamma exp(-((x_k - c_k) / s)^2))`.
///
/// Every velocity component depends on its own coordinate only, so the
/// difference curl vanishes identically and axis-ordered line integrals are
/// path independent. With `gamma >= 0` the speed `|grad chi|` is largest at
/// `center`; putting `center` on the density maximum keeps `|jp|` below its
/// floor wherever `rho` is below its own.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakedPhase {
    pub beta: [f64; 3],
    pub gamma: f64,
    pub center: [f64; 3],
    pub width: f64,
}

impl PeakedPhase {
    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for k in 0..3 {
            let t = (x[k] - self.center[k]) / self.width;
            g[k] = self.beta[k] * (1.0 + self.gamma * (-t * t).exp());
        }
        g
    }

    pub fn current(&self, rho: &ScalarField) -> VectorField {
        let g = *rho.grid();
        let d = g.dim();
        let mut vals = Vec::with_capacity(g.len() * d);
        for (i, &r) in rho.values().iter().enumerate() {
            let gr = self.gradient(g.center(i));
            vals.extend((0..d).map(|k| r * gr[k]));
        }
        VectorField::new(g, vals).expect("grid length")
    }

    pub fn pair(&self, rho: ScalarField) -> DensityPair {
        let jp = self.current(&rho);
        DensityPair::new(rho, jp).expect("shared grid")
    }
}

/// Centre of the cell holding the largest value.
pub fn argmax_center(rho: &ScalarField) -> [f64; 3] {
    let (i, _) = rho
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    rho.grid().center(i)
}

/// `prod_k cos^p(pi (x_k - c_k) / (2 a_k))` on `|x_k - c_k| < a_k`, zero outside.
pub fn cos_bump(grid: &GridSpec, center: [f64; 3], half_widths: [f64; 3], power: i32) -> ScalarField {
    let d = grid.dim();
    ScalarField::from_fn(*grid, |x| {
        let mut v = 1.0;
        for k in 0..d {
            let t = (x[k] - center[k]) / half_widths[k];
            if t.abs() >= 1.0 {
                return 0.0;
            }
            v *= (0.5 * std::f64::consts::PI * t).cos().powi(power);
        }
        v
    })
}

/// Deterministic generator of random curl-free test pairs.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Standard box for sampled mixtures: `[-7, 7]^3`.
    pub fn default_grid(cells: usize) -> GridSpec {
        GridSpec::cube(cells, -7.0, 7.0).expect("valid cube")
    }

    /// `components` Gaussians with widths in `[0.7, 1]`, centres within 2 of
    /// the origin along the first axis and within 1 along the others.
    pub fn mixture(&mut self, components: usize) -> GaussianMixture {
        let mut m = GaussianMixture {
            centers: Vec::new(),
            widths: Vec::new(),
            weights: Vec::new(),
        };
        for _ in 0..components {
            m.centers.push([
                self.rng.gen_range(-2.0..=2.0),
                self.rng.gen_range(-1.0..=1.0),
                self.rng.gen_range(-1.0..=1.0),
            ]);
            m.widths.push(self.rng.gen_range(0.7..=0.9));
            m.weights.push(self.rng.gen_range(0.5..=1.5));
        }
        m
    }

    /// Random peaked phase centred on the maximum of `rho`.
    pub fn phase(&mut self, rho: &ScalarField, strength: f64) -> PeakedPhase {
        let mut beta = [0.0; 3];
        for b in beta.iter_mut() {
            *b = strength * self.rng.gen_range(-1.0..=1.0);
        }
        PeakedPhase {
            beta,
            gamma: self.rng.gen_range(0.0..=1.0),
            center: argmax_center(rho),
            width: self.rng.gen_range(1.0..=3.0),
        }
    }

    /// Mixture density of mass `n` with a random curl-free current.
    pub fn pair(&mut self, grid: &GridSpec, n: usize, components: usize) -> DensityPair {
        let rho = self.mixture(components).density(grid, n as f64);
        self.phase(&rho, 1.0).pair(rho)
    }

    /// Nonnegative density without current.
    pub fn density(&mut self, grid: &GridSpec, n: usize, components: usize) -> ScalarField {
        self.mixture(components).density(grid, n as f64)
    }
}
