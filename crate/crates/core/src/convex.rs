//! Sampled Legendre transform of one-particle lattice pairs and the convexity
//! checks built on it.
//!
//! For a pair `(rho, jp)` and potentials `(v, A)` drawn from a finite family,
//! `G(v, A) = e0(v, A) - 2 integral jp.A - integral rho (v + A^2)` is a lower
//! bound on the Legendre-transform functional `F(rho, jp)`. The search
//! maximizes `G` over the family's coefficient box; its best value is reported
//! as a certified lower bound, never as `F` itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFn, Term};
use crate::density::{self, convex_combine, validate_pair, DensityPair, Potentials, Tolerances};
use crate::det::q_exact_n1_with;
use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, ScalarField, VectorField};
use crate::solver::{e0_of, Boundary};
use crate::value::InequalityAudit;

const RESTARTS: u64 = 3;
const GOLDEN_EVALS: usize = 24;
const MAX_SWEEPS: usize = 400;

fn default_budget() -> usize {
    2000
}

fn default_boundary() -> Boundary {
    Boundary::Dirichlet
}

/// Finite family of potentials `v = sum c_k b_k`, `A = sum d_k a_k` with every
/// coefficient confined to a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialFamily {
    pub v_basis: Vec<BasisFn>,
    #[serde(default)]
    pub a_basis: Vec<BasisFn>,
    /// `[lo, hi]` per coefficient, `v` coefficients first.
    pub boxes: Vec<[f64; 2]>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

impl PotentialFamily {
    pub fn dim(&self) -> usize {
        self.v_basis.len() + self.a_basis.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.boxes.len() != self.dim() {
            return Err(Error::Config(format!(
                "family has {} coefficients but {} boxes",
                self.dim(),
                self.boxes.len()
            )));
        }
        for b in &self.boxes {
            if !(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]) {
                return Err(Error::Config(format!("bad coefficient box {b:?}")));
            }
        }
        Ok(())
    }

    fn terms(&self, c: &[f64]) -> (Vec<Term>, Vec<Term>) {
        let nv = self.v_basis.len();
        let v = self
            .v_basis
            .iter()
            .zip(&c[..nv])
            .map(|(&basis, &coef)| Term { basis, coef })
            .collect();
        let a = self
            .a_basis
            .iter()
            .zip(&c[nv..])
            .map(|(&basis, &coef)| Term { basis, coef })
            .collect();
        (v, a)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eval: usize,
    pub restart: u64,
    pub value: f64,
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreResult {
    /// Best sampled value: a lower bound on `F`.
    pub f_lower: f64,
    pub argmax_v: Vec<Term>,
    pub argmax_a: Vec<Term>,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

impl LegendreResult {
    /// Potentials at the best coefficients, sampled on `grid`.
    pub fn potentials(&self, grid: &GridSpec) -> Result<Potentials> {
        potentials_from_terms(&self.argmax_v, &self.argmax_a, grid)
    }
}

fn potentials_from_terms(v: &[Term], a: &[Term], grid: &GridSpec) -> Result<Potentials> {
    let vf = crate::basis::expand(v, grid);
    let af = crate::basis::expand(a, grid);
    Potentials::new(vf, VectorField::new(*grid, af.into_values())?)
}

/// `G(v, A)` for one pair with the basis functions sampled once.
struct Objective<'a> {
    p: &'a DensityPair,
    v_samples: Vec<ScalarField>,
    a_samples: Vec<ScalarField>,
    boundary: Boundary,
}

impl<'a> Objective<'a> {
    fn new(p: &'a DensityPair, fam: &PotentialFamily) -> Self {
        let g = p.grid();
        Objective {
            p,
            v_samples: fam.v_basis.iter().map(|b| b.sample(g)).collect(),
            a_samples: fam.a_basis.iter().map(|b| b.sample(g)).collect(),
            boundary: fam.boundary,
        }
    }

    fn fields(&self, c: &[f64]) -> (ScalarField, VectorField) {
        let g = *self.p.grid();
        let nv = self.v_samples.len();
        let mut v = vec![0.0; g.len()];
        for (s, &ck) in self.v_samples.iter().zip(&c[..nv]) {
            for (o, x) in v.iter_mut().zip(s.values()) {
                *o += ck * x;
            }
        }
        let mut a = vec![0.0; g.len()];
        for (s, &ck) in self.a_samples.iter().zip(&c[nv..]) {
            for (o, x) in a.iter_mut().zip(s.values()) {
                *o += ck * x;
            }
        }
        (
            ScalarField::new(g, v).expect("grid length"),
            VectorField::new(g, a).expect("grid length"),
        )
    }

    fn value(&self, c: &[f64]) -> Result<f64> {
        let (v, a) = self.fields(c);
        let e0 = e0_of(&v, &a, self.boundary)?;
        let pot = Potentials { v, a };
        Ok(e0 - density::pairing_energy(self.p, &pot)?)
    }
}

/// Evaluation bookkeeping. Decisions never look at the budget, so a larger
/// budget replays a smaller one's evaluations as a prefix.
struct Search<'a> {
    obj: Objective<'a>,
    budget: usize,
    evals: usize,
    restart: u64,
    best: f64,
    best_x: Vec<f64>,
    trace: Vec<TraceEntry>,
}

impl Search<'_> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.budget {
            return None;
        }
        self.evals += 1;
        // A failed solve is logged as -inf and skipped.
        let value = self.obj.value(x).unwrap_or(f64::NEG_INFINITY);
        if value > self.best {
            self.best = value;
            self.best_x = x.to_vec();
        }
        self.trace.push(TraceEntry {
            eval: self.evals,
            restart: self.restart,
            value,
            best: self.best,
        });
        Some(value)
    }
}

fn feasible_interval(x: &[f64], d: &[f64], boxes: &[[f64; 2]], radius: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (-radius, radius);
    for ((xi, di), b) in x.iter().zip(d).zip(boxes) {
        if *di > 0.0 {
            lo = lo.max((b[0] - xi) / di);
            hi = hi.min((b[1] - xi) / di);
        } else if *di < 0.0 {
            lo = lo.max((b[1] - xi) / di);
            hi = hi.min((b[0] - xi) / di);
        }
    }
    (lo.min(0.0), hi.max(0.0))
}

fn step(x: &[f64], d: &[f64], t: f64, boxes: &[[f64; 2]]) -> Vec<f64> {
    x.iter()
        .zip(d)
        .zip(boxes)
        .map(|((xi, di), b)| (xi + t * di).clamp(b[0], b[1]))
        .collect()
}

/// Golden-section maximization of `t -> G(x + t d)` on the feasible part of
/// `[-radius, radius]`. Returns the best point seen (possibly `x` itself) or
/// `None` when the budget ran out.
fn line_search(
    s: &mut Search,
    x: &[f64],
    fx: f64,
    d: &[f64],
    boxes: &[[f64; 2]],
    radius: f64,
) -> Option<(Vec<f64>, f64, f64)> {
    let (mut a, mut b) = feasible_interval(x, d, boxes, radius);
    if b - a <= 0.0 {
        return Some((x.to_vec(), fx, 0.0));
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = (x.to_vec(), fx, 0.0);
    let mut c = b - r * (b - a);
    let mut e = a + r * (b - a);
    let xc = step(x, d, c, boxes);
    let mut fc = s.eval(&xc)?;
    if fc > best.1 {
        best = (xc, fc, c);
    }
    let xe = step(x, d, e, boxes);
    let mut fe = s.eval(&xe)?;
    if fe > best.1 {
        best = (xe, fe, e);
    }
    for _ in 2..GOLDEN_EVALS {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - r * (b - a);
            let xn = step(x, d, c, boxes);
            fc = s.eval(&xn)?;
            if fc > best.1 {
                best = (xn, fc, c);
            }
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + r * (b - a);
            let xn = step(x, d, e, boxes);
            fe = s.eval(&xn)?;
            if fe > best.1 {
                best = (xn, fe, e);
            }
        }
    }
    Some(best)
}

/// One restart: coordinate line searches in box-scaled units plus a Powell
/// direction per sweep, with a trust radius that follows the step sizes.
fn ascend(s: &mut Search, x0: Vec<f64>, boxes: &[[f64; 2]]) -> Option<()> {
    let k = x0.len();
    let widths: Vec<f64> = boxes.iter().map(|b| (b[1] - b[0]).max(f64::MIN_POSITIVE)).collect();
    let coordinate = |i: usize| -> Vec<f64> {
        let mut d = vec![0.0; k];
        d[i] = widths[i];
        d
    };
    let mut dirs: Vec<Vec<f64>> = (0..k).map(coordinate).collect();
    let mut x = x0;
    let mut fx = s.eval(&x)?;
    let mut radius = 0.5;
    for sweep in 0..MAX_SWEEPS {
        let x_start = x.clone();
        let f_start = fx;
        let mut biggest = (0usize, 0.0f64);
        let mut longest = 0.0f64;
        for (i, d) in dirs.iter().enumerate() {
            let (xn, fnew, t) = line_search(s, &x, fx, d, boxes, radius)?;
            if fnew > fx {
                if fnew - fx > biggest.1 {
                    biggest = (i, fnew - fx);
                }
                longest = longest.max(t.abs());
                x = xn;
                fx = fnew;
            }
        }
        let delta: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        if delta.iter().any(|v| *v != 0.0) {
            let (xn, fnew, t) = line_search(s, &x, fx, &delta, boxes, 1.0)?;
            if fnew > fx {
                longest = longest.max(t.abs());
                x = xn;
                fx = fnew;
            }
            if k > 1 {
                dirs[biggest.0] = delta;
            }
        }
        if (sweep + 1) % (k + 1) == 0 {
            dirs = (0..k).map(coordinate).collect();
        }
        let gain = fx - f_start;
        radius = if gain > 1e-13 * fx.abs().max(1.0) {
            (4.0 * longest).clamp(1e-9, 0.5)
        } else {
            radius * 0.25
        };
        if radius < 1e-9 {
            break;
        }
    }
    Some(())
}

fn run_search(p: &DensityPair, fam: &PotentialFamily, start: Option<Vec<f64>>) -> Result<LegendreResult> {
    fam.check()?;
    if p.grid().dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: p.grid().dim(),
        });
    }
    let report = validate_pair(p, 1, &Tolerances::default());
    if !report.verdict {
        let reasons: Vec<String> = report.reasons.iter().map(|r| r.to_string()).collect();
        return Err(Error::NotValidated(reasons.join(", ")));
    }
    let boxes = fam.boxes.clone();
    let mut s = Search {
        obj: Objective::new(p, fam),
        budget: fam.budget,
        evals: 0,
        restart: 0,
        best: f64::NEG_INFINITY,
        best_x: boxes.iter().map(|b| 0.5 * (b[0] + b[1])).collect(),
        trace: Vec::new(),
    };
    for r in 0..RESTARTS {
        s.restart = r;
        let x0 = if r == 0 {
            start
                .clone()
                .unwrap_or_else(|| boxes.iter().map(|b| 0.5 * (b[0] + b[1])).collect())
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(fam.seed.wrapping_add(r));
            boxes
                .iter()
                .map(|b| if b[1] > b[0] { rng.gen_range(b[0]..=b[1]) } else { b[0] })
                .collect()
        };
        if ascend(&mut s, x0, &boxes).is_none() {
            break;
        }
    }
    let (argmax_v, argmax_a) = fam.terms(&s.best_x);
    Ok(LegendreResult {
        f_lower: s.best,
        argmax_v,
        argmax_a,
        evaluations: s.evals,
        trace: s.trace,
    })
}

/// Sampled supremum of `G` over the family for a one-particle 1D pair.
pub fn f_legendre_sampled(p: &DensityPair, fam: &PotentialFamily) -> Result<LegendreResult> {
    run_search(p, fam, None)
}

/// As [`f_legendre_sampled`], with the first restart started from an earlier
/// result's best coefficients, matched to this family by basis name (absent
/// names start at 0; values are clamped to the boxes). When the earlier
/// family's bases are a prefix of this one's and its optimum lies inside
/// these boxes, the result is never lower than `warm.f_lower`.
pub fn f_legendre_sampled_warm(
    p: &DensityPair,
    fam: &PotentialFamily,
    warm: &LegendreResult,
) -> Result<LegendreResult> {
    fam.check()?;
    let lookup = |terms: &[Term], b: &BasisFn| terms.iter().find(|t| t.basis == *b).map_or(0.0, |t| t.coef);
    let mut x0: Vec<f64> = fam
        .v_basis
        .iter()
        .map(|b| lookup(&warm.argmax_v, b))
        .chain(fam.a_basis.iter().map(|b| lookup(&warm.argmax_a, b)))
        .collect();
    for (xi, b) in x0.iter_mut().zip(&fam.boxes) {
        *xi = xi.clamp(b[0], b[1]);
    }
    run_search(p, fam, Some(x0))
}

/// `1e-3 * max(1, |q|)`.
pub fn search_tolerance(q: f64) -> f64 {
    1e-3 * q.abs().max(1.0)
}

/// Value of the affine minorant of `Q` with slope `(v, A)` at `p`:
/// `e0(v, A) - 2 integral jp.A - integral rho (v + A^2)`.
pub fn affine_minorant(p: &DensityPair, pot: &Potentials, boundary: Boundary) -> Result<f64> {
    Ok(e0_of(&pot.v, &pot.a, boundary)? - density::pairing_energy(p, pot)?)
}

/// Checks, for one-particle pairs on a shared grid:
/// (a) sampled `F <= Q` at every pair,
/// (b) midpoint convexity of sampled `F` along consecutive segments, within
///     the search tolerance,
/// (c) sampled `F` at each pair is not below the affine minorants built from
///     the other pairs' best potentials, within the search tolerance.
pub fn envelope_audit(pairs: &[DensityPair], fam: &PotentialFamily) -> Result<Vec<InequalityAudit>> {
    let tol = Tolerances::default();
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    for p in &pairs[1..] {
        grid::same_grid(pairs[0].grid(), p.grid())?;
    }
    let mut out = Vec::new();
    let mut results = Vec::with_capacity(pairs.len());
    let mut qs = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let r = f_legendre_sampled(p, fam)?;
        let q = q_exact_n1_with(p, &tol)?;
        out.push(InequalityAudit::roundoff(format!("pair {i}: sampled F <= Q"), r.f_lower, q));
        results.push(r);
        qs.push(q);
    }
    for i in 0..pairs.len().saturating_sub(1) {
        let mid = convex_combine(&pairs[i..i + 2], &[0.5, 0.5], &tol)?;
        let fm = f_legendre_sampled(&mid, fam)?.f_lower;
        let avg = 0.5 * (results[i].f_lower + results[i + 1].f_lower);
        let eps = search_tolerance(0.5 * (qs[i] + qs[i + 1]));
        out.push(InequalityAudit::new(
            format!("segment {i}-{}: F(mid) <= (F1 + F2)/2", i + 1),
            fm,
            avg,
            eps,
        ));
    }
    for (i, p) in pairs.iter().enumerate() {
        for (k, rk) in results.iter().enumerate() {
            if k == i {
                continue;
            }
            let pot = rk.potentials(p.grid())?;
            let l = affine_minorant(p, &pot, fam.boundary)?;
            out.push(InequalityAudit::new(
                format!("pair {i}: minorant from pair {k} <= sampled F"),
                l,
                results[i].f_lower,
                search_tolerance(qs[i]),
            ));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElResidual {
    pub r_rho: f64,
    pub r_jp: f64,
    pub mu_star: f64,
    /// `10 h^2 max(1, |mu_star|)`.
    pub tolerance: f64,
}

/// Residuals of the stationarity conditions of the one-particle functional
/// `J1 + J0` against `(v, A)`:
///
/// `r_rho = || -lap sqrt(rho) + (v + |A|^2 - |jp|^2 / rho^2 + mu) sqrt(rho) ||`
/// with `mu` fitted by least squares, and
/// `r_jp = (integral |2 jp + 2 rho A|^2 / rho)^(1/2)`.
///
/// The Laplacian treats the exterior as zero, matching Dirichlet lattices.
pub fn euler_lagrange_residual(p: &DensityPair, pot: &Potentials) -> Result<ElResidual> {
    euler_lagrange_residual_with(p, pot, &Tolerances::default())
}

pub fn euler_lagrange_residual_with(p: &DensityPair, pot: &Potentials, tol: &Tolerances) -> Result<ElResidual> {
    grid::same_grid(p.grid(), pot.grid())?;
    let (_, mask) = density::velocity(p, tol)?;
    let g = *p.grid();
    let d = g.dim();
    let dv = g.cell_volume();
    let u = p.rho.map(|r| r.max(0.0).sqrt());
    let lap = grid::laplacian(&u);
    let mut b = vec![0.0; g.len()];
    let mut r_jp2 = 0.0;
    for i in 0..g.len() {
        let a = pot.a.at(i);
        let a2: f64 = a.iter().map(|x| x * x).sum();
        let mut coeff = pot.v.values()[i] + a2;
        if mask[i] {
            let r = p.rho.values()[i];
            let j = p.jp.at(i);
            let j2: f64 = j.iter().map(|x| x * x).sum();
            coeff -= j2 / (r * r);
            let e2: f64 = (0..d).map(|k| (2.0 * j[k] + 2.0 * r * a[k]).powi(2)).sum();
            r_jp2 += e2 / r;
        }
        b[i] = -lap.values()[i] + coeff * u.values()[i];
    }
    let uu: f64 = u.values().iter().map(|x| x * x).sum();
    let bu: f64 = b.iter().zip(u.values()).map(|(x, y)| x * y).sum();
    let mu_star = if uu > 0.0 { -bu / uu } else { 0.0 };
    let r_rho2: f64 = b
        .iter()
        .zip(u.values())
        .map(|(x, y)| (x + mu_star * y).powi(2))
        .sum();
    let h = g.max_spacing();
    Ok(ElResidual {
        r_rho: (r_rho2 * dv).sqrt(),
        r_jp: (r_jp2 * dv).sqrt(),
        mu_star,
        tolerance: 10.0 * h * h * mu_star.abs().max(1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub lambdas: Vec<f64>,
    /// `lambda Q(p1) + (1 - lambda) Q(p2) - Q(lambda p1 + (1 - lambda) p2)`.
    pub margins: Vec<f64>,
    pub min_margin: f64,
}

/// Convexity defect of `q` along the segment from `p2` (`lambda = 0`) to `p1`.
/// A negative margin witnesses non-convexity.
pub fn convexity_probe(
    p1: &DensityPair,
    p2: &DensityPair,
    q: &dyn Fn(&DensityPair) -> Result<f64>,
    lambdas: &[f64],
) -> Result<ProbeResult> {
    let tol = Tolerances::default();
    let q1 = q(p1)?;
    let q2 = q(p2)?;
    let mut margins = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::LambdaOutOfRange(l));
        }
        let mid = convex_combine(&[p1.clone(), p2.clone()], &[l, 1.0 - l], &tol)?;
        margins.push(l * q1 + (1.0 - l) * q2 - q(&mid)?);
    }
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ProbeResult {
        lambdas: lambdas.to_vec(),
        margins,
        min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_interval_respects_box() {
        let boxes = [[-1.0, 1.0], [0.0, 2.0]];
        let (lo, hi) = feasible_interval(&[0.5, 1.0], &[2.0, 0.0], &boxes, 10.0);
        assert!((lo + 0.75).abs() < 1e-15 && (hi - 0.25).abs() < 1e-15);
        let (lo, hi) = feasible_interval(&[0.5, 1.0], &[1.0, -1.0], &boxes, 0.1);
        assert_eq!((lo, hi), (-0.1, 0.1));
    }
}
