//! Determinantal orbitals reproducing a curl-free density pair.
//!
//! For a pair with `jp / rho = grad S`, the orbitals
//! `phi_k = sqrt(rho / N) exp(i (k f(x1) - M(x1) + S))`, `k = 0..N-1`, are
//! orthonormal, their densities sum to `rho` and their currents sum to `jp`.
//! Here `f` is `2 pi / N` times the cumulative first-axis marginal of `rho`,
//! and `M = (N - 1) f / 2` centres the phase ramps so their currents cancel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{self, validate_pair, DensityPair, Tolerances};
use crate::error::{Error, Result};
use crate::functionals::{coulomb_sum, det_bound_coefficient, j1};
use crate::grid::{self, ComplexField, ScalarField, VectorField};
use crate::value::InequalityAudit;

use std::f64::consts::PI;

/// Phase bookkeeping of the construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseData {
    /// `f(x1)`, one value per first-axis cell.
    pub f: ScalarField,
    /// `M(x1) = (N - 1) f / 2`.
    pub m: ScalarField,
    /// `S` with `grad S = jp / rho` on the support.
    pub s: ScalarField,
    /// Cell where `S = 0`.
    pub ref_point: [usize; 3],
}

/// Orbitals stored as a common amplitude and per-orbital phases.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalSet {
    pub n: usize,
    /// `sqrt(rho / N)`.
    pub amplitude: ScalarField,
    pub phase: PhaseData,
    pub source: DensityPair,
}

impl OrbitalSet {
    /// Total phase of orbital `k` at a cell.
    pub fn phase_at(&self, k: usize, cell: usize) -> f64 {
        let i1 = self.amplitude.grid().unravel(cell)[0];
        k as f64 * self.phase.f.values()[i1] - self.phase.m.values()[i1] + self.phase.s.values()[cell]
    }

    pub fn orbital(&self, k: usize) -> ComplexField {
        assert!(k < self.n, "orbital index {k} out of range");
        let values = self
            .amplitude
            .values()
            .iter()
            .enumerate()
            .map(|(c, &a)| Complex64::from_polar(a, self.phase_at(k, c)))
            .collect();
        ComplexField::new(*self.amplitude.grid(), values).expect("finite orbital")
    }

    pub fn orbitals(&self) -> Vec<ComplexField> {
        (0..self.n).map(|k| self.orbital(k)).collect()
    }

    /// Overlap matrix `(phi_k, phi_l)`, row-major.
    pub fn gram(&self) -> Vec<Complex64> {
        let orbs = self.orbitals();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for k in 0..self.n {
            for l in 0..self.n {
                out[k * self.n + l] = grid::inner_product(&orbs[k], &orbs[l]).expect("same grid");
            }
        }
        out
    }

    /// Largest deviation of the overlap matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0f64;
        for k in 0..self.n {
            for l in 0..self.n {
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((g[k * self.n + l] - target).norm());
            }
        }
        worst
    }
}

/// `f(x1) = (2 pi / N) * cumulative trapezoid of the first-axis marginal`,
/// starting at 0 in the first cell.
pub fn cumulative_phase_f(rho: &ScalarField, n: usize) -> Result<ScalarField> {
    if n == 0 {
        return Err(Error::Config("particle number must be positive".into()));
    }
    let g2 = grid::marginal_x1(rho)?;
    let h = g2.grid().spacing()[0];
    let scale = 2.0 * PI / n as f64;
    let mut f = Vec::with_capacity(g2.values().len());
    let mut acc = 0.0;
    let mut prev = None;
    for &v in g2.values() {
        if let Some(p) = prev {
            acc += 0.5 * h * (p + v);
        }
        f.push(scale * acc);
        prev = Some(v);
    }
    ScalarField::new(*g2.grid(), f)
}

/// `S` with `grad S = jp / rho`, integrated from the lowest-index cell above
/// the density floor.
pub fn phase_s(p: &DensityPair) -> Result<ScalarField> {
    phase_s_with(p, &Tolerances::default())
}

pub fn phase_s_with(p: &DensityPair, tol: &Tolerances) -> Result<ScalarField> {
    Ok(phase_s_ref(p, tol)?.0)
}

fn phase_s_ref(p: &DensityPair, tol: &Tolerances) -> Result<(ScalarField, [usize; 3])> {
    let g = *p.grid();
    let (u, mask) = density::velocity(p, tol)?;
    let Some(r) = mask.iter().position(|&m| m) else {
        return Ok((ScalarField::zeros(g), [0; 3]));
    };
    let reference = g.unravel(r);
    let s = grid::line_integrate_masked(&u, reference, Some(&mask), &tol.path())?;
    Ok((s, reference))
}

fn check_pair(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("particle number must be positive".into()));
    }
    let r = validate_pair(p, n, tol);
    if !r.verdict {
        let reasons: Vec<String> = r.reasons.iter().map(|x| x.to_string()).collect();
        return Err(Error::NotValidated(reasons.join(", ")));
    }
    Ok(r.j0_value.finite().expect("validated pair has finite J0"))
}

pub fn build_orbitals(p: &DensityPair, n: usize) -> Result<OrbitalSet> {
    build_orbitals_with(p, n, &Tolerances::default())
}

pub fn build_orbitals_with(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<OrbitalSet> {
    check_pair(p, n, tol)?;
    let (s, ref_point) = phase_s_ref(p, tol)?;
    let f = cumulative_phase_f(&p.rho, n)?;
    let half = (n as f64 - 1.0) / 2.0;
    let m = f.map(|v| half * v);
    let inv_n = 1.0 / n as f64;
    let amplitude = p.rho.map(|r| (r.max(0.0) * inv_n).sqrt());
    Ok(OrbitalSet {
        n,
        amplitude,
        phase: PhaseData { f, m, s, ref_point },
        source: p.clone(),
    })
}

/// Density `sum |phi_k|^2` and current `sum Im(conj(phi_k) grad phi_k)`.
pub fn densities_from_orbitals(o: &OrbitalSet) -> Result<DensityPair> {
    let g = *o.amplitude.grid();
    let d = g.dim();
    let mut rho = vec![0.0; g.len()];
    let mut jp = vec![0.0; g.len() * d];
    for k in 0..o.n {
        let phi = o.orbital(k);
        let re = phi.re();
        let im = phi.im();
        let gre = grid::gradient(&re)?;
        let gim = grid::gradient(&im)?;
        for c in 0..g.len() {
            rho[c] += phi.values()[c].norm_sqr();
            let (a, b) = (re.values()[c], im.values()[c]);
            for a_ in 0..d {
                jp[c * d + a_] += a * gim.at(c)[a_] - b * gre.at(c)[a_];
            }
        }
    }
    DensityPair::new(ScalarField::new(g, rho)?, VectorField::new(g, jp)?)
}

/// `sum_k integral |grad phi_k|^2`, with the same nearest-neighbour
/// difference form as `J1`, applied to real and imaginary parts.
pub fn kinetic_direct(o: &OrbitalSet) -> f64 {
    (0..o.n)
        .map(|k| {
            let phi = o.orbital(k);
            grid::dirichlet_energy(&phi.re()) + grid::dirichlet_energy(&phi.im())
        })
        .sum()
}

/// `integral rho (df/dx1)^2` with `df/dx1 = (2 pi / N) g^2` taken from the
/// marginal itself.
pub fn phase_ramp_energy(rho: &ScalarField, n: usize) -> Result<f64> {
    let g2 = grid::marginal_x1(rho)?;
    let h = g2.grid().spacing()[0];
    let c = 2.0 * PI / n as f64;
    Ok(c * c * g2.values().iter().map(|v| v * v * v).sum::<f64>() * h)
}

/// `J1 + ((N^2 - 1) / 12) integral rho (df/dx1)^2 + J0`.
pub fn kinetic_formula(p: &DensityPair, n: usize) -> Result<f64> {
    kinetic_formula_with(p, n, &Tolerances::default())
}

pub fn kinetic_formula_with(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<f64> {
    let j0v = check_pair(p, n, tol)?;
    phase_s_ref(p, tol)?;
    Ok(formula_terms(p, n, j0v)?.iter().sum())
}

fn formula_terms(p: &DensityPair, n: usize, j0v: f64) -> Result<[f64; 3]> {
    let nf = n as f64;
    let mid = if n == 1 {
        0.0
    } else {
        (nf * nf - 1.0) / 12.0 * phase_ramp_energy(&p.rho, n)?
    };
    Ok([j1(&p.rho), mid, j0v])
}

/// `kinetic_formula <= (1 + (4 pi)^2 (N^2 - 1) / 12) J1 + J0`.
pub fn kinetic_bound_audit(p: &DensityPair, n: usize) -> Result<InequalityAudit> {
    kinetic_bound_audit_with(p, n, &Tolerances::default())
}

pub fn kinetic_bound_audit_with(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<InequalityAudit> {
    let j0v = check_pair(p, n, tol)?;
    phase_s_ref(p, tol)?;
    let t = formula_terms(p, n, j0v)?;
    let lhs = t.iter().sum();
    let rhs = det_bound_coefficient(n) * t[0] + j0v;
    Ok(InequalityAudit::roundoff("T(det) <= (1 + (4pi)^2 (N^2-1)/12) J1 + J0", lhs, rhs))
}

/// `max g^4 <= 4 N J1` with `g^2` the first-axis marginal.
pub fn g_bound_audit(rho: &ScalarField, n: usize) -> Result<InequalityAudit> {
    let g2 = grid::marginal_x1(rho)?;
    let lhs = g2.values().iter().fold(0.0f64, |m, v| m.max(v * v));
    let rhs = 4.0 * n as f64 * j1(rho);
    Ok(InequalityAudit::roundoff("max g^4 <= 4 N J1", lhs, rhs))
}

/// Fejer kernel `sin^2(N t / 2) / (N sin^2(t / 2))`, equal to `N` on `2 pi Z`.
pub fn fejer(n: usize, t: f64) -> f64 {
    assert!(n >= 1, "Fejer kernel needs N >= 1");
    if n == 1 {
        return 1.0;
    }
    let nf = n as f64;
    let tau = 2.0 * PI;
    let tr = t - tau * (t / tau).round();
    if tr.abs() < 1e-6 {
        return nf - nf * (nf * nf - 1.0) * tr * tr / 12.0;
    }
    let num = (0.5 * nf * tr).sin();
    let den = (0.5 * tr).sin();
    num * num / (nf * den * den)
}

/// `-(1 / 2N) integral integral rho(x) rho(y) F_N(f(x1) - f(y1)) / |x - y|`
/// with the same softened kernel and summation as the Hartree energy.
pub fn exc_fejer(rho: &ScalarField, n: usize) -> Result<f64> {
    let f = cumulative_phase_f(rho, n)?;
    let fv = f.values();
    let n1 = fv.len();
    let mut w = vec![0.0; n1 * n1];
    for i in 0..n1 {
        for j in 0..n1 {
            w[i * n1 + j] = fejer(n, fv[i] - fv[j]);
        }
    }
    Ok(-(1.0 / (2.0 * n as f64)) * coulomb_sum(rho, Some(&w)))
}

/// One-particle constrained search `Q = J1 + J0`.
pub fn q_exact_n1(p: &DensityPair) -> Result<f64> {
    q_exact_n1_with(p, &Tolerances::default())
}

pub fn q_exact_n1_with(p: &DensityPair, tol: &Tolerances) -> Result<f64> {
    let j0v = check_pair(p, 1, tol)?;
    if p.grid().dim() == 3 {
        phase_s_ref(p, tol)?;
    }
    Ok(j1(&p.rho) + j0v)
}

/// Everything the construction produces for one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    pub n: usize,
    pub t_direct: f64,
    pub t_formula: f64,
    pub t_bound_rhs: f64,
    pub tol_kin: f64,
    pub jp_error_l1: f64,
    pub rho_error_max: f64,
    pub orthonormality_error: f64,
    pub exc: f64,
    pub kinetic_bound_audit: InequalityAudit,
    pub g_bound_audit: InequalityAudit,
}

/// `max(1e-8, 5 h^2 max(1, |reference|))` with `h` the largest spacing.
pub fn kinetic_tolerance(h: f64, reference: f64) -> f64 {
    1e-8f64.max(5.0 * h * h * reference.abs().max(1.0))
}

/// L1 distance of two current fields.
pub fn current_l1_error(a: &VectorField, b: &VectorField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.grid().cell_volume()
}

pub fn det_report(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<DetReport> {
    let o = build_orbitals_with(p, n, tol)?;
    let rec = densities_from_orbitals(&o)?;
    let t_direct = kinetic_direct(&o);
    let kb = kinetic_bound_audit_with(p, n, tol)?;
    let t_formula = kb.lhs;
    let rho_max = p.rho.max().max(f64::MIN_POSITIVE);
    let rho_error_max = rec
        .rho
        .values()
        .iter()
        .zip(p.rho.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / rho_max;
    Ok(DetReport {
        n,
        t_direct,
        t_formula,
        t_bound_rhs: kb.rhs,
        tol_kin: kinetic_tolerance(p.grid().max_spacing(), t_formula),
        jp_error_l1: current_l1_error(&rec.jp, &p.jp),
        rho_error_max,
        orthonormality_error: o.orthonormality_error(),
        exc: exc_fejer(&p.rho, n)?,
        kinetic_bound_audit: kb,
        g_bound_audit: g_bound_audit(&p.rho, n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_special_values() {
        for n in 1..=6 {
            assert_eq!(fejer(n, 0.0), n as f64);
            assert_eq!(fejer(n, 4.0 * PI), n as f64);
        }
        for t in [-3.0, 0.1, 2.0, 7.5] {
            assert_eq!(fejer(1, t), 1.0);
        }
        assert!(fejer(2, PI).abs() < 1e-30);
    }

    #[test]
    fn fejer_series_branch_is_continuous() {
        for n in 2..=6 {
            let a = fejer(n, 1.0001e-6);
            let b = fejer(n, 0.9999e-6);
            assert!((a - b).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn fejer_is_mean_of_dirichlet_kernels() {
        // F_N(t) = (1/N) |sum_{k<N} e^{ikt}|^2
        for n in 2..=6 {
            for t in [0.3, 1.7, -2.2, 3.0] {
                let z: Complex64 = (0..n).map(|k| Complex64::from_polar(1.0, k as f64 * t)).sum();
                assert!((fejer(n, t) - z.norm_sqr() / n as f64).abs() < 1e-12);
            }
        }
    }
}
