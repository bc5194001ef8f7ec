//! One-particle magnetic lattice Hamiltonians in one dimension.
//!
//! `(H psi)_j = (2 psi_j - e^{i A h} psi_{j+1} - e^{-i A' h} psi_{j-1}) / h^2 + v_j psi_j`
//! with `A` the average of the vector potential over the link. Dirichlet
//! lattices have zero values one cell beyond each end; periodic ones wrap.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{expand, Term};
use crate::density::{pairing_energy, DensityPair, Potentials, Provenance, Tolerances};
use crate::det::q_exact_n1_with;
use crate::error::{Error, Result};
use crate::grid::{same_grid, ComplexField, GridSpec, ScalarField, VectorField};
use crate::value::InequalityAudit;

/// Largest periodic lattice handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeHamiltonian {
    pub grid: GridSpec,
    pub v: ScalarField,
    pub a: VectorField,
    pub boundary: Boundary,
    /// Diagonal `2 / h^2 + v_j`.
    pub diag: Vec<f64>,
    /// `H_{j, j+1}`; for periodic lattices the last entry is `H_{n-1, 0}`.
    pub off: Vec<Complex64>,
}

pub fn discretize(v: &ScalarField, a: &VectorField, boundary: Boundary) -> Result<LatticeHamiltonian> {
    let g = *v.grid();
    same_grid(&g, a.grid())?;
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: g.dim(),
        });
    }
    if !v.is_finite() || !a.is_finite() {
        return Err(Error::Config("potentials must be finite".into()));
    }
    let n = g.len();
    if boundary == Boundary::Periodic && n < 3 {
        return Err(Error::ShapeTooSmall { axis: 0, len: n, min: 3 });
    }
    let h = g.spacing()[0];
    let inv_h2 = 1.0 / (h * h);
    let av = a.values();
    let links = if boundary == Boundary::Periodic { n } else { n - 1 };
    let off = (0..links)
        .map(|j| {
            let al = 0.5 * (av[j] + av[(j + 1) % n]);
            -Complex64::from_polar(inv_h2, al * h)
        })
        .collect();
    let diag = v.values().iter().map(|&vj| 2.0 * inv_h2 + vj).collect();
    Ok(LatticeHamiltonian {
        grid: g,
        v: v.clone(),
        a: a.clone(),
        boundary,
        diag,
        off,
    })
}

impl LatticeHamiltonian {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut out: Vec<Complex64> = psi.iter().zip(&self.diag).map(|(p, d)| p * d).collect();
        for (j, &o) in self.off.iter().enumerate() {
            let k = (j + 1) % n;
            out[j] += o * psi[k];
            out[k] += o.conj() * psi[j];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.len();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for j in 0..n {
            m[(j, j)] = Complex64::new(self.diag[j], 0.0);
        }
        for (j, &o) in self.off.iter().enumerate() {
            let k = (j + 1) % n;
            m[(j, k)] += o;
            m[(k, j)] += o.conj();
        }
        m
    }

    /// `max |H - H^dagger| / max |H|` of the assembled matrix.
    pub fn hermiticity_residual(&self) -> f64 {
        let m = self.to_dense();
        let scale = m.iter().fold(0.0f64, |s, z| s.max(z.norm()));
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn spectral_scale(&self) -> f64 {
        let n = self.len();
        let mut row: Vec<f64> = self.diag.iter().map(|d| d.abs()).collect();
        for (j, o) in self.off.iter().enumerate() {
            row[j] += o.norm();
            row[(j + 1) % n] += o.norm();
        }
        row.into_iter().fold(0.0, f64::max)
    }

    /// Gauge phases `theta` making `e^{-i theta_j} H_{j,j+1} e^{i theta_{j+1}}`
    /// real and negative (open chains only).
    fn chain_gauge(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.len()];
        for j in 0..self.off.len() {
            theta[j + 1] = theta[j] - (-self.off[j]).arg();
        }
        theta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    /// Normalized so that `integral |psi|^2 = 1`, real and positive where
    /// `|psi|` is largest.
    pub psi: ComplexField,
    pub degenerate_flag: bool,
    pub residual: f64,
    pub tol_eig: f64,
    pub gap_tol: f64,
    /// Cells where `|psi|^2` falls below `1e-12` of its maximum.
    pub node_cells: usize,
    pub boundary: Boundary,
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e2: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for j in 0.. {
        if q < 0.0 {
            count += 1;
        }
        if j + 1 == d.len() {
            break;
        }
        let qq = if q == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { q };
        q = d[j + 1] - x - e2[j] / qq;
    }
    count
}

/// `k`-th smallest eigenvalue by bisection, to full precision.
fn bisect_eigenvalue(d: &[f64], e2: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e2, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the tridiagonal system `(T - sigma) x = b` by Gaussian elimination
/// with partial pivoting; zero pivots are nudged.
fn shifted_solve(d: &[f64], e: &[f64], sigma: f64, b: &[f64], tiny: f64) -> Vec<f64> {
    let n = d.len();
    // Row j holds entries at columns j, j+1, j+2 after pivoting.
    let mut rows: Vec<[f64; 3]> = (0..n)
        .map(|j| {
            [
                d[j] - sigma,
                if j + 1 < n { e[j] } else { 0.0 },
                0.0,
            ]
        })
        .collect();
    let mut sub: Vec<f64> = (0..n).map(|j| if j > 0 { e[j - 1] } else { 0.0 }).collect();
    let mut rhs = b.to_vec();
    for j in 0..n.saturating_sub(1) {
        // candidates: row j (diag at col j) and row j+1 (sub entry at col j)
        if sub[j + 1].abs() > rows[j][0].abs() {
            let next = rows[j + 1];
            let lower = [sub[j + 1], next[0], next[1]];
            rows[j + 1] = [rows[j][1], rows[j][2], 0.0];
            sub[j + 1] = rows[j][0];
            rows[j] = lower;
            rhs.swap(j, j + 1);
        }
        let piv = if rows[j][0] == 0.0 { tiny } else { rows[j][0] };
        rows[j][0] = piv;
        let m = sub[j + 1] / piv;
        rows[j + 1][0] -= m * rows[j][1];
        rows[j + 1][1] -= m * rows[j][2];
        rhs[j + 1] -= m * rhs[j];
        sub[j + 1] = 0.0;
    }
    if rows[n - 1][0] == 0.0 {
        rows[n - 1][0] = tiny;
    }
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let mut s = rhs[j];
        if j + 1 < n {
            s -= rows[j][1] * x[j + 1];
        }
        if j + 2 < n {
            s -= rows[j][2] * x[j + 2];
        }
        x[j] = s / rows[j][0];
    }
    x
}

fn normalize(v: &mut [f64]) {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
}

struct Chain {
    d: Vec<f64>,
    e: Vec<f64>,
    e2: Vec<f64>,
    lo: f64,
    hi: f64,
}

fn chain(h: &LatticeHamiltonian) -> Chain {
    let d = h.diag.clone();
    let e: Vec<f64> = h.off.iter().map(|o| -o.norm()).collect();
    let e2 = e.iter().map(|x| x * x).collect();
    let r = h.spectral_scale();
    Chain {
        d,
        e,
        e2,
        lo: -r - 1.0,
        hi: r + 1.0,
    }
}

fn tolerances(h: &LatticeHamiltonian) -> (f64, f64) {
    let scale = h.spectral_scale().max(1.0);
    (1e-10 * scale, 1e-9 * scale)
}

/// Lowest eigenpair. A near-degenerate ground state is returned with
/// `degenerate_flag` set rather than as an error.
pub fn ground_state(h: &LatticeHamiltonian) -> Result<SpectrumResult> {
    let (tol_eig, gap_tol) = tolerances(h);
    let n = h.len();
    let (e0, e1, psi_unit) = match h.boundary {
        Boundary::Dirichlet => {
            let c = chain(h);
            let e0 = bisect_eigenvalue(&c.d, &c.e2, 0, c.lo, c.hi);
            let e1 = if n > 1 {
                bisect_eigenvalue(&c.d, &c.e2, 1, c.lo, c.hi)
            } else {
                f64::INFINITY
            };
            let tiny = f64::EPSILON * h.spectral_scale();
            let mut x = vec![1.0; n];
            normalize(&mut x);
            for _ in 0..4 {
                x = shifted_solve(&c.d, &c.e, e0, &x, tiny);
                normalize(&mut x);
            }
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            let theta = h.chain_gauge();
            let psi: Vec<Complex64> = x
                .iter()
                .zip(&theta)
                .map(|(&r, &t)| Complex64::from_polar(r, t))
                .collect();
            (e0, e1, psi)
        }
        Boundary::Periodic => {
            if n > DENSE_LIMIT {
                return Err(Error::Unsupported(format!(
                    "periodic lattices are limited to {DENSE_LIMIT} cells, got {n}"
                )));
            }
            let eig = h.to_dense().symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let e0 = eig.eigenvalues[order[0]];
            let e1 = eig.eigenvalues[order[1]];
            let psi: Vec<Complex64> = eig.eigenvectors.column(order[0]).iter().cloned().collect();
            (e0, e1, psi)
        }
    };
    finish(h, e0, e1, psi_unit, tol_eig, gap_tol)
}

fn finish(
    h: &LatticeHamiltonian,
    e0_guess: f64,
    e1: f64,
    mut psi: Vec<Complex64>,
    tol_eig: f64,
    gap_tol: f64,
) -> Result<SpectrumResult> {
    let dx = h.grid.spacing()[0];
    let nrm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let s = 1.0 / nrm2.sqrt();
    psi.iter_mut().for_each(|z| *z *= s);
    let hp = h.apply(&psi);
    let rq: f64 = psi.iter().zip(&hp).map(|(a, b)| (a.conj() * b).re).sum();
    let e0 = if rq.is_finite() { rq } else { e0_guess };
    let residual = hp
        .iter()
        .zip(&psi)
        .map(|(a, b)| (a - b * e0).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if !(residual <= tol_eig) {
        return Err(Error::NonConvergence {
            residual,
            tolerance: tol_eig,
        });
    }
    let (imax, zmax) = psi
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, z)| if z.norm() > bv { (i, z.norm()) } else { (bi, bv) });
    let rot = Complex64::from_polar(1.0, -psi[imax].arg());
    let w = 1.0 / dx.sqrt();
    let values: Vec<Complex64> = psi
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let v = z * rot * w;
            if i == imax {
                Complex64::new(v.norm(), 0.0)
            } else {
                v
            }
        })
        .collect();
    let floor = 1e-12 * zmax * zmax * w * w;
    let node_cells = values.iter().filter(|z| z.norm_sqr() < floor).count();
    let gap = e1 - e0;
    Ok(SpectrumResult {
        e0,
        e1,
        gap,
        psi: ComplexField::new(h.grid, values)?,
        degenerate_flag: gap < gap_tol,
        residual,
        tol_eig,
        gap_tol,
        node_cells,
        boundary: h.boundary,
    })
}

/// `rho = |psi|^2` and `jp = Im(conj(psi) D psi)` with the centred difference
/// matching the lattice (zero exterior or wrap-around).
pub fn densities_from_state(s: &SpectrumResult) -> Result<DensityPair> {
    if s.degenerate_flag {
        return Err(Error::DegenerateGroundState {
            gap: s.gap,
            tolerance: s.gap_tol,
        });
    }
    let g = *s.psi.grid();
    let n = g.len();
    let h = g.spacing()[0];
    let p = s.psi.values();
    let zero = Complex64::new(0.0, 0.0);
    let at = |i: isize| -> Complex64 {
        if i >= 0 && (i as usize) < n {
            p[i as usize]
        } else if s.boundary == Boundary::Periodic {
            p[i.rem_euclid(n as isize) as usize]
        } else {
            zero
        }
    };
    let rho: Vec<f64> = p.iter().map(|z| z.norm_sqr()).collect();
    let jp: Vec<f64> = (0..n as isize)
        .map(|i| (p[i as usize].conj() * (at(i + 1) - at(i - 1))).im / (2.0 * h))
        .collect();
    let pair = DensityPair::new(ScalarField::new(g, rho)?, VectorField::new(g, jp)?)?;
    Ok(pair.with_provenance(Provenance::SolverAN))
}

/// Ground-state energy only.
pub fn e0_of(v: &ScalarField, a: &VectorField, boundary: Boundary) -> Result<f64> {
    let h = discretize(v, a, boundary)?;
    match boundary {
        Boundary::Dirichlet => {
            let c = chain(&h);
            Ok(bisect_eigenvalue(&c.d, &c.e2, 0, c.lo, c.hi))
        }
        Boundary::Periodic => Ok(ground_state(&h)?.e0),
    }
}

/// Tolerance `5 h^2 max(1, |e0|)` for comparing lattice energies with their
/// continuum counterparts.
pub fn energy_tolerance(h: f64, e0: f64) -> f64 {
    5.0 * h * h * e0.abs().max(1.0)
}

/// `e0(v, A) <= Q(rho, jp) + 2 integral jp.A + integral rho (v + A^2)` with
/// the one-particle `Q = J1 + J0`.
pub fn variational_audit(p: &DensityPair, pot: &Potentials, boundary: Boundary) -> Result<InequalityAudit> {
    variational_audit_with(p, pot, boundary, &Tolerances::default())
}

pub fn variational_audit_with(
    p: &DensityPair,
    pot: &Potentials,
    boundary: Boundary,
    tol: &Tolerances,
) -> Result<InequalityAudit> {
    let lhs = e0_of(&pot.v, &pot.a, boundary)?;
    let rhs = q_exact_n1_with(p, tol)? + pairing_energy(p, pot)?;
    let t = energy_tolerance(p.grid().max_spacing(), lhs);
    Ok(InequalityAudit::new("e0 <= Q + pairing", lhs, rhs, t))
}

/// Grid of a scenario: an explicit grid, or `cells` samples strictly inside
/// `interval` with the Dirichlet walls on its ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridInput {
    Interval { interval: [f64; 2], cells: usize },
    Spec(GridSpec),
}

impl GridInput {
    pub fn grid(&self) -> Result<GridSpec> {
        match self {
            GridInput::Interval { interval, cells } => GridSpec::dirichlet_line(*cells, interval[0], interval[1]),
            GridInput::Spec(g) => Ok(*g),
        }
    }
}

/// JSON scenario for the lattice solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: GridInput,
    pub boundary: Boundary,
    #[serde(default)]
    pub v: Vec<Term>,
    #[serde(default)]
    pub a: Vec<Term>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn potentials(&self) -> Result<Potentials> {
        let g = self.grid.grid()?;
        if g.dim() != 1 {
            return Err(Error::Config("scenarios are one-dimensional".into()));
        }
        let v = expand(&self.v, &g);
        let a = expand(&self.a, &g);
        Potentials::new(v, VectorField::new(g, a.into_values())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_solve_matches_dense() {
        let d = [2.0, -1.0, 3.5, 0.25, 4.0];
        let e = [1.0, -2.0, 0.5, 3.0];
        let b = [1.0, 2.0, -1.0, 0.5, 0.0];
        let x = shifted_solve(&d, &e, 0.3, &b, 1e-300);
        for i in 0..5 {
            let mut s = (d[i] - 0.3) * x[i];
            if i > 0 {
                s += e[i - 1] * x[i - 1];
            }
            if i + 1 < 5 {
                s += e[i] * x[i + 1];
            }
            assert!((s - b[i]).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // Discrete Laplacian with h = 1: eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 6;
        let d = vec![2.0; n];
        let e2 = vec![1.0; n - 1];
        for k in 0..n {
            let lam = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            let got = bisect_eigenvalue(&d, &e2, k, -1.0, 5.0);
            assert!((got - lam).abs() < 1e-14);
        }
    }
}
