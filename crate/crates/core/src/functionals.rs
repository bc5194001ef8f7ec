//! Kinetic-type functionals, the Hartree energy, and the inequality chains
//! that bound them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{self, validate_pair, DensityPair, Tolerances};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, ScalarField};
use crate::value::{Extended, InequalityAudit};

use std::f64::consts::PI;

/// Hardy-Littlewood-Sobolev constant for the Coulomb kernel, `2 (4/sqrt(pi))^(2/3) / 3`.
pub fn hls_constant() -> f64 {
    2.0 * (4.0 / PI.sqrt()).powf(2.0 / 3.0) / 3.0
}

/// Sobolev constant in `||rho||_3^(1/2) <= C2 J1^(1/2)`, `2 / (sqrt(3) 2^(1/3) pi^(2/3))`.
pub fn sobolev_constant() -> f64 {
    2.0 / (3f64.sqrt() * 2f64.powf(1.0 / 3.0) * PI.powf(2.0 / 3.0))
}

/// `a = 4 / (3 sqrt(3) pi)`.
pub fn const_a() -> f64 {
    4.0 / (3.0 * 3f64.sqrt() * PI)
}

/// `b = 1 - (4 pi)^2 / 12`.
pub fn const_b() -> f64 {
    1.0 - (4.0 * PI).powi(2) / 12.0
}

/// `c = (4 pi)^2 / 12 + a`.
pub fn const_c() -> f64 {
    (4.0 * PI).powi(2) / 12.0 + const_a()
}

/// Coefficient of `J1` in the determinant kinetic bound, `1 + (4 pi)^2 (N^2 - 1) / 12`.
pub fn det_bound_coefficient(n: usize) -> f64 {
    let n = n as f64;
    1.0 + (4.0 * PI).powi(2) * (n * n - 1.0) / 12.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalName {
    J0,
    J1,
    Jlambda,
    Hartree,
    Pairing,
    Qn1,
    Texact,
    Exc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub name: FunctionalName,
    pub value: Extended,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub tolerance: f64,
}

impl FunctionalValue {
    pub fn new(name: FunctionalName, value: Extended) -> Self {
        let tolerance = match value {
            Extended::Finite(v) => 1e-10 * v.abs().max(1.0),
            Extended::PlusInfinity => 0.0,
        };
        FunctionalValue {
            name,
            value,
            lambda: None,
            tolerance,
        }
    }
}

/// `integral |jp|^2 / rho` under the floor rule.
///
/// Raw pairs are validated first against `N = round(mass)`; a failed check
/// gives `+inf`.
pub fn j0(p: &DensityPair) -> Extended {
    j0_with(p, &Tolerances::default())
}

pub fn j0_with(p: &DensityPair, tol: &Tolerances) -> Extended {
    if !p.provenance.is_validated() {
        let report = validate_pair(p, density::nearest_n(p), tol);
        if !report.verdict {
            return Extended::PlusInfinity;
        }
        return report.j0_value;
    }
    match density::j0_floor_rule(p, tol) {
        Ok(v) => Extended::from_f64(v),
        Err(_) => Extended::PlusInfinity,
    }
}

/// von Weizsaecker term `integral (grad sqrt(rho))^2`.
///
/// Evaluated in nearest-neighbour form: squared differences of `sqrt(rho)`
/// across every cell face, including the faces to the zero exterior.
pub fn j1(rho: &ScalarField) -> f64 {
    density::j1_value(rho)
}

/// `lambda J1 + (1 - lambda) J0`, or `+inf` for pairs that fail validation.
pub fn j_lambda(p: &DensityPair, lambda: f64) -> Result<FunctionalValue> {
    j_lambda_with(p, lambda, &Tolerances::default())
}

pub fn j_lambda_with(p: &DensityPair, lambda: f64, tol: &Tolerances) -> Result<FunctionalValue> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let value = match j0_with(p, tol) {
        Extended::Finite(j0v) => {
            let v = if lambda == 1.0 {
                j1(&p.rho)
            } else if lambda == 0.0 {
                j0v
            } else {
                lambda * j1(&p.rho) + (1.0 - lambda) * j0v
            };
            Extended::Finite(v)
        }
        Extended::PlusInfinity => Extended::PlusInfinity,
    };
    let mut fv = FunctionalValue::new(FunctionalName::Jlambda, value);
    fv.lambda = Some(lambda);
    Ok(fv)
}

/// Softening length of the Coulomb kernel: half the cell edge (geometric mean
/// over axes on anisotropic grids).
pub fn softening(rho: &ScalarField) -> f64 {
    let g = rho.grid();
    0.5 * g.cell_volume().powf(1.0 / g.dim() as f64)
}

/// `sum_{x,y} rho(x) rho(y) W(x1,y1) / sqrt(|x-y|^2 + eta^2) dV^2`.
///
/// `weight` is indexed `[i1 * n1 + j1]` by the first-axis cell indices of the
/// two points; `None` means all ones. The outer sum runs in parallel but is
/// reduced in a fixed order, so the result does not depend on thread count.
pub(crate) fn coulomb_sum(rho: &ScalarField, weight: Option<&[f64]>) -> f64 {
    let g = *rho.grid();
    let [n1, n2, n3] = g.shape3();
    let h = [
        g.spacing()[0],
        if g.dim() == 3 { g.spacing()[1] } else { 0.0 },
        if g.dim() == 3 { g.spacing()[2] } else { 0.0 },
    ];
    let eta2 = softening(rho).powi(2);
    // Kernel rows over the last axis, mirrored so that an offset `k' - k` is a
    // contiguous index `k' - k + n3 - 1`.
    let row_len = 2 * n3 - 1;
    let mut table = vec![0.0; n1 * n2 * row_len];
    for a in 0..n1 {
        for b in 0..n2 {
            let base = (a * n2 + b) * row_len;
            let r2ab = (a as f64 * h[0]).powi(2) + (b as f64 * h[1]).powi(2);
            for c in 0..row_len {
                let dc = c as f64 - (n3 as f64 - 1.0);
                table[base + c] = 1.0 / (r2ab + (dc * h[2]).powi(2) + eta2).sqrt();
            }
        }
    }
    let vals = rho.values();
    let partial: Vec<f64> = (0..vals.len())
        .into_par_iter()
        .map(|x| {
            let rx = vals[x];
            if rx == 0.0 {
                return 0.0;
            }
            let [i, j, k] = g.unravel(x);
            let mut acc = 0.0;
            for ip in 0..n1 {
                let w = weight.map_or(1.0, |w| w[i * n1 + ip]);
                let mut slab = 0.0;
                for jp in 0..n2 {
                    let krow = &table[(i.abs_diff(ip) * n2 + j.abs_diff(jp)) * row_len..];
                    let start = n3 - 1 - k;
                    let ry = &vals[(ip * n2 + jp) * n3..(ip * n2 + jp + 1) * n3];
                    let mut s = 0.0;
                    for (r, kv) in ry.iter().zip(&krow[start..start + n3]) {
                        s += r * kv;
                    }
                    slab += s;
                }
                acc += w * slab;
            }
            rx * acc
        })
        .collect();
    let dv = g.cell_volume();
    partial.iter().sum::<f64>() * dv * dv
}

/// `(1/2) integral integral rho(x) rho(y) / |x - y|` with the softened kernel
/// `1 / sqrt(|x-y|^2 + eta^2)`.
pub fn hartree(rho: &ScalarField) -> f64 {
    0.5 * coulomb_sum(rho, None)
}

/// `(integral |rho|^(6/5))^(5/3)`.
fn norm_65_sq(rho: &ScalarField) -> f64 {
    lp_norm(rho, 1.2).powi(2)
}

/// `hartree(rho) <= C1 ||rho||_{6/5}^2`.
pub fn hls_audit(rho: &ScalarField) -> InequalityAudit {
    hls_audit_with(rho, hartree(rho))
}

fn hls_audit_with(rho: &ScalarField, hartree_value: f64) -> InequalityAudit {
    InequalityAudit::roundoff("hartree <= C1 |rho|_{6/5}^2", hartree_value, hls_constant() * norm_65_sq(rho))
}

/// Every link of
/// `hartree <= C1 |rho|_{6/5}^2 <= C1 N^(3/2) |rho|_3^(1/2) <= C1 C2 N^(3/2) J1^(1/2) <= a (N + N^2 J1)`.
pub fn sobolev_chain_audit(rho: &ScalarField, n: usize) -> Vec<InequalityAudit> {
    let nf = n as f64;
    let c1 = hls_constant();
    let c2 = sobolev_constant();
    let eh = hartree(rho);
    let l65 = c1 * norm_65_sq(rho);
    let l3 = c1 * nf.powf(1.5) * lp_norm(rho, 3.0).sqrt();
    let jw = j1(rho);
    let sob = c1 * c2 * nf.powf(1.5) * jw.sqrt();
    let end = const_a() * (nf + nf * nf * jw);
    vec![
        hls_audit_with(rho, eh),
        InequalityAudit::roundoff("C1 |rho|_{6/5}^2 <= C1 N^(3/2) |rho|_3^(1/2)", l65, l3),
        InequalityAudit::roundoff("C1 N^(3/2) |rho|_3^(1/2) <= C1 C2 N^(3/2) J1^(1/2)", l3, sob),
        InequalityAudit::roundoff("C1 C2 N^(3/2) J1^(1/2) <= a (N + N^2 J1)", sob, end),
    ]
}

fn validated_or_err(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<f64> {
    let r = validate_pair(p, n, tol);
    if !r.verdict {
        let reasons: Vec<String> = r.reasons.iter().map(|x| x.to_string()).collect();
        return Err(Error::NotValidated(reasons.join(", ")));
    }
    Ok(r.j0_value.finite().expect("validated pair has finite J0"))
}

/// Fails with `CurlTooLarge` unless `jp / rho` integrates to a potential.
pub fn require_curl_free(p: &DensityPair, tol: &Tolerances) -> Result<()> {
    crate::det::phase_s_with(p, tol).map(|_| ())
}

/// `(1 + (4 pi)^2 (N^2 - 1) / 12) J1 + J0 + hartree` for a curl-free pair.
pub fn q_upper_bound_curlfree(p: &DensityPair, n: usize) -> Result<f64> {
    q_upper_bound_curlfree_with(p, n, &Tolerances::default())
}

pub fn q_upper_bound_curlfree_with(p: &DensityPair, n: usize, tol: &Tolerances) -> Result<f64> {
    let j0v = validated_or_err(p, n, tol)?;
    require_curl_free(p, tol)?;
    Ok(det_bound_coefficient(n) * j1(&p.rho) + j0v + hartree(&p.rho))
}

/// Right-hand side `a N + (b + c N^2) J1 + J0`.
pub fn j_lambda_bound_rhs(n: usize, j1v: f64, j0v: f64) -> f64 {
    let nf = n as f64;
    const_a() * nf + (const_b() + const_c() * nf * nf) * j1v + j0v
}

/// Audits `J_lambda <= a N + (b + c N^2) J1 + J0`, the split of that bound into
/// the determinant kinetic bound plus the Coulomb bound, and for `N = 1` the
/// chain `J_lambda <= Q <= RHS` with `Q = J1 + J0`.
pub fn j_lambda_bound_audit(p: &DensityPair, n: usize, lambda: f64) -> Result<Vec<InequalityAudit>> {
    j_lambda_bound_audit_with(p, n, lambda, &Tolerances::default())
}

pub fn j_lambda_bound_audit_with(
    p: &DensityPair,
    n: usize,
    lambda: f64,
    tol: &Tolerances,
) -> Result<Vec<InequalityAudit>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let j0v = validated_or_err(p, n, tol)?;
    require_curl_free(p, tol)?;
    let j1v = j1(&p.rho);
    let nf = n as f64;
    let jl = lambda * j1v + (1.0 - lambda) * j0v;
    let rhs = j_lambda_bound_rhs(n, j1v, j0v);
    let kin = det_bound_coefficient(n) * j1v + j0v;
    let coul = const_a() * (nf + nf * nf * j1v);
    let mut out = vec![
        InequalityAudit::roundoff("J_lambda <= aN + (b + cN^2) J1 + J0", jl, rhs),
        InequalityAudit::roundoff("kinetic bound + a(N + N^2 J1) <= aN + (b + cN^2) J1 + J0", kin + coul, rhs),
    ];
    if n == 1 {
        let q = j1v + j0v;
        out.push(InequalityAudit::roundoff("J_lambda <= Q", jl, q));
        out.push(InequalityAudit::roundoff("Q <= aN + (b + cN^2) J1 + J0", q, rhs));
    }
    Ok(out)
}
