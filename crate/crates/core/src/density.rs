//! Density pairs `(rho, jp)`, their N-representability checks and the
//! potential-dependent pairing energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, same_grid, GridSpec, PathTolerances, ScalarField, VectorField};
use crate::value::{Extended, InequalityAudit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    #[serde(rename = "validated_YN")]
    ValidatedYN,
    /// Ground-state densities of a lattice Hamiltonian. Only the solver sets this.
    #[serde(rename = "solver_AN")]
    SolverAN,
}

impl Provenance {
    pub fn is_validated(self) -> bool {
        !matches!(self, Provenance::Raw)
    }
}

/// Relative tolerances used by validation and everything downstream of it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// `|mass - N| <= mass_rel * N`.
    pub mass_rel: f64,
    /// `rho >= -neg_rel * max(rho)`.
    pub neg_rel: f64,
    /// Density floor `rho_floor_rel * max(rho)`.
    pub rho_floor_rel: f64,
    /// Current floor `j_floor_rel * max|jp|`.
    pub j_floor_rel: f64,
    /// Mass in the outermost cell layer, relative to total mass.
    pub boundary_mass_rel: f64,
    /// Curl max-norm allowed, relative to `max |jp/rho|`.
    pub curl_rel: f64,
    /// Path-order disagreement allowed, relative to `max |jp/rho|` times extents.
    pub path_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_rel: 1e-8,
            neg_rel: 1e-12,
            rho_floor_rel: 1e-12,
            j_floor_rel: 1e-12,
            boundary_mass_rel: 1e-10,
            curl_rel: 1e-6,
            path_rel: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn path(&self) -> PathTolerances {
        PathTolerances {
            curl_rel: self.curl_rel,
            path_rel: self.path_rel,
        }
    }

    pub fn check(&self) -> Result<()> {
        let all = [
            ("mass_rel", self.mass_rel),
            ("neg_rel", self.neg_rel),
            ("rho_floor_rel", self.rho_floor_rel),
            ("j_floor_rel", self.j_floor_rel),
            ("boundary_mass_rel", self.boundary_mass_rel),
            ("curl_rel", self.curl_rel),
            ("path_rel", self.path_rel),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityPair {
    pub rho: ScalarField,
    pub jp: VectorField,
    pub provenance: Provenance,
}

impl DensityPair {
    /// A raw pair; the two fields must share a grid.
    pub fn new(rho: ScalarField, jp: VectorField) -> Result<Self> {
        same_grid(rho.grid(), jp.grid())?;
        Ok(DensityPair {
            rho,
            jp,
            provenance: Provenance::Raw,
        })
    }

    /// Pair with zero current.
    pub fn static_density(rho: ScalarField) -> Self {
        let jp = VectorField::zeros(*rho.grid());
        DensityPair {
            rho,
            jp,
            provenance: Provenance::Raw,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho.grid()
    }

    pub fn mass(&self) -> f64 {
        grid::integrate(&self.rho)
    }

    /// Provenance reset to raw.
    pub fn into_raw(mut self) -> Self {
        self.provenance = Provenance::Raw;
        self
    }

    pub(crate) fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
}

/// External potentials `(v, A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potentials {
    pub v: ScalarField,
    pub a: VectorField,
}

impl Potentials {
    pub fn new(v: ScalarField, a: VectorField) -> Result<Self> {
        same_grid(v.grid(), a.grid())?;
        if !v.is_finite() || !a.is_finite() {
            return Err(Error::Config("potentials must be finite".into()));
        }
        Ok(Potentials { v, a })
    }

    pub fn scalar_only(v: ScalarField) -> Self {
        let a = VectorField::zeros(*v.grid());
        Potentials { v, a }
    }

    pub fn grid(&self) -> &GridSpec {
        self.v.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    #[serde(rename = "non-finite")]
    NonFinite,
    #[serde(rename = "negativity")]
    Negativity,
    #[serde(rename = "mass")]
    Mass,
    #[serde(rename = "boundary mass")]
    BoundaryMass,
    #[serde(rename = "J1 infinite")]
    J1Infinite,
    #[serde(rename = "jp not integrable")]
    JpNotIntegrable,
    #[serde(rename = "J0 infinite")]
    J0Infinite,
}

impl std::fmt::Display for Reason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("reason serializes");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_target: usize,
    pub mass: f64,
    pub j1_value: f64,
    pub j0_value: Extended,
    pub jp_l1_norm: f64,
    pub negativity_fraction: f64,
    pub boundary_mass: f64,
    /// Cells below the density floor; the floor rule is applied there.
    pub floor_cells: usize,
    pub verdict: bool,
    pub reasons: Vec<Reason>,
    pub tolerances: Tolerances,
}

/// Density and current floors of a pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Floors {
    pub rho: f64,
    pub j: f64,
}

pub fn floors(p: &DensityPair, tol: &Tolerances) -> Floors {
    Floors {
        rho: tol.rho_floor_rel * p.rho.max().max(0.0),
        j: tol.j_floor_rel * p.jp.max_norm(),
    }
}

/// `integral |jp|^2 / rho` under the floor rule: cells with `rho` below the
/// floor contribute 0 if `|jp|` is below its floor. Above the current floor
/// they contribute `|jp|^2 / rho` while `rho > 0`; where `rho <= 0` the
/// result is `Err(cell)`.
///
/// Sub-floor cells with positive density are kept because magnetic ground
/// states carry `jp = -rho A` with `|A|` growing towards the box edge, so
/// their tails exceed a current floor tied to the bulk while `J0` stays tiny.
pub(crate) fn j0_floor_rule(p: &DensityPair, tol: &Tolerances) -> std::result::Result<f64, usize> {
    let fl = floors(p, tol);
    let mut s = 0.0;
    for (i, &r) in p.rho.values().iter().enumerate() {
        let j = p.jp.at(i);
        let j2: f64 = j.iter().map(|c| c * c).sum();
        if r < fl.rho || r <= 0.0 {
            if j2.sqrt() <= fl.j {
                continue;
            }
            if r <= 0.0 {
                return Err(i);
            }
        }
        s += j2 / r;
    }
    Ok(s * p.grid().cell_volume())
}

/// `integral (grad sqrt(rho))^2` in nearest-neighbour form, negatives floored at 0.
pub(crate) fn j1_value(rho: &ScalarField) -> f64 {
    grid::dirichlet_energy(&rho.map(|r| r.max(0.0).sqrt()))
}

/// Checks the N-representability conditions on a finite grid. Failures are
/// verdicts, not errors.
pub fn validate_pair(p: &DensityPair, n: usize, tol: &Tolerances) -> ValidationReport {
    let g = p.grid();
    let dv = g.cell_volume();
    let mut reasons = Vec::new();

    let finite = p.rho.is_finite() && p.jp.is_finite();
    if !finite {
        reasons.push(Reason::NonFinite);
    }
    let rho_max = p.rho.max().max(0.0);
    let mass = grid::integrate(&p.rho);
    let neg_mass: f64 = p.rho.values().iter().map(|&r| (-r).max(0.0)).sum::<f64>() * dv;
    let abs_mass: f64 = p.rho.values().iter().map(|r| r.abs()).sum::<f64>() * dv;
    let negativity_fraction = if abs_mass > 0.0 { neg_mass / abs_mass } else { 0.0 };
    if p.rho.min() < -tol.neg_rel * rho_max {
        reasons.push(Reason::Negativity);
    }
    if !((mass - n as f64).abs() <= tol.mass_rel * n as f64) {
        reasons.push(Reason::Mass);
    }
    let edge: f64 = (0..g.len())
        .filter(|&i| g.is_boundary(i))
        .map(|i| p.rho.values()[i].abs())
        .sum::<f64>()
        * dv;
    let boundary_mass = if abs_mass > 0.0 { edge / abs_mass } else { 0.0 };
    if boundary_mass > tol.boundary_mass_rel {
        reasons.push(Reason::BoundaryMass);
    }
    let j1 = j1_value(&p.rho);
    if !j1.is_finite() {
        reasons.push(Reason::J1Infinite);
    }
    let jp_l1: f64 = p.jp.values().iter().map(|c| c.abs()).sum::<f64>() * dv;
    if !jp_l1.is_finite() {
        reasons.push(Reason::JpNotIntegrable);
    }
    let j0 = match j0_floor_rule(p, tol) {
        Ok(v) if v.is_finite() => Extended::Finite(v),
        _ => Extended::PlusInfinity,
    };
    if !j0.is_finite() {
        reasons.push(Reason::J0Infinite);
    }
    let floor = tol.rho_floor_rel * rho_max;
    let floor_cells = p.rho.values().iter().filter(|&&r| r < floor || r <= 0.0).count();

    ValidationReport {
        n_target: n,
        mass,
        j1_value: j1,
        j0_value: j0,
        jp_l1_norm: jp_l1,
        negativity_fraction,
        boundary_mass,
        floor_cells,
        verdict: reasons.is_empty(),
        reasons,
        tolerances: *tol,
    }
}

/// Validates and upgrades a raw pair; solver pairs keep their provenance.
pub fn validated(p: DensityPair, n: usize, tol: &Tolerances) -> Result<DensityPair> {
    let report = validate_pair(&p, n, tol);
    if !report.verdict {
        let reasons: Vec<String> = report.reasons.iter().map(|r| r.to_string()).collect();
        return Err(Error::NotValidated(reasons.join(", ")));
    }
    let prov = match p.provenance {
        Provenance::SolverAN => Provenance::SolverAN,
        _ => Provenance::ValidatedYN,
    };
    Ok(p.with_provenance(prov))
}

/// Particle number implied by the mass, for pairs that do not state it.
pub fn nearest_n(p: &DensityPair) -> usize {
    p.mass().round().max(0.0) as usize
}

/// Velocity field `jp / rho` on the cells above the density floor, and the
/// mask of those cells. Cells below the floor get velocity 0; a current above
/// its floor where `rho <= 0` is unsupported.
pub fn velocity(p: &DensityPair, tol: &Tolerances) -> Result<(VectorField, Vec<bool>)> {
    let fl = floors(p, tol);
    let d = p.grid().dim();
    let mut u = VectorField::zeros(*p.grid());
    let mut mask = vec![false; p.grid().len()];
    for (i, &r) in p.rho.values().iter().enumerate() {
        let j = p.jp.at(i);
        if r < fl.rho || r <= 0.0 {
            let jn = j.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r <= 0.0 && jn > fl.j {
                return Err(Error::UnsupportedCurrent { cell: i, current: jn });
            }
        } else {
            mask[i] = true;
            for k in 0..d {
                u.values_mut()[i * d + k] = j[k] / r;
            }
        }
    }
    Ok((u, mask))
}

/// `curl(jp / rho)` with the floor rule applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Vorticity {
    pub field: VectorField,
    /// Cells whose value is reported as 0: below the floor, or with a
    /// difference stencil reaching below it.
    pub flagged: Vec<bool>,
}

impl Vorticity {
    /// Max-norm over unflagged interior cells.
    pub fn max_interior(&self) -> f64 {
        let g = self.field.grid();
        let mask: Vec<bool> = self.flagged.iter().map(|f| !f).collect();
        grid::curl_check_cells(g, Some(&mask))
            .map(|i| self.field.norm_at(i))
            .fold(0.0, f64::max)
    }
}

pub fn vorticity(p: &DensityPair, tol: &Tolerances) -> Result<Vorticity> {
    let g = *p.grid();
    if g.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: g.dim(),
        });
    }
    let (u, mask) = velocity(p, tol)?;
    let mut field = grid::curl(&u)?;
    let strides = g.strides();
    let shape = g.shape3();
    let mut flagged = vec![false; g.len()];
    for (idx, fl) in flagged.iter_mut().enumerate() {
        let i = g.unravel(idx);
        let stencil_ok = mask[idx]
            && (0..3).all(|a| {
                (i[a] == 0 || mask[idx - strides[a]])
                    && (i[a] + 1 == shape[a] || mask[idx + strides[a]])
                    && (i[a] != 0 || mask[idx + 2 * strides[a]])
                    && (i[a] + 1 != shape[a] || mask[idx - 2 * strides[a]])
            });
        if !stencil_ok {
            *fl = true;
            field.values_mut()[idx * 3..idx * 3 + 3].fill(0.0);
        }
    }
    Ok(Vorticity { field, flagged })
}

fn check_weights(weights: &[f64], count: usize) -> Result<()> {
    if weights.len() != count || count == 0 {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {count} pairs",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidWeights("weights must be nonnegative".into()));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// `sum_k w_k p_k`, evaluated as `p_0 + sum_{k>0} w_k (p_k - p_0)` so that
/// combining copies of one pair returns it bit for bit. If every input is
/// validated the result is re-validated and upgraded when it passes.
pub fn convex_combine(pairs: &[DensityPair], weights: &[f64], tol: &Tolerances) -> Result<DensityPair> {
    check_weights(weights, pairs.len())?;
    let base = &pairs[0];
    for p in &pairs[1..] {
        same_grid(base.grid(), p.grid())?;
    }
    let mut rho = base.rho.values().to_vec();
    let mut jp = base.jp.values().to_vec();
    for (p, &w) in pairs.iter().zip(weights).skip(1) {
        for (r, (&a, &b)) in rho.iter_mut().zip(p.rho.values().iter().zip(base.rho.values())) {
            *r += w * (a - b);
        }
        for (j, (&a, &b)) in jp.iter_mut().zip(p.jp.values().iter().zip(base.jp.values())) {
            *j += w * (a - b);
        }
    }
    let out = DensityPair::new(
        ScalarField::new(*base.grid(), rho)?,
        VectorField::new(*base.grid(), jp)?,
    )?;
    if pairs.iter().all(|p| p.provenance.is_validated()) {
        let n = nearest_n(&out);
        if let Ok(v) = validated(out.clone(), n, tol) {
            return Ok(v.with_provenance(Provenance::ValidatedYN));
        }
    }
    Ok(out)
}

/// `2 integral jp . A + integral rho (v + |A|^2)`.
pub fn pairing_energy(p: &DensityPair, pot: &Potentials) -> Result<f64> {
    same_grid(p.grid(), pot.grid())?;
    let d = p.grid().dim();
    let mut s = 0.0;
    for i in 0..p.grid().len() {
        let a = pot.a.at(i);
        let j = p.jp.at(i);
        let ja: f64 = (0..d).map(|k| j[k] * a[k]).sum();
        let a2: f64 = a.iter().map(|c| c * c).sum();
        s += 2.0 * ja + p.rho.values()[i] * (pot.v.values()[i] + a2);
    }
    Ok(s * p.grid().cell_volume())
}

/// Per component `k`: `integral |jp_k A_k| <= J0^(1/2) (integral rho |A|^2)^(1/2)`.
pub fn schwarz_audit(p: &DensityPair, pot: &Potentials, tol: &Tolerances) -> Result<Vec<InequalityAudit>> {
    same_grid(p.grid(), pot.grid())?;
    let j0 = j0_floor_rule(p, tol)
        .map_err(|cell| Error::UnsupportedCurrent {
            cell,
            current: p.jp.norm_at(cell),
        })?;
    let dv = p.grid().cell_volume();
    let d = p.grid().dim();
    let rho_a2: f64 = (0..p.grid().len())
        .map(|i| {
            let a = pot.a.at(i);
            p.rho.values()[i].max(0.0) * a.iter().map(|c| c * c).sum::<f64>()
        })
        .sum::<f64>()
        * dv;
    let rhs = j0.sqrt() * rho_a2.sqrt();
    Ok((0..d)
        .map(|k| {
            let lhs: f64 = (0..p.grid().len())
                .map(|i| (p.jp.at(i)[k] * pot.a.at(i)[k]).abs())
                .sum::<f64>()
                * dv;
            InequalityAudit::roundoff(format!("schwarz component {}", k + 1), lhs, rhs)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_pair() -> DensityPair {
        let g = GridSpec::cube(24, -6.0, 6.0).unwrap();
        let rho = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        let m = grid::integrate(&rho);
        DensityPair::static_density(rho.scaled(1.0 / m))
    }

    #[test]
    fn gaussian_pair_validates() {
        let p = gauss_pair();
        let r = validate_pair(&p, 1, &Tolerances::default());
        assert!(r.verdict, "{:?}", r.reasons);
        assert_eq!(r.j0_value, Extended::Finite(0.0));
        let v = validated(p, 1, &Tolerances::default()).unwrap();
        assert_eq!(v.provenance, Provenance::ValidatedYN);
        let again = validate_pair(&v, 1, &Tolerances::default());
        assert_eq!(again, r);
    }

    #[test]
    fn negative_lobe_rejected() {
        let p = gauss_pair();
        let g = *p.grid();
        let lobe = ScalarField::from_fn(g, |x| {
            let d = (x[0] - 3.0).powi(2) + x[1] * x[1] + x[2] * x[2];
            (-4.0 * d).exp()
        });
        let lm = grid::integrate(&lobe);
        let rho = p
            .rho
            .zip_map(&lobe, |a, b| 1.01 * a - 0.01 * b / lm)
            .unwrap();
        let r = validate_pair(&DensityPair::static_density(rho), 1, &Tolerances::default());
        assert!(!r.verdict);
        assert!(r.reasons.contains(&Reason::Negativity));
        assert!(r.negativity_fraction > 0.0);
    }

    #[test]
    fn current_without_density_rejected() {
        let g = GridSpec::cube(12, -1.0, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x| {
            if x.iter().all(|c| c.abs() < 0.5) {
                1.0
            } else {
                0.0
            }
        });
        let m = grid::integrate(&rho);
        let jp = VectorField::from_fn(g, |_| [1.0, 0.0, 0.0]);
        let p = DensityPair::new(rho.scaled(1.0 / m), jp).unwrap();
        let r = validate_pair(&p, 1, &Tolerances::default());
        assert!(r.reasons.contains(&Reason::J0Infinite));
        assert_eq!(r.j0_value, Extended::PlusInfinity);
    }

    #[test]
    fn weights_checked() {
        let p = gauss_pair();
        let tol = Tolerances::default();
        assert!(matches!(
            convex_combine(&[p.clone(), p.clone()], &[0.7, 0.4], &tol),
            Err(Error::InvalidWeights(_))
        ));
        let one = convex_combine(std::slice::from_ref(&p), &[1.0], &tol).unwrap();
        assert_eq!(one.rho, p.rho);
        assert_eq!(one.jp, p.jp);
    }

    #[test]
    fn pairing_energy_constant_vector_potential() {
        let p = gauss_pair();
        let g = *p.grid();
        let pot = Potentials::new(
            ScalarField::zeros(g),
            VectorField::from_fn(g, |_| [0.5, -1.0, 2.0]),
        )
        .unwrap();
        let e = pairing_energy(&p, &pot).unwrap();
        assert!((e - 5.25 * p.mass()).abs() < 1e-12);
    }
}
