//! Uniform grids, cell-sampled fields and the finite-difference calculus on them.
//!
//! Samples sit at cell centers `origin + (i + 1/2) * spacing`. Every integral is
//! the midpoint Riemann sum `sum(values) * cell_volume`, and the layout is
//! row-major with the first axis slowest.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a uniform 1D or 3D grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    dim: usize,
    shape: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.shape.len() != r.dim {
            return Err(Error::InvalidGrid(format!(
                "dim {} but {} shape entries",
                r.dim,
                r.shape.len()
            )));
        }
        GridSpec::new(&r.shape, &r.spacing, &r.origin)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        GridRepr {
            dim: g.dim,
            shape: g.shape[..g.dim].to_vec(),
            spacing: g.spacing[..g.dim].to_vec(),
            origin: g.origin[..g.dim].to_vec(),
        }
    }
}

impl GridSpec {
    pub fn new(shape: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let dim = shape.len();
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 3, got {dim}")));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(
                "shape, spacing and origin must have one entry per axis".into(),
            ));
        }
        let mut g = GridSpec {
            dim,
            shape: [1; 3],
            spacing: [1.0; 3],
            origin: [0.0; 3],
        };
        for a in 0..dim {
            if shape[a] < 2 {
                return Err(Error::InvalidGrid(format!("axis {a} has fewer than 2 cells")));
            }
            if !(spacing[a] > 0.0 && spacing[a].is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {a} spacing must be positive")));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidGrid(format!("axis {a} origin is not finite")));
            }
            g.shape[a] = shape[a];
            g.spacing[a] = spacing[a];
            g.origin[a] = origin[a];
        }
        Ok(g)
    }

    /// `n` cells covering `[lo, hi]`.
    pub fn line(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(&[n], &[(hi - lo) / n as f64], &[lo])
    }

    /// `n` samples strictly inside `[lo, hi]` such that the zero ghost values of a
    /// truncated lattice operator sit exactly on the walls `lo` and `hi`.
    pub fn dirichlet_line(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let h = (hi - lo) / (n + 1) as f64;
        Self::new(&[n], &[h], &[lo + 0.5 * h])
    }

    /// `n^3` cells covering the cube `[lo, hi]^3`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let h = (hi - lo) / n as f64;
        Self::new(&[n; 3], &[h; 3], &[lo; 3])
    }

    /// Box `[lo_a, hi_a]` per axis with `shape[a]` cells.
    pub fn boxed(shape: [usize; 3], lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        let spacing = [
            (hi[0] - lo[0]) / shape[0] as f64,
            (hi[1] - lo[1]) / shape[1] as f64,
            (hi[2] - lo[2]) / shape[2] as f64,
        ];
        Self::new(&shape, &spacing, &lo)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    /// Padded shape; unused axes have length 1.
    pub(crate) fn shape3(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(0.0, f64::max)
    }

    /// Physical length covered by `axis`.
    pub fn extent(&self, axis: usize) -> f64 {
        self.shape[axis] as f64 * self.spacing[axis]
    }

    pub(crate) fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.shape[1] + i[1]) * self.shape[2] + i[2]
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i2 = idx % self.shape[2];
        let r = idx / self.shape[2];
        [r / self.shape[1], r % self.shape[1], i2]
    }

    /// Coordinate of cell `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.spacing[axis]
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.shape[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Cell-center position; unused axes report 0.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let i = self.unravel(idx);
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.coord(a, i[a]);
        }
        x
    }

    /// One-dimensional grid along the first axis.
    pub fn axis_grid(&self, axis: usize) -> GridSpec {
        GridSpec::new(
            &[self.shape[axis]],
            &[self.spacing[axis]],
            &[self.origin[axis]],
        )
        .expect("axis of a valid grid is valid")
    }

    /// Same cells with every spacing multiplied by `factor` and the origin scaled alike.
    pub fn scaled(&self, factor: f64) -> Result<GridSpec> {
        let spacing: Vec<f64> = self.spacing().iter().map(|h| h * factor).collect();
        let origin: Vec<f64> = self.origin().iter().map(|o| o * factor).collect();
        GridSpec::new(self.shape(), &spacing, &origin)
    }

    /// Whether cell `idx` touches the outer faces of the box.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let i = self.unravel(idx);
        (0..self.dim).any(|a| i[a] == 0 || i[a] + 1 == self.shape[a])
    }

    fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }

    fn require_min_cells(&self, min: usize) -> Result<()> {
        for a in 0..self.dim {
            if self.shape[a] < min {
                return Err(Error::ShapeTooSmall {
                    axis: a,
                    len: self.shape[a],
                    min,
                });
            }
        }
        Ok(())
    }
}

/// Real function sampled at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        same_grid(&self.grid, &other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `dim` real components per cell, stored cell-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * grid.dim();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        VectorField {
            values: vec![0.0; grid.len() * grid.dim()],
            grid,
        }
    }

    /// Only the first `dim` entries of the closure's result are kept.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.len() * d);
        for i in 0..grid.len() {
            let u = f(grid.center(i));
            values.extend_from_slice(&u[..d]);
        }
        VectorField { grid, values }
    }

    pub fn from_components(components: &[ScalarField]) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| Error::InvalidGrid("no components".into()))?
            .grid();
        if components.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: components.len(),
            });
        }
        for c in components {
            same_grid(&grid, c.grid())?;
        }
        let d = grid.dim();
        let mut values = vec![0.0; grid.len() * d];
        for (k, c) in components.iter().enumerate() {
            for (i, &v) in c.values().iter().enumerate() {
                values[i * d + k] = v;
            }
        }
        Ok(VectorField { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, cell: usize) -> &[f64] {
        let d = self.dim();
        &self.values[cell * d..(cell + 1) * d]
    }

    pub fn component(&self, k: usize) -> ScalarField {
        let d = self.dim();
        ScalarField {
            grid: self.grid,
            values: self.values.iter().skip(k).step_by(d).cloned().collect(),
        }
    }

    pub fn norm_at(&self, cell: usize) -> f64 {
        self.at(cell).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0, |m, i| m.max(self.norm_at(i)))
    }

    pub fn scaled(&self, c: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Complex function sampled at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Format("complex field has non-finite values".into()));
        }
        Ok(ComplexField { grid, values })
    }

    /// `amplitude * exp(i * phase)` cell by cell.
    pub fn from_polar(amplitude: &ScalarField, phase: &ScalarField) -> Result<Self> {
        same_grid(amplitude.grid(), phase.grid())?;
        let values = amplitude
            .values()
            .iter()
            .zip(phase.values())
            .map(|(&r, &t)| Complex64::from_polar(r, t))
            .collect();
        ComplexField::new(amplitude.grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn re(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.re).collect(),
        }
    }

    pub fn im(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn norm_sqr(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

pub(crate) fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Midpoint rule: sum of values times cell volume.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}

/// `(integral of |f|^p)^(1/p)` by the midpoint rule.
pub fn lp_norm(f: &ScalarField, p: f64) -> f64 {
    let s: f64 = f.values.iter().map(|v| v.abs().powf(p)).sum();
    (s * f.grid.cell_volume()).powf(1.0 / p)
}

/// First derivative along one axis: central differences inside, second-order
/// one-sided stencils on the two end cells. Needs at least 3 cells.
fn diff_axis(grid: &GridSpec, values: &[f64], axis: usize, out: &mut [f64], out_stride: usize) {
    let shape = grid.shape3();
    let st = grid.strides()[axis];
    let n = shape[axis];
    let h = grid.spacing[axis];
    let inv2h = 0.5 / h;
    for idx in 0..values.len() {
        let i = grid.unravel(idx)[axis];
        let d = if i == 0 {
            (-3.0 * values[idx] + 4.0 * values[idx + st] - values[idx + 2 * st]) * inv2h
        } else if i + 1 == n {
            (3.0 * values[idx] - 4.0 * values[idx - st] + values[idx - 2 * st]) * inv2h
        } else {
            (values[idx + st] - values[idx - st]) * inv2h
        };
        out[idx * out_stride] = d;
    }
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    f.grid.require_min_cells(3)?;
    let d = f.grid.dim();
    let mut out = vec![0.0; f.values.len() * d];
    for axis in 0..d {
        diff_axis(&f.grid, &f.values, axis, &mut out[axis..], d);
    }
    VectorField::new(f.grid, out)
}

/// Derivative of `f` along `axis` as a scalar field.
pub fn partial(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    f.grid.require_min_cells(3)?;
    if axis >= f.grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: axis + 1,
            found: f.grid.dim(),
        });
    }
    let mut out = vec![0.0; f.values.len()];
    diff_axis(&f.grid, &f.values, axis, &mut out, 1);
    ScalarField::new(f.grid, out)
}

pub fn curl(u: &VectorField) -> Result<VectorField> {
    u.grid.require_dim(3)?;
    u.grid.require_min_cells(3)?;
    let c: Vec<ScalarField> = (0..3).map(|k| u.component(k)).collect();
    let d = |k: usize, axis: usize| partial(&c[k], axis);
    let cx = d(2, 1)?.zip_map(&d(1, 2)?, |a, b| a - b)?;
    let cy = d(0, 2)?.zip_map(&d(2, 0)?, |a, b| a - b)?;
    let cz = d(1, 0)?.zip_map(&d(0, 1)?, |a, b| a - b)?;
    VectorField::from_components(&[cx, cy, cz])
}

/// Compact three-point Laplacian with zero values outside the box.
///
/// This is minus the variational derivative (up to the factor 2) of
/// [`dirichlet_energy`], so `<f, -laplacian(f)> = dirichlet_energy(f)` exactly.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let shape = g.shape3();
    let strides = g.strides();
    let mut out = vec![0.0; f.values.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = g.unravel(idx);
        let mut acc = 0.0;
        for a in 0..g.dim() {
            let st = strides[a];
            let left = if i[a] > 0 { f.values[idx - st] } else { 0.0 };
            let right = if i[a] + 1 < shape[a] { f.values[idx + st] } else { 0.0 };
            let h = g.spacing[a];
            acc += (left - 2.0 * f.values[idx] + right) / (h * h);
        }
        *o = acc;
    }
    ScalarField {
        grid: g,
        values: out,
    }
}

/// Nearest-neighbour Dirichlet form `sum_links ((f_{i+1} - f_i) / h)^2 * dV`,
/// including the links to the zero exterior on every face.
pub fn dirichlet_energy(f: &ScalarField) -> f64 {
    let g = f.grid;
    let shape = g.shape3();
    let strides = g.strides();
    let mut total = 0.0;
    for a in 0..g.dim() {
        let h2 = g.spacing[a] * g.spacing[a];
        let st = strides[a];
        let mut s = 0.0;
        for idx in 0..f.values.len() {
            let i = g.unravel(idx)[a];
            let v = f.values[idx];
            if i == 0 {
                s += v * v;
            }
            let next = if i + 1 < shape[a] { f.values[idx + st] } else { 0.0 };
            let d = next - v;
            s += d * d;
        }
        total += s / h2;
    }
    total * g.cell_volume()
}

/// Integral over the transverse axes: a 1D field along the first axis.
/// A 1D field is returned unchanged.
pub fn marginal_x1(f: &ScalarField) -> Result<ScalarField> {
    let g = f.grid;
    if g.dim() == 1 {
        return Ok(f.clone());
    }
    g.require_dim(3)?;
    let shape = g.shape3();
    let w = g.spacing[1] * g.spacing[2];
    let slab = shape[1] * shape[2];
    let values = f
        .values
        .chunks(slab)
        .map(|c| c.iter().sum::<f64>() * w)
        .collect();
    ScalarField::new(g.axis_grid(0), values)
}

/// Relative tolerances for [`line_integrate_masked`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathTolerances {
    /// Curl max-norm allowed, relative to `max |u|`.
    pub curl_rel: f64,
    /// Allowed disagreement between path orders, relative to `max |u|` times the
    /// summed box extents.
    pub path_rel: f64,
}

impl Default for PathTolerances {
    fn default() -> Self {
        PathTolerances {
            curl_rel: 1e-6,
            path_rel: 1e-6,
        }
    }
}

/// Potential `S` of a curl-free field with `S(reference) = 0`.
///
/// Trapezoidal integration along axis-ordered paths (first axis, then second,
/// then third), cross-checked against the reverse axis order.
pub fn line_integrate(u: &VectorField, reference: [usize; 3]) -> Result<ScalarField> {
    line_integrate_masked(u, reference, None, &PathTolerances::default())
}

/// [`line_integrate`] restricted to the cells flagged in `mask`.
///
/// Paths only step between flagged cells. Sweeps along the axes in order are
/// repeated until the connected component of the reference is covered; further
/// components are seeded at their lowest-index cell with `S = 0`. Unflagged
/// cells get `S = 0`. Without a mask this is exactly the axis-ordered path.
pub fn line_integrate_masked(
    u: &VectorField,
    reference: [usize; 3],
    mask: Option<&[bool]>,
    tol: &PathTolerances,
) -> Result<ScalarField> {
    let g = u.grid;
    let ref_idx = g.index(reference);
    if ref_idx >= g.len() || (0..g.dim()).any(|a| reference[a] >= g.shape[a]) {
        return Err(Error::Config(format!("reference cell {reference:?} outside grid")));
    }
    if let Some(m) = mask {
        if m.len() != g.len() {
            return Err(Error::LengthMismatch {
                expected: g.len(),
                found: m.len(),
            });
        }
        if !m[ref_idx] {
            return Err(Error::Config("reference cell is outside the mask".into()));
        }
    }
    let inside = |i: usize| mask.map_or(true, |m| m[i]);
    let umax = (0..g.len())
        .filter(|&i| inside(i))
        .fold(0.0, |m: f64, i| m.max(u.norm_at(i)));

    if g.dim() == 3 {
        let c = curl(u)?;
        let tolerance = tol.curl_rel * umax;
        let max_curl = curl_check_cells(&g, mask)
            .map(|i| c.norm_at(i))
            .fold(0.0, f64::max);
        if max_curl > tolerance {
            return Err(Error::CurlTooLarge { max_curl, tolerance });
        }
    }

    let order: Vec<usize> = (0..g.dim()).collect();
    let reversed: Vec<usize> = order.iter().rev().cloned().collect();
    let fwd = sweep_integrate(u, ref_idx, &inside, &order);
    if g.dim() > 1 {
        let rev = sweep_integrate(u, ref_idx, &inside, &reversed);
        let extent: f64 = (0..g.dim()).map(|a| g.extent(a)).sum();
        let tolerance = tol.path_rel * umax * extent;
        let max_diff = (0..g.len())
            .filter(|&i| inside(i))
            .fold(0.0, |m: f64, i| m.max((fwd[i] - rev[i]).abs()));
        if max_diff > tolerance {
            return Err(Error::PathMismatch { max_diff, tolerance });
        }
    }
    ScalarField::new(g, fwd)
}

/// Interior cells whose whole curl stencil lies inside the mask.
pub(crate) fn curl_check_cells<'a>(
    g: &'a GridSpec,
    mask: Option<&'a [bool]>,
) -> impl Iterator<Item = usize> + 'a {
    let shape = g.shape3();
    let strides = g.strides();
    (0..g.len()).filter(move |&idx| {
        let i = g.unravel(idx);
        if (0..3).any(|a| i[a] == 0 || i[a] + 1 == shape[a]) {
            return false;
        }
        match mask {
            None => true,
            Some(m) => {
                m[idx]
                    && (0..3).all(|a| m[idx - strides[a]] && m[idx + strides[a]])
            }
        }
    })
}

fn sweep_integrate(
    u: &VectorField,
    ref_idx: usize,
    inside: &dyn Fn(usize) -> bool,
    order: &[usize],
) -> Vec<f64> {
    let g = u.grid;
    let n = g.len();
    let mut s = vec![0.0; n];
    let mut known = vec![false; n];
    known[ref_idx] = true;
    loop {
        loop {
            let mut changed = false;
            for &axis in order {
                changed |= propagate_axis(u, axis, inside, &mut s, &mut known);
            }
            if !changed {
                break;
            }
        }
        match (0..n).find(|&i| inside(i) && !known[i]) {
            Some(i) => known[i] = true,
            None => break,
        }
    }
    s
}

fn propagate_axis(
    u: &VectorField,
    axis: usize,
    inside: &dyn Fn(usize) -> bool,
    s: &mut [f64],
    known: &mut [bool],
) -> bool {
    let g = u.grid;
    let d = g.dim();
    let n = g.shape[axis];
    let st = g.strides()[axis];
    let half_h = 0.5 * g.spacing[axis];
    let comp = |idx: usize| u.values[idx * d + axis];
    let mut changed = false;
    for start in 0..g.len() {
        if g.unravel(start)[axis] != 0 {
            continue;
        }
        for k in 1..n {
            let (prev, cur) = (start + (k - 1) * st, start + k * st);
            if !known[cur] && known[prev] && inside(cur) && inside(prev) {
                s[cur] = s[prev] + half_h * (comp(prev) + comp(cur));
                known[cur] = true;
                changed = true;
            }
        }
        for k in (0..n - 1).rev() {
            let (cur, next) = (start + k * st, start + (k + 1) * st);
            if !known[cur] && known[next] && inside(cur) && inside(next) {
                s[cur] = s[next] - half_h * (comp(cur) + comp(next));
                known[cur] = true;
                changed = true;
            }
        }
    }
    changed
}

/// `sum conj(a) * b * dV`.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    same_grid(&a.grid, &b.grid)?;
    let s: Complex64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube(n: usize) -> GridSpec {
        GridSpec::cube(n, 0.0, 1.0).unwrap()
    }

    #[test]
    fn integrate_constant_over_unit_box() {
        let f = ScalarField::from_fn(unit_cube(8), |_| 1.0);
        assert!((integrate(&f) - 1.0).abs() < 1e-14);
        assert_eq!(integrate(&ScalarField::zeros(unit_cube(8))), 0.0);
    }

    #[test]
    fn integrate_gaussian() {
        let g = GridSpec::cube(48, -6.0, 6.0).unwrap();
        let norm = std::f64::consts::PI.powf(-1.5);
        let rho = ScalarField::from_fn(g, |x| norm * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        assert!((integrate(&rho) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_integral_scales_with_volume() {
        let small = ScalarField::from_fn(GridSpec::cube(6, 0.0, 1.0).unwrap(), |_| 2.5);
        let big = ScalarField::from_fn(GridSpec::cube(6, 0.0, 2.0).unwrap(), |_| 2.5);
        assert!((integrate(&big) / integrate(&small) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_exact_on_quadratics() {
        let g = GridSpec::boxed([5, 6, 7], [-1.0, 0.0, 0.5], [1.0, 2.0, 1.5]).unwrap();
        let f = ScalarField::from_fn(g, |x| 3.0 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[2] * x[2] + x[1]);
        let grad = gradient(&f).unwrap();
        for i in 0..g.len() {
            let x = g.center(i);
            let exact = [6.0 * x[0] - x[1], -x[0] + 1.0, 4.0 * x[2]];
            for k in 0..3 {
                assert!((grad.at(i)[k] - exact[k]).abs() < 1e-10, "cell {i} comp {k}");
            }
        }
        let c = ScalarField::from_fn(g, |_| 4.0);
        assert_eq!(gradient(&c).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn gradient_needs_three_cells() {
        let g = GridSpec::new(&[2, 4, 4], &[1.0; 3], &[0.0; 3]).unwrap();
        assert!(matches!(
            gradient(&ScalarField::zeros(g)),
            Err(Error::ShapeTooSmall { axis: 0, .. })
        ));
    }

    #[test]
    fn curl_examples() {
        let g = GridSpec::cube(6, -1.0, 1.0).unwrap();
        let rot = VectorField::from_fn(g, |x| [-x[1], x[0], 0.0]);
        let c = curl(&rot).unwrap();
        for i in 0..g.len() {
            assert!((c.at(i)[2] - 2.0).abs() < 1e-12);
            assert!(c.at(i)[0].abs() < 1e-12 && c.at(i)[1].abs() < 1e-12);
        }
        let grad = VectorField::from_fn(g, |x| [x[1], x[0], 0.0]);
        assert!(curl(&grad).unwrap().max_norm() < 1e-12);
        assert_eq!(curl(&VectorField::zeros(g)).unwrap().max_norm(), 0.0);
        let line = GridSpec::line(8, 0.0, 1.0).unwrap();
        assert!(matches!(
            curl(&VectorField::zeros(line)),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = GridSpec::boxed([5, 7, 6], [-1.0; 3], [1.0, 2.0, 1.5]).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] * x[1] + 0.3 * x[1] * x[2] - x[2] * x[0] + x[0] * x[0]);
        let c = curl(&gradient(&f).unwrap()).unwrap();
        assert!(c.max_norm() < 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn marginal_of_separable_density() {
        let g = GridSpec::cube(24, -5.0, 5.0).unwrap();
        let a = |t: f64| (1.0 + 0.5 * t).powi(2) * (-t * t).exp();
        let b = |t: f64| (-t * t).exp() / std::f64::consts::PI.sqrt();
        let f = ScalarField::from_fn(g, |x| a(x[0]) * b(x[1]) * b(x[2]));
        let m = marginal_x1(&f).unwrap();
        assert_eq!(m.grid().dim(), 1);
        for (i, &v) in m.values().iter().enumerate() {
            let x = m.grid().coord(0, i);
            assert!((v - a(x)).abs() < 1e-8);
        }
        let unit = marginal_x1(&ScalarField::from_fn(unit_cube(4), |_| 1.0)).unwrap();
        assert!(unit.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(marginal_x1(&ScalarField::zeros(unit_cube(4)))
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn line_integral_of_exact_gradient() {
        let g = GridSpec::cube(9, -1.0, 1.0).unwrap();
        let u = VectorField::from_fn(g, |x| [x[1], x[0], 0.0]);
        let r = [2, 3, 4];
        let s = line_integrate(&u, r).unwrap();
        let x0 = g.center(g.index(r));
        for i in 0..g.len() {
            let x = g.center(i);
            assert!((s.values()[i] - (x[0] * x[1] - x0[0] * x0[1])).abs() < 1e-12);
        }
        let c = VectorField::from_fn(g, |_| [0.5, -1.0, 2.0]);
        let s = line_integrate(&c, r).unwrap();
        for i in 0..g.len() {
            let x = g.center(i);
            let exact = 0.5 * (x[0] - x0[0]) - (x[1] - x0[1]) + 2.0 * (x[2] - x0[2]);
            assert!((s.values()[i] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn line_integral_rejects_rotation() {
        let g = GridSpec::cube(8, -1.0, 1.0).unwrap();
        let u = VectorField::from_fn(g, |x| [-x[1], x[0], 0.0]);
        assert!(matches!(line_integrate(&u, [0, 0, 0]), Err(Error::CurlTooLarge { .. })));
    }

    #[test]
    fn masked_line_integral_stays_in_mask() {
        // Two slabs joined only through the middle of the box.
        let g = GridSpec::cube(10, -1.0, 1.0).unwrap();
        let mask: Vec<bool> = (0..g.len())
            .map(|i| {
                let x = g.center(i);
                x[0].abs() > 0.5 || (x[1].abs() < 0.3 && x[2].abs() < 0.3)
            })
            .collect();
        let u = VectorField::from_fn(g, |x| [2.0 * x[0], 1.0, -x[2]]);
        let r = (0..g.len()).find(|&i| mask[i]).unwrap();
        let s = line_integrate_masked(&u, g.unravel(r), Some(&mask), &PathTolerances::default())
            .unwrap();
        let pot = |x: [f64; 3]| x[0] * x[0] + x[1] - 0.5 * x[2] * x[2];
        let x0 = g.center(r);
        for i in (0..g.len()).filter(|&i| mask[i]) {
            let exact = pot(g.center(i)) - pot(x0);
            // trapezoid is exact for the linear components, O(h^2) for the quadratic ones
            assert!((s.values()[i] - exact).abs() < 0.05, "cell {i}");
        }
    }

    #[test]
    fn inner_product_basics() {
        let g = unit_cube(4);
        let ones = ComplexField::new(g, vec![Complex64::new(1.0, 0.0); g.len()]).unwrap();
        let ip = inner_product(&ones, &ones).unwrap();
        assert!((ip - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let left: Vec<Complex64> = (0..g.len())
            .map(|i| if g.center(i)[0] < 0.5 { Complex64::new(1.0, 1.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let right: Vec<Complex64> = left
            .iter()
            .map(|z| if z.norm() > 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, 2.0) })
            .collect();
        let ip = inner_product(
            &ComplexField::new(g, left).unwrap(),
            &ComplexField::new(g, right).unwrap(),
        )
        .unwrap();
        assert_eq!(ip, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn dirichlet_energy_matches_laplacian_pairing() {
        let g = GridSpec::boxed([6, 5, 7], [-1.0; 3], [1.0, 1.2, 0.9]).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] + 0.3).sin() * x[1].cos() + x[2]);
        let lap = laplacian(&f);
        let pairing: f64 = f
            .values()
            .iter()
            .zip(lap.values())
            .map(|(a, b)| -a * b)
            .sum::<f64>()
            * g.cell_volume();
        let e = dirichlet_energy(&f);
        assert!((pairing - e).abs() < 1e-12 * e);
    }

    #[test]
    fn grid_serde_keeps_only_active_axes() {
        let g = GridSpec::line(5, 0.0, 1.0).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"dim":1,"shape":[5],"spacing":[0.2],"origin":[0.0]}"#);
        let back: GridSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<GridSpec>(r#"{"dim":2,"shape":[2,2],"spacing":[1,1],"origin":[0,0]}"#).is_err());
    }
}
