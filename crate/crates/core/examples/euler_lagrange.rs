//! Euler-Lagrange residuals at magnetic ground states under refinement.

use cdft::convex::euler_lagrange_residual;
use cdft::density::Potentials;
use cdft::grid::{GridSpec, ScalarField, VectorField};
use cdft::solver::{densities_from_state, discretize, ground_state, Boundary};

fn main() {
    let mut last: Option<(f64, f64)> = None;
    for n in [128, 256, 512, 1024] {
        let g = GridSpec::dirichlet_line(n, -8.0, 8.0).unwrap();
        let v = ScalarField::from_fn(g, |x| x[0] * x[0] - 2.0 * (-x[0] * x[0]).exp());
        let a = VectorField::from_fn(g, |x| [0.5 * x[0].sin(), 0.0, 0.0]);
        let p = densities_from_state(&ground_state(&discretize(&v, &a, Boundary::Dirichlet).unwrap()).unwrap()).unwrap();
        let r = euler_lagrange_residual(&p, &Potentials::new(v, a).unwrap()).unwrap();
        let ratio = last.map_or(String::new(), |(a, b)| format!("  ratios {:.2} {:.2}", a / r.r_rho, b / r.r_jp));
        println!(
            "{n:>5} cells: r_rho {:.3e}  r_jp {:.3e}  mu* {:.6}  tol {:.2e}{ratio}",
            r.r_rho, r.r_jp, r.mu_star, r.tolerance
        );
        last = Some((r.r_rho, r.r_jp));
    }
}
