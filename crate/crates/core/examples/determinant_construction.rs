//! Builds determinantal orbitals for a random curl-free pair and compares
//! the two kinetic energy evaluations.

use cdft::density::Tolerances;
use cdft::det::{build_orbitals, det_report};
use cdft::fixtures::Sampler;

fn main() {
    let g = Sampler::default_grid(32);
    let mut s = Sampler::new(2024);
    for n in 1..=4 {
        let p = s.pair(&g, n, 2);
        let r = det_report(&p, n, &Tolerances::default()).unwrap();
        let o = build_orbitals(&p, n).unwrap();
        println!(
            "N = {n}: T direct {:.6}  T formula {:.6}  |diff| {:.2e} (tol {:.2e})  bound {:.4}  E_xc {:.5}  overlap err {:.1e}",
            r.t_direct,
            r.t_formula,
            (r.t_direct - r.t_formula).abs(),
            r.tol_kin,
            r.t_bound_rhs,
            r.exc,
            o.orthonormality_error(),
        );
    }
}
