//! Sampled Legendre transform at a v-representable pair and at a pair that
//! no potential in the family produces.

use cdft::basis::BasisFn;
use cdft::convex::{f_legendre_sampled, search_tolerance, PotentialFamily};
use cdft::density::DensityPair;
use cdft::det::q_exact_n1;
use cdft::fixtures::with_mass;
use cdft::grid::{GridSpec, ScalarField, VectorField};
use cdft::solver::{densities_from_state, discretize, ground_state, Boundary};

fn main() {
    let g = GridSpec::dirichlet_line(200, -7.0, 7.0).unwrap();
    let fam = PotentialFamily {
        v_basis: vec![BasisFn::Pow(2), BasisFn::X, BasisFn::Gauss { c: 0.0, w: 1.0 }],
        a_basis: vec![BasisFn::One, BasisFn::X],
        boxes: vec![[0.0, 2.0], [-1.0, 1.0], [-2.0, 2.0], [-1.0, 1.0], [-1.0, 1.0]],
        budget: 1500,
        seed: 7,
        boundary: Boundary::Dirichlet,
    };

    let v = ScalarField::from_fn(g, |x| 0.8 * x[0] * x[0] - 0.3 * x[0] - (-x[0] * x[0]).exp());
    let a = VectorField::from_fn(g, |x| [0.3 + 0.2 * x[0], 0.0, 0.0]);
    let rep = densities_from_state(&ground_state(&discretize(&v, &a, Boundary::Dirichlet).unwrap()).unwrap()).unwrap();

    let rho = with_mass(&ScalarField::from_fn(g, |x| (-(x[0] - 0.5).powi(4)).exp()), 1.0);
    let jp = VectorField::new(g, rho.values().iter().map(|r| 0.7 * r).collect()).unwrap();
    let other = DensityPair::new(rho, jp).unwrap();

    for (label, p) in [("representable", &rep), ("quartic profile", &other)] {
        let r = f_legendre_sampled(p, &fam).unwrap();
        let q = q_exact_n1(p).unwrap();
        println!(
            "{label:<16} F >= {:.6}  Q = {:.6}  Q - F = {:.2e} (search tol {:.1e}, {} evaluations)",
            r.f_lower,
            q,
            q - r.f_lower,
            search_tolerance(q),
            r.evaluations
        );
        let coefs: Vec<String> = r.argmax_v.iter().chain(&r.argmax_a).map(|t| format!("{}={:.3}", t.basis, t.coef)).collect();
        println!("{:<16} argmax {}", "", coefs.join(" "));
    }
}
