//! e0(v, A) against Q + pairing at the ground pair and at perturbed pairs.

use cdft::density::{DensityPair, Potentials};
use cdft::fixtures::with_mass;
use cdft::grid::{GridSpec, ScalarField, VectorField};
use cdft::solver::{densities_from_state, discretize, ground_state, variational_audit, Boundary};

fn main() {
    let g = GridSpec::dirichlet_line(400, -7.0, 7.0).unwrap();
    let v = ScalarField::from_fn(g, |x| 0.5 * x[0] * x[0] + 0.3 * x[0]);
    let a = VectorField::from_fn(g, |x| [0.2 - 0.1 * x[0], 0.0, 0.0]);
    let pot = Potentials::new(v.clone(), a.clone()).unwrap();
    let ground = densities_from_state(&ground_state(&discretize(&v, &a, Boundary::Dirichlet).unwrap()).unwrap()).unwrap();

    let audit = variational_audit(&ground, &pot, Boundary::Dirichlet).unwrap();
    println!("ground pair: e0 {:.8}  Q + pairing {:.8}  gap {:.2e}", audit.lhs, audit.rhs, audit.rhs - audit.lhs);

    for (k, amp) in [0.05, 0.2, 0.5].into_iter().enumerate() {
        let rho = with_mass(
            &ScalarField::from_fn(g, |x| 1.0 + amp * (1.3 * x[0] + k as f64).sin()).zip_map(&ground.rho, |f, r| f * r).unwrap(),
            1.0,
        );
        let jp = VectorField::new(g, ground.jp.values().iter().zip(rho.values()).map(|(j, r)| j + amp * r).collect()).unwrap();
        let a = variational_audit(&DensityPair::new(rho, jp).unwrap(), &pot, Boundary::Dirichlet).unwrap();
        println!("perturbed ({amp:.2}): e0 {:.8} <= {:.8}  margin {:.3e}", a.lhs, a.rhs, a.margin);
    }
}
