//! Vorticity of a gradient current against a rigid rotation.

use cdft::density::{vorticity, DensityPair, Tolerances};
use cdft::fixtures::{GaussianMixture, QuadraticPhase};
use cdft::grid::{GridSpec, VectorField};

fn main() {
    let g = GridSpec::cube(20, -5.0, 5.0).unwrap();
    let rho = GaussianMixture::single([0.0; 3], 1.5).density(&g, 1.0);
    let tol = Tolerances::default();

    let mut q = QuadraticPhase::linear([0.2, 0.0, 0.1]);
    q.m[0][1] = 0.5;
    q.m[1][0] = 0.5;
    let w = vorticity(&q.pair(rho.clone()), &tol).unwrap();
    println!("gradient current: max |curl u| = {:.3e}", w.max_interior());

    let jp = VectorField::new(
        g,
        (0..g.len() * 3)
            .map(|k| {
                let x = g.center(k / 3);
                rho.values()[k / 3] * [-x[1], x[0], 0.0][k % 3]
            })
            .collect(),
    )
    .unwrap();
    let w = vorticity(&DensityPair::new(rho, jp).unwrap(), &tol).unwrap();
    let flagged = w.flagged.iter().filter(|f| **f).count();
    println!("rigid rotation:   max |curl u| = {:.3} ({flagged} cells flagged)", w.max_interior());
}
