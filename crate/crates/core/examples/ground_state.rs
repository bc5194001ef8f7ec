//! Ground states of a box, an oscillator and a ring threaded by flux.

use std::f64::consts::PI;

use cdft::grid::{GridSpec, ScalarField, VectorField};
use cdft::solver::{densities_from_state, discretize, e0_of, ground_state, Boundary};

fn main() {
    for n in [64, 128, 256] {
        let g = GridSpec::dirichlet_line(n, 0.0, 1.0).unwrap();
        let e = e0_of(&ScalarField::zeros(g), &VectorField::zeros(g), Boundary::Dirichlet).unwrap();
        println!("box, {n:>3} cells: e0 = {e:.8} (pi^2 = {:.8})", PI * PI);
    }

    let g = GridSpec::dirichlet_line(512, -8.0, 8.0).unwrap();
    let v = ScalarField::from_fn(g, |x| x[0] * x[0]);
    let a = VectorField::from_fn(g, |x| [0.4 * x[0], 0.0, 0.0]);
    let s = ground_state(&discretize(&v, &a, Boundary::Dirichlet).unwrap()).unwrap();
    let p = densities_from_state(&s).unwrap();
    let l1: f64 = (0..g.len())
        .map(|i| (p.jp.values()[i] + p.rho.values()[i] * a.values()[i]).abs())
        .sum::<f64>()
        * g.spacing()[0];
    println!("oscillator with A = 0.4 x: e0 = {:.6}, gap {:.4}, |jp + rho A|_1 = {l1:.2e}", s.e0, s.gap);

    let ring = GridSpec::line(128, 0.0, 2.0 * PI).unwrap();
    let v = ScalarField::from_fn(ring, |x| x[0].cos());
    for flux in [0.0, 0.25, 0.5, 1.0] {
        let a = VectorField::from_fn(ring, |_| [flux, 0.0, 0.0]);
        println!("ring, flux {flux:.2} quanta: e0 = {:.6}", e0_of(&v, &a, Boundary::Periodic).unwrap());
    }
}
