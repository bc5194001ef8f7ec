//! Validates a Gaussian pair with a linear phase, then breaks it three ways.

use cdft::density::{validate_pair, DensityPair, Tolerances};
use cdft::fixtures::{GaussianMixture, QuadraticPhase};
use cdft::grid::GridSpec;

fn main() {
    let g = GridSpec::cube(24, -6.0, 6.0).unwrap();
    let rho = GaussianMixture::single([0.0; 3], 1.0).density(&g, 2.0);
    let pair = QuadraticPhase::linear([0.4, 0.0, -0.2]).pair(rho.clone());
    let tol = Tolerances::default();

    let show = |label: &str, p: &DensityPair, n: usize| {
        let r = validate_pair(p, n, &tol);
        println!(
            "{label:<22} verdict {:<5} mass {:.12} J1 {:.6} J0 {} reasons {:?}",
            r.verdict, r.mass, r.j1_value, r.j0_value, r.reasons
        );
    };
    show("two particles", &pair, 2);
    show("claimed N = 3", &pair, 3);

    let mut neg = rho.clone();
    neg.values_mut()[g.index([12, 12, 12])] = -0.05 * rho.max();
    show("negative cell", &DensityPair::new(neg, pair.jp.clone()).unwrap(), 2);

    let small = GridSpec::cube(24, -2.0, 2.0).unwrap();
    let clipped = GaussianMixture::single([0.0; 3], 1.0).density(&small, 2.0);
    show("mass on the box edge", &DensityPair::static_density(clipped), 2);
}
