//! Convexity margins of J0, J1, J_lambda and the curl-free upper bound along
//! a segment of two-particle pairs sharing one velocity field.

use cdft::convex::convexity_probe;
use cdft::density::DensityPair;
use cdft::fixtures::Sampler;
use cdft::functionals::{j0, j1, j_lambda, q_upper_bound_curlfree};
use cdft::{Error, Result};

fn finite(v: cdft::Extended) -> Result<f64> {
    v.finite().ok_or_else(|| Error::Config("infinite value".into()))
}

fn main() {
    let g = Sampler::default_grid(16);
    let mut s = Sampler::new(31);
    let rho1 = s.density(&g, 2, 2);
    let phase = s.phase(&rho1, 1.0);
    let p1 = phase.pair(rho1);
    let p2 = phase.pair(s.density(&g, 2, 3));
    let lambdas: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();

    let probes: Vec<(&str, Box<dyn Fn(&DensityPair) -> Result<f64>>)> = vec![
        ("J0", Box::new(|p| finite(j0(p)))),
        ("J1", Box::new(|p| Ok(j1(&p.rho)))),
        ("J_0.5", Box::new(|p| finite(j_lambda(p, 0.5)?.value))),
        ("upper bound, N = 2", Box::new(|p| q_upper_bound_curlfree(p, 2))),
    ];
    for (name, q) in &probes {
        let r = convexity_probe(&p1, &p2, q.as_ref(), &lambdas).unwrap();
        let m: Vec<String> = r.margins.iter().map(|m| format!("{m:+.2e}")).collect();
        println!("{name:<19} min {:+.3e}  [{}]", r.min_margin, m.join(" "));
    }
}
