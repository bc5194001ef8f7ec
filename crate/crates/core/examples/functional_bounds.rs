//! Evaluates J1, J0, J_lambda and Hartree on a two-particle pair and prints
//! every bound chain.

use cdft::fixtures::Sampler;
use cdft::functionals::{
    const_a, const_b, const_c, j_lambda_bound_audit, hartree, j0, j1, j_lambda, q_upper_bound_curlfree,
    sobolev_chain_audit,
};

fn main() {
    println!("a = {:.10}  b = {:.10}  c = {:.10}", const_a(), const_b(), const_c());
    let g = Sampler::default_grid(20);
    let p = Sampler::new(5).pair(&g, 2, 3);
    println!(
        "J1 {:.6}  J0 {}  J_0.5 {}  Hartree {:.6}",
        j1(&p.rho),
        j0(&p),
        j_lambda(&p, 0.5).unwrap().value,
        hartree(&p.rho)
    );
    println!("curl-free upper bound on Q: {:.6}", q_upper_bound_curlfree(&p, 2).unwrap());
    let audits = j_lambda_bound_audit(&p, 2, 0.5)
        .unwrap()
        .into_iter()
        .chain(sobolev_chain_audit(&p.rho, 2));
    for a in audits {
        println!("{:<5} {:<60} {:>12.6} <= {:>12.6}", if a.pass { "ok" } else { "FAIL" }, a.name, a.lhs, a.rhs);
    }
}
