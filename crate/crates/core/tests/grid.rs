use cdft::grid::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn small_cube() -> impl Strategy<Value = GridSpec> {
    (3usize..8, 3usize..8, 3usize..8, 0.1f64..1.0, 0.1f64..1.0, 0.1f64..1.0, -2.0f64..2.0).prop_map(
        |(a, b, c, h1, h2, h3, o)| GridSpec::new(&[a, b, c], &[h1, h2, h3], &[o, -o, 0.5 * o]).unwrap(),
    )
}

fn quad() -> impl Strategy<Value = ([f64; 3], [[f64; 3]; 3])> {
    (prop::array::uniform3(-2.0f64..2.0), prop::array::uniform3(prop::array::uniform3(-1.0f64..1.0)))
        .prop_map(|(b, m)| {
            let mut s = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] = 0.5 * (m[i][j] + m[j][i]);
                }
            }
            (b, s)
        })
}

fn chi(b: &[f64; 3], m: &[[f64; 3]; 3], x: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        s += b[i] * x[i];
        for j in 0..3 {
            s += 0.5 * x[i] * m[i][j] * x[j];
        }
    }
    s
}

fn grad_chi(b: &[f64; 3], m: &[[f64; 3]; 3], x: [f64; 3]) -> [f64; 3] {
    let mut g = *b;
    for i in 0..3 {
        for j in 0..3 {
            g[i] += m[i][j] * x[j];
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integrate_is_linear(g in small_cube(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = ScalarField::from_fn(g, |x| x[0] * x[1] + 1.0);
        let k = ScalarField::from_fn(g, |x| (x[2]).sin());
        let lhs = integrate(&f.zip_map(&k, |u, v| a * u + b * v).unwrap());
        let rhs = a * integrate(&f) + b * integrate(&k);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gradient_exact_on_quadratics((b, m) in quad(), g in small_cube()) {
        let f = ScalarField::from_fn(g, |x| chi(&b, &m, x));
        let d = gradient(&f).unwrap();
        for i in 0..g.len() {
            let want = grad_chi(&b, &m, g.center(i));
            for k in 0..3 {
                prop_assert!((d.at(i)[k] - want[k]).abs() <= 1e-9 * (1.0 + want[k].abs()));
            }
        }
    }

    #[test]
    fn curl_of_quadratic_gradient_vanishes((b, m) in quad(), g in small_cube()) {
        let u = VectorField::from_fn(g, |x| grad_chi(&b, &m, x));
        let c = curl(&u).unwrap();
        prop_assert!(c.max_norm() <= 1e-9);
    }

    #[test]
    fn line_integral_recovers_quadratic_potential((b, m) in quad(), g in small_cube(), r in prop::array::uniform3(0usize..3)) {
        let u = VectorField::from_fn(g, |x| grad_chi(&b, &m, x));
        let s = line_integrate(&u, r).unwrap();
        let c0 = chi(&b, &m, g.center(g.index(r)));
        for i in 0..g.len() {
            let want = chi(&b, &m, g.center(i)) - c0;
            prop_assert!((s.values()[i] - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn marginal_preserves_mass(g in small_cube(), w in 0.5f64..2.0) {
        let f = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / w).exp());
        let m = marginal_x1(&f).unwrap();
        prop_assert!((integrate(&m) - integrate(&f)).abs() <= 1e-12 * (1.0 + integrate(&f)));
    }

    #[test]
    fn inner_product_matches_direct_sum(
        re in prop::collection::vec(-1.0f64..1.0, 2 * 27),
        im in prop::collection::vec(-1.0f64..1.0, 2 * 27),
    ) {
        let g = GridSpec::cube(3, 0.0, 1.5).unwrap();
        let za: Vec<Complex64> = (0..27).map(|i| Complex64::new(re[i], im[i])).collect();
        let zb: Vec<Complex64> = (0..27).map(|i| Complex64::new(re[27 + i], im[27 + i])).collect();
        let a = ComplexField::new(g, za.clone()).unwrap();
        let b = ComplexField::new(g, zb.clone()).unwrap();
        let mut want = Complex64::new(0.0, 0.0);
        for i in 0..27 {
            want += za[i].conj() * zb[i];
        }
        want *= g.cell_volume();
        let got = inner_product(&a, &b).unwrap();
        prop_assert!((got - want).norm() <= 1e-13);
        // Hermitian symmetry
        let back = inner_product(&b, &a).unwrap();
        prop_assert!((back - got.conj()).norm() <= 1e-13);
    }

    #[test]
    fn dirichlet_energy_is_quadratic(g in small_cube(), s in -3.0f64..3.0) {
        let f = ScalarField::from_fn(g, |x| (x[0] - x[1]).cos() + x[2]);
        let e = dirichlet_energy(&f);
        let es = dirichlet_energy(&f.scaled(s));
        prop_assert!(e >= 0.0);
        prop_assert!((es - s * s * e).abs() <= 1e-10 * (1.0 + es.abs()));
    }
}

#[test]
fn gradient_of_constant_is_zero() {
    let g = GridSpec::cube(6, -1.0, 1.0).unwrap();
    let d = gradient(&ScalarField::from_fn(g, |_| 3.5)).unwrap();
    assert_eq!(d.max_norm(), 0.0);
}

#[test]
fn constant_field_line_integral() {
    let g = GridSpec::cube(5, 0.0, 2.0).unwrap();
    let c = [0.3, -1.2, 0.7];
    let u = VectorField::from_fn(g, |_| c);
    let r = [1, 2, 3];
    let s = line_integrate(&u, r).unwrap();
    let x0 = g.center(g.index(r));
    for i in 0..g.len() {
        let x = g.center(i);
        let want: f64 = (0..3).map(|k| c[k] * (x[k] - x0[k])).sum();
        assert!((s.values()[i] - want).abs() < 1e-12);
    }
}

#[test]
fn orthogonal_slabs_have_zero_overlap() {
    let g = GridSpec::cube(6, 0.0, 1.0).unwrap();
    let one = Complex64::new(1.0, 0.5);
    let a: Vec<Complex64> = (0..g.len())
        .map(|i| if g.unravel(i)[0] < 3 { one } else { Complex64::new(0.0, 0.0) })
        .collect();
    let b: Vec<Complex64> = (0..g.len())
        .map(|i| if g.unravel(i)[0] >= 3 { one } else { Complex64::new(0.0, 0.0) })
        .collect();
    let ip = inner_product(&ComplexField::new(g, a).unwrap(), &ComplexField::new(g, b).unwrap()).unwrap();
    assert_eq!(ip, Complex64::new(0.0, 0.0));
}

#[test]
fn marginal_of_zero_and_unit_constant() {
    let g = GridSpec::cube(8, 0.0, 1.0).unwrap();
    let z = marginal_x1(&ScalarField::zeros(g)).unwrap();
    assert!(z.values().iter().all(|v| *v == 0.0));
    let one = marginal_x1(&ScalarField::from_fn(g, |_| 1.0)).unwrap();
    assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    assert_eq!(one.grid().dim(), 1);
}

#[test]
fn fields_reject_wrong_lengths_and_grids() {
    let g = GridSpec::cube(4, 0.0, 1.0).unwrap();
    assert!(ScalarField::new(g, vec![0.0; 10]).is_err());
    let h = GridSpec::cube(4, 0.0, 2.0).unwrap();
    let a = ScalarField::zeros(g);
    let b = ScalarField::zeros(h);
    assert!(a.zip_map(&b, |x, y| x + y).is_err());
    assert!(GridSpec::new(&[4, 4], &[0.1, -0.1], &[0.0, 0.0]).is_err());
}
