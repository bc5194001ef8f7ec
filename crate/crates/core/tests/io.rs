use cdft::density::{DensityPair, Provenance, Tolerances};
use cdft::fixtures::{GaussianMixture, QuadraticPhase};
use cdft::grid::{ComplexField, GridSpec, ScalarField, VectorField};
use cdft::io::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn encodings() -> impl Strategy<Value = Encoding> {
    prop_oneof![Just(Encoding::Csv), Just(Encoding::Binary)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scalar_round_trip_is_bit_exact(
        n in 2usize..6,
        vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 216),
        enc in encodings(),
    ) {
        let g = GridSpec::new(&[n, n, n], &[0.1, 0.2, 0.3], &[-1.0, 0.0, 1.0]).unwrap();
        let f = ScalarField::new(g, vals[..g.len()].to_vec()).unwrap();
        let mut buf = Vec::new();
        write_scalar(&mut buf, &f, enc).unwrap();
        let back = read_scalar(buf.as_slice()).unwrap();
        prop_assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn vector_and_complex_round_trip(
        n in 2usize..9,
        vals in prop::collection::vec(-1e6f64..1e6, 16),
        enc in encodings(),
    ) {
        let g = GridSpec::line(n, -2.0, 3.0).unwrap();
        let v = VectorField::new(g, vals[..n].to_vec()).unwrap();
        let mut buf = Vec::new();
        write_vector(&mut buf, &v, enc).unwrap();
        prop_assert_eq!(read_vector(buf.as_slice()).unwrap(), v);

        let z: Vec<Complex64> = (0..n).map(|i| Complex64::new(vals[i], vals[15 - i])).collect();
        let c = ComplexField::new(g, z).unwrap();
        let mut buf = Vec::new();
        write_complex(&mut buf, &c, enc).unwrap();
        prop_assert_eq!(read_complex(buf.as_slice()).unwrap(), c);
    }
}

#[test]
fn truncated_binary_is_a_format_error() {
    let g = GridSpec::line(5, 0.0, 1.0).unwrap();
    let f = ScalarField::from_fn(g, |x| x[0]);
    let mut buf = Vec::new();
    write_scalar(&mut buf, &f, Encoding::Binary).unwrap();
    buf.truncate(buf.len() - 3);
    let e = read_scalar(buf.as_slice()).unwrap_err();
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn unknown_header_rejected() {
    let text = b"NOT-A-FIELD\n1,2,3\n";
    assert!(read_scalar(&text[..]).is_err());
}

#[test]
fn pair_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::cube(8, -4.0, 4.0).unwrap();
    let rho = GaussianMixture::single([0.0; 3], 1.2).density(&g, 2.0);
    let p = QuadraticPhase::linear([0.2, 0.0, -0.1]).pair(rho);
    let tol = Tolerances {
        mass_rel: 1e-6,
        ..Tolerances::default()
    };
    for enc in [Encoding::Csv, Encoding::Binary] {
        let path = save_pair(dir.path(), "pair", &p, 2, &tol, enc).unwrap();
        let (q, m) = load_pair(&path).unwrap();
        assert_eq!(m.format, PAIR_FORMAT);
        assert_eq!(m.n, 2);
        assert_eq!(m.tolerances, tol);
        assert_eq!(q.rho, p.rho);
        assert_eq!(q.jp, p.jp);
        // Loaded pairs must be validated again before use.
        assert_eq!(q.provenance, Provenance::Raw);
    }
}

#[test]
fn solver_provenance_survives_a_round_trip() {
    use cdft::solver::{densities_from_state, discretize, ground_state, Boundary};
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::dirichlet_line(64, -5.0, 5.0).unwrap();
    let v = ScalarField::from_fn(g, |x| x[0] * x[0]);
    let s = ground_state(&discretize(&v, &VectorField::zeros(g), Boundary::Dirichlet).unwrap()).unwrap();
    let p: DensityPair = densities_from_state(&s).unwrap();
    let path = save_pair(dir.path(), "ground", &p, 1, &Tolerances::default(), Encoding::Binary).unwrap();
    let (q, _) = load_pair(&path).unwrap();
    assert_eq!(q.provenance, Provenance::SolverAN);
}

#[test]
fn atomic_write_leaves_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.txt");
    write_atomic(&target, b"one").unwrap();
    write_atomic(&target, b"two").unwrap();
    assert_eq!(std::fs::read(&target).unwrap(), b"two");
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 1);
}
