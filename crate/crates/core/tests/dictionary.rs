use ndarray::Array1;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use narmax_lasso::{
    build_matrix, evaluate_column, generate_polynomial_dictionary, Factor, RegressorTerm, Signal, TimeSeriesData,
};
use testkit::{choose, enumerate_monomials, naive_monomial};

fn random_data(n: usize, n_inputs: usize, seed: u64) -> (TimeSeriesData, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = ndarray::Array2::from_shape_fn((n, n_inputs), |_| rng.random_range(-1.0..1.0));
    let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
    let r = Array1::from_shape_fn(n, |_| rng.random_range(-0.5..0.5));
    (TimeSeriesData::new(inputs, y).unwrap(), r)
}

#[test]
fn counts_match_exhaustive_enumeration() {
    // (n_y, n_u, n_e, degree) -> enumerated (p, p_e)
    let cases = [
        (3, 3, 0, 2),
        (3, 3, 0, 3),
        (3, 3, 2, 2),
        (3, 2, 1, 2),
        (3, 2, 1, 3),
        (2, 2, 2, 2),
        (2, 2, 2, 3),
        (1, 1, 4, 2),
        (1, 1, 4, 3),
    ];
    for (ny, nu, ne, deg) in cases {
        let d = generate_polynomial_dictionary(ny, &[nu], ne, deg).unwrap();
        let (p, pe) = enumerate_monomials(ny + nu + ne, deg, ne);
        assert_eq!((d.len(), d.error_term_count()), (p, pe), "{ny},{nu},{ne},{deg}");
    }
}

#[test]
fn table_error_fractions_by_enumeration() {
    // enumerated fractions; the printed table values sit one term lower
    let frac = |ny, nu, ne, deg| {
        let d = generate_polynomial_dictionary(ny, &[nu], ne, deg).unwrap();
        (d.error_term_count(), d.len())
    };
    assert_eq!(frac(3, 2, 1, 2), (7, 27));
    assert_eq!(frac(3, 2, 1, 3), (28, 83));
    assert_eq!(frac(2, 2, 2, 2), (13, 27));
    assert_eq!(frac(1, 1, 4, 2), (22, 27));
    assert_eq!(frac(1, 1, 4, 3), (74, 83));
}

#[test]
fn generated_terms_are_distinct_canonical_and_bounded() {
    let d = generate_polynomial_dictionary(2, &[2, 1], 2, 3).unwrap();
    let mut seen = std::collections::HashSet::new();
    for t in d.terms() {
        assert!(seen.insert(t.clone()));
        assert!(t.degree() >= 1 && t.degree() <= 3);
        let keys: Vec<_> = t.factors().iter().map(|f| (f.signal, f.lag)).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]), "{t}");
        assert_eq!(&RegressorTerm::new(t.factors().iter().copied()).unwrap(), t);
    }
    assert_eq!(d.max_lag(), 2);
}

#[test]
fn multi_input_count() {
    let d = generate_polynomial_dictionary(1, &[2, 3], 1, 2).unwrap();
    assert_eq!(d.len() as u64, choose(7 + 2, 2) - 1);
    assert_eq!(d.required_inputs(), 2);
}

#[test]
fn mixed_term_matches_naive_product() {
    let (data, r) = random_data(50, 1, 11);
    let term: RegressorTerm = "y[k-1]u[k-2]e[k-1]".parse().unwrap();
    let col = evaluate_column(&term, &data, r.view(), 2..50).unwrap();
    let y = data.output().to_vec();
    let u = data.input(0).to_vec();
    let rv = r.to_vec();
    let signals: [&[f64]; 3] = [&y, &u, &rv];
    for (i, k) in (2..50).enumerate() {
        let expected = naive_monomial(&signals, &[(0, 1, 1), (1, 2, 1), (2, 1, 1)], k);
        assert_eq!(col[i], expected);
    }
}

#[test]
fn matrix_columns_equal_column_evaluation() {
    let (data, r) = random_data(40, 2, 3);
    let d = generate_polynomial_dictionary(2, &[1, 2], 2, 2).unwrap();
    let m = build_matrix(&d, &data, r.view()).unwrap();
    for (j, term) in d.terms().iter().enumerate() {
        let col = evaluate_column(term, &data, r.view(), m.start()..data.len()).unwrap();
        assert_eq!(m.column(j), col);
        assert_eq!(m.is_error_column(j), term.has_error());
    }
}

#[test]
fn narx_matrix_ignores_residual() {
    let (data, r) = random_data(30, 1, 5);
    let d = generate_polynomial_dictionary(3, &[3], 0, 2).unwrap();
    let a = build_matrix(&d, &data, r.view()).unwrap();
    let b = build_matrix(&d, &data, (&r * -7.0).view()).unwrap();
    assert_eq!(a.values(), b.values());
}

#[test]
fn generation_is_deterministic() {
    let a = generate_polynomial_dictionary(3, &[2], 2, 3).unwrap();
    let b = generate_polynomial_dictionary(3, &[2], 2, 3).unwrap();
    assert_eq!(a.term_names(), b.term_names());
}

fn arb_factor() -> impl Strategy<Value = Factor> {
    (0usize..4, 0usize..2, 1usize..6, 1u32..4).prop_map(|(kind, ch, lag, exp)| {
        let signal = match kind {
            0 => Signal::Output,
            1 => Signal::Input(ch),
            _ => Signal::Error,
        };
        Factor::new(signal, lag, exp)
    })
}

proptest! {
    #[test]
    fn counting_law(ny in 0usize..4, nu in 0usize..4, ne in 0usize..3, deg in 1u32..4) {
        prop_assume!(ny + nu + ne > 0);
        let d = generate_polynomial_dictionary(ny, &[nu], ne, deg).unwrap();
        let v = (ny + nu + ne) as u64;
        prop_assert_eq!(d.len() as u64, choose(v + deg as u64, deg as u64) - 1);
    }

    #[test]
    fn canonical_form_is_idempotent_and_parses_back(factors in prop::collection::vec(arb_factor(), 1..5)) {
        let t = RegressorTerm::new(factors).unwrap();
        let again = RegressorTerm::new(t.factors().iter().copied()).unwrap();
        prop_assert_eq!(&again, &t);
        let parsed: RegressorTerm = t.to_string().parse().unwrap();
        prop_assert_eq!(parsed, t);
    }

    #[test]
    fn factor_order_does_not_matter(mut factors in prop::collection::vec(arb_factor(), 1..5), seed in 0u64..1000) {
        let a = RegressorTerm::new(factors.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..factors.len()).rev() {
            factors.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(RegressorTerm::new(factors).unwrap(), a);
    }
}
