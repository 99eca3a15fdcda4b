mod common;

use common::*;
use proptest::prelude::*;
use spfq_core::linalg::{
    hadamard, orthonormal_columns, project_complement, project_onto, projection_product_norm,
    singular_extremes, singular_values, solve_dense, spectral_norm_power, symmetric_eigenvalues,
    DenseMatrix, ProjectionProduct,
};
use spfq_core::{RandomStream, SpfqError};

fn rows(x: &DenseMatrix) -> Mat {
    (0..x.rows()).map(|i| x.row(i).to_vec()).collect()
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut rng = RandomStream::new(1, 0);
    for (m, n) in [(6, 20), (20, 6), (5, 5), (1, 9)] {
        let x = rng.gaussian_matrix(m, n);
        let xr = rows(&x);
        let gram = if m <= n {
            mat_mul(&xr, &transpose(&xr))
        } else {
            mat_mul(&transpose(&xr), &xr)
        };
        let expected: Vec<f64> = jacobi_eigenvalues(&gram)
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        let got = singular_values(&x);
        assert_eq!(got.len(), m.min(n));
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-10 * expected[0], "{g} vs {e}");
        }
        let (s1, sm) = singular_extremes(&x);
        assert!((s1 - expected[0]).abs() <= 1e-10 * s1);
        assert!((sm - expected[expected.len() - 1]).abs() <= 1e-10 * s1);
        let power = spectral_norm_power(&x, 10_000, 1e-15);
        assert!((power - expected[0]).abs() <= 1e-6 * s1);
    }
}

#[test]
fn symmetric_eigenvalues_preserve_trace_and_frobenius() {
    let mut rng = RandomStream::new(2, 0);
    let g = rng.gaussian_matrix(7, 7);
    let a = g.add(&g.transpose()).unwrap();
    let ev = symmetric_eigenvalues(&a).unwrap();
    let trace: f64 = (0..7).map(|i| a[(i, i)]).sum();
    let fro2: f64 = a.data().iter().map(|v| v * v).sum();
    assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10);
    assert!((ev.iter().map(|v| v * v).sum::<f64>() - fro2).abs() < 1e-9);
    assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    let oracle = jacobi_eigenvalues(&rows(&a));
    for (x, y) in ev.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn projection_product_matches_explicit_matrices() {
    let mut rng = RandomStream::new(3, 0);
    for (m, n) in [(3, 5), (4, 12), (8, 30)] {
        let cols: Vec<Vec<f64>> = (0..n).map(|_| rng.gaussian_vec(m)).collect();
        let mut explicit = identity(m);
        for c in &cols {
            explicit = mat_mul(&complement(c), &explicit);
        }
        let pp = ProjectionProduct::new(cols).unwrap();
        let got = pp.to_matrix();
        for i in 0..m {
            for j in 0..m {
                assert!((got[(i, j)] - explicit[i][j]).abs() < 1e-12);
            }
        }
        let oracle = spectral_norm(&explicit);
        let power = projection_product_norm(&pp, 10_000, 1e-15);
        assert!(
            (power - oracle).abs() <= 1e-6 * oracle.max(1e-12),
            "{power} vs {oracle}"
        );
        assert!(power <= 1.0 + 1e-12);
    }
}

#[test]
fn projection_norm_is_nonincreasing_in_length() {
    let mut rng = RandomStream::new(4, 0);
    let mut pp = ProjectionProduct::new(vec![rng.gaussian_vec(5)]).unwrap();
    let mut prev = projection_product_norm(&pp, 5000, 1e-14);
    for _ in 0..40 {
        pp.push(rng.gaussian_vec(5)).unwrap();
        let cur = projection_product_norm(&pp, 5000, 1e-14);
        assert!(cur <= prev + 1e-9, "{cur} > {prev}");
        prev = cur;
    }
    assert!(matches!(
        pp.push(vec![0.0; 5]),
        Err(SpfqError::ZeroVector(_))
    ));
}

#[test]
fn hadamard_matrices() {
    for n in [1, 2, 4, 16, 64] {
        let h = hadamard(n).unwrap();
        let s = 1.0 / (n as f64).sqrt();
        assert!(h.data().iter().all(|&v| v == s || v == -s));
        let g = h.matmul(&h.transpose()).unwrap();
        assert!(g.sub(&DenseMatrix::identity(n)).unwrap().max_abs() < 1e-12);
    }
    for n in [0, 3, 12] {
        assert!(matches!(hadamard(n), Err(SpfqError::UnsupportedOrder(_))));
    }
}

#[test]
fn orthonormal_columns_span_the_input() {
    let mut rng = RandomStream::new(5, 0);
    let a = rng.gaussian_matrix(9, 4);
    let q = orthonormal_columns(&a).unwrap();
    let qtq = q.transpose().matmul(&q).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!((qtq[(i, j)] - f64::from(u8::from(i == j))).abs() < 1e-12);
        }
    }
    let back = q.matmul(&q.transpose().matmul(&a).unwrap()).unwrap();
    assert!(back.sub(&a).unwrap().max_abs() < 1e-12);
}

#[test]
fn dense_solve_matches_reference() {
    let mut rng = RandomStream::new(6, 0);
    let a = rng.gaussian_matrix(8, 8);
    let b = rng.gaussian_vec(8);
    let x = solve_dense(&a, &b).unwrap();
    let oracle = solve(&rows(&a), &b).unwrap();
    for (u, v) in x.iter().zip(&oracle) {
        assert!((u - v).abs() < 1e-9);
    }
}

fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #[test]
    fn complement_projection_properties(z in vec_strategy(6), x in vec_strategy(6)) {
        prop_assume!(norm(&z) > 1e-3);
        let p = project_complement(&z, &x).unwrap();
        let pp = project_complement(&z, &p).unwrap();
        let on = project_onto(&z, &x).unwrap();
        let scale = norm(&x).max(1.0);
        // idempotent, orthogonal to z, nonexpansive, and complementary
        prop_assert!(p.iter().zip(&pp).all(|(a, b)| (a - b).abs() <= 1e-12 * scale));
        let zp: f64 = z.iter().zip(&p).map(|(a, b)| a * b).sum();
        prop_assert!(zp.abs() <= 1e-11 * norm(&z) * scale);
        prop_assert!(norm(&p) <= norm(&x) * (1.0 + 1e-12) + 1e-12);
        prop_assert!(p.iter().zip(&on).zip(&x).all(|((a, b), c)| (a + b - c).abs() <= 1e-12 * scale));
    }

    #[test]
    fn projection_product_is_contractive(seed in 0u64..500, n in 1usize..20, x in vec_strategy(4)) {
        let mut rng = RandomStream::new(seed, 9);
        let pp = ProjectionProduct::new((0..n).map(|_| rng.gaussian_vec(4)).collect()).unwrap();
        prop_assert!(norm(&pp.apply(&x)) <= norm(&x) * (1.0 + 1e-12) + 1e-12);
    }
}
