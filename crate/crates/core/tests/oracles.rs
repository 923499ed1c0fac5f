//! Library results checked against the independent implementations in `common`.

mod common;

use common::*;
use embedprobe::anomaly::{run_contamination_experiment, ContaminationSpec};
use embedprobe::discriminant::{evaluate, fit_lda};
use embedprobe::linalg::Dense;
use embedprobe::regress::{f_cdf, regress_indicator, regress_multi};
use embedprobe::stats::{fit_pca, ComponentBudget};

#[test]
fn oracle_self_check() {
    // Jacobi on a matrix with known spectrum.
    let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
    let (vals, vecs) = jacobi_eigen(&a);
    assert!((vals[0] - 5.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12 && (vals[2] - 1.0).abs() < 1e-12);
    assert!((vecs[1][0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
    // Stirling ln Γ against factorials.
    assert!((ln_gamma_stirling(6.0) - 120f64.ln()).abs() < 1e-13);
    assert!((ln_gamma_stirling(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    // F(2, 2) density integrates to x / (1 + x).
    assert!((f_cdf_quadrature(3.0, 2, 2) - 0.75).abs() < 1e-11);
}

#[test]
fn f_cdf_matches_quadrature() {
    assert!((f_cdf(1.0, 1, 1) - f_cdf_quadrature(1.0, 1, 1)).abs() < 1e-10);
    assert!((f_cdf_quadrature(1.0, 1, 1) - 0.5).abs() < 1e-10);
    assert!((f_cdf(2.0, 1, 2) - f_cdf_quadrature(2.0, 1, 2)).abs() < 1e-8);
}

#[test]
fn pca_matches_covariance_eigendecomposition() {
    let mut r = rng(3);
    let rows = gaussian_rows(&mut r, 40, 6);
    let model = fit_pca(&matrix(&rows), 6).unwrap();
    let (vals, mut vecs) = jacobi_eigen(&covariance(&rows));
    for k in 0..6 {
        assert!((model.explained_variance[k] - vals[k]).abs() < 1e-10);
        sign_fix(&mut vecs[k]);
        for j in 0..6 {
            assert!((model.components.get(k, j) - vecs[k][j]).abs() < 1e-8);
        }
    }
}

#[test]
fn multi_regression_matches_normal_equations() {
    let mut r = rng(17);
    let n = 200;
    let raw = gaussian_rows(&mut r, n, 2);
    // Gram–Schmidt the two centered columns so the scores are orthogonal.
    let mut c0: Vec<f64> = raw.iter().map(|v| v[0]).collect();
    let mut c1: Vec<f64> = raw.iter().map(|v| v[1]).collect();
    for c in [&mut c0, &mut c1] {
        let m = c.iter().sum::<f64>() / n as f64;
        c.iter_mut().for_each(|x| *x -= m);
    }
    let proj = c0.iter().zip(&c1).map(|(a, b)| a * b).sum::<f64>() / c0.iter().map(|a| a * a).sum::<f64>();
    for i in 0..n {
        c1[i] -= proj * c0[i];
    }
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![c0[i], c1[i]]).collect();
    let y: Vec<u8> = (0..n).map(|_| u8::from(normal(&mut r) > 0.0)).collect();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let rep = regress_multi(&Dense::from_rows(&x).unwrap(), &y).unwrap();
    assert!((rep.r_squared - normal_equations_r2(&x, &yf)).abs() < 1e-10);
    assert_eq!((rep.df_model, rep.df_resid), (2, n - 3));
}

fn two_gaussians(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut r = rng(seed);
    let c0 = (0..n).map(|_| vec![-5.0 + normal(&mut r), normal(&mut r)]).collect();
    let c1 = (0..n).map(|_| vec![5.0 + normal(&mut r), normal(&mut r)]).collect();
    (c0, c1)
}

fn stack(c0: &[Vec<f64>], c1: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<String>) {
    let rows: Vec<Vec<f64>> = c0.iter().chain(c1).cloned().collect();
    let labels = std::iter::repeat_n("a".to_string(), c0.len())
        .chain(std::iter::repeat_n("b".to_string(), c1.len()))
        .collect();
    (rows, labels)
}

#[test]
fn lda_two_gaussians_matches_fisher_direction() {
    let (c0, c1) = two_gaussians(1, 50);
    let (rows, labels) = stack(&c0, &c1);
    let model = fit_lda(&labeled(&rows, &labels), &labels, None).unwrap();
    assert_eq!(model.n_axes(), 1);
    let w = fisher_direction(&c0, &c1);
    assert!(cosine(model.discriminant_axes.row(0), &w).abs() > 0.999);

    let (t0, t1) = two_gaussians(2, 100);
    let (test, test_labels) = stack(&t0, &t1);
    let (acc, cm) = evaluate(&model, &labeled(&test, &test_labels), &test_labels).unwrap();
    assert_eq!(acc, 1.0);
    assert_eq!(cm.row_sums(), vec![100, 100]);

    // LD1 against the class indicator.
    let ld = model.transform(&labeled(&test, &test_labels), &[0]).unwrap();
    let ind: Vec<u8> = test_labels.iter().map(|l| u8::from(l == "b")).collect();
    assert!(regress_indicator(&ld.values.column(0), &ind).unwrap().r_squared > 0.95);
}

#[test]
fn binary_direction_matches_fisher_across_seeds() {
    for s in 0..10 {
        let mut r = rng(100 + s);
        let d = 5;
        let shift = random_unit(&mut r, d);
        let c0 = gaussian_rows(&mut r, 80, d);
        let c1: Vec<Vec<f64>> = gaussian_rows(&mut r, 80, d)
            .into_iter()
            .map(|v| v.iter().zip(&shift).map(|(a, b)| a + 3.0 * b).collect())
            .collect();
        let (rows, labels) = stack(&c0, &c1);
        let model = fit_lda(&labeled(&rows, &labels), &labels, None).unwrap();
        let w = fisher_direction(&c0, &c1);
        assert!(cosine(model.discriminant_axes.row(0), &w).abs() >= 0.999, "seed {s}");
    }
}

#[test]
fn wide_low_rank_lda_beats_chance() {
    let (d, rank, n) = (4096, 20, 400);
    let mut r = rng(5);
    let basis = gaussian_rows(&mut r, rank, d);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        for _ in 0..n {
            let z: Vec<f64> = (0..rank).map(|k| normal(&mut r) + if k == 0 { 3.0 * class as f64 } else { 0.0 }).collect();
            rows.push((0..d).map(|j| (0..rank).map(|k| z[k] * basis[k][j]).sum()).collect::<Vec<f64>>());
            labels.push(format!("c{class}"));
        }
    }
    let train: Vec<usize> = (0..2 * n).filter(|i| i % 5 != 0).collect();
    let test: Vec<usize> = (0..2 * n).filter(|i| i % 5 == 0).collect();
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<String>) {
        (idx.iter().map(|&i| rows[i].clone()).collect(), idx.iter().map(|&i| labels[i].clone()).collect())
    };
    let (tr, trl) = pick(&train);
    let (te, tel) = pick(&test);
    let model = fit_lda(&labeled(&tr, &trl), &trl, None).unwrap();
    assert!(model.within_rank <= rank);
    let (acc, _) = evaluate(&model, &labeled(&te, &tel), &tel).unwrap();
    // Latent classes are 3σ apart along one direction: nearest-mean accuracy is about Φ(1.5) ≈ 0.93.
    assert!(acc > 0.85, "accuracy {acc}");
}

#[test]
fn separable_margin_gives_perfect_accuracy_across_seeds() {
    for s in 0..20 {
        let mut r = rng(500 + s);
        let d = 3;
        let u = random_unit(&mut r, d);
        let make = |r: &mut _, off: f64| -> Vec<Vec<f64>> {
            gaussian_rows(r, 100, d).into_iter().map(|v| v.iter().zip(&u).map(|(a, b)| a + off * b).collect()).collect()
        };
        let (c0, c1) = (make(&mut r, -5.0), make(&mut r, 5.0));
        let (rows, labels) = stack(&c0, &c1);
        let model = fit_lda(&labeled(&rows, &labels), &labels, None).unwrap();
        let (t0, t1) = (make(&mut r, -5.0), make(&mut r, 5.0));
        let (test, tl) = stack(&t0, &t1);
        assert_eq!(evaluate(&model, &labeled(&test, &tl), &tl).unwrap().0, 1.0, "seed {s}");
    }
}

#[test]
fn lda_predictions_survive_rescaling() {
    let mut r = rng(77);
    let d = 4;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        for _ in 0..40 {
            rows.push((0..d).map(|j| normal(&mut r) + if j == c { 1.5 } else { 0.0 }).collect::<Vec<f64>>());
            labels.push(format!("k{c}"));
        }
    }
    let test = gaussian_rows(&mut r, 60, d);
    let base = fit_lda(&labeled(&rows, &labels), &labels, None).unwrap().predict(&matrix(&test)).unwrap();
    let f = |v: &Vec<f64>| v.iter().map(|x| 2.5 * x - 7.0).collect::<Vec<f64>>();
    let rows2: Vec<Vec<f64>> = rows.iter().map(f).collect();
    let test2: Vec<Vec<f64>> = test.iter().map(f).collect();
    let moved = fit_lda(&labeled(&rows2, &labels), &labels, None).unwrap().predict(&matrix(&test2)).unwrap();
    assert_eq!(base, moved);
}

#[test]
fn auroc_grows_with_shift_magnitude() {
    let d = 10;
    let mut r = rng(9);
    let reference = matrix(&gaussian_rows(&mut r, 300, d));
    let dir = random_unit(&mut r, d);
    let base = gaussian_rows(&mut r, 40, d);
    let mut means = Vec::new();
    let mags: Vec<f64> = (1..=10).map(|k| 0.6 * k as f64).collect();
    for &mag in &mags {
        let shifted: Vec<Vec<f64>> = base.iter().map(|v| v.iter().zip(&dir).map(|(a, b)| a + mag * b).collect()).collect();
        let spec = ContaminationSpec {
            n_reference: vec![100],
            m_contaminants: vec![3],
            n_pcs: ComponentBudget::Fixed(d),
            seeds: 20,
            max_trees: 100,
            subsample: None,
            standardize: true,
            fit_pca_on_reference_only: false,
            root_seed: 4,
        };
        let out = run_contamination_experiment(&reference, &matrix(&shifted), &spec).unwrap();
        means.push(out.cells[0].mean_auroc);
    }
    let rho = spearman(&mags, &means);
    assert!(rho > 0.9, "rho {rho}, means {means:?}");
}
