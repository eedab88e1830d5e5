use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use semsketch_core::tsne::{self, Affinities, TsneParams};

fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random symmetric, zero-diagonal, unit-sum P.
fn random_joint(rng: &mut StdRng, m: usize) -> Vec<f64> {
    let mut p = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let v: f64 = rng.random_range(0.01..1.0);
            p[i * m + j] = v;
            p[j * m + i] = v;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// KL(P || Q) written out from scratch (Q = normalized Student-t kernel).
fn kl_oracle(p: &[f64], y: &[f64], m: usize, d: usize) -> f64 {
    let mut w = vec![0.0; m * m];
    let mut z = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let sq: f64 = (0..d).map(|k| (y[i * d + k] - y[j * d + k]).powi(2)).sum();
                w[i * m + j] = 1.0 / (1.0 + sq);
                z += w[i * m + j];
            }
        }
    }
    let mut kl = 0.0;
    for idx in 0..m * m {
        if p[idx] > 0.0 {
            kl += p[idx] * (p[idx] / (w[idx] / z)).ln();
        }
    }
    kl
}

fn finite_difference(p: &[f64], y: &[f64], m: usize, d: usize, h: f64) -> Vec<f64> {
    let mut g = vec![0.0; y.len()];
    let mut yy = y.to_vec();
    for k in 0..y.len() {
        yy[k] = y[k] + h;
        let up = kl_oracle(p, &yy, m, d);
        yy[k] = y[k] - h;
        let down = kl_oracle(p, &yy, m, d);
        yy[k] = y[k];
        g[k] = (up - down) / (2.0 * h);
    }
    g
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

#[test]
fn gradient_matches_finite_differences_m10() {
    let mut rng = StdRng::seed_from_u64(10);
    let p = random_joint(&mut rng, 10);
    let y = random_matrix(&mut rng, 10, 2);
    let g = tsne::gradient(&p, &y, 10, 2).unwrap();
    let fd = finite_difference(&p, &y, 10, 2, 1e-5);
    let err = relative_error(&g, &fd);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn kl_matches_oracle() {
    let mut rng = StdRng::seed_from_u64(11);
    let p = random_joint(&mut rng, 12);
    let y = random_matrix(&mut rng, 12, 3);
    let kl = tsne::kl_divergence(&p, &y, 12, 3).unwrap();
    assert!((kl - kl_oracle(&p, &y, 12, 3)).abs() < 1e-12);
}

#[test]
fn scaled_layout_gradient_equals_fresh_evaluation() {
    let mut rng = StdRng::seed_from_u64(12);
    let p = random_joint(&mut rng, 8);
    let y = random_matrix(&mut rng, 8, 2);
    let scaled: Vec<f64> = y.iter().map(|v| v * 3.0).collect();
    let g = tsne::gradient(&p, &scaled, 8, 2).unwrap();
    let fd = finite_difference(&p, &scaled, 8, 2, 1e-5);
    assert!(relative_error(&g, &fd) < 1e-4);
    // and it is not simply a rescaled copy of the unscaled gradient
    let g0 = tsne::gradient(&p, &y, 8, 2).unwrap();
    assert!(relative_error(&g, &g0.iter().map(|v| v * 3.0).collect::<Vec<_>>()) > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_agrees_with_finite_differences(seed in any::<u64>(), m in 4usize..=20, d in 2usize..=3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_joint(&mut rng, m);
        let y = random_matrix(&mut rng, m, d);
        let g = tsne::gradient(&p, &y, m, d).unwrap();
        let fd = finite_difference(&p, &y, m, d, 1e-5);
        prop_assert!(relative_error(&g, &fd) < 1e-4);
    }

    #[test]
    fn affinity_rows_hit_entropy(seed in any::<u64>(), m in 6usize..=30, perplexity in 1.5f64..5.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let pts = random_matrix(&mut rng, m, 5);
        let a = tsne::compute_affinities(&pts, 5, perplexity).unwrap();
        for i in 0..m {
            let row = &a.conditional()[i * m..(i + 1) * m];
            let h: f64 = -row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>();
            prop_assert!((h - perplexity.log2()).abs() < 1e-3);
            prop_assert_eq!(row[i], 0.0);
        }
        let p = a.joint();
        let mut total = 0.0;
        for i in 0..m {
            prop_assert_eq!(p[i * m + i], 0.0);
            for j in 0..m {
                prop_assert!(p[i * m + j] >= 0.0);
                prop_assert!((p[i * m + j] - p[j * m + i]).abs() < 1e-12);
                total += p[i * m + j];
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

fn two_clusters() -> (Vec<f64>, usize) {
    let mut rng = StdRng::seed_from_u64(99);
    let width = 5;
    let mut pts = Vec::new();
    for cluster in 0..2 {
        let centre = if cluster == 0 { -5.0 } else { 5.0 };
        for _ in 0..10 {
            for _ in 0..width {
                pts.push(centre + rng.random_range(-0.5..0.5));
            }
        }
    }
    (pts, width)
}

fn quick_params(seed: u64) -> TsneParams {
    TsneParams { perplexity: 5.0, seed, ..TsneParams::default() }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let (pts, w) = two_clusters();
    let a = tsne::compute_affinities(&pts, w, 5.0).unwrap();
    let first = tsne::optimize(&a, 2, &quick_params(7)).unwrap();
    let second = tsne::optimize(&a, 2, &quick_params(7)).unwrap();
    assert!(first.iter().zip(&second).all(|(x, y)| x.to_bits() == y.to_bits()));
    let other = tsne::optimize(&a, 2, &quick_params(8)).unwrap();
    assert_ne!(first, other);
}

#[test]
fn two_clusters_separate() {
    let (pts, w) = two_clusters();
    for d in [2, 3] {
        let out = tsne::embed(&pts, w, d, &quick_params(3)).unwrap();
        let y = &out.coords;
        let dist =
            |i: usize, j: usize| -> f64 { (0..d).map(|k| (y[i * d + k] - y[j * d + k]).powi(2)).sum::<f64>().sqrt() };
        let (mut max_intra, mut min_inter) = (0.0_f64, f64::INFINITY);
        for i in 0..20 {
            for j in (i + 1)..20 {
                if (i < 10) == (j < 10) {
                    max_intra = max_intra.max(dist(i, j));
                } else {
                    min_inter = min_inter.min(dist(i, j));
                }
            }
        }
        assert!(min_inter > max_intra, "d={d}: inter {min_inter} intra {max_intra}");
        assert!(out.final_kl < out.initial_kl);
        assert!(y.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn kl_decreases_against_the_initial_layout() {
    let mut rng = StdRng::seed_from_u64(5);
    let pts = random_matrix(&mut rng, 25, 8);
    let params = TsneParams { perplexity: 6.0, seed: 1, ..TsneParams::default() };
    let a = tsne::compute_affinities(&pts, 8, 6.0).unwrap();
    let init = tsne::initial_layout(25, 2, params.seed);
    let before = kl_oracle(a.joint(), &init, 25, 2);
    let y = tsne::optimize(&a, 2, &params).unwrap();
    assert!(kl_oracle(a.joint(), &y, 25, 2) < before);
}

#[test]
fn external_joint_matrix_is_validated() {
    let mut rng = StdRng::seed_from_u64(1);
    let p = random_joint(&mut rng, 5);
    assert!(Affinities::from_joint(5, p.clone()).is_ok());
    let mut asym = p.clone();
    asym[1] += 0.01;
    assert!(Affinities::from_joint(5, asym).is_err());
    assert!(Affinities::from_joint(4, p).is_err());
}
