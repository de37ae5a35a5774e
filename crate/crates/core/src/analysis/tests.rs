use proptest::prelude::*;

use super::*;
use crate::data::{generate_spiral, SpiralSpec};
use crate::model::{forward_flat, init_params, loss, InitScheme};

fn half_norm_sq(t: &[f64]) -> f64 {
    0.5 * t.iter().map(|v| v * v).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn grid_is_exact_at_both_ends() {
    let g = unit_grid(7);
    assert_eq!(g[0], 0.0);
    assert_eq!(g[6], 1.0);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn curve_endpoints_and_degenerate_segment() {
    let spec = NetworkSpec::binary(2, 6);
    let data = generate_spiral(&SpiralSpec { n_per_class: 40, ..Default::default() }, &mut RngStream::new(1)).unwrap();
    let all: Vec<usize> = (0..data.len()).collect();
    let mut s = RngStream::new(2);
    let a = init_params(spec, InitScheme::Gaussian(0.5), &mut s).unwrap();
    let b = init_params(spec, InitScheme::Gaussian(0.5), &mut s).unwrap();
    let f = |t: &[f64]| loss(&spec, t, &data, &all);
    let curve = interpolate_1d(a.as_slice(), b.as_slice(), f, DEFAULT_CURVE_POINTS).unwrap();
    assert_eq!(curve.losses[0], f(a.as_slice()));
    assert_eq!(curve.losses[100], f(b.as_slice()));
    assert_eq!(curve.start_hash, params_hash(a.as_slice()));
    assert_ne!(curve.start_hash, curve.end_hash);

    let flat = interpolate_1d(a.as_slice(), a.as_slice(), f, 11).unwrap();
    assert!(flat.losses.iter().all(|&l| l == flat.losses[0]));
    assert_eq!(flat.barrier(), 0.0);
}

#[test]
fn curve_rejects_bad_input() {
    let f = |_: &[f64]| 0.0;
    assert!(matches!(
        interpolate_1d(&[0.0; 3], &[0.0; 4], f, 5),
        Err(Error::ShapeMismatch { .. })
    ));
    assert!(interpolate_1d(&[0.0; 3], &[0.0; 3], f, 1).is_err());
}

#[test]
fn quadratic_curve_matches_closed_form() {
    let a: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).cos() * 2.0).collect();
    let b: Vec<f64> = (0..9).map(|i| (i as f64 * 1.3).sin() - 0.5).collect();
    let curve = interpolate_1d(&a, &b, half_norm_sq, DEFAULT_CURVE_POINTS).unwrap();
    let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
    for (&t, &l) in curve.alphas.iter().zip(&curve.losses) {
        let exact = 0.5 * ((1.0 - t) * (1.0 - t) * aa + 2.0 * t * (1.0 - t) * ab + t * t * bb);
        assert!((l - exact).abs() <= 1e-12);
    }
    for w in curve.losses.windows(3) {
        assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-10);
    }
}

#[test]
fn barrier_of_a_bump() {
    let curve = LossCurve {
        alphas: vec![0.0, 0.5, 1.0],
        losses: vec![1.0, 3.0, 2.0],
        start_hash: 0,
        end_hash: 0,
    };
    assert_eq!(curve.barrier(), 1.0);
    assert_eq!(curve.to_csv(), "alpha,loss\n0,1\n0.5,3\n1,2\n");
}

#[test]
fn surface_identities() {
    let t0 = [0.3, -0.7, 1.1];
    let f1 = [1.0, 2.0, -3.0];
    let f2 = [-0.4, 0.25, 0.9];
    let loss_fn = |t: &[f64]| t[0] * 1.7 + t[1] * t[1] - (t[2] * 0.3).sin();
    let s = surface_2d(&t0, &f1, &f2, loss_fn, 9, 7).unwrap();
    assert!(s.losses[0].iter().all(|&l| l == loss_fn(&t0)));
    assert_eq!(s.losses[8][6], loss_fn(&f1));
    assert_eq!(s.losses[8][0], loss_fn(&f2));

    let same = surface_2d(&t0, &f1, &f1, loss_fn, 5, 6).unwrap();
    for row in &same.losses {
        assert!(row.iter().all(|&l| l == row[0]));
    }
    assert!(surface_2d(&t0, &f1, &f2[..2], loss_fn, 3, 3).is_err());
    assert!(surface_2d(&t0, &f1, &f2, loss_fn, 3, 1).is_err());
    assert_eq!(s.to_csv().lines().count(), 1 + 9 * 7);
}

fn square() -> Bounds {
    Bounds {
        x_min: -1.0,
        x_max: 1.0,
        y_min: -2.0,
        y_max: 2.0,
    }
}

#[test]
fn zero_network_is_undecided_everywhere() {
    let p = PartitionedParams::zeros(NetworkSpec::binary(2, 5));
    let g = classifier_grid(&p, square(), 8).unwrap();
    assert!(g.values.iter().flatten().all(|&v| v == 0.5));
    let pgm = g.to_pgm();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
    assert_eq!(pgm.len(), b"P5\n8 8\n255\n".len() + 64);
}

#[test]
fn grid_matches_forward_pointwise() {
    let spec = NetworkSpec::binary(2, 7);
    let p = init_params(spec, InitScheme::Gaussian(1.0), &mut RngStream::new(3)).unwrap();
    let single = classifier_grid(&p, square(), 1).unwrap();
    assert_eq!(single.coordinate(0, 0), [0.0, 0.0]);
    assert_eq!(single.values[0][0], forward_flat(&spec, p.as_slice(), &[0.0, 0.0]).probabilities[0]);

    let g = classifier_grid(&p, square(), 16).unwrap();
    for r in [0, 5, 15] {
        for c in [0, 9, 15] {
            let x = g.coordinate(r, c);
            assert_eq!(g.values[r][c], forward_flat(&spec, p.as_slice(), &x).probabilities[0]);
        }
    }
    assert_eq!(g.coordinate(0, 0), [-1.0 + 1.0 / 16.0, -2.0 + 2.0 / 16.0]);
}

#[test]
fn softmax_grid_reports_class_one() {
    let spec = NetworkSpec::softmax(2, 4, 2);
    let p = init_params(spec, InitScheme::Gaussian(1.0), &mut RngStream::new(4)).unwrap();
    let g = classifier_grid(&p, square(), 3).unwrap();
    let x = g.coordinate(1, 2);
    assert_eq!(g.values[1][2], forward_flat(&spec, p.as_slice(), &x).probabilities[1]);
}

#[test]
fn grid_requires_planar_model() {
    let p = PartitionedParams::zeros(NetworkSpec::binary(3, 5));
    assert!(classifier_grid(&p, square(), 4).is_err());
}

#[test]
fn kinetic_temperature_basics() {
    assert_eq!(kinetic_temperature(&[0.0; 5], &[2, 3]), vec![0.0, 0.0]);
    let tau: f64 = 3e-4;
    let p = vec![tau.sqrt(); 6];
    for t in kinetic_temperature(&p, &[4, 2]) {
        assert!((t - tau).abs() < 1e-18);
    }
    assert_eq!(kinetic_temperature(&[1.0, 1.0], &[2, 0]), vec![1.0, 0.0]);
}

proptest! {
    #[test]
    fn kinetic_temperature_ignores_order_within_blocks(
        p in proptest::collection::vec(-3.0f64..3.0, 2..24),
        cut_seed in 0usize..1000,
        shuffle_seed in any::<u64>(),
    ) {
        let q = p.len();
        let cut = cut_seed % (q + 1);
        let mut permuted = p.clone();
        let mut s = RngStream::new(shuffle_seed);
        for block in [0..cut, cut..q] {
            let slice = &mut permuted[block];
            for k in (1..slice.len()).rev() {
                slice.swap(k, s.next_below(k as u64 + 1) as usize);
            }
        }
        let a = kinetic_temperature(&p, &[cut, q - cut]);
        let b = kinetic_temperature(&permuted, &[cut, q - cut]);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn full_batch_noise_is_zero() {
    let spec = NetworkSpec::binary(2, 4);
    let data = generate_spiral(&SpiralSpec { n_per_class: 20, ..Default::default() }, &mut RngStream::new(1)).unwrap();
    let p = init_params(spec, InitScheme::Gaussian(0.3), &mut RngStream::new(2)).unwrap();
    let mut s = RngStream::new(3);
    let est = estimate_gradient_noise(&spec, p.as_slice(), &data, 1.0, 10, &mut s).unwrap();
    assert_eq!(est, NoiseEstimate { sigma2: 0.0, full_batch: true });
    assert_eq!(s.draws(), 0);
    assert!(estimate_gradient_noise(&spec, p.as_slice(), &data, 0.1, 1, &mut s).is_err());
}

#[test]
fn duplicated_samples_give_no_noise() {
    let spec = NetworkSpec::binary(2, 4);
    let data = Dataset::new("dup", 2, 2, [0.3, -0.8].repeat(50), vec![1; 50]).unwrap();
    let p = init_params(spec, InitScheme::Gaussian(0.3), &mut RngStream::new(2)).unwrap();
    let est = estimate_gradient_noise(&spec, p.as_slice(), &data, 0.1, 50, &mut RngStream::new(5)).unwrap();
    assert!(!est.full_batch);
    assert!(est.sigma2 < 1e-28, "{}", est.sigma2);
}

#[test]
fn subsampled_noise_is_positive() {
    let spec = NetworkSpec::binary(2, 4);
    let data = generate_spiral(&SpiralSpec { n_per_class: 50, ..Default::default() }, &mut RngStream::new(1)).unwrap();
    let p = init_params(spec, InitScheme::Gaussian(0.5), &mut RngStream::new(2)).unwrap();
    let small = estimate_gradient_noise(&spec, p.as_slice(), &data, 0.05, 400, &mut RngStream::new(6)).unwrap();
    let large = estimate_gradient_noise(&spec, p.as_slice(), &data, 0.5, 400, &mut RngStream::new(6)).unwrap();
    assert!(small.sigma2 > large.sigma2 && large.sigma2 > 0.0);
}

#[test]
fn known_variance_is_recovered() {
    let s2: f64 = 0.04;
    let base: Vec<f64> = (0..50).map(|i| i as f64 * 0.1 - 2.0).collect();
    let mut acc = ComponentVariance::new(base.len());
    let mut rng = RngStream::new(77);
    let mut sample = vec![0.0; base.len()];
    for _ in 0..10_000 {
        for (x, b) in sample.iter_mut().zip(&base) {
            *x = b + s2.sqrt() * rng.next_normal();
        }
        acc.push(&sample);
    }
    assert_eq!(acc.count(), 10_000);
    assert!((acc.mean_variance() / s2 - 1.0).abs() < 0.03);
}

#[test]
fn effective_temperature_arithmetic() {
    assert_eq!(effective_temperature(0.3, 0.0, 2.0, 1e-4).unwrap(), 1e-4);
    assert!((effective_temperature(0.1, 1.0, 0.5, 1e-4).unwrap() - 0.1001).abs() < 1e-15);
    let a = effective_temperature(0.05, 2.5, 0.7, 1e-3).unwrap();
    let b = effective_temperature(0.1, 2.5, 1.4, 1e-3).unwrap();
    assert!((a - b).abs() < 1e-15);
    assert!(effective_temperature(0.1, 1.0, 0.0, 1e-4).is_err());
}

#[test]
fn histogram_of_zero_params() {
    let p = PartitionedParams::zeros(NetworkSpec::binary(2, 5));
    let h = weight_histogram(&p, ParamGroup::W1, &[-1.0, -0.5, 0.0, 0.5, 1.0]).unwrap();
    assert_eq!(h.counts, vec![0, 0, 0, 10, 0, 0]);
    assert_eq!(h.bin_range(3), 0.0..0.5);
    assert_eq!(h.bin_range(0).start, f64::NEG_INFINITY);
    assert!(weight_histogram(&p, ParamGroup::B1, &[0.0, 0.0]).is_err());
    assert!(weight_histogram(&p, ParamGroup::B1, &[]).is_err());
}

#[test]
fn histogram_counts_out_of_range_values() {
    let h = histogram(&[-5.0, 0.1, 0.2, 7.0, 1.0], &[0.0, 1.0]).unwrap();
    assert_eq!(h.counts, vec![1, 2, 2]);
    assert_eq!(h.to_csv(), "lower,upper,count\n-inf,0,1\n0,1,2\n1,inf,2\n");
}

#[test]
fn gaussian_weights_fill_two_sigma_band() {
    let spec = NetworkSpec::binary(2, 500);
    let p = init_params(spec, InitScheme::Gaussian(0.01), &mut RngStream::new(12)).unwrap();
    for group in [ParamGroup::W1, ParamGroup::B1, ParamGroup::W2] {
        let h = weight_histogram(&p, group, &[-0.02, 0.02]).unwrap();
        assert_eq!(h.total() as usize, p.group(group).len());
        let inside = h.counts[1] as f64 / h.total() as f64;
        assert!((inside - 0.9545).abs() < 0.02, "{group:?}: {inside}");
    }
}
