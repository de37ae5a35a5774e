use super::*;
use crate::prng::RngStream;
use proptest::prelude::*;

fn planar(points: &[([f64; 2], usize)]) -> Dataset {
    let inputs = points.iter().flat_map(|p| p.0).collect();
    let labels = points.iter().map(|p| p.1).collect();
    Dataset::new("t", 2, 2, inputs, labels).unwrap()
}

#[test]
fn param_count_and_partitions() {
    let spec = NetworkSpec::binary(2, 20);
    assert_eq!(spec.param_count(), 2 * 20 + 20 + 21);
    assert_eq!(spec.partition_sizes(), [60, 21]);
    let spec = NetworkSpec::softmax(784, 30, 10);
    let [a, b] = spec.partition_sizes();
    assert_eq!(a + b, spec.param_count());
}

#[test]
fn zero_init_is_zero_vector() {
    let spec = NetworkSpec::binary(3, 7);
    let p = init_params(spec, InitScheme::Zeros, &mut RngStream::new(0)).unwrap();
    assert_eq!(p.as_slice(), vec![0.0; spec.param_count()].as_slice());
}

#[test]
fn gaussian_init_std() {
    let spec = NetworkSpec::binary(2, 500);
    let p = init_params(spec, InitScheme::Gaussian(0.01), &mut RngStream::new(4)).unwrap();
    let w = p.w1();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let std = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((std - 0.01).abs() < 0.0005, "std {std}");
}

#[test]
fn fan_in_uniform_bounds() {
    let spec = NetworkSpec::binary(2, 50);
    let p = init_params(spec, InitScheme::FanInUniform, &mut RngStream::new(4)).unwrap();
    let b = 1.0 / 2f64.sqrt();
    assert!(p.partition(0).iter().all(|v| v.abs() <= b));
    let b2 = 1.0 / 50f64.sqrt();
    assert!(p.partition(1).iter().all(|v| v.abs() <= b2));
    assert!(p.partition(0).iter().any(|v| v.abs() > b2));
}

#[test]
fn forward_zero_params() {
    let spec = NetworkSpec::binary(2, 4);
    let p = PartitionedParams::zeros(spec);
    assert_eq!(forward(&p, &[3.0, -1.0]).probabilities, vec![0.5]);
    let spec = NetworkSpec::softmax(3, 4, 10);
    let p = PartitionedParams::zeros(spec);
    for v in forward(&p, &[1.0, 2.0, 3.0]).probabilities {
        assert!((v - 0.1).abs() < 1e-15);
    }
}

#[test]
fn forward_scalar_arithmetic() {
    let spec = NetworkSpec::binary(1, 1);
    let p = PartitionedParams::from_parts(spec, &[1.0], &[0.0], &[2.0], &[-1.0]).unwrap();
    assert_eq!(hidden_activations(&spec, p.as_slice(), &[0.5]), vec![0.5]);
    assert_eq!(forward(&p, &[0.5]).probabilities, vec![0.5]);
}

#[test]
fn loss_reference_values() {
    let spec = NetworkSpec::binary(2, 3);
    let theta = vec![0.0; spec.param_count()];
    let d = planar(&[([1.0, 2.0], 1), ([0.0, -1.0], 0), ([5.0, 5.0], 1)]);
    assert!((loss(&spec, &theta, &d, &[0, 1, 2]) - 2f64.ln()).abs() < 1e-15);

    // A confident correct prediction is clamped at 1 - 1e-12.
    let spec1 = NetworkSpec::binary(1, 1);
    let p = PartitionedParams::from_parts(spec1, &[0.0], &[0.0], &[0.0], &[1000.0]).unwrap();
    let d1 = Dataset::new("t", 1, 2, vec![0.0], vec![1]).unwrap();
    let l = loss(&spec1, p.as_slice(), &d1, &[0]);
    assert!((l - 1e-12).abs() < 1e-15, "loss {l}");

    let spec = NetworkSpec::softmax(2, 3, 10);
    let theta = vec![0.0; spec.param_count()];
    let d = Dataset::new("t", 2, 10, vec![1.0, 1.0, 2.0, 0.0], vec![3, 9]).unwrap();
    assert!((loss(&spec, &theta, &d, &[0, 1]) - 10f64.ln()).abs() < 1e-14);
}

#[test]
fn gradient_at_zero_point() {
    let spec = NetworkSpec::binary(2, 3);
    let theta = vec![0.0; spec.param_count()];
    let d = planar(&[([0.7, -0.2], 1)]);
    let g = neg_grad(&spec, &theta, &d, &[0]);
    assert_eq!(g[spec.b2_range()], [0.5]);
    assert!(g[spec.w2_range()].iter().all(|&v| v == 0.0));
    // ReLU derivative at 0 is 0, so the hidden layer receives nothing.
    assert!(g[spec.partitions()[0].clone()].iter().all(|&v| v == 0.0));
}

#[test]
fn duplicated_batch_matches_single() {
    let spec = NetworkSpec::binary(2, 5);
    let p = init_params(spec, InitScheme::Gaussian(0.5), &mut RngStream::new(3)).unwrap();
    let d = planar(&[([0.3, 0.9], 1), ([-0.4, 0.1], 0)]);
    let single = neg_grad(&spec, p.as_slice(), &d, &[1]);
    let double = neg_grad(&spec, p.as_slice(), &d, &[1, 1]);
    for (a, b) in single.iter().zip(&double) {
        assert!((a - b).abs() < 1e-15);
    }
}

/// Central differences of the mean loss, step `eps`.
fn finite_difference(spec: &NetworkSpec, theta: &[f64], d: &Dataset, idx: &[usize], eps: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            let orig = t[k];
            t[k] = orig + eps;
            let up = loss(spec, &t, d, idx);
            t[k] = orig - eps;
            let down = loss(spec, &t, d, idx);
            t[k] = orig;
            -(up - down) / (2.0 * eps)
        })
        .collect()
}

#[test]
fn backprop_matches_finite_differences() {
    let mut s = RngStream::new(17);
    let mut checked = 0;
    while checked < 25 {
        let spec = if checked % 2 == 0 {
            NetworkSpec::binary(2, 6)
        } else {
            NetworkSpec::softmax(3, 5, 4)
        };
        let p = init_params(spec, InitScheme::Gaussian(0.8), &mut s).unwrap();
        let n = 8;
        let inputs: Vec<f64> = (0..n * spec.inputs).map(|_| s.next_normal()).collect();
        let labels: Vec<usize> = (0..n).map(|_| s.next_below(spec.classes() as u64) as usize).collect();
        let d = Dataset::new("fd", spec.inputs, spec.classes(), inputs, labels).unwrap();
        let idx: Vec<usize> = (0..n).collect();
        let smooth = idx.iter().all(|&i| {
            let mut ws = Workspace::new(&spec);
            forward_ws(&spec, p.as_slice(), d.input(i), &mut ws);
            ws.pre.iter().all(|a| a.abs() >= 1e-3)
        });
        if !smooth {
            continue;
        }
        let bp = neg_grad(&spec, p.as_slice(), &d, &idx);
        let fd = finite_difference(&spec, p.as_slice(), &d, &idx, 1e-5);
        for (a, b) in bp.iter().zip(&fd) {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-4);
            assert!(rel <= 1e-5, "backprop {a} vs fd {b}");
        }
        checked += 1;
    }
}

#[test]
fn l2_penalty_gradient() {
    let mut spec = NetworkSpec::binary(2, 4);
    spec.l2 = 0.3;
    let p = init_params(spec, InitScheme::Gaussian(0.5), &mut RngStream::new(2)).unwrap();
    let d = planar(&[([0.3, 0.9], 1), ([-0.4, 0.1], 0)]);
    let bp = neg_grad(&spec, p.as_slice(), &d, &[0, 1]);
    let fd = finite_difference(&spec, p.as_slice(), &d, &[0, 1], 1e-5);
    for (a, b) in bp.iter().zip(&fd) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn accuracy_tie_and_complement() {
    let spec = NetworkSpec::binary(2, 3);
    let theta = vec![0.0; spec.param_count()];
    let d = planar(&[([1.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 1.0], 0), ([2.0, 2.0], 0)]);
    assert_eq!(accuracy(&spec, &theta, &d), 0.75);

    let p = init_params(spec, InitScheme::Gaussian(1.0), &mut RngStream::new(5)).unwrap();
    let a = accuracy(&spec, p.as_slice(), &d);
    let flipped = accuracy(&spec, p.as_slice(), &d.with_flipped_labels());
    assert!((a + flipped - 1.0).abs() < 1e-15);

    // Labels equal to the model's own predictions.
    let own: Vec<usize> = (0..d.len())
        .map(|i| forward(&p, d.input(i)).class())
        .collect();
    let d_own = Dataset::new("own", 2, 2, d.inputs().to_vec(), own).unwrap();
    assert_eq!(accuracy(&spec, p.as_slice(), &d_own), 1.0);
}

#[test]
fn posterior_mean_cases() {
    let spec = NetworkSpec::binary(1, 1);
    assert!(posterior_mean_predict(&[], &[0.0]).is_err());
    let p = init_params(spec, InitScheme::Gaussian(1.0), &mut RngStream::new(1)).unwrap();
    assert_eq!(
        posterior_mean_predict(std::slice::from_ref(&p), &[0.3]).unwrap(),
        forward(&p, &[0.3])
    );
    // Output biases chosen so the sigmoid gives 0.2 and 0.8.
    let logit = |q: f64| (q / (1.0 - q)).ln();
    let a = PartitionedParams::from_parts(spec, &[0.0], &[0.0], &[0.0], &[logit(0.2)]).unwrap();
    let b = PartitionedParams::from_parts(spec, &[0.0], &[0.0], &[0.0], &[logit(0.8)]).unwrap();
    let m = posterior_mean_predict(&[a, b], &[1.0]).unwrap();
    assert!((m.probabilities[0] - 0.5).abs() < 1e-15);
}

#[test]
fn snapshot_rejects_bad_payload() {
    let spec = NetworkSpec::binary(2, 3);
    let p = PartitionedParams::zeros(spec);
    let mut bytes = encode_snapshot(&p);
    bytes.pop();
    assert!(decode_snapshot(&bytes).is_err());
    assert!(decode_snapshot(&[0u8; 10]).is_err());
}

proptest! {
    #[test]
    fn softmax_sums_to_one(seed in any::<u64>(), scale in 0.0f64..20.0) {
        let spec = NetworkSpec::softmax(3, 4, 6);
        let p = init_params(spec, InitScheme::Gaussian(scale), &mut RngStream::new(seed)).unwrap();
        let probs = forward(&p, &[0.5, -1.0, 2.0]).probabilities;
        let total: f64 = probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(probs.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn relu_positive_homogeneity(seed in any::<u64>(), lambda in 0.01f64..50.0) {
        let spec = NetworkSpec::binary(2, 8);
        let mut p = init_params(spec, InitScheme::Gaussian(1.0), &mut RngStream::new(seed)).unwrap();
        for k in spec.b1_range() {
            p.as_mut_slice()[k] = 0.0;
        }
        let x = [0.7, -1.3];
        let z = hidden_activations(&spec, p.as_slice(), &x);
        let zs = hidden_activations(&spec, p.as_slice(), &[lambda * x[0], lambda * x[1]]);
        for (a, b) in z.iter().zip(&zs) {
            prop_assert!((lambda * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn flat_structured_round_trip(seed in any::<u64>(), m in 1usize..5, d in 1usize..6, n in 1usize..4) {
        let spec = NetworkSpec::from_dims(m, d, n);
        let p = init_params(spec, InitScheme::Gaussian(1.0), &mut RngStream::new(seed)).unwrap();
        let rebuilt = PartitionedParams::from_parts(spec, p.w1(), p.b1(), p.w2(), p.b2()).unwrap();
        prop_assert_eq!(&rebuilt, &p);
        let decoded = decode_snapshot(&encode_snapshot(&p)).unwrap();
        prop_assert_eq!(decoded, p);
    }
}
