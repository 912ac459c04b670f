use super::*;

fn t64(shape: &[usize], v: &[f64]) -> Tensor<f64> {
    Tensor::from_f64(shape, v).unwrap()
}

#[test]
fn conv_of_ones_sums_patch() {
    let mut store = ParamStore::new();
    let w = store.add("w", Tensor::<f32>::full(&[1, 1, 3, 3, 3], 1.0));
    let b = store.add("b", Tensor::<f32>::zeros(&[1]));
    let mut tape = Tape::new();
    let x = tape.input(Tensor::full(&[1, 1, 3, 3, 3], 1.0));
    let (w, b) = (tape.param(&store, w), tape.param(&store, b));
    let y = tape.conv3d(x, w, b).unwrap();
    assert_eq!(tape.value(y).shape(), &[1, 1, 1, 1, 1]);
    assert_eq!(tape.value(y).data()[0], 27.0);
}

#[test]
fn conv_shrinks_segment_by_two() {
    let mut tape = Tape::<f32>::new();
    let x = tape.input(Tensor::zeros(&[1, 1, 27, 27, 27]));
    let w = tape.input(Tensor::zeros(&[2, 1, 3, 3, 3]));
    let b = tape.input(Tensor::zeros(&[2]));
    let y = tape.conv3d(x, w, b).unwrap();
    assert_eq!(tape.value(y).shape(), &[1, 2, 25, 25, 25]);
}

#[test]
fn conv_shape_errors_name_the_dimension() {
    let mut tape = Tape::<f32>::new();
    let x = tape.input(Tensor::zeros(&[1, 2, 4, 2, 4]));
    let w = tape.input(Tensor::zeros(&[1, 2, 3, 3, 3]));
    let b = tape.input(Tensor::zeros(&[1]));
    let err = tape.conv3d(x, w, b).unwrap_err().to_string();
    assert!(err.contains("height"), "{err}");

    let w = tape.input(Tensor::zeros(&[1, 3, 1, 1, 1]));
    let err = tape.conv3d(x, w, b).unwrap_err().to_string();
    assert!(err.contains("channels"), "{err}");
}

#[test]
fn prelu_branches() {
    let mut tape = Tape::new();
    let x = tape.variable(t64(&[1, 1, 3], &[5.0, -2.0, 0.0]));
    let a = tape.variable(t64(&[1], &[0.25]));
    let y = tape.prelu(x, a).unwrap();
    assert_eq!(tape.value(y).data(), &[5.0, -0.5, 0.0]);
    let s = tape.sum(y);
    tape.backward(s, &mut ParamStore::new()).unwrap();
    // slope at exactly zero follows the positive branch
    assert_eq!(tape.grad(x).unwrap(), &[1.0, 0.25, 1.0]);
    assert_eq!(tape.grad(a).unwrap(), &[-2.0]);
}

#[test]
fn batch_norm_constant_channel_yields_shift() {
    let mut tape = Tape::new();
    let x = tape.input(Tensor::<f64>::full(&[2, 1, 2, 2, 2], 3.5));
    let g = tape.input(t64(&[1], &[2.0]));
    let b = tape.input(t64(&[1], &[0.75]));
    let (y, stats) = tape.batch_norm_train(x, g, b, BN_EPS).unwrap();
    assert!(tape.value(y).data().iter().all(|&v| v == 0.75));
    assert_eq!(stats.var, vec![0.0]);
}

#[test]
fn batch_norm_standardizes_channels() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let data: Vec<f64> = (0..2 * 3 * 64).map(|_| rng.random_range(-4.0..9.0)).collect();
    let mut tape = Tape::new();
    let x = tape.input(t64(&[2, 3, 4, 4, 4], &data));
    let g = tape.input(t64(&[3], &[1.0; 3]));
    let b = tape.input(t64(&[3], &[0.0; 3]));
    let (y, _) = tape.batch_norm_train(x, g, b, BN_EPS).unwrap();
    let out = tape.value(y).data();
    for c in 0..3 {
        let vals: Vec<f64> = (0..2)
            .flat_map(|bi| out[(bi * 3 + c) * 64..(bi * 3 + c + 1) * 64].iter().copied())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-5);
        assert!((var - 1.0).abs() < 1e-4);
    }
}

#[test]
fn batch_norm_keeps_standardized_input() {
    let data = [-1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0];
    let mut tape = Tape::new();
    let x = tape.input(t64(&[1, 1, 2, 2, 2], &data));
    let g = tape.input(t64(&[1], &[1.0]));
    let b = tape.input(t64(&[1], &[0.0]));
    let (y, _) = tape.batch_norm_train(x, g, b, BN_EPS).unwrap();
    for (o, i) in tape.value(y).data().iter().zip(&data) {
        assert!((o - i).abs() < 1e-5);
    }
}

#[test]
fn softmax_examples() {
    let mut tape = Tape::new();
    let x = tape.input(t64(&[1, 4, 1, 1, 1], &[0.3; 4]));
    let p = tape.softmax_channels(x).unwrap();
    assert!(tape.value(p).data().iter().all(|&v| (v - 0.25).abs() < 1e-15));

    let x = tape.input(Tensor::<f32>::from_f64(&[1, 2, 1, 1, 1], &[1000.0, 0.0]).unwrap().cast());
    let p = tape.softmax_channels(x).unwrap();
    assert_eq!(tape.value(p).data(), &[1.0, 0.0]);

    let x = tape.input(t64(&[1, 1, 1, 1, 1], &[0.0]));
    assert!(tape.softmax_channels(x).is_err());
}

#[test]
fn cross_entropy_examples() {
    let mut tape = Tape::new();
    let onehot = tape.input(t64(&[1, 4, 1, 1, 2], &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
    let l = tape.cross_entropy(onehot, &[1, 2]).unwrap();
    assert_eq!(tape.value(l).data()[0], 0.0);

    let uniform = tape.input(t64(&[1, 4, 1, 1, 1], &[0.25; 4]));
    let l = tape.cross_entropy(uniform, &[3]).unwrap();
    assert!((tape.value(l).data()[0] - 4f64.ln()).abs() < 1e-12);

    // zero probability on the true class is clamped, not infinite
    let l = tape.cross_entropy(onehot, &[0, 0]).unwrap();
    assert!((tape.value(l).data()[0] - (-(LOG_CLAMP).ln())).abs() < 1e-9);

    assert!(tape.cross_entropy(uniform, &[4]).is_err());
}

#[test]
fn backward_of_sum_is_ones() {
    let mut tape = Tape::new();
    let x = tape.variable(t64(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.0, 9.0]));
    let s = tape.sum(x);
    tape.backward(s, &mut ParamStore::new()).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[1.0; 6]);
}

#[test]
fn backward_rejects_non_scalar() {
    let mut tape = Tape::new();
    let x = tape.variable(t64(&[2], &[1.0, 2.0]));
    assert!(matches!(
        tape.backward(x, &mut ParamStore::new()),
        Err(crate::Error::NonScalarLoss(_))
    ));
}

#[test]
fn shared_parameter_gradients_add() {
    let mut store = ParamStore::new();
    let wid = store.add("w", t64(&[1, 1, 1, 1, 1], &[0.5]));
    let bid = store.add("b", t64(&[1], &[0.0]));
    let unused = store.add("unused", t64(&[3], &[1.0, 2.0, 3.0]));
    let xa = t64(&[1, 1, 1, 1, 2], &[1.0, 2.0]);
    let xb = t64(&[1, 1, 1, 1, 2], &[-3.0, 0.5]);

    let single = |input: &Tensor<f64>| {
        let mut s = store.clone();
        let mut tape = Tape::new();
        let x = tape.input(input.clone());
        let (w, b) = (tape.param(&s, wid), tape.param(&s, bid));
        let y = tape.conv3d(x, w, b).unwrap();
        let l = tape.sum(y);
        tape.backward(l, &mut s).unwrap();
        s.get(wid).grad.data()[0]
    };
    let expected = single(&xa) + single(&xb);

    let mut tape = Tape::new();
    let w = tape.param(&store, wid);
    let b = tape.param(&store, bid);
    let a = tape.input(xa.clone());
    let c = tape.input(xb.clone());
    let ya = tape.conv3d(a, w, b).unwrap();
    let yb = tape.conv3d(c, w, b).unwrap();
    let (sa, sb) = (tape.sum(ya), tape.sum(yb));
    let l = tape.add(sa, sb).unwrap();
    tape.backward(l, &mut store).unwrap();
    assert_eq!(store.get(wid).grad.data()[0], expected);
    assert!(store.get(unused).grad.data().iter().all(|&v| v == 0.0));
}
