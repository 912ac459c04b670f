use super::{max_grad_error, project, random, random_off_zero, rng};
use isoseg_core::autodiff::BN_EPS;

/// Every differentiable op as (name, worst relative error).
pub const GRADIENT_CASES: &[(&str, fn() -> f64)] = &[
    ("conv3d", conv3d_input_filter_and_bias),
    ("conv3d anisotropic", conv3d_anisotropic_kernel),
    ("pointwise conv", pointwise_conv),
    ("prelu", prelu_input_and_slope),
    ("batch_norm train", batch_norm_train_mode),
    ("batch_norm infer", batch_norm_infer_mode),
    ("softmax + cross-entropy", softmax_cross_entropy_composite),
    ("softmax", softmax_alone),
    ("crop + concat", crop_and_concat),
    ("add", add_and_fan_out),
    ("composite", composite_network_graph),
];

pub fn conv3d_input_filter_and_bias() -> f64 {
    let mut r = rng(1);
    let x = random(&[2, 2, 5, 5, 5], &mut r);
    let w = random(&[3, 2, 3, 3, 3], &mut r);
    let b = random(&[3], &mut r);
    max_grad_error(&[x, w, b], |t, v| {
        let y = t.conv3d(v[0], v[1], v[2]).unwrap();
        project(t, y, 11)
    })
}

pub fn conv3d_anisotropic_kernel() -> f64 {
    let mut r = rng(2);
    let x = random(&[1, 2, 4, 5, 3], &mut r);
    let w = random(&[2, 2, 3, 1, 3], &mut r);
    let b = random(&[2], &mut r);
    max_grad_error(&[x, w, b], |t, v| {
        let y = t.conv3d(v[0], v[1], v[2]).unwrap();
        project(t, y, 12)
    })
}

pub fn pointwise_conv() -> f64 {
    let mut r = rng(3);
    let x = random(&[2, 4, 3, 3, 3], &mut r);
    let w = random(&[5, 4, 1, 1, 1], &mut r);
    let b = random(&[5], &mut r);
    max_grad_error(&[x, w, b], |t, v| {
        let y = t.conv3d(v[0], v[1], v[2]).unwrap();
        project(t, y, 13)
    })
}

pub fn prelu_input_and_slope() -> f64 {
    let mut r = rng(4);
    let x = random_off_zero(&[2, 3, 4, 4, 4], &mut r);
    let a = random(&[3], &mut r);
    max_grad_error(&[x, a], |t, v| {
        let y = t.prelu(v[0], v[1]).unwrap();
        project(t, y, 14)
    })
}

pub fn batch_norm_train_mode() -> f64 {
    let mut r = rng(5);
    let x = random(&[2, 3, 4, 4, 4], &mut r);
    let g = random(&[3], &mut r);
    let b = random(&[3], &mut r);
    max_grad_error(&[x, g, b], |t, v| {
        let (y, _) = t.batch_norm_train(v[0], v[1], v[2], BN_EPS).unwrap();
        project(t, y, 15)
    })
}

pub fn batch_norm_infer_mode() -> f64 {
    let mut r = rng(6);
    let x = random(&[2, 3, 3, 3, 3], &mut r);
    let g = random(&[3], &mut r);
    let b = random(&[3], &mut r);
    max_grad_error(&[x, g, b], |t, v| {
        let y = t.batch_norm_infer(v[0], v[1], v[2], &[0.1, -0.2, 0.3], &[0.5, 1.5, 2.0], BN_EPS).unwrap();
        project(t, y, 16)
    })
}

pub fn softmax_cross_entropy_composite() -> f64 {
    let mut r = rng(7);
    let logits = random(&[2, 4, 3, 3, 3], &mut r).map(|v| 3.0 * v);
    let labels: Vec<u8> = (0..2 * 27).map(|i| ((i * 7) % 4) as u8).collect();
    max_grad_error(&[logits], |t, v| {
        let p = t.softmax_channels(v[0]).unwrap();
        t.cross_entropy(p, &labels).unwrap()
    })
}

pub fn softmax_alone() -> f64 {
    let mut r = rng(8);
    let logits = random(&[1, 3, 2, 3, 2], &mut r);
    max_grad_error(&[logits], |t, v| {
        let p = t.softmax_channels(v[0]).unwrap();
        project(t, p, 18)
    })
}

pub fn crop_and_concat() -> f64 {
    let mut r = rng(9);
    let a = random(&[2, 2, 5, 5, 5], &mut r);
    let b = random(&[2, 3, 3, 3, 3], &mut r);
    max_grad_error(&[a, b], |t, v| {
        let ca = t.crop_center(v[0], [3, 3, 3]).unwrap();
        let y = t.concat_channels(&[ca, v[1]]).unwrap();
        project(t, y, 19)
    })
}

pub fn add_and_fan_out() -> f64 {
    let mut r = rng(10);
    let x = random(&[1, 2, 3, 3, 3], &mut r);
    max_grad_error(&[x], |t, v| {
        let y = t.add(v[0], v[0]).unwrap();
        project(t, y, 20)
    })
}

pub fn composite_network_graph() -> f64 {
    let mut r = rng(11);
    let inputs = vec![
        random(&[2, 2, 5, 5, 5], &mut r),
        random(&[2, 2, 3, 3, 3], &mut r),
        random(&[2], &mut r),
        random(&[2], &mut r),
        random(&[2], &mut r),
        random(&[2], &mut r).map(|v| v * 0.5),
        random(&[2, 2, 3, 3, 3], &mut r),
        random(&[2], &mut r),
        random(&[3, 4, 1, 1, 1], &mut r),
        random(&[3], &mut r),
    ];
    let labels: Vec<u8> = (0..2).map(|i| (i % 3) as u8).collect();
    max_grad_error(&inputs, |t, v| {
        let h1 = t.conv3d(v[0], v[1], v[2]).unwrap();
        let (n, _) = t.batch_norm_train(h1, v[3], v[4], BN_EPS).unwrap();
        let a = t.prelu(n, v[5]).unwrap();
        let h2 = t.conv3d(a, v[6], v[7]).unwrap();
        let c1 = t.crop_center(h1, [1, 1, 1]).unwrap();
        let cat = t.concat_channels(&[c1, h2]).unwrap();
        let logits = t.conv3d(cat, v[8], v[9]).unwrap();
        let p = t.softmax_channels(logits).unwrap();
        t.cross_entropy(p, &labels).unwrap()
    })
}
