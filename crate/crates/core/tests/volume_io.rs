use isoseg_core::volume::{
    generate_phantom, nearest_mean_labels, read_volume, write_volume, AnyVolume, PhantomConfig, Volume,
};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = [usize; 3]> {
    [1usize..7, 1usize..7, 1usize..7]
}

fn spacing() -> impl Strategy<Value = [f32; 3]> {
    [0.1f32..4.0, 0.1f32..4.0, 0.1f32..4.0]
}

fn any_volume() -> impl Strategy<Value = AnyVolume> {
    (dims(), spacing(), 0u8..3).prop_flat_map(|(d, s, kind)| {
        let n = d.iter().product::<usize>();
        match kind {
            0 => prop::collection::vec(any::<u8>(), n)
                .prop_map(move |v| AnyVolume::U8(Volume::new(d, s, v).unwrap()))
                .boxed(),
            1 => prop::collection::vec(any::<i16>(), n)
                .prop_map(move |v| AnyVolume::I16(Volume::new(d, s, v).unwrap()))
                .boxed(),
            // arbitrary bit patterns, NaNs and infinities included
            _ => prop::collection::vec(any::<u32>(), n)
                .prop_map(move |v| AnyVolume::F32(Volume::new(d, s, v.into_iter().map(f32::from_bits).collect()).unwrap()))
                .boxed(),
        }
    })
}

fn payload_bits(v: &AnyVolume) -> Vec<u8> {
    match v {
        AnyVolume::U8(v) => v.data().to_vec(),
        AnyVolume::I16(v) => v.data().iter().flat_map(|x| x.to_le_bytes()).collect(),
        AnyVolume::F32(v) => v.data().iter().flat_map(|x| x.to_bits().to_le_bytes()).collect(),
    }
}

fn assert_same(a: &AnyVolume, b: &AnyVolume) {
    assert_eq!(a.datatype(), b.datatype());
    assert_eq!(a.dims(), b.dims());
    assert_eq!(a.spacing().map(f32::to_bits), b.spacing().map(f32::to_bits));
    assert_eq!(a.extras(), b.extras());
    assert_eq!(payload_bits(a), payload_bits(b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nifti_file_round_trip(v in any_volume()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.nii");
        write_volume(&v, &path).unwrap();
        assert_same(&v, &read_volume(&path).unwrap());
    }

    #[test]
    fn native_file_round_trip(v in any_volume()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.vjson");
        write_volume(&v, &path).unwrap();
        assert!(dir.path().join("v.vraw").exists());
        assert_same(&v, &read_volume(&path).unwrap());
    }

    #[test]
    fn nifti_and_native_agree(v in any_volume()) {
        let dir = tempfile::tempdir().unwrap();
        write_volume(&v, dir.path().join("a.nii")).unwrap();
        write_volume(&v, dir.path().join("a.vjson")).unwrap();
        let a = read_volume(dir.path().join("a.nii")).unwrap();
        let b = read_volume(dir.path().join("a.vjson")).unwrap();
        assert_same(&a, &b);
    }
}

#[test]
fn full_sized_volume_keeps_dims_and_pixdim() {
    let v = Volume::filled([64, 64, 64], [1.0, 1.0, 1.0], 7i16).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.nii");
    write_volume(&v.clone().into(), &path).unwrap();
    let back = read_volume(&path).unwrap();
    assert_eq!(back.dims(), [64, 64, 64]);
    assert_eq!(back.spacing(), [1.0, 1.0, 1.0]);
    assert_eq!(back, AnyVolume::I16(v));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_volume("/definitely/not/here.nii").unwrap_err();
    assert!(matches!(err, isoseg_core::Error::Io { .. }));
}

#[test]
fn default_phantom_covers_every_class_across_seeds() {
    for seed in 0..20 {
        let config = PhantomConfig { seed, ..Default::default() };
        let s = generate_phantom(&config, "p").unwrap();
        let n = s.labels().unwrap().len() as f64;
        for class in 0..4u8 {
            let f = s.labels().unwrap().data().iter().filter(|&&l| l == class).count() as f64 / n;
            assert!(f >= 0.02, "seed {seed}: class {class} covers {f:.4}");
        }
    }
}

#[test]
fn nearest_mean_is_exact_without_noise_and_imperfect_with_it() {
    let quiet = PhantomConfig { dims: [32; 3], noise_std: 0.0, seed: 9, ..Default::default() };
    let s = generate_phantom(&quiet, "q").unwrap();
    assert_eq!(nearest_mean_labels(&s.t2, &quiet.t2_means), *s.labels().unwrap());

    let noisy = PhantomConfig { noise_std: 0.1, ..quiet.clone() };
    let s = generate_phantom(&noisy, "n").unwrap();
    let wrong = nearest_mean_labels(&s.t2, &noisy.t2_means)
        .data()
        .iter()
        .zip(s.labels().unwrap().data())
        .filter(|(a, b)| a != b)
        .count();
    assert!(wrong > 0);
}
