use proptest::prelude::*;
use seedprior::eval::{synth_generate, SynthSpec};
use seedprior::io::{
    bg_path, read_image, read_label_map, read_objectness, read_seeds, read_tensor, write_grid,
    write_label_map, write_objectness, write_seeds, Tensor, TensorData,
};
use seedprior::{generate_objectness, Grid, ObjectnessConfig};

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    (
        proptest::collection::vec(1usize..5, 2..=4),
        1usize..4,
        0u8..3,
    )
        .prop_flat_map(|(shape, ch, kind)| {
            let n = shape.iter().product::<usize>() * ch;
            let data = match kind {
                0 => proptest::collection::vec(
                    any::<f32>().prop_filter("finite", |v| v.is_finite()),
                    n,
                )
                .prop_map(TensorData::F32)
                .boxed(),
                1 => proptest::collection::vec(any::<u8>(), n)
                    .prop_map(TensorData::U8)
                    .boxed(),
                _ => proptest::collection::vec(any::<u16>(), n)
                    .prop_map(TensorData::U16)
                    .boxed(),
            };
            data.prop_map(move |d| Tensor::new(shape.clone(), ch, d).unwrap())
        })
}

proptest! {
    #[test]
    fn tensor_bytes_roundtrip(t in tensor_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tns");
        seedprior::io::write_tensor(&t, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.encode(), std::fs::read(&path).unwrap());
    }
}

#[test]
fn grid_roundtrip_is_bit_exact_for_f32_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.tns");
    let vals: Vec<f64> = (0..60).map(|i| (i as f32 * 0.173f32) as f64).collect();
    let g = Grid::new(&[3, 4, 5], 1, vals).unwrap();
    write_grid(&g, &path).unwrap();
    assert_eq!(read_image(&path).unwrap(), g);
}

#[test]
fn truncated_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.tns");
    write_grid(&Grid::filled(&[4, 4], 2, 0.5).unwrap(), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_image(&path).is_err());
}

#[test]
fn synth_outputs_roundtrip() {
    let spec = SynthSpec {
        shape: vec![48, 40],
        n_objects: 4,
        n_classes: 3,
        radius_min: 3.0,
        radius_max: 6.0,
        rng_seed: 11,
        ..Default::default()
    };
    let s = synth_generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let seeds = dir.path().join("seeds.csv");
    write_seeds(&s.seeds, &seeds).unwrap();
    let back = read_seeds(&seeds, s.image.shape(), Some(3)).unwrap();
    assert_eq!(back, s.seeds);

    let labels = dir.path().join("gt.tns");
    write_label_map(&s.labels, &labels).unwrap();
    assert_eq!(read_label_map(&labels).unwrap(), s.labels);

    let m = generate_objectness(&s.image, &s.seeds, &ObjectnessConfig::default(), None).unwrap();
    let out = dir.path().join("obj.tns");
    write_objectness(&m, &out).unwrap();
    assert!(bg_path(&out).exists());
    let header = read_tensor(&out).unwrap();
    assert_eq!(header.shape[0], s.seeds.num_classes());
    let back = read_objectness(&out).unwrap();
    assert_eq!(back.background_mask, m.background_mask);
    for (a, b) in back.probabilities.data().iter().zip(m.probabilities.data()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}

#[test]
fn volume_seeds_roundtrip() {
    let spec = SynthSpec {
        shape: vec![20, 22, 24],
        n_objects: 3,
        radius_min: 2.0,
        radius_max: 3.0,
        rng_seed: 5,
        ..Default::default()
    };
    let s = synth_generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    write_seeds(&s.seeds, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,y,z,class\n"));
    assert_eq!(read_seeds(&path, &spec.shape, Some(2)).unwrap(), s.seeds);
}
