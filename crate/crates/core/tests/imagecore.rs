mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stba_core::imagecore::{
    encode_cifar10_record, frequency_split, gaussian_blur3, load_cifar10_batch, load_png_dir, psnr,
    recompose, save_png, ssim, unit_from_u8, CIFAR10_RECORD_LEN,
};
use stba_core::{Image, LabeledImage, Shape, StbaError};

fn image_strategy(max_side: usize) -> impl Strategy<Value = Image> {
    (1..=3usize, 1..=max_side, 1..=max_side).prop_flat_map(|(c, h, w)| {
        proptest::collection::vec(any::<u8>(), c * h * w).prop_map(move |bytes| {
            let data = bytes.into_iter().map(unit_from_u8).collect();
            Image::new(Shape::new(c, h, w), data).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn split_sum_is_exact(img in image_strategy(12)) {
        let pair = frequency_split(&img);
        prop_assert_eq!(pair.sum_unclamped(), img.clone());
        prop_assert_eq!(recompose(&pair.high, &pair.low).unwrap(), img);
    }

    #[test]
    fn low_band_stays_displayable(img in image_strategy(12)) {
        let pair = frequency_split(&img);
        prop_assert!(pair.low.is_displayable());
        prop_assert!(pair.high.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn blur_of_constant_is_constant(v in 0.0f64..=1.0, h in 1usize..10, w in 1usize..10) {
        let out = gaussian_blur3(&Image::filled(Shape::new(2, h, w), v));
        prop_assert!(out.data().iter().all(|&o| (o - v).abs() <= 1e-12));
    }

    #[test]
    fn psnr_and_ssim_are_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape::new(3, 12, 12);
        let a = common::random_image(&mut rng, shape);
        let b = common::random_image(&mut rng, shape);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cifar_record_round_trip(label in 0u8..10, pixels in proptest::collection::vec(any::<u8>(), CIFAR10_RECORD_LEN - 1)) {
        let mut record = vec![label];
        record.extend(pixels);
        let items = load_cifar10_batch(&record).unwrap();
        prop_assert_eq!(encode_cifar10_record(&items[0]).unwrap(), record);
    }
}

#[test]
fn blur_is_shift_equivariant_in_the_interior() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (h, w) = (16, 16);
        let src = common::random_image(&mut rng, Shape::new(1, h, w));
        let shifted: Vec<f64> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (y, x)))
            .map(|(y, x)| src.get(0, y, (x + 1) % w))
            .collect();
        let shifted = Image::new(src.shape(), shifted).unwrap();
        let (a, b) = (gaussian_blur3(&shifted), gaussian_blur3(&src));
        for y in 1..h - 1 {
            for x in 1..w - 2 {
                assert!((a.get(0, y, x) - b.get(0, y, x + 1)).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn impulse_split() {
    let mut data = vec![0.0; 9];
    data[4] = 1.0;
    let pair = frequency_split(&Image::new(Shape::new(1, 3, 3), data).unwrap());
    assert_eq!(pair.low.get(0, 1, 1), 0.25);
    assert_eq!(pair.high.get(0, 1, 1), 0.75);
}

#[test]
fn recompose_clamps_and_checks_shape() {
    let s = Shape::new(1, 2, 2);
    let up = recompose(&Image::filled(s, 0.9), &Image::filled(s, 0.9)).unwrap();
    assert!(up.data().iter().all(|&v| v == 1.0));
    let down = recompose(&Image::filled(s, -0.2), &Image::filled(s, 0.1)).unwrap();
    assert!(down.data().iter().all(|&v| v == 0.0));
    let other = Image::zeros(Shape::new(1, 2, 3));
    assert!(matches!(
        recompose(&other, &Image::zeros(s)),
        Err(StbaError::ShapeMismatch { .. })
    ));
}

#[test]
fn cifar_rejects_bad_streams() {
    assert!(matches!(
        load_cifar10_batch(&[0; 100]),
        Err(StbaError::Format(_))
    ));
    let mut record = vec![0u8; CIFAR10_RECORD_LEN];
    record[0] = 10;
    assert!(matches!(
        load_cifar10_batch(&record),
        Err(StbaError::Format(_))
    ));
}

#[test]
fn png_dir_loading() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("labels.csv"), "filename,label\n").unwrap();
    assert!(load_png_dir(dir.path(), 10).unwrap().items.is_empty());

    let white = Image::filled(Shape::new(3, 2, 2), 1.0);
    save_png(&white, &dir.path().join("b.png")).unwrap();
    save_png(&white, &dir.path().join("a.png")).unwrap();
    save_png(&white, &dir.path().join("unlisted.png")).unwrap();
    std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
    std::fs::write(
        dir.path().join("labels.csv"),
        "filename,label\nb.png,3\na.png,12\nbroken.png,1\n",
    )
    .unwrap();

    let load = load_png_dir(dir.path(), 10).unwrap();
    assert_eq!(
        load.items,
        vec![LabeledImage {
            image: white,
            label: 3
        }]
    );
    assert_eq!(load.filenames, ["b.png"]);
    let rejected: Vec<&str> = load.errors.iter().map(|e| e.filename.as_str()).collect();
    assert_eq!(rejected, ["a.png", "broken.png"]);

    std::fs::write(dir.path().join("labels.csv"), "name;label\nb.png;3\n").unwrap();
    assert!(load_png_dir(dir.path(), 10).is_err());
}

#[test]
fn png_round_trip_of_8_bit_images() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img = common::random_image(&mut rng, Shape::new(3, 5, 7));
    save_png(&img, &dir.path().join("x.png")).unwrap();
    std::fs::write(dir.path().join("labels.csv"), "filename,label\nx.png,0\n").unwrap();
    let load = load_png_dir(dir.path(), 2).unwrap();
    assert_eq!(load.items[0].image, img);
}
