mod common;

use common::{snapshot, synthetic_dataset};
use parcelsight::augment::{expand_dataset, flip_vertical, rotate, AugmentConfig};
use parcelsight::dataset::save_dataset;
use parcelsight::parcel_extract::BitMask;

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

#[test]
fn four_hundred_ten_images_with_two_variants_give_1230() {
    let ds = synthetic_dataset(410, 12, 1);
    let out = expand_dataset(&ds, &AugmentConfig { per_image_outputs: 2, seed: 3, ..Default::default() }).unwrap();
    assert_eq!(out.images.len(), 1230);
    // each original is followed by its own variants
    for (i, chunk) in out.images.chunks(3).enumerate() {
        let base = &ds.images[i].annotations.name;
        assert_eq!(&chunk[0].annotations.name, base);
        assert_eq!(chunk[1].annotations.name, format!("{base}_aug0"));
        assert_eq!(chunk[2].annotations.name, format!("{base}_aug1"));
        assert_eq!(chunk[0], ds.images[i]);
    }
}

#[test]
fn output_is_byte_identical_across_thread_counts_and_reruns() {
    let ds = synthetic_dataset(24, 20, 9);
    let cfg = AugmentConfig { per_image_outputs: 3, seed: 42, ..Default::default() };
    let write = |threads| {
        let out = with_threads(threads, || expand_dataset(&ds, &cfg).unwrap());
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&out, dir.path()).unwrap();
        snapshot(dir.path())
    };
    let one = write(1);
    assert_eq!(one, write(1));
    assert_eq!(one, write(4));
    let other_seed = {
        let out = expand_dataset(&ds, &AugmentConfig { seed: 43, ..cfg.clone() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&out, dir.path()).unwrap();
        snapshot(dir.path())
    };
    assert_ne!(one, other_seed);
}

#[test]
fn flip_twice_and_zero_rotation_are_identities_on_real_data() {
    for img in synthetic_dataset(5, 17, 4).images {
        let masks: Vec<BitMask> = img
            .annotations
            .instances
            .iter()
            .map(|i| parcelsight::annotation::rle_decode(&i.rle).unwrap())
            .collect();
        let (f1, m1) = flip_vertical(&img.image, &masks).unwrap();
        assert_ne!(f1, img.image);
        let (f2, m2) = flip_vertical(&f1, &m1).unwrap();
        assert_eq!((f2, m2), (img.image.clone(), masks.clone()));
        assert_eq!(rotate(&img.image, &masks, 0.0).unwrap(), (img.image.clone(), masks.clone()));
    }
}
