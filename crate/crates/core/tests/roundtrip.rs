mod common;

use common::{flood, random_quantized, rng};
use dctree::ctree::{read_ctt, serialize_tree, write_ctt, parse_tree};
use dctree::mcimage::{decode_image, encode_image, encode_labels, load_image, save_image, ImageFormat, LabelImage, MultiChannelImage};
use dctree::regions::{extract_stable, read_rgn, write_rgn, ExtractParams, StabilityMode};
use proptest::prelude::*;
use rand::Rng;

fn arb_image() -> impl Strategy<Value = MultiChannelImage> {
    (1usize..9, 1usize..9, 1usize..6, 0u8..3).prop_flat_map(|(w, h, c, depth)| {
        let n = w * h * c;
        match depth {
            0 => prop::collection::vec(any::<u8>(), n)
                .prop_map(move |d| MultiChannelImage::from_u8(w, h, c, d).unwrap())
                .boxed(),
            1 => prop::collection::vec(any::<u16>(), n)
                .prop_map(move |d| MultiChannelImage::from_u16(w, h, c, d).unwrap())
                .boxed(),
            _ => prop::collection::vec(-1e6f32..1e6, n)
                .prop_map(move |d| MultiChannelImage::from_f32(w, h, c, d).unwrap())
                .boxed(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn images_roundtrip_bytes(img in arb_image()) {
        let bytes = encode_image(&img, ImageFormat::Mci).unwrap();
        let back = decode_image(&bytes).unwrap();
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(encode_image(&back, ImageFormat::Mci).unwrap(), bytes);
        let netpbm = match (img.channels(), img.depth()) {
            (1, d) if d != dctree::mcimage::Depth::F32 => Some(ImageFormat::Pgm),
            (3, d) if d != dctree::mcimage::Depth::F32 => Some(ImageFormat::Ppm),
            _ => None,
        };
        match netpbm {
            Some(f) => {
                let bytes = encode_image(&img, f).unwrap();
                prop_assert_eq!(&decode_image(&bytes).unwrap(), &img);
            }
            None => {
                prop_assert!(encode_image(&img, ImageFormat::Pgm).is_err());
            }
        }
    }

    #[test]
    fn trees_roundtrip(seed in any::<u64>(), min_area in 1usize..4) {
        let q = random_quantized(&mut rng(seed), 12);
        let t = flood(&q, min_area);
        let text = write_ctt(&t);
        let back = read_ctt(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(write_ctt(&back), text);
        prop_assert_eq!(parse_tree(&serialize_tree(&t), q.width, q.height).unwrap(), t);
    }

    #[test]
    fn regions_roundtrip(seed in any::<u64>(), delta in 1u32..6, ratio in any::<bool>()) {
        let q = random_quantized(&mut rng(seed), 12);
        let t = flood(&q, 1);
        let params = ExtractParams {
            delta,
            min_area: 1,
            max_area_fraction: 1.0,
            stability_mode: if ratio { StabilityMode::Ratio } else { StabilityMode::Difference },
            ..ExtractParams::default()
        };
        let set = extract_stable(&t, &params).unwrap();
        let text = write_rgn(&set);
        let back = read_rgn(&text).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(write_rgn(&back), text);
    }
}

#[test]
fn files_roundtrip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rng(1);
    let data: Vec<u8> = (0..7 * 5 * 4).map(|_| rng.random()).collect();
    let img = MultiChannelImage::from_u8(7, 5, 4, data).unwrap();
    let path = dir.path().join("a.mci");
    save_image(&img, &path, ImageFormat::Mci).unwrap();
    assert_eq!(load_image(&path).unwrap(), img);

    let gray = MultiChannelImage::from_u8(2, 2, 1, vec![0, 255, 255, 0]).unwrap();
    let path = dir.path().join("b.pgm");
    save_image(&gray, &path, ImageFormat::Pgm).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"P5\n2 2\n255\n\x00\xff\xff\x00");
    assert_eq!(load_image(&path).unwrap(), gray);

    let labels = LabelImage {
        width: 2,
        height: 1,
        labels: vec![0, 300],
    };
    let bytes = encode_labels(&labels).unwrap();
    let back = decode_image(&bytes).unwrap();
    assert_eq!(back.get(1, 0, 0), 300.0);
}
