use dpvo::aux_codec::prng_payload;
use dpvo::image::read_pgm;
use dpvo::metrics::psnr;
use dpvo::pipeline::{decode, encode_max, encode_traced, encode_with, BackwardSets, EmbedOptions, Scheme};
use dpvo::{BitString, Error, GrayImage};
use proptest::prelude::*;

const SCHEMES: [Scheme; 4] = [
    Scheme::Dpvo(BackwardSets::MaxOnly),
    Scheme::Dpvo(BackwardSets::Both),
    Scheme::ForwardOnly,
    Scheme::Li,
];

fn corpus(name: &str) -> GrayImage {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(name);
    read_pgm(&std::fs::read(path).unwrap()).unwrap()
}

fn check(cover: &GrayImage, data: &BitString, scheme: Scheme) {
    let (stego, report) = encode_with(cover, data, &EmbedOptions::scheme(scheme)).unwrap();
    assert_eq!(report.net_bits, data.len());
    let (back, got) = decode(&stego).unwrap();
    assert!(back == *cover);
    assert_eq!(&got, data);
}

#[test]
fn corpus_every_scheme_at_max_payload() {
    for name in ["lena.pgm", "baboon.pgm"] {
        let cover = corpus(name);
        for scheme in SCHEMES {
            let (stego, report, data) = encode_max(&cover, &EmbedOptions::scheme(scheme), 1).unwrap();
            assert!(report.net_bits > 0);
            assert_eq!(decode(&stego).unwrap(), (cover.clone(), data));
        }
    }
}

#[test]
fn corpus_partial_payloads() {
    let cover = corpus("baboon.pgm");
    for n in [0, 1, 2, 3, 999, 5000] {
        for scheme in SCHEMES {
            check(&cover, &prng_payload(n as u64, n), scheme);
        }
    }
}

#[test]
fn backward_phase_reduces_forward_distortion() {
    let cover = corpus("lena.pgm");
    let data = prng_payload(4, 25_000);
    let (_, report, trace) = encode_traced(&cover, &data, &EmbedOptions::default()).unwrap();
    let after_forward = psnr(&cover, &trace.forward_image).unwrap();
    let after_backward = psnr(&cover, &trace.pvo_image).unwrap();
    println!("after forward {after_forward:.2} dB, after backward {after_backward:.2} dB, stego {:.2} dB", report.psnr_db);
    assert!(after_backward > after_forward);
}

#[test]
fn saturated_regions() {
    // a bright plateau with clipped pixels next to texture
    let cover = GrayImage::from_fn(128, 128, |r, c| match (r / 32 + c / 32) % 3 {
        0 => 255,
        1 => 0,
        _ => (120 + (r * 13 + c * 7) % 4) as u8,
    });
    for scheme in SCHEMES {
        check(&cover, &prng_payload(8, 300), scheme);
    }
}

#[test]
fn gradient() {
    let cover = GrayImage::from_fn(200, 150, |r, c| ((r + c) / 2) as u8);
    for scheme in SCHEMES {
        let (stego, _, data) = encode_max(&cover, &EmbedOptions::scheme(scheme), 3).unwrap();
        assert_eq!(decode(&stego).unwrap(), (cover.clone(), data));
    }
}

fn smooth(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut s = seed | 1;
    GrayImage::from_fn(w, h, |r, c| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let base = (r * 3 + c * 2) % 256;
        (base as u64 + (s >> 62)).min(255) as u8
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_accepted_payload_decodes(
        seed: u64,
        w in 30usize..90,
        h in 20usize..70,
        n in 0usize..600,
        s in 0usize..4,
    ) {
        let cover = smooth(w, h, seed);
        let data = prng_payload(seed, n);
        match encode_with(&cover, &data, &EmbedOptions::scheme(SCHEMES[s])) {
            Ok((stego, _)) => prop_assert_eq!(decode(&stego).unwrap(), (cover, data)),
            Err(Error::CapacityExceeded { .. } | Error::AuxOverflow { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn flipped_stego_lsb_never_panics(seed: u64, pos in 0usize..4096) {
        let cover = smooth(64, 64, seed);
        if let Ok((mut stego, _)) = encode_with(&cover, &prng_payload(seed, 200), &EmbedOptions::default()) {
            let (r, c) = (pos / 64, pos % 64);
            stego.set(r, c, stego.get(r, c) ^ 1);
            let _ = decode(&stego);
        }
    }
}
