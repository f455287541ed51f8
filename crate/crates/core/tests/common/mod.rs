#![allow(dead_code)]

use std::path::PathBuf;

use polydec::code::{parse_alist, CodeModel};
use polydec::cppnet::{CppNet, QWeight, Subnet};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn mackay() -> CodeModel {
    parse_alist(&std::fs::read_to_string(fixture("mackay_96_33_964.alist")).unwrap()).unwrap()
}

pub fn trained_net() -> CppNet {
    CppNet::load(&fixture("cppnet_mackay96.txt")).unwrap()
}

pub fn small_code() -> CodeModel {
    CodeModel::from_dense(&[
        vec![1, 1, 0, 1, 0, 0],
        vec![0, 1, 1, 0, 1, 0],
        vec![1, 0, 1, 0, 0, 1],
    ])
    .unwrap()
}

/// Random quantized subnetwork for degree `d`.
pub fn random_subnet<R: Rng>(d: usize, rng: &mut R) -> Subnet {
    let h = polydec::cppnet::hidden_size(d);
    let w = |rng: &mut R| {
        if rng.random_bool(0.4) {
            QWeight::ZERO
        } else {
            let mag = 1i32 << rng.random_range(0..=7);
            QWeight::new(if rng.random_bool(0.5) { mag } else { -mag }).unwrap()
        }
    };
    let wa = (0..h * d).map(|_| w(rng)).collect();
    let wb = (0..h).map(|_| w(rng)).collect();
    let ba = (0..h).map(|_| rng.random_range(-2.0..2.0)).collect();
    Subnet::new(d, wa, ba, wb, rng.random_range(-2.0..2.0)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
