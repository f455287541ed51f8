mod common;

use common::{mackay, random_subnet};
use polydec::bench::{collect_samples, CollectSpec};
use polydec::cppnet::{read_sample_file, write_sample_files, Activation, CppNet, QWeight};
use polydec::pdd::PddConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn shift_forward_is_bit_identical_to_float_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for d in [3, 6, 7, 8, 11] {
        let net = random_subnet(d, &mut rng);
        for _ in 0..2000 {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            assert_eq!(net.forward(&v).to_bits(), net.forward_float(&v).to_bits());
            checked += 1;
        }
    }
    assert_eq!(checked, 10_000);
}

proptest! {
    #[test]
    fn weight_shift_equals_multiply(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
                                    k in 0u32..=7, neg in any::<bool>()) {
        let m = (1i32 << k) * if neg { -1 } else { 1 };
        let w = QWeight::new(m).unwrap();
        prop_assert_eq!(w.apply(x).to_bits(), (f64::from(m) * x).to_bits());
    }

    #[test]
    fn weight_text_round_trip(seed in any::<u64>(), d in 2usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = CppNet::new();
        net.insert(random_subnet(d, &mut rng));
        net.insert(random_subnet(d + 1, &mut rng));
        let back = CppNet::from_text(&net.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), net.to_text());
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..2.0)).collect();
        prop_assert_eq!(back.forward(&v).unwrap().to_bits(), net.forward(&v).unwrap().to_bits());
    }
}

#[test]
fn table_activation_tracks_direct_activation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = CppNet::new();
    net.insert(random_subnet(6, &mut rng));
    let lut = net.clone().with_activation(Activation::Table { bits: 10 });
    for _ in 0..1000 {
        let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..2.0)).collect();
        let gap = (net.forward(&v).unwrap() - lut.forward(&v).unwrap()).abs();
        assert!(gap < 1e-2, "gap {gap}");
    }
}

#[test]
fn committed_weights_cover_the_mackay_code() {
    let net = common::trained_net();
    for d in mackay().distinct_check_degrees() {
        assert_eq!(net.subnet(d).unwrap().degree(), d);
    }
}

#[test]
fn collected_samples_round_trip_through_files() {
    let code = mackay();
    let spec = CollectSpec {
        ebn0_db: 5.0,
        train_per_degree: 300,
        validation_per_degree: 50,
        k_min: 2,
        max_frames: 1000,
        seed: 4,
    };
    let set = collect_samples(&code, PddConfig::default(), &spec, false).unwrap();
    assert_eq!(set.train.len(), 300);
    assert_eq!(set.validation.len(), 50);
    assert!(set.train.iter().all(|s| s.k_iters >= 2 && s.degree() == 6));
    let dir = tempfile::tempdir().unwrap();
    let paths = write_sample_files(dir.path(), &set.train).unwrap();
    assert_eq!(paths.len(), 1);
    let (d, back) = read_sample_file(&paths[0]).unwrap();
    assert_eq!(d, 6);
    assert_eq!(back, set.train);
}
