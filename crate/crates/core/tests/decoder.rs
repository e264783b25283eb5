use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use anfold::lattice::Lattice;
use anfold::oracle::BruteForce;
use anfold::relunet::{build_decoder_bit, build_full_decoder, FoldedDiscriminant, Network};

#[test]
fn a3_box_agrees_with_oracle() {
    let l = Lattice::an(3).unwrap();
    let dec = build_full_decoder(&l).unwrap();
    let oracle = BruteForce::new(&l, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut ties, mut checked) = (0, 0);
    for _ in 0..10_000 {
        // three cells around the origin in every direction
        let alpha: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..4.0)).collect();
        let y = l.generator().vec_mul(&alpha).unwrap();
        let (y0, k) = l.reduce_to_parallelotope(&y).unwrap();
        let r = oracle.closest(&y0).unwrap();
        if r.tie {
            ties += 1;
            continue;
        }
        let want: Vec<i64> = r.z.iter().zip(&k).map(|(a, b)| a + b).collect();
        assert_eq!(dec.decode(&l, &y).unwrap(), want, "y = {y:?}");
        checked += 1;
    }
    assert!(ties < 10 && checked > 9_990);
}

#[test]
fn network_matches_direct_evaluation_n8() {
    let l = Lattice::an(8).unwrap();
    for axis in [0, 3, 7] {
        let net = build_decoder_bit(&l, axis).unwrap();
        let disc = FoldedDiscriminant::build(&l, axis).unwrap();
        let sampler = l.sampler(17);
        for i in 0..2000 {
            let y = sampler.point(i);
            let s = net.forward(&y).unwrap()[0];
            assert!((s - disc.value(&y)).abs() < 1e-9);
        }
    }
}

#[test]
fn depth_and_width() {
    for n in 2..=10 {
        let net = build_decoder_bit(&Lattice::an(n).unwrap(), 0).unwrap();
        let s = net.stats();
        let blocks = (n - 1) * (n - 2) / 2;
        // blocks, one layer of group maxima, then a min tree over n groups
        let min_depth = (n as f64).log2().ceil() as usize;
        assert_eq!(s.depth, blocks + 1 + min_depth, "n={n}");
        assert!(s.max_width <= 2 * n, "n={n}");
    }
}

#[test]
fn serialized_network_still_decodes() {
    let l = Lattice::an(4).unwrap();
    let net = build_decoder_bit(&l, 2).unwrap();
    let dir = std::env::temp_dir().join(format!("anfold-net-{}.json", std::process::id()));
    std::fs::write(&dir, serde_json::to_string(&net).unwrap()).unwrap();
    let back: Network = serde_json::from_str(&std::fs::read_to_string(&dir).unwrap()).unwrap();
    std::fs::remove_file(&dir).ok();
    let sampler = l.sampler(3);
    for i in 0..200 {
        let y = sampler.point(i);
        assert_eq!(back.forward(&y).unwrap(), net.forward(&y).unwrap());
    }
}
