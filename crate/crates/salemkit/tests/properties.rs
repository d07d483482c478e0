use num::{BigInt, BigRational, BigUint, One, Zero};
use proptest::prelude::*;

use salemkit::analysis::{convex_hull, hull_contains, ExponentRegion, RegionKind};
use salemkit::measures::{convolve, fourier_eval, measure_from_text, measure_to_text, DiscreteMeasure};
use salemkit::samplers::{
    dirichlet, dirichlet_direct, is_block_sparse, partition_indices, two_partition_decompose, BlockKind,
};
use salemkit::scales::grid_points;
use salemkit::{Mass, Point};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn measure_strategy(d: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((prop::collection::vec(-20i64..20, d), 1i64..50, 1i64..30), 1..12).prop_map(move |atoms| {
        DiscreteMeasure::from_atoms(
            d,
            2,
            BigUint::from(64u32),
            atoms.into_iter().map(|(p, n, den)| (p, q(n, den))),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip(mu in measure_strategy(2)) {
        let text = measure_to_text(&mu);
        let back = measure_from_text(&text).unwrap();
        prop_assert_eq!(&back, &mu);
        prop_assert_eq!(measure_to_text(&back), text);
    }

    #[test]
    fn convolution_multiplies_mass_and_commutes(mu in measure_strategy(1), nu in measure_strategy(1)) {
        let a = convolve(&mu, &nu).unwrap();
        let b = convolve(&nu, &mu).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total_mass(), mu.total_mass() * nu.total_mass());
    }

    #[test]
    fn convolution_transform_is_product(mu in measure_strategy(1), nu in measure_strategy(1), xi in -40.0f64..40.0) {
        let conv = convolve(&mu, &nu).unwrap();
        let lhs = fourier_eval(&conv, &[xi]);
        let rhs = fourier_eval(&mu, &[xi]) * fourier_eval(&nu, &[xi]);
        let scale = conv.masses_f64().iter().sum::<f64>().max(1.0);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * scale);
    }

    #[test]
    fn refine_and_translate_preserve_mass(mu in measure_strategy(2), k in 1u64..5, v in prop::collection::vec(-9i64..9, 2)) {
        let total = mu.total_mass();
        prop_assert_eq!(mu.refine(3, k).total_mass(), total.clone());
        prop_assert_eq!(mu.translate(&v).total_mass(), total.clone());
        prop_assert_eq!(mu.reflect().reflect(), mu.clone());
    }

    #[test]
    fn dirichlet_closed_form_matches_sum(n in 1u64..80, t in -5.0f64..5.0) {
        prop_assert!((dirichlet(n, t) - dirichlet_direct(n, t)).norm() < 1e-9);
    }

    #[test]
    fn region_half_planes_match_hull(
        an in 1i64..30, bn in 1i64..30, d in 1usize..4,
        a in -2i64..62, b in -2i64..62, den in 1i64..61,
    ) {
        let dd = d as i64 * 10;
        let alpha = q(an.min(dd - 1), 10);
        let beta = q(bn.min(dd), 10);
        let region = ExponentRegion { alpha, beta, d };
        let pt = (q(a, den), q(b, den));
        let pentagon_regime = &region.beta < &(q(2, 1) * &region.alpha) && region.alpha < region.beta;
        for kind in [RegionKind::Triangle, RegionKind::Trapezoid, RegionKind::Pentagon] {
            if kind == RegionKind::Pentagon && !pentagon_regime {
                continue;
            }
            let hull = convex_hull(region.vertices(kind));
            prop_assert_eq!(region.contains(kind, &pt.0, &pt.1), hull_contains(&hull, &pt), "{:?}", kind);
        }
    }

    #[test]
    fn two_partition_decomposition_is_exact(
        side in 2i64..9,
        qb in 1i64..4,
        qr in 1i64..3,
        fold in 2i64..4,
        weights in prop::collection::vec(1i64..6, 64),
    ) {
        let ground: Vec<Point> = grid_points(2, side);
        let b_kind = BlockKind::Plain { q: qb };
        let r_kind = BlockKind::Modular { q: qr, modulus: qr * fold };
        let b_part = partition_indices(&ground, b_kind).unwrap();
        let r_part = partition_indices(&ground, r_kind).unwrap();
        let w: Vec<i64> = (0..ground.len()).map(|i| weights[i % weights.len()]).collect();
        let total: i64 = w.iter().sum();
        let p: Vec<Mass> = w.iter().map(|&x| q(x, total)).collect();
        let heaviest = b_part.iter().chain(&r_part).map(|blk| blk.iter().map(|&u| w[u]).sum::<i64>()).max().unwrap();
        let t = (total / heaviest) as usize;
        let dist = two_partition_decompose(&ground, &b_part, &r_part, t, &p).unwrap();
        prop_assert!(dist.verify(&p, &b_part, &r_part));
        prop_assert!(dist.atoms.len() <= dist.num_arcs + 1);
        let sum: Mass = dist.weights().into_iter().fold(Mass::zero(), |acc, x| acc + x);
        prop_assert!(sum.is_one());
        for k in 0..dist.atoms.len() {
            let pts = dist.atom_points(k);
            prop_assert_eq!(pts.len(), t);
            prop_assert!(is_block_sparse(&pts, b_kind) && is_block_sparse(&pts, r_kind));
        }
    }
}
