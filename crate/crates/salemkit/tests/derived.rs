//! Worked values checked against enumeration, direct-sum and Monte Carlo oracles.

use num::{BigInt, BigRational, BigUint, One, ToPrimitive, Zero};
use rand::Rng;
use std::f64::consts::PI;

use salemkit::analysis::{
    conv_sharpness_geometric, frostman_fit, inverse_scale_radii, restriction_experiment_geometric, ExponentRegion,
    BOHR_C,
};
use salemkit::constructions::{
    build_geometric_factorization, build_restriction_geometric, build_salem, ConstructionKind, ConstructionParams,
};
use salemkit::measures::{ball_mass, convolve, fourier_eval, increment_d, neighborhood_volume, DiscreteMeasure};
use salemkit::samplers::{
    ad_fiber, ad_regular_sample, ad_spec, build_partition_blocks, char_m, check_counting_bounds, pmf,
    residue_separated_sum, two_partition_decompose, two_partition_draw_index, BlockKind, Pmf, Stream,
};
use salemkit::scales::{expand_levels, lattice_point, make_scales, max_lattice_multiplicity, Exponent, OffspringAssignment};
use salemkit::{Mass, Point};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn multiplicity_of_full_two_level_word_set() {
    let scales = make_scales(1, 2, &[2, 3]).unwrap();
    let mut a = OffspringAssignment::new(2, 2);
    let first: Vec<Point> = (0..3).map(|u| vec![u]).collect();
    let second: Vec<Point> = (0..5).map(|u| vec![u]).collect();
    a.set_uniform(vec![], first.clone());
    for u in &first {
        a.set_uniform(vec![u.clone()], second.clone());
    }
    let leaves = expand_levels(&scales, &a, 2).unwrap().pop().unwrap();
    assert_eq!(leaves.leaves.len(), 15);
    let at_three = leaves
        .leaves
        .iter()
        .filter(|l| lattice_point(&scales, &l.word).unwrap() == vec![3])
        .count();
    assert_eq!(at_three, 2);
    let max = max_lattice_multiplicity(&scales, &leaves).unwrap();
    assert_eq!(max, 2);
    assert!(max <= 4);
}

#[test]
fn digit_pmf_of_two_fair_bits() {
    let p = Pmf::new(1, 2, 1, 2);
    assert_eq!(p.q_table(), vec![q(1, 4), q(1, 2), q(1, 4)]);
}

#[test]
fn char_m_matches_direct_sum() {
    let mut rng = Stream::new(5).rng();
    for (d, r, m) in [(1usize, 2u32, 5u64), (2, 3, 4), (1, 1, 7)] {
        let scales = make_scales(d, r, &[m]).unwrap();
        let p = pmf(&scales, 1);
        for _ in 0..20 {
            let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut direct = num::complex::Complex64::new(0.0, 0.0);
            for u in p.support() {
                let phase: f64 = u.iter().zip(&xi).map(|(a, x)| *a as f64 * x).sum();
                direct += num::complex::Complex64::from_polar(p.p_f64(&u), -2.0 * PI * phase);
            }
            assert!((char_m(&scales, 1, &xi) - direct).norm() < 1e-12);
        }
    }
}

#[test]
fn ad_seed_fibers_at_sixteen() {
    let alpha = Exponent::new(1, 2);
    let spec = ad_spec(1, 2, alpha, 16).unwrap();
    assert_eq!((spec.n0, spec.free_bits, spec.t), (2, 3, 8));
    let fixed: Vec<usize> = spec.s.iter().map(|&s| 1 - s as usize).collect();
    let total_bits: usize = fixed.iter().sum();
    assert_eq!(1usize << total_bits, 2);
    let mut covered: Vec<i64> = Vec::new();
    for code in 0..(1u32 << total_bits) {
        let mut bit = 0;
        let zeta: Vec<Vec<bool>> = fixed
            .iter()
            .map(|&k| {
                (0..k)
                    .map(|_| {
                        let b = (code >> bit) & 1 == 1;
                        bit += 1;
                        b
                    })
                    .collect()
            })
            .collect();
        let fiber = ad_fiber(&spec, &zeta);
        assert_eq!(fiber.len(), 8);
        let c = check_counting_bounds(&fiber, 1, 16, 0.5, spec.c0.c0);
        assert!(c.upper_ok && c.lower_ok, "{c:?}");
        covered.extend(fiber.iter().map(|p| p[0]));
    }
    covered.sort();
    assert_eq!(covered, (0..16).collect::<Vec<_>>());
}

#[test]
fn ad_sample_marginals_match_pmf() {
    let alpha = Exponent::new(1, 2);
    let (m, r, draws) = (16u64, 2u32, 10_000usize);
    let t = ad_spec(1, r, alpha, m).unwrap().t as f64;
    let p = Pmf::new(1, r, 1, m);
    let mut hits = vec![0usize; p.support_side() as usize];
    for i in 0..draws {
        let mut rng = Stream::new(6).index(i as u64).rng();
        for u in ad_regular_sample(1, r, alpha, m, &mut rng).unwrap() {
            hits[u[0] as usize] += 1;
        }
    }
    for (u, &h) in hits.iter().enumerate() {
        let expected = t * p.p_f64(&[u as i64]);
        let freq = h as f64 / draws as f64;
        let se = (expected * (1.0 - expected) / draws as f64).sqrt();
        assert!((freq - expected).abs() <= 4.0 * se + 1e-12, "u={u}: {freq} vs {expected}");
    }
}

#[test]
fn modular_cell_count_bound() {
    for d in 1..=2usize {
        for (qq, big_q) in [(1i64, 2i64), (2, 4), (1, 3), (2, 6), (3, 6)] {
            for side in [5i64, 9, 13] {
                let cells = build_partition_blocks(BlockKind::Modular { q: qq, modulus: big_q }, d, side).unwrap();
                let direct: std::collections::HashSet<Point> = salemkit::scales::grid_points(d, side)
                    .iter()
                    .map(|u| u.iter().map(|c| c.rem_euclid(big_q) / qq).collect())
                    .collect();
                assert_eq!(cells.len(), direct.len());
                assert!(cells.len() as i64 <= (big_q / qq).pow(d as u32));
            }
        }
    }
}

#[test]
fn residue_separated_sum_example() {
    let grid = vec![vec![0], vec![2]];
    let sparse = vec![vec![0], vec![1]];
    let cert = residue_separated_sum(&grid, &sparse, 1, 2).unwrap();
    let mut sum = cert.sumset.clone();
    sum.sort();
    assert_eq!(sum, vec![vec![0], vec![1], vec![2], vec![3]]);
    assert!(cert.bijective && cert.block_sparse);
}

#[test]
fn two_partition_rows_and_columns() {
    let ground = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
    let rows = vec![vec![0, 1], vec![2, 3]];
    let cols = vec![vec![0, 2], vec![1, 3]];
    let p = vec![q(1, 4); 4];
    let dist = two_partition_decompose(&ground, &rows, &cols, 2, &p).unwrap();
    let mut atoms: Vec<Vec<Point>> = (0..dist.atoms.len()).map(|k| dist.atom_points(k)).collect();
    atoms.sort();
    assert_eq!(atoms, vec![vec![vec![0, 0], vec![1, 1]], vec![vec![0, 1], vec![1, 0]]]);
    assert_eq!(dist.weights(), vec![q(1, 2), q(1, 2)]);

    let mut rng = Stream::new(7).rng();
    let draws = 10_000;
    let first = (0..draws).filter(|_| two_partition_draw_index(&dist, &mut rng) == 0).count();
    let freq = first as f64 / draws as f64;
    assert!((freq - 0.5).abs() <= 4.0 * (0.25f64 / draws as f64).sqrt());
}

#[test]
fn two_partition_three_points() {
    let ground = vec![vec![0], vec![1], vec![2]];
    let singles = vec![vec![0], vec![1], vec![2]];
    let r = vec![vec![0, 1], vec![2]];
    let p = vec![q(1, 4), q(1, 4), q(1, 2)];
    let dist = two_partition_decompose(&ground, &singles, &r, 2, &p).unwrap();
    let mut atoms = dist.atoms.clone();
    atoms.sort();
    assert_eq!(atoms, vec![vec![0, 2], vec![1, 2]]);
    assert_eq!(dist.weights(), vec![q(1, 2), q(1, 2)]);
    assert_eq!(dist.marginals(), vec![q(1, 2), q(1, 2), q(1, 1)]);
}

#[test]
fn convolution_of_two_fair_coins() {
    let s = BigUint::from(4u32);
    let coin = DiscreteMeasure::uniform(1, 1, s.clone(), &[vec![0], vec![1]]).unwrap();
    let c = convolve(&coin, &coin).unwrap();
    assert_eq!(c.points(), &[vec![0], vec![1], vec![2]]);
    assert_eq!(c.masses(), &[q(1, 4), q(1, 2), q(1, 4)]);
}

#[test]
fn half_spaced_coin_transform_vanishes_at_one() {
    let mu = DiscreteMeasure::uniform(1, 1, BigUint::from(2u32), &[vec![0], vec![1]]).unwrap();
    assert!(fourier_eval(&mu, &[1.0]).norm() < 1e-15);
}

#[test]
fn ball_mass_matches_linear_scan() {
    let mut rng = Stream::new(8).rng();
    for _ in 0..50 {
        let scale = 16i64;
        let atoms: Vec<(Point, Mass)> = (0..12)
            .map(|_| (vec![rng.gen_range(-20..20), rng.gen_range(-20..20)], q(rng.gen_range(1..9), 7)))
            .collect();
        let mu = DiscreteMeasure::from_atoms(2, 1, BigUint::from(scale as u64), atoms).unwrap();
        let x = vec![q(rng.gen_range(-40..40), 32), q(rng.gen_range(-40..40), 32)];
        let rho = q(rng.gen_range(1..40), 16);
        let mut scan = Mass::zero();
        for (p, m) in mu.atoms() {
            let d2: BigRational = p.iter().zip(&x).map(|(a, c)| (q(*a, scale) - c).pow(2)).sum();
            if d2 < &rho * &rho {
                scan += m;
            }
        }
        assert_eq!(ball_mass(&mu, &x, &rho), scan);
    }
}

#[test]
fn salem_increments_are_bounded_by_two() {
    let s = build_salem(&ConstructionParams::desk(ConstructionKind::Salem, 7)).unwrap();
    let mut rng = Stream::new(9).rng();
    for n in 2..=s.family.len() {
        for _ in 0..200 {
            let xi = [rng.gen_range(-1e4..1e4)];
            let v = increment_d(&s.family[n - 1], &s.family[n - 2], &s.scales, n, &xi).unwrap();
            assert!(v.norm() <= 2.0 + 1e-12);
        }
    }
}

#[test]
fn neighborhood_volume_matches_cell_enumeration() {
    let mut rng = Stream::new(10).rng();
    for d in 1..=2usize {
        for _ in 0..20 {
            let pts: Vec<Point> = (0..8).map(|_| (0..d).map(|_| rng.gen_range(-12..12)).collect()).collect();
            let m = rng.gen_range(1..4i64);
            let scale = 8u32;
            let vol = neighborhood_volume(&pts, d, &BigUint::from(scale), &q(m, scale as i64)).unwrap();
            let mut cells = 0i64;
            let range = -20..20i64;
            let covered = |c: &[i64]| pts.iter().any(|p| p.iter().zip(c).all(|(a, k)| *k >= a - m && *k < a + m));
            if d == 1 {
                cells = range.filter(|&k| covered(&[k])).count() as i64;
            } else {
                for i in range.clone() {
                    for j in range.clone() {
                        cells += covered(&[i, j]) as i64;
                    }
                }
            }
            assert_eq!(vol, q(cells, (scale as i64).pow(d as u32)));
        }
    }
}

#[test]
fn eta_total_mass_is_the_rational_product() {
    let b = build_restriction_geometric(&ConstructionParams::desk(ConstructionKind::RestrictionGeo, 7)).unwrap();
    let d = b.scales.d() as u32;
    let mut prod = Mass::one();
    for (k, lv) in b.levels.iter().enumerate() {
        prod *= q(lv.m_bar.pow(d), lv.t as i64);
        assert_eq!(b.eta_family[k].total_mass(), prod);
    }
}

#[test]
fn uniform_measure_frostman_constant_at_most_three() {
    let scales = make_scales(1, 1, &[4, 5, 8]).unwrap();
    let n = scales.depth();
    let side = scales.mm_i64(n).unwrap();
    let pts: Vec<Point> = (0..side).map(|u| vec![u]).collect();
    let mu = DiscreteMeasure::uniform(1, n, scales.mm(n).clone(), &pts).unwrap();
    let centers: Vec<Vec<BigRational>> = (0..=4 * side).map(|k| vec![q(k - side, 2 * side)]).collect();
    let radii = inverse_scale_radii(&scales, n);
    let r = frostman_fit(&[mu], 1.0, &centers, &radii, 3.0).unwrap();
    assert!(r.passed(), "{:?}", r.failures());
    assert!(r.scalars["c_sup"] <= 3.0);
}

#[test]
fn grid_factor_has_unit_transform_on_the_dual_lattice() {
    let b = build_restriction_geometric(&ConstructionParams::desk(ConstructionKind::RestrictionGeo, 7)).unwrap();
    for (k, mu) in b.grid_family.iter().enumerate() {
        let mm = b.grid_scales.mm_f64(k + 1);
        for j in [-3.0, -1.0, 1.0, 2.0, 5.0] {
            assert!((fourier_eval(mu, &[j * mm]).norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn critical_vertex_is_on_both_boundary_lines() {
    for (alpha, beta, d) in [(q(3, 4), q(1, 2), 1usize), (q(6, 5), q(3, 2), 2), (q(2, 1), q(3, 1), 3)] {
        let region = ExponentRegion { alpha: alpha.clone(), beta: beta.clone(), d };
        let (a, b) = region.vertex_c();
        let da = BigRational::from_integer(BigInt::from(d)) - &alpha;
        assert_eq!(&beta + &da * &b, (&da + &beta) * &a);
        assert_eq!((&da + &beta) * &b, &da * &a);
    }
}

#[test]
fn geometric_sharpness_exterior_shift_of_critical_vertex() {
    let fm = build_geometric_factorization(&ConstructionParams::desk(ConstructionKind::GeoFactorization, 7)).unwrap();
    let region = ExponentRegion::new(fm.alpha, fm.beta, fm.scales.d()).unwrap();
    let (a, b) = region.vertex_c();
    let (a, b) = (a.to_f64().unwrap(), b.to_f64().unwrap());
    let at_vertex = conv_sharpness_geometric(&fm, a, b, &[1, 2, 3], 256).unwrap();
    let outside = conv_sharpness_geometric(&fm, a + 0.1, b, &[1, 2, 3], 256).unwrap();
    assert!(outside.passed(), "{:?}", outside.failures());
    let growth = |r: &salemkit::analysis::ExperimentReport| {
        let v = r.values("ratio");
        v[v.len() - 1] / v[0]
    };
    assert!(growth(&at_vertex) < growth(&outside));
}

#[test]
fn restriction_at_q_star_has_no_trend() {
    let b = build_restriction_geometric(&ConstructionParams::desk(ConstructionKind::RestrictionGeo, 7)).unwrap();
    let region = ExponentRegion::new(b.alpha, b.beta, b.scales.d()).unwrap();
    let q_star = region.q_star().to_f64().unwrap();
    let r = restriction_experiment_geometric(&b, 2.0, q_star, BOHR_C, 2048).unwrap();
    assert!(r.passed(), "{:?}", r.failures());
    let v = r.values("ratio");
    assert!(v.windows(2).all(|w| w[1] <= w[0] * 1.05), "{v:?}");
}
