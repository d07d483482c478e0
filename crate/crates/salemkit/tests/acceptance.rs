//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num::{BigInt, BigRational, ToPrimitive};
use rand::Rng;

use salemkit::analysis::{
    conv_sharpness_geometric, conv_sharpness_nongeometric, convex_hull, energy_series, factorization_report,
    heavy_core_certificate, hull_contains, increment_concentration, restriction_experiment_nongeometric,
    restriction_geo_suite, verify_suite, ExperimentReport, ExponentRegion, NetSpec, RegionKind, ENERGY_C,
    ENERGY_GRID,
};
use salemkit::constructions::{
    build, build_geometric_factorization, build_heavy_core, build_restriction_geometric,
    build_restriction_nongeometric, build_salem, Built, ConstructionKind, ConstructionParams,
};
use salemkit::measures::{measure_to_text, phi_hat, phi_hat_scaled, KernelPhi};
use salemkit::samplers::{
    ad_regular_sample, ad_spec, char_m, check_counting_bounds, dirichlet, is_block_sparse, partition_indices,
    t_scale_holds, two_partition_decompose, BlockKind, Stream,
};
use salemkit::scales::{grid_points, make_scales, Exponent};
use salemkit::Result;

type Outcome = Result<(bool, String)>;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn failures(r: &ExperimentReport) -> String {
    r.failures().iter().map(|v| format!("{}: {}", v.name, v.detail)).collect::<Vec<_>>().join("; ")
}

fn refinement_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for d in 1..=2usize {
        for r in 1..=3u32 {
            let scales = make_scales(d, r, &[4, 8, 16, 32])?;
            let kernel = KernelPhi { r, d };
            for n in 1..=scales.depth() {
                let mut rng = Stream::new(1).index((d * 100 + r as usize * 10 + n) as u64).rng();
                let mm = scales.mm_f64(n);
                for _ in 0..1000 {
                    let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0 * mm..4.0 * mm)).collect();
                    let prev = if n == 1 { phi_hat(&kernel, &xi) } else { phi_hat_scaled(&kernel, &scales, n - 1, &xi) };
                    let t: Vec<f64> = xi.iter().map(|x| x / mm).collect();
                    let next = char_m(&scales, n, &t) * phi_hat_scaled(&kernel, &scales, n, &xi);
                    worst = worst.max((prev - next).norm());
                    checked += 1;
                }
            }
        }
    }
    Ok((worst <= 1e-10, format!("{checked} frequencies, max deviation {worst:.2e} (tolerance 1e-10)")))
}

fn dirichlet_lower_bound() -> Outcome {
    let mut rng = Stream::new(2).rng();
    let mut violations = 0;
    let mut min_abs = f64::INFINITY;
    for n in 2..=64u64 {
        let half_width = 1.0 / (2.0 * n as f64);
        for _ in 0..1000 {
            let t = rng.gen_range(-50i64..=50) as f64 + rng.gen_range(-half_width..half_width);
            let v = dirichlet(n, t).norm();
            min_abs = min_abs.min(v);
            if v < 0.5 {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("63000 samples, {violations} violations, min |D_N| = {min_abs:.4}")))
}

fn two_partition_sampling() -> Outcome {
    let mut rng = Stream::new(3).rng();
    let mut detail = String::new();
    let mut max_atoms = 0;
    for inst in 0..50 {
        let d = rng.gen_range(1..=2usize);
        let side = if d == 1 { rng.gen_range(8..=200i64) } else { rng.gen_range(3..=14i64) };
        let ground = grid_points(d, side);
        let qb = rng.gen_range(1..=4i64);
        let qr = rng.gen_range(1..=3i64);
        let b_kind = BlockKind::Plain { q: qb };
        let r_kind = BlockKind::Modular { q: qr, modulus: qr * rng.gen_range(2..=4i64) };
        let b_part = partition_indices(&ground, b_kind)?;
        let r_part = partition_indices(&ground, r_kind)?;
        let w: Vec<i64> = ground.iter().map(|_| rng.gen_range(1..=5)).collect();
        let total: i64 = w.iter().sum();
        let p: Vec<BigRational> = w.iter().map(|&x| q(x, total)).collect();
        let heaviest = b_part
            .iter()
            .chain(&r_part)
            .map(|blk| blk.iter().map(|&u| w[u]).sum::<i64>())
            .max()
            .unwrap_or(total);
        let t = (total / heaviest) as usize;
        let dist = two_partition_decompose(&ground, &b_part, &r_part, t, &p)?;
        let tq = BigRational::from_integer(BigInt::from(t));
        let marginals_ok = dist.marginals().iter().zip(&p).all(|(m, pu)| *m == &tq * pu);
        let atoms_ok = (0..dist.atoms.len()).all(|k| {
            let pts = dist.atom_points(k);
            pts.len() == t && is_block_sparse(&pts, b_kind) && is_block_sparse(&pts, r_kind)
        });
        let count_ok = dist.atoms.len() <= dist.num_arcs + 1;
        max_atoms = max_atoms.max(dist.atoms.len());
        if !(marginals_ok && atoms_ok && count_ok && dist.verify(&p, &b_part, &r_part)) {
            detail = format!(
                "instance {inst}: marginals {marginals_ok}, atoms {atoms_ok}, count {} ≤ {}",
                dist.atoms.len(),
                dist.num_arcs + 1
            );
            return Ok((false, detail));
        }
    }
    detail.push_str(&format!("50 instances exact, at most {max_atoms} atoms"));
    Ok((true, detail))
}

fn ad_regular_sampling() -> Outcome {
    let r = 2u32;
    let mut configs = 0;
    for d in 1..=2usize {
        for alpha in [Exponent::new(3, 10), Exponent::new(1, 2), Exponent::new(4 * d as i64, 5)] {
            let n0 = ad_spec(d, r, alpha, 1 << 20)?.n0;
            for n in n0..=n0 + 3 {
                let m = 1u64 << n;
                let spec = ad_spec(d, r, alpha, m)?;
                if !t_scale_holds(&spec, alpha) {
                    return Ok((false, format!("d={d} α={alpha} M={m}: T = {} outside the scale bounds", spec.t)));
                }
                for i in 0..100u64 {
                    let mut rng = Stream::new(4).index(configs * 1000 + i).rng();
                    let mut set = ad_regular_sample(d, r, alpha, m, &mut rng)?;
                    set.sort();
                    set.dedup();
                    if set.len() as u64 != spec.t {
                        return Ok((false, format!("d={d} α={alpha} M={m}: #S = {} ≠ T = {}", set.len(), spec.t)));
                    }
                    let c = check_counting_bounds(&set, d, m, alpha.to_f64(), spec.c0.c0);
                    if !(c.upper_ok && c.lower_ok) {
                        return Ok((false, format!("d={d} α={alpha} M={m} realization {i}: {c:?}")));
                    }
                }
                configs += 1;
            }
        }
    }
    Ok((true, format!("{configs} configurations × 100 realizations")))
}

fn salem_frostman_lower() -> Outcome {
    let built = build(&ConstructionParams::desk(ConstructionKind::Salem, 7))?;
    let reports = verify_suite(&built)?;
    let (frostman, lower) = (&reports[0], &reports[1]);
    let ok = frostman.passed() && lower.passed();
    let detail = if ok {
        format!(
            "Frostman constant {:.3} within declared, lower mass ratios {:?}",
            frostman.scalars.get("c_sup").copied().unwrap_or(f64::NAN),
            lower.scalars
        )
    } else {
        format!("{} {}", failures(frostman), failures(lower))
    };
    Ok((ok, detail))
}

fn heavy_core() -> Outcome {
    let h = build_heavy_core(&ConstructionParams::desk(ConstructionKind::HeavyCore, 7))?;
    let r = heavy_core_certificate(&h)?;
    let detail = if r.passed() { format!("{} exact verdicts", r.verdicts.len()) } else { failures(&r) };
    Ok((r.passed(), detail))
}

fn geometric_factorization() -> Outcome {
    let fm = build_geometric_factorization(&ConstructionParams::desk(ConstructionKind::GeoFactorization, 7))?;
    let reports = factorization_report(&fm)?;
    let ok = reports.iter().all(|r| r.passed());
    let detail = if ok {
        let counts = reports[0].values("difference_set");
        format!("identity, sparsity and difference counts {counts:?} exact")
    } else {
        reports.iter().map(failures).collect::<Vec<_>>().join("; ")
    };
    Ok((ok, detail))
}

fn fourier_decay_statistical() -> Outcome {
    let mut replicas = Vec::new();
    let mut last = None;
    for seed in 0..32u64 {
        let s = build_salem(&ConstructionParams::desk(ConstructionKind::Salem, 1000 + seed))?;
        replicas.push(s.family.clone());
        last = Some(s);
    }
    let s = last.expect("32 replicas");
    let alpha = s.alpha.to_f64();
    let r = increment_concentration(
        &replicas,
        &s.scales,
        &s.t,
        alpha / 2.0,
        &[8.0],
        &NetSpec::standard(s.scales.r(), s.scales.d()),
    )?;
    let fracs = r.values("exceedance_b8");
    let envs = r.values("envelope_b8");
    let detail = if r.passed() {
        format!("exceedance {fracs:?} vs envelope {:?}", envs.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>())
    } else {
        failures(&r)
    };
    Ok((r.passed(), detail))
}

fn resonance() -> Outcome {
    let mut p = ConstructionParams::desk(ConstructionKind::RestrictionGeo, 7);
    p.depth = 2;
    let b = build_restriction_geometric(&p)?;
    let r = restriction_geo_suite(&b)?.remove(0);
    let points: f64 = r.values("bohr_points").iter().sum();
    let ok = r.passed() && points > 0.0;
    let detail = if r.passed() { format!("{points} certified Bohr points, all floors and closed forms hold") } else { failures(&r) };
    Ok((ok, detail))
}

fn energy() -> Outcome {
    let b = build_restriction_geometric(&ConstructionParams::desk(ConstructionKind::RestrictionGeo, 7))?;
    let r = energy_series(&b.grid_family, &b.grid_scales, ENERGY_C, ENERGY_GRID)?;
    let detail = if r.passed() { format!("{} verdicts on a {ENERGY_GRID}-point grid", r.verdicts.len()) } else { failures(&r) };
    Ok((r.passed(), detail))
}

fn to_f64(p: &(BigRational, BigRational)) -> (f64, f64) {
    (p.0.to_f64().unwrap(), p.1.to_f64().unwrap())
}

fn sharpness_trends() -> Outcome {
    let levels = [1, 2, 3];
    let fm = build_geometric_factorization(&ConstructionParams::desk(ConstructionKind::GeoFactorization, 7))?;
    let geo_region = ExponentRegion::from_f64(fm.alpha.to_f64(), fm.beta.to_f64(), fm.scales.d())?;
    let (ia, ib) = to_f64(&geo_region.centroid(RegionKind::Triangle));
    let geo_in = conv_sharpness_geometric(&fm, ia, ib, &levels, 512)?;
    let geo_out = conv_sharpness_geometric(&fm, 0.9, 0.1, &levels, 512)?;

    let mut hp = ConstructionParams::desk(ConstructionKind::HeavyCore, 7);
    hp.schedule = Some(vec![64, 128, 256]);
    let h = build_heavy_core(&hp)?;
    let pent = ExponentRegion::new(h.alpha, h.beta, h.scales.d())?;
    let (pa, pb) = to_f64(&pent.centroid(RegionKind::Pentagon));
    let ng_in = conv_sharpness_nongeometric(&h, pa, pb, &levels, 512)?;
    let ng_out = conv_sharpness_nongeometric(&h, 1.0, 0.0, &levels, 512)?;

    let runs = [("geo interior", &geo_in), ("geo exterior", &geo_out), ("nongeo interior", &ng_in), ("nongeo exterior", &ng_out)];
    let ok = runs.iter().all(|(_, r)| r.passed());
    let detail = runs
        .iter()
        .map(|(name, r)| {
            let v: Vec<String> = r.values("ratio").iter().map(|x| format!("{x:.3}")).collect();
            let status = if r.passed() { String::new() } else { format!(" [{}]", failures(r)) };
            format!("{name} {v:?}{status}")
        })
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, detail))
}

fn region_geometry() -> Outcome {
    let triples = [
        (q(2, 5), q(1, 2), 1usize),
        (q(3, 4), q(1, 1), 1),
        (q(6, 5), q(3, 2), 2),
        (q(3, 5), q(1, 1), 2),
        (q(2, 1), q(3, 1), 3),
    ];
    let mut rng = Stream::new(12).rng();
    let mut disagreements = 0;
    for (alpha, beta, d) in &triples {
        let region = ExponentRegion { alpha: alpha.clone(), beta: beta.clone(), d: *d };
        for kind in [RegionKind::Triangle, RegionKind::Trapezoid, RegionKind::Pentagon] {
            let hull = convex_hull(region.vertices(kind));
            for i in 0..10_000 {
                let den = if i % 2 == 0 { rng.gen_range(1..=60i64) } else { rng.gen_range(1_000..=1_000_000i64) };
                let a = q(rng.gen_range(-den / 10..=den + den / 10), den);
                let b = q(rng.gen_range(-den / 10..=den + den / 10), den);
                if region.contains(kind, &a, &b) != hull_contains(&hull, &(a, b)) {
                    disagreements += 1;
                }
            }
        }
    }
    let mut vertex_ok = true;
    for d in 2..=6i64 {
        let region = ExponentRegion { alpha: q(d - 1, 1), beta: q(d - 1, 1), d: d as usize };
        vertex_ok &= region.vertex_c() == (q(d, d + 1), q(1, d + 1));
    }
    Ok((
        disagreements == 0 && vertex_ok,
        format!("150000 points, {disagreements} disagreements; α=β=d-1 vertex exact for d=2..6: {vertex_ok}"),
    ))
}

fn fingerprint(built: &Built) -> String {
    built.family().iter().map(measure_to_text).collect()
}

fn randomized_outputs(params: &[ConstructionParams]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for p in params {
        let echo = serde_json::to_string(p).expect("params serialize");
        let replay: ConstructionParams = serde_json::from_str(&echo).expect("params parse");
        let built = build(&replay)?;
        out.push(fingerprint(&built));
        for r in verify_suite(&built)? {
            out.push(r.to_json()?);
        }
    }
    let nongeo = build_restriction_nongeometric(&ConstructionParams::desk(ConstructionKind::RestrictionNongeo, 7))?;
    out.push(restriction_experiment_nongeometric(&nongeo, 3.0, 8.0, 64)?.to_json()?);
    let mut rng = Stream::new(13).rng();
    let ground = grid_points(2, 6);
    let part = partition_indices(&ground, BlockKind::Plain { q: 2 })?;
    let cols = partition_indices(&ground, BlockKind::Modular { q: 1, modulus: 3 })?;
    let w: Vec<i64> = ground.iter().map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = w.iter().sum();
    let p: Vec<BigRational> = w.iter().map(|&x| q(x, total)).collect();
    out.push(format!("{:?}", two_partition_decompose(&ground, &part, &cols, 2, &p)?));
    Ok(out)
}

fn reproducibility() -> Outcome {
    let kinds = [
        ConstructionKind::Salem,
        ConstructionKind::HeavyCore,
        ConstructionKind::GeoFactorization,
        ConstructionKind::RestrictionGeo,
        ConstructionKind::RestrictionNongeo,
    ];
    let params: Vec<ConstructionParams> = kinds.iter().map(|&k| ConstructionParams::desk(k, 21)).collect();
    let first = randomized_outputs(&params)?;
    let second = randomized_outputs(&params)?;
    let same = first == second;
    let bytes: usize = first.iter().map(String::len).sum();
    Ok((same, format!("{} artifacts, {bytes} bytes, identical: {same}", first.len())))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "refinement identity", budget: secs(1), run: refinement_identity },
        Criterion { id: 2, name: "Dirichlet lower bound", budget: secs(1), run: dirichlet_lower_bound },
        Criterion { id: 3, name: "two-partition sampling", budget: secs(30), run: two_partition_sampling },
        Criterion { id: 4, name: "AD-regular sampling", budget: secs(60), run: ad_regular_sampling },
        Criterion { id: 5, name: "Salem Frostman and lower mass", budget: secs(60), run: salem_frostman_lower },
        Criterion { id: 6, name: "heavy core", budget: secs(30), run: heavy_core },
        Criterion { id: 7, name: "geometric factorization", budget: secs(30), run: geometric_factorization },
        Criterion { id: 8, name: "Fourier decay, statistical", budget: secs(300), run: fourier_decay_statistical },
        Criterion { id: 9, name: "resonance", budget: secs(30), run: resonance },
        Criterion { id: 10, name: "energy identities", budget: secs(60), run: energy },
        Criterion { id: 11, name: "sharpness trends", budget: secs(300), run: sharpness_trends },
        Criterion { id: 12, name: "region geometry", budget: secs(10), run: region_geometry },
        Criterion { id: 13, name: "reproducibility", budget: secs(300), run: reproducibility },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed <= c.budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {}: {} ({:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
