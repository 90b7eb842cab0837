//! Acceptance suite: fourteen end-to-end criteria, each printed as one
//! PASS/FAIL line. Every criterion runs even if an earlier one fails; the
//! test fails at the end if any criterion did.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sadiclab::cfalgo::{self, Algorithm, NatExtPoint, Scalar, Side};
use sadiclab::discrete_geometry::{self as dg, Face, HyperplaneSpec};
use sadiclab::lyapunov::{self, CocycleSpec, Measure, PisotVerdict};
use sadiclab::quadratic::QuadIrr;
use sadiclab::rauzy::{self, DomainExchange, ProjectionFrame};
use sadiclab::sadic::{self, DirectiveSequence};
use sadiclab::substitution::{Family, Substitution};
use sadiclab::words::{self, render, Alphabet, BalanceVerdict, Letter, Word};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn secs(d: Duration) -> String {
    format!("{:.4} s", d.as_secs_f64())
}

fn limit_word_prefix(directive: &str, first: u8, n: usize) -> Result<String, String> {
    let sigma = DirectiveSequence::parse(directive).map_err(err)?;
    let seqs = sadic::limit_sequences(&sigma, 32).map_err(err)?;
    let seq = seqs
        .iter()
        .find(|s| s.first_letters()[0].get() == first)
        .ok_or_else(|| format!("no limit sequence starting with {first}"))?;
    Ok(render(seq.prefix(n).map_err(err)?.letters()))
}

fn c1_tribonacci_word() -> Outcome {
    let t = Instant::now();
    let w = limit_word_prefix("tribonacci", 1, 31)?;
    let elapsed = t.elapsed();
    ensure(w == "1213121121312121312112131213121", || {
        format!("got {w}")
    })?;
    ensure(elapsed < Duration::from_millis(100), || {
        format!("runtime {}", secs(elapsed))
    })?;
    Ok(format!("{w} in {}", secs(elapsed)))
}

fn c2_fibonacci_variant_word() -> Outcome {
    let t = Instant::now();
    let w = limit_word_prefix("sturmian:1,1,1", 2, 29)?;
    let elapsed = t.elapsed();
    ensure(w == "21121121211211212112121121121", || format!("got {w}"))?;
    ensure(elapsed < Duration::from_millis(100), || {
        format!("runtime {}", secs(elapsed))
    })?;
    Ok(format!("{w} in {}", secs(elapsed)))
}

fn face(x: [i64; 3], i: u8) -> Face {
    Face::new(x.to_vec(), Letter::new(i).unwrap())
}

fn c3_e1_star_golden() -> Outcome {
    let sigma = &Family::Tribonacci.substitutions()[0];
    let expected = [
        vec![face([0, 0, 0], 1), face([0, 0, 0], 2), face([0, 0, 0], 3)],
        vec![face([0, 0, 1], 1)],
        vec![face([0, 0, 1], 2)],
    ];
    for (i, want) in expected.iter().enumerate() {
        let got = dg::e1_star(sigma, &face([0, 0, 0], i as u8 + 1)).map_err(err)?;
        let want: dg::Patch = want.iter().cloned().collect();
        ensure(got == want, || {
            format!("image of [0,{}]: {}", i + 1, got.to_lines())
        })?;
    }
    Ok("three images match".into())
}

fn c4_commutative_diagram() -> Outcome {
    let families = [
        Family::Sturmian,
        Family::ArnouxRauzy(3),
        Family::ArnouxRauzy(4),
        Family::Brun,
        Family::Tribonacci,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs = 10_000;
    for trial in 0..pairs {
        let fam = families[rng.gen_range(0..families.len())];
        let subs = fam.substitutions();
        let k = rng.gen_range(1..=3);
        let chosen: Vec<Substitution> = (0..k)
            .map(|_| subs[rng.gen_range(0..subs.len())].clone())
            .collect();
        let sigma = Substitution::compose_all(&chosen).map_err(err)?;
        let d = fam.alphabet_size();
        let len = rng.gen_range(0..=40);
        let w: Vec<Letter> = (0..len)
            .map(|_| Letter::from_index(rng.gen_range(0..d)))
            .collect();
        let alphabet = Alphabet::new(d).map_err(err)?;
        let lhs =
            words::abelianize(sigma.apply(&w).map_err(err)?.letters(), alphabet).map_err(err)?;
        let lw: Vec<i64> = words::abelianize(&w, alphabet)
            .map_err(err)?
            .counts()
            .iter()
            .map(|&c| c as i64)
            .collect();
        let rhs = sigma.incidence().mul_vec_i64(&lw);
        let lhs_big: Vec<BigInt> = lhs.counts().iter().map(|&c| BigInt::from(c)).collect();
        ensure(lhs_big == rhs, || {
            format!("trial {trial}: {sigma} on {}", render(&w))
        })?;
    }
    Ok(format!("{pairs} random pairs"))
}

fn c5_complexity() -> Outcome {
    let horizon = 100_000;
    let fib = DirectiveSequence::parse("sturmian:1,1,1").map_err(err)?;
    let seq = sadic::limit_sequences(&fib, 32).map_err(err)?.remove(0);
    let prefix = seq.prefix(horizon).map_err(err)?;
    for n in 0..=50 {
        let c = words::observed_complexity(prefix.letters(), n).map_err(err)?;
        ensure(c.count == n + 1, || {
            format!("Fibonacci variant p({n}) = {}", c.count)
        })?;
    }
    let trib = DirectiveSequence::parse("tribonacci").map_err(err)?;
    let seq = sadic::limit_sequences(&trib, 32).map_err(err)?.remove(0);
    let prefix = seq.prefix(horizon).map_err(err)?;
    for n in 0..=30 {
        let c = words::observed_complexity(prefix.letters(), n).map_err(err)?;
        ensure(c.count == 2 * n + 1, || {
            format!("Tribonacci p({n}) = {}", c.count)
        })?;
    }
    Ok(format!(
        "n+1 for n ≤ 50 and 2n+1 for n ≤ 30 at horizon {horizon}"
    ))
}

fn c6_balance() -> Outcome {
    let fib = DirectiveSequence::parse("sturmian:1,1,1").map_err(err)?;
    let seq = sadic::limit_sequences(&fib, 32).map_err(err)?.remove(0);
    let prefix = seq.prefix(100_000).map_err(err)?;
    let verdict = words::balance_check(prefix.letters(), 1);
    ensure(verdict.is_balanced(), || {
        format!("Fibonacci variant not 1-balanced: {verdict:?}")
    })?;

    // An Arnoux–Rauzy word to feed the blocks.
    let ar = DirectiveSequence::parse("ar:(1,2,3)^w").map_err(err)?;
    let ar_word = sadic::limit_sequences(&ar, 32)
        .map_err(err)?
        .remove(0)
        .prefix(400)
        .map_err(err)?;
    let mut details = Vec::new();
    for c in 1..=3u64 {
        let block = sadic::imbalanced_ar_block(c).map_err(err)?;
        ensure(block.imbalance > c, || {
            format!("C={c}: imbalance {}", block.imbalance)
        })?;
        let image = block.substitution.apply(ar_word.letters()).map_err(err)?;
        let text = render(image.letters());
        ensure(
            text.contains(&block.u.to_string()) && text.contains(&block.v.to_string()),
            || format!("C={c}: witnesses do not occur in the image"),
        )?;
        ensure(
            matches!(
                words::balance_check(image.letters(), c),
                BalanceVerdict::Witness(_)
            ),
            || format!("C={c}: image passes the balance check"),
        )?;
        if c == 1 {
            ensure(
                block.u == "212".parse::<Word>().unwrap()
                    && block.v == "131".parse::<Word>().unwrap(),
                || format!("C=1 witness ({}, {})", block.u, block.v),
            )?;
        }
        details.push(format!(
            "C={c}: imbalance {} via {} substitutions",
            block.imbalance,
            block.indices.len()
        ));
    }
    Ok(format!("1-balanced at 1e5; {}", details.join("; ")))
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> QuadIrr {
    const SQUAREFREE: [i64; 8] = [2, 3, 5, 6, 7, 10, 11, 13];
    let d = SQUAREFREE[rng.gen_range(0..SQUAREFREE.len())];
    let p = rng.gen_range(-50..50);
    let q = rng.gen_range(1..40);
    let b = if rng.gen_bool(0.5) { 1 } else { -1 };
    QuadIrr::from_ints(p, b, q, d as u64).unwrap().fract()
}

fn c7_continued_fractions() -> Outcome {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let e = cfalgo::cf_expand(inv_phi, 20).map_err(err)?;
    ensure(e.digits == vec![1; 20], || {
        format!("digits of 1/φ: {:?}", e.digits)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let q: i64 = rng.gen_range(2..1_000_000_000);
        let p: i64 = rng.gen_range(1..q);
        let x = BigRational::new(p.into(), q.into());
        let digits = cfalgo::cf_expand_rational(&x, 200).map_err(err)?;
        ensure(cfalgo::cf_reconstruct(&digits) == x, || {
            format!("reconstruction of {x}")
        })?;
    }

    let mut checked = 0;
    while checked < 100 {
        let x = random_quadratic(&mut rng);
        let digits = cfalgo::cf_expand_quadratic(&x, 16).map_err(err)?;
        let depth: u64 = digits.iter().map(|a| a.to_u64().unwrap()).sum::<u64>() + 1;
        let one = <QuadIrr as Scalar>::from_i64(1);
        let exp = cfalgo::expand(
            Algorithm::ClassicalAdditive,
            &[one, x.clone()],
            depth as usize,
        )
        .map_err(err)?;
        let runs = cfalgo::run_lengths(&exp.branches);
        let want: Vec<usize> = digits[..15].iter().map(|a| a.to_usize().unwrap()).collect();
        ensure(runs.len() >= 15 && runs[..15] == want[..], || {
            format!("{x}: runs {runs:?} vs digits {want:?}")
        })?;
        checked += 1;
    }
    Ok("1/φ = [1^20]; 50 exact rational round-trips; 100 quadratic irrationals to depth 15".into())
}

fn c8_brun_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scale: BigInt = BigInt::from(1u8) << 200usize;
    let points = 1000;
    for k in 0..points {
        let draw = |rng: &mut ChaCha8Rng| {
            let limbs: Vec<u32> = (0..7).map(|_| rng.gen()).collect();
            BigInt::from_slice(num_bigint::Sign::Plus, &limbs) % &scale
        };
        let (mut a, mut b) = (draw(&mut rng), draw(&mut rng));
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let x1 = BigRational::new(a, scale.clone());
        let x2 = BigRational::new(b, scale.clone());
        let one = BigRational::from_integer(1.into());
        let mut proj = (x1.clone(), x2.clone());
        let mut lin = vec![x1, x2, one];
        for step in 0..100 {
            let (case, next) = cfalgo::brun_projective_step(&proj.0, &proj.1).map_err(err)?;
            let (branch, nl) = cfalgo::linear_step(Algorithm::Brun, &lin).map_err(err)?;
            ensure(cfalgo::brun_case_to_branch(case) == branch, || {
                format!(
                    "point {k}, step {step}: case {case} vs branch {}",
                    branch + 1
                )
            })?;
            ensure(
                next.0 == &nl[0] / &nl[2] && next.1 == &nl[1] / &nl[2],
                || format!("point {k}, step {step}: projective and linear points differ"),
            )?;
            proj = next;
            lin = nl;
        }
    }

    let mut converged = 0;
    for _ in 0..points {
        let mut v = [rng.gen::<f64>(), rng.gen::<f64>(), 1.0];
        v[..2].sort_by(|a, b| a.partial_cmp(b).unwrap());
        let exp = cfalgo::expand(Algorithm::Brun, &v, 200).map_err(err)?;
        let diam = cfalgo::cone_diameters(Algorithm::Brun, &exp.branches);
        if diam.len() == 200 && diam[199] <= 1e-6 {
            converged += 1;
        }
    }
    let share = converged as f64 / points as f64;
    ensure(share >= 0.99, || {
        format!("only {:.1}% of cones below 1e-6 at step 200", 100.0 * share)
    })?;
    Ok(format!(
        "{points} exact points × 100 steps agree; {:.1}% of cones ≤ 1e-6 at step 200",
        100.0 * share
    ))
}

fn c9_fernique() -> Outcome {
    let w = HyperplaneSpec::ones(3);
    let mut blocks: Vec<Vec<Substitution>> = Vec::new();
    let trib = Family::Tribonacci.substitutions()[0].clone();
    for len in 1..=4 {
        blocks.push(vec![trib.clone(); len]);
    }
    let brun = Family::Brun.substitutions();
    for len in 1..=4u32 {
        for code in 0..3usize.pow(len) {
            let block = (0..len)
                .map(|j| brun[(code / 3usize.pow(j)) % 3].clone())
                .collect();
            blocks.push(block);
        }
    }
    let (mut outside, mut overlaps) = (0, 0);
    for block in &blocks {
        let report = dg::fernique_check(block, &w, 3).map_err(err)?;
        outside += report.outside.len();
        overlaps += report.overlaps.len();
    }
    ensure(outside == 0 && overlaps == 0, || {
        format!("{outside} faces outside, {overlaps} overlaps")
    })?;
    Ok(format!("{} blocks, zero violations", blocks.len()))
}

fn c10_set_equation() -> Outcome {
    let trib = DirectiveSequence::parse("tribonacci").map_err(err)?;
    let mut details = Vec::new();
    for ell in 1..=3 {
        let report = rauzy::set_equation_check(&trib, 0, ell, 10_000, 3.0).map_err(err)?;
        let worst = report
            .entries
            .iter()
            .map(|e| e.hausdorff / e.nn_median)
            .fold(0.0, f64::max);
        ensure(report.passed(), || {
            format!("ℓ={ell}: worst ratio {worst:.3}")
        })?;
        details.push(format!("ℓ={ell}: max dH/NN {worst:.3}"));
    }
    Ok(details.join("; "))
}

fn c11_natural_coding() -> Outcome {
    let fib = DirectiveSequence::parse("sturmian:1,1,1").map_err(err)?;
    let seqs = sadic::limit_sequences(&fib, 32).map_err(err)?;
    let seq = seqs
        .iter()
        .find(|s| s.first_letters()[0].get() == 2)
        .ok_or("no sequence starting with 2")?;
    let phi_inv = QuadIrr::from_ints(-1, 1, 2, 5).map_err(err)?;
    let alpha = &QuadIrr::from_ints(1, 0, 1, 5).map_err(err)? - &phi_inv;
    let steps = 2000;
    let a = rauzy::natural_coding_crosscheck_interval(seq, &alpha, &phi_inv, &phi_inv, steps)
        .map_err(err)?;
    ensure(a.agreed == steps && a.first_disagreement.is_none(), || {
        format!("d=2: {a:?}")
    })?;

    let trib = DirectiveSequence::parse("tribonacci").map_err(err)?;
    let frame = ProjectionFrame::for_directive(&trib, None).map_err(err)?;
    let seq = sadic::limit_sequences(&trib, 32).map_err(err)?.remove(0);
    let cloud = rauzy::rauzy_cloud_of(&seq, &frame, 10_000).map_err(err)?;
    let ex = DomainExchange::new(cloud, 3.0).map_err(err)?;
    let orbit = rauzy::domain_exchange_orbit(&ex, &[0.0, 0.0], steps).map_err(err)?;
    let want = seq.prefix(steps).map_err(err)?;
    ensure(orbit.labels == want.letters(), || {
        "d=3 orbit differs from the limit word".into()
    })?;
    Ok(format!(
        "d=2 exact for {steps} symbols; d=3 exchange orbit matches {steps} symbols ({} exact tie resolutions)",
        orbit.exact_resolutions
    ))
}

/// Root moduli of `x³ − x² − x − 1`, largest first, by bisection and
/// deflation.
fn tribonacci_roots() -> (f64, f64) {
    let f = |x: f64| x * x * x - x * x - x - 1.0;
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    // x² + (β − 1) x + 1/β: complex pair with |λ|² = 1/β.
    (beta, (1.0 / beta).sqrt())
}

fn c12_lyapunov() -> Outcome {
    let t = Instant::now();
    let (beta, lambda2) = tribonacci_roots();
    let trib = CocycleSpec::from_family(
        Family::Tribonacci,
        Measure::uniform(1),
        0,
        lyapunov::DEFAULT_LENGTH,
    )
    .map_err(err)?;
    let est = lyapunov::estimate_exponents(&trib, 4).map_err(err)?;
    ensure((est.theta1 - beta.ln()).abs() < 1e-3, || {
        format!("θ1 {} vs {}", est.theta1, beta.ln())
    })?;
    ensure((est.theta2 - lambda2.ln()).abs() < 1e-3, || {
        format!("θ2 {} vs {}", est.theta2, lambda2.ln())
    })?;

    let brun =
        CocycleSpec::from_family(Family::Brun, Measure::uniform(3), 12, 100_000).map_err(err)?;
    let b = lyapunov::estimate_exponents(&brun, 32).map_err(err)?;
    let elapsed = t.elapsed();
    ensure(b.verdict() == PisotVerdict::Satisfied, || {
        format!("Brun verdict {} ({b:?})", b.verdict())
    })?;
    ensure(elapsed < Duration::from_secs(30), || {
        format!("runtime {}", secs(elapsed))
    })?;
    Ok(format!(
        "Tribonacci θ1 err {:.1e}, θ2 err {:.1e}; Brun θ1 = {:.4} ± {:.4}, θ2 = {:.4} ± {:.4} → satisfied, in {}",
        (est.theta1 - beta.ln()).abs(),
        (est.theta2 - lambda2.ln()).abs(),
        b.theta1,
        2.0 * b.stderr1,
        b.theta2,
        2.0 * b.stderr2,
        secs(elapsed)
    ))
}

fn c13_radius() -> Outcome {
    let reference = dg::reference_stepped_patch();
    let seed = dg::Patch::unit_seed(3);
    let r = dg::minimal_combinatorial_radius(&reference, &seed).map_err(err)?;
    ensure(r == 6, || format!("reference patch radius {r}"))?;
    let ar = DirectiveSequence::parse("ar:(1,1,2,2,3,3)^w").map_err(err)?;
    let table = dg::radius_growth(&ar, 12, dg::DEFAULT_PATCH_BUDGET).map_err(err)?;
    let radii: Vec<usize> = table.iter().map(|s| s.radius).collect();
    ensure(radii.windows(2).all(|w| w[0] <= w[1]), || {
        format!("radii not monotone: {radii:?}")
    })?;
    ensure(radii.iter().any(|&r| r >= 4), || format!("radii {radii:?}"))?;
    let last = table.last().unwrap();
    Ok(format!(
        "reference radius 6 ({} faces); AR radii {radii:?} (last patch {} faces)",
        reference.len(),
        last.faces
    ))
}

fn c14_natural_extension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut worst_jac, mut worst_trip) = (0f64, 0f64);
    let mut checked = 0;
    while checked < 1000 {
        let a: f64 = 1.0 - rng.gen::<f64>();
        let d: f64 = rng.gen_range(0.0..1.0) / (1.0 + a);
        let side = if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let p = NatExtPoint { side, a, d };
        if !p.in_domain() {
            continue;
        }
        let jac = cfalgo::natural_extension_jacobian(p).map_err(err)?;
        worst_jac = worst_jac.max((jac - 1.0).abs());
        let (k, q) = cfalgo::natural_extension_step(p).map_err(err)?;
        let back = cfalgo::natural_extension_inverse(k, q).map_err(err)?;
        ensure(back.side == p.side, || "side not restored".into())?;
        worst_trip = worst_trip
            .max((back.a - p.a).abs())
            .max((back.d - p.d).abs());
        checked += 1;
    }
    ensure(worst_jac <= 1e-6, || {
        format!("Jacobian deviation {worst_jac:e}")
    })?;
    ensure(worst_trip <= 1e-12, || {
        format!("round-trip error {worst_trip:e}")
    })?;
    Ok(format!("{checked} points: max |det − 1| = {worst_jac:.1e}, max round-trip error = {worst_trip:.1e}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("Tribonacci limit word", c1_tribonacci_word),
        ("Fibonacci-variant limit word", c2_fibonacci_variant_word),
        ("E1* golden values", c3_e1_star_golden),
        (
            "abelianization commutes with substitution",
            c4_commutative_diagram,
        ),
        ("factor complexity", c5_complexity),
        ("balance", c6_balance),
        ("continued fraction round trips", c7_continued_fractions),
        ("Brun linear/projective consistency", c8_brun_consistency),
        ("Fernique checks", c9_fernique),
        ("set equation", c10_set_equation),
        ("natural coding agreement", c11_natural_coding),
        ("Lyapunov exponents", c12_lyapunov),
        ("minimal combinatorial radius", c13_radius),
        ("natural extension", c14_natural_extension),
    ];
    let mut failures = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let elapsed = secs(t.elapsed());
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed}]", k + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail} [{elapsed}]", k + 1);
                failures.push(k + 1);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
