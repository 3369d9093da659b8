//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::fs;
use std::time::Instant;

use lincorr::bounds::{self, BiasModel, LowerBoundForm};
use lincorr::oracle::{self, ExactNorms};
use lincorr::polyeval::{self, DeltaGrid, WeightPolynomial};
use lincorr::randomcodes::{self, RandomCodeParams};
use lincorr::scanner::{self, ScanOptions};
use lincorr::{GeneratorMatrix, WeightDistribution};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTAS: [f64; 4] = [0.05, 0.1, 0.25, 0.5];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn random_full_rank(rng: &mut ChaCha8Rng, max_k: usize, max_n: usize) -> GeneratorMatrix {
    loop {
        let k = rng.random_range(1..=max_k);
        let n = rng.random_range(k..=max_n);
        let g = GeneratorMatrix::random(k, n, rng);
        if g.is_full_rank() {
            return g;
        }
    }
}

fn hamming() -> WeightDistribution {
    "n=7 k=4\n0 1\n3 7\n4 7\n7 1\n".parse().unwrap()
}

/// Generator of the cyclic code with generator polynomial `poly`
/// (coefficient of `x^i` at index `i`).
fn cyclic(poly: &[u8], n: usize) -> GeneratorMatrix {
    let k = n + 1 - poly.len();
    let rows: Vec<String> = (0..k)
        .map(|shift| {
            (0..n)
                .map(|j| {
                    if j >= shift && j - shift < poly.len() && poly[j - shift] == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect()
        })
        .collect();
    let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
    GeneratorMatrix::from_strs(&refs).unwrap()
}

fn golay() -> WeightDistribution {
    // x^11 + x^10 + x^6 + x^5 + x^4 + x^2 + 1
    let g = cyclic(&[1, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1], 23);
    WeightDistribution::from_matrix(&g, 28).unwrap()
}

fn bch15() -> WeightDistribution {
    // x^8 + x^7 + x^6 + x^4 + 1
    let g = cyclic(&[1, 0, 0, 0, 1, 0, 1, 1, 1], 15);
    WeightDistribution::from_matrix(&g, 28).unwrap()
}

fn rm(r: usize, m: usize) -> WeightDistribution {
    WeightDistribution::from_matrix(&lincorr::reed_muller_generator(r, m).unwrap(), 28).unwrap()
}

fn rm_3_7() -> WeightDistribution {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/rm_3_7.wt");
    fs::read_to_string(path).unwrap().parse().unwrap()
}

fn criterion_1() -> Outcome {
    let dist = hamming();
    let grid = DeltaGrid::new(vec![0.1, 0.3, 0.5]).unwrap();
    let got = polyeval::eval_w(&dist, &grid);
    let mut worst = 0.0f64;
    for (&d, w) in grid.values().iter().zip(&got) {
        let expected = 1.0 + 7.0 * d.powi(3) + 7.0 * d.powi(4) + d.powi(7);
        worst = worst.max((w - expected).abs() / expected);
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.2e} over δ ∈ {{0.1, 0.3, 0.5}}"))
}

/// Max |P_direct − P_fourier| and the norms of the direct distribution.
fn both_oracles(g: &GeneratorMatrix, bias: &BiasModel) -> Result<(f64, ExactNorms), String> {
    let direct = oracle::exact_distribution_direct(g, bias).map_err(|e| e.to_string())?;
    let fourier = oracle::exact_distribution_fourier(g, bias).map_err(|e| e.to_string())?;
    let gap = direct
        .probs()
        .iter()
        .zip(fourier.probs())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    oracle::exact_norms(&fourier).map_err(|e| e.to_string())?;
    let norms = oracle::exact_norms(&direct).map_err(|e| e.to_string())?;
    Ok((gap, norms))
}

struct OracleTally {
    plancherel_checks: usize,
    plancherel_failures: usize,
}

fn criterion_2(tally: &mut OracleTally) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut agree, mut linf, mut l2, mut sandwich) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    let codes = 500;
    for _ in 0..codes {
        let g = random_full_rank(&mut rng, 10, 12);
        let dist = WeightDistribution::from_matrix(&g, 28).unwrap();
        for &delta in &DELTAS {
            let bias = BiasModel::uniform(delta).unwrap();
            tally.plancherel_checks += 2;
            let (gap, norms) = match both_oracles(&g, &bias) {
                Ok(v) => v,
                Err(_) => {
                    tally.plancherel_failures += 1;
                    continue;
                }
            };
            agree = agree.max(gap);
            linf = linf.max((norms.linf - bounds::linf_norm(&dist, delta).unwrap().value).abs());
            l2 = l2.max((norms.l2 - bounds::l2_distance(&dist, delta).unwrap().value).abs());
            let b = bounds::l1_bounds(&dist, delta, LowerBoundForm::Conservative).unwrap();
            if norms.l1 < b.lower.value - 1e-12 || norms.l1 > b.upper.value + 1e-12 {
                sandwich += 1;
            }
        }
    }
    let passed = agree <= 1e-10 && linf <= 1e-10 && l2 <= 1e-10 && sandwich == 0 && tally.plancherel_failures == 0;
    outcome(
        passed,
        format!(
            "{codes} codes × 4 δ: (a) {agree:.1e} (b) {linf:.1e} (c) {l2:.1e} (d) {sandwich} sandwich violations"
        ),
    )
}

fn criterion_3(tally: &mut OracleTally) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut min_tv = f64::INFINITY;
    let mut failures = 0;
    let trials = 60;
    for t in 0..trials {
        let k = rng.random_range(2..=10);
        let n = rng.random_range(2..=12);
        let mut rows: Vec<String> = (0..k)
            .map(|_| (0..n).map(|_| if rng.random::<bool>() { '1' } else { '0' }).collect())
            .collect();
        // force a dependency: last row is the XOR of two others (or a copy)
        let (a, b) = (rng.random_range(0..k - 1), rng.random_range(0..k - 1));
        rows[k - 1] = if a == b {
            rows[a].clone()
        } else {
            rows[a].chars().zip(rows[b].chars()).map(|(x, y)| if x == y { '0' } else { '1' }).collect()
        };
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let g = GeneratorMatrix::from_strs(&refs).unwrap();
        assert!(!g.is_full_rank());
        let bias = if t % 2 == 0 {
            BiasModel::uniform(DELTAS[t % 4]).unwrap()
        } else {
            BiasModel::per_bit((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
        };
        tally.plancherel_checks += 1;
        match oracle::check_rank_deficiency_claim(&g, &bias) {
            Ok(c) => {
                min_tv = min_tv.min(c.tv);
                if !c.passed {
                    failures += 1;
                }
            }
            Err(_) => {
                tally.plancherel_failures += 1;
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("{trials} rank-deficient generators, min TV {min_tv:.6}"))
}

fn criterion_4(tally: &OracleTally) -> Outcome {
    outcome(
        tally.plancherel_failures == 0 && tally.plancherel_checks > 0,
        format!(
            "{} oracle distributions, {} Plancherel mismatches above 1e-10",
            tally.plancherel_checks, tally.plancherel_failures
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [1usize, 2, 3, 5, 8] {
        let g = GeneratorMatrix::parity(n);
        let dist = WeightDistribution::from_matrix(&g, 28).unwrap();
        for delta in [0.1, 0.5] {
            let up = bounds::l1_bounds(&dist, delta, LowerBoundForm::Conservative).unwrap().upper.value;
            let exact = oracle::exact_norms(
                &oracle::exact_distribution_direct(&g, &BiasModel::uniform(delta).unwrap()).unwrap(),
            )
            .unwrap()
            .l1;
            let target = delta.powi(n as i32);
            worst = worst.max((up - target).abs()).max((exact - target).abs());
            cases += 1;
        }
    }
    outcome(worst <= 1e-12, format!("{cases} parity/identity cases, max deviation from δⁿ {worst:.1e}"))
}

/// `δ` at which `W(δ) − 1` equals `target`.
fn delta_at_prior(dist: &WeightDistribution, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bounds::prior_bounds(dist, mid).unwrap().l1.value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn criterion_6() -> Outcome {
    let codes: Vec<(&str, WeightDistribution, bool)> = vec![
        ("RM(3,7)", rm_3_7(), true),
        ("Golay[23,12,7]", golay(), true),
        ("RM(2,5)", rm(2, 5), true),
        ("BCH[15,7,5]", bch15(), false),
        ("Hamming[7,4,3]", hamming(), false),
    ];
    let grid = DeltaGrid::log(1e-4, 1.0, 400).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, dist, ratio_check) in &codes {
        let rows = bounds::report(dist, &grid, LowerBoundForm::Conservative).unwrap();
        for r in rows.iter().filter(|r| r.prior_l1.value <= 1.0 && r.delta > 0.0) {
            let identity = r.prior_l1.value / r.l1_upper.value;
            let w = WeightPolynomial::new(dist);
            let ln = r.delta.ln();
            let expected = (w.ln_eval_minus_one(ln) - 0.5 * w.ln_eval_minus_one(2.0 * ln)).exp();
            if r.l1_upper.value >= r.prior_l1.value || (identity / expected - 1.0).abs() > 1e-9 {
                ok = false;
            }
        }
        if *ratio_check {
            let d = delta_at_prior(dist, 0.1);
            let prior = bounds::prior_bounds(dist, d).unwrap().l1.value;
            let up = bounds::l1_bounds(dist, d, LowerBoundForm::Conservative).unwrap().upper.value;
            let ratio = prior / up;
            ok &= ratio >= 10.0;
            notes.push(format!("{name} {ratio:.1}×"));
        }
    }
    outcome(ok, format!("strict improvement on 5 codes; ratio at prior = 0.1: {}", notes.join(", ")))
}

/// `log2` of a positive rational, accurate to ~1e-15 relative.
fn log2_rational(x: &BigRational) -> f64 {
    let shift = |v: &BigInt| v.bits().saturating_sub(60) as i64;
    let (sn, sd) = (shift(x.numer()), shift(x.denom()));
    let top_n = (x.numer() >> sn as usize).to_f64().unwrap();
    let top_d = (x.denom() >> sd as usize).to_f64().unwrap();
    top_n.log2() - top_d.log2() + (sn - sd) as f64
}

fn criterion_7() -> Outcome {
    let n = 200;
    // identity code: A_w = C(200, w), largest count ≈ 2^196
    let mut binom = BigUint::one();
    let mut counts = Vec::new();
    for w in 0..=n {
        counts.push((w, binom.clone()));
        binom = binom * BigUint::from(n - w) / BigUint::from(w + 1);
    }
    let wide = WeightDistribution::from_counts(n, n, counts).unwrap();
    // all mass on one weight: A_300 = 2^200 − 1
    let top = (BigUint::one() << 200u32) - BigUint::one();
    let spike = WeightDistribution::from_counts(300, 200, [(0, BigUint::one()), (300, top)]).unwrap();

    let grid = DeltaGrid::log(1e-4, 1e-2, 64).unwrap();
    let mut ok = true;
    for dist in [&wide, &spike] {
        let bits: Vec<f64> = bounds::report(dist, &grid, LowerBoundForm::Conservative)
            .unwrap()
            .iter()
            .map(|r| r.security_bits())
            .collect();
        ok &= bits.iter().all(|b| b.is_finite());
        ok &= bits.windows(2).all(|w| w[1] < w[0]);
    }
    // exact check at δ = 1e-3 on the identity code: (1 + 10^-6)^200 − 1
    let got = -bounds::security_at(&wide, 1e-3).unwrap();
    let base = BigRational::new(BigInt::from(1_000_001), BigInt::from(1_000_000));
    let exact = num_traits::pow(base, n) - BigRational::one();
    let want = 0.5 * log2_rational(&exact);
    // W(δ²) − 1 = (2^200 − 1) δ^600
    let spike_bits = bounds::security_at(&spike, 1e-3).unwrap();
    let spike_exact = -0.5 * (200.0 + 600.0 * 1e-3f64.log2());
    ok &= (got - want).abs() <= 1e-9 && spike_bits.is_finite() && (spike_bits - spike_exact).abs() <= 1e-9;
    outcome(
        ok,
        format!("ln A_w up to 200·ln 2: finite, strictly monotone; δ=1e-3 log2 error {:.1e}", (got - want).abs()),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let codes = 100;
    for _ in 0..codes {
        let g = random_full_rank(&mut rng, 8, 14);
        let dist = WeightDistribution::from_matrix(&g, 28).unwrap();
        for s in [20.0, 40.0, 80.0] {
            let d = bounds::max_bias_for_security(&dist, s).unwrap();
            worst = worst.max((bounds::security_at(&dist, d).unwrap() - s).abs());
        }
    }
    outcome(worst <= 1e-6, format!("{codes} codes × s ∈ {{20, 40, 80}}, max |error| {worst:.1e} bits"))
}

fn criterion_9() -> Outcome {
    let p = RandomCodeParams::new(16, 8, 0.5).unwrap().with_samples(2000).with_seed(7);
    let mc = randomcodes::monte_carlo_l2_sq(&p).unwrap();
    // 2^-16 ((5/4)^16 − 1), exactly
    let exact = (num_traits::pow(BigRational::new(5.into(), 4.into()), 16) - BigRational::one())
        / BigRational::from_integer(65536.into());
    let closed = exact.to_f64().unwrap();
    let formula = randomcodes::expected_l2_sq(&p).value;
    let z = (mc.mean - closed) / mc.stderr;
    let mut worst_j = (0, 0.0f64);
    for j in 1..=16 {
        let zj = (mc.weight_means[j] - randomcodes::expected_weight(16, 8, j)) / mc.weight_stderrs[j];
        if zj.abs() > worst_j.1.abs() {
            worst_j = (j, zj);
        }
    }
    let passed = z.abs() <= 3.0 && worst_j.1.abs() <= 3.0 && (formula / closed - 1.0).abs() < 1e-12;
    outcome(
        passed,
        format!(
            "mean {:.6e} vs closed form {closed:.6e} (z = {z:.2}); worst A_j z = {:.2} at j = {}",
            mc.mean, worst_j.1, worst_j.0
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..100 {
        let path = dir.path().join(format!("code_{i:03}.wt"));
        if i % 25 == 24 {
            fs::write(path, "n=5 k=2\n0 1\n3 5\n").unwrap();
            continue;
        }
        let g = random_full_rank(&mut rng, 10, 16);
        let dist = WeightDistribution::from_matrix(&g, 28).unwrap();
        fs::write(path, dist.to_text()).unwrap();
    }
    let render = |threads: usize| -> (Vec<u8>, Vec<u8>) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let out = scanner::scan_corpus(dir.path(), &ScanOptions::default()).unwrap();
            let (mut f, mut s) = (Vec::new(), Vec::new());
            scanner::write_csv(&out.points, &mut f).unwrap();
            scanner::write_csv(&out.skips, &mut s).unwrap();
            (f, s)
        })
    };
    let serial = render(1);
    let again = render(1);
    let parallel = render(8);
    let rows = serial.0.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count() - 1;
    let passed = serial == again && serial == parallel && rows == 96;
    outcome(passed, format!("100 files ({rows} codes, 4 skips): identical across runs and 1 vs 8 workers"))
}

fn main() {
    let mut tally = OracleTally {
        plancherel_checks: 0,
        plancherel_failures: 0,
    };
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        results.push((id, o, start.elapsed().as_secs_f64()));
    };
    run(1, &mut criterion_1);
    run(2, &mut || criterion_2(&mut tally));
    run(3, &mut || criterion_3(&mut tally));
    let tally_ref = &tally;
    run(4, &mut || criterion_4(tally_ref));
    run(5, &mut criterion_5);
    run(6, &mut criterion_6);
    run(7, &mut criterion_7);
    run(8, &mut criterion_8);
    run(9, &mut criterion_9);
    run(10, &mut criterion_10);

    let mut failed = 0;
    for (id, o, secs) in &results {
        println!(
            "criterion {id:>2}: {} ({secs:.2}s) {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
