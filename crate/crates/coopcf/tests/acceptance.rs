//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! quantities next to the thresholds. Runs without the libtest harness so the
//! lines always reach the console; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use coopcf::channel::ChannelPair;
use coopcf::dmt::{self, OutageScheme};
use coopcf::lattice::{all_messages, Codebook, FieldMessage, LatticePoint};
use coopcf::link_sim::{self, RoundConfig};
use coopcf::rates::{self, CoefficientMatrix, SteeringConfig};
use coopcf::scenarios::{self, linspace, LinkSimSpec};
use coopcf::search::{self, SearchBudget};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { passed, detail })
}

/// Independent encoder: `[p⁻¹ F w] mod Z^n` straight from the generator, with
/// the centred residue computed by hand.
fn encode_oracle(f: &[Vec<u32>], w: &[u32], cols: std::ops::Range<usize>, p: u32) -> Vec<i64> {
    let p = p as i64;
    f.iter()
        .map(|row| {
            let s: i64 = cols.clone().map(|j| row[j] as i64 * w[j] as i64).sum();
            let mut r = s.rem_euclid(p);
            if 2 * r > p {
                r -= p;
            }
            r
        })
        .collect()
}

fn check_pair(cb: &Codebook, w1: &FieldMessage, w2: &FieldMessage) -> Result<bool, String> {
    let p = cb.p();
    let e = |r: coopcf::Result<LatticePoint>| r.map_err(|e| e.to_string());
    let sum = w1.add(w2, p);
    let (a, b, s) = (e(cb.phi(w1))?, e(cb.phi(w2))?, e(cb.phi(&sum))?);
    let iso = s == a.add(&b).reduce();
    let decomp = a == e(cb.phi_r(w1))?.add(&e(cb.phi_v(w1))?).reduce();
    let lin_r = e(cb.phi_r(&sum))? == e(cb.phi_r(w1))?.add(&e(cb.phi_r(w2))?).reduce();
    let lin_v = e(cb.phi_v(&sum))? == e(cb.phi_v(w1))?.add(&e(cb.phi_v(w2))?).reduce();
    let oracle = a.num == encode_oracle(cb.generator(), &w1.0, 0..cb.k(), p);
    Ok(iso && decomp && lin_r && lin_v && oracle)
}

fn criterion_lattice() -> Result<Outcome, String> {
    let mut pairs = 0usize;
    let mut bad = 0usize;
    let mut bijective = true;
    for n in 2..=3 {
        for p in [2u32, 3] {
            let cb = Codebook::build(n, 2, 1, p, 1.0, 7 + n as u64).map_err(|e| e.to_string())?;
            let msgs: Vec<FieldMessage> = all_messages(2, p).collect();
            let distinct: std::collections::HashSet<_> = cb.codewords().into_iter().collect();
            bijective &= distinct.len() == (p as usize).pow(2);
            for w1 in &msgs {
                bijective &= cb.phi_inv(&cb.phi(w1).map_err(|e| e.to_string())?).as_ref() == Some(w1);
                for w2 in &msgs {
                    pairs += 1;
                    bad += usize::from(!check_pair(&cb, w1, w2)?);
                }
            }
        }
    }
    let cb = Codebook::build(8, 4, 2, 5, 1.0, 11).map_err(|e| e.to_string())?;
    let distinct: std::collections::HashSet<_> = cb.codewords().into_iter().collect();
    bijective &= distinct.len() == 625;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let w1 = FieldMessage::random(4, 5, &mut rng);
        let w2 = FieldMessage::random(4, 5, &mut rng);
        pairs += 1;
        bad += usize::from(!check_pair(&cb, &w1, &w2)?);
    }
    outcome(bad == 0 && bijective, format!("{pairs} pairs, {bad} violations, bijective={bijective}"))
}

fn all_matrices(l: usize, m: usize) -> Vec<CoefficientMatrix> {
    let cells = l * m;
    let mut out = Vec::new();
    for code in 0..5usize.pow(cells as u32) {
        let mut c = code;
        let mut entries = Vec::with_capacity(cells);
        for _ in 0..cells {
            entries.push((c % 5) as i64 - 2);
            c /= 5;
        }
        if let Ok(a) = CoefficientMatrix::new(DMatrix::from_vec(l, m, entries)) {
            out.push(a);
        }
    }
    out
}

fn criterion_reduction_chain() -> Result<Outcome, String> {
    let shapes = [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)];
    let per_shape = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut evaluations = 0usize;
    for (l, m) in shapes {
        let matrices = all_matrices(l, m);
        for _ in 0..per_shape {
            let ch = ChannelPair::rayleigh(l, m, &mut rng).map_err(|e| e.to_string())?;
            let p = 10f64.powf(rng.random_range(-1.0..3.0));
            let ones = vec![1.0; l];
            let steering = SteeringConfig::noncooperative(&ones, m).map_err(|e| e.to_string())?;
            for a in &matrices {
                let nc = rates::rate_nc(&ch.h, p, a).map_err(|e| e.to_string())?;
                let sup = rates::rate_superposition(&ch.h, p, a, &ones).map_err(|e| e.to_string())?;
                let coop = rates::rate_coop(&ch, p, a, &steering).map_err(|e| e.to_string())?.overall;
                worst = worst.max((coop - sup).abs()).max((sup - nc).abs());
                evaluations += 1;
            }
        }
    }
    outcome(worst <= 1e-12, format!("{evaluations} (channel, A) pairs, max deviation {worst:.2e} (tol 1e-12)"))
}

fn criterion_dmt_anchors() -> Result<Outcome, String> {
    let e = |r: coopcf::Result<f64>| r.map_err(|e| e.to_string());
    let tol = 1e-9;
    let mut worst_anchor = 0.0f64;
    for l in 2..=8 {
        worst_anchor = worst_anchor.max((e(dmt::dmt_random(l, 0.0))? - l as f64).abs());
        worst_anchor = worst_anchor.max((e(dmt::dmt_lattice(l, 0.0))? - (2.0 + (l as f64 - 2.0) / 2.0)).abs());
    }
    let grid = linspace(0.0, 1.0, 1001);
    let mut dominance = f64::INFINITY;
    let mut above_bound = f64::NEG_INFINITY;
    for &r in &grid {
        dominance = dominance.min(e(dmt::dmt_lattice(2, r))? - e(dmt::dmt_random(2, r))?);
        for l in 2..=8 {
            let cap = l as f64 * (1.0 - r);
            above_bound = above_bound.max(e(dmt::dmt_lattice(l, r))? - cap).max(e(dmt::dmt_random(l, r))? - cap);
        }
    }
    outcome(
        worst_anchor <= tol && dominance >= -tol && above_bound <= tol,
        format!(
            "anchor error {worst_anchor:.1e}, min(d_lattice-d_random) at L=2 {dominance:.3}, max excess over L(1-r) {above_bound:.1e}"
        ),
    )
}

fn criterion_diversity_slope() -> Result<Outcome, String> {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [0.0, 0.5] {
        let curve = dmt::outage_curve_closed_form(2, r, &dmt::default_snr_grid(), OutageScheme::NcAlign)
            .map_err(|e| e.to_string())?;
        let slope = dmt::fit_diversity_slope(&curve).map_err(|e| e.to_string())?;
        let exact = dmt::outage_closed_form(2, r, 10.0, OutageScheme::NcAlign).map_err(|e| e.to_string())?;
        let est = dmt::estimate_outage_mc(|ch, p| dmt::nc_align_rate(&ch.h_col(0), p, r), 2, r, 10.0, 100_000, 4)
            .map_err(|e| e.to_string())?;
        let z = (est.probability - exact).abs() / est.std_error;
        ok &= (slope - (1.0 - r)).abs() <= 0.15 && z <= 3.0;
        parts.push(format!("r={r}: slope {slope:.3} (target {:.1}), MC {:.4} vs {exact:.4} ({z:.2} SE)", 1.0 - r, est.probability));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_example1() -> Result<Outcome, String> {
    let g2 = linspace(-10.0, 30.0, 41);
    let report = scenarios::run_example1(10.0, &g2, &SearchBudget::default()).map_err(|e| e.to_string())?;
    let col = |n: &str| report.table.column(n).ok_or(format!("missing column {n}"));
    let (nc, coop, bound) = (col("rate_nc")?, col("rate_coop")?, col("bound_cutset")?);
    let at = |x: f64| g2.iter().position(|&g| (g - x).abs() < 1e-9).expect("grid point");
    let start_gap = coop[0] - nc[0];
    let min_step = coop.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let max_excess = coop.iter().zip(&bound).map(|(c, b)| c - b).fold(f64::NEG_INFINITY, f64::max);
    let (gap0, gap30) = (bound[at(0.0)] - coop[at(0.0)], bound[at(30.0)] - coop[at(30.0)]);
    outcome(
        start_gap <= 1e-3 && min_step >= 0.0 && max_excess <= 1e-12 && gap30 < gap0,
        format!(
            "(a) coop-nc at -10 dB {start_gap:.2e}; (b) min step {min_step:.2e}; (c) max coop-bound {max_excess:.3}; (d) gap {gap0:.3} at 0 dB, {gap30:.3} at 30 dB"
        ),
    )
}

fn criterion_examples_3_4() -> Result<Outcome, String> {
    let budget = SearchBudget::default();
    let r3 = scenarios::run_example3(&[10.0], &[0.0], &budget).map_err(|e| e.to_string())?;
    let (nc3, coop3) = (r3.table.rows[0][2], r3.table.rows[0][3]);
    let r4 = scenarios::run_example4(&[10.0], &[1.0], &budget).map_err(|e| e.to_string())?;
    let (nc4, coop4) = (r4.table.rows[0][2], r4.table.rows[0][3]);
    outcome(
        nc3 < 0.01 && coop3 > 0.2 && coop4 > nc4,
        format!("example 3 at h21=0: nc {nc3:.4}, coop {coop3:.4}; example 4 at h21=1: nc {nc4:.4}, coop {coop4:.4}"),
    )
}

fn criterion_link_sim() -> Result<Outcome, String> {
    let spec = LinkSimSpec::default();
    let base = scenarios::linksim_config(&spec).map_err(|e| e.to_string())?;
    let noiseless = RoundConfig { noise_var: 0.0, ..base.clone() };
    let clean = link_sim::run_trials(&noiseless, 100, 5).map_err(|e| e.to_string())?;
    let mut round = Vec::new();
    let mut block = Vec::new();
    for &nv in &spec.noise_vars {
        let cfg = RoundConfig { noise_var: nv, ..base.clone() };
        let s = link_sim::run_trials(&cfg, spec.trials, spec.seed).map_err(|e| e.to_string())?;
        round.push(s.round_rate());
        block.push(s.block_rate());
    }
    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        clean.rounds_recovered == clean.trials && round[0] >= 0.99 && nonincreasing(&round) && nonincreasing(&block),
        format!(
            "k={} k_r={}; noiseless {}/{}; round recovery {round:.3?}, block recovery {block:.3?} at noise {:?} (P = 30 dB)",
            base.codebook.k, base.codebook.k_r, clean.rounds_recovered, clean.trials, spec.noise_vars
        ),
    )
}

fn criterion_zero_forcing() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut vectors = 0usize;
    for l in [2usize, 3] {
        let cols = if l == 2 { vec![vec![1, 0], vec![0, 1]] } else { vec![vec![1, 0, 1], vec![0, 1, 1]] };
        let a = CoefficientMatrix::from_columns(&cols).map_err(|e| e.to_string())?;
        let all: Vec<usize> = (0..l).collect();
        for _ in 0..1000 {
            let ch = ChannelPair::rayleigh(l, 2, &mut rng).map_err(|e| e.to_string())?;
            let v0: Vec<f64> = (0..l).map(|_| rng.random_range(-0.7..0.7)).collect();
            let zf = rates::rate_zf(&ch, 10.0, &a, &v0).map_err(|e| e.to_string())?;
            for m in 0..2 {
                let direct = search::zero_forcing_vector(&ch.h, m, &all).map_err(|e| e.to_string())?;
                for v in [zf.steering.beam(m), direct] {
                    vectors += 1;
                    let other = ch.h_col(1 - m);
                    let leak: f64 = v.iter().zip(&other).map(|(x, y)| x * y).sum();
                    worst = worst.max(leak.abs());
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("{vectors} vectors over 2000 channels, max |v_m.h_m'| {worst:.2e} (tol 1e-10)"))
}

fn criterion_mutual_info() -> Result<Outcome, String> {
    let cb = Codebook::build(4, 2, 1, 5, coopcf::lattice::unit_power_scale(), 9).map_err(|e| e.to_string())?;
    let p = 10.0;
    let single = rates::mutual_info_check(&cb, &[1.0], p, 1.0, 100_000, 9).map_err(|e| e.to_string())?;
    let pair = rates::mutual_info_check(&cb, &[1.0, 1.0], p, 1.0, 100_000, 10).map_err(|e| e.to_string())?;
    let (single_ref, pair_ref) = (0.5 * (1.0 + p).log2(), 0.5 * (1.0 + 2.0 * p).log2());
    outcome(
        (single - single_ref).abs() <= 0.2 && (pair - pair_ref).abs() <= 0.2,
        format!("one user {single:.4} vs {single_ref:.4}; two users (sum) {pair:.4} vs {pair_ref:.4} (tol 0.2 bits)"),
    )
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome, String>);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("lattice algebra", Duration::from_secs(10), criterion_lattice),
        ("rate reduction chain", Duration::from_secs(60), criterion_reduction_chain),
        ("DMT anchors", Duration::from_secs(5), criterion_dmt_anchors),
        ("diversity slope", Duration::from_secs(120), criterion_diversity_slope),
        ("example 1", Duration::from_secs(300), criterion_example1),
        ("examples 3-4", Duration::from_secs(300), criterion_examples_3_4),
        ("link simulation", Duration::from_secs(300), criterion_link_sim),
        ("zero forcing", Duration::from_secs(10), criterion_zero_forcing),
        ("mutual information", Duration::from_secs(120), criterion_mutual_info),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let line = match result {
            Ok(o) if o.passed && in_time => format!("PASS {}. {name}: {}", i + 1, o.detail),
            Ok(o) if o.passed => format!("FAIL {}. {name}: over time budget; {}", i + 1, o.detail),
            Ok(o) => format!("FAIL {}. {name}: {}", i + 1, o.detail),
            Err(e) => format!("FAIL {}. {name}: error: {e}", i + 1),
        };
        failures += usize::from(line.starts_with("FAIL"));
        println!("{line} [{:.2}s / limit {}s]", elapsed.as_secs_f64(), limit.as_secs());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
