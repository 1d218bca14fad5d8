//! Diversity-multiplexing tradeoff curves and outage probabilities for a
//! single receiver under Rayleigh fading.
//!
//! The multiplexing gain `r` sets the target rate `(r/2)·log2 P`; the
//! diversity order `d(r)` is the exponent of the outage probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelPair;
use crate::db_to_linear;
use crate::error::{Error, Result};

fn check_r(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Parameter(format!("multiplexing gain {r} outside [0, 1]")));
    }
    Ok(())
}

fn check_l(l: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::Parameter(format!("need at least two transmitters, got {l}")));
    }
    Ok(())
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Upper bound without cooperation, `1 − r`.
pub fn dmt_nc_upper(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(1.0 - r)
}

/// Upper bound with cooperation (a MISO link), `L(1 − r)`.
pub fn dmt_coop_upper(l: usize, r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(l as f64 * (1.0 - r))
}

/// Cooperative random coding with time-shared decode and transmit blocks.
pub fn dmt_random(l: usize, r: f64) -> Result<f64> {
    check_r(r)?;
    check_l(l)?;
    let lf = l as f64;
    Ok(pos(lf * (1.0 - 2.0 * r).min((lf - 1.0) * (1.0 - 2.0 * (lf - 1.0) * r))))
}

fn lattice_inner_objective(l: usize, r: f64, x: f64) -> f64 {
    let lf = l as f64;
    pos(1.0 - x - r).min(pos((lf - 1.0) * (1.0 - (lf - 1.0) * r - x))).min(pos(x - r))
}

/// `max_{x∈[0,1]} min{[1−x−r]⁺, [(L−1)(1−(L−1)r−x)]⁺, [x−r]⁺}`, evaluated at
/// the breakpoints of the piecewise-linear objective.
pub fn lattice_inner_max(l: usize, r: f64) -> f64 {
    let lf = l as f64;
    let k = lf - 1.0;
    let mut candidates = vec![
        0.0,
        1.0,
        // zero crossings
        1.0 - r,
        1.0 - k * r,
        r,
        // first and third pieces meet
        0.5,
        // second and third pieces meet
        (k * (1.0 - k * r) + r) / lf,
    ];
    if l != 2 {
        // first and second pieces meet
        candidates.push((k * (1.0 - k * r) - (1.0 - r)) / (lf - 2.0));
    }
    candidates
        .into_iter()
        .filter(|x| (0.0..=1.0).contains(x))
        .map(|x| lattice_inner_objective(l, r, x))
        .fold(0.0, f64::max)
}

/// Dense-grid evaluation of [`lattice_inner_max`], refined by ternary search
/// around the best grid cell. The objective is the minimum of one
/// nondecreasing and two nonincreasing functions, hence unimodal.
pub fn lattice_inner_max_grid(l: usize, r: f64, points: usize) -> f64 {
    let points = points.max(2);
    let step = 1.0 / (points - 1) as f64;
    let (best_i, _) = (0..points)
        .map(|i| (i, lattice_inner_objective(l, r, i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    let mut lo = (best_i as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best_i + 1) as f64 * step).min(1.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if lattice_inner_objective(l, r, m1) < lattice_inner_objective(l, r, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let grid_best = lattice_inner_objective(l, r, best_i as f64 * step);
    grid_best.max(lattice_inner_objective(l, r, 0.5 * (lo + hi)))
}

/// Cooperative lattice coding.
pub fn dmt_lattice(l: usize, r: f64) -> Result<f64> {
    check_r(r)?;
    check_l(l)?;
    let lf = l as f64;
    let pair = pos(1.0 - 2.0 * r).min(pos((lf - 1.0) * (1.0 - r * lf)));
    Ok(1.0 - r + pair + (lf - 2.0) * lattice_inner_max(l, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmtCurve {
    pub label: String,
    /// `(r, d)` pairs.
    pub samples: Vec<(f64, f64)>,
}

impl DmtCurve {
    /// Samples `f` at `points` evenly spaced gains on `[0, 1]`.
    pub fn sample(label: &str, points: usize, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        if points < 2 {
            return Err(Error::Parameter("a curve needs at least two points".into()));
        }
        let samples = (0..points)
            .map(|i| {
                let r = i as f64 / (points - 1) as f64;
                f(r).map(|d| (r, d))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DmtCurve { label: label.to_string(), samples })
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12)
    }
}

pub const CURVE_POINTS: usize = 101;

/// The four analytic curves for `L` transmitters: non-cooperative bound,
/// cooperative bound, random coding, lattice coding.
pub fn dmt_curves(l: usize, points: usize) -> Result<Vec<DmtCurve>> {
    check_l(l)?;
    Ok(vec![
        DmtCurve::sample("d_nc_upper", points, dmt_nc_upper)?,
        DmtCurve::sample("d_coop_upper", points, |r| dmt_coop_upper(l, r))?,
        DmtCurve::sample("d_random", points, |r| dmt_random(l, r))?,
        DmtCurve::sample("d_lattice", points, |r| dmt_lattice(l, r))?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutageScheme {
    /// Non-cooperative coding with amplitudes aligned to the channel.
    NcAlign,
    /// Two-block cooperative random coding.
    RandomCoop,
}

impl std::str::FromStr for OutageScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nc_align" => Ok(OutageScheme::NcAlign),
            "random_coop" => Ok(OutageScheme::RandomCoop),
            other => Err(Error::Unsupported(format!("outage scheme '{other}'"))),
        }
    }
}

/// `Pr(X < t)` for `X ~ Exp(1)`.
fn exp_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t).exp_m1()
    }
}

/// Target rate `(r/2)·log2 P`.
pub fn target_rate(r: f64, p: f64) -> f64 {
    0.5 * r * p.log2()
}

/// Rate of the aligned non-cooperative scheme: each transmitter sets
/// `v_l² = P^{r−1}/h_l²` so that `h ∘ v` is a multiple of the all-ones
/// vector. Infeasible amplitudes (`v_l > 1`) give rate zero.
pub fn nc_align_rate(h: &[f64], p: f64, r: f64) -> f64 {
    let level = p.powf(r - 1.0);
    if h.iter().any(|x| !(x * x >= level)) {
        return 0.0;
    }
    let l = h.len() as f64;
    0.5 * ((1.0 + l * p.powf(r)) / l).log2()
}

/// Probability that the union over nonempty subsets `S` of the `k` peers of
/// `∩_{j∈S} {g_j² < thresholds[|S|]}` occurs, by inclusion–exclusion over
/// collections of subsets.
fn union_of_threshold_events(k: usize, thresholds: &[f64]) -> f64 {
    let sets: Vec<u32> = (1u32..1 << k).collect();
    let mut total = 0.0;
    for collection in 1u64..1 << sets.len() {
        let mut tightest = vec![f64::INFINITY; k];
        let mut count = 0;
        for (i, &set) in sets.iter().enumerate() {
            if collection >> i & 1 == 1 {
                count += 1;
                let t = thresholds[set.count_ones() as usize];
                for (j, bound) in tightest.iter_mut().enumerate() {
                    if set >> j & 1 == 1 {
                        *bound = bound.min(t);
                    }
                }
            }
        }
        let prob: f64 = tightest.iter().map(|&t| if t.is_infinite() { 1.0 } else { exp_cdf(t) }).product();
        total += if count % 2 == 1 { prob } else { -prob };
    }
    total.clamp(0.0, 1.0)
}

const RANDOM_COOP_MC_SAMPLES: usize = 1 << 20;
const RANDOM_COOP_MC_SEED: u64 = 0x5eed;

fn union_of_threshold_events_mc(k: usize, thresholds: &[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_COOP_MC_SEED);
    let mut hits = 0usize;
    let mut g = vec![0.0; k];
    for _ in 0..RANDOM_COOP_MC_SAMPLES {
        for x in g.iter_mut() {
            *x = rng.sample(Exp1);
        }
        g.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        // The best subset of each size s is the s weakest peers.
        if (1..=k).any(|s| g[s - 1] < thresholds[s]) {
            hits += 1;
        }
    }
    hits as f64 / RANDOM_COOP_MC_SAMPLES as f64
}

/// Exact outage probability of the scheme's outage event under independent
/// unit-mean Rayleigh fading (Monte Carlo for random coding above `L = 3`).
pub fn outage_closed_form(l: usize, r: f64, p_db: f64, scheme: OutageScheme) -> Result<f64> {
    check_r(r)?;
    if l == 0 {
        return Err(Error::Parameter("need at least one transmitter".into()));
    }
    let p = db_to_linear(p_db);
    match scheme {
        OutageScheme::NcAlign => Ok(-(-(l as f64) * p.powf(r - 1.0)).exp_m1()),
        OutageScheme::RandomCoop => {
            check_l(l)?;
            let k = l - 1;
            // thresholds[s]: failure level for a decoding set of s peers
            let thresholds: Vec<f64> = (0..=k).map(|s| p.powf(2.0 * s as f64 * r - 1.0)).collect();
            let decode = if l <= 3 {
                union_of_threshold_events(k, &thresholds)
            } else {
                union_of_threshold_events_mc(k, &thresholds)
            };
            let direct = exp_cdf(p.powf(2.0 * r - 1.0));
            let single = 1.0 - (1.0 - decode) * (1.0 - direct);
            Ok(single.powi(l as i32))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub probability: f64,
    /// Binomial standard error `sqrt(p(1−p)/n)`.
    pub std_error: f64,
    pub samples: usize,
}

const MC_CHUNK: usize = 4096;

/// Fraction of Rayleigh channels (`L` transmitters, one receiver) for which
/// `rate(channel, P)` does not exceed `(r/2)·log2 P`. Draws are split into
/// chunks with independent ChaCha streams, so the count does not depend on
/// the thread schedule.
pub fn estimate_outage_mc<F>(rate: F, l: usize, r: f64, p_db: f64, num_samples: usize, seed: u64) -> Result<OutageEstimate>
where
    F: Fn(&ChannelPair, f64) -> f64 + Sync,
{
    check_r(r)?;
    if num_samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let p = db_to_linear(p_db);
    let target = target_rate(r, p);
    let chunks = num_samples.div_ceil(MC_CHUNK);
    let outages: usize = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = MC_CHUNK.min(num_samples - c * MC_CHUNK);
            let mut count = 0;
            for _ in 0..n {
                let ch = ChannelPair::rayleigh(l, 1, &mut rng)?;
                if !(rate(&ch, p) > target) {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let prob = outages as f64 / num_samples as f64;
    Ok(OutageEstimate {
        probability: prob,
        std_error: (prob * (1.0 - prob) / num_samples as f64).sqrt(),
        samples: num_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub snr_db: Vec<f64>,
    pub outage_prob: Vec<f64>,
    /// Multiplexing gain defining the target rate.
    pub rate_rule: f64,
    pub fitted_slope: Option<f64>,
}

/// Least-squares slope of `−log10(prob)` against `log10(P)`. Points with zero
/// probability are skipped.
pub fn fit_diversity_slope(curve: &OutageCurve) -> Result<f64> {
    if curve.snr_db.len() != curve.outage_prob.len() {
        return Err(Error::Dimension("SNR and probability lists differ in length".into()));
    }
    let mut pts = Vec::new();
    for (&s, &q) in curve.snr_db.iter().zip(&curve.outage_prob) {
        if q > 0.0 {
            pts.push((s / 10.0, -q.log10()));
        } else {
            log::warn!("no outages observed at {s} dB; point left out of the fit");
        }
    }
    if pts.len() < 3 {
        return Err(Error::Fit(format!("{} usable points, need at least 3", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all SNR points coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Closed-form outage at each SNR, with the fitted slope.
pub fn outage_curve_closed_form(l: usize, r: f64, snr_db: &[f64], scheme: OutageScheme) -> Result<OutageCurve> {
    let outage_prob = snr_db
        .iter()
        .map(|&s| outage_closed_form(l, r, s, scheme))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = OutageCurve { snr_db: snr_db.to_vec(), outage_prob, rate_rule: r, fitted_slope: None };
    curve.fitted_slope = fit_diversity_slope(&curve).ok();
    Ok(curve)
}

/// Default SNR grid for slope fits.
pub fn default_snr_grid() -> Vec<f64> {
    vec![10.0, 15.0, 20.0, 25.0, 30.0]
}
