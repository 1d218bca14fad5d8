//! End-to-end simulation of block-Markov cooperative computation over real
//! lattice codes, for a single receiver.
//!
//! Each round sends `T` messages per transmitter over `T + 1` blocks. In block
//! `t` every transmitter sends its dithered codeword scaled by `√P·v_l0`, and
//! each cooperating transmitter adds the resolution codeword of the function
//! it estimated for block `t − 1`, scaled by `√P·v_l1`. Cooperating
//! transmitters decode their peers by exhaustive minimum-distance search over
//! the product codebook. The receiver decodes the resolution component of
//! block `t` from block `t + 1`, cancels it, and decodes the vestigial
//! component from block `t`.
//!
//! Codewords have per-coordinate second moment `β²/12`; transmit signals are
//! normalised by it so that `v` carries the power split exactly.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelPair;
use crate::error::{Error, Result};
use crate::lattice::{all_messages, field_combine, mod_shaping, Codebook, CodebookSpec, FieldMessage, LatticePoint, Sublattice};
use crate::rates::{CoefficientMatrix, RateBreakdown, SteeringConfig};

/// Default number of messages per transmitter in a round.
pub const DEFAULT_BLOCKS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundConfig {
    pub codebook: CodebookSpec,
    pub channel: ChannelPair,
    pub p: f64,
    pub noise_var: f64,
    pub a: CoefficientMatrix,
    pub steering: SteeringConfig,
    /// Messages per transmitter, `T`.
    pub num_blocks: usize,
    /// Hand transmitters the true peer messages instead of decoding them.
    pub genie: bool,
}

impl RoundConfig {
    fn validate(&self) -> Result<()> {
        let l = self.channel.num_tx();
        if self.channel.num_rx() != 1 {
            return Err(Error::Unsupported("link simulation covers a single receiver only".into()));
        }
        if self.a.num_tx() != l || self.a.num_rx() != 1 {
            return Err(Error::Dimension("coefficient vector does not match the channel".into()));
        }
        if self.steering.matrix().shape() != (l, 2) {
            return Err(Error::Dimension("steering matrix must be L x 2".into()));
        }
        if !(self.p > 0.0) || !(self.noise_var >= 0.0) {
            return Err(Error::Parameter("need P > 0 and noise variance >= 0".into()));
        }
        if self.num_blocks == 0 {
            return Err(Error::Parameter("need at least one block".into()));
        }
        Ok(())
    }

    fn coefficients(&self) -> Vec<i64> {
        self.a.column(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Transmitter,
    Resolution,
    Vestigial,
    Function,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Transmitter => "transmitter",
            Stage::Resolution => "resolution",
            Stage::Vestigial => "vestigial",
            Stage::Function => "function",
        };
        f.write_str(s)
    }
}

/// One decoding step, for the per-block debug dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub block: usize,
    pub stage: Stage,
    pub ok: bool,
    /// Distance from the observation to the decoded point.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub transmitter_decode_ok: Vec<bool>,
    pub resolution_ok: Vec<bool>,
    pub vestigial_ok: Vec<bool>,
    pub function_recovered: Vec<bool>,
    pub recovered: Vec<FieldMessage>,
    pub stages: Vec<StageRecord>,
}

impl RoundOutcome {
    pub fn all_recovered(&self) -> bool {
        self.function_recovered.iter().all(|&x| x)
    }

    /// Row-per-stage CSV: `block,stage,ok,distance`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["block", "stage", "ok", "distance"])?;
        for s in &self.stages {
            w.write_record([s.block.to_string(), s.stage.to_string(), s.ok.to_string(), format!("{:.6e}", s.distance)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scalar MMSE scaling for a signal `√P·g_eff·c` (unit-power `c`) in
/// interference plus noise of power `interference_noise`.
pub fn mmse_coefficients(g_eff: f64, p: f64, interference_noise: f64) -> f64 {
    if g_eff == 0.0 {
        return 0.0;
    }
    p.sqrt() * g_eff / (p * g_eff * g_eff + interference_noise)
}

/// MMSE scaling towards `Σ a_l c_l` from `√P Σ (h_l v_l0) c_l` plus
/// interference and noise.
pub fn vestigial_scaling(hv0: &[f64], a: &[f64], p: f64, interference_noise: f64) -> f64 {
    let cross: f64 = hv0.iter().zip(a).map(|(x, y)| x * y).sum();
    let power: f64 = hv0.iter().map(|x| x * x).sum();
    let den = p * power + interference_noise;
    if den == 0.0 {
        return 0.0;
    }
    p.sqrt() * cross / den
}

/// Jointly nearest tuple of peer messages to `received` once `known` is
/// subtracted. `gains[j]` scales peer `j`'s dithered codeword, normalised to
/// unit power, and `dithers[j]` is its dither.
pub fn transmitter_decode(
    codebook: &Codebook,
    received: &[f64],
    known: &[f64],
    gains: &[f64],
    dithers: &[Vec<f64>],
) -> Result<(Vec<FieldMessage>, f64)> {
    let n = codebook.n();
    if received.len() != n || known.len() != n || dithers.len() != gains.len() || dithers.iter().any(|d| d.len() != n) {
        return Err(Error::Dimension("transmitter decoder inputs disagree in length".into()));
    }
    let sigma = codebook.beta() / 12f64.sqrt();
    let target: Vec<f64> = received.iter().zip(known).map(|(y, k)| y - k).collect();
    let words: Vec<FieldMessage> = all_messages(codebook.k(), codebook.p()).collect();
    // Each peer's candidate contributions, precomputed.
    let contributions: Vec<Vec<Vec<f64>>> = gains
        .iter()
        .zip(dithers)
        .map(|(&g, d)| {
            words
                .iter()
                .map(|w| {
                    let c = codebook.dithered(&codebook.phi(w).expect("enumerated message"), d);
                    c.iter().map(|x| g * x / sigma).collect()
                })
                .collect()
        })
        .collect();
    let peers = gains.len();
    let count = words.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut idx = vec![0usize; peers];
    let mut sum = vec![0.0; n];
    loop {
        sum.iter_mut().for_each(|x| *x = 0.0);
        for (j, &i) in idx.iter().enumerate() {
            for (s, c) in sum.iter_mut().zip(&contributions[j][i]) {
                *s += c;
            }
        }
        let d2: f64 = target.iter().zip(&sum).map(|(t, s)| (t - s).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| d2 < *b) {
            best = Some((d2, idx.clone()));
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == peers {
                let (d2, choice) = best.expect("at least one tuple");
                let msgs = choice.iter().map(|&i| words[i].clone()).collect();
                return Ok((msgs, d2.sqrt()));
            }
            idx[pos] += 1;
            if idx[pos] < count {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Random quantities of one round, drawn in a fixed order so that rounds
/// with different noise levels share them.
struct RoundDraws {
    /// `t[l][block]`
    fresh_dither: Vec<Vec<Vec<f64>>>,
    /// `s[block]`
    resolution_dither: Vec<Vec<f64>>,
    /// Unit-variance receiver noise per block.
    rx_noise: Vec<Vec<f64>>,
    /// Unit-variance noise at each transmitter per block.
    tx_noise: Vec<Vec<Vec<f64>>>,
}

impl RoundDraws {
    fn new(codebook: &Codebook, l: usize, blocks: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = codebook.n();
        let fresh_dither = (0..l).map(|_| (0..blocks).map(|_| codebook.dither(&mut rng)).collect()).collect();
        let resolution_dither = (0..blocks).map(|_| codebook.dither(&mut rng)).collect();
        let gauss = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
        let rx_noise = (0..=blocks).map(|_| gauss(&mut rng)).collect();
        let tx_noise = (0..l).map(|_| (0..blocks).map(|_| gauss(&mut rng)).collect()).collect();
        RoundDraws { fresh_dither, resolution_dither, rx_noise, tx_noise }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Runs one round. `messages[l][t]` is transmitter `l`'s message in block
/// `t`; dithers and noise come from `rng_seed`.
pub fn run_round(config: &RoundConfig, messages: &[Vec<FieldMessage>], rng_seed: u64) -> Result<RoundOutcome> {
    config.validate()?;
    let codebook = Codebook::from_spec(&config.codebook)?;
    run_round_with(config, &codebook, messages, rng_seed)
}

fn run_round_with(config: &RoundConfig, cb: &Codebook, messages: &[Vec<FieldMessage>], rng_seed: u64) -> Result<RoundOutcome> {
    let ch = &config.channel;
    let l = ch.num_tx();
    let blocks = config.num_blocks;
    if messages.len() != l || messages.iter().any(|m| m.len() != blocks) {
        return Err(Error::Dimension(format!("need {l} transmitters x {blocks} blocks of messages")));
    }
    let n = cb.n();
    let p_field = cb.p();
    let beta = cb.beta();
    let sigma = beta / 12f64.sqrt();
    let root_p = config.p.sqrt();
    let noise = config.noise_var.sqrt();
    let a = config.coefficients();
    let af: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let v = config.steering.matrix();
    let coop = config.steering.subset().to_vec();
    let h = ch.h_col(0);
    let draws = RoundDraws::new(cb, l, blocks, rng_seed);

    // Fresh codewords, normalised to unit power.
    let mut fresh = vec![vec![vec![0.0; n]; blocks]; l];
    for i in 0..l {
        for t in 0..blocks {
            let pt = cb.phi(&messages[i][t])?;
            fresh[i][t] = cb.dithered(&pt, &draws.fresh_dither[i][t]).iter().map(|x| x / sigma).collect();
        }
    }
    let truth: Vec<FieldMessage> = (0..blocks)
        .map(|t| {
            let ws: Vec<FieldMessage> = (0..l).map(|i| messages[i][t].clone()).collect();
            field_combine(&ws, &a, p_field)
        })
        .collect::<Result<_>>()?;

    let mut stages = Vec::new();
    let mut transmitter_decode_ok = vec![true; blocks];
    // Resolution codeword each cooperating transmitter sends for block t.
    let mut res_tx: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; blocks]; l];
    let mut received = vec![vec![0.0; n]; blocks + 1];

    for t in 0..=blocks {
        // Transmit signals of block t.
        let mut x = vec![vec![0.0; n]; l];
        for i in 0..l {
            if t < blocks {
                axpy(&mut x[i], root_p * v[(i, 0)], &fresh[i][t]);
            }
            if t > 0 {
                if let Some(cr) = &res_tx[i][t - 1] {
                    axpy(&mut x[i], root_p * v[(i, 1)], cr);
                }
            }
        }
        for i in 0..l {
            axpy(&mut received[t], h[i], &x[i]);
        }
        axpy(&mut received[t], noise, &draws.rx_noise[t]);
        if t == blocks {
            break;
        }

        // Cooperating transmitters decode their peers and form resolution codewords.
        for &i in &coop {
            let peers: Vec<usize> = (0..l).filter(|&j| j != i).collect();
            let estimate: Vec<FieldMessage> = if config.genie {
                (0..l).map(|j| messages[j][t].clone()).collect()
            } else {
                let mut z = vec![0.0; n];
                for &j in &peers {
                    axpy(&mut z, ch.g_between(j, i), &x[j]);
                }
                axpy(&mut z, noise, &draws.tx_noise[i][t]);
                // Resolution signals from the previous block, as this transmitter formed them.
                let mut known = vec![0.0; n];
                if t > 0 {
                    if let Some(own) = &res_tx[i][t - 1] {
                        for &j in peers.iter().filter(|j| coop.contains(j)) {
                            axpy(&mut known, root_p * ch.g_between(j, i) * v[(j, 1)], own);
                        }
                    }
                }
                let gains: Vec<f64> = peers.iter().map(|&j| root_p * ch.g_between(j, i) * v[(j, 0)]).collect();
                let dithers: Vec<Vec<f64>> = peers.iter().map(|&j| draws.fresh_dither[j][t].clone()).collect();
                let (decoded, distance) = transmitter_decode(cb, &z, &known, &gains, &dithers)?;
                let ok = peers.iter().zip(&decoded).all(|(&j, w)| *w == messages[j][t]);
                transmitter_decode_ok[t] &= ok;
                stages.push(StageRecord { block: t, stage: Stage::Transmitter, ok, distance });
                let mut est = decoded.into_iter();
                (0..l).map(|j| if j == i { messages[i][t].clone() } else { est.next().expect("one per peer") }).collect()
            };
            let f = field_combine(&estimate, &a, p_field)?;
            let pt = cb.phi_r(&f)?;
            res_tx[i][t] = Some(cb.dithered(&pt, &draws.resolution_dither[t]).iter().map(|x| x / sigma).collect());
        }
    }

    // Receiver.
    let g_eff: f64 = coop.iter().map(|&i| h[i] * v[(i, 1)]).sum();
    let hv0: Vec<f64> = (0..l).map(|i| h[i] * v[(i, 0)]).collect();
    let fresh_power: f64 = config.p * hv0.iter().map(|x| x * x).sum::<f64>();
    let alpha = vestigial_scaling(&hv0, &af, config.p, config.noise_var);
    let mut resolution_ok = Vec::with_capacity(blocks);
    let mut vestigial_ok = Vec::with_capacity(blocks);
    let mut function_recovered = Vec::with_capacity(blocks);
    let mut recovered = Vec::with_capacity(blocks);
    let mut prev_res: Option<Vec<f64>> = None;
    for t in 0..blocks {
        let interference = if t + 1 < blocks { fresh_power } else { 0.0 };
        let gamma = mmse_coefficients(g_eff, config.p, interference + config.noise_var);
        let scaled: Vec<f64> = received[t + 1]
            .iter()
            .zip(&draws.resolution_dither[t])
            .map(|(y, s)| sigma * gamma * y - s)
            .collect();
        let (res_hat, res_dist) = cb.quantize(Sublattice::Resolution, &mod_shaping(&scaled, beta))?;
        let res_hat = res_hat.reduce();
        let res_true = cb.phi_r(&truth[t])?;
        let r_ok = res_hat == res_true;
        stages.push(StageRecord { block: t, stage: Stage::Resolution, ok: r_ok, distance: res_dist });

        let mut y = received[t].clone();
        if let Some(prev) = &prev_res {
            axpy(&mut y, -root_p * g_eff, prev);
        }
        let res_real = res_hat.to_real(beta);
        let vest_in: Vec<f64> = (0..n)
            .map(|c| {
                let dither_sum: f64 = (0..l).map(|i| af[i] * draws.fresh_dither[i][t][c]).sum();
                sigma * alpha * y[c] - res_real[c] - dither_sum
            })
            .collect();
        let (vest_hat, vest_dist) = cb.quantize(Sublattice::Vestigial, &mod_shaping(&vest_in, beta))?;
        let vest_hat = vest_hat.reduce();
        let v_ok = vest_hat == cb.phi_v(&truth[t])?;
        stages.push(StageRecord { block: t, stage: Stage::Vestigial, ok: v_ok, distance: vest_dist });

        let combined = res_hat.add(&vest_hat);
        let f_hat = cb.phi_inv(&combined).unwrap_or_else(|| FieldMessage::zero(cb.k()));
        let f_ok = r_ok && v_ok && f_hat == truth[t];
        stages.push(StageRecord { block: t, stage: Stage::Function, ok: f_ok, distance: 0.0 });
        resolution_ok.push(r_ok);
        vestigial_ok.push(v_ok);
        function_recovered.push(f_ok);
        recovered.push(f_hat);
        prev_res = Some(cb.dithered(&res_hat, &draws.resolution_dither[t]).iter().map(|x| x / sigma).collect());
    }
    Ok(RoundOutcome { transmitter_decode_ok, resolution_ok, vestigial_ok, function_recovered, recovered, stages })
}

/// Worst-case distance budget of the noiseless receiver chain: the smaller
/// of half the minimum distance minus the largest possible effective noise,
/// over the resolution and vestigial stages. Positive margins guarantee exact
/// noiseless recovery at the receiver.
pub fn noiseless_margin(config: &RoundConfig) -> Result<f64> {
    config.validate()?;
    let cb = Codebook::from_spec(&config.codebook)?;
    let l = config.channel.num_tx();
    let h = config.channel.h_col(0);
    let v = config.steering.matrix();
    let af: Vec<f64> = config.coefficients().iter().map(|&x| x as f64).collect();
    let root_p = config.p.sqrt();
    // Largest norm of a codeword normalised to unit power.
    let radius = 0.5 * cb.beta() * (cb.n() as f64).sqrt() / (cb.beta() / 12f64.sqrt());
    let sigma = cb.beta() / 12f64.sqrt();

    let hv0: Vec<f64> = (0..l).map(|i| h[i] * v[(i, 0)]).collect();
    let g_eff: f64 = config.steering.subset().iter().map(|&i| h[i] * v[(i, 1)]).sum();
    let mut margin = f64::INFINITY;
    if cb.k_r() > 0 {
        let fresh_power = config.p * hv0.iter().map(|x| x * x).sum::<f64>();
        let gamma = mmse_coefficients(g_eff, config.p, fresh_power);
        let leak: f64 = hv0.iter().map(|x| (gamma * root_p * x).abs()).sum::<f64>() + (gamma * root_p * g_eff - 1.0).abs();
        margin = margin.min(0.5 * cb.min_distance(Sublattice::Resolution) - leak * radius * sigma);
    }
    if cb.k() > cb.k_r() {
        let alpha = vestigial_scaling(&hv0, &af, config.p, 0.0);
        let leak: f64 = hv0.iter().zip(&af).map(|(x, a)| (alpha * root_p * x - a).abs()).sum();
        margin = margin.min(0.5 * cb.min_distance(Sublattice::Vestigial) - leak * radius * sigma);
    }
    Ok(margin)
}

/// Codebook dimensions for a target fraction of the cooperative rate:
/// `(k, k_r)` with `R_r ≤ frac·min(res, overall)` and
/// `R_r + R_v ≤ frac·overall`, `R_v ≤ frac·ves`.
pub fn split_for_rate(breakdown: &RateBreakdown, fraction: f64, n: usize, p: u32) -> Result<(usize, usize)> {
    if !(fraction > 0.0) || n == 0 {
        return Err(Error::Parameter("need a positive rate fraction and block length".into()));
    }
    let per_dim = (p as f64).log2() / n as f64;
    let res = breakdown.resolution_terms.first().copied().unwrap_or(0.0);
    let ves = breakdown.vestigial_terms.first().copied().unwrap_or(0.0);
    let total = fraction * breakdown.overall;
    let k_r = ((fraction * res.min(breakdown.overall)) / per_dim + 1e-12).floor() as usize;
    let rest = (fraction * ves).min(total - k_r as f64 * per_dim);
    let k_v = (rest / per_dim + 1e-12).floor().max(0.0) as usize;
    if k_r + k_v == 0 {
        return Err(Error::Infeasible(format!("rate {total:.3} is below one field symbol per block")));
    }
    if k_r + k_v > n {
        return Err(Error::Infeasible("rate exceeds the block length".into()));
    }
    Ok((k_r + k_v, k_r))
}

/// Among `tries` consecutive seeds, the codebook with the largest minimum
/// distances (coding, then resolution, then vestigial).
pub fn best_codebook(n: usize, k: usize, k_r: usize, p: u32, seed: u64, tries: u64) -> Result<Codebook> {
    let beta = crate::lattice::unit_power_scale();
    let mut best: Option<((f64, f64, f64), Codebook)> = None;
    for s in seed..seed + tries.max(1) {
        let cb = Codebook::build(n, k, k_r, p, beta, s)?;
        let key = (
            cb.min_distance(Sublattice::Coding),
            cb.min_distance(Sublattice::Resolution),
            cb.min_distance(Sublattice::Vestigial),
        );
        if best.as_ref().is_none_or(|(b, _)| key > *b) {
            best = Some((key, cb));
        }
    }
    Ok(best.expect("at least one seed").1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    /// Rounds in which every block's function was recovered.
    pub rounds_recovered: usize,
    pub blocks: usize,
    pub blocks_recovered: usize,
    pub transmitter_failures: usize,
}

impl TrialSummary {
    pub fn round_rate(&self) -> f64 {
        self.rounds_recovered as f64 / self.trials as f64
    }

    pub fn block_rate(&self) -> f64 {
        self.blocks_recovered as f64 / self.blocks as f64
    }
}

/// Runs `trials` independent rounds with uniformly random messages. Trial `i`
/// draws from stream `i` of the master seed, so a different noise level with
/// the same seed reuses every message, dither and noise shape.
pub fn run_trials(config: &RoundConfig, trials: usize, seed: u64) -> Result<TrialSummary> {
    config.validate()?;
    let cb = Codebook::from_spec(&config.codebook)?;
    let l = config.channel.num_tx();
    let outcomes: Vec<RoundOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let messages: Vec<Vec<FieldMessage>> = (0..l)
                .map(|_| (0..config.num_blocks).map(|_| FieldMessage::random(cb.k(), cb.p(), &mut rng)).collect())
                .collect();
            let round_seed: u64 = rng.random();
            run_round_with(config, &cb, &messages, round_seed)
        })
        .collect::<Result<_>>()?;
    let mut s = TrialSummary { trials, rounds_recovered: 0, blocks: 0, blocks_recovered: 0, transmitter_failures: 0 };
    for o in &outcomes {
        s.rounds_recovered += o.all_recovered() as usize;
        s.blocks += o.function_recovered.len();
        s.blocks_recovered += o.function_recovered.iter().filter(|&&x| x).count();
        s.transmitter_failures += o.transmitter_decode_ok.iter().filter(|&&x| !x).count();
    }
    Ok(s)
}

/// Lattice point helper for tests and callers: `φ_r(f) + φ_v(f)` reduced.
pub fn reconstruct(cb: &Codebook, f: &FieldMessage) -> Result<LatticePoint> {
    Ok(cb.phi_r(f)?.add(&cb.phi_v(f)?).reduce())
}
