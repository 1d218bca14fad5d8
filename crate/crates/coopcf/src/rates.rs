//! Closed-form achievable rates and upper bounds, in bits per real channel use.
//!
//! The cooperative rate has three parts: a multiple-access term for
//! transmitters in the cooperating set `B` decoding their peers, a resolution
//! term for the beamformed resolution codeword, and a vestigial term, which
//! is the Nazer–Gastpar computation rate with cross-receiver resolution beams
//! treated as noise. Steering vector `v_0` scales each transmitter's own
//! codeword; `v_m` (m ≥ 1) is the resolution beam towards receiver `m`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use crate::channel::ChannelPair;
use crate::error::{Error, Result};
use crate::lattice::{Codebook, FieldMessage};

const POWER_SLACK: f64 = 1e-12;

/// Integer coefficient matrix `A` (`L×M`), one column per receiver.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoefficientMatrix {
    a: DMatrix<i64>,
}

/// Rank over the rationals by fraction-free elimination.
fn rational_rank(a: &DMatrix<i64>) -> usize {
    let (rows, cols) = a.shape();
    let mut m: Vec<Vec<i128>> = (0..rows).map(|i| (0..cols).map(|j| a[(i, j)] as i128).collect()).collect();
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
    }
    rank
}

impl CoefficientMatrix {
    /// Checks membership in the admissible set: full column rank and no all-zero column.
    pub fn new(a: DMatrix<i64>) -> Result<Self> {
        let (l, m) = a.shape();
        if m == 0 || l < m {
            return Err(Error::Dimension(format!("A is {l}x{m}, need L >= M >= 1")));
        }
        if (0..m).any(|j| a.column(j).iter().all(|&x| x == 0)) {
            return Err(Error::Validity("every column of A needs a nonzero entry".into()));
        }
        if rational_rank(&a) < m {
            return Err(Error::Validity("A must have rank M".into()));
        }
        Ok(Self { a })
    }

    /// Single-receiver coefficient vector.
    pub fn vector(a: &[i64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(a.len(), 1, a))
    }

    pub fn from_columns(cols: &[Vec<i64>]) -> Result<Self> {
        let l = cols.first().map_or(0, |c| c.len());
        if cols.iter().any(|c| c.len() != l) {
            return Err(Error::Dimension("columns differ in length".into()));
        }
        Self::new(DMatrix::from_fn(l, cols.len(), |i, j| cols[j][i]))
    }

    pub fn matrix(&self) -> &DMatrix<i64> {
        &self.a
    }

    pub fn num_tx(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_rx(&self) -> usize {
        self.a.ncols()
    }

    pub fn column(&self, m: usize) -> Vec<i64> {
        self.a.column(m).iter().copied().collect()
    }

    fn column_f64(&self, m: usize) -> Vec<f64> {
        self.a.column(m).iter().map(|&x| x as f64).collect()
    }

    /// All entries nonzero (every message present in every combination).
    pub fn is_strict(&self) -> bool {
        self.a.iter().all(|&x| x != 0)
    }

    pub fn column_norm_sq(&self, m: usize) -> i64 {
        self.a.column(m).iter().map(|x| x * x).sum()
    }
}

/// Cooperating set `B` and steering matrix `V = [v_0 | v_1 … v_M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringConfig {
    b: Vec<usize>,
    v: DMatrix<f64>,
}

impl SteeringConfig {
    pub fn new(mut b: Vec<usize>, v: DMatrix<f64>) -> Result<Self> {
        let l = v.nrows();
        if v.ncols() < 2 {
            return Err(Error::Dimension("V needs columns v_0 and at least one beam".into()));
        }
        b.sort_unstable();
        b.dedup();
        if b.iter().any(|&i| i >= l) {
            return Err(Error::Dimension(format!("cooperating set {b:?} out of range for L={l}")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("steering entries must be finite".into()));
        }
        for i in 0..l {
            let power: f64 = v.row(i).iter().map(|x| x * x).sum();
            if power > 1.0 + POWER_SLACK {
                return Err(Error::Validity(format!("transmitter {i} uses power {power} > 1")));
            }
            if !b.contains(&i) && v.row(i).iter().skip(1).any(|&x| x != 0.0) {
                return Err(Error::Validity(format!("transmitter {i} is outside B but sends resolution")));
            }
        }
        Ok(Self { b, v })
    }

    /// Empty `B` with the given codeword scaling and no resolution beams.
    pub fn noncooperative(v0: &[f64], num_rx: usize) -> Result<Self> {
        let mut v = DMatrix::zeros(v0.len(), num_rx + 1);
        v.column_mut(0).copy_from_slice(v0);
        Self::new(Vec::new(), v)
    }

    pub fn subset(&self) -> &[usize] {
        &self.b
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn v0(&self) -> Vec<f64> {
        self.v.column(0).iter().copied().collect()
    }

    /// Resolution beam for receiver `m` (0-based).
    pub fn beam(&self, m: usize) -> Vec<f64> {
        self.v.column(m + 1).iter().copied().collect()
    }

    /// Smallest unused power `1 - Σ_m v_lm²` over transmitters.
    pub fn power_slack(&self) -> f64 {
        (0..self.v.nrows())
            .map(|i| 1.0 - self.v.row(i).iter().map(|x| x * x).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Per-term view of the cooperative rate. Vectors are indexed by receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub overall: f64,
    /// Multiple-access term; `+∞` when `B` is empty or nobody is overheard.
    pub mac_term: f64,
    pub resolution_terms: Vec<f64>,
    pub vestigial_terms: Vec<f64>,
    /// Interference power `I_{m,r}` faced by the resolution decoder.
    pub interference_resolution: Vec<f64>,
    /// Interference power `I_{m,v}` faced by the vestigial decoder.
    pub interference_vestigial: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn half_log2(x: f64) -> f64 {
    0.5 * x.log2()
}

/// Cauchy–Schwarz misalignment `‖a‖²‖h‖² − (aᵀh)²`, evaluated through
/// Lagrange's identity `Σ_{i<j} (a_i h_j − a_j h_i)²` so that aligned vectors
/// give (near) zero instead of a cancellation residue.
pub fn misalignment(h: &[f64], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            s += (a[i] * h[j] - a[j] * h[i]).powi(2);
        }
    }
    s
}

/// Computation rate for one receiver with extra Gaussian interference power
/// `interference` added to unit noise.
fn computation_term(h: &[f64], a: &[f64], p: f64, interference: f64) -> f64 {
    let gain = half_log2(1.0 + interference + p * norm_sq(h));
    let penalty = half_log2(norm_sq(a) * (1.0 + interference) + p * misalignment(h, a));
    (gain - penalty).max(0.0)
}

fn mac_unchecked(gains: &[f64], p: f64, sigma2: f64) -> f64 {
    let n = gains.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let g2: Vec<f64> = gains.iter().map(|g| g * g).collect();
    let mut best = f64::INFINITY;
    for mask in 1u64..(1u64 << n) {
        let (mut s, mut count) = (0.0, 0usize);
        for (i, g) in g2.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += g;
                count += 1;
            }
        }
        best = best.min((1.0 + p * s / sigma2).log2() / (2.0 * count as f64));
    }
    best
}

/// Symmetric-rate capacity of the Gaussian multiple-access channel:
/// the minimum over nonempty subsets `S` of `log2(1 + P Σ_S h²/σ²) / (2|S|)`.
pub fn c_mac(gains: &[f64], p: f64, sigma2: f64) -> Result<f64> {
    if !(p > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::Parameter(format!("need P > 0 and sigma2 > 0, got {p}, {sigma2}")));
    }
    Ok(mac_unchecked(gains, p, sigma2))
}

fn check_power(p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("power {p} must be finite and nonnegative")))
    }
}

fn check_coefficients(h: &DMatrix<f64>, a: &CoefficientMatrix) -> Result<()> {
    if a.matrix().shape() != h.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} but H is {:?}",
            a.matrix().shape(),
            h.shape()
        )));
    }
    Ok(())
}

/// Non-cooperative compute-and-forward rate (Nazer–Gastpar), minimised over receivers.
pub fn rate_nc(h: &DMatrix<f64>, p: f64, a: &CoefficientMatrix) -> Result<f64> {
    check_power(p)?;
    check_coefficients(h, a)?;
    Ok((0..h.ncols())
        .map(|m| {
            let hm: Vec<f64> = h.column(m).iter().copied().collect();
            computation_term(&hm, &a.column_f64(m), p, 0.0)
        })
        .fold(f64::INFINITY, f64::min))
}

/// Non-cooperative rate with transmit amplitudes `v_0` (effective channels `h_m ∘ v_0`).
pub fn rate_superposition(h: &DMatrix<f64>, p: f64, a: &CoefficientMatrix, v0: &[f64]) -> Result<f64> {
    check_power(p)?;
    check_coefficients(h, a)?;
    if v0.len() != h.nrows() {
        return Err(Error::Dimension("v_0 length must equal L".into()));
    }
    if v0.iter().any(|v| !(v.abs() <= 1.0 + POWER_SLACK)) {
        return Err(Error::Validity("|v_l0| must not exceed 1".into()));
    }
    Ok((0..h.ncols())
        .map(|m| {
            let hm: Vec<f64> = h.column(m).iter().copied().collect();
            computation_term(&hadamard(&hm, v0), &a.column_f64(m), p, 0.0)
        })
        .fold(f64::INFINITY, f64::min))
}

/// Gains seen by transmitter `l` from its peers, scaled by their codeword amplitudes.
fn overheard_gains(ch: &ChannelPair, v0: &[f64], l: usize) -> Vec<f64> {
    (0..ch.num_tx()).filter(|&j| j != l).map(|j| ch.g_between(j, l) * v0[j]).collect()
}

/// Cooperative subset rate for fixed `A`, `B` and `V`.
pub fn rate_coop(ch: &ChannelPair, p: f64, a: &CoefficientMatrix, steering: &SteeringConfig) -> Result<RateBreakdown> {
    check_power(p)?;
    check_coefficients(&ch.h, a)?;
    let (l, m_count) = ch.h.shape();
    if steering.matrix().shape() != (l, m_count + 1) {
        return Err(Error::Dimension(format!(
            "V is {:?}, expected {}x{}",
            steering.matrix().shape(),
            l,
            m_count + 1
        )));
    }
    let v0 = steering.v0();
    let beams: Vec<Vec<f64>> = (0..m_count).map(|m| steering.beam(m)).collect();
    let mac_term = steering
        .subset()
        .iter()
        .map(|&i| mac_unchecked(&overheard_gains(ch, &v0, i), p, 1.0))
        .fold(f64::INFINITY, f64::min);

    let mut out = RateBreakdown {
        overall: mac_term,
        mac_term,
        resolution_terms: Vec::with_capacity(m_count),
        vestigial_terms: Vec::with_capacity(m_count),
        interference_resolution: Vec::with_capacity(m_count),
        interference_vestigial: Vec::with_capacity(m_count),
    };
    for m in 0..m_count {
        let hm = ch.h_col(m);
        let hv = hadamard(&hm, &v0);
        let cross: f64 = (0..m_count).filter(|&j| j != m).map(|j| dot(&hm, &beams[j]).powi(2)).sum();
        let i_v = p * cross;
        let i_r = p * (norm_sq(&hv) + cross);
        let res = half_log2(1.0 + p * dot(&hm, &beams[m]).powi(2) / (1.0 + i_r));
        let ves = computation_term(&hv, &a.column_f64(m), p, i_v);
        out.overall = out.overall.min(res + ves);
        out.resolution_terms.push(res);
        out.vestigial_terms.push(ves);
        out.interference_resolution.push(i_r);
        out.interference_vestigial.push(i_v);
    }
    Ok(out)
}

/// Zero-forcing cooperative rate with its steering.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForcingRate {
    pub rate: f64,
    pub steering: SteeringConfig,
}

/// All transmitters cooperate and the resolution beams are zero-forcing
/// directions scaled by a common factor filling the power left after `v_0`.
pub fn rate_zf(ch: &ChannelPair, p: f64, a: &CoefficientMatrix, v0: &[f64]) -> Result<ZeroForcingRate> {
    check_power(p)?;
    check_coefficients(&ch.h, a)?;
    let (l, m_count) = ch.h.shape();
    if v0.len() != l {
        return Err(Error::Dimension("v_0 length must equal L".into()));
    }
    if v0.iter().any(|v| !(v.abs() <= 1.0 + POWER_SLACK)) {
        return Err(Error::Validity("|v_l0| must not exceed 1".into()));
    }
    let all: Vec<usize> = (0..l).collect();
    let dirs = (0..m_count)
        .map(|m| crate::search::zero_forcing_vector(&ch.h, m, &all))
        .collect::<Result<Vec<_>>>()?;
    let mut scale = f64::INFINITY;
    for i in 0..l {
        let used: f64 = dirs.iter().map(|u| u[i] * u[i]).sum();
        if used > 0.0 {
            scale = scale.min(((1.0 - v0[i] * v0[i]).max(0.0) / used).sqrt());
        }
    }
    if !scale.is_finite() {
        scale = 0.0;
    }
    let mut v = DMatrix::zeros(l, m_count + 1);
    v.column_mut(0).copy_from_slice(v0);
    for (m, u) in dirs.iter().enumerate() {
        for i in 0..l {
            v[(i, m + 1)] = scale * u[i];
        }
    }
    // Guard against rounding pushing a row just past unit power.
    for i in 0..l {
        let power: f64 = v.row(i).iter().map(|x| x * x).sum();
        if power > 1.0 {
            let s = power.sqrt();
            for j in 1..=m_count {
                v[(i, j)] /= s;
            }
        }
    }
    let steering = SteeringConfig::new(all, v)?;
    for m in 0..m_count {
        let beam = steering.beam(m);
        for j in (0..m_count).filter(|&j| j != m) {
            let leak = dot(&beam, &ch.h_col(j)).abs();
            if leak > 1e-10 {
                return Err(Error::Infeasible(format!("beam {m} leaks {leak} into receiver {j}")));
            }
        }
    }
    let mac = (0..l)
        .map(|i| mac_unchecked(&overheard_gains(ch, v0, i), p, 1.0))
        .fold(f64::INFINITY, f64::min);
    let mut rate = mac;
    for m in 0..m_count {
        let hm = ch.h_col(m);
        let hv = hadamard(&hm, v0);
        let am = a.column_f64(m);
        let gain = half_log2(1.0 + p * (norm_sq(&hv) + dot(&hm, &steering.beam(m)).powi(2)));
        let penalty = half_log2(norm_sq(&am) + p * misalignment(&hv, &am));
        rate = rate.min((gain - penalty).max(0.0));
    }
    Ok(ZeroForcingRate { rate, steering })
}

/// Two-phase random-coding rate for a single receiver: the members of `B`
/// decode everyone in the first half, then beamform the function coherently.
pub fn rate_random(ch: &ChannelPair, p: f64, b: &[usize]) -> Result<f64> {
    check_power(p)?;
    if ch.num_rx() != 1 {
        return Err(Error::Unsupported("random-coding rate is defined for M = 1".into()));
    }
    if b.is_empty() || b.iter().any(|&i| i >= ch.num_tx()) {
        return Err(Error::Parameter(format!("cooperating set {b:?} must be nonempty and in range")));
    }
    let ones = vec![1.0; ch.num_tx()];
    let decode = b
        .iter()
        .map(|&i| 0.5 * mac_unchecked(&overheard_gains(ch, &ones, i), p, 1.0))
        .fold(f64::INFINITY, f64::min);
    let coherent: f64 = b.iter().map(|&i| ch.h[(i, 0)]).sum();
    Ok(decode.min(0.25 * (1.0 + p * coherent * coherent).log2()))
}

/// Single-receiver MISO capacity with the total power `L·P` shared by the
/// transmit antennas.
pub fn bound_miso(h: &DMatrix<f64>, p: f64) -> Result<f64> {
    check_power(p)?;
    if h.ncols() != 1 {
        return Err(Error::Unsupported("MISO bound is implemented for M = 1".into()));
    }
    let hh: f64 = h.iter().map(|x| x * x).sum();
    Ok(half_log2(1.0 + h.nrows() as f64 * p * hh))
}

fn cutset_cuts(ch: &ChannelPair, p: f64, source: usize, rho: f64) -> (f64, f64) {
    let (h1, h2) = (ch.h[(0, 0)], ch.h[(1, 0)]);
    let hs = ch.h[(source, 0)];
    let g = ch.g_between(source, 1 - source);
    let broadcast = half_log2(1.0 + p * (1.0 - rho * rho) * (hs * hs + g * g));
    let mac = half_log2(1.0 + p * (h1 * h1 + h2 * h2 + 2.0 * rho * h1 * h2));
    (broadcast, mac)
}

/// Max over `ρ ∈ [0,1]` of `min(broadcast, mac)` for one source, found by a
/// grid of `grid` points over `ρ`.
pub fn cutset_source_grid(ch: &ChannelPair, p: f64, source: usize, grid: usize) -> f64 {
    (0..grid)
        .map(|i| {
            let rho = i as f64 / (grid - 1) as f64;
            let (b, m) = cutset_cuts(ch, p, source, rho);
            b.min(m)
        })
        .fold(0.0, f64::max)
}

/// Relay-channel cut-set bound for two transmitters and one receiver, with
/// the other transmitter acting as relay for each source in turn.
///
/// The broadcast cut falls and the coherent cut rises with the input
/// correlation `ρ`, so the inner maximum sits at their crossing, which is
/// located by bisection.
pub fn bound_cutset(ch: &ChannelPair, p: f64) -> Result<f64> {
    check_power(p)?;
    if ch.num_tx() != 2 || ch.num_rx() != 1 {
        return Err(Error::Unsupported("cut-set bound is implemented for L = 2, M = 1".into()));
    }
    if ch.h.iter().any(|&x| x < 0.0) {
        return Err(Error::Unsupported("cut-set bound assumes nonnegative forward gains".into()));
    }
    let mut bound = f64::INFINITY;
    for source in 0..2 {
        let gap = |rho: f64| {
            let (b, m) = cutset_cuts(ch, p, source, rho);
            b - m
        };
        let value = if gap(0.0) <= 0.0 {
            cutset_cuts(ch, p, source, 0.0).0
        } else if gap(1.0) >= 0.0 {
            cutset_cuts(ch, p, source, 1.0).1
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if gap(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (b, m) = cutset_cuts(ch, p, source, lo);
            b.min(m)
        };
        bound = bound.min(value);
    }
    Ok(bound)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Density at `y` of `Σ_i a_i U_i + N(0, σ²)` with `U_i` uniform on `[-1/2, 1/2]`.
fn uniform_sum_density(y: f64, amps: &[f64], sigma: f64) -> f64 {
    match amps {
        [] => (-0.5 * (y / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
        [a] => (normal_cdf((y + a / 2.0) / sigma) - normal_cdf((y - a / 2.0) / sigma)) / a,
        [a, rest @ ..] => {
            // composite Simpson over the first uniform
            let steps = 128;
            let h = a / steps as f64;
            let mut acc = 0.0;
            for i in 0..=steps {
                let u = -a / 2.0 + i as f64 * h;
                let w = if i == 0 || i == steps {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * uniform_sum_density(y - u, rest, sigma);
            }
            acc * h / 3.0 / a
        }
    }
}

/// Monte Carlo estimate of `(1/n)·I(x_B; y | x_{B^c})` for dithered lattice
/// inputs scaled to power `P` per dimension, observed through `gains`
/// (one per member of `B`) in Gaussian noise of variance `sigma2`.
///
/// With a uniform dither every transmitted coordinate is uniform over the
/// shaping cell, so the output density factorises over coordinates and is
/// computed by quadrature.
pub fn mutual_info_check(
    codebook: &Codebook,
    gains: &[f64],
    p: f64,
    sigma2: f64,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_power(p)?;
    if !(sigma2 > 0.0) {
        return Err(Error::Parameter("noise power must be positive".into()));
    }
    if gains.is_empty() || num_samples == 0 {
        return Ok(0.0);
    }
    let n = codebook.n();
    let amp = (p / codebook.second_moment()).sqrt();
    let sigma = sigma2.sqrt();
    let widths: Vec<f64> = gains
        .iter()
        .map(|g| (g * amp * codebook.beta()).abs())
        .filter(|w| *w > 0.0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..num_samples {
        let mut signal = vec![0.0; n];
        for g in gains {
            let w = FieldMessage::random(codebook.k(), codebook.p(), &mut rng);
            let t = codebook.dither(&mut rng);
            let c = codebook.dithered(&codebook.phi(&w)?, &t);
            for (s, ci) in signal.iter_mut().zip(&c) {
                *s += g * amp * ci;
            }
        }
        for s in signal {
            let z: f64 = rng.sample(StandardNormal);
            let y = s + sigma * z;
            let cond = uniform_sum_density(y - s, &[], sigma);
            let marg = uniform_sum_density(y, &widths, sigma);
            total += (cond / marg).log2();
        }
    }
    Ok(total / (num_samples * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{preset_scenario, Preset};

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn mac_examples() {
        assert!((c_mac(&[1.0], 3.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let two = c_mac(&[1.0, 1.0], 1.0, 1.0).unwrap();
        let oracle = [0.5 * 2f64.log2(), 0.5 * 2f64.log2(), 0.25 * 3f64.log2()]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((two - oracle).abs() < 1e-15);
        assert!((two - 0.39624).abs() < 1e-5);
        assert_eq!(c_mac(&[0.0, 2.0], 5.0, 1.0).unwrap(), 0.0);
        assert_eq!(c_mac(&[], 5.0, 1.0).unwrap(), f64::INFINITY);
        assert!(c_mac(&[1.0], 0.0, 1.0).is_err());
        assert!(c_mac(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn coefficient_validity() {
        assert!(CoefficientMatrix::vector(&[0, 0]).is_err());
        assert!(CoefficientMatrix::from_columns(&[vec![1, 1], vec![1, 1]]).is_err());
        assert!(CoefficientMatrix::from_columns(&[vec![1, 2], vec![2, 4]]).is_err());
        assert!(CoefficientMatrix::from_columns(&[vec![1, 2], vec![2, 3]]).is_ok());
        assert!(CoefficientMatrix::from_columns(&[vec![1, 0, 2], vec![0, 1, 1]]).is_ok());
        assert!(CoefficientMatrix::from_columns(&[vec![1, 0], vec![0, 1], vec![1, 1]]).is_err());
        assert!(!CoefficientMatrix::vector(&[1, 0]).unwrap().is_strict());
        assert!(CoefficientMatrix::vector(&[1, -1]).unwrap().is_strict());
    }

    #[test]
    fn rational_rank_matches_float_rank() {
        let a = DMatrix::from_row_slice(3, 3, &[2, -1, 0, 4, -2, 0, 1, 1, 1]);
        assert_eq!(rational_rank(&a), 2);
        let b = DMatrix::from_row_slice(3, 2, &[0, 1, 0, 2, 3, 0]);
        assert_eq!(rational_rank(&b), 2);
    }

    #[test]
    fn nc_examples() {
        let a1 = CoefficientMatrix::vector(&[1]).unwrap();
        assert!((rate_nc(&col(&[1.0]), 3.0, &a1).unwrap() - 1.0).abs() < 1e-15);
        let a = CoefficientMatrix::vector(&[1, 1]).unwrap();
        let r = rate_nc(&col(&[1.0, 1.0]), 10.0, &a).unwrap();
        assert!((r - 0.5 * 10.5f64.log2()).abs() < 1e-14);
        assert!((r - 1.6962).abs() < 1e-4);
        let anti = CoefficientMatrix::vector(&[1, -1]).unwrap();
        for p in [1.0, 10.0, 1e4] {
            assert_eq!(rate_nc(&col(&[1.0, 1.0]), p, &anti).unwrap(), 0.0);
        }
        let bad = CoefficientMatrix::vector(&[1, 1, 1]).unwrap();
        assert!(rate_nc(&col(&[1.0, 1.0]), 1.0, &bad).is_err());
    }

    #[test]
    fn superposition_alignment() {
        let h = col(&[1.0, 2.0]);
        let a = CoefficientMatrix::vector(&[1, 1]).unwrap();
        let hv = hadamard(&[1.0, 2.0], &[1.0, 0.5]);
        assert!(misalignment(&hv, &[1.0, 1.0]) <= 1e-12);
        let r = rate_superposition(&h, 10.0, &a, &[1.0, 0.5]).unwrap();
        assert!((r - 0.5 * 10.5f64.log2()).abs() < 1e-14);
        assert_eq!(rate_superposition(&h, 10.0, &a, &[1.0, 1.0]).unwrap(), rate_nc(&h, 10.0, &a).unwrap());
        assert_eq!(rate_superposition(&h, 1e6, &a, &[0.0, 1.0]).unwrap(), 0.0);
        assert!(rate_superposition(&h, 10.0, &a, &[1.1, 0.5]).is_err());
    }

    #[test]
    fn coop_reduces_to_nc() {
        let ch = preset_scenario(Preset::Example1, 2.0).unwrap();
        let a = CoefficientMatrix::vector(&[1, 1]).unwrap();
        let s = SteeringConfig::noncooperative(&[1.0, 1.0], 1).unwrap();
        let br = rate_coop(&ch, 10.0, &a, &s).unwrap();
        assert_eq!(br.overall, rate_nc(&ch.h, 10.0, &a).unwrap());
        assert_eq!(br.mac_term, f64::INFINITY);
        assert_eq!(br.resolution_terms, vec![0.0]);
    }

    #[test]
    fn coop_without_beams() {
        let ch = preset_scenario(Preset::Example1, 2.0).unwrap();
        let a = CoefficientMatrix::vector(&[1, 1]).unwrap();
        let v = DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.8, 0.0]);
        let s = SteeringConfig::new(vec![0, 1], v).unwrap();
        let br = rate_coop(&ch, 10.0, &a, &s).unwrap();
        assert_eq!(br.resolution_terms[0], 0.0);
        assert_eq!(br.interference_vestigial[0], 0.0);
        let expected_mac = 0.5 * (1.0 + 10.0 * (2.0f64 * 0.8).powi(2)).log2();
        assert!((br.mac_term - expected_mac).abs() < 1e-14);
        assert_eq!(br.overall, br.mac_term.min(br.vestigial_terms[0]));
    }

    #[test]
    fn coop_hand_computed_example1() {
        // Symmetric split x² + y² = 1 on example 1: independent closed form.
        let (g, p, x, y) = (3.0, 10.0, 0.6f64, 0.8f64);
        let ch = preset_scenario(Preset::Example1, g).unwrap();
        let a = CoefficientMatrix::vector(&[1, 1]).unwrap();
        let v = DMatrix::from_row_slice(2, 2, &[x, y, x, y]);
        let br = rate_coop(&ch, p, &a, &SteeringConfig::new(vec![0, 1], v).unwrap()).unwrap();
        let mac = 0.5 * (1.0 + p * g * g * x * x).log2();
        let res = 0.5 * (1.0 + p * 4.0 * y * y / (1.0 + 2.0 * p * x * x)).log2();
        let ves = (0.5 * (1.0 + 2.0 * p * x * x).log2() - 0.5 * 2f64.log2()).max(0.0);
        assert!((br.mac_term - mac).abs() < 1e-13);
        assert!((br.resolution_terms[0] - res).abs() < 1e-13);
        assert!((br.vestigial_terms[0] - ves).abs() < 1e-13);
        assert!((br.overall - mac.min(res + ves)).abs() < 1e-13);
    }

    #[test]
    fn steering_validation() {
        let v = DMatrix::from_row_slice(2, 2, &[0.8, 0.7, 1.0, 0.0]);
        assert!(SteeringConfig::new(vec![0, 1], v).is_err());
        let v = DMatrix::from_row_slice(2, 2, &[0.6, 0.8, 1.0, 0.1]);
        assert!(SteeringConfig::new(vec![0], v).is_err());
        let v = DMatrix::from_row_slice(2, 2, &[0.6, 0.8, 1.0, 0.0]);
        let s = SteeringConfig::new(vec![0], v).unwrap();
        assert!(s.power_slack() >= -1e-12);
    }

    #[test]
    fn random_coding_examples() {
        let ch = preset_scenario(Preset::Example1, 1.0).unwrap();
        assert!((rate_random(&ch, 3.0, &[0]).unwrap() - 0.5).abs() < 1e-15);
        let zero = ChannelPair::single_receiver(&[0.0, 0.0], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(rate_random(&zero, 3.0, &[0, 1]).unwrap(), 0.0);
        let asym = ChannelPair::single_receiver(&[0.5, 2.0], DMatrix::from_row_slice(2, 2, &[0.0, 9.0, 9.0, 0.0])).unwrap();
        let full = rate_random(&asym, 3.0, &[0, 1]).unwrap();
        assert!((full - 0.25 * (1.0 + 3.0 * 2.5f64 * 2.5).log2()).abs() < 1e-14);
        let e4 = preset_scenario(Preset::Example4, 0.5).unwrap();
        assert!(matches!(rate_random(&e4, 1.0, &[0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn miso_bound_values() {
        let h = col(&[1.0, 1.0]);
        assert!((bound_miso(&h, 10.0).unwrap() - 0.5 * 41f64.log2()).abs() < 1e-14);
        assert!(bound_miso(&h, 1e-12).unwrap() < 1e-11);
        assert!(bound_miso(&DMatrix::from_element(2, 2, 1.0), 1.0).is_err());
    }

    #[test]
    fn cutset_limits() {
        let p = 10.0;
        let iso = ChannelPair::single_receiver(&[1.0, 0.5], DMatrix::zeros(2, 2)).unwrap();
        let independent = 0.5 * (1.0 + p * 0.25f64).log2();
        assert!((bound_cutset(&iso, p).unwrap() - independent).abs() < 1e-12);
        let strong = preset_scenario(Preset::Example1, 1e4).unwrap();
        let coherent = 0.5 * (1.0 + p * 4.0f64).log2();
        assert!((bound_cutset(&strong, p).unwrap() - coherent).abs() < 1e-6);
        for g in [0.1, 1.0, 3.0, 30.0] {
            let ch = preset_scenario(Preset::Example1, g).unwrap();
            let exact = bound_cutset(&ch, p).unwrap();
            let grid = (0..2).map(|s| cutset_source_grid(&ch, p, s, 100_001)).fold(f64::INFINITY, f64::min);
            assert!(exact >= grid - 1e-12 && exact - grid < 1e-4, "g={g}: {exact} vs {grid}");
            assert!(exact <= bound_miso(&ch.h, p).unwrap());
        }
    }

    #[test]
    fn zero_forcing_rate_has_no_leakage() {
        let ch = preset_scenario(Preset::Example4, 0.5).unwrap();
        let a = CoefficientMatrix::from_columns(&[vec![1, 1], vec![1, 0]]).unwrap();
        let zf = rate_zf(&ch, 10.0, &a, &[0.6, 0.6]).unwrap();
        let br = rate_coop(&ch, 10.0, &a, &zf.steering).unwrap();
        for iv in &br.interference_vestigial {
            assert!(iv.abs() < 1e-18);
        }
        assert!(zf.steering.power_slack() >= -1e-12);
        assert!(zf.rate <= br.overall + 1e-12);
    }

    #[test]
    fn zero_forcing_single_receiver_is_matched_beam() {
        let ch = preset_scenario(Preset::Example1, 2.0).unwrap();
        let a = CoefficientMatrix::vector(&[1, 1]).unwrap();
        let zf = rate_zf(&ch, 10.0, &a, &[0.6, 0.6]).unwrap();
        let b = zf.steering.beam(0);
        assert!((b[0] - 0.8).abs() < 1e-12 && (b[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_trivial_cases() {
        let cb = Codebook::build(4, 2, 1, 5, 1.0, 3).unwrap();
        assert_eq!(mutual_info_check(&cb, &[], 10.0, 1.0, 100, 1).unwrap(), 0.0);
        let faint = mutual_info_check(&cb, &[1.0], 10.0, 1e8, 2000, 1).unwrap();
        assert!(faint.abs() < 1e-3, "{faint}");
    }

    #[test]
    fn mutual_information_single_user() {
        let cb = Codebook::build(4, 2, 1, 5, 1.0, 3).unwrap();
        let est = mutual_info_check(&cb, &[1.0], 10.0, 1.0, 20_000, 7).unwrap();
        // oracle: numerical entropy of uniform-plus-Gaussian output, 1.6443 bits
        assert!((est - 1.6443).abs() < 0.03, "{est}");
    }

    #[test]
    fn uniform_sum_density_integrates_to_one() {
        for amps in [vec![], vec![3.0], vec![3.0, 1.5]] {
            let (lo, hi, steps) = (-15.0, 15.0, 6000);
            let h = (hi - lo) / steps as f64;
            let mass: f64 = (0..steps).map(|i| uniform_sum_density(lo + (i as f64 + 0.5) * h, &amps, 1.0) * h).sum();
            assert!((mass - 1.0).abs() < 1e-6, "{amps:?}: {mass}");
        }
    }
}
