//! Maximisation of the cooperative rate over coefficients, cooperating sets
//! and steering vectors.
//!
//! The steering problem is non-convex, so the optimiser is a deterministic
//! heuristic: a coarse grid over the share of power given to resolution
//! beams, followed by pattern-search coordinate ascent from every grid point.
//! Each row of `V` is parameterised in hyperspherical coordinates, so every
//! move stays inside the per-transmitter power constraint. Since ascent only
//! accepts strict improvements, a run never ends below its starting point.

use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelPair;
use crate::error::{Error, Result};
use crate::rates::{rate_coop, rate_nc, rate_zf, CoefficientMatrix, RateBreakdown, SteeringConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Largest absolute coefficient entry.
    pub coeff_bound: i64,
    /// Points on the power-split grid.
    pub grid_points: usize,
    /// Coordinate-ascent sweeps per start.
    pub refine_iters: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { coeff_bound: 3, grid_points: 9, refine_iters: 40 }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.coeff_bound < 1 || self.grid_points < 1 || self.refine_iters < 1 {
            return Err(Error::Parameter(format!("search budget entries must be positive: {self:?}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for SearchBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.coeff_bound, self.grid_points, self.refine_iters)
    }
}

impl std::str::FromStr for SearchBudget {
    type Err = Error;

    /// Parses `coeff_bound,grid_points,refine_iters`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("budget '{s}' is not coeff_bound,grid_points,refine_iters"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let b = SearchBudget {
            coeff_bound: parts[0].parse().map_err(|_| bad())?,
            grid_points: parts[1].parse().map_err(|_| bad())?,
            refine_iters: parts[2].parse().map_err(|_| bad())?,
        };
        b.validate()?;
        Ok(b)
    }
}

/// Cooperating sets considered by [`best_cooperative_rate_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetFamily {
    /// Empty set, every singleton and the full set.
    Paper,
    /// Empty set and the full set.
    Symmetric,
    /// All `2^L` subsets.
    All,
    Fixed(Vec<Vec<usize>>),
}

impl SubsetFamily {
    pub fn subsets(&self, l: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = match self {
            SubsetFamily::Paper => {
                let mut v = vec![Vec::new()];
                v.extend((0..l).map(|i| vec![i]));
                v.push((0..l).collect());
                v
            }
            SubsetFamily::Symmetric => vec![Vec::new(), (0..l).collect()],
            SubsetFamily::All => (0u64..1 << l)
                .map(|mask| (0..l).filter(|i| mask >> i & 1 == 1).collect())
                .collect(),
            SubsetFamily::Fixed(list) => list.clone(),
        };
        let mut seen = Vec::new();
        out.retain(|b| {
            let mut s = b.clone();
            s.sort_unstable();
            s.dedup();
            if seen.contains(&s) {
                false
            } else {
                seen.push(s);
                true
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Require every coefficient to be nonzero (single receiver).
    pub strict: bool,
    pub subsets: SubsetFamily,
    /// Search only these coefficient matrices instead of enumerating.
    pub coefficients: Option<Vec<CoefficientMatrix>>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { strict: false, subsets: SubsetFamily::Paper, coefficients: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_rate: f64,
    pub a: CoefficientMatrix,
    pub b: Vec<usize>,
    pub v: SteeringConfig,
    pub breakdown: RateBreakdown,
}

/// Integer matrices with entries in `[-bound, bound]` that are admissible
/// coefficient matrices, one per sign pattern of columns (the first nonzero
/// entry of each column is positive). Ordered by total squared norm, then
/// lexicographically.
pub fn enumerate_coefficients(l: usize, m: usize, bound: i64, strict: bool) -> Vec<CoefficientMatrix> {
    if bound < 1 || m == 0 || l < m {
        return Vec::new();
    }
    let width = (2 * bound + 1) as u64;
    let cells = (l * m) as u32;
    let mut out: Vec<(i64, Vec<i64>, CoefficientMatrix)> = Vec::new();
    for idx in 0..width.pow(cells) {
        let mut rest = idx;
        let entries: Vec<i64> = (0..l * m)
            .map(|_| {
                let e = (rest % width) as i64 - bound;
                rest /= width;
                e
            })
            .collect();
        if strict && m == 1 && entries.contains(&0) {
            continue;
        }
        let canonical = entries
            .chunks(l)
            .all(|c| c.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0));
        if !canonical {
            continue;
        }
        if let Ok(a) = CoefficientMatrix::new(DMatrix::from_column_slice(l, m, &entries)) {
            let norm: i64 = entries.iter().map(|x| x * x).sum();
            out.push((norm, entries, a));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
    out.into_iter().map(|(_, _, a)| a).collect()
}

/// Drops matrices whose columns exceed `‖a_m‖² ≤ 1 + P‖h_m‖²`, beyond which
/// the computation term is zero. Keeps the smallest-norm matrices if nothing
/// survives.
pub fn prune_coefficients(list: Vec<CoefficientMatrix>, h: &DMatrix<f64>, p: f64) -> Vec<CoefficientMatrix> {
    let caps: Vec<f64> = (0..h.ncols()).map(|m| 1.0 + p * h.column(m).norm_squared()).collect();
    let fits = |a: &CoefficientMatrix| (0..a.num_rx()).all(|m| a.column_norm_sq(m) as f64 <= caps[m]);
    let kept: Vec<CoefficientMatrix> = list.iter().filter(|a| fits(a)).cloned().collect();
    if !kept.is_empty() {
        return kept;
    }
    let total = |a: &CoefficientMatrix| (0..a.num_rx()).map(|m| a.column_norm_sq(m)).sum::<i64>();
    let min = list.iter().map(total).min();
    list.into_iter().filter(|a| Some(total(a)) == min).collect()
}

/// Best non-cooperative rate over enumerated coefficient matrices.
pub fn best_rate_nc(h: &DMatrix<f64>, p: f64, bound: i64, strict: bool) -> Result<(f64, CoefficientMatrix)> {
    let list = enumerate_coefficients(h.nrows(), h.ncols(), bound, strict);
    let mut best: Option<(f64, CoefficientMatrix)> = None;
    for a in list {
        let r = rate_nc(h, p, &a)?;
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, a));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no admissible coefficient matrix".into()))
}

/// Unit vector supported on `b` that is orthogonal to every `h_{m'}` with
/// `m' ≠ m` and maximises `v·h_m`; the sign makes `v·h_m ≥ 0`.
pub fn zero_forcing_vector(h: &DMatrix<f64>, m: usize, b: &[usize]) -> Result<Vec<f64>> {
    let (l, m_count) = h.shape();
    if m >= m_count {
        return Err(Error::Dimension(format!("receiver {m} out of range")));
    }
    let mut coords: Vec<usize> = b.iter().copied().filter(|&i| i < l).collect();
    coords.sort_unstable();
    coords.dedup();
    if coords.is_empty() {
        return Err(Error::Infeasible("cooperating set is empty".into()));
    }
    let s = coords.len();
    let target: Vec<f64> = coords.iter().map(|&i| h[(i, m)]).collect();
    let others: Vec<usize> = (0..m_count).filter(|&j| j != m).collect();

    // Orthonormal basis of the constraint row space.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if !others.is_empty() {
        let c = DMatrix::from_fn(others.len(), s, |r, col| h[(coords[col], others[r])]);
        let svd = SVD::new(c, false, true);
        let sv = &svd.singular_values;
        let v_t = svd.v_t.expect("requested right singular vectors");
        let smax = sv.iter().copied().fold(0.0, f64::max);
        for (i, &sigma) in sv.iter().enumerate() {
            if sigma > 1e-12 * smax.max(f64::MIN_POSITIVE) {
                basis.push(v_t.row(i).iter().copied().collect());
            }
        }
    }
    if basis.len() >= s {
        return Err(Error::Infeasible(format!("no nonzero beam for receiver {m} avoids the other receivers")));
    }
    let project = |mut v: Vec<f64>| -> Vec<f64> {
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        v
    };
    let scale = target.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = project(target.clone());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm(&v) <= 1e-12 * scale.max(1.0) {
        // h_m lies in the constrained span: any null vector carries zero gain.
        v = (0..s)
            .map(|j| project((0..s).map(|i| if i == j { 1.0 } else { 0.0 }).collect()))
            .find(|u| norm(u) > 1e-8)
            .ok_or_else(|| Error::Infeasible("null space vanished numerically".into()))?;
    }
    let nv = norm(&v);
    let mut v: Vec<f64> = v.iter().map(|x| x / nv).collect();
    v = project(v);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    if v.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let mut full = vec![0.0; l];
    for (pos, &i) in coords.iter().enumerate() {
        full[i] = v[pos];
    }
    Ok(full)
}

/// Layout of the optimisation variables for one `(L, M, B)`.
struct Layout {
    l: usize,
    m: usize,
    in_b: Vec<bool>,
    /// Offset of each transmitter's parameters.
    offset: Vec<usize>,
    len: usize,
}

impl Layout {
    fn new(l: usize, m: usize, b: &[usize]) -> Self {
        let in_b: Vec<bool> = (0..l).map(|i| b.contains(&i)).collect();
        let mut offset = Vec::with_capacity(l);
        let mut len = 0;
        for &coop in &in_b {
            offset.push(len);
            len += if coop { m + 1 } else { 1 };
        }
        Layout { l, m, in_b, offset, len }
    }

    /// Parameters of a cooperating row: radius then `M` angles.
    fn to_matrix(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(self.l, self.m + 1);
        for i in 0..self.l {
            let o = self.offset[i];
            if self.in_b[i] {
                let mut rem = theta[o].clamp(0.0, 1.0);
                for j in 0..self.m {
                    let phi = theta[o + 1 + j];
                    v[(i, j)] = rem * phi.cos();
                    rem *= phi.sin();
                }
                v[(i, self.m)] = rem;
            } else {
                v[(i, 0)] = theta[o].clamp(-1.0, 1.0);
            }
        }
        v
    }

    fn theta_of(&self, v: &DMatrix<f64>) -> Vec<f64> {
        let mut theta = vec![0.0; self.len];
        for i in 0..self.l {
            let o = self.offset[i];
            if self.in_b[i] {
                let row: Vec<f64> = v.row(i).iter().copied().collect();
                theta[o] = row.iter().map(|x| x * x).sum::<f64>().sqrt().min(1.0);
                for j in 0..self.m {
                    let tail = if j + 1 == self.m {
                        row[self.m]
                    } else {
                        row[j + 1..].iter().map(|x| x * x).sum::<f64>().sqrt()
                    };
                    theta[o + 1 + j] = tail.atan2(row[j]);
                }
            } else {
                theta[o] = v[(i, 0)].clamp(-1.0, 1.0);
            }
        }
        theta
    }

    fn clamp(&self, theta: &mut [f64]) {
        for i in 0..self.l {
            let o = self.offset[i];
            if self.in_b[i] {
                theta[o] = theta[o].clamp(0.0, 1.0);
            } else {
                theta[o] = theta[o].clamp(-1.0, 1.0);
            }
        }
    }

    /// Search directions: joint moves of each parameter slot across the
    /// cooperating rows, a joint move of the other rows, then single coordinates.
    fn directions(&self) -> Vec<Vec<f64>> {
        let mut dirs = Vec::new();
        let coop: Vec<usize> = (0..self.l).filter(|&i| self.in_b[i]).collect();
        let rest: Vec<usize> = (0..self.l).filter(|&i| !self.in_b[i]).collect();
        if coop.len() > 1 {
            for slot in 0..=self.m {
                let mut d = vec![0.0; self.len];
                for &i in &coop {
                    d[self.offset[i] + slot] = 1.0;
                }
                dirs.push(d);
            }
        }
        if rest.len() > 1 {
            let mut d = vec![0.0; self.len];
            for &i in &rest {
                d[self.offset[i]] = 1.0;
            }
            dirs.push(d);
        }
        for k in 0..self.len {
            let mut d = vec![0.0; self.len];
            d[k] = 1.0;
            dirs.push(d);
        }
        dirs
    }
}

const INITIAL_STEP: f64 = 0.25;
const MIN_STEP: f64 = 1e-10;

/// Pattern-search ascent. Accepts strict improvements only, halving the step
/// after a sweep without progress.
fn ascend<F: Fn(&[f64]) -> f64>(
    theta: &mut Vec<f64>,
    value: &mut f64,
    dirs: &[Vec<f64>],
    sweeps: usize,
    clamp: impl Fn(&mut [f64]),
    objective: F,
) {
    let mut step = INITIAL_STEP;
    for _ in 0..sweeps {
        let mut improved = false;
        for d in dirs {
            for sign in [1.0, -1.0] {
                let mut trial: Vec<f64> = theta.iter().zip(d).map(|(t, di)| t + sign * step * di).collect();
                clamp(&mut trial);
                let f = objective(&trial);
                if f > *value {
                    *theta = trial;
                    *value = f;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < MIN_STEP {
                break;
            }
        }
    }
}

fn split_grid(points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Candidate shapes for `v_0`: all ones, and for each receiver the amplitudes
/// that align `h_m ∘ v_0` with `a_m` (when every needed gain is nonzero).
fn v0_shapes(h: &DMatrix<f64>, a: &CoefficientMatrix) -> Vec<Vec<f64>> {
    let l = h.nrows();
    let mut shapes = vec![vec![1.0; l]];
    for m in 0..h.ncols() {
        let am = a.column(m);
        if (0..l).any(|i| am[i] != 0 && h[(i, m)] == 0.0) {
            continue;
        }
        let raw: Vec<f64> = (0..l)
            .map(|i| if am[i] == 0 { 0.0 } else { am[i] as f64 / h[(i, m)] })
            .collect();
        let peak = raw.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if peak > 0.0 {
            let s: Vec<f64> = raw.iter().map(|x| x / peak).collect();
            if !shapes.contains(&s) {
                shapes.push(s);
            }
        }
    }
    shapes
}

fn start_matrix(ch: &ChannelPair, b: &[usize], shape: &[f64], split: f64) -> DMatrix<f64> {
    let (l, m_count) = ch.h.shape();
    let mut v = DMatrix::zeros(l, m_count + 1);
    for i in 0..l {
        v[(i, 0)] = if b.contains(&i) { (1.0 - split).sqrt() * shape[i] } else { shape[i] };
    }
    if b.is_empty() {
        return v;
    }
    let spare = |i: usize, v: &DMatrix<f64>| (1.0 - v[(i, 0)] * v[(i, 0)]).max(0.0);
    if m_count == 1 {
        for &i in b {
            let sign = if ch.h[(i, 0)] < 0.0 { -1.0 } else { 1.0 };
            v[(i, 1)] = sign * spare(i, &v).sqrt();
        }
        return v;
    }
    let dirs: Vec<Vec<f64>> = (0..m_count)
        .map(|m| {
            zero_forcing_vector(&ch.h, m, b).unwrap_or_else(|_| {
                let mut u: Vec<f64> = (0..l).map(|i| if b.contains(&i) { ch.h[(i, m)] } else { 0.0 }).collect();
                let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.0 {
                    u.iter_mut().for_each(|x| *x /= n);
                }
                u
            })
        })
        .collect();
    let mut scale = f64::INFINITY;
    for &i in b {
        let used: f64 = dirs.iter().map(|u| u[i] * u[i]).sum();
        if used > 0.0 {
            scale = scale.min((spare(i, &v) / used).sqrt());
        }
    }
    if scale.is_finite() {
        for (m, u) in dirs.iter().enumerate() {
            for &i in b {
                v[(i, m + 1)] = scale * u[i];
            }
        }
    }
    v
}

/// Best steering for a fixed cooperating set `b` (no fallback to `B = ∅`).
fn optimize_fixed_subset(
    ch: &ChannelPair,
    p: f64,
    a: &CoefficientMatrix,
    b: &[usize],
    budget: &SearchBudget,
) -> Result<OptimizationResult> {
    let layout = Layout::new(ch.num_tx(), ch.num_rx(), b);
    let objective = |theta: &[f64]| -> f64 {
        SteeringConfig::new(b.to_vec(), layout.to_matrix(theta))
            .and_then(|s| rate_coop(ch, p, a, &s))
            .map_or(f64::NEG_INFINITY, |br| br.overall)
    };
    let splits = if b.is_empty() { vec![0.0] } else { split_grid(budget.grid_points) };
    let dirs = layout.directions();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for shape in v0_shapes(&ch.h, a) {
        for &split in &splits {
            let mut theta = layout.theta_of(&start_matrix(ch, b, &shape, split));
            let mut value = objective(&theta);
            ascend(&mut theta, &mut value, &dirs, budget.refine_iters, |t| layout.clamp(t), objective);
            if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
                best = Some((value, theta));
            }
        }
    }
    let (_, theta) = best.expect("at least one start");
    let v = SteeringConfig::new(b.to_vec(), layout.to_matrix(&theta))?;
    let breakdown = rate_coop(ch, p, a, &v)?;
    Ok(OptimizationResult { best_rate: breakdown.overall, a: a.clone(), b: v.subset().to_vec(), v, breakdown })
}

fn better(candidate: &OptimizationResult, incumbent: &Option<OptimizationResult>) -> bool {
    incumbent.as_ref().is_none_or(|r| candidate.best_rate > r.best_rate)
}

/// Optimises `V` for cooperating set `b`, also trying the non-cooperative
/// fallback `B = ∅`, and returns whichever is better.
pub fn optimize_steering(
    ch: &ChannelPair,
    p: f64,
    a: &CoefficientMatrix,
    b: &[usize],
    budget: &SearchBudget,
) -> Result<OptimizationResult> {
    budget.validate()?;
    let mut best = None;
    let mut sets = vec![b.to_vec()];
    if !b.is_empty() {
        sets.push(Vec::new());
    }
    for set in sets {
        let r = optimize_fixed_subset(ch, p, a, &set, budget)?;
        if better(&r, &best) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Coefficient matrices searched for a channel under the given options.
pub fn candidate_coefficients(ch: &ChannelPair, p: f64, budget: &SearchBudget, options: &SearchOptions) -> Vec<CoefficientMatrix> {
    match &options.coefficients {
        Some(list) => list.clone(),
        None => prune_coefficients(
            enumerate_coefficients(ch.num_tx(), ch.num_rx(), budget.coeff_bound, options.strict),
            &ch.h,
            p,
        ),
    }
}

/// Outer maximisation over coefficients, cooperating sets and steering.
pub fn best_cooperative_rate_with(
    ch: &ChannelPair,
    p: f64,
    budget: &SearchBudget,
    options: &SearchOptions,
) -> Result<OptimizationResult> {
    budget.validate()?;
    let coeffs = candidate_coefficients(ch, p, budget, options);
    if coeffs.is_empty() {
        return Err(Error::Infeasible("no admissible coefficient matrix".into()));
    }
    let subsets = options.subsets.subsets(ch.num_tx());
    let per_a: Vec<Result<Option<OptimizationResult>>> = coeffs
        .par_iter()
        .map(|a| {
            let mut best = None;
            for b in &subsets {
                let r = optimize_fixed_subset(ch, p, a, b, budget)?;
                if better(&r, &best) {
                    best = Some(r);
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = None;
    for r in per_a {
        if let Some(r) = r? {
            if better(&r, &best) {
                best = Some(r);
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no cooperating set to search".into()))
}

/// [`best_cooperative_rate_with`] using the default options.
pub fn best_cooperative_rate(ch: &ChannelPair, p: f64, budget: &SearchBudget) -> Result<OptimizationResult> {
    best_cooperative_rate_with(ch, p, budget, &SearchOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForcingResult {
    pub rate: f64,
    pub a: CoefficientMatrix,
    pub v: SteeringConfig,
}

/// Optimises `v_0` for the zero-forcing rate with a fixed `A`.
pub fn optimize_zero_forcing(
    ch: &ChannelPair,
    p: f64,
    a: &CoefficientMatrix,
    budget: &SearchBudget,
) -> Result<ZeroForcingResult> {
    budget.validate()?;
    let l = ch.num_tx();
    // Surface infeasibility up front rather than as a failed objective.
    rate_zf(ch, p, a, &vec![0.0; l])?;
    let objective = |theta: &[f64]| rate_zf(ch, p, a, theta).map_or(f64::NEG_INFINITY, |z| z.rate);
    let mut dirs = Vec::new();
    if l > 1 {
        dirs.push(vec![1.0; l]);
    }
    for k in 0..l {
        let mut d = vec![0.0; l];
        d[k] = 1.0;
        dirs.push(d);
    }
    let clamp = |t: &mut [f64]| t.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for shape in v0_shapes(&ch.h, a) {
        for split in split_grid(budget.grid_points) {
            let mut theta: Vec<f64> = shape.iter().map(|s| (1.0 - split).sqrt() * s).collect();
            let mut value = objective(&theta);
            ascend(&mut theta, &mut value, &dirs, budget.refine_iters, clamp, objective);
            if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
                best = Some((value, theta));
            }
        }
    }
    let (_, theta) = best.expect("at least one start");
    let zf = rate_zf(ch, p, a, &theta)?;
    Ok(ZeroForcingResult { rate: zf.rate, a: a.clone(), v: zf.steering })
}

/// Best zero-forcing rate over enumerated coefficient matrices.
pub fn best_zero_forcing_rate(ch: &ChannelPair, p: f64, budget: &SearchBudget, strict: bool) -> Result<ZeroForcingResult> {
    let coeffs = prune_coefficients(
        enumerate_coefficients(ch.num_tx(), ch.num_rx(), budget.coeff_bound, strict),
        &ch.h,
        p,
    );
    let results: Vec<Result<ZeroForcingResult>> =
        coeffs.par_iter().map(|a| optimize_zero_forcing(ch, p, a, budget)).collect();
    let mut best: Option<ZeroForcingResult> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.rate > b.rate) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no admissible coefficient matrix".into()))
}
