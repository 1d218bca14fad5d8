//! Parameter sweeps behind the command-line tool.
//!
//! Every runner returns a [`ScenarioReport`]: a numeric table, the invariants
//! it checked, and scalar notes. Sweep points are evaluated in parallel and
//! written in sweep order, so a table depends only on its (scenario, seed,
//! budget) triple, which the CSV header records.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{place_on_arc, preset_scenario, ChannelPair, GeometryScenario, Preset};
use crate::dmt::{self, OutageScheme};
use crate::error::{Error, Result};
use crate::link_sim::{self, RoundConfig};
use crate::rates::{bound_cutset, rate_coop, rate_nc, CoefficientMatrix};
use crate::search::{self, OptimizationResult, SearchBudget, SearchOptions, SubsetFamily};
use crate::{db_to_linear, linear_to_db};

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: String,
    pub sweep_variable: String,
    pub sweep: Vec<f64>,
    pub p_db: Vec<f64>,
    pub budget: SearchBudget,
    pub seed: u64,
    pub trials: usize,
    pub out: Option<PathBuf>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.len() < 2 {
            return Err(Error::Config(format!("sweep over {} needs at least two points", self.sweep_variable)));
        }
        if self.p_db.is_empty() {
            return Err(Error::Config("no transmit power given".into()));
        }
        self.budget.validate()
    }

    /// First line of every CSV this tool writes.
    pub fn header_comment(&self) -> String {
        format!("# scenario={} seed={} budget={}", self.scenario, self.seed, self.budget)
    }
}

/// `points` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points).map(|i| start + (end - start) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Writes `comment` (if nonempty) and then the table as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: &str) -> Result<()> {
        if !comment.is_empty() {
            writeln!(out, "{comment}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a table written by [`Table::write_csv`], skipping `#` lines.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number '{s}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub table: Table,
    pub checks: Vec<Check>,
    pub notes: BTreeMap<String, f64>,
}

impl ScenarioReport {
    fn new(table: Table) -> Self {
        ScenarioReport { table, checks: Vec::new(), notes: BTreeMap::new() }
    }

    fn check(&mut self, name: &str, passed: bool) {
        if !passed {
            log::warn!("invariant violated: {name}");
        }
        self.checks.push(Check { name: name.to_string(), passed });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Slack allowed when comparing optimised rates against each other.
const RATE_TOL: f64 = 1e-9;

/// Re-evaluates each point with its neighbours' optimal configurations
/// (backward, then forward) and keeps whichever is best.
fn share_neighbour_optima(channels: &[ChannelPair], p: f64, results: &mut [OptimizationResult]) -> Result<()> {
    let reuse = |from: &OptimizationResult, ch: &ChannelPair| -> Result<OptimizationResult> {
        let b = rate_coop(ch, p, &from.a, &from.v)?;
        Ok(OptimizationResult { best_rate: b.overall, a: from.a.clone(), b: from.b.clone(), v: from.v.clone(), breakdown: b })
    };
    for i in (0..results.len().saturating_sub(1)).rev() {
        let c = reuse(&results[i + 1], &channels[i])?;
        if c.best_rate > results[i].best_rate {
            results[i] = c;
        }
    }
    for i in 1..results.len() {
        let c = reuse(&results[i - 1], &channels[i])?;
        if c.best_rate > results[i].best_rate {
            results[i] = c;
        }
    }
    Ok(())
}

/// Two transmitters with unit forward gains and a symmetric inter-transmitter
/// gain `g² (dB)` swept over `g2_db`.
pub fn run_example1(p_db: f64, g2_db: &[f64], budget: &SearchBudget) -> Result<ScenarioReport> {
    let p = db_to_linear(p_db);
    let channels: Vec<ChannelPair> = g2_db
        .iter()
        .map(|&g| preset_scenario(Preset::Example1, db_to_linear(g).sqrt()))
        .collect::<Result<_>>()?;
    // Both coefficients nonzero, as in the non-cooperative baseline: with a
    // zero coefficient one transmitter can switch off and the "function" is a
    // single message.
    let (nc, _) = search::best_rate_nc(&channels[0].h, p, budget.coeff_bound, true)?;
    let options = SearchOptions { strict: true, subsets: SubsetFamily::Symmetric, coefficients: None };
    let mut results: Vec<OptimizationResult> = channels
        .par_iter()
        .map(|ch| search::best_cooperative_rate_with(ch, p, budget, &options))
        .collect::<Result<_>>()?;
    share_neighbour_optima(&channels, p, &mut results)?;
    let mut table = Table::new(&["g2_db", "rate_nc", "rate_coop", "bound_cutset"]);
    for ((g, ch), r) in g2_db.iter().zip(&channels).zip(&results) {
        table.rows.push(vec![*g, nc, r.best_rate, bound_cutset(ch, p)?]);
    }
    let mut report = ScenarioReport::new(table);
    let coop = report.table.column("rate_coop").expect("column exists");
    let bound = report.table.column("bound_cutset").expect("column exists");
    report.check("rate_coop >= rate_nc", coop.iter().all(|&c| c >= nc - RATE_TOL));
    report.check("rate_coop <= bound_cutset", coop.iter().zip(&bound).all(|(c, b)| c <= &(b + RATE_TOL)));
    let monotone = g2_db.windows(2).all(|w| w[0] < w[1]);
    if monotone {
        report.check("rate_coop nondecreasing in g2", coop.windows(2).all(|w| w[1] >= w[0] - RATE_TOL));
    }
    Ok(report)
}

/// Mean rates for three transmitters placed uniformly on an arc, `a = (1,1,1)`.
pub fn run_example2(
    p_db: f64,
    pathloss_exponent: f64,
    arclengths: &[f64],
    trials: usize,
    seed: u64,
    budget: &SearchBudget,
) -> Result<ScenarioReport> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let p = db_to_linear(p_db);
    let a = CoefficientMatrix::vector(&[1, 1, 1])?;
    let options = SearchOptions { strict: true, subsets: SubsetFamily::Paper, coefficients: Some(vec![a.clone()]) };
    let mut table = Table::new(&["arclength", "mean_rate_nc", "mean_rate_coop"]);
    let mut unit_forward = true;
    let mut dominated = true;
    for &arc in arclengths {
        let scenario = GeometryScenario::new(3, arc, pathloss_exponent)?;
        // The same placement seeds at every arclength.
        let per_trial: Vec<(f64, f64, bool)> = (0..trials)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64, bool)> {
                let ch = place_on_arc(&scenario, seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))?;
                let unit = ch.h.iter().all(|x| (x - 1.0).abs() < 1e-12);
                let nc = rate_nc(&ch.h, p, &a)?;
                let coop = search::best_cooperative_rate_with(&ch, p, budget, &options)?.best_rate;
                Ok((nc, coop, unit))
            })
            .collect::<Result<_>>()?;
        let n = trials as f64;
        let nc = per_trial.iter().map(|t| t.0).sum::<f64>() / n;
        let coop = per_trial.iter().map(|t| t.1).sum::<f64>() / n;
        unit_forward &= per_trial.iter().all(|t| t.2);
        dominated &= per_trial.iter().all(|t| t.1 >= t.0 - RATE_TOL);
        table.rows.push(vec![arc, nc, coop]);
    }
    let mut report = ScenarioReport::new(table);
    report.check("forward gains equal 1", unit_forward);
    report.check("rate_coop >= rate_nc per trial", dominated);
    report.notes.insert("trials".into(), trials as f64);
    Ok(report)
}

/// Two transmitters, one receiver, all gains 1 except `h_21`; full search
/// with both coefficients nonzero.
pub fn run_example3(p_db: &[f64], h21: &[f64], budget: &SearchBudget) -> Result<ScenarioReport> {
    let mut table = Table::new(&["h21", "P_db", "rate_nc", "rate_coop"]);
    let options = SearchOptions { strict: true, subsets: SubsetFamily::Paper, coefficients: None };
    let mut dominated = true;
    for &pdb in p_db {
        let p = db_to_linear(pdb);
        let channels: Vec<ChannelPair> =
            h21.iter().map(|&x| preset_scenario(Preset::Example3, x)).collect::<Result<_>>()?;
        let mut results: Vec<OptimizationResult> = channels
            .par_iter()
            .map(|ch| search::best_cooperative_rate_with(ch, p, budget, &options))
            .collect::<Result<_>>()?;
        share_neighbour_optima(&channels, p, &mut results)?;
        for ((x, ch), r) in h21.iter().zip(&channels).zip(&results) {
            let (nc, _) = search::best_rate_nc(&ch.h, p, budget.coeff_bound, true)?;
            dominated &= r.best_rate >= nc - RATE_TOL;
            table.rows.push(vec![*x, pdb, nc, r.best_rate]);
        }
    }
    let mut report = ScenarioReport::new(table);
    report.check("rate_coop >= rate_nc", dominated);
    Ok(report)
}

/// Two transmitters, two receivers, all gains 1 except `h_21`; every
/// transmitter cooperates with zero-forcing resolution beams.
pub fn run_example4(p_db: &[f64], h21: &[f64], budget: &SearchBudget) -> Result<ScenarioReport> {
    let mut table = Table::new(&["h21", "P_db", "rate_nc", "rate_coop"]);
    for &pdb in p_db {
        let p = db_to_linear(pdb);
        let rows: Vec<Vec<f64>> = h21
            .par_iter()
            .map(|&x| -> Result<Vec<f64>> {
                let ch = preset_scenario(Preset::Example4, x)?;
                let (nc, _) = search::best_rate_nc(&ch.h, p, budget.coeff_bound, false)?;
                let coop = match search::best_zero_forcing_rate(&ch, p, budget, false) {
                    Ok(z) => z.rate,
                    // A rank-one channel leaves no zero-forcing directions.
                    Err(Error::Infeasible(_)) => 0.0,
                    Err(e) => return Err(e),
                };
                Ok(vec![x, pdb, nc, coop])
            })
            .collect::<Result<_>>()?;
        table.rows.extend(rows);
    }
    Ok(ScenarioReport::new(table))
}

/// The analytic curves for each `L`, sampled on `points` gains in `[0, 1]`.
pub fn run_dmt_figure(ls: &[usize], points: usize) -> Result<ScenarioReport> {
    let mut table = Table::new(&["L", "r", "d_nc_upper", "d_coop_upper", "d_random", "d_lattice"]);
    let mut below_upper = true;
    let mut monotone = true;
    let mut lattice_dominates_l2 = true;
    for &l in ls {
        let curves = dmt::dmt_curves(l, points)?;
        monotone &= curves.iter().all(|c| c.is_nonincreasing());
        for i in 0..points {
            let r = curves[0].samples[i].0;
            let d: Vec<f64> = curves.iter().map(|c| c.samples[i].1).collect();
            below_upper &= d[2] <= d[1] + 1e-12 && d[3] <= d[1] + 1e-12 && d[0] <= d[1] + 1e-12;
            if l == 2 {
                lattice_dominates_l2 &= d[3] >= d[2] - 1e-12;
            }
            table.rows.push(vec![l as f64, r, d[0], d[1], d[2], d[3]]);
        }
    }
    let mut report = ScenarioReport::new(table);
    report.check("achievable curves below L(1-r)", below_upper);
    report.check("curves nonincreasing", monotone);
    report.check("lattice >= random for L=2", lattice_dominates_l2);
    Ok(report)
}

/// Settings of the link-simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSimSpec {
    /// Inter-transmitter gain `g²` in dB (two transmitters, unit forward gains).
    pub g2_db: f64,
    pub p_db: f64,
    pub n: usize,
    pub p_field: u32,
    /// Codebook rate as a fraction of the optimised cooperative rate.
    pub rate_fraction: f64,
    /// Noise variances to sweep; the rate is sized for the first.
    pub noise_vars: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub budget: SearchBudget,
}

impl Default for LinkSimSpec {
    fn default() -> Self {
        LinkSimSpec {
            g2_db: 20.0,
            p_db: 30.0,
            n: 4,
            p_field: 5,
            rate_fraction: 0.5,
            noise_vars: vec![1.0, 4.0, 16.0],
            trials: 200,
            seed: 0,
            budget: SearchBudget::default(),
        }
    }
}

/// Optimised configuration for the link simulation: steering from the rate
/// search at SNR `P / noise_vars[0]`, codebook sized by `rate_fraction`.
pub fn linksim_config(spec: &LinkSimSpec) -> Result<RoundConfig> {
    let noise = *spec.noise_vars.first().ok_or_else(|| Error::Config("no noise level given".into()))?;
    if !(noise > 0.0) {
        return Err(Error::Config("the reference noise variance must be positive".into()));
    }
    let ch = preset_scenario(Preset::Example1, db_to_linear(spec.g2_db).sqrt())?;
    let p = db_to_linear(spec.p_db);
    let options = SearchOptions { strict: true, subsets: SubsetFamily::Symmetric, coefficients: None };
    let best = search::best_cooperative_rate_with(&ch, p / noise, &spec.budget, &options)?;
    let (k, k_r) = link_sim::split_for_rate(&best.breakdown, spec.rate_fraction, spec.n, spec.p_field)?;
    let cb = link_sim::best_codebook(spec.n, k, k_r, spec.p_field, spec.seed, 16)?;
    Ok(RoundConfig {
        codebook: cb.spec().clone(),
        channel: ch,
        p,
        noise_var: noise,
        a: best.a,
        steering: best.v,
        num_blocks: link_sim::DEFAULT_BLOCKS,
        genie: false,
    })
}

pub fn run_linksim(spec: &LinkSimSpec) -> Result<ScenarioReport> {
    let base = linksim_config(spec)?;
    let mut table = Table::new(&["noise_var", "snr_db", "trials", "round_rate", "block_rate", "transmitter_failures"]);
    let mut rates = Vec::new();
    for &nv in &spec.noise_vars {
        let cfg = RoundConfig { noise_var: nv, ..base.clone() };
        let s = link_sim::run_trials(&cfg, spec.trials, spec.seed)?;
        rates.push(s.block_rate());
        table.rows.push(vec![
            nv,
            linear_to_db(cfg.p / nv),
            s.trials as f64,
            s.round_rate(),
            s.block_rate(),
            s.transmitter_failures as f64,
        ]);
    }
    let noiseless = RoundConfig { noise_var: 0.0, ..base.clone() };
    let mut report = ScenarioReport::new(table);
    let margin = link_sim::noiseless_margin(&noiseless)?;
    report.notes.insert("noiseless_margin".into(), margin);
    report.notes.insert("k".into(), base.codebook.k as f64);
    report.notes.insert("k_r".into(), base.codebook.k_r as f64);
    if margin > 0.0 {
        let s = link_sim::run_trials(&noiseless, spec.trials, spec.seed)?;
        report.notes.insert("noiseless_round_rate".into(), s.round_rate());
        report.check("noiseless rounds all recovered", s.rounds_recovered == s.trials);
    }
    let sorted = spec.noise_vars.windows(2).all(|w| w[0] <= w[1]);
    if sorted {
        report.check("recovery nonincreasing in noise", rates.windows(2).all(|w| w[1] <= w[0]));
    }
    Ok(report)
}

/// Outage of the aligned non-cooperative scheme (closed form and Monte
/// Carlo) or of cooperative random coding (closed form only).
pub fn run_outage(
    l: usize,
    r: f64,
    snr_db: &[f64],
    scheme: OutageScheme,
    samples: usize,
    seed: u64,
) -> Result<ScenarioReport> {
    let mut table = Table::new(&["snr_db", "closed_form", "monte_carlo", "std_error"]);
    let mut agree = true;
    for &s in snr_db {
        let exact = dmt::outage_closed_form(l, r, s, scheme)?;
        let (mc, se) = match scheme {
            OutageScheme::NcAlign if samples > 0 => {
                let est = dmt::estimate_outage_mc(|ch, p| dmt::nc_align_rate(&ch.h_col(0), p, r), l, r, s, samples, seed)?;
                agree &= (est.probability - exact).abs() <= 3.0 * est.std_error.max(1.0 / samples as f64);
                (est.probability, est.std_error)
            }
            _ => (f64::NAN, f64::NAN),
        };
        table.rows.push(vec![s, exact, mc, se]);
    }
    let closed = table.column("closed_form").expect("column exists");
    let curve = dmt::OutageCurve { snr_db: snr_db.to_vec(), outage_prob: closed.clone(), rate_rule: r, fitted_slope: None };
    let mut report = ScenarioReport::new(table);
    report.check("probabilities in [0, 1]", closed.iter().all(|q| (0.0..=1.0).contains(q)));
    report.check("Monte Carlo within 3 standard errors", agree);
    if let Ok(slope) = dmt::fit_diversity_slope(&curve) {
        report.notes.insert("fitted_slope".into(), slope);
    }
    Ok(report)
}

/// Steering used by example 1's symmetric configurations, for callers that
/// want to inspect a single point.
pub fn example1_point(p_db: f64, g2_db: f64, budget: &SearchBudget) -> Result<OptimizationResult> {
    let ch = preset_scenario(Preset::Example1, db_to_linear(g2_db).sqrt())?;
    let options = SearchOptions { strict: true, subsets: SubsetFamily::Symmetric, coefficients: None };
    search::best_cooperative_rate_with(&ch, db_to_linear(p_db), budget, &options)
}
