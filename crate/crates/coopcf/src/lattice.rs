//! Exact Construction-A nested lattice codebooks.
//!
//! The coding lattice is `Λ_c = β(p⁻¹·F·F_p^k + Z^n)` and the shaping lattice is
//! the hypercube `Λ_s = βZ^n`. Codewords are the points of `Λ_c` inside the
//! Voronoi cell of `Λ_s`, which we take to be the half-open cube
//! `(-β/2, β/2]^n`. Splitting the generator `F = [F_r | F_v]` after the first
//! `k_r` columns gives the resolution lattice `Λ_r` and vestigial lattice `Λ_v`.
//!
//! Every lattice point is held as an integer vector `num` standing for the
//! real point `β·num/p`, so the group identities are checked with equality.
//! The scale `β` only enters when a point is embedded into real space.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shaping scale giving the shaping lattice unit second moment.
pub fn unit_power_scale() -> f64 {
    12f64.sqrt()
}

/// A message `w ∈ F_p^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldMessage(pub Vec<u32>);

impl FieldMessage {
    pub fn zero(k: usize) -> Self {
        FieldMessage(vec![0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Uniform random message.
    pub fn random<R: Rng + ?Sized>(k: usize, p: u32, rng: &mut R) -> Self {
        FieldMessage((0..k).map(|_| rng.random_range(0..p)).collect())
    }

    /// Elementwise sum over `F_p`.
    pub fn add(&self, other: &Self, p: u32) -> Self {
        FieldMessage(self.0.iter().zip(&other.0).map(|(a, b)| (a + b) % p).collect())
    }
}

/// All messages of length `k` over `F_p`, in lexicographic order.
pub fn all_messages(k: usize, p: u32) -> impl Iterator<Item = FieldMessage> {
    let total = (p as u64).pow(k as u32);
    (0..total).map(move |mut idx| {
        let mut w = vec![0u32; k];
        for slot in w.iter_mut().rev() {
            *slot = (idx % p as u64) as u32;
            idx /= p as u64;
        }
        FieldMessage(w)
    })
}

/// `⊕_l a_l ⊙ w_l` over `F_p`.
pub fn field_combine(messages: &[FieldMessage], coeffs: &[i64], p: u32) -> Result<FieldMessage> {
    if messages.len() != coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} messages but {} coefficients",
            messages.len(),
            coeffs.len()
        )));
    }
    let k = messages.first().map_or(0, |m| m.len());
    if messages.iter().any(|m| m.len() != k) {
        return Err(Error::Dimension("messages differ in length".into()));
    }
    let p64 = p as i64;
    let mut out = vec![0i64; k];
    for (m, &a) in messages.iter().zip(coeffs) {
        let a = a.rem_euclid(p64);
        for (o, &w) in out.iter_mut().zip(&m.0) {
            *o = (*o + a * w as i64) % p64;
        }
    }
    Ok(FieldMessage(out.into_iter().map(|x| x as u32).collect()))
}

/// Centred residue of `x` modulo `m`, in `(-m/2, m/2]`.
fn centred_mod(x: i64, m: i64) -> i64 {
    let r = x.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

/// Reduces a rational vector `num/den` (unscaled, `β = 1`) modulo `Z^n` into
/// `(-1/2, 1/2]^n`. Returns the new numerators over the same denominator.
pub fn mod_shaping_rational(num: &[i64], den: i64) -> Vec<i64> {
    num.iter().map(|&x| centred_mod(x, den)).collect()
}

/// Reduces a real vector modulo `βZ^n` into `(-β/2, β/2]^n`.
pub fn mod_shaping(x: &[f64], beta: f64) -> Vec<f64> {
    x.iter().map(|&v| v - beta * (v / beta - 0.5).ceil()).collect()
}

/// A point of `Λ_c`, stored as `β·num/p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub num: Vec<i64>,
    pub p: u32,
}

impl LatticePoint {
    pub fn zero(n: usize, p: u32) -> Self {
        LatticePoint { num: vec![0; n], p }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        LatticePoint {
            num: self.num.iter().zip(&other.num).map(|(a, b)| a + b).collect(),
            p: self.p,
        }
    }

    /// `[self] mod Λ_s`.
    pub fn reduce(&self) -> Self {
        LatticePoint { num: mod_shaping_rational(&self.num, self.p as i64), p: self.p }
    }

    /// Whether the point lies in the Voronoi cell `(-β/2, β/2]^n`.
    pub fn in_voronoi(&self) -> bool {
        let p = self.p as i64;
        self.num.iter().all(|&x| -p < 2 * x && 2 * x <= p)
    }

    pub fn to_real(&self, beta: f64) -> Vec<f64> {
        let s = beta / self.p as f64;
        self.num.iter().map(|&x| x as f64 * s).collect()
    }
}

/// Which nested lattice a quantizer targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sublattice {
    Coding,
    Resolution,
    Vestigial,
}

/// Serializable description of a codebook. With no explicit generator, `F`
/// is regenerated from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookSpec {
    pub n: usize,
    pub k: usize,
    pub k_r: usize,
    pub p: u32,
    pub seed: u64,
    pub shaping_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<Vec<u32>>>,
}

impl CodebookSpec {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

struct Tables {
    /// Representatives of `Λ/Λ_s` per sublattice, flattened with stride `n`.
    coding: Vec<i64>,
    resolution: Vec<i64>,
    vestigial: Vec<i64>,
    inverse: HashMap<Vec<i64>, FieldMessage>,
}

/// A Construction-A codebook with its resolution/vestigial split.
pub struct Codebook {
    spec: CodebookSpec,
    /// `n × k` generator over `F_p`, row-major.
    f: Vec<Vec<u32>>,
    tables: OnceLock<Tables>,
}

impl std::fmt::Debug for Codebook {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("Codebook").field("spec", &self.spec).field("f", &self.f).finish()
    }
}

impl Clone for Codebook {
    fn clone(&self) -> Self {
        Codebook { spec: self.spec.clone(), f: self.f.clone(), tables: OnceLock::new() }
    }
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Rank of a matrix over `F_p` by Gaussian elimination.
pub fn rank_mod_p(rows: &[Vec<u32>], p: u32) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| (x % p) as u64).collect()).collect();
    let p = p as u64;
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = pow_mod(m[rank][col], p - 2, p);
        for x in &mut m[rank][col..] {
            *x = *x * inv % p;
        }
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let factor = row[col];
                for (x, &y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x = (*x + p * p - factor * y) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

impl Codebook {
    fn check_dims(n: usize, k: usize, k_r: usize, p: u32, beta: f64) -> Result<()> {
        if !is_prime(p) {
            return Err(Error::Parameter(format!("modulus {p} is not prime")));
        }
        if n == 0 || k == 0 || k > n || k_r > k {
            return Err(Error::Parameter(format!("need 0 <= k_r <= k <= n, n >= 1; got n={n}, k={k}, k_r={k_r}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("shaping scale {beta} must be positive")));
        }
        Ok(())
    }

    /// Draws `F` uniformly from the seed, re-drawing with the next seed until
    /// it has full column rank.
    pub fn build(n: usize, k: usize, k_r: usize, p: u32, shaping_scale: f64, seed: u64) -> Result<Self> {
        Self::check_dims(n, k, k_r, p, shaping_scale)?;
        let mut s = seed;
        let f = loop {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let f: Vec<Vec<u32>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(0..p)).collect()).collect();
            if rank_mod_p(&f, p) == k {
                break f;
            }
            s = s.wrapping_add(1);
        };
        Ok(Codebook {
            spec: CodebookSpec { n, k, k_r, p, seed, shaping_scale, generator: None },
            f,
            tables: OnceLock::new(),
        })
    }

    /// Codebook with an explicit generator (`n` rows of `k` entries).
    pub fn with_generator(k_r: usize, p: u32, shaping_scale: f64, f: Vec<Vec<u32>>) -> Result<Self> {
        let n = f.len();
        let k = f.first().map_or(0, |r| r.len());
        Self::check_dims(n, k, k_r, p, shaping_scale)?;
        if f.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("generator rows differ in length".into()));
        }
        if f.iter().flatten().any(|&x| x >= p) {
            return Err(Error::Parameter("generator entries must lie in 0..p".into()));
        }
        if rank_mod_p(&f, p) < k {
            return Err(Error::Parameter("generator is rank deficient over F_p".into()));
        }
        Ok(Codebook {
            spec: CodebookSpec { n, k, k_r, p, seed: 0, shaping_scale, generator: Some(f.clone()) },
            f,
            tables: OnceLock::new(),
        })
    }

    pub fn from_spec(spec: &CodebookSpec) -> Result<Self> {
        let cb = match &spec.generator {
            Some(f) => {
                let mut cb = Self::with_generator(spec.k_r, spec.p, spec.shaping_scale, f.clone())?;
                cb.spec.seed = spec.seed;
                cb
            }
            None => Self::build(spec.n, spec.k, spec.k_r, spec.p, spec.shaping_scale, spec.seed)?,
        };
        if cb.spec.n != spec.n || cb.spec.k != spec.k {
            return Err(Error::Config("generator shape disagrees with n, k".into()));
        }
        Ok(cb)
    }

    pub fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn k_r(&self) -> usize {
        self.spec.k_r
    }

    pub fn p(&self) -> u32 {
        self.spec.p
    }

    pub fn beta(&self) -> f64 {
        self.spec.shaping_scale
    }

    pub fn generator(&self) -> &[Vec<u32>] {
        &self.f
    }

    /// Second moment per dimension of the shaping cell, `β²/12`.
    pub fn second_moment(&self) -> f64 {
        self.beta() * self.beta() / 12.0
    }

    /// Code rate `(k/n)·log2 p` in bits per real dimension.
    pub fn rate(&self) -> f64 {
        self.spec.k as f64 * (self.spec.p as f64).log2() / self.spec.n as f64
    }

    pub fn rate_resolution(&self) -> f64 {
        self.spec.k_r as f64 * (self.spec.p as f64).log2() / self.spec.n as f64
    }

    pub fn rate_vestigial(&self) -> f64 {
        self.rate() - self.rate_resolution()
    }

    fn check_message(&self, w: &FieldMessage) -> Result<()> {
        if w.len() != self.spec.k {
            return Err(Error::Dimension(format!("message length {} != k = {}", w.len(), self.spec.k)));
        }
        if w.0.iter().any(|&x| x >= self.spec.p) {
            return Err(Error::Parameter("message entry outside F_p".into()));
        }
        Ok(())
    }

    fn encode_columns(&self, w: &FieldMessage, cols: std::ops::Range<usize>) -> LatticePoint {
        let p = self.spec.p as i64;
        let num = self
            .f
            .iter()
            .map(|row| {
                let s: i64 = cols.clone().map(|j| row[j] as i64 * w.0[j] as i64).sum();
                centred_mod(s, p)
            })
            .collect();
        LatticePoint { num, p: self.spec.p }
    }

    /// `φ(w) = [β p⁻¹ F w] mod Λ_s`.
    pub fn phi(&self, w: &FieldMessage) -> Result<LatticePoint> {
        self.check_message(w)?;
        Ok(self.encode_columns(w, 0..self.spec.k))
    }

    /// Resolution component through the first `k_r` columns.
    pub fn phi_r(&self, w: &FieldMessage) -> Result<LatticePoint> {
        self.check_message(w)?;
        Ok(self.encode_columns(w, 0..self.spec.k_r))
    }

    /// Vestigial component through the remaining columns.
    pub fn phi_v(&self, w: &FieldMessage) -> Result<LatticePoint> {
        self.check_message(w)?;
        Ok(self.encode_columns(w, self.spec.k_r..self.spec.k))
    }

    fn tables(&self) -> &Tables {
        self.tables.get_or_init(|| {
            let (k, k_r, p) = (self.spec.k, self.spec.k_r, self.spec.p);
            let mut coding = Vec::new();
            let mut inverse = HashMap::new();
            for w in all_messages(k, p) {
                let pt = self.encode_columns(&w, 0..k);
                coding.extend_from_slice(&pt.num);
                inverse.insert(pt.num, w);
            }
            let sub = |cols: std::ops::Range<usize>| -> Vec<i64> {
                let mut out = Vec::new();
                for u in all_messages(cols.len(), p) {
                    let mut w = vec![0u32; k];
                    w[cols.clone()].copy_from_slice(&u.0);
                    out.extend_from_slice(&self.encode_columns(&FieldMessage(w), cols.clone()).num);
                }
                out
            };
            Tables { coding, resolution: sub(0..k_r), vestigial: sub(k_r..k), inverse }
        })
    }

    fn representatives(&self, which: Sublattice) -> &[i64] {
        let t = self.tables();
        match which {
            Sublattice::Coding => &t.coding,
            Sublattice::Resolution => &t.resolution,
            Sublattice::Vestigial => &t.vestigial,
        }
    }

    /// All codewords, in message order.
    pub fn codewords(&self) -> Vec<LatticePoint> {
        self.representatives(Sublattice::Coding)
            .chunks(self.spec.n)
            .map(|c| LatticePoint { num: c.to_vec(), p: self.spec.p })
            .collect()
    }

    /// `φ⁻¹` by table lookup. The point is reduced first.
    pub fn phi_inv(&self, pt: &LatticePoint) -> Option<FieldMessage> {
        self.tables().inverse.get(&pt.reduce().num).cloned()
    }

    /// Nearest point of the chosen lattice to `y` (real coordinates).
    ///
    /// Each representative of `Λ/Λ_s` is paired with its closest `Λ_s`
    /// translate, found coordinatewise; exact ties go to the lexicographically
    /// smallest point. Returns the point (not reduced) and its distance.
    pub fn quantize(&self, which: Sublattice, y: &[f64]) -> Result<(LatticePoint, f64)> {
        let n = self.spec.n;
        if y.len() != n {
            return Err(Error::Dimension(format!("vector length {} != n = {n}", y.len())));
        }
        let p = self.spec.p as i64;
        let pf = p as f64;
        let u: Vec<f64> = y.iter().map(|v| v / self.beta()).collect();
        let mut best: Option<(f64, Vec<i64>)> = None;
        let mut cand = vec![0i64; n];
        for rep in self.representatives(which).chunks(n) {
            let mut d2 = 0.0;
            for i in 0..n {
                let c = rep[i] as f64 / pf;
                let z = (u[i] - c - 0.5).ceil();
                cand[i] = rep[i] + p * z as i64;
                let e = u[i] - cand[i] as f64 / pf;
                d2 += e * e;
            }
            let better = match &best {
                None => true,
                Some((bd, bp)) => d2 < *bd || (d2 == *bd && cand < *bp),
            };
            if better {
                best = Some((d2, cand.clone()));
            }
        }
        let (d2, num) = best.expect("representative table is never empty");
        Ok((LatticePoint { num, p: self.spec.p }, d2.sqrt() * self.beta()))
    }

    /// Minimum distance of the chosen lattice (including the shaping lattice).
    pub fn min_distance(&self, which: Sublattice) -> f64 {
        let n = self.spec.n;
        let p = self.spec.p as f64;
        let mut best = 1.0f64;
        for rep in self.representatives(which).chunks(n) {
            if rep.iter().all(|&x| x == 0) {
                continue;
            }
            let d = rep.iter().map(|&x| (x as f64 / p).powi(2)).sum::<f64>().sqrt();
            best = best.min(d);
        }
        best * self.beta()
    }

    /// Uniform dither over the shaping cell, `[-β/2, β/2)^n`.
    pub fn dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.spec.n).map(|_| self.beta() * (rng.random::<f64>() - 0.5)).collect()
    }

    /// Seeded dither draw.
    pub fn dither_draw(&self, seed: u64) -> Vec<f64> {
        self.dither(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Real transmitted codeword `[φ(w)·β/p + t] mod Λ_s`.
    pub fn dithered(&self, pt: &LatticePoint, dither: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = pt.to_real(self.beta()).iter().zip(dither).map(|(a, b)| a + b).collect();
        mod_shaping(&x, self.beta())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cb(k_r: usize, p: u32, f: Vec<Vec<u32>>) -> Codebook {
        Codebook::with_generator(k_r, p, 1.0, f).unwrap()
    }

    #[test]
    fn two_point_codebook() {
        let c = cb(0, 2, vec![vec![1], vec![1]]);
        let mut pts: Vec<Vec<f64>> = c.codewords().iter().map(|x| x.to_real(1.0)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(c.phi(&FieldMessage(vec![1])).unwrap().to_real(1.0), vec![0.5, 0.5]);
        assert_eq!(c.phi(&FieldMessage(vec![0])).unwrap(), LatticePoint::zero(2, 2));
    }

    #[test]
    fn ternary_line_codebook() {
        let c = cb(0, 3, vec![vec![1]]);
        let mut pts: Vec<f64> = c.codewords().iter().map(|x| x.to_real(1.0)[0]).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // brute force: {0, 1/3, 2/3} folded into the cell
        let mut oracle: Vec<f64> = (0..3).map(|j| {
            let v = j as f64 / 3.0;
            if v > 0.5 { v - 1.0 } else { v }
        }).collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in pts.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(pts.iter().all(|x| (-0.5..0.5).contains(x)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Codebook::with_generator(0, 3, 1.0, vec![vec![0], vec![0]]).is_err());
        assert!(matches!(Codebook::build(4, 2, 1, 4, 1.0, 0), Err(Error::Parameter(_))));
        assert!(Codebook::build(2, 3, 1, 3, 1.0, 0).is_err());
        assert!(Codebook::build(3, 2, 3, 3, 1.0, 0).is_err());
    }

    #[test]
    fn built_generator_has_full_rank() {
        for seed in 0..20 {
            let c = Codebook::build(3, 3, 1, 2, 1.0, seed).unwrap();
            assert_eq!(rank_mod_p(c.generator(), 2), 3);
            assert_eq!(c.codewords().len(), 8);
        }
    }

    #[test]
    fn rank_over_finite_field() {
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 4]], 5), 1);
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 4]], 3), 1);
        assert_eq!(rank_mod_p(&[vec![1, 1], vec![1, 2]], 2), 2);
        assert_eq!(rank_mod_p(&[vec![1, 1], vec![1, 3]], 2), 1);
    }

    #[test]
    fn real_mod_examples() {
        assert_eq!(mod_shaping(&[0.75], 1.0), vec![-0.25]);
        assert_eq!(mod_shaping(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(mod_shaping(&[2.0, -3.0], 1.0), vec![0.0, 0.0]);
        let b = unit_power_scale();
        let x = mod_shaping(&[5.0, -7.1, 0.5 * b], b);
        assert!(x.iter().all(|v| *v > -b / 2.0 && *v <= b / 2.0));
    }

    #[test]
    fn rational_mod_associativity() {
        let den = 7;
        for a in -20..20 {
            for b in -20..20 {
                let lhs = mod_shaping_rational(&[mod_shaping_rational(&[a], den)[0] + b], den);
                assert_eq!(lhs, mod_shaping_rational(&[a + b], den));
            }
        }
    }

    #[test]
    fn extreme_splits() {
        let c = Codebook::build(3, 2, 0, 3, 1.0, 1).unwrap();
        for w in all_messages(2, 3) {
            assert_eq!(c.phi_r(&w).unwrap(), LatticePoint::zero(3, 3));
        }
        let c = Codebook::build(3, 2, 2, 3, 1.0, 1).unwrap();
        for w in all_messages(2, 3) {
            assert_eq!(c.phi_v(&w).unwrap(), LatticePoint::zero(3, 3));
        }
    }

    #[test]
    fn phi_rejects_wrong_length() {
        let c = Codebook::build(3, 2, 1, 3, 1.0, 1).unwrap();
        assert!(matches!(c.phi(&FieldMessage(vec![1])), Err(Error::Dimension(_))));
    }

    #[test]
    fn inverse_roundtrip_and_bijectivity() {
        let c = Codebook::build(4, 3, 1, 3, 1.0, 9).unwrap();
        let pts = c.codewords();
        let distinct: std::collections::HashSet<_> = pts.iter().collect();
        assert_eq!(distinct.len(), 27);
        for w in all_messages(3, 3) {
            let pt = c.phi(&w).unwrap();
            assert!(pt.in_voronoi());
            assert_eq!(c.phi_inv(&pt), Some(w.clone()));
            let split = c.phi_r(&w).unwrap().add(&c.phi_v(&w).unwrap());
            assert_eq!(c.phi_inv(&split), Some(w));
        }
    }

    #[test]
    fn field_combine_examples() {
        let w = [FieldMessage(vec![1, 2]), FieldMessage(vec![2, 2])];
        assert_eq!(field_combine(&w, &[1, 0], 3).unwrap(), w[0]);
        let same = [FieldMessage(vec![1, 0, 1]), FieldMessage(vec![1, 0, 1])];
        assert_eq!(field_combine(&same, &[1, 1], 2).unwrap(), FieldMessage(vec![0, 0, 0]));
        let w = [FieldMessage(vec![1]), FieldMessage(vec![2])];
        assert_eq!(field_combine(&w, &[2, 1], 3).unwrap(), FieldMessage(vec![1]));
        assert_eq!(field_combine(&w, &[-1, 1], 3).unwrap(), FieldMessage(vec![1]));
        assert!(field_combine(&w, &[1], 3).is_err());
    }

    #[test]
    fn quantizer_finds_exact_and_perturbed_points() {
        let c = Codebook::build(3, 2, 1, 5, 1.0, 4).unwrap();
        let dmin = c.min_distance(Sublattice::Coding);
        // oracle minimum distance: enumerate all pairwise differences of codewords over translates
        let pts = c.codewords();
        let mut oracle = 1.0f64;
        for a in &pts {
            for b in &pts {
                if a != b {
                    let diff: Vec<i64> = a.num.iter().zip(&b.num).map(|(x, y)| x - y).collect();
                    let red = mod_shaping_rational(&diff, 5);
                    let d = red.iter().map(|&x| (x as f64 / 5.0).powi(2)).sum::<f64>().sqrt();
                    oracle = oracle.min(d);
                }
            }
        }
        assert!((dmin - oracle).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for pt in &pts {
            let x = pt.to_real(1.0);
            assert_eq!(c.quantize(Sublattice::Coding, &x).unwrap().0, *pt);
            let dir: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + 0.49 * dmin * d / norm).collect();
            assert_eq!(c.quantize(Sublattice::Coding, &y).unwrap().0.reduce(), *pt);
        }
    }

    #[test]
    fn quantizer_respects_translates() {
        let c = cb(0, 3, vec![vec![1]]);
        // 0.9 is closest to the lattice point 1 = translate of 0
        let (q, d) = c.quantize(Sublattice::Coding, &[0.9]).unwrap();
        assert_eq!(q.num, vec![3]);
        assert!((d - 0.1).abs() < 1e-12);
        // tie between 0 and 1/2 at 1/4 resolves to the smaller point
        let half = cb(0, 2, vec![vec![1]]);
        let (q, _) = half.quantize(Sublattice::Coding, &[0.25]).unwrap();
        assert_eq!(q.num, vec![0]);
        let (q, _) = half.quantize(Sublattice::Coding, &[-0.25]).unwrap();
        assert_eq!(q.num, vec![-1]);
    }

    #[test]
    fn empty_resolution_lattice_quantizes_to_shaping() {
        let c = Codebook::build(3, 2, 0, 3, 1.0, 2).unwrap();
        let (q, _) = c.quantize(Sublattice::Resolution, &[0.3, -0.2, 0.1]).unwrap();
        assert_eq!(q, LatticePoint::zero(3, 3));
    }

    #[test]
    fn dither_support_and_variance() {
        let c = Codebook::build(4, 2, 1, 3, 1.0, 0).unwrap();
        assert_eq!(c.dither_draw(5), c.dither_draw(5));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut sum2 = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let t = c.dither(&mut rng);
            assert!(t.iter().all(|v| (-0.5..0.5).contains(v)));
            sum2 += t[0] * t[0];
        }
        let var = sum2 / draws as f64;
        assert!((var / (1.0 / 12.0) - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn spec_roundtrip_through_toml() {
        let c = Codebook::build(4, 2, 1, 5, unit_power_scale(), 17).unwrap();
        let text = c.spec().to_toml().unwrap();
        for key in ["n", "k", "k_r", "p", "seed", "shaping_scale"] {
            assert!(text.contains(&format!("{key} = ")), "{text}");
        }
        let back = Codebook::from_spec(&CodebookSpec::from_toml(&text).unwrap()).unwrap();
        assert_eq!(back.generator(), c.generator());
        let explicit = cb(1, 3, vec![vec![1, 2], vec![0, 1]]);
        let back = Codebook::from_spec(&CodebookSpec::from_toml(&explicit.spec().to_toml().unwrap()).unwrap()).unwrap();
        assert_eq!(back.generator(), explicit.generator());
    }
}
