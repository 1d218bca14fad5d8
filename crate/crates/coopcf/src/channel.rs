//! Channel matrices and the scenario geometries used by the examples.
//!
//! `H` is `L×M`: entry `(l, m)` is the forward gain from transmitter `l` to
//! receiver `m`. `G` is `L×L`: entry `(l', l)` is the gain from transmitter
//! `l'` to transmitter `l`, so column `l` of `G` holds everything transmitter
//! `l` overhears. Gains are real, nonnegative amplitudes.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clamp for inter-transmitter gains of co-located transmitters.
pub const DEFAULT_MAX_GAIN: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl ChannelPair {
    /// Validates shapes, finiteness and the zero diagonal of `G`.
    pub fn new(h: DMatrix<f64>, g: DMatrix<f64>) -> Result<Self> {
        let (l, m) = h.shape();
        if m == 0 || l < m {
            return Err(Error::Dimension(format!("H is {l}x{m}, need L >= M >= 1")));
        }
        if g.shape() != (l, l) {
            return Err(Error::Dimension(format!(
                "G is {}x{}, expected {l}x{l}",
                g.nrows(),
                g.ncols()
            )));
        }
        if h.iter().chain(g.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Parameter("channel gains must be finite".into()));
        }
        if (0..l).any(|i| g[(i, i)] != 0.0) {
            return Err(Error::Parameter("G must have a zero diagonal".into()));
        }
        Ok(Self { h, g })
    }

    /// Single receiver channel from a forward gain vector and a full `G`.
    pub fn single_receiver(h: &[f64], g: DMatrix<f64>) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(h.len(), 1, h), g)
    }

    pub fn num_tx(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_rx(&self) -> usize {
        self.h.ncols()
    }

    /// Forward channel vector `h_m` into receiver `m`.
    pub fn h_col(&self, m: usize) -> Vec<f64> {
        self.h.column(m).iter().copied().collect()
    }

    /// Gain from transmitter `from` to transmitter `to`.
    pub fn g_between(&self, from: usize, to: usize) -> f64 {
        self.g[(from, to)]
    }

    /// Independent Rayleigh draw with `h², g² ~ Exp(1)`, using a caller-owned RNG.
    pub fn rayleigh<R: Rng + ?Sized>(l: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || l < m {
            return Err(Error::Dimension(format!("need L >= M >= 1, got L={l}, M={m}")));
        }
        let mut amp = || -> f64 {
            let e: f64 = rng.sample(Exp1);
            e.sqrt()
        };
        let h = DMatrix::from_fn(l, m, |_, _| amp());
        let mut g = DMatrix::zeros(l, l);
        for j in 0..l {
            for i in 0..l {
                if i != j {
                    g[(i, j)] = amp();
                }
            }
        }
        Ok(Self { h, g })
    }
}

/// Seeded Rayleigh channel draw.
pub fn draw_rayleigh(l: usize, m: usize, seed: u64) -> Result<ChannelPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChannelPair::rayleigh(l, m, &mut rng)
}

/// Transmitters scattered on an arc of a circle centred on the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryScenario {
    pub num_transmitters: usize,
    /// Arc length in radians, in `[0, π]`.
    pub arclength: f64,
    pub pathloss_exponent: f64,
    pub circle_radius: f64,
    /// Amplitude clamp for inter-transmitter gains at vanishing distance.
    pub max_gain: f64,
}

impl GeometryScenario {
    pub fn new(num_transmitters: usize, arclength: f64, pathloss_exponent: f64) -> Result<Self> {
        let s = Self {
            num_transmitters,
            arclength,
            pathloss_exponent,
            circle_radius: 1.0,
            max_gain: DEFAULT_MAX_GAIN,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_transmitters == 0 {
            return Err(Error::Parameter("need at least one transmitter".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.arclength) {
            return Err(Error::Parameter(format!("arclength {} outside [0, pi]", self.arclength)));
        }
        if !(self.pathloss_exponent > 0.0) || !(self.circle_radius > 0.0) || !(self.max_gain > 0.0) {
            return Err(Error::Parameter(
                "path-loss exponent, radius and gain clamp must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the single-receiver channel for transmitters at the given angles on
/// a circle of radius `radius` around the receiver.
pub fn gains_from_angles(angles: &[f64], radius: f64, alpha: f64, max_gain: f64) -> Result<ChannelPair> {
    let l = angles.len();
    let pos: Vec<(f64, f64)> = angles.iter().map(|t| (radius * t.cos(), radius * t.sin())).collect();
    let gain = |d: f64| -> f64 {
        if d == 0.0 {
            max_gain
        } else {
            d.powf(-alpha / 2.0).min(max_gain)
        }
    };
    let h = DMatrix::from_fn(l, 1, |i, _| gain(pos[i].0.hypot(pos[i].1)));
    let g = DMatrix::from_fn(l, l, |i, j| {
        if i == j {
            0.0
        } else {
            gain((pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1))
        }
    });
    ChannelPair::new(h, g)
}

/// Draws transmitter positions uniformly on the arc and returns the resulting channel.
pub fn place_on_arc(scenario: &GeometryScenario, seed: u64) -> Result<ChannelPair> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = (0..scenario.num_transmitters)
        .map(|_| scenario.arclength * rng.random::<f64>())
        .collect();
    gains_from_angles(
        &angles,
        scenario.circle_radius,
        scenario.pathloss_exponent,
        scenario.max_gain,
    )
}

/// Named topologies from the numerical examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Two transmitters, one receiver, unit forward gains, symmetric `g`.
    Example1,
    /// Two transmitters, one receiver, swept `h_21`.
    Example3,
    /// Two transmitters, two receivers, swept `h_21`.
    Example4,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(Preset::Example1),
            "example3" => Ok(Preset::Example3),
            "example4" => Ok(Preset::Example4),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Channel for a named preset. `sweep` is `g` for example 1 and `h_21`
/// (transmitter 2 to receiver 1) for examples 3 and 4.
pub fn preset_scenario(preset: Preset, sweep: f64) -> Result<ChannelPair> {
    let off_diag = |v: f64| DMatrix::from_fn(2, 2, |i, j| if i == j { 0.0 } else { v });
    match preset {
        Preset::Example1 => ChannelPair::single_receiver(&[1.0, 1.0], off_diag(sweep)),
        Preset::Example3 => ChannelPair::single_receiver(&[1.0, sweep], off_diag(1.0)),
        Preset::Example4 => {
            let mut h = DMatrix::from_element(2, 2, 1.0);
            h[(1, 0)] = sweep;
            ChannelPair::new(h, off_diag(1.0))
        }
    }
}
