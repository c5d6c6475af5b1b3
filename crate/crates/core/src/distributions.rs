//! Finite-support laws with exact expectations, plus seeded sampling.
//!
//! Every exact identity in this crate is checked against
//! [`DiscreteDistribution::moment`], which sums over the atoms. Continuous
//! laws exist only so the Monte Carlo harness can draw from them; asking one
//! for an exact expectation is an error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total probability mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    label: String,
}

impl DiscreteDistribution {
    /// Builds a law from `(value, probability)` pairs.
    ///
    /// Probabilities must lie in `(0, 1]` and sum to one within
    /// [`MASS_TOLERANCE`]; values must be finite and distinct. Nothing is
    /// renormalized.
    pub fn new(atoms: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("distribution needs at least one atom"));
        }
        for &(v, p) in &atoms {
            if !v.is_finite() {
                return Err(Error::domain(format!("atom value {v} is not finite")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::domain(format!(
                    "atom probability {p} outside (0, 1]"
                )));
            }
        }
        let mut sorted: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("atom values must be distinct"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!(
                "probabilities sum to {total}, not 1 (tolerance {MASS_TOLERANCE})"
            )));
        }
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Ok(DiscreteDistribution {
            atoms,
            cumulative,
            label: label.into(),
        })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(vec![(value, 1.0)], format!("point mass at {value}"))
    }

    /// Equal weights on the given values.
    pub fn uniform_on(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("distribution needs at least one atom"));
        }
        let p = 1.0 / values.len() as f64;
        let atoms: Vec<_> = values.iter().map(|&v| (v, p)).collect();
        // 1/k summed k times can miss 1 by a few ulps; well inside tolerance
        Self::new(atoms, format!("uniform on {values:?}"))
    }

    /// Symmetric +-1 law.
    pub fn rademacher() -> Self {
        Self::new(vec![(-1.0, 0.5), (1.0, 0.5)], "rademacher").expect("valid law")
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("bernoulli p = {p} outside (0, 1)")));
        }
        Self::new(vec![(0.0, 1.0 - p), (1.0, p)], format!("bernoulli({p})"))
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Index of the atom with exactly this value.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.atoms.iter().position(|a| a.0 == value)
    }

    /// Exact expectation `sum_i p_i f(v_i)`.
    pub fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * f(v)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.moment(|x| (x - mu) * (x - mu))
    }

    /// One draw by inverse-CDF lookup.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[i.min(self.atoms.len() - 1)].0
    }
}

/// Parameter of the two-point law with a rare, large negative atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NovakParams {
    pub p: f64,
}

/// The standardized binary law: `sqrt(p/(1-p))` with probability `1-p` and
/// `-sqrt((1-p)/p)` with probability `p`.
///
/// Mean zero and unit variance for every `p`; the third absolute moment
/// `p^{3/2}(1-p)^{-1/2} + (1-p)^{3/2}p^{-1/2}` blows up as `p -> 0`.
pub fn novak_distribution(params: NovakParams) -> Result<DiscreteDistribution> {
    let p = params.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("novak p = {p} outside (0, 1)")));
    }
    let hi = (p / (1.0 - p)).sqrt();
    let lo = -((1.0 - p) / p).sqrt();
    if p == 0.5 {
        return DiscreteDistribution::new(vec![(1.0, 0.5), (-1.0, 0.5)], "novak(0.5)");
    }
    DiscreteDistribution::new(vec![(hi, 1.0 - p), (lo, p)], format!("novak({p})"))
}

/// Closed-form `E|X|^3` of the Novak law.
pub fn novak_third_abs_moment(p: f64) -> f64 {
    p.powf(1.5) * (1.0 - p).powf(-0.5) + (1.0 - p).powf(1.5) * p.powf(-0.5)
}

/// A law the sampler can draw from. Only `Discrete` supports exact moments.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Discrete(DiscreteDistribution),
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Law {
    pub fn as_discrete(&self) -> Result<&DiscreteDistribution> {
        match self {
            Law::Discrete(d) => Ok(d),
            other => Err(Error::NotFinite(format!(
                "{} has no finite support; exact expectations need a discrete law",
                other.label()
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Law::Discrete(d) => d.label().to_string(),
            Law::Uniform { low, high } => format!("uniform({low}, {high})"),
            Law::Normal { mean, sd } => format!("normal({mean}, {sd})"),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Law::Discrete(d) => d.draw(rng),
            Law::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
            Law::Normal { mean, sd } => {
                // Box-Muller; one variate per call keeps streams position-free
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Law::Discrete(_) => Ok(()),
            Law::Uniform { low, high } if low < high && low.is_finite() && high.is_finite() => {
                Ok(())
            }
            Law::Normal { mean, sd } if sd > 0.0 && mean.is_finite() && sd.is_finite() => Ok(()),
            _ => Err(Error::domain(format!("invalid law {}", self.label()))),
        }
    }
}

impl From<DiscreteDistribution> for Law {
    fn from(d: DiscreteDistribution) -> Self {
        Law::Discrete(d)
    }
}

/// JSON literal for a law: `{"atoms": [[v, p], ...]}`, `{"novak": {"p": 0.01}}`,
/// `{"uniform": {"low": 0, "high": 1}}` or `{"normal": {"mean": 0, "sd": 1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawSpec {
    Atoms(Vec<(f64, f64)>),
    Novak(NovakParams),
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
}

impl LawSpec {
    pub fn build(&self) -> Result<Law> {
        let law = match self {
            LawSpec::Atoms(a) => Law::Discrete(DiscreteDistribution::new(a.clone(), "atoms")?),
            LawSpec::Novak(p) => Law::Discrete(novak_distribution(*p)?),
            LawSpec::Uniform { low, high } => Law::Uniform {
                low: *low,
                high: *high,
            },
            LawSpec::Normal { mean, sd } => Law::Normal {
                mean: *mean,
                sd: *sd,
            },
        };
        law.validate()?;
        Ok(law)
    }

    pub fn parse(json: &str) -> Result<Law> {
        let spec: LawSpec = serde_json::from_str(json)?;
        spec.build()
    }
}

/// The random stream for one replicate.
///
/// Depends only on `(seed, stream)`, so any partition of replicates over
/// workers sees the same numbers.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Replicates-by-`n` matrix of i.i.d. draws, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub n: usize,
    pub replicates: usize,
}

impl SampleBatch {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }
}

/// Draws `replicates` independent samples of size `n`; row `r` comes from
/// [`replicate_rng`]`(seed, r)`.
pub fn sample(law: &Law, n: usize, replicates: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 || replicates == 0 {
        return Err(Error::domain("sample needs n >= 1 and replicates >= 1"));
    }
    law.validate()?;
    let mut values = vec![0.0; n * replicates];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(r, row)| fill_row(law, &mut replicate_rng(seed, r as u64), row));
    Ok(SampleBatch {
        values,
        seed,
        n,
        replicates,
    })
}

pub(crate) fn fill_row<R: Rng + ?Sized>(law: &Law, rng: &mut R, row: &mut [f64]) {
    for x in row.iter_mut() {
        *x = law.draw(rng);
    }
}
