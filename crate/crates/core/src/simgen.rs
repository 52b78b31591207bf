//! Synthetic scenario generators for the power studies.
//!
//! Two families are provided. In the fixed family, q = 1 and Y is a weighted
//! combination of the first five X dimensions (weights 1, 1/2, ..., 1/5),
//! so exactly five dimension pairs are dependent no matter how large p
//! grows. In the increasing family, the first d dimensions of Y copy (or
//! square) the matching X dimensions and the rest are fresh noise, so the
//! number of dependent pairs scales with d.
//!
//! Generation is deterministic given (scenario, seed): X is filled
//! column-major from one ChaCha8 stream, followed by whatever independent
//! columns the relationship needs, all with the Uniform(-1, 1) draw from
//! [`crate::rng`].

use crate::dcor::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, uniform_open};
use std::fmt;

/// Dependence shape between X and Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relationship {
    Linear,
    Quadratic,
    FourthRoot,
    Independent,
}

impl Relationship {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relationship::Linear => "linear",
            Relationship::Quadratic => "quadratic",
            Relationship::FourthRoot => "fourth_root",
            Relationship::Independent => "independent",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Relationship::Linear),
            "quadratic" => Ok(Relationship::Quadratic),
            "fourth_root" => Ok(Relationship::FourthRoot),
            "independent" => Ok(Relationship::Independent),
            other => Err(Error::InvalidParameter(format!(
                "unknown relationship: {other}"
            ))),
        }
    }
}

/// Scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioFamily {
    /// Five dependent X dimensions, q = 1, p sweeps.
    FixedDep,
    /// First d dimensions of Y tied to X, p and q fixed, d sweeps.
    IncreasingDep,
    /// Diagnostic only: Y is the unweighted sum of all X dimensions, a
    /// dependence that vanishes as p grows. Excluded from power targets.
    Vanishing,
}

impl ScenarioFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioFamily::FixedDep => "fixed_dep",
            ScenarioFamily::IncreasingDep => "increasing_dep",
            ScenarioFamily::Vanishing => "vanishing",
        }
    }
}

impl fmt::Display for ScenarioFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fully specified generator: family, relationship, sizes, and the
/// ground-truth count of dependent dimension pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub family: ScenarioFamily,
    pub relationship: Relationship,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Dependent-dimension parameter; meaningful for `IncreasingDep` only.
    pub d: usize,
    /// Ground truth d_XY = d_X * d_Y: the number of dependent dimension
    /// pairs. For the vanishing diagnostic this counts pairs at finite p,
    /// even though the per-pair dependence washes out as p grows.
    pub d_xy_truth: usize,
}

impl Scenario {
    /// Fixed-dependent-dimension design: q = 1, weights on the first five
    /// X columns. Requires p >= 5 so the weight vector is defined.
    pub fn fixed_dep(relationship: Relationship, n: usize, p: usize) -> Result<Self> {
        if p < 5 {
            return Err(Error::InvalidParameter(format!(
                "fixed-dependence design requires p >= 5 (weight vector), got p = {p}"
            )));
        }
        if n < 4 {
            return Err(Error::InvalidParameter(format!("n = {n}, need n >= 4")));
        }
        let d_xy_truth = match relationship {
            Relationship::Independent => 0,
            _ => 5,
        };
        Ok(Self {
            family: ScenarioFamily::FixedDep,
            relationship,
            n,
            p,
            q: 1,
            d: 0,
            d_xy_truth,
        })
    }

    /// Increasing-dependent-dimension design: Y^i tied to X^i for i <= d.
    /// Only linear and quadratic relationships are defined here.
    pub fn increasing_dep(
        relationship: Relationship,
        n: usize,
        p: usize,
        q: usize,
        d: usize,
    ) -> Result<Self> {
        if !matches!(relationship, Relationship::Linear | Relationship::Quadratic) {
            return Err(Error::InvalidParameter(format!(
                "increasing-dependence design supports linear and quadratic, got {relationship}"
            )));
        }
        if d > p.min(q) {
            return Err(Error::InvalidParameter(format!(
                "d = {d} exceeds min(p, q) = {}",
                p.min(q)
            )));
        }
        if n < 4 {
            return Err(Error::InvalidParameter(format!("n = {n}, need n >= 4")));
        }
        if p == 0 || q == 0 {
            return Err(Error::InvalidParameter("p and q must be >= 1".to_string()));
        }
        Ok(Self {
            family: ScenarioFamily::IncreasingDep,
            relationship,
            n,
            p,
            q,
            d,
            d_xy_truth: d * d,
        })
    }

    /// Diagnostic scenario: Y = sum of all X dimensions (q = 1).
    pub fn vanishing(n: usize, p: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!("n = {n}, need n >= 4")));
        }
        if p == 0 {
            return Err(Error::InvalidParameter("p must be >= 1".to_string()));
        }
        Ok(Self {
            family: ScenarioFamily::Vanishing,
            relationship: Relationship::Linear,
            n,
            p,
            q: 1,
            d: 0,
            d_xy_truth: p,
        })
    }

    /// The value this scenario contributes to a sweep axis: p for the fixed
    /// and vanishing families, d for the increasing family.
    pub fn sweep_value(&self) -> usize {
        match self.family {
            ScenarioFamily::FixedDep | ScenarioFamily::Vanishing => self.p,
            ScenarioFamily::IncreasingDep => self.d,
        }
    }

    /// Generate a paired sample. Bit-identical for identical (self, seed).
    pub fn generate(&self, seed: u64) -> PairedSample {
        match self.family {
            ScenarioFamily::FixedDep => gen_fixed(self, seed),
            ScenarioFamily::IncreasingDep => gen_increasing(self, seed),
            ScenarioFamily::Vanishing => gen_vanishing_sample(self, seed),
        }
    }
}

/// A row-paired (X, Y) sample with its generator metadata.
#[derive(Debug, Clone)]
pub struct PairedSample {
    pub x: DataMatrix,
    pub y: DataMatrix,
    pub scenario: Scenario,
}

/// Weights applied to the first five dimensions: w_i = 1/i, zero beyond.
pub(crate) fn weight_vector(p: usize) -> Vec<f64> {
    let mut w = vec![0.0; p];
    for (i, wi) in w.iter_mut().enumerate().take(5) {
        *wi = 1.0 / (i + 1) as f64;
    }
    w
}

/// Deterministic stream of Uniform(-1, 1) variates.
pub fn uniform_stream(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| uniform_open(&mut rng)).collect()
}

/// Fixed-dependence generator (see [`Scenario::fixed_dep`]).
pub fn gen_fixed_dep(
    relationship: Relationship,
    n: usize,
    p: usize,
    seed: u64,
) -> Result<PairedSample> {
    Ok(Scenario::fixed_dep(relationship, n, p)?.generate(seed))
}

/// Increasing-dependence generator (see [`Scenario::increasing_dep`]).
pub fn gen_increasing_dep(
    relationship: Relationship,
    n: usize,
    p: usize,
    q: usize,
    d: usize,
    seed: u64,
) -> Result<PairedSample> {
    Ok(Scenario::increasing_dep(relationship, n, p, q, d)?.generate(seed))
}

/// Vanishing-dependence diagnostic generator (see [`Scenario::vanishing`]).
pub fn gen_vanishing_dep(n: usize, p: usize, seed: u64) -> Result<PairedSample> {
    Ok(Scenario::vanishing(n, p)?.generate(seed))
}

fn draw_matrix(rng: &mut impl rand_core::RngCore, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| uniform_open(rng)).collect()
}

fn gen_fixed(scenario: &Scenario, seed: u64) -> PairedSample {
    let (n, p) = (scenario.n, scenario.p);
    let mut rng = rng_from_seed(seed);
    let x_values = draw_matrix(&mut rng, n, p);
    let x = DataMatrix::from_column_major(x_values, n, p).expect("finite by construction");

    let w = weight_vector(p);
    let mut y = vec![0.0; n];
    match scenario.relationship {
        Relationship::Linear => {
            for (s, ys) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &wi) in w.iter().enumerate().take(5) {
                    acc += x.get(s, i) * wi;
                }
                *ys = acc;
            }
        }
        Relationship::Quadratic => {
            for (s, ys) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &wi) in w.iter().enumerate().take(5) {
                    let v = x.get(s, i);
                    acc += v * v * wi;
                }
                *ys = acc;
            }
        }
        Relationship::FourthRoot => {
            for (s, ys) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &wi) in w.iter().enumerate().take(5) {
                    // |x|^(1/4) as two exact square roots.
                    acc += x.get(s, i).abs().sqrt().sqrt() * wi;
                }
                *ys = acc;
            }
        }
        Relationship::Independent => {
            let z_values = draw_matrix(&mut rng, n, p);
            let z = DataMatrix::from_column_major(z_values, n, p).expect("finite by construction");
            for (s, ys) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &wi) in w.iter().enumerate().take(5) {
                    acc += z.get(s, i) * wi;
                }
                *ys = acc;
            }
        }
    }
    let y = DataMatrix::from_vec(y).expect("finite by construction");
    PairedSample {
        x,
        y,
        scenario: *scenario,
    }
}

fn gen_increasing(scenario: &Scenario, seed: u64) -> PairedSample {
    let (n, p, q, d) = (scenario.n, scenario.p, scenario.q, scenario.d);
    let mut rng = rng_from_seed(seed);
    let x_values = draw_matrix(&mut rng, n, p);
    let x = DataMatrix::from_column_major(x_values, n, p).expect("finite by construction");

    let mut y_values = vec![0.0; n * q];
    for i in 0..d {
        let src = x.column(i);
        let dst = &mut y_values[i * n..(i + 1) * n];
        match scenario.relationship {
            Relationship::Linear => dst.copy_from_slice(src),
            Relationship::Quadratic => {
                for (out, &v) in dst.iter_mut().zip(src) {
                    *out = v * v;
                }
            }
            _ => unreachable!("validated at construction"),
        }
    }
    // Remaining columns are fresh noise, drawn after X in column order.
    for col in y_values.chunks_mut(n).skip(d) {
        for v in col.iter_mut() {
            *v = uniform_open(&mut rng);
        }
    }
    let y = DataMatrix::from_column_major(y_values, n, q).expect("finite by construction");
    PairedSample {
        x,
        y,
        scenario: *scenario,
    }
}

fn gen_vanishing_sample(scenario: &Scenario, seed: u64) -> PairedSample {
    let (n, p) = (scenario.n, scenario.p);
    let mut rng = rng_from_seed(seed);
    let x_values = draw_matrix(&mut rng, n, p);
    let x = DataMatrix::from_column_major(x_values, n, p).expect("finite by construction");
    let mut y = vec![0.0; n];
    for (s, ys) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..p {
            acc += x.get(s, i);
        }
        *ys = acc;
    }
    let y = DataMatrix::from_vec(y).expect("finite by construction");
    PairedSample {
        x,
        y,
        scenario: *scenario,
    }
}
