//! Parameter domain, affine coefficients and reproducible sampling.
//!
//! A parameter point carries Young's modulus and Poisson's ratio per
//! subdomain, laid out as `[E_1, ν_1, E_2, ν_2, ...]` in the sorted
//! subdomain order of the assembled operator. The affine coefficients are the
//! plane-strain Lamé parameters, one (shear, dilatation) pair per subdomain.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the RNG recorded in output metadata so runs can be reproduced
/// across machines.
pub const RNG_ALGORITHM: &str = "ChaCha12";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn young(&self, s: usize) -> f64 {
        self.0[2 * s]
    }

    pub fn poisson(&self, s: usize) -> f64 {
        self.0[2 * s + 1]
    }
}

/// Plane-strain Lamé parameters: `μ_L = E/(2(1+ν))`, `λ_L = Eν/((1+ν)(1−2ν))`.
pub fn plane_strain_coefficients(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if poisson >= 0.5 {
        return Err(Error::Parameter(format!(
            "Poisson ratio {poisson} reaches the incompressible limit"
        )));
    }
    if poisson < 0.0 || young <= 0.0 {
        return Err(Error::Parameter(format!(
            "material constants out of range: E = {young}, ν = {poisson}"
        )));
    }
    let shear = young / (2.0 * (1.0 + poisson));
    let dilatation = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    Ok((shear, dilatation))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubdomainRanges {
    pub young: (f64, f64),
    pub poisson: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    ranges: Vec<SubdomainRanges>,
    reference: ParameterPoint,
}

impl ParameterDomain {
    /// Domain with the reference parameter at the box midpoint.
    pub fn new(ranges: Vec<SubdomainRanges>) -> Result<Self> {
        let reference = ParameterPoint(
            ranges
                .iter()
                .flat_map(|r| {
                    [
                        0.5 * (r.young.0 + r.young.1),
                        0.5 * (r.poisson.0 + r.poisson.1),
                    ]
                })
                .collect(),
        );
        Self::with_reference(ranges, reference)
    }

    pub fn with_reference(ranges: Vec<SubdomainRanges>, reference: ParameterPoint) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Parameter("no subdomain ranges given".into()));
        }
        for r in &ranges {
            if !(r.young.0 > 0.0 && r.young.0 <= r.young.1 && r.young.1.is_finite()) {
                return Err(Error::Parameter(format!(
                    "invalid Young's modulus range {:?}",
                    r.young
                )));
            }
            if !(r.poisson.0 > 0.0 && r.poisson.0 <= r.poisson.1 && r.poisson.1 < 0.5) {
                return Err(Error::Parameter(format!(
                    "invalid Poisson ratio range {:?}",
                    r.poisson
                )));
            }
        }
        let domain = ParameterDomain {
            ranges,
            reference: reference.clone(),
        };
        if reference.dim() != domain.dim() || !domain.contains(&reference) {
            return Err(Error::Parameter(
                "reference parameter lies outside the domain".into(),
            ));
        }
        Ok(domain)
    }

    pub fn n_subdomains(&self) -> usize {
        self.ranges.len()
    }

    /// P = 2 × number of subdomains.
    pub fn dim(&self) -> usize {
        2 * self.ranges.len()
    }

    pub fn ranges(&self) -> &[SubdomainRanges] {
        &self.ranges
    }

    pub fn reference(&self) -> &ParameterPoint {
        &self.reference
    }

    pub fn contains(&self, mu: &ParameterPoint) -> bool {
        if mu.dim() != self.dim() {
            return false;
        }
        self.ranges.iter().enumerate().all(|(s, r)| {
            let (e, nu) = (mu.young(s), mu.poisson(s));
            e >= r.young.0 && e <= r.young.1 && nu >= r.poisson.0 && nu <= r.poisson.1
        })
    }

    /// Coefficient vector of length Q = 2S, ordered (shear_1, dil_1, shear_2, ...).
    pub fn affine_coefficients(&self, mu: &ParameterPoint) -> Result<Vec<f64>> {
        if mu.dim() != self.dim() {
            return Err(Error::Parameter(format!(
                "parameter has dimension {}, domain expects {}",
                mu.dim(),
                self.dim()
            )));
        }
        let mut theta = Vec::with_capacity(self.dim());
        for s in 0..self.n_subdomains() {
            let (shear, dil) = plane_strain_coefficients(mu.young(s), mu.poisson(s))?;
            theta.push(shear);
            theta.push(dil);
        }
        Ok(theta)
    }

    /// `g(μ) = min_q Θ_q(μ)/Θ_q(μ̂)`, an admissible lower bound relating the
    /// μ-energy form to the reference form since all blocks are positive
    /// semi-definite and all coefficients positive.
    pub fn coercivity_lower_bound(&self, mu: &ParameterPoint) -> Result<f64> {
        let theta = self.affine_coefficients(mu)?;
        let theta_hat = self.affine_coefficients(&self.reference)?;
        let mut g = f64::INFINITY;
        for (t, th) in theta.iter().zip(&theta_hat) {
            if *th <= 0.0 {
                return Err(Error::Parameter(
                    "reference coefficients must be strictly positive".into(),
                ));
            }
            g = g.min(t / th);
        }
        Ok(g)
    }

    /// Uniform i.i.d. sample of the box, reproducible from the seed.
    pub fn sample(&self, count: usize, seed: u64, label: SampleLabel) -> SampleSet {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                ParameterPoint(
                    self.ranges
                        .iter()
                        .flat_map(|r| {
                            let e = r.young.0 + (r.young.1 - r.young.0) * rng.random::<f64>();
                            let nu =
                                r.poisson.0 + (r.poisson.1 - r.poisson.0) * rng.random::<f64>();
                            [e, nu]
                        })
                        .collect(),
                )
            })
            .collect();
        SampleSet {
            label,
            points,
            seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }

    /// The 2^P corners of the box, in lexicographic bit order.
    pub fn corner_sample(&self, label: SampleLabel) -> SampleSet {
        let p = self.dim();
        assert!(p <= 20, "corner sample with 2^{p} points is unreasonable");
        let bounds: Vec<(f64, f64)> = self
            .ranges
            .iter()
            .flat_map(|r| [r.young, r.poisson])
            .collect();
        let points = (0..1usize << p)
            .map(|mask| {
                ParameterPoint(
                    bounds
                        .iter()
                        .enumerate()
                        .map(|(i, &(lo, hi))| if mask >> i & 1 == 0 { lo } else { hi })
                        .collect(),
                )
            })
            .collect();
        SampleSet {
            label,
            points,
            seed: 0,
            rng_algorithm: "corners".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleLabel {
    Train,
    Test,
    PodTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: SampleLabel,
    pub points: Vec<ParameterPoint>,
    pub seed: u64,
    pub rng_algorithm: String,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
