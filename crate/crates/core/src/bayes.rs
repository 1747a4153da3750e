//! Posterior inference for the annual card-demand rate.
//!
//! Observed new-card events in a year are modeled as Poisson with mean
//! β × exposure, and β carries a Gamma prior. That choice has a closed-form
//! posterior ([`conjugate_posterior`]), which is what the random-walk
//! Metropolis sampler ([`metropolis_sample`]) is checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Fraction of a chain discarded as burn-in.
pub const BURN_IN_FRACTION: f64 = 0.1;

/// Minimum post-burn-in draws for [`summarize_chain`].
pub const MIN_SUMMARY_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandObservation {
    pub year: i32,
    pub count: u64,
    /// Person-years or population base the count arose from.
    pub exposure: f64,
}

impl DemandObservation {
    pub fn new(year: i32, count: u64, exposure: f64) -> Result<Self> {
        if !(exposure.is_finite() && exposure > 0.0) {
            return Err(Error::domain(format!(
                "exposure {exposure} for year {year} must be positive"
            )));
        }
        Ok(Self {
            year,
            count,
            exposure,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorFamily {
    Gamma,
}

/// Gamma(shape, rate) prior on β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub shape: f64,
    pub rate: f64,
}

impl PriorSpec {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0 && rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(format!(
                "gamma prior needs shape > 0 and rate > 0 (got {shape}, {rate})"
            )));
        }
        Ok(Self {
            family: PriorFamily::Gamma,
            shape,
            rate,
        })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }
}

/// Log of prior × likelihood at `beta`, dropping every term that does not
/// depend on β's value through the model (normalizing constants and
/// log(count!)):
///
/// (a − 1)·ln β − b·β + Σ [count·ln(β·exposure) − β·exposure]
pub fn log_posterior_unnormalized(
    beta: f64,
    data: &[DemandObservation],
    prior: &PriorSpec,
) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::domain(format!("beta {beta} must be positive")));
    }
    Ok(log_density_at(beta, data, prior))
}

fn log_density_at(beta: f64, data: &[DemandObservation], prior: &PriorSpec) -> f64 {
    let ln_beta = beta.ln();
    let mut lp = (prior.shape - 1.0) * ln_beta - prior.rate * beta;
    for obs in data {
        let mean = beta * obs.exposure;
        if obs.count > 0 {
            lp += obs.count as f64 * mean.ln();
        }
        lp -= mean;
    }
    lp
}

/// Gamma posterior (a + Σ counts, b + Σ exposures).
pub fn conjugate_posterior(data: &[DemandObservation], prior: &PriorSpec) -> PriorSpec {
    let counts: f64 = data.iter().map(|o| o.count as f64).sum();
    let exposure: f64 = data.iter().map(|o| o.exposure).sum();
    PriorSpec {
        family: PriorFamily::Gamma,
        shape: prior.shape + counts,
        rate: prior.rate + exposure,
    }
}

/// An unnormalized log density over a vector of positive parameters.
pub trait LogDensity {
    fn dim(&self) -> usize;

    /// May return `-inf` or NaN outside the support.
    fn log_density(&self, params: &[f64]) -> f64;
}

/// Scalar Poisson–Gamma demand model as a [`LogDensity`].
#[derive(Debug, Clone, Copy)]
pub struct PoissonGammaModel<'a> {
    pub data: &'a [DemandObservation],
    pub prior: PriorSpec,
}

impl LogDensity for PoissonGammaModel<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, params: &[f64]) -> f64 {
        let beta = params[0];
        if !(beta > 0.0) {
            return f64::NEG_INFINITY;
        }
        log_density_at(beta, self.data, &self.prior)
    }
}

/// Draws of a vector-valued chain, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorChain {
    pub dim: usize,
    pub draws: Vec<f64>,
    pub accepted: usize,
}

impl VectorChain {
    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }
}

/// Random-walk Metropolis on the log of each parameter.
///
/// Proposals are θ' = θ + scale·z with θ = ln(params) and z standard normal
/// per coordinate. The target on the log scale includes the Jacobian
/// Σ θ_i, so draws are from the original density over positive params.
#[derive(Debug, Clone, Copy)]
pub struct RandomWalkMetropolis {
    pub proposal_scale: f64,
    pub seed: u64,
}

impl RandomWalkMetropolis {
    pub fn new(proposal_scale: f64, seed: u64) -> Result<Self> {
        if !(proposal_scale.is_finite() && proposal_scale > 0.0) {
            return Err(Error::domain(format!(
                "proposal scale {proposal_scale} must be positive"
            )));
        }
        Ok(Self {
            proposal_scale,
            seed,
        })
    }

    pub fn run<M: LogDensity>(&self, model: &M, init: &[f64], n: usize) -> Result<VectorChain> {
        let dim = model.dim();
        if init.len() != dim {
            return Err(Error::Initialization(format!(
                "initial point has {} coordinates, model has {dim}",
                init.len()
            )));
        }
        if n == 0 {
            return Err(Error::domain("a chain needs at least one sample"));
        }
        let log_target = |theta: &[f64], buf: &mut Vec<f64>| -> f64 {
            buf.clear();
            buf.extend(theta.iter().map(|t| t.exp()));
            model.log_density(buf) + theta.iter().sum::<f64>()
        };

        let mut buf = Vec::with_capacity(dim);
        let mut theta: Vec<f64> = init.iter().map(|x| x.ln()).collect();
        let mut current = log_target(&theta, &mut buf);
        if !current.is_finite() {
            return Err(Error::Initialization(format!(
                "log density at the initial point {init:?} is {current}"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut proposal = vec![0.0; dim];
        let mut draws = Vec::with_capacity(n * dim);
        let mut accepted = 0;
        for _ in 0..n {
            for (p, t) in proposal.iter_mut().zip(&theta) {
                let z: f64 = rng.sample(StandardNormal);
                *p = t + self.proposal_scale * z;
            }
            let candidate = log_target(&proposal, &mut buf);
            let u: f64 = rng.random();
            // NaN candidates compare false and are rejected.
            if u.ln() < candidate - current {
                theta.copy_from_slice(&proposal);
                current = candidate;
                accepted += 1;
            }
            draws.extend(theta.iter().map(|t| t.exp()));
        }
        Ok(VectorChain {
            dim,
            draws,
            accepted,
        })
    }
}

/// Draws of the scalar demand rate β.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    /// Every draw, burn-in included.
    pub samples: Vec<f64>,
    pub seed: u64,
    pub acceptance_rate: f64,
    /// Number of leading draws treated as burn-in.
    pub burn_in: usize,
}

impl PosteriorChain {
    pub fn kept(&self) -> &[f64] {
        &self.samples[self.burn_in..]
    }
}

/// Samples β from the posterior, starting at the prior mean. The first 10%
/// of the `n_samples` draws are marked as burn-in.
pub fn metropolis_sample(
    data: &[DemandObservation],
    prior: &PriorSpec,
    n_samples: usize,
    seed: u64,
    proposal_scale: f64,
) -> Result<PosteriorChain> {
    let sampler = RandomWalkMetropolis::new(proposal_scale, seed)?;
    let model = PoissonGammaModel {
        data,
        prior: *prior,
    };
    let chain = sampler.run(&model, &[prior.mean()], n_samples)?;
    Ok(PosteriorChain {
        acceptance_rate: chain.accepted as f64 / n_samples as f64,
        burn_in: (n_samples as f64 * BURN_IN_FRACTION) as usize,
        samples: chain.draws,
        seed,
    })
}

/// Independent chains, one per seed, run on separate threads.
pub fn metropolis_sample_parallel(
    data: &[DemandObservation],
    prior: &PriorSpec,
    n_samples: usize,
    seeds: &[u64],
    proposal_scale: f64,
) -> Result<Vec<PosteriorChain>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || {
                    metropolis_sample(data, prior, n_samples, seed, proposal_scale)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSummary {
    pub mean: f64,
    pub variance: f64,
    /// Central 95% interval.
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

/// Mean, sample variance and the 2.5%/97.5% quantiles of the post-burn-in
/// draws.
pub fn summarize_chain(chain: &PosteriorChain) -> Result<ChainSummary> {
    let kept = chain.kept();
    if kept.len() < MIN_SUMMARY_SAMPLES {
        return Err(Error::Insufficient(format!(
            "{} post-burn-in samples, need at least {MIN_SUMMARY_SAMPLES}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let variance = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut sorted = kept.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ChainSummary {
        mean,
        variance,
        lower: quantile(&sorted, 0.025),
        upper: quantile(&sorted, 0.975),
        n: kept.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
