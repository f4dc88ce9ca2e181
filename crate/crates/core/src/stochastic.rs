//! Probabilistic semantics and Monte-Carlo estimation of
//! "probability of consensus before N communications".

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{AgentIx, Configuration, SimState};
use crate::metrics::{consensus, population_variance, spread};
use crate::models::{step, EdgeSetFamily, OpinionModel, ENUMERATION_CAP};
use crate::relations::{incident_targets, touched_agents, EdgeSet};

/// Which agents an edge set "chooses" for variance and distance weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AgentSelection {
    /// Sources and targets of the chosen edges.
    #[default]
    Touched,
    /// Targets of the chosen edges only.
    TargetsOnly,
}

impl AgentSelection {
    pub fn select(self, c: &Configuration, edges: &EdgeSet) -> Vec<AgentIx> {
        match self {
            AgentSelection::Touched => touched_agents(c, edges),
            AgentSelection::TargetsOnly => incident_targets(c, edges),
        }
    }
}

pub type WeightFn = Arc<dyn Fn(&Configuration, &EdgeSet) -> f64 + Send + Sync>;

/// How probability mass is spread over the successors of a state.
#[derive(Clone, Default)]
pub enum WeightScheme {
    #[default]
    Uniform,
    /// Population variance of the selected agents' opinions.
    Variance(AgentSelection),
    /// Opinion spread of the selected agents.
    Distance(AgentSelection),
    Explicit {
        name: String,
        f: WeightFn,
    },
}

impl WeightScheme {
    pub fn explicit(
        name: impl Into<String>,
        f: impl Fn(&Configuration, &EdgeSet) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WeightScheme::Explicit {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Parses `uniform`, `variance` or `distance`.
    pub fn from_name(name: &str, selection: AgentSelection) -> Result<Self> {
        match name.trim() {
            "uniform" => Ok(WeightScheme::Uniform),
            "variance" => Ok(WeightScheme::Variance(selection)),
            "distance" => Ok(WeightScheme::Distance(selection)),
            other => Err(Error::InvalidParameter(format!(
                "unknown weighting scheme `{other}` (expected uniform, variance or distance)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::Variance(_) => "variance",
            WeightScheme::Distance(_) => "distance",
            WeightScheme::Explicit { name, .. } => name,
        }
    }

    /// Unnormalised weight of firing `edges` in `c`.
    pub fn weight(&self, c: &Configuration, edges: &EdgeSet) -> Result<f64> {
        let w = match self {
            WeightScheme::Uniform => 1.0,
            WeightScheme::Variance(sel) => measure(Measure::Variance, c, &sel.select(c, edges)),
            WeightScheme::Distance(sel) => measure(Measure::Distance, c, &sel.select(c, edges)),
            WeightScheme::Explicit { f, .. } => f(c, edges),
        };
        check_weight(self.name(), w)
    }
}

impl fmt::Debug for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Variance(s) => write!(f, "Variance({s:?})"),
            WeightScheme::Distance(s) => write!(f, "Distance({s:?})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Measure {
    Variance,
    Distance,
}

fn measure(m: Measure, c: &Configuration, agents: &[AgentIx]) -> f64 {
    let values: Vec<f64> = agents.iter().map(|&a| c.opinion(a)).collect();
    match m {
        Measure::Variance => population_variance(&values),
        Measure::Distance => spread(&values),
    }
    .unwrap_or(0.0)
}

fn check_weight(scheme: &str, weight: f64) -> Result<f64> {
    if weight >= 0.0 && weight.is_finite() {
        Ok(weight)
    } else {
        Err(Error::InvalidWeight {
            scheme: scheme.to_string(),
            weight,
        })
    }
}

/// Normalises `weights`, falling back to uniform when they sum to zero.
fn normalise(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        let p = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = p);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSuccessor {
    pub edges: EdgeSet,
    pub state: SimState,
    pub probability: f64,
}

/// Every successor of `s` with its probability under `scheme`.
pub fn successor_distribution(
    s: &SimState,
    model: &OpinionModel,
    scheme: &WeightScheme,
) -> Result<Vec<WeightedSuccessor>> {
    let family = model.family(&s.network)?;
    if family.is_empty() {
        return Err(Error::Deadlocked);
    }
    if family.len() > ENUMERATION_CAP {
        return Err(Error::RequiresEnumeration {
            size: family.len(),
            cap: ENUMERATION_CAP,
        });
    }
    let members: Vec<EdgeSet> = family.iter().collect();
    let mut weights = members
        .iter()
        .map(|a| scheme.weight(&s.network, a))
        .collect::<Result<Vec<_>>>()?;
    normalise(&mut weights);
    members
        .into_iter()
        .zip(weights)
        .map(|(edges, probability)| {
            let state = step(s, &edges, &model.update)?;
            Ok(WeightedSuccessor {
                edges,
                state,
                probability,
            })
        })
        .collect()
}

/// Probability of reaching consensus within `epsilon` before the
/// communication count exceeds `comm_budget`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Query {
    pub comm_budget: u64,
    pub epsilon: f64,
}

impl Query {
    pub fn new(comm_budget: u64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Query {
            comm_budget,
            epsilon,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationParams {
    pub alpha: f64,
    pub delta: f64,
    pub max_samples: u64,
    pub seed: u64,
    /// Per-path cap on transitions.
    pub step_budget: u64,
    /// Samples drawn between convergence checks.
    pub batch: u64,
    pub parallel: bool,
}

impl Default for EstimationParams {
    fn default() -> Self {
        EstimationParams {
            alpha: 0.05,
            delta: 0.01,
            max_samples: 100_000,
            seed: 0,
            step_budget: 1_000_000,
            batch: 100,
            parallel: true,
        }
    }
}

impl EstimationParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.max_samples == 0 || self.step_budget == 0 || self.batch == 0 {
            return bad("max samples, step budget and batch size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: u64,
    pub successes: u64,
    pub converged: bool,
    /// Paths that ended because no interaction was available.
    pub deadlocks: u64,
    /// Paths cut off by the step budget.
    pub step_budget_exhausted: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PathSample {
    pub hit: bool,
    pub deadlock: bool,
    pub step_budget_exhausted: bool,
    pub steps: u64,
}

/// Edge sets grouped by the agents they select; all members of a class
/// share one weight in every state.
struct Class {
    agents: Vec<AgentIx>,
    members: Vec<EdgeSet>,
}

enum Chooser {
    Uniform,
    Classes {
        measure: Measure,
        classes: Vec<Class>,
    },
    Explicit {
        members: Vec<EdgeSet>,
    },
}

/// Draws paths for one (model, scheme, query) triple.
///
/// The family is computed once since no transition changes the graph.
/// Uniform sampling picks a member index and materialises only that member.
pub struct PathSampler<'a> {
    init: &'a SimState,
    model: &'a OpinionModel,
    scheme: &'a WeightScheme,
    query: Query,
    step_budget: u64,
    family: EdgeSetFamily,
    chooser: Chooser,
    materialised: AtomicU64,
}

impl<'a> PathSampler<'a> {
    pub fn new(
        init: &'a SimState,
        model: &'a OpinionModel,
        scheme: &'a WeightScheme,
        query: Query,
        step_budget: u64,
    ) -> Result<Self> {
        let family = model.family(&init.network)?;
        let enumerate = || -> Result<Vec<EdgeSet>> {
            if family.len() > ENUMERATION_CAP {
                return Err(Error::RequiresEnumeration {
                    size: family.len(),
                    cap: ENUMERATION_CAP,
                });
            }
            Ok(family.iter().collect())
        };
        let chooser = match scheme {
            WeightScheme::Uniform => Chooser::Uniform,
            WeightScheme::Variance(sel) | WeightScheme::Distance(sel) => {
                let measure = match scheme {
                    WeightScheme::Variance(_) => Measure::Variance,
                    _ => Measure::Distance,
                };
                let mut groups: BTreeMap<Vec<AgentIx>, Vec<EdgeSet>> = BTreeMap::new();
                for a in enumerate()? {
                    groups
                        .entry(sel.select(&init.network, &a))
                        .or_default()
                        .push(a);
                }
                let classes = groups
                    .into_iter()
                    .map(|(agents, members)| Class { agents, members })
                    .collect();
                Chooser::Classes { measure, classes }
            }
            WeightScheme::Explicit { .. } => Chooser::Explicit {
                members: enumerate()?,
            },
        };
        Ok(PathSampler {
            init,
            model,
            scheme,
            query,
            step_budget,
            family,
            chooser,
            materialised: AtomicU64::new(0),
        })
    }

    pub fn family(&self) -> &EdgeSetFamily {
        &self.family
    }

    /// Edge sets built while sampling under the uniform scheme.
    pub fn materialised(&self) -> u64 {
        self.materialised.load(Ordering::Relaxed)
    }

    /// Draws the next interaction, or `None` on deadlock.
    pub fn choose<R: Rng + ?Sized>(
        &self,
        c: &Configuration,
        rng: &mut R,
    ) -> Result<Option<EdgeSet>> {
        if self.family.is_empty() {
            return Ok(None);
        }
        match &self.chooser {
            Chooser::Uniform => {
                let ix = self.family.sample_index(rng).expect("family is nonempty");
                self.materialised.fetch_add(1, Ordering::Relaxed);
                Ok(self.family.get(ix))
            }
            Chooser::Classes {
                measure: kind,
                classes,
            } => {
                let mut weights = classes
                    .iter()
                    .map(|k| {
                        let w = check_weight(self.scheme.name(), measure(*kind, c, &k.agents))?;
                        Ok(w * k.members.len() as f64)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if weights.iter().sum::<f64>() <= 0.0 {
                    weights = classes.iter().map(|k| k.members.len() as f64).collect();
                }
                let class = &classes[pick(&weights, rng)];
                Ok(Some(
                    class.members[rng.gen_range(0..class.members.len())].clone(),
                ))
            }
            Chooser::Explicit { members } => {
                let mut weights = members
                    .iter()
                    .map(|a| self.scheme.weight(c, a))
                    .collect::<Result<Vec<_>>>()?;
                normalise(&mut weights);
                Ok(Some(members[pick(&weights, rng)].clone()))
            }
        }
    }

    /// One path of the consensus-before-budget query.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PathSample> {
        let mut s = self.init.clone();
        let mut out = PathSample::default();
        loop {
            if consensus(&s, self.query.epsilon) {
                out.hit = true;
                return Ok(out);
            }
            if s.comm > self.query.comm_budget {
                return Ok(out);
            }
            if out.steps >= self.step_budget {
                out.step_budget_exhausted = true;
                return Ok(out);
            }
            let Some(edges) = self.choose(&s.network, rng)? else {
                out.deadlock = true;
                return Ok(out);
            };
            s = step(&s, &edges, &self.model.update)?;
            out.steps += 1;
        }
    }
}

/// Index drawn with probability proportional to `weights`.
fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    // rounding left a sliver of mass past the end
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// RNG for sample number `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One path from `init`.
pub fn sample_path<R: Rng + ?Sized>(
    init: &SimState,
    model: &OpinionModel,
    scheme: &WeightScheme,
    query: Query,
    step_budget: u64,
    rng: &mut R,
) -> Result<PathSample> {
    PathSampler::new(init, model, scheme, query, step_budget)?.sample(rng)
}

/// Two-sided standard normal quantile for confidence level `1 - alpha`.
pub fn z_quantile(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha / 2.0)
}

/// Half-width of the confidence interval for `successes` out of `n`.
///
/// Uses the normal approximation, or the Wilson interval when fewer than
/// five successes or failures were seen.
pub fn half_width(successes: u64, n: u64, alpha: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let z = z_quantile(alpha);
    let nf = n as f64;
    let p = successes as f64 / nf;
    if successes < 5 || n - successes < 5 {
        let z2 = z * z;
        z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt()
    } else {
        z * (p * (1.0 - p) / nf).sqrt()
    }
}

/// Sequential Monte-Carlo estimate of the query's probability.
pub fn estimate(
    init: &SimState,
    model: &OpinionModel,
    scheme: &WeightScheme,
    query: Query,
    params: &EstimationParams,
) -> Result<Estimate> {
    params.validate()?;
    let sampler = PathSampler::new(init, model, scheme, query, params.step_budget)?;
    let mut est = Estimate {
        mean: 0.0,
        half_width: 1.0,
        samples: 0,
        successes: 0,
        converged: false,
        deadlocks: 0,
        step_budget_exhausted: 0,
    };
    let tally = |est: &mut Estimate, p: PathSample| {
        est.samples += 1;
        est.successes += p.hit as u64;
        est.deadlocks += p.deadlock as u64;
        est.step_budget_exhausted += p.step_budget_exhausted as u64;
    };

    if sampler.family().len() <= 1 {
        // one path says everything about a deterministic model
        tally(&mut est, sampler.sample(&mut sample_rng(params.seed, 0))?);
        est.mean = est.successes as f64;
        est.half_width = 0.0;
        est.converged = true;
        return Ok(est);
    }

    while est.samples < params.max_samples {
        let start = est.samples;
        let end = (start + params.batch).min(params.max_samples);
        let draw = |i: u64| sampler.sample(&mut sample_rng(params.seed, i));
        let batch: Vec<PathSample> = if params.parallel {
            (start..end)
                .into_par_iter()
                .map(draw)
                .collect::<Result<_>>()?
        } else {
            (start..end).map(draw).collect::<Result<_>>()?
        };
        batch.into_iter().for_each(|p| tally(&mut est, p));
        est.half_width = half_width(est.successes, est.samples, params.alpha);
        if est.half_width <= params.delta {
            est.converged = true;
            break;
        }
    }
    est.mean = est.successes as f64 / est.samples as f64;
    Ok(est)
}
