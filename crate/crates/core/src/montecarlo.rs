//! Monte Carlo simulator: Poisson BS and user layouts, random caching,
//! content-centric association, nulling requests and fading.
//!
//! Every topology draws from its own ChaCha stream derived from the seed
//! and the topology index, so results do not depend on scheduling.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{CacheDesign, InScheme, Interferer, NetworkConfig};
use crate::parallel::{map_indexed, Execution};

/// Attempts per topology before giving up on finding a serving BS.
const MAX_RESAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n_topologies: usize,
    pub n_fading: usize,
    /// Radius of the simulated disk in meters.
    pub region_radius: f64,
    /// BSs closer to the origin than this count as interior.
    pub guard_radius: f64,
    pub seed: u64,
}

impl MonteCarloConfig {
    /// Window sized from the serving-distance scale and the nulling range.
    pub fn for_network(cfg: &NetworkConfig, n_topologies: usize, n_fading: usize, seed: u64) -> MonteCarloConfig {
        let region_radius = default_region_radius(cfg);
        MonteCarloConfig { n_topologies, n_fading, region_radius, guard_radius: 0.5 * region_radius, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_topologies == 0 {
            return Err(invalid("n_topologies", "must be at least 1"));
        }
        if self.n_fading == 0 {
            return Err(invalid("n_fading", "must be at least 1"));
        }
        if !(self.guard_radius > 0.0) || !(self.region_radius > self.guard_radius) || !self.region_radius.is_finite() {
            return Err(invalid(
                "region_radius",
                format!(
                    "need region_radius > guard_radius > 0, got {} and {}",
                    self.region_radius, self.guard_radius
                ),
            ));
        }
        Ok(())
    }
}

/// `max(10/√(πλ/ξ), 20·R_IN)` where `R_IN` is the (mean) nulling range.
pub fn default_region_radius(cfg: &NetworkConfig) -> f64 {
    let density = cfg.lambda_bs / cfg.xi;
    let serving_scale = 10.0 / (std::f64::consts::PI * density).sqrt();
    let mean_serving = 0.5 / density.sqrt();
    let r_in = match cfg.scheme {
        InScheme::Fixed { r_c } => r_c,
        InScheme::Flexible { mu } => mu * mean_serving,
    };
    serving_scale.max(20.0 * r_in)
}

/// One sampled network around a typical user at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyRealization {
    pub bs_points: Vec<[f64; 2]>,
    /// Files cached at each BS.
    pub caches: Vec<Vec<u32>>,
    /// Location of the user each BS serves; `None` for idle BSs.
    pub served_user_per_bs: Vec<Option<[f64; 2]>>,
    pub typical_request: usize,
    pub serving_bs: usize,
    pub serving_distance: f64,
    /// Nulling requests received by the serving BS.
    pub requests_at_serving: usize,
    /// Requests the serving BS honors, `min(requests, L)`.
    pub satisfied_at_serving: usize,
    /// Every active BS other than the serving one.
    pub interferers: Vec<Interferer>,
    /// Nulling requests received by each BS.
    pub requests_received: Vec<u32>,
}

impl TopologyRealization {
    /// Requests received by active BSs within `guard` of the origin.
    pub fn interior_loads(&self, guard: f64) -> impl Iterator<Item = u32> + '_ {
        let g2 = guard * guard;
        self.bs_points
            .iter()
            .zip(&self.served_user_per_bs)
            .zip(&self.requests_received)
            .filter(move |((p, served), _)| served.is_some() && norm2(**p) < g2)
            .map(|(_, &r)| r)
    }
}

fn norm2(p: [f64; 2]) -> f64 {
    p[0] * p[0] + p[1] * p[1]
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    norm2([a[0] - b[0], a[1] - b[1]])
}

/// Precomputed distributions for repeated topology draws.
pub struct TopologySampler {
    cfg: NetworkConfig,
    design: CacheDesign,
    region_radius: f64,
    all_files: WeightedIndex<f64>,
    cached_files: WeightedIndex<f64>,
    bs_count: Poisson<f64>,
    user_count: Poisson<f64>,
    forced_request: Option<usize>,
}

impl TopologySampler {
    pub fn new(cfg: &NetworkConfig, mc: &MonteCarloConfig) -> Result<TopologySampler> {
        cfg.validate()?;
        mc.validate()?;
        let popularity = cfg.popularity()?;
        let design = cfg.cache_design()?;
        let area = std::f64::consts::PI * mc.region_radius * mc.region_radius;
        let sim = |e: String| Error::Simulation(e);
        Ok(TopologySampler {
            cfg: cfg.clone(),
            design,
            region_radius: mc.region_radius,
            all_files: WeightedIndex::new(popularity.weights()).map_err(|e| sim(e.to_string()))?,
            cached_files: WeightedIndex::new(&popularity.weights()[..design.n_c])
                .map_err(|e| sim(e.to_string()))?,
            bs_count: Poisson::new(cfg.lambda_bs * area).map_err(|e| sim(e.to_string()))?,
            user_count: Poisson::new(cfg.lambda_u * area).map_err(|e| sim(e.to_string()))?,
            forced_request: None,
        })
    }

    /// Always give the typical user this request instead of a random one.
    pub fn with_forced_request(mut self, file: usize) -> Result<TopologySampler> {
        if file >= self.design.n_c {
            return Err(invalid("forced_request", format!("file {file} is outside the {} cacheable files", self.design.n_c)));
        }
        self.forced_request = Some(file);
        Ok(self)
    }

    fn point_in_disk<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        let r = self.region_radius * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        [r * phi.cos(), r * phi.sin()]
    }

    /// One draw; `None` when no BS in the window caches the typical request.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<TopologyRealization> {
        let cfg = &self.cfg;
        let n_c = self.design.n_c;
        let n_bs = self.bs_count.sample(rng) as usize;
        let bs_points: Vec<[f64; 2]> = (0..n_bs).map(|_| self.point_in_disk(rng)).collect();
        let mut holders: Vec<Vec<u32>> = vec![Vec::new(); n_c];
        let caches: Vec<Vec<u32>> = (0..n_bs)
            .map(|b| {
                let mut files: Vec<u32> =
                    rand::seq::index::sample(rng, n_c, cfg.c).into_iter().map(|f| f as u32).collect();
                files.sort_unstable();
                for &f in &files {
                    holders[f as usize].push(b as u32);
                }
                files
            })
            .collect();
        let nearest = |p: [f64; 2], file: usize| -> Option<(usize, f64)> {
            holders[file]
                .iter()
                .map(|&b| (b as usize, dist2(p, bs_points[b as usize])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };

        let typical_request = self.forced_request.unwrap_or_else(|| self.cached_files.sample(rng));
        let (serving_bs, z2) = nearest([0.0, 0.0], typical_request)?;

        // each BS serves one of its associated users, picked by reservoir sampling
        let mut served: Vec<Option<[f64; 2]>> = vec![None; n_bs];
        let mut seen = vec![0u32; n_bs];
        let n_users = self.user_count.sample(rng) as usize;
        for _ in 0..n_users {
            let p = self.point_in_disk(rng);
            let file = self.all_files.sample(rng);
            if file >= n_c {
                continue;
            }
            if let Some((b, _)) = nearest(p, file) {
                seen[b] += 1;
                if rng.random_range(0..seen[b]) == 0 {
                    served[b] = Some(p);
                }
            }
        }
        served[serving_bs] = Some([0.0, 0.0]);

        let active: Vec<usize> = (0..n_bs).filter(|&b| served[b].is_some()).collect();
        let range_of = |user: [f64; 2], bs: usize| -> f64 {
            match cfg.scheme {
                InScheme::Fixed { r_c } => r_c,
                InScheme::Flexible { mu } => mu * dist2(user, bs_points[bs]).sqrt(),
            }
        };
        let mut requests = vec![0u32; n_bs];
        let mut typical_targets = Vec::new();
        for &b in &active {
            let user = served[b].expect("active BS has a user");
            let r = range_of(user, b);
            let r2 = r * r;
            for &other in &active {
                if other != b && dist2(user, bs_points[other]) < r2 {
                    requests[other] += 1;
                    if b == serving_bs {
                        typical_targets.push(other);
                    }
                }
            }
        }
        let requests_at_serving = requests[serving_bs] as usize;
        let satisfied_at_serving = requests_at_serving.min(cfg.l);

        let mut nulled = vec![false; n_bs];
        for &t in &typical_targets {
            let p = (cfg.l as f64 / requests[t] as f64).min(1.0);
            nulled[t] = rng.random::<f64>() < p;
        }
        let interferers = active
            .iter()
            .filter(|&&b| b != serving_bs)
            .map(|&b| Interferer { radius: norm2(bs_points[b]).sqrt(), nulled: nulled[b] })
            .collect();

        Some(TopologyRealization {
            bs_points,
            caches,
            served_user_per_bs: served,
            typical_request,
            serving_bs,
            serving_distance: z2.sqrt(),
            requests_at_serving,
            satisfied_at_serving,
            interferers,
            requests_received: requests,
        })
    }

    /// Draw until a serving BS exists; returns the topology and the number
    /// of discarded draws.
    pub fn sample_until_served<R: Rng>(&self, rng: &mut R) -> Result<(TopologyRealization, usize)> {
        for attempt in 0..MAX_RESAMPLES {
            if let Some(t) = self.sample(rng) {
                return Ok((t, attempt));
            }
        }
        Err(Error::Simulation(format!(
            "no BS cached the requested file in {MAX_RESAMPLES} draws; the region is too small"
        )))
    }
}

/// Convenience wrapper: one topology and its resample count.
pub fn sample_topology<R: Rng>(
    cfg: &NetworkConfig,
    mc: &MonteCarloConfig,
    rng: &mut R,
) -> Result<(TopologyRealization, usize)> {
    TopologySampler::new(cfg, mc)?.sample_until_served(rng)
}

/// Stream `2i` samples topology `i`, stream `2i+1` its fading.
pub fn topology_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index as u64);
    rng
}

pub fn fading_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index as u64 + 1);
    rng
}

/// SIR of the typical user over `n_fading` independent fading draws.
pub fn sir_samples<R: Rng>(topo: &TopologyRealization, cfg: &NetworkConfig, n_fading: usize, rng: &mut R) -> Vec<f64> {
    let diversity = (cfg.m - topo.satisfied_at_serving) as f64;
    let serving_gain = Gamma::new(diversity, 1.0).expect("positive shape");
    let signal_loss = topo.serving_distance.powf(-cfg.alpha);
    let losses: Vec<f64> = topo
        .interferers
        .iter()
        .filter(|x| !x.nulled)
        .map(|x| x.radius.powf(-cfg.alpha))
        .collect();
    (0..n_fading)
        .map(|_| {
            let g0: f64 = serving_gain.sample(rng);
            let interference = losses.iter().fold(0.0, |acc, l| acc + l * rng.sample::<f64, _>(Exp1));
            g0 * signal_loss / interference
        })
        .collect()
}

/// Fraction of sorted SIR samples at or above `tau`.
fn fraction_above(sorted: &[f64], tau: f64) -> f64 {
    let below = sorted.partition_point(|&s| s < tau);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// Conditional STP of one realization, estimated over `n_fading` draws.
pub fn cstp_of_topology<R: Rng>(
    topo: &TopologyRealization,
    tau: f64,
    cfg: &NetworkConfig,
    n_fading: usize,
    rng: &mut R,
) -> f64 {
    let mut s = sir_samples(topo, cfg, n_fading, rng);
    s.sort_by(f64::total_cmp);
    fraction_above(&s, tau)
}

/// Per-topology CSTP estimates at one threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CstpSampleSet {
    pub tau: f64,
    pub samples: Vec<f64>,
    pub config_hash: String,
    pub seed: u64,
}

impl CstpSampleSet {
    /// CSV with header `topology_index,cstp`.
    pub fn write_csv<W: Write>(&self, mut out: W, fmt: impl Fn(f64) -> String) -> Result<()> {
        writeln!(out, "topology_index,cstp")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{}", fmt(*v))?;
        }
        Ok(())
    }
}

/// Everything a campaign measures besides the CSTP samples.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignReport {
    pub sets: Vec<CstpSampleSet>,
    /// Draws discarded because no BS in the window cached the request.
    pub resamples: usize,
    /// Mean requests received per active interior BS.
    pub interior_load_mean: f64,
    pub interior_bs_count: u64,
    /// Histogram of `θ` at the typical user's serving BS, `0..=L`.
    pub serving_theta_hist: Vec<u64>,
    /// Histogram of the typical request over the cacheable files.
    pub request_hist: Vec<u64>,
}

impl CampaignReport {
    pub fn resample_rate(&self) -> f64 {
        let n = self.sets.first().map_or(0, |s| s.samples.len());
        if n == 0 {
            0.0
        } else {
            self.resamples as f64 / (self.resamples + n) as f64
        }
    }

    /// Empirical `P[θ]` at the serving BS.
    pub fn serving_theta_pmf(&self) -> Vec<f64> {
        let total: u64 = self.serving_theta_hist.iter().sum();
        self.serving_theta_hist.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
    }
}

struct TopologyOutcome {
    cstp: Vec<f64>,
    resamples: usize,
    load_sum: u64,
    load_count: u64,
    theta: usize,
    request: usize,
}

/// Run the campaign once and evaluate the CSTP at every threshold in `taus`.
pub fn run_campaign_multi(
    cfg: &NetworkConfig,
    mc: &MonteCarloConfig,
    taus: &[f64],
    exec: Execution,
) -> Result<CampaignReport> {
    run_campaign_with(TopologySampler::new(cfg, mc)?, cfg, mc, taus, exec)
}

/// As [`run_campaign_multi`] with a caller-built sampler.
pub fn run_campaign_with(
    sampler: TopologySampler,
    cfg: &NetworkConfig,
    mc: &MonteCarloConfig,
    taus: &[f64],
    exec: Execution,
) -> Result<CampaignReport> {
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0)) {
        return Err(invalid("tau", format!("must be nonnegative, got {t}")));
    }
    let outcomes = map_indexed(exec, mc.n_topologies, |i| -> Result<TopologyOutcome> {
        let mut rng = topology_rng(mc.seed, i);
        let (topo, resamples) = sampler.sample_until_served(&mut rng)?;
        let mut fading = fading_rng(mc.seed, i);
        let mut sir = sir_samples(&topo, cfg, mc.n_fading, &mut fading);
        sir.sort_by(f64::total_cmp);
        let (load_sum, load_count) =
            topo.interior_loads(mc.guard_radius).fold((0u64, 0u64), |(s, c), r| (s + r as u64, c + 1));
        Ok(TopologyOutcome {
            cstp: taus.iter().map(|&t| fraction_above(&sir, t)).collect(),
            resamples,
            load_sum,
            load_count,
            theta: topo.satisfied_at_serving,
            request: topo.typical_request,
        })
    });
    let hash = cfg.hash();
    let mut sets: Vec<CstpSampleSet> = taus
        .iter()
        .map(|&tau| CstpSampleSet {
            tau,
            samples: Vec::with_capacity(mc.n_topologies),
            config_hash: hash.clone(),
            seed: mc.seed,
        })
        .collect();
    let mut resamples = 0;
    let (mut load_sum, mut load_count) = (0u64, 0u64);
    let mut theta_hist = vec![0u64; cfg.l + 1];
    let mut request_hist = vec![0u64; cfg.cache_design()?.n_c];
    for o in outcomes {
        let o = o?;
        for (set, v) in sets.iter_mut().zip(o.cstp) {
            set.samples.push(v);
        }
        resamples += o.resamples;
        load_sum += o.load_sum;
        load_count += o.load_count;
        theta_hist[o.theta] += 1;
        request_hist[o.request] += 1;
    }
    Ok(CampaignReport {
        sets,
        resamples,
        interior_load_mean: load_sum as f64 / load_count.max(1) as f64,
        interior_bs_count: load_count,
        serving_theta_hist: theta_hist,
        request_hist,
    })
}

/// CSTP samples at a single threshold.
pub fn run_campaign(cfg: &NetworkConfig, mc: &MonteCarloConfig, tau: f64, exec: Execution) -> Result<CstpSampleSet> {
    let mut report = run_campaign_multi(cfg, mc, &[tau], exec)?;
    Ok(report.sets.remove(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSummary {
    pub stp: f64,
    /// Unbiased sample variance of the CSTP.
    pub variance: f64,
    /// Half-width of the normal 95% interval on `stp`.
    pub ci95: f64,
    /// `(x, fraction of samples > x)`.
    pub ccdf: Vec<(f64, f64)>,
}

pub fn empirical_summaries(samples: &[f64], x_grid: &[f64]) -> Result<EmpiricalSummary> {
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one sample"));
    }
    let n = samples.len() as f64;
    let stp = samples.iter().sum::<f64>() / n;
    let variance = if samples.len() > 1 {
        samples.iter().map(|v| (v - stp) * (v - stp)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ccdf = x_grid
        .iter()
        .map(|&x| {
            let at_most = sorted.partition_point(|&s| s <= x);
            (x, (sorted.len() - at_most) as f64 / n)
        })
        .collect();
    Ok(EmpiricalSummary { stp, variance, ci95: 1.96 * (variance / n).sqrt(), ccdf })
}

/// `n` uniform points over `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1).max(1) as f64).collect()
}

/// `k/n` for `k = 1..n`, the open unit interval without its endpoints.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (1..n).map(|k| k as f64 / n as f64).collect()
}

/// Largest `|model(x) - empirical CCDF(x)|` over `grid`, with its location.
pub fn ccdf_sup_gap(samples: &[f64], grid: &[f64], model: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let emp = empirical_summaries(samples, grid)?;
    let mut worst = (0.0, grid.first().copied().unwrap_or(0.0));
    for &(x, f) in &emp.ccdf {
        let gap = (model(x)? - f).abs();
        if gap > worst.0 {
            worst = (gap, x);
        }
    }
    Ok(worst)
}
