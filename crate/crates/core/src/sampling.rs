//! Collocation point sets on a 1-D time interval.
//!
//! Random strategies draw from a ChaCha8 stream seeded with the caller's
//! seed on stream 1; network initialization uses stream 0 of the same seed,
//! so a run's sampling and initialization are decorrelated.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config(format!("empty or invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// `n` equidistant points, endpoints included.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => {
                let step = self.width() / (n - 1) as f64;
                (0..n)
                    .map(|i| if i + 1 == n { self.hi } else { self.lo + i as f64 * step })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Grid,
    Lhs,
    Uniform,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Grid => "grid",
            Strategy::Lhs => "lhs",
            Strategy::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Strategy::Grid),
            // "random" is how the study literature names the stratified baseline
            "lhs" | "random" => Ok(Strategy::Lhs),
            "uniform" => Ok(Strategy::Uniform),
            other => Err(Error::config(format!("unknown sampling strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub points: Vec<f64>,
    pub strategy: Strategy,
    pub seed: u64,
    pub domain: Interval,
}

impl CollocationSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn sample_grid(n: usize, domain: Interval) -> Result<CollocationSet> {
    if n < 2 {
        return Err(Error::config(format!("grid sampling needs n >= 2, got {n}")));
    }
    Interval::new(domain.lo, domain.hi)?;
    Ok(CollocationSet { points: domain.linspace(n), strategy: Strategy::Grid, seed: 0, domain })
}

/// One uniform draw in each of `n` equal-width strata.
pub fn sample_lhs(n: usize, domain: Interval, seed: u64) -> Result<CollocationSet> {
    if n < 1 {
        return Err(Error::config("lhs sampling needs n >= 1"));
    }
    Interval::new(domain.lo, domain.hi)?;
    let mut rng = rng_for(seed);
    let points = (0..n)
        .map(|i| {
            let u: f64 = rng.gen();
            (domain.lo + domain.width() * ((i as f64 + u) / n as f64)).min(domain.hi)
        })
        .collect();
    Ok(CollocationSet { points, strategy: Strategy::Lhs, seed, domain })
}

pub fn sample_uniform(n: usize, domain: Interval, seed: u64) -> Result<CollocationSet> {
    if n < 1 {
        return Err(Error::config("uniform sampling needs n >= 1"));
    }
    Interval::new(domain.lo, domain.hi)?;
    let mut rng = rng_for(seed);
    let mut points: Vec<f64> = (0..n).map(|_| rng.gen_range(domain.lo..=domain.hi)).collect();
    points.sort_by(f64::total_cmp);
    Ok(CollocationSet { points, strategy: Strategy::Uniform, seed, domain })
}

pub fn sample(strategy: Strategy, n: usize, domain: Interval, seed: u64) -> Result<CollocationSet> {
    match strategy {
        Strategy::Grid => sample_grid(n, domain),
        Strategy::Lhs => sample_lhs(n, domain, seed),
        Strategy::Uniform => sample_uniform(n, domain, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Strategy;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn grid_examples() {
        let d = Interval::new(0.0, 20.0).unwrap();
        assert_eq!(sample_grid(2, d).unwrap().points, vec![0.0, 20.0]);
        let g = sample_grid(12, d).unwrap().points;
        assert_eq!(g.len(), 12);
        assert!((g[1] - 20.0 / 11.0).abs() < 1e-12);
        assert!((g[2] - 40.0 / 11.0).abs() < 1e-12);
        assert!((g[1] - 1.8182).abs() < 1e-4 && (g[2] - 3.6364).abs() < 1e-4);
        assert_eq!(sample_grid(5, unit()).unwrap().points, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(sample_grid(1, unit()).is_err());
        assert!(sample_grid(4, Interval { lo: 1.0, hi: 1.0 }).is_err());
        assert!(sample_lhs(0, unit(), 0).is_err());
        assert!(sample_uniform(0, unit(), 0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!("sobol".parse::<Strategy>().is_err());
    }

    #[test]
    fn lhs_one_point_per_quarter() {
        for seed in 0..20 {
            let s = sample_lhs(4, unit(), seed).unwrap().points;
            for (i, &x) in s.iter().enumerate() {
                let lo = i as f64 * 0.25;
                assert!(x >= lo && x <= lo + 0.25, "seed {seed}: {x} not in stratum {i}");
            }
        }
        let one = sample_lhs(1, Interval::new(0.0, 20.0).unwrap(), 11).unwrap();
        assert!(one.points.len() == 1 && (0.0..=20.0).contains(&one.points[0]));
    }

    #[test]
    fn random_strategies_are_deterministic() {
        let d = Interval::new(0.0, 20.0).unwrap();
        assert_eq!(sample_lhs(17, d, 5).unwrap(), sample_lhs(17, d, 5).unwrap());
        assert_eq!(sample_uniform(17, d, 5).unwrap(), sample_uniform(17, d, 5).unwrap());
        assert_ne!(sample_lhs(17, d, 5).unwrap().points, sample_lhs(17, d, 6).unwrap().points);
    }

    #[test]
    fn uniform_mean_converges() {
        let d = Interval::new(0.0, 20.0).unwrap();
        let s = sample_uniform(100_000, d, 3).unwrap().points;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 10.0).abs() < 20.0 * 0.01, "mean {mean}");
    }

    #[test]
    fn lhs_gap_bound_over_seeds() {
        let d = Interval::new(0.0, 20.0).unwrap();
        for seed in 0..1000 {
            let p = sample_lhs(32, d, seed).unwrap().points;
            let max_gap = p.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            assert!(max_gap <= 2.0 * 20.0 / 32.0);
        }
    }

    proptest! {
        #[test]
        fn all_strategies_sorted_in_domain(
            n in 2usize..200,
            seed in any::<u64>(),
            lo in -50.0f64..50.0,
            width in 0.1f64..100.0,
        ) {
            let d = Interval::new(lo, lo + width).unwrap();
            for strategy in [Strategy::Grid, Strategy::Lhs, Strategy::Uniform] {
                let s = sample(strategy, n, d, seed).unwrap();
                prop_assert_eq!(s.points.len(), n);
                prop_assert!(s.points.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(s.points.iter().all(|&t| d.contains(t)));
            }
        }

        #[test]
        fn grid_spacing_is_uniform(n in 2usize..500, width in 0.5f64..100.0) {
            let d = Interval::new(0.0, width).unwrap();
            let p = sample_grid(n, d).unwrap().points;
            let h = width / (n - 1) as f64;
            for w in p.windows(2) {
                prop_assert!((w[1] - w[0] - h).abs() <= 1e-12 * width.max(1.0));
            }
        }
    }
}
