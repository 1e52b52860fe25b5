//! Monte-Carlo model of why competition keeps a map for a trained net.
//!
//! The chosen label's gradient `g1 = (h1, xi1)` and a rival's gradient
//! `g2 = (h2, xi2)` share their first `n/2` coordinates through
//! `h1 . h2 = overlap`; every half-vector is a unit vector. The input is a
//! `N(0, 1/n)^n` draw conditioned on `g1 . x = delta`, built by projecting
//! out the `g1` component and adding it back at level `delta`. This is the
//! boundary slice of the event `g1 . x >= delta`, where the conditional
//! mass concentrates once `delta` is many standard deviations out.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, gaussian_vec};

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConfig {
    /// Dimension; must be even.
    pub n: usize,
    pub delta: f64,
    /// Target `h1 . h2`.
    pub overlap: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            delta: 0.15,
            overlap: 0.5,
            trials: 100,
            seed: 0,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("n must be even and positive, got {}", self.n)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::InvalidArgument(format!("overlap must lie in [0, 1], got {}", self.overlap)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// One draw of the model.
#[derive(Debug, Clone)]
pub struct ModelSample {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub x: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_direction(rng: &mut rng::Rng, len: usize) -> Vec<f64> {
    let mut v = gaussian_vec(rng, len, 1.0);
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|e| *e /= norm);
    v
}

pub fn sample_model(cfg: &TheoryConfig, trial_seed: u64) -> Result<ModelSample> {
    cfg.validate()?;
    let half = cfg.n / 2;
    let mut rng = rng::seeded(trial_seed);

    let h1 = unit_direction(&mut rng, half);
    let mut u = gaussian_vec(&mut rng, half, 1.0);
    let proj = dot(&u, &h1);
    u.iter_mut().zip(&h1).for_each(|(ui, hi)| *ui -= proj * hi);
    let un = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|e| *e /= un);
    let side = (1.0 - cfg.overlap * cfg.overlap).max(0.0).sqrt();
    let h2: Vec<f64> = h1.iter().zip(&u).map(|(a, b)| cfg.overlap * a + side * b).collect();
    let xi1 = unit_direction(&mut rng, half);
    let xi2 = unit_direction(&mut rng, half);

    let g1: Vec<f64> = h1.into_iter().chain(xi1).collect();
    let g2: Vec<f64> = h2.into_iter().chain(xi2).collect();

    let z = gaussian_vec(&mut rng, cfg.n, 1.0 / (cfg.n as f64).sqrt());
    let g1_sq = dot(&g1, &g1);
    let shift = (cfg.delta - dot(&g1, &z)) / g1_sq;
    let x = z.iter().zip(&g1).map(|(zi, gi)| zi + shift * gi).collect();
    Ok(ModelSample { g1, g2, x })
}

/// Outcome of competing `g1 . x` against `g2 . x`, coordinate by coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitionScore {
    /// Retained first-half sum over `delta / 2`.
    pub c1: f64,
    /// Retained second-half sum over `delta / 2`.
    pub c2: f64,
    pub survivors: Vec<bool>,
}

impl CompetitionScore {
    pub fn survival_fractions(&self) -> (f64, f64) {
        let half = self.survivors.len() / 2;
        let frac = |s: &[bool]| s.iter().filter(|&&b| b).count() as f64 / s.len().max(1) as f64;
        (frac(&self.survivors[..half]), frac(&self.survivors[half..]))
    }
}

pub fn compete_and_score(g1: &[f64], g2: &[f64], x: &[f64], delta: f64) -> Result<CompetitionScore> {
    if g1.len() != x.len() || g2.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: g1 {}, g2 {}, x {}",
            g1.len(),
            g2.len(),
            x.len()
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    let half = x.len() / 2;
    let (mut first, mut second) = (0.0, 0.0);
    let survivors: Vec<bool> = (0..x.len())
        .map(|i| {
            let s = g1[i] * x[i];
            let t = g2[i] * x[i];
            let keep = (s > 0.0 && s >= t) || (s < 0.0 && s <= t);
            if keep {
                if i < half {
                    first += s;
                } else {
                    second += s;
                }
            }
            keep
        })
        .collect();
    Ok(CompetitionScore {
        c1: first / (delta / 2.0),
        c2: second / (delta / 2.0),
        survivors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryResult {
    pub config: TheoryConfig,
    /// `(h1, 0) . x`, predicted near `delta / 2`.
    pub shared_dot_g1: MeanStderr,
    /// `(h2, 0) . x`, predicted near `overlap * delta / 2`.
    pub shared_dot_g2: MeanStderr,
    pub c1: MeanStderr,
    pub c2: MeanStderr,
    pub survival_shared: MeanStderr,
    pub survival_private: MeanStderr,
}

struct TrialOutcome {
    dot_g1: f64,
    dot_g2: f64,
    c1: f64,
    c2: f64,
    surv1: f64,
    surv2: f64,
}

fn run_trial(cfg: &TheoryConfig, trial: usize) -> Result<TrialOutcome> {
    let sample = sample_model(cfg, rng::derive_seed(cfg.seed, trial as u64))?;
    let half = cfg.n / 2;
    let dot_g1 = dot(&sample.g1[..half], &sample.x[..half]);
    let dot_g2 = dot(&sample.g2[..half], &sample.x[..half]);
    let score = compete_and_score(&sample.g1, &sample.g2, &sample.x, cfg.delta)?;
    let (surv1, surv2) = score.survival_fractions();
    Ok(TrialOutcome {
        dot_g1,
        dot_g2,
        c1: score.c1,
        c2: score.c2,
        surv1,
        surv2,
    })
}

/// Runs `cfg.trials` independent trials (in parallel, each with its own
/// derived seed) and aggregates them in trial order.
pub fn run_theory(cfg: &TheoryConfig) -> Result<TheoryResult> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&TrialOutcome) -> f64| MeanStderr::of(&outcomes.iter().map(f).collect::<Vec<_>>());
    Ok(TheoryResult {
        config: cfg.clone(),
        shared_dot_g1: col(|o| o.dot_g1),
        shared_dot_g2: col(|o| o.dot_g2),
        c1: col(|o| o.c1),
        c2: col(|o| o.c2),
        survival_shared: col(|o| o.surv1),
        survival_private: col(|o| o.surv2),
    })
}

pub const DEFAULT_DELTA_GRID: [f64; 7] = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];

/// One [`run_theory`] per delta, all sharing `base`'s seed, n, overlap and trials.
pub fn delta_sweep(base: &TheoryConfig, deltas: &[f64]) -> Result<Vec<TheoryResult>> {
    deltas
        .iter()
        .map(|&delta| run_theory(&TheoryConfig { delta, ..base.clone() }))
        .collect()
}

pub fn sweep_csv(results: &[TheoryResult]) -> String {
    let mut out = String::from("delta,c1_mean,c1_stderr,c2_mean,c2_stderr\n");
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.config.delta, r.c1.mean, r.c1.stderr, r.c2.mean, r.c2.stderr
        )
        .unwrap();
    }
    out
}

/// Which rule decides whether label 0 keeps a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WinRule {
    /// Label 0 gives the highest score (ties kept). Survival is `1/k`.
    HighestScore,
    /// The full competitive rule: positive and maximal, or negative and
    /// minimal. For i.i.d. sign-symmetric scores survival is
    /// `2/k * (1 - 2^-k)`, since either tail can be won.
    Competitive,
}

fn survival_fraction(k: usize, d: usize, trials: usize, seed: u64, rule: WinRule) -> Result<f64> {
    if k == 0 || d == 0 || trials == 0 {
        return Err(Error::InvalidArgument("k, d and trials must be positive".into()));
    }
    if k == 1 {
        return Ok(1.0);
    }
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, t as u64);
            let mut won = 0usize;
            let mut scores = vec![0.0; k];
            for _ in 0..d {
                for v in scores.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let s = scores[0];
                let rivals = &scores[1..];
                let wins = match rule {
                    WinRule::HighestScore => rivals.iter().all(|&v| s >= v),
                    WinRule::Competitive if s > 0.0 => rivals.iter().all(|&v| s >= v),
                    WinRule::Competitive if s < 0.0 => rivals.iter().all(|&v| s <= v),
                    WinRule::Competitive => false,
                };
                won += wins as usize;
            }
            won as f64 / d as f64
        })
        .collect();
    Ok(per_trial.iter().sum::<f64>() / trials as f64)
}

/// Fraction of coordinates kept by label 0 when `k` labels carry i.i.d.
/// standard-normal scores and a coordinate is kept only where label 0
/// gives the highest score; averaged over `trials` vectors of length `d`.
pub fn survival_fraction_iid(k: usize, d: usize, trials: usize, seed: u64) -> Result<f64> {
    survival_fraction(k, d, trials, seed, WinRule::HighestScore)
}

/// As [`survival_fraction_iid`] but under the full competitive rule.
pub fn survival_fraction_iid_competitive(k: usize, d: usize, trials: usize, seed: u64) -> Result<f64> {
    survival_fraction(k, d, trials, seed, WinRule::Competitive)
}

/// Closed form of [`survival_fraction_iid_competitive`] for continuous
/// sign-symmetric scores.
pub fn competitive_survival_expected(k: usize) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    2.0 / k as f64 * (1.0 - 0.5f64.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_hits_delta_and_overlap() {
        for (i, &overlap) in [0.0, 0.5, 0.9, 1.0].iter().enumerate() {
            let cfg = TheoryConfig {
                n: 200,
                overlap,
                ..TheoryConfig::default()
            };
            let s = sample_model(&cfg, i as u64).unwrap();
            assert!((dot(&s.g1, &s.x) - cfg.delta).abs() <= 1e-10);
            assert!((dot(&s.g1[..100], &s.g2[..100]) - overlap).abs() <= 1e-12);
            for v in [&s.g1[..100], &s.g1[100..], &s.g2[..100], &s.g2[100..]] {
                assert!((dot(v, v) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identical_rival_keeps_everything() {
        let s = sample_model(&TheoryConfig { n: 500 * 2, ..TheoryConfig::default() }, 3).unwrap();
        let score = compete_and_score(&s.g1, &s.g1, &s.x, 0.15).unwrap();
        let zero = s.x.iter().zip(&s.g1).filter(|(a, b)| *a * *b == 0.0).count();
        assert_eq!(score.survivors.iter().filter(|&&b| b).count() + zero, 1000);
        assert!((score.c1 + score.c2 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn opposed_rival_never_wins() {
        let s = sample_model(&TheoryConfig { n: 100, ..TheoryConfig::default() }, 4).unwrap();
        let neg: Vec<f64> = s.g1.iter().map(|v| -v).collect();
        let score = compete_and_score(&s.g1, &neg, &s.x, 0.15).unwrap();
        assert!(score.survivors.iter().all(|&b| b));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(compete_and_score(&[1.0], &[1.0, 2.0], &[1.0], 0.1).is_err());
        assert!(TheoryConfig { n: 7, ..TheoryConfig::default() }.validate().is_err());
    }

    #[test]
    fn iid_edge_cases() {
        assert_eq!(survival_fraction_iid(1, 10, 1, 0).unwrap(), 1.0);
        assert_eq!(survival_fraction_iid_competitive(1, 10, 1, 0).unwrap(), 1.0);
        assert!(survival_fraction_iid(0, 10, 1, 0).is_err());
        assert_eq!(competitive_survival_expected(2), 0.75);
    }

    #[test]
    fn competitive_rule_matches_enumeration_for_small_k() {
        // Exact check of the closed form by Monte Carlo over orderings:
        // label 0 wins iff it is the max of k and positive, or the min and negative.
        // P(max and positive) = (1/k) * P(max of k > 0) = (1/k) * (1 - 2^-k).
        for k in 2..=5 {
            let mc = survival_fraction_iid_competitive(k, 200_000, 1, k as u64).unwrap();
            let expected = competitive_survival_expected(k);
            assert!((mc - expected).abs() < 0.005, "k={k}: {mc} vs {expected}");
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let cfg = TheoryConfig {
            n: 400,
            trials: 16,
            ..TheoryConfig::default()
        };
        let par = run_theory(&cfg).unwrap();
        let serial: Vec<f64> = (0..16).map(|t| run_trial(&cfg, t).unwrap().c1).collect();
        assert_eq!(par.c1, MeanStderr::of(&serial));
    }

    #[test]
    fn csv_layout() {
        let base = TheoryConfig {
            n: 100,
            trials: 3,
            ..TheoryConfig::default()
        };
        let rows = delta_sweep(&base, &[0.1, 0.2]).unwrap();
        let csv = sweep_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "delta,c1_mean,c1_stderr,c2_mean,c2_stderr");
        assert!(lines[1].starts_with("0.1,"));
        assert_eq!(lines.len(), 3);
    }
}
