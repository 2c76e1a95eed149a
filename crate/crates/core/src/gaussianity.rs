//! Non-Gaussianity diagnostics: Genoni entropy measure, fourth-order
//! cumulants and a homodyne sampling oracle.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::CovMatrix;
use crate::entanglement::symplectic_eigenvalues;
use crate::error::{Error, Result};

const PHYSICAL_TOL: f64 = 1e-9;

/// `x ln x`, zero at the origin.
fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropy of one mode with symplectic eigenvalue `d/2`.
fn mode_entropy(d: f64) -> f64 {
    xlnx((d + 1.0) / 2.0) - xlnx((d - 1.0) / 2.0)
}

/// Von Neumann entropy of the Gaussian state with covariance `V`, in nats.
pub fn genoni_delta(v: &CovMatrix) -> Result<f64> {
    let nu = symplectic_eigenvalues(v)?;
    if !nu.is_physical(PHYSICAL_TOL) {
        return Err(Error::Unphysical(format!("symplectic eigenvalue {:e} < 1/2", nu.min())));
    }
    Ok(nu.values().iter().map(|n| mode_entropy(2.0 * n.max(0.5))).sum())
}

pub fn delta_difference(squeezed: &CovMatrix, baseline: &CovMatrix) -> Result<f64> {
    Ok(genoni_delta(squeezed)? - genoni_delta(baseline)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantEstimator {
    /// `⟨QjQkQℓQp⟩ − 3⟨QjQk⟩⟨QℓQp⟩`.
    PaperLiteral,
    /// Subtracts all three pairings; zero for every Gaussian state.
    TrueMultivariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantSource {
    AnalyticWick,
    MonteCarlo { n_samples: usize, seed: u64 },
}

/// Dense fourth-order tensor over the four output quadratures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTensor {
    entries: Vec<f64>,
    pub estimator: CumulantEstimator,
    pub source: CumulantSource,
}

const QUADS: usize = 4;

#[inline]
fn idx(j: usize, k: usize, l: usize, p: usize) -> usize {
    ((j * QUADS + k) * QUADS + l) * QUADS + p
}

impl CumulantTensor {
    pub fn zeros(estimator: CumulantEstimator, source: CumulantSource) -> Self {
        Self {
            entries: vec![0.0; QUADS.pow(4)],
            estimator,
            source,
        }
    }

    pub fn get(&self, j: usize, k: usize, l: usize, p: usize) -> f64 {
        self.entries[idx(j, k, l, p)]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

fn subtract_pairings(moment: impl Fn(usize, usize, usize, usize) -> f64, cov: &DMatrix<f64>, estimator: CumulantEstimator) -> Vec<f64> {
    let mut out = vec![0.0; QUADS.pow(4)];
    for j in 0..QUADS {
        for k in 0..QUADS {
            for l in 0..QUADS {
                for p in 0..QUADS {
                    let sub = match estimator {
                        CumulantEstimator::PaperLiteral => 3.0 * cov[(j, k)] * cov[(l, p)],
                        CumulantEstimator::TrueMultivariate => {
                            cov[(j, k)] * cov[(l, p)] + cov[(j, l)] * cov[(k, p)] + cov[(j, p)] * cov[(k, l)]
                        }
                    };
                    out[idx(j, k, l, p)] = moment(j, k, l, p) - sub;
                }
            }
        }
    }
    out
}

fn require_two_modes(v: &CovMatrix) -> Result<()> {
    if v.dim() != QUADS {
        return Err(Error::Dimension(format!("four quadratures required, got {}", v.dim())));
    }
    Ok(())
}

/// Fourth moment of a zero-mean Gaussian by Wick pairing.
pub fn wick_moment(v: &DMatrix<f64>, j: usize, k: usize, l: usize, p: usize) -> f64 {
    v[(j, k)] * v[(l, p)] + v[(j, l)] * v[(k, p)] + v[(j, p)] * v[(k, l)]
}

pub fn fourth_cumulant(v: &CovMatrix, estimator: CumulantEstimator, source: CumulantSource) -> Result<CumulantTensor> {
    require_two_modes(v)?;
    let entries = match source {
        CumulantSource::AnalyticWick => {
            let m = v.entries();
            subtract_pairings(|j, k, l, p| wick_moment(m, j, k, l, p), m, estimator)
        }
        CumulantSource::MonteCarlo { n_samples, seed } => {
            let samples = sample_homodyne(v, n_samples, seed)?;
            let moments = empirical_moments(&samples);
            subtract_pairings(|j, k, l, p| moments.fourth[idx(j, k, l, p)], &moments.second, estimator)
        }
    };
    Ok(CumulantTensor {
        entries,
        estimator,
        source,
    })
}

/// `δ_κ = Σ |κ_jkℓp|` over all 256 entries.
pub fn kappa_magnitude(kappa: &CumulantTensor) -> f64 {
    kappa.entries.iter().map(|x| x.abs()).sum()
}

/// `Δδ_κ` between two tensors.
pub fn kappa_diff(squeezed: &CumulantTensor, baseline: &CumulantTensor) -> f64 {
    kappa_magnitude(squeezed) - kappa_magnitude(baseline)
}

/// Draws `n` zero-mean Gaussian quadrature records with covariance `V`,
/// one per row. Bit-identical for a fixed seed.
pub fn sample_homodyne(v: &CovMatrix, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Argument("sample count must be positive".into()));
    }
    let dim = v.dim();
    let chol = v.entries().clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    let mut z = vec![0.0; dim];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for r in 0..dim {
            let mut acc = 0.0;
            for c in 0..=r {
                acc += l[(r, c)] * z[c];
            }
            data.push(acc);
        }
    }
    Ok(DMatrix::from_row_slice(n, dim, &data))
}

/// Sample moments of zero-mean quadrature records.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub n_samples: usize,
    /// `⟨QjQk⟩`.
    pub second: DMatrix<f64>,
    /// `⟨QjQkQℓQp⟩`, flattened like [`CumulantTensor`].
    pub fourth: Vec<f64>,
    /// Standard error of each fourth moment.
    pub fourth_stderr: Vec<f64>,
    /// Standard error of each second moment.
    pub second_stderr: DMatrix<f64>,
}

const CHUNK: usize = 8192;

#[derive(Clone)]
struct Sums {
    s2: [f64; 16],
    s2sq: [f64; 16],
    s4: Vec<f64>,
    s4sq: Vec<f64>,
}

impl Sums {
    fn new() -> Self {
        Self {
            s2: [0.0; 16],
            s2sq: [0.0; 16],
            s4: vec![0.0; 256],
            s4sq: vec![0.0; 256],
        }
    }

    fn merge(mut self, other: &Sums) -> Self {
        for i in 0..16 {
            self.s2[i] += other.s2[i];
            self.s2sq[i] += other.s2sq[i];
        }
        for i in 0..256 {
            self.s4[i] += other.s4[i];
            self.s4sq[i] += other.s4sq[i];
        }
        self
    }
}

/// Moments with standard errors. Partial sums are taken over fixed-size
/// chunks and combined in order, so the result does not depend on the
/// thread count.
pub fn empirical_moments(samples: &DMatrix<f64>) -> EmpiricalMoments {
    assert_eq!(samples.ncols(), QUADS, "four quadrature columns expected");
    let n = samples.nrows();
    let rows: Vec<[f64; 4]> = (0..n)
        .map(|i| [samples[(i, 0)], samples[(i, 1)], samples[(i, 2)], samples[(i, 3)]])
        .collect();
    let partials: Vec<Sums> = rows
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = Sums::new();
            for q in chunk {
                let mut pair = [0.0; 16];
                for j in 0..4 {
                    for k in 0..4 {
                        pair[j * 4 + k] = q[j] * q[k];
                    }
                }
                for a in 0..16 {
                    s.s2[a] += pair[a];
                    s.s2sq[a] += pair[a] * pair[a];
                    for b in 0..16 {
                        let x = pair[a] * pair[b];
                        s.s4[a * 16 + b] += x;
                        s.s4sq[a * 16 + b] += x * x;
                    }
                }
            }
            s
        })
        .collect();
    let total = partials.iter().fold(Sums::new(), |acc, s| acc.merge(s));
    let nf = n as f64;
    let stderr = |sum: f64, sumsq: f64| {
        let mean = sum / nf;
        if n < 2 {
            return f64::INFINITY;
        }
        let var = ((sumsq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    };
    EmpiricalMoments {
        n_samples: n,
        second: DMatrix::from_fn(4, 4, |j, k| total.s2[j * 4 + k] / nf),
        second_stderr: DMatrix::from_fn(4, 4, |j, k| stderr(total.s2[j * 4 + k], total.s2sq[j * 4 + k])),
        fourth: total.s4.iter().map(|s| s / nf).collect(),
        fourth_stderr: total.s4.iter().zip(&total.s4sq).map(|(s, q)| stderr(*s, *q)).collect(),
    }
}

/// Scalar prefactor `4 r₁ r₂ sin(θ − φ)` of the angle-difference term in
/// the product of two squeeze operators.
pub fn bch_angle_coefficient(r1: f64, theta: f64, r2: f64, phi: f64) -> f64 {
    4.0 * r1 * r2 * (theta - phi).sin()
}

/// Independent seed for grid point `index`, so parallel sweeps draw the
/// same numbers regardless of scheduling.
pub fn point_seed(base_seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(base_seed) ^ index)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianityResult {
    pub genoni_delta: f64,
    pub delta_diff: f64,
    /// δ_κ with the literal estimator.
    pub kappa_magnitude: f64,
    /// δ_κ with the true multivariate estimator.
    pub kappa_true: f64,
    pub kappa_diff: f64,
}

/// All analytic Gaussianity metrics of `v` relative to `baseline`.
pub fn evaluate(v: &CovMatrix, baseline: &CovMatrix) -> Result<GaussianityResult> {
    let delta = genoni_delta(v)?;
    let delta0 = genoni_delta(baseline)?;
    let lit = fourth_cumulant(v, CumulantEstimator::PaperLiteral, CumulantSource::AnalyticWick)?;
    let lit0 = fourth_cumulant(baseline, CumulantEstimator::PaperLiteral, CumulantSource::AnalyticWick)?;
    let tru = fourth_cumulant(v, CumulantEstimator::TrueMultivariate, CumulantSource::AnalyticWick)?;
    Ok(GaussianityResult {
        genoni_delta: delta,
        delta_diff: delta - delta0,
        kappa_magnitude: kappa_magnitude(&lit),
        kappa_true: kappa_magnitude(&tru),
        kappa_diff: kappa_diff(&lit, &lit0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{apply_loss, beamsplitter_mix};
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn genoni_examples() {
        assert_eq!(genoni_delta(&CovMatrix::vacuum(2)).unwrap(), 0.0);
        assert!((genoni_delta(&CovMatrix::thermal(1.0, 1)).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        for s in [0.2, 0.9] {
            assert!(genoni_delta(&CovMatrix::tmsv(s)).unwrap().abs() < 1e-10);
        }
        // (n̄+1)ln(n̄+1) − n̄ ln n̄
        let n: f64 = 2.5;
        let want = (n + 1.0) * (n + 1.0).ln() - n * n.ln();
        assert!((genoni_delta(&CovMatrix::thermal(n, 1)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn genoni_is_additive() {
        let a = apply_loss(&CovMatrix::tmsv(0.6), 0.3).unwrap();
        let b = CovMatrix::thermal(0.4, 1);
        let sum = genoni_delta(&a.direct_sum(&b)).unwrap();
        assert!((sum - genoni_delta(&a).unwrap() - genoni_delta(&b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn delta_difference_examples() {
        let v = CovMatrix::tmsv(0.3);
        assert_eq!(delta_difference(&v, &v).unwrap(), 0.0);
        let d = delta_difference(&CovMatrix::vacuum(1), &CovMatrix::thermal(1.0, 1)).unwrap();
        assert!((d + 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn literal_cumulant_on_vacuum() {
        let k = fourth_cumulant(&CovMatrix::vacuum(2), CumulantEstimator::PaperLiteral, CumulantSource::AnalyticWick)
            .unwrap();
        assert_eq!(k.get(0, 0, 0, 0), 0.0);
        assert_eq!(k.get(0, 0, 1, 1), -0.5);
        // brute force: κ = δjℓδkp/4 + δjpδkℓ/4 − 2δjkδℓp/4
        let d = |a: usize, b: usize| -> f64 { if a == b { 1.0 } else { 0.0 } };
        let mut sum = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    for p in 0..4 {
                        sum += ((d(j, l) * d(k, p) + d(j, p) * d(k, l) - 2.0 * d(j, k) * d(l, p)) / 4.0).abs();
                    }
                }
            }
        }
        assert_eq!(sum, 12.0);
        assert_eq!(kappa_magnitude(&k), sum);
    }

    #[test]
    fn literal_cumulant_symmetry() {
        let v = beamsplitter_mix(&CovMatrix::squeezed_vacuum(0.4, 0.2).direct_sum(&CovMatrix::thermal(0.3, 1)), 0.4)
            .unwrap();
        let k = fourth_cumulant(&v, CumulantEstimator::PaperLiteral, CumulantSource::AnalyticWick).unwrap();
        let mut pair_swap_broken = false;
        for j in 0..4 {
            for kk in 0..4 {
                for l in 0..4 {
                    for p in 0..4 {
                        assert!((k.get(j, kk, l, p) - k.get(kk, j, l, p)).abs() < 1e-15);
                        assert!((k.get(j, kk, l, p) - k.get(j, kk, p, l)).abs() < 1e-15);
                        if (k.get(j, kk, l, p) - k.get(j, l, kk, p)).abs() > 1e-6 {
                            pair_swap_broken = true;
                        }
                    }
                }
            }
        }
        assert!(pair_swap_broken);
    }

    #[test]
    fn true_cumulant_vanishes() {
        let v = apply_loss(&CovMatrix::tmsv(0.8), 0.2).unwrap().rotate_mode(0, 0.4).unwrap();
        let k = fourth_cumulant(&v, CumulantEstimator::TrueMultivariate, CumulantSource::AnalyticWick).unwrap();
        assert!(k.entries().iter().all(|x| x.abs() < 1e-12));
        assert_eq!(kappa_diff(&k, &k), 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let v = CovMatrix::tmsv(0.3);
        let a = sample_homodyne(&v, 1000, 7).unwrap();
        let b = sample_homodyne(&v, 1000, 7).unwrap();
        let c = sample_homodyne(&v, 1000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.shape(), (1000, 4));
        assert!(sample_homodyne(&v, 0, 7).is_err());
    }

    #[test]
    fn vacuum_sample_covariance() {
        let m = empirical_moments(&sample_homodyne(&CovMatrix::vacuum(2), 1_000_000, 11).unwrap());
        for j in 0..4 {
            for k in 0..4 {
                let want = if j == k { 0.5 } else { 0.0 };
                assert!((m.second[(j, k)] - want).abs() < 5.0 * m.second_stderr[(j, k)]);
            }
        }
    }

    #[test]
    fn non_psd_sampling_fails() {
        let mut e = DMatrix::identity(4, 4) * 0.5;
        e[(0, 0)] = -1.0;
        let v = CovMatrix::new(e).unwrap();
        assert!(matches!(sample_homodyne(&v, 10, 0), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn monte_carlo_error_shrinks_with_samples() {
        let v = CovMatrix::tmsv(0.3);
        let worst = |n: usize| {
            let m = empirical_moments(&sample_homodyne(&v, n, 3).unwrap());
            let mut e: f64 = 0.0;
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        for p in 0..4 {
                            e = e.max((m.fourth[idx(j, k, l, p)] - wick_moment(v.entries(), j, k, l, p)).abs());
                        }
                    }
                }
            }
            e
        };
        let (small, large) = (worst(10_000), worst(1_000_000));
        // n^{-1/2} scaling predicts a factor of ten
        assert!(large < small / 3.0, "{small} -> {large}");
    }

    #[test]
    fn monte_carlo_literal_kappa_tracks_analytic() {
        let v = CovMatrix::tmsv(0.3);
        let src = CumulantSource::MonteCarlo {
            n_samples: 200_000,
            seed: 5,
        };
        let mc = fourth_cumulant(&v, CumulantEstimator::PaperLiteral, src).unwrap();
        let an = fourth_cumulant(&v, CumulantEstimator::PaperLiteral, CumulantSource::AnalyticWick).unwrap();
        let rel = (kappa_magnitude(&mc) - kappa_magnitude(&an)).abs() / kappa_magnitude(&an);
        assert!(rel < 0.02, "{rel}");
    }

    #[test]
    fn bch_examples() {
        assert_eq!(bch_angle_coefficient(0.3, 1.0, 0.5, 1.0), 0.0);
        assert_eq!(bch_angle_coefficient(0.0, 1.0, 0.5, 0.2), 0.0);
        assert!((bch_angle_coefficient(0.3, PI / 2.0, 0.3, 0.0) - 0.36).abs() < 1e-15);
        let a = bch_angle_coefficient(0.4, 1.1, 0.7, 0.3);
        assert!((bch_angle_coefficient(0.4, 0.3, 0.7, 1.1) + a).abs() < 1e-15);
        assert!((bch_angle_coefficient(0.4, 1.1 + 2.0 * PI, 0.7, 0.3) - a).abs() < 1e-14);
    }

    #[test]
    fn point_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| point_seed(42, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_eq!(point_seed(1, 5), point_seed(1, 5));
        assert_ne!(point_seed(1, 5), point_seed(2, 5));
    }
}
