//! Covariance matrices and the map from input noise to output fields.

use nalgebra::{Complex, DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use super::coupling::{response_matrix, CouplingMatrix};
use super::noise::{sideband_squeeze_matrix, NoiseSpectrum};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Normalization of a covariance matrix. Only one is in use: `X = (a + a†)/√2`,
/// so the vacuum is `I/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    VacuumHalf,
}

/// Real symmetric covariance matrix over `(X₁, Y₁, X₂, Y₂, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

impl CovMatrix {
    /// Checks shape, finiteness and symmetry (to 1e-12 relative). Does not
    /// check the uncertainty principle; see
    /// [`symplectic_eigenvalues`](crate::entanglement::symplectic_eigenvalues).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 || entries.nrows() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "covariance must be square with even size, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("covariance has non-finite entries".into()));
        }
        let asym = max_abs(&(&entries - entries.transpose()));
        if asym > 1e-12 * max_abs(&entries).max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { entries })
    }

    /// Symmetrizes `(A + Aᵀ)/2` first.
    pub fn symmetrized(entries: DMatrix<f64>) -> Result<Self> {
        let sym = (&entries + entries.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::thermal(0.0, modes)
    }

    pub fn thermal(nbar: f64, modes: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * modes, 2 * modes) * (nbar + VACUUM_VARIANCE),
        }
    }

    /// Two-mode squeezed vacuum with squeeze parameter `s`.
    pub fn tmsv(s: f64) -> Self {
        let (c, sh) = ((2.0 * s).cosh() / 2.0, (2.0 * s).sinh() / 2.0);
        let mut v = DMatrix::identity(4, 4) * c;
        v[(0, 2)] = sh;
        v[(2, 0)] = sh;
        v[(1, 3)] = -sh;
        v[(3, 1)] = -sh;
        Self { entries: v }
    }

    /// Single-mode squeezed vacuum `𝒮(r, θ)𝒮ᵀ/2`.
    pub fn squeezed_vacuum(r: f64, theta: f64) -> Self {
        let cov = sideband_squeeze_matrix(r, theta).vacuum_covariance();
        Self {
            entries: DMatrix::from_fn(2, 2, |i, j| cov[(i, j)]),
        }
    }

    pub fn from_block(block: &Matrix2<f64>) -> Result<Self> {
        Self::new(DMatrix::from_fn(2, 2, |i, j| block[(i, j)]))
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut v = DMatrix::zeros(n + m, n + m);
        v.view_mut((0, 0), (n, n)).copy_from(&self.entries);
        v.view_mut((n, n), (m, m)).copy_from(&other.entries);
        Self { entries: v }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn convention(&self) -> Convention {
        Convention::VacuumHalf
    }

    /// 2×2 block between modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let v = &self.entries;
        Matrix2::new(
            v[(2 * i, 2 * j)],
            v[(2 * i, 2 * j + 1)],
            v[(2 * i + 1, 2 * j)],
            v[(2 * i + 1, 2 * j + 1)],
        )
    }

    /// Leading `2n × 2n` submatrix.
    pub fn leading_modes(&self, n: usize) -> Result<Self> {
        if 2 * n > self.dim() {
            return Err(Error::Dimension(format!("{n} modes requested from {}", self.modes())));
        }
        Ok(Self {
            entries: self.entries.view((0, 0), (2 * n, 2 * n)).into_owned(),
        })
    }

    /// Applies `S V Sᵀ`.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != self.dim() || s.ncols() != self.dim() {
            return Err(Error::Dimension("transform size differs from covariance".into()));
        }
        Self::symmetrized(s * &self.entries * s.transpose())
    }

    /// Phase rotation by `phi` on one mode, a local symplectic map.
    pub fn rotate_mode(&self, mode: usize, phi: f64) -> Result<Self> {
        if mode >= self.modes() {
            return Err(Error::Dimension(format!("mode {mode} of {}", self.modes())));
        }
        let mut s = DMatrix::identity(self.dim(), self.dim());
        let (sn, cs) = phi.sin_cos();
        let o = 2 * mode;
        s[(o, o)] = cs;
        s[(o, o + 1)] = -sn;
        s[(o + 1, o)] = sn;
        s[(o + 1, o + 1)] = cs;
        self.transform(&s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.entries - &other.entries))
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn check_layout(k: &CouplingMatrix, g: &NoiseSpectrum) -> Result<()> {
    if k.dim() != g.dim() {
        return Err(Error::Dimension(format!(
            "drift matrix has {} quadratures, noise spectrum {} channels",
            k.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Transfer from rate-scaled input channels to the output optical
/// quadratures: `Q = −√(2γ_c)·M[opt, :]·D − diag(1/√rate)` on optical
/// channels, with `D` the structural-damping noise scaling.
fn output_transfer(k: &CouplingMatrix, g: &NoiseSpectrum, omega: f64, gamma_c: f64) -> Result<DMatrix<C64>> {
    check_layout(k, g)?;
    if !(gamma_c > 0.0) {
        return Err(Error::Argument("cavity decay must be positive".into()));
    }
    let m = response_matrix(k, omega)?;
    let scale = k.noise_scaling(omega)?;
    let n_opt = 2 * k.optical_modes();
    let root = (2.0 * gamma_c).sqrt();
    let mut q = DMatrix::<C64>::zeros(n_opt, k.dim());
    for r in 0..n_opt {
        for c in 0..k.dim() {
            q[(r, c)] = -m.entries[(r, c)] * (root * scale[c].sqrt());
        }
        q[(r, r)] -= C64::new(1.0 / g.rates()[r].sqrt(), 0.0);
    }
    Ok(q)
}

fn sandwich(q: &DMatrix<C64>, g: &DMatrix<C64>) -> Result<CovMatrix> {
    let full = q * g * q.adjoint();
    CovMatrix::symmetrized(full.map(|z| z.re))
}

/// Output optical covariance `sym Re(Q⟨G⟩Q†)` at sideband frequency `omega`.
///
/// The output relation is `u_out = √(2γ_c)u_c − u_in`. With no coupling
/// and no squeezing the optical transfer is unitary and the result is the
/// vacuum `I/2` at every `omega`. No loss is applied here.
pub fn output_covariance(k: &CouplingMatrix, g: &NoiseSpectrum, omega: f64, gamma_c: f64) -> Result<CovMatrix> {
    let q = output_transfer(k, g, omega, gamma_c)?;
    sandwich(&q, g.entries())
}

/// Full intracavity covariance `sym Re(M⟨G⟩M†)` over all quadratures.
pub fn intracavity_covariance(k: &CouplingMatrix, g: &NoiseSpectrum, omega: f64) -> Result<CovMatrix> {
    check_layout(k, g)?;
    let m = response_matrix(k, omega)?;
    let scale = k.noise_scaling(omega)?;
    let md = DMatrix::from_fn(k.dim(), k.dim(), |r, c| m.entries[(r, c)] * scale[c].sqrt());
    sandwich(&md, g.entries())
}

/// Output covariance contributed by each noise part. The parts must share
/// one channel layout; their sum equals [`output_covariance`] of the summed
/// spectrum. Individual parts need not be physical states.
pub fn decompose_noise_contributions(
    k: &CouplingMatrix,
    parts: &[NoiseSpectrum],
    omega: f64,
    gamma_c: f64,
) -> Result<Vec<CovMatrix>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Argument("no noise parts supplied".into()))?;
    if let Some(bad) = parts.iter().position(|p| !p.same_layout(first)) {
        return Err(Error::Dimension(format!("noise part {bad} has a different channel layout")));
    }
    let q = output_transfer(k, first, omega, gamma_c)?;
    parts.iter().map(|p| sandwich(&q, p.entries())).collect()
}

/// Uniform loss on every mode: `V′ = (1 − ℓ)V + ℓ·I/2`.
pub fn apply_loss(v: &CovMatrix, loss: f64) -> Result<CovMatrix> {
    if !(0.0..1.0).contains(&loss) {
        return Err(Error::Argument(format!("loss {loss} outside [0, 1)")));
    }
    let n = v.dim();
    let entries = v.entries() * (1.0 - loss) + DMatrix::identity(n, n) * (loss * VACUUM_VARIANCE);
    CovMatrix::new(entries)
}

/// Two-mode beamsplitter with transmittance `t`:
/// `S = [[√t I, √(1−t) I], [−√(1−t) I, √t I]]`.
pub fn beamsplitter_matrix(t: f64) -> DMatrix<f64> {
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    let mut s = DMatrix::zeros(4, 4);
    for q in 0..2 {
        s[(q, q)] = a;
        s[(q, q + 2)] = b;
        s[(q + 2, q)] = -b;
        s[(q + 2, q + 2)] = a;
    }
    s
}

pub fn beamsplitter_mix(v: &CovMatrix, transmittance: f64) -> Result<CovMatrix> {
    if v.dim() != 4 {
        return Err(Error::Dimension(format!("beamsplitter needs two modes, got {}", v.modes())));
    }
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::Argument(format!("transmittance {transmittance} outside [0, 1]")));
    }
    v.transform(&beamsplitter_matrix(transmittance))
}
