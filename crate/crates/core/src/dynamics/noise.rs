//! Input noise spectra over the drive channels of the Langevin system.
//!
//! Channel `i` drives state quadrature `i`. Entries carry the channel rate:
//! an optical channel with input covariance `N` contributes `2γ_c N`, a
//! mechanical channel `2γ_m (n̄ + ½)`. The rate of every channel is recorded
//! so the output relation can recover the bare input field.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{squeeze_strength, DerivedRates, PhysicalConfig};

type C64 = Complex<f64>;

/// How the optical input covariance is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Squeezed sideband vacuum `𝒮𝒮ᵀ/2`.
    #[default]
    SidebandSqueezed,
    /// The printed single-field ⟨G⟩ block, including its coherent-amplitude
    /// terms, evaluated verbatim. Not Hermitian in general.
    PaperLiteral,
}

/// Single-mode sideband squeezing transform 𝒮(r, θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeMatrix(pub Matrix2<f64>);

impl SqueezeMatrix {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Input covariance `𝒮𝒮ᵀ/2` of the squeezed vacuum.
    pub fn vacuum_covariance(&self) -> Matrix2<f64> {
        self.0 * self.0.transpose() * 0.5
    }
}

pub fn sideband_squeeze_matrix(r: f64, theta: f64) -> SqueezeMatrix {
    // Exact reduction first, so θ and θ + π give identical bits.
    let (s2, c2) = (2.0 * theta.rem_euclid(PI)).sin_cos();
    let (ch, sh) = (r.cosh(), r.sinh());
    SqueezeMatrix(Matrix2::new(ch + c2 * sh, s2 * sh, s2 * sh, ch - c2 * sh))
}

/// Input noise correlation matrix ⟨G⟩ with its channel rates.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    entries: DMatrix<C64>,
    rates: Vec<f64>,
    mode: NoiseMode,
}

impl NoiseSpectrum {
    pub fn new(entries: DMatrix<C64>, rates: Vec<f64>, mode: NoiseMode) -> Result<Self> {
        if !entries.is_square() || entries.nrows() != rates.len() {
            return Err(Error::Dimension(format!(
                "noise matrix {}x{} with {} channel rates",
                entries.nrows(),
                entries.ncols(),
                rates.len()
            )));
        }
        if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Argument("channel rates must be positive".into()));
        }
        Ok(Self { entries, rates, mode })
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Rate normalization `2γ` of each channel.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    /// Same channel layout, all entries zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            entries: DMatrix::zeros(self.dim(), self.dim()),
            rates: self.rates.clone(),
            mode: self.mode,
        }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.rates == other.rates
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.same_layout(other) {
            return Err(Error::Dimension("noise spectra have different channel layouts".into()));
        }
        Ok(Self {
            entries: &self.entries + &other.entries,
            rates: self.rates.clone(),
            mode: self.mode,
        })
    }

    /// Largest entry magnitude, at least 1.
    fn scale(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    /// Max `|G − G†|`, relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let d = &self.entries - self.entries.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max) / self.scale()
    }

    /// Smallest eigenvalue of the Hermitian part, relative to the largest
    /// entry.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        // real symmetric embedding [[Re, −Im], [Im, Re]] doubles each eigenvalue
        let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                let z = h[(r, c)];
                big[(r, c)] = z.re;
                big[(n + r, n + c)] = z.re;
                big[(r, n + c)] = -z.im;
                big[(n + r, c)] = z.im;
            }
        }
        big.symmetric_eigen().eigenvalues.min() / self.scale()
    }

    /// Checks Hermiticity (1e-12) and positive semidefiniteness (−1e-9),
    /// both relative to the largest entry.
    pub fn check(&self) -> Result<()> {
        let h = self.hermitian_defect();
        if h > 1e-12 {
            return Err(Error::NotSymmetric(h));
        }
        let lam = self.min_eigenvalue();
        if lam < -1e-9 {
            return Err(Error::Unphysical(format!("noise spectrum eigenvalue {lam:e}")));
        }
        Ok(())
    }
}

/// Noise spectrum split by physical origin. All parts share one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParts {
    /// Optical vacuum/squeezed input on the cavity port.
    pub optical: NoiseSpectrum,
    /// Mechanical zero-point force, `2γ_m · ½`.
    pub mech_zero_point: NoiseSpectrum,
    /// Mechanical thermal force, `2γ_m · n̄`.
    pub mech_thermal: NoiseSpectrum,
}

impl NoiseParts {
    pub fn total(&self) -> NoiseSpectrum {
        self.quantum()
            .add(&self.mech_thermal)
            .expect("parts share a layout")
    }

    /// Optical input plus mechanical zero-point.
    pub fn quantum(&self) -> NoiseSpectrum {
        self.optical
            .add(&self.mech_zero_point)
            .expect("parts share a layout")
    }

    pub fn thermal(&self) -> NoiseSpectrum {
        self.mech_thermal.clone()
    }
}

/// The ⟨G⟩ block for one field exactly as printed, with
/// `A = cosh r − e^{−iθ} sinh r`, `B = cosh r − e^{iθ} sinh r`.
pub fn paper_literal_block(r: f64, theta: f64, alpha: C64) -> [[C64; 2]; 2] {
    let i = C64::i();
    let one = C64::new(1.0, 0.0);
    let (ch, sh) = (r.cosh(), r.sinh());
    let a = ch - C64::from_polar(1.0, -theta) * sh;
    let b = ch - C64::from_polar(1.0, theta) * sh;
    let ac = alpha.conj();
    let n2 = 2.0 * alpha.norm_sqr() + 1.0;
    let g11 = (a * a * alpha + b * b * ac * ac + a * b * n2) / 2.0;
    let cross = i * (b * b * ac * ac - a * a * alpha * alpha + a * b) - one;
    let g12 = cross / 2.0;
    let g21 = -cross / 2.0;
    let g22 = (-(a * a) * alpha - b * b * ac * ac + a * b * n2 - one) / 2.0;
    [[g11, g12], [g21, g22]]
}

/// Input noise split into optical, mechanical zero-point and thermal parts.
///
/// In `SidebandSqueezed` mode each squeezer's output is mixed with vacuum
/// according to `input_coupling_efficiency` before entering the cavity.
pub fn input_noise_parts(cfg: &PhysicalConfig, rates: &DerivedRates, mode: NoiseMode) -> NoiseParts {
    let n_fields = rates.detunings.len();
    let n_modes = rates.mech_freqs.len();
    let dim = 2 * (n_fields + n_modes);
    let gc2 = 2.0 * rates.cavity_decay;

    let mut channel_rates = vec![gc2; 2 * n_fields];
    for &gm in &rates.mech_damping {
        channel_rates.extend([2.0 * gm, 2.0 * gm]);
    }

    let mut optical = DMatrix::<C64>::zeros(dim, dim);
    for (j, squeezer) in cfg.squeezers.iter().enumerate().take(n_fields) {
        let r = squeeze_strength(squeezer);
        let o = 2 * j;
        match mode {
            NoiseMode::SidebandSqueezed => {
                let eta = cfg.input_coupling_efficiency;
                let cov = sideband_squeeze_matrix(r, squeezer.angle).vacuum_covariance() * eta
                    + Matrix2::identity() * (0.5 * (1.0 - eta));
                for a in 0..2 {
                    for b in 0..2 {
                        optical[(o + a, o + b)] = C64::new(gc2 * cov[(a, b)], 0.0);
                    }
                }
            }
            NoiseMode::PaperLiteral => {
                let block = paper_literal_block(r, squeezer.angle, C64::new(rates.amplitudes[j], 0.0));
                for a in 0..2 {
                    for b in 0..2 {
                        optical[(o + a, o + b)] = block[a][b] * gc2;
                    }
                }
            }
        }
    }

    let mut zero_point = DMatrix::<C64>::zeros(dim, dim);
    let mut thermal = DMatrix::<C64>::zeros(dim, dim);
    for m in 0..n_modes {
        let gm2 = 2.0 * rates.mech_damping[m];
        let nbar = rates.occupancy[m];
        for q in 0..2 {
            let i = 2 * (n_fields + m) + q;
            zero_point[(i, i)] = C64::new(gm2 * 0.5, 0.0);
            thermal[(i, i)] = C64::new(gm2 * nbar, 0.0);
        }
    }

    let make = |entries| NoiseSpectrum {
        entries,
        rates: channel_rates.clone(),
        mode,
    };
    NoiseParts {
        optical: make(optical),
        mech_zero_point: make(zero_point),
        mech_thermal: make(thermal),
    }
}

pub fn input_noise_spectrum(cfg: &PhysicalConfig, rates: &DerivedRates, mode: NoiseMode) -> NoiseSpectrum {
    input_noise_parts(cfg, rates, mode).total()
}
