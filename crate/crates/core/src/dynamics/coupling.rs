//! Linearized drift matrix and its frequency-domain response.
//!
//! Quadratures are ordered `(X₁, Y₁, X₂, Y₂, X_m1, Y_m1, …)`. The Langevin
//! system is `u̇ = K u + u_N` and time derivatives map to `−iΩ`, so the
//! intracavity response is `u(Ω) = −M(Ω) u_N(Ω)` with `M = (K + iΩI)⁻¹`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::params::{DampingModel, DerivedRates, PhysicalConfig};

type C64 = Complex<f64>;

/// Residual above which an inverse is reported as singular.
const SINGULAR_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
struct MechanicalRow {
    /// Row/column index of the mode's Y quadrature.
    y_index: usize,
    omega_m: f64,
    gamma_m: f64,
}

/// Real drift matrix of the linearized Langevin system.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: DMatrix<f64>,
    optical_modes: usize,
    mech: Vec<MechanicalRow>,
    damping: DampingModel,
    spectral_abscissa: f64,
}

impl CouplingMatrix {
    /// Wraps an arbitrary drift matrix whose first `2 * optical_modes` rows
    /// are optical quadratures.
    pub fn from_entries(entries: DMatrix<f64>, optical_modes: usize) -> Result<Self> {
        if !entries.is_square() || entries.nrows() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "drift matrix must be square with even size, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if 2 * optical_modes > entries.nrows() {
            return Err(Error::Dimension("more optical modes than quadratures".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("drift matrix has non-finite entries".into()));
        }
        let spectral_abscissa = entries
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            entries,
            optical_modes,
            mech: Vec::new(),
            damping: DampingModel::Viscous,
            spectral_abscissa,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn optical_modes(&self) -> usize {
        self.optical_modes
    }

    /// Largest real part over the spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.spectral_abscissa
    }

    /// All eigenvalues have negative real part.
    pub fn is_stable(&self) -> bool {
        self.spectral_abscissa < 0.0
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.entries.complex_eigenvalues().iter().copied().collect()
    }

    /// Drift matrix at sideband frequency `omega`. Identical to
    /// [`entries`](Self::entries) for viscous damping.
    pub fn at_frequency(&self, omega: f64) -> Result<DMatrix<f64>> {
        let mut k = self.entries.clone();
        if self.damping == DampingModel::Structural {
            if omega == 0.0 {
                return Err(Error::Argument("structural damping is undefined at Ω = 0".into()));
            }
            for row in &self.mech {
                let y = row.y_index;
                k[(y, y)] = -row.gamma_m * row.omega_m / omega.abs();
            }
        }
        Ok(k)
    }

    /// Per-channel multiplier on the input noise at `omega` (1 except for
    /// mechanical channels under structural damping).
    pub fn noise_scaling(&self, omega: f64) -> Result<Vec<f64>> {
        let mut scale = vec![1.0; self.dim()];
        if self.damping == DampingModel::Structural {
            if omega == 0.0 {
                return Err(Error::Argument("structural damping is undefined at Ω = 0".into()));
            }
            for row in &self.mech {
                let s = row.omega_m / omega.abs();
                scale[row.y_index - 1] = s;
                scale[row.y_index] = s;
            }
        }
        Ok(scale)
    }
}

/// Builds the drift matrix for two optical fields and the configured
/// mechanical modes.
///
/// Optical block for field j: `Ẋ = −γ_c X + Δ_j Y`,
/// `Ẏ = −γ_c Y − Δ_j X + Σ_k 2g_jk X_mk`.
/// Mechanical block for mode k: `Ẋ_m = Ω_m Y_m`,
/// `Ẏ_m = −Ω_m X_m − γ_m Y_m + Σ_j 2g_jk X_j`.
///
/// An unstable matrix is returned as-is; check [`CouplingMatrix::is_stable`].
pub fn build_coupling_matrix(rates: &DerivedRates, cfg: &PhysicalConfig) -> Result<CouplingMatrix> {
    let n_fields = rates.detunings.len();
    let n_modes = rates.mech_freqs.len();
    let dim = 2 * (n_fields + n_modes);
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let gc = rates.cavity_decay;

    for j in 0..n_fields {
        let (x, y) = (2 * j, 2 * j + 1);
        let delta = rates.detunings[j];
        k[(x, x)] = -gc;
        k[(y, y)] = -gc;
        k[(x, y)] = delta;
        k[(y, x)] = -delta;
        for m in 0..n_modes {
            let xm = 2 * (n_fields + m);
            let g2 = 2.0 * rates.couplings[j][m];
            k[(y, xm)] = g2;
            k[(xm + 1, x)] = g2;
        }
    }

    let mut mech = Vec::with_capacity(n_modes);
    for m in 0..n_modes {
        let xm = 2 * (n_fields + m);
        let ym = xm + 1;
        let om = rates.mech_freqs[m];
        let gm = rates.mech_damping[m];
        k[(xm, ym)] = om;
        k[(ym, xm)] = -om;
        k[(ym, ym)] = -gm;
        mech.push(MechanicalRow {
            y_index: ym,
            omega_m: om,
            gamma_m: gm,
        });
    }

    let mut coupling = CouplingMatrix::from_entries(k, n_fields)?;
    coupling.mech = mech;
    coupling.damping = cfg.damping;
    Ok(coupling)
}

/// Complex response `M(Ω) = (K + iΩI)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    pub entries: DMatrix<C64>,
    pub omega: f64,
    /// `max |(K + iΩI)M − I|`.
    pub residual: f64,
}

pub fn response_matrix(k: &CouplingMatrix, omega: f64) -> Result<ResponseMatrix> {
    let drift = k.at_frequency(omega)?;
    let dim = drift.nrows();
    let shifted = DMatrix::<C64>::from_fn(dim, dim, |r, c| {
        let re = drift[(r, c)];
        if r == c {
            C64::new(re, omega)
        } else {
            C64::new(re, 0.0)
        }
    });
    let inverse = shifted
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularResponse {
            omega,
            residual: f64::INFINITY,
        })?;
    let product = &shifted * &inverse;
    let residual = product
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let (r, c) = (i % dim, i / dim);
            let target = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            (z - target).norm()
        })
        .fold(0.0, f64::max);
    if !residual.is_finite() || residual > SINGULAR_RESIDUAL {
        return Err(Error::SingularResponse { omega, residual });
    }
    Ok(ResponseMatrix {
        entries: inverse,
        omega,
        residual,
    })
}
