//! Transfer matrices for finite chains of identical sites.
//!
//! A state is the pair (right-moving, left-moving) waveguide amplitude and a
//! matrix maps the state on the left of an element to the state on its right,
//! so a photon injected from the left with unit amplitude obeys
//! `(t, 0) = M · (1, r)`. A block is a fiber segment followed by a site.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{CqedParams, Detuning, ScatteringAmplitudes};
use crate::site::{t_r_general, PointFlag, SpectrumPoint};

/// Smallest |t| for which a block matrix is formed.
pub const ZERO_TRANSMISSION: f64 = 1e-14;

/// Smallest |m22| accepted by [`extract_t_r`].
pub const SINGULAR_EXTRACTION: f64 = 1e-14;

/// Default ratio Γ/ω_eg bridging rate units and optical frequency.
pub const DEFAULT_RHO: f64 = 1e-3;

/// How the fiber phase depends on the photon frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModel {
    /// φ = 2πL/λ₀ at every detuning.
    #[default]
    Markovian,
    /// φ = 2π(L/λ₀)(1 + ρΔ).
    Dispersive,
}

impl PhaseModel {
    pub fn name(self) -> &'static str {
        match self {
            PhaseModel::Markovian => "markovian",
            PhaseModel::Dispersive => "dispersive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_sites: usize,
    /// Lattice constant L in units of the resonant wavelength λ₀.
    pub l_over_lambda0: f64,
    pub phase_model: PhaseModel,
    /// ρ = Γ/ω_eg.
    pub rho: f64,
}

impl LatticeSpec {
    pub fn new(n_sites: usize, l_over_lambda0: f64) -> Self {
        Self {
            n_sites,
            l_over_lambda0,
            phase_model: PhaseModel::Markovian,
            rho: DEFAULT_RHO,
        }
    }

    pub fn with_phase_model(self, phase_model: PhaseModel) -> Self {
        Self {
            phase_model,
            ..self
        }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    pub fn validate(self) -> Result<Self> {
        if self.n_sites == 0 {
            return Err(Error::InvalidLattice("n_sites must be at least 1".into()));
        }
        if !(self.l_over_lambda0.is_finite() && self.l_over_lambda0 > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "l_over_lambda0 must be positive, got {}",
                self.l_over_lambda0
            )));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::InvalidLattice(format!(
                "rho must be non-negative, got {}",
                self.rho
            )));
        }
        Ok(self)
    }
}

/// Phase accumulated over a fiber of length `length_over_lambda0`·λ₀.
pub fn propagation_phase(
    length_over_lambda0: f64,
    model: PhaseModel,
    rho: f64,
    d: Detuning,
) -> f64 {
    let resonant = 2.0 * PI * length_over_lambda0;
    match model {
        PhaseModel::Markovian => resonant,
        PhaseModel::Dispersive => resonant * (1.0 + rho * d.0),
    }
}

/// Phase over one lattice constant.
pub fn fiber_phase(spec: &LatticeSpec, d: Detuning) -> f64 {
    propagation_phase(spec.l_over_lambda0, spec.phase_model, spec.rho, d)
}

/// 2×2 complex transfer matrix with its determinant carried alongside.
///
/// Products of many stop-band blocks have entries far larger than their
/// determinant, so the determinant is propagated multiplicatively rather than
/// recomputed from the entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    m: [[Complex64; 2]; 2],
    det: Complex64,
}

impl TransferMatrix {
    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self {
            m: [[m11, m12], [m21, m22]],
            det: m11 * m22 - m12 * m21,
        }
    }

    fn with_det(m: [[Complex64; 2]; 2], det: Complex64) -> Self {
        Self { m, det }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::with_det([[one, zero], [zero, one]], one)
    }

    pub fn m11(&self) -> Complex64 {
        self.m[0][0]
    }
    pub fn m12(&self) -> Complex64 {
        self.m[0][1]
    }
    pub fn m21(&self) -> Complex64 {
        self.m[1][0]
    }
    pub fn m22(&self) -> Complex64 {
        self.m[1][1]
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u32) -> TransferMatrix {
        let mut result = TransferMatrix::identity();
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                result = result * base;
            }
            n >>= 1;
            if n > 0 {
                base = base * base;
            }
        }
        result
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let a = &self.m;
        let b = &rhs.m;
        let m = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        TransferMatrix::with_det(m, self.det * rhs.det)
    }
}

fn fiber_factors(phi: f64) -> (Complex64, Complex64) {
    (
        Complex64::from_polar(1.0, phi),
        Complex64::from_polar(1.0, -phi),
    )
}

/// Block matrix for a fiber of phase `phi` followed by a mirror-symmetric site:
///
/// ```text
/// [ (t² − r²)/t · e^{iφ}    (r/t) · e^{−iφ} ]
/// [ −(r/t) · e^{iφ}         e^{−iφ}/t       ]
/// ```
///
/// With |t|² + |r|² = 1 this is entry for entry the time-reversal form of
/// [`block_matrix_time_reversal`]; unlike that form it stays correct when the
/// site absorbs. Its determinant is exactly one.
pub fn block_matrix(amps: &ScatteringAmplitudes, phi: f64) -> Result<TransferMatrix> {
    let (t, r) = (amps.t, amps.r);
    if !(t.norm() > ZERO_TRANSMISSION) {
        return Err(Error::ZeroTransmission {
            magnitude: t.norm(),
        });
    }
    let (fwd, back) = fiber_factors(phi);
    let m = [
        [(t * t - r * r) / t * fwd, r / t * back],
        [-r / t * fwd, back / t],
    ];
    Ok(TransferMatrix::with_det(m, Complex64::new(1.0, 0.0)))
}

/// Block matrix in the lossless time-reversal form
/// `[[e^{iφ}/t*, −r* e^{−iφ}/t*], [−r e^{iφ}/t, e^{−iφ}/t]]`.
pub fn block_matrix_time_reversal(amps: &ScatteringAmplitudes, phi: f64) -> Result<TransferMatrix> {
    let (t, r) = (amps.t, amps.r);
    if !(t.norm() > ZERO_TRANSMISSION) {
        return Err(Error::ZeroTransmission {
            magnitude: t.norm(),
        });
    }
    let (fwd, back) = fiber_factors(phi);
    let tc = t.conj();
    let m = [[fwd / tc, -r.conj() * back / tc], [-r * fwd / t, back / t]];
    let det = (1.0 - r.norm_sqr()) / t.norm_sqr();
    Ok(TransferMatrix::with_det(m, Complex64::new(det, 0.0)))
}

/// Total matrix of blocks listed in propagation order: `B_N ⋯ B_2 · B_1`.
///
/// Chains of identical blocks are raised to the N-th power by squaring.
pub fn cascade(blocks: &[TransferMatrix]) -> Result<TransferMatrix> {
    let (first, rest) = blocks.split_first().ok_or(Error::EmptyChain)?;
    if rest.iter().all(|b| b == first) {
        let n = u32::try_from(blocks.len()).map_err(|_| {
            Error::InvalidLattice(format!("chain of {} blocks is too long", blocks.len()))
        })?;
        return Ok(first.pow(n));
    }
    Ok(rest.iter().fold(*first, |total, block| *block * total))
}

/// Sequential product in propagation order, without the identical-block shortcut.
pub fn cascade_sequential(blocks: &[TransferMatrix]) -> Result<TransferMatrix> {
    let (first, rest) = blocks.split_first().ok_or(Error::EmptyChain)?;
    Ok(rest.iter().fold(*first, |total, block| *block * total))
}

/// Amplitudes for unit incidence from the left: r = −m21/m22, t = det/m22.
pub fn extract_t_r(total: &TransferMatrix) -> Result<ScatteringAmplitudes> {
    let m22 = total.m22();
    let magnitude = m22.norm();
    if !(magnitude > SINGULAR_EXTRACTION) {
        return Err(Error::SingularExtraction { magnitude });
    }
    Ok(ScatteringAmplitudes::new(
        total.det() / m22,
        -total.m21() / m22,
    ))
}

/// Evaluates a chain of identical sites whose leading fibers have `phases`.
pub(crate) fn chain_point(p: &CqedParams, delta: f64, phases: &[f64]) -> SpectrumPoint {
    let singular = SpectrumPoint {
        delta,
        transmission: 0.0,
        reflection: 1.0,
        flag: PointFlag::Singular,
    };
    let site = match t_r_general(p, Detuning(delta)) {
        Ok(site) => site,
        Err(_) => return singular,
    };
    let blocks: Result<Vec<_>> = phases.iter().map(|&phi| block_matrix(&site, phi)).collect();
    let blocks = match blocks {
        Ok(blocks) => blocks,
        Err(Error::ZeroTransmission { .. }) => {
            // nothing passes the first site, so its reflection is the chain's
            return SpectrumPoint {
                delta,
                transmission: 0.0,
                reflection: site.reflection.min(1.0),
                flag: PointFlag::FullReflection,
            };
        }
        Err(_) => return singular,
    };
    match cascade(&blocks).and_then(|m| extract_t_r(&m)) {
        Ok(a) if a.transmission.is_finite() && a.reflection.is_finite() => SpectrumPoint {
            delta,
            transmission: a.transmission,
            reflection: a.reflection,
            flag: PointFlag::Ok,
        },
        _ => singular,
    }
}

/// T and R of a periodic array of `spec.n_sites` identical sites on `grid`.
///
/// Points where the transfer formalism is singular are flagged, not fatal.
/// Grid points may be evaluated in parallel; output order follows the grid.
pub fn array_spectrum(
    p: &CqedParams,
    spec: &LatticeSpec,
    grid: &Grid,
) -> Result<Vec<SpectrumPoint>> {
    let p = p.validate()?;
    let spec = spec.validate()?;
    let grid = grid.validate()?;
    Ok(grid
        .points()
        .into_par_iter()
        .map(|delta| {
            let phi = fiber_phase(&spec, Detuning(delta));
            chain_point(&p, delta, &vec![phi; spec.n_sites])
        })
        .collect())
}
