//! Bloch dispersion of the infinite periodic lattice and band-gap search.
//!
//! The frequency axis is ω/ω_eg. The fiber wavenumber gives
//! qL = 2π(L/λ₀)(ω/ω_eg − 1) and the site sees Δ = (ω/ω_eg − 1)/ρ with
//! ρ = Γ/ω_eg taken from [`LatticeSpec`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use twofloat::TwoFloat;

use crate::dd::{dd, diff, to_f64};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{CqedParams, Detuning};
use crate::site::t_r_general;
use crate::transfer::{LatticeSpec, ZERO_TRANSMISSION};

/// 𝒜² + ℬ² at or below this is treated as a pole of the dispersion relation.
pub const DEGENERATE_ABCD: f64 = 1e-20;

/// Minimum number of scan points for [`find_band_gaps`].
pub const MIN_GAP_SCAN: usize = 100;

const MAX_BISECTIONS: usize = 200;

/// The intermediates of the closed-form dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abcd {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Evaluates 𝒜, ℬ, 𝒞, 𝒟 at photon detuning `d`.
///
/// The expressions are written in the cavity detuning Δc = Δ − δ, so the
/// atomic detuning that appears as their `δ + Δc` is the photon detuning Δ.
pub fn abcd(p: &CqedParams, d: Detuning) -> Abcd {
    let k = dd(p.kappa);
    let gm = dd(p.gamma);
    let eta = dd(p.eta);
    let bg = dd(p.big_gamma);
    let g2x2 = TwoFloat::new_mul(p.g, p.g) * 2.0;
    let dc = diff(d.0, p.delta_ac);
    let s = dd(d.0);
    let bk = bg + k;
    let common = bg * bg + dc * dc - eta * eta;
    let a = -(g2x2 * (dc + eta)) - gm * dc * k * 2.0 - k * k * s + s * common;
    let b = -(g2x2 * k) + k * dc * s * 2.0 + gm * (common - k * k);
    let c = -(bg * bg * s) - gm * dc * k * 2.0 - bg * (gm * dc + k * s) * 2.0 - k * k * s
        + (dc + eta) * (s * (dc - eta) - g2x2);
    let dd_ = -(g2x2 * bk) + dc * s * bk * 2.0 - gm * (eta * eta + bk * bk - dc * dc);
    Abcd {
        a: to_f64(a),
        b: to_f64(b),
        c: to_f64(c),
        d: to_f64(dd_),
    }
}

fn require_rho(spec: &LatticeSpec) -> Result<()> {
    if spec.rho > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidLattice(format!(
            "band analysis needs rho > 0, got {}",
            spec.rho
        )))
    }
}

fn require_lossless(p: &CqedParams) -> Result<()> {
    if p.is_lossless() {
        Ok(())
    } else {
        Err(Error::LossyParams {
            kappa: p.kappa,
            gamma: p.gamma,
        })
    }
}

/// qL = 2π(L/λ₀)(ω/ω_eg − 1).
pub fn q_l(spec: &LatticeSpec, omega_ratio: f64) -> f64 {
    2.0 * PI * spec.l_over_lambda0 * (omega_ratio - 1.0)
}

/// Δ = (ω/ω_eg − 1)/ρ in units of Γ.
pub fn detuning_from_omega(spec: &LatticeSpec, omega_ratio: f64) -> Detuning {
    Detuning((omega_ratio - 1.0) / spec.rho)
}

/// ω/ω_eg = 1 + ρΔ.
pub fn omega_from_detuning(spec: &LatticeSpec, d: Detuning) -> f64 {
    1.0 + spec.rho * d.0
}

/// cos(𝒦L) = Re[e^{−iqL}/t] from the single-site transmission.
pub fn cos_kl_from_t(p: &CqedParams, spec: &LatticeSpec, omega_ratio: f64) -> Result<f64> {
    let p = p.validate()?;
    require_lossless(&p)?;
    let spec = spec.validate()?;
    require_rho(&spec)?;
    let t = t_r_general(&p, detuning_from_omega(&spec, omega_ratio))?.t;
    if !(t.norm() >= ZERO_TRANSMISSION) {
        return Err(Error::ZeroTransmission {
            magnitude: t.norm(),
        });
    }
    Ok((Complex64::from_polar(1.0, -q_l(&spec, omega_ratio)) / t).re)
}

fn rhs_from_abcd(v: &Abcd, ql: f64) -> Result<f64> {
    let norm = v.a * v.a + v.b * v.b;
    if !(norm > DEGENERATE_ABCD) {
        return Err(Error::DegenerateAbcd(norm));
    }
    let (sin, cos) = ql.sin_cos();
    Ok((cos * (v.a * v.c + v.b * v.d) + sin * (v.a * v.d - v.b * v.c)) / norm)
}

/// cos(𝒦L) from the 𝒜–𝒟 closed form.
pub fn cos_kl_from_abcd(p: &CqedParams, spec: &LatticeSpec, omega_ratio: f64) -> Result<f64> {
    let p = p.validate()?;
    let spec = spec.validate()?;
    require_rho(&spec)?;
    let v = abcd(&p, detuning_from_omega(&spec, omega_ratio));
    rhs_from_abcd(&v, q_l(&spec, omega_ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochSample {
    pub omega_over_omega_eg: f64,
    pub q_l: f64,
    /// cos(𝒦L)
    pub rhs: f64,
    /// |rhs| ≤ 1
    pub propagating: bool,
    pub abcd: Abcd,
}

impl BlochSample {
    /// 𝒦L ∈ [0, π] inside a band.
    pub fn kl(&self) -> Option<f64> {
        self.propagating.then(|| self.rhs.acos())
    }
}

pub fn bloch_sample(p: &CqedParams, spec: &LatticeSpec, omega_ratio: f64) -> Result<BlochSample> {
    let p = p.validate()?;
    let spec = spec.validate()?;
    require_rho(&spec)?;
    let v = abcd(&p, detuning_from_omega(&spec, omega_ratio));
    let ql = q_l(&spec, omega_ratio);
    let rhs = rhs_from_abcd(&v, ql)?;
    Ok(BlochSample {
        omega_over_omega_eg: omega_ratio,
        q_l: ql,
        rhs,
        propagating: rhs.abs() <= 1.0,
        abcd: v,
    })
}

/// A forbidden interval of ω/ω_eg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandGap {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub width: f64,
}

impl BandGap {
    fn new(omega_lo: f64, omega_hi: f64) -> Self {
        Self {
            omega_lo,
            omega_hi,
            width: omega_hi - omega_lo,
        }
    }
}

/// Widest gap of a list, if any.
pub fn principal_gap(gaps: &[BandGap]) -> Option<BandGap> {
    gaps.iter()
        .copied()
        .max_by(|a, b| a.width.total_cmp(&b.width))
}

/// Lossless cos(𝒦L) for the gap scan; poles of the 𝒜–𝒟 form fall back to 1/t.
fn scan_rhs(p: &CqedParams, spec: &LatticeSpec, omega_ratio: f64) -> Result<f64> {
    match rhs_from_abcd(
        &abcd(p, detuning_from_omega(spec, omega_ratio)),
        q_l(spec, omega_ratio),
    ) {
        Err(Error::DegenerateAbcd(_)) => match cos_kl_from_t(p, spec, omega_ratio) {
            Err(Error::ZeroTransmission { .. }) => Ok(f64::INFINITY),
            other => other,
        },
        other => other,
    }
}

fn forbidden(rhs: f64) -> bool {
    rhs.abs() > 1.0
}

/// Bisects between an allowed point and a forbidden one, returning the
/// forbidden side once the bracket can no longer shrink.
fn bisect_edge(p: &CqedParams, spec: &LatticeSpec, mut allowed: f64, mut gap: f64) -> Result<f64> {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (allowed + gap);
        if mid == allowed || mid == gap {
            break;
        }
        if forbidden(scan_rhs(p, spec, mid)?) {
            gap = mid;
        } else {
            allowed = mid;
        }
    }
    Ok(gap)
}

/// Forbidden intervals of ω/ω_eg inside `omega_window`, sorted by `omega_lo`.
///
/// The window is scanned at `grid` cell midpoints and each edge is bisected
/// to floating-point resolution. A gap touching the window is clipped to it.
pub fn find_band_gaps(
    p: &CqedParams,
    spec: &LatticeSpec,
    omega_window: (f64, f64),
    grid: usize,
) -> Result<Vec<BandGap>> {
    let p = p.validate()?;
    require_lossless(&p)?;
    let spec = spec.validate()?;
    require_rho(&spec)?;
    if grid < MIN_GAP_SCAN {
        return Err(Error::GridTooSmall {
            min: MIN_GAP_SCAN,
            got: grid,
        });
    }
    let (lo, hi) = omega_window;
    let scan = Grid::cell_centered(lo, hi, grid)?.points();
    let inside: Vec<bool> = scan
        .par_iter()
        .map(|&w| scan_rhs(&p, &spec, w).map(forbidden))
        .collect::<Result<_>>()?;

    let mut gaps: Vec<BandGap> = Vec::new();
    let mut i = 0;
    while i < scan.len() {
        if !inside[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < scan.len() && inside[j + 1] {
            j += 1;
        }
        let left = if i > 0 {
            bisect_edge(&p, &spec, scan[i - 1], scan[i])?
        } else if forbidden(scan_rhs(&p, &spec, lo)?) {
            lo
        } else {
            bisect_edge(&p, &spec, lo, scan[0])?
        };
        let right = if j + 1 < scan.len() {
            bisect_edge(&p, &spec, scan[j + 1], scan[j])?
        } else if forbidden(scan_rhs(&p, &spec, hi)?) {
            hi
        } else {
            bisect_edge(&p, &spec, hi, scan[j])?
        };
        match gaps.last_mut() {
            Some(prev) if prev.omega_hi >= left => *prev = BandGap::new(prev.omega_lo, right),
            _ => gaps.push(BandGap::new(left, right)),
        }
        i = j + 1;
    }
    Ok(gaps)
}
