//! Single-site transmission and reflection.
//!
//! The production path is the closed-form amplitude pair; the three
//! special-case forms and the direct 5×5 solve of the stationary transport
//! equations exist to cross-check it.

use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use twofloat::TwoFloat;

use crate::dd::{cdd, dd, diff, to_c64};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{CqedParams, Detuning, ScatteringAmplitudes};

/// Denominators below this modulus are reported as poles.
pub const POLE_TOLERANCE: f64 = 1e-14;

/// Minimum number of points in the pre-scan of [`find_transmission_minima`].
pub const MIN_DIP_SCAN: usize = 2001;

/// Golden-section stopping width for dip refinement, in units of Γ.
pub const DIP_TOLERANCE: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_pole(den: Complex64, d: Detuning) -> Result<()> {
    let magnitude = den.norm();
    if magnitude < POLE_TOLERANCE || !magnitude.is_finite() {
        return Err(Error::DegenerateDenominator {
            delta: d.0,
            magnitude,
        });
    }
    Ok(())
}

/// General closed-form amplitudes for arbitrary rates and detunings.
///
/// Numerators and denominator are formed in double-double so that the
/// cancellation around transmission zeros does not reach the ratio.
pub fn t_r_general(p: &CqedParams, d: Detuning) -> Result<ScatteringAmplitudes> {
    let zero = dd(0.0);
    let dc = cdd(diff(d.0, p.delta_ac), dd(p.kappa));
    let deg = cdd(dd(d.0), dd(p.gamma));
    let ig = cdd(zero, dd(p.big_gamma));
    let bg2 = TwoFloat::new_mul(p.big_gamma, p.big_gamma);
    let g2x2 = TwoFloat::new_mul(p.g, p.g) * 2.0;
    let eta = dd(p.eta);
    let eta2 = TwoFloat::new_mul(p.eta, p.eta);
    let dci = dc + ig;

    let (num_t, num_r, den) = if p.g == 0.0 {
        // Δ̃_eg divides numerators and denominator alike once the atom decouples.
        let den = dci * dci - eta2;
        let num_t = dc * dc + (bg2 - eta2);
        let num_r = cdd(zero, eta * p.big_gamma * -2.0);
        (num_t, num_r, den)
    } else {
        let den = dci * (deg * dci - g2x2) - g2x2 * eta - deg * eta2;
        let num_t = dc * (deg * dc - g2x2) + deg * (bg2 - eta2) - g2x2 * eta;
        let num_r = (deg * eta + g2x2 / 2.0) * ig * dd(-2.0);
        (num_t, num_r, den)
    };
    let den = to_c64(den);
    check_pole(den, d)?;
    Ok(ScatteringAmplitudes::new(
        to_c64(num_t) / den,
        to_c64(num_r) / den,
    ))
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::PreconditionViolation(what.to_owned()))
    }
}

/// Decoupled atom (g = 0) without losses, on atom–cavity resonance.
pub fn t_r_decoupled_lossless(p: &CqedParams, d: Detuning) -> Result<ScatteringAmplitudes> {
    require(
        p.g == 0.0 && p.kappa == 0.0 && p.gamma == 0.0 && p.delta_ac == 0.0,
        "decoupled lossless form needs g = κ = γ = δ = 0",
    )?;
    let gm = p.big_gamma;
    let eta = p.eta;
    let den = (real(gm) - I * d.0).powi(2) + eta * eta;
    check_pole(den, d)?;
    let t = -(gm * gm + d.0 * d.0 - eta * eta) / den;
    let r = 2.0 * I * gm * eta / den;
    Ok(ScatteringAmplitudes::new(t, r))
}

/// Decoupled atom with equal cavity and atomic losses.
pub fn t_r_decoupled_lossy(p: &CqedParams, d: Detuning) -> Result<ScatteringAmplitudes> {
    require(
        p.g == 0.0 && p.delta_ac == 0.0 && p.gamma == p.kappa,
        "decoupled lossy form needs g = δ = 0 and γ = κ",
    )?;
    let gm = p.big_gamma;
    let lower = real(gm + p.kappa) - I * (d.0 - p.eta);
    let upper = real(gm + p.kappa) - I * (d.0 + p.eta);
    check_pole(lower * upper, d)?;
    let t = 1.0 - gm / lower - gm / upper;
    let r = 2.0 * I * gm * p.eta / (lower * upper);
    Ok(ScatteringAmplitudes::new(t, r))
}

/// Atom coupled to the cavity with no backscattering, on resonance.
pub fn t_r_coupled_no_backscatter(p: &CqedParams, d: Detuning) -> Result<ScatteringAmplitudes> {
    require(
        p.eta == 0.0 && p.delta_ac == 0.0,
        "no-backscatter form needs η = δ = 0",
    )?;
    let gm = p.big_gamma;
    let g2 = p.g * p.g;
    let cavity = real(gm + p.kappa) - I * d.0;
    let atom = real(p.gamma) - I * d.0;
    let dressed = 2.0 * g2 + atom * cavity;
    check_pole(cavity * dressed, d)?;
    let t = 1.0 - gm / cavity - gm * atom / dressed;
    let r = 2.0 * g2 * gm / (cavity * dressed);
    Ok(ScatteringAmplitudes::new(t, r))
}

/// Solution of the single-site transport equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSolution {
    pub t: Complex64,
    pub r: Complex64,
    /// Counter-clockwise cavity mode amplitude.
    pub e_a: Complex64,
    /// Clockwise cavity mode amplitude.
    pub e_b: Complex64,
    /// Atomic excitation amplitude.
    pub e_q: Complex64,
}

impl AmplitudeSolution {
    pub fn unknowns(&self) -> Vector5<Complex64> {
        Vector5::new(self.t, self.r, self.e_a, self.e_b, self.e_q)
    }

    pub fn amplitudes(&self) -> ScatteringAmplitudes {
        ScatteringAmplitudes::new(self.t, self.r)
    }

    /// Euclidean norm of the transport-equation residual.
    pub fn residual(&self, p: &CqedParams, d: Detuning) -> f64 {
        let (a, b) = transport_system(p, d);
        (a * self.unknowns() - b).norm()
    }
}

/// Group velocity in the unit system where Γ = V²/(2 v_g).
const GROUP_VELOCITY: f64 = 1.0;

/// Linear system `A x = b` over x = (t, r, e_a, e_b, e_q).
///
/// Rows follow the waveguide jump conditions for the right- and left-moving
/// fields, the two cavity-mode equations (waveguide field taken as the mean
/// of its values on either side of the coupling point) and the atom equation.
pub fn transport_system(p: &CqedParams, d: Detuning) -> (Matrix5<Complex64>, Vector5<Complex64>) {
    let (dc, deg) = p.effective_detunings(d);
    let vg = GROUP_VELOCITY;
    let v = real((2.0 * p.big_gamma * vg).sqrt());
    let vc = v.conj();
    let g = real(p.g);
    let eta = real(p.eta);
    let zero = Complex64::new(0.0, 0.0);
    let ivg = I * vg;

    #[rustfmt::skip]
    let a = Matrix5::new(
        -ivg,     zero,     v,          zero,        zero,
        zero,     -ivg,     zero,       v,           zero,
        vc / 2.0, zero,     -dc,        eta,         g,
        zero,     vc / 2.0, eta.conj(), -dc,         g.conj(),
        zero,     zero,     g.conj(),   g,           -deg,
    );
    let b = Vector5::new(-ivg, zero, -vc / 2.0, zero, zero);
    (a, b)
}

/// Relative pivot size below which the transport equations count as singular.
const PIVOT_TOLERANCE: f64 = 1e-13;

/// Direct solve of the transport equations by LU with partial pivoting.
pub fn oracle_solve(p: &CqedParams, d: Detuning) -> Result<AmplitudeSolution> {
    let (a, b) = transport_system(p, d);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = a.lu();
    let u = lu.u();
    let smallest = (0..5)
        .map(|i| u[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    if !(smallest > PIVOT_TOLERANCE * scale) {
        return Err(Error::SingularSystem { delta: d.0 });
    }
    let x = lu.solve(&b).ok_or(Error::SingularSystem { delta: d.0 })?;
    Ok(AmplitudeSolution {
        t: x[0],
        r: x[1],
        e_a: x[2],
        e_b: x[3],
        e_q: x[4],
    })
}

/// Modified Rabi splitting 2√(2g² − Γ²).
pub fn rabi_splitting_prediction(p: &CqedParams) -> Result<f64> {
    let excess = 2.0 * p.g * p.g - p.big_gamma * p.big_gamma;
    if excess <= 0.0 {
        return Err(Error::SubcriticalCoupling {
            g: p.g,
            big_gamma: p.big_gamma,
        });
    }
    Ok(2.0 * excess.sqrt())
}

fn transmission_or_inf(p: &CqedParams, delta: f64) -> f64 {
    t_r_general(p, Detuning(delta))
        .map(|a| a.transmission)
        .unwrap_or(f64::INFINITY)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Local minima of T(Δ) inside `window`, sorted ascending.
///
/// A uniform scan of `max(grid, 2001)` points brackets each dip, which is
/// then refined by golden-section search to [`DIP_TOLERANCE`].
pub fn find_transmission_minima(
    p: &CqedParams,
    window: (f64, f64),
    grid: usize,
) -> Result<Vec<Detuning>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    if grid < 3 {
        return Err(Error::GridTooSmall { min: 3, got: grid });
    }
    let scan = Grid::inclusive(lo, hi, grid.max(MIN_DIP_SCAN))?;
    let xs = scan.points();
    let ts: Vec<f64> = xs.iter().map(|&x| transmission_or_inf(p, x)).collect();

    let mut minima: Vec<Detuning> = Vec::new();
    for i in 1..xs.len() - 1 {
        let (left, here, right) = (ts[i - 1], ts[i], ts[i + 1]);
        if !here.is_finite() || !(here < left && here <= right) {
            continue;
        }
        // Flat spectra carry only rounding noise; demand a real dip.
        if left.max(right) - here <= 1e-12 * (1.0 + here) {
            continue;
        }
        let x = golden_section_min(
            |x| transmission_or_inf(p, x),
            xs[i - 1],
            xs[i + 1],
            DIP_TOLERANCE,
        );
        if minima
            .last()
            .is_none_or(|m| (x - m.0).abs() > 2.0 * DIP_TOLERANCE)
        {
            minima.push(Detuning(x));
        }
    }
    Ok(minima)
}

/// Outcome marker for one sample of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    /// Regular point.
    Ok,
    /// A site reflects completely; T = 0 and R = |r_site|² are exact.
    FullReflection,
    /// Pole or singular extraction; T = 0 and R = 1 are clamped placeholders.
    Singular,
}

impl PointFlag {
    pub fn code(self) -> u8 {
        match self {
            PointFlag::Ok => 0,
            PointFlag::FullReflection => 1,
            PointFlag::Singular => 2,
        }
    }
}

/// One sample of a transmission/reflection spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub delta: f64,
    pub transmission: f64,
    pub reflection: f64,
    pub flag: PointFlag,
}

/// T and R of a single site on `grid`.
pub fn site_spectrum(p: &CqedParams, grid: &Grid) -> Result<Vec<SpectrumPoint>> {
    let p = p.validate()?;
    let grid = grid.validate()?;
    Ok(grid
        .points()
        .into_iter()
        .map(|delta| match t_r_general(&p, Detuning(delta)) {
            Ok(a) => SpectrumPoint {
                delta,
                transmission: a.transmission,
                reflection: a.reflection,
                flag: PointFlag::Ok,
            },
            Err(_) => SpectrumPoint {
                delta,
                transmission: 0.0,
                reflection: 1.0,
                flag: PointFlag::Singular,
            },
        })
        .collect())
}
