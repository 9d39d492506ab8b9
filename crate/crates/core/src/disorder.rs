//! Gaussian position disorder and ensemble-averaged spectra.
//!
//! Positions are measured in units of λ₀. Site j has mean position j·L and
//! the spacing between consecutive sites sets the fiber phase between them.
//! Realization k draws from its own ChaCha stream `k` of the master seed, so
//! any schedule of realizations reproduces the serial result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{CqedParams, Detuning};
use crate::site::{PointFlag, SpectrumPoint};
use crate::transfer::{chain_point, propagation_phase, LatticeSpec};

/// Ordered draws attempted per site before giving up.
pub const MAX_ORDERING_ATTEMPTS: usize = 1000;

/// Largest σ/L still classed as weak disorder.
pub const WEAK_DISORDER_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    /// σ/L in (0, 0.5].
    pub sigma_over_l: f64,
    /// Number of realizations M.
    pub realizations: usize,
    pub seed: u64,
    /// Resample a site whose draw does not exceed its predecessor.
    pub clamp: bool,
}

impl DisorderSpec {
    pub fn new(sigma_over_l: f64, realizations: usize, seed: u64) -> Self {
        Self {
            sigma_over_l,
            realizations,
            seed,
            clamp: true,
        }
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.sigma_over_l > 0.0 && self.sigma_over_l <= 0.5) {
            return Err(Error::InvalidDisorder(format!(
                "sigma_over_l must lie in (0, 0.5], got {}",
                self.sigma_over_l
            )));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidDisorder(
                "realizations must be positive".into(),
            ));
        }
        Ok(self)
    }

    pub fn is_weak(&self) -> bool {
        self.sigma_over_l <= WEAK_DISORDER_LIMIT
    }
}

/// Positions x_0 … x_{N−1} in units of λ₀ for one realization.
pub fn sample_positions(
    spec: &LatticeSpec,
    dspec: &DisorderSpec,
    realization_index: u64,
) -> Result<Vec<f64>> {
    let spec = spec.validate()?;
    let dspec = dspec.validate()?;
    let l = spec.l_over_lambda0;
    let sigma = dspec.sigma_over_l * l;
    let mut rng = ChaCha8Rng::seed_from_u64(dspec.seed);
    rng.set_stream(realization_index);
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidDisorder(format!("normal distribution: {e}")))?;

    let mut positions: Vec<f64> = Vec::with_capacity(spec.n_sites);
    for j in 0..spec.n_sites {
        let mean = j as f64 * l;
        let mut x = mean + noise.sample(&mut rng);
        if dspec.clamp {
            if let Some(&prev) = positions.last() {
                let mut attempts = 1;
                while x <= prev {
                    if attempts == MAX_ORDERING_ATTEMPTS {
                        return Err(Error::OrderingUnsatisfiable { site: j, attempts });
                    }
                    x = mean + noise.sample(&mut rng);
                    attempts += 1;
                }
            }
        }
        positions.push(x);
    }
    Ok(positions)
}

fn check_positions(spec: &LatticeSpec, positions: &[f64]) -> Result<()> {
    if positions.len() != spec.n_sites {
        return Err(Error::InvalidDisorder(format!(
            "expected {} positions, got {}",
            spec.n_sites,
            positions.len()
        )));
    }
    if let Some((i, &x)) = positions.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::InvalidDisorder(format!("position {i} is {x}")));
    }
    for (index, pair) in positions.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::NonIncreasingPositions {
                index: index + 1,
                value: pair[1],
                previous: pair[0],
            });
        }
    }
    Ok(())
}

/// Fiber phases in propagation order; the first site has no leading fiber.
fn realization_phases(spec: &LatticeSpec, positions: &[f64], d: Detuning) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(
            positions
                .windows(2)
                .map(|w| propagation_phase(w[1] - w[0], spec.phase_model, spec.rho, d)),
        )
        .collect()
}

/// T and R of one disordered chain with sites at `positions` (units of λ₀).
pub fn realization_spectrum(
    p: &CqedParams,
    spec: &LatticeSpec,
    positions: &[f64],
    grid: &Grid,
) -> Result<Vec<SpectrumPoint>> {
    let p = p.validate()?;
    let spec = spec.validate()?;
    let grid = grid.validate()?;
    check_positions(&spec, positions)?;
    Ok(grid
        .points()
        .into_iter()
        .map(|delta| {
            let phases = realization_phases(&spec, positions, Detuning(delta));
            chain_point(&p, delta, &phases)
        })
        .collect())
}

/// Ensemble statistics at one detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderStats {
    pub delta: f64,
    pub mean_t: f64,
    pub stderr_t: f64,
    pub mean_r: f64,
    pub stderr_r: f64,
    /// Realizations not flagged singular at this point.
    pub m_effective: usize,
}

/// Mean and standard error; NaN where fewer than two samples survive.
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Mean spectra over realizations `0..M`.
///
/// Realizations run in parallel and are reduced serially in index order.
/// Points flagged singular in a realization are left out of that point's
/// statistics; full-reflection points count with T = 0.
pub fn ensemble_average(
    p: &CqedParams,
    spec: &LatticeSpec,
    dspec: &DisorderSpec,
    grid: &Grid,
) -> Result<Vec<DisorderStats>> {
    let p = p.validate()?;
    let spec = spec.validate()?;
    let dspec = dspec.validate()?;
    let grid = grid.validate()?;
    if dspec.realizations < 2 {
        return Err(Error::InvalidDisorder(format!(
            "ensemble averaging needs at least 2 realizations, got {}",
            dspec.realizations
        )));
    }
    let spectra: Vec<Vec<SpectrumPoint>> = (0..dspec.realizations as u64)
        .into_par_iter()
        .map(|k| {
            let positions = sample_positions(&spec, &dspec, k)?;
            realization_spectrum(&p, &spec, &positions, &grid)
        })
        .collect::<Result<_>>()?;

    let deltas = grid.points();
    let mut t = Vec::with_capacity(dspec.realizations);
    let mut r = Vec::with_capacity(dspec.realizations);
    Ok(deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            t.clear();
            r.clear();
            for point in spectra.iter().map(|s| &s[i]) {
                if point.flag != PointFlag::Singular {
                    t.push(point.transmission);
                    r.push(point.reflection);
                }
            }
            let (mean_t, stderr_t) = mean_stderr(&t);
            let (mean_r, stderr_r) = mean_stderr(&r);
            DisorderStats {
                delta,
                mean_t,
                stderr_t,
                mean_r,
                stderr_r,
                m_effective: t.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Regime;
    use crate::transfer::array_spectrum;

    fn case1() -> CqedParams {
        Regime::DecoupledLossless.params()
    }

    #[test]
    fn spec_validation() {
        assert!(DisorderSpec::new(0.0, 10, 1).validate().is_err());
        assert!(DisorderSpec::new(0.6, 10, 1).validate().is_err());
        assert!(DisorderSpec::new(0.25, 0, 1).validate().is_err());
        assert!(DisorderSpec::new(0.5, 10, 1).validate().is_ok());
        assert!(DisorderSpec::new(0.25, 1, 1).is_weak());
        assert!(!DisorderSpec::new(0.3, 1, 1).is_weak());
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = LatticeSpec::new(10, 0.25);
        let d = DisorderSpec::new(0.25, 100, 42);
        let a = sample_positions(&spec, &d, 7).unwrap();
        let b = sample_positions(&spec, &d, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_positions(&spec, &d, 8).unwrap());
    }

    #[test]
    fn seeded_positions_fixture() {
        let spec = LatticeSpec::new(10, 0.25);
        let x = sample_positions(&spec, &DisorderSpec::new(0.25, 100, 42), 0).unwrap();
        assert_eq!(x.len(), 10);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        let expected = [
            0.02987382739693886,
            0.333379413139488,
            0.4868208322955606,
            0.7797716827380513,
            0.9679943361214898,
            1.1916263469130814,
            1.4373513847414,
            1.807291472474573,
            2.132598541067438,
            2.2050907892454434,
        ];
        assert_eq!(x, expected);
    }

    #[test]
    fn vanishing_disorder_is_periodic() {
        let spec = LatticeSpec::new(10, 0.25);
        let x = sample_positions(&spec, &DisorderSpec::new(1e-12, 5, 3), 0).unwrap();
        for (j, xj) in x.iter().enumerate() {
            assert!((xj - j as f64 * 0.25).abs() < 1e-9 * 0.25);
        }
    }

    #[test]
    fn spacing_spread_is_sigma_root_two() {
        let spec = LatticeSpec::new(2, 1.0);
        let d = DisorderSpec {
            clamp: false,
            ..DisorderSpec::new(0.1, 1, 9)
        };
        let spacings: Vec<f64> = (0..10_000u64)
            .map(|k| {
                let x = sample_positions(&spec, &d, k).unwrap();
                x[1] - x[0]
            })
            .collect();
        let (_, stderr) = mean_stderr(&spacings);
        let sd = stderr * (spacings.len() as f64).sqrt();
        let expected = 0.1 * 2f64.sqrt();
        assert!((sd / expected - 1.0).abs() < 0.05, "sd = {sd}");
    }

    #[test]
    fn ordering_failure_is_reported() {
        let spec = LatticeSpec::new(3, 1.0);
        let mut d = DisorderSpec::new(0.5, 1, 0);
        d.clamp = true;
        // every draw is resampled against its predecessor, so valid output is increasing
        for k in 0..200 {
            let x = sample_positions(&spec, &d, k).unwrap();
            assert!(x.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn periodic_positions_reproduce_array() {
        let spec = LatticeSpec::new(10, 0.25);
        let grid = Grid::inclusive(-10.0, 10.0, 401).unwrap();
        let positions: Vec<f64> = (0..10).map(|j| j as f64 * 0.25).collect();
        for regime in Regime::ALL {
            let p = regime.params();
            let a = array_spectrum(&p, &spec, &grid).unwrap();
            let b = realization_spectrum(&p, &spec, &positions, &grid).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.flag, y.flag);
                assert!(
                    (x.transmission - y.transmission).abs() < 1e-12,
                    "{}",
                    regime.name()
                );
                assert!(
                    (x.reflection - y.reflection).abs() < 1e-12,
                    "{}",
                    regime.name()
                );
            }
        }
    }

    #[test]
    fn single_site_realization_is_the_site() {
        let spec = LatticeSpec::new(1, 0.25);
        let p = Regime::StrongDetuned.params();
        let grid = Grid::inclusive(-10.0, 10.0, 101).unwrap();
        let a = crate::site::site_spectrum(&p, &grid).unwrap();
        let b = realization_spectrum(&p, &spec, &[0.731], &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.transmission - y.transmission).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_positions() {
        let spec = LatticeSpec::new(3, 0.25);
        let grid = Grid::inclusive(-1.0, 1.0, 3).unwrap();
        assert!(matches!(
            realization_spectrum(&case1(), &spec, &[0.0, 0.3, 0.3], &grid),
            Err(Error::NonIncreasingPositions { index: 2, .. })
        ));
        assert!(matches!(
            realization_spectrum(&case1(), &spec, &[0.0, 0.3], &grid),
            Err(Error::InvalidDisorder(_))
        ));
    }

    #[test]
    fn ensemble_needs_two_realizations() {
        let spec = LatticeSpec::new(3, 0.25);
        let grid = Grid::inclusive(-1.0, 1.0, 3).unwrap();
        assert!(ensemble_average(&case1(), &spec, &DisorderSpec::new(0.25, 1, 0), &grid).is_err());
    }

    #[test]
    fn vanishing_disorder_ensemble_matches_periodic() {
        let spec = LatticeSpec::new(10, 0.25);
        let grid = Grid::cell_centered(-10.0, 10.0, 200).unwrap();
        for p in [case1(), Regime::WeakNoBackscatter.params()] {
            let periodic = array_spectrum(&p, &spec, &grid).unwrap();
            for sigma in [1e-12, 1e-6] {
                let stats =
                    ensemble_average(&p, &spec, &DisorderSpec::new(sigma, 5, 11), &grid).unwrap();
                for (s, q) in stats.iter().zip(&periodic) {
                    let tol = if sigma == 1e-12 { 1e-9 } else { 1e-3 };
                    assert!(
                        (s.mean_t - q.transmission).abs() < tol,
                        "σ = {sigma}: {s:?}"
                    );
                    if sigma == 1e-12 {
                        assert!(s.stderr_t < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn determinism_is_independent_of_worker_count() {
        let spec = LatticeSpec::new(10, 0.25);
        let grid = Grid::inclusive(-5.0, 5.0, 51).unwrap();
        let d = DisorderSpec::new(0.25, 40, 2024);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_average(&case1(), &spec, &d, &grid).unwrap())
        };
        let one = run(1);
        let four = run(4);
        for (a, b) in one.iter().zip(&four) {
            assert_eq!(a.mean_t.to_bits(), b.mean_t.to_bits());
            assert_eq!(a.stderr_r.to_bits(), b.stderr_r.to_bits());
        }
    }

    #[test]
    fn lossless_mean_conserves_flux() {
        let spec = LatticeSpec::new(10, 0.25);
        let grid = Grid::inclusive(-10.0, 10.0, 201).unwrap();
        let stats =
            ensemble_average(&case1(), &spec, &DisorderSpec::new(0.25, 50, 5), &grid).unwrap();
        for s in stats {
            let tol = 2.0 * (s.stderr_t + s.stderr_r) + 1e-10;
            assert!((s.mean_t + s.mean_r - 1.0).abs() <= tol, "{s:?}");
        }
    }

    #[test]
    fn stderr_halves_with_four_times_the_realizations() {
        // Δ = 0 itself transmits nothing in every realization, so the check sits off resonance
        let spec = LatticeSpec::new(10, 0.25);
        let grid = Grid::inclusive(3.0, 4.0, 2).unwrap();
        let at = |m| {
            ensemble_average(&case1(), &spec, &DisorderSpec::new(0.25, m, 77), &grid).unwrap()[0]
                .stderr_t
        };
        let ratio = at(400) / at(100);
        assert!((0.4..=0.6).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn disorder_leaves_an_opaque_window_at_resonance() {
        let spec = LatticeSpec::new(10, 0.25);
        let grid = Grid::inclusive(-0.2, 0.2, 41).unwrap();
        let stats =
            ensemble_average(&case1(), &spec, &DisorderSpec::new(0.25, 100, 42), &grid).unwrap();
        assert!(stats.iter().all(|s| s.mean_t < 0.01));
    }
}
