//! Pair interaction integrals and the large-radius energy expansions of a
//! single bump and of the k-bump ansatz.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eval_ansatz, place_bumps, PotentialSpec};
use crate::grid::{build_sector_grid, energy_functional, Field};
use crate::quadrature::Composite;
use crate::radial::{expansion_constants, sphere_area, ExpansionConstants, RadialProfile};

/// `Ψ(d) ≈ B̃2·d^{-ν}·e^{-λd}` on `[d_min, d_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionLaw {
    pub amplitude: f64,
    pub exponent: f64,
    pub prefactor_power: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// RMS misfit of `ln Ψ` over the samples.
    pub residual: f64,
}

impl InteractionLaw {
    pub fn eval(&self, d: f64) -> f64 {
        self.amplitude * d.powf(-self.prefactor_power) * (-self.exponent * d).exp()
    }
}

/// Box margin around the two centers, in decay lengths of `U`.
const PAIR_MARGIN: f64 = 20.0;

/// `Ψ(d) = ∫ U^p(y)·U(y - d·e_1) dy` with the default quadrature step.
pub fn interaction_integral(profile: &RadialProfile, d: f64) -> Result<f64> {
    let step = if profile.dimension() == 1 { 0.005 } else { 0.05 };
    interaction_integral_with(profile, d, step)
}

/// [`interaction_integral`] with an explicit midpoint step. In two or more
/// dimensions the integral is taken in cylindrical coordinates `(x, ρ)` around
/// the axis through both centers; when the radial weight `ρ^{N-2}` is odd the
/// midpoint rule is only second order and two Romberg levels are applied.
pub fn interaction_integral_with(profile: &RadialProfile, d: f64, step: f64) -> Result<f64> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidParameter(format!("pair distance d = {d} must be ≥ 0")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature step {step} must be > 0")));
    }
    let n = profile.dimension();
    if n >= 3 && n % 2 == 1 {
        let m: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|f| pair_midpoint(profile, d, step / f)).collect();
        let r1 = (4.0 * m[1] - m[0]) / 3.0;
        let r2 = (4.0 * m[2] - m[1]) / 3.0;
        return Ok((16.0 * r2 - r1) / 15.0);
    }
    Ok(pair_midpoint(profile, d, step))
}

fn pair_midpoint(profile: &RadialProfile, d: f64, step: f64) -> f64 {
    let p = profile.exponent();
    let n = profile.dimension();
    let (x0, x1) = (-PAIR_MARGIN, d + PAIR_MARGIN);
    let nx = ((x1 - x0) / step).ceil() as usize;
    let hx = (x1 - x0) / nx as f64;
    if n == 1 {
        let terms: Vec<f64> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let x = x0 + (i as f64 + 0.5) * hx;
                profile.value(x).powf(p) * profile.value(x - d)
            })
            .collect();
        return hx * terms.iter().sum::<f64>();
    }
    let rho_max = d / 2.0 + PAIR_MARGIN;
    let nr = (rho_max / step).ceil() as usize;
    let hr = rho_max / nr as f64;
    let shell = sphere_area(n - 1);
    let rows: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = x0 + (i as f64 + 0.5) * hx;
            let mut acc = 0.0;
            for j in 0..nr {
                let rho = (j as f64 + 0.5) * hr;
                let r1 = x.hypot(rho);
                let r2 = (x - d).hypot(rho);
                acc += profile.value(r1).powf(p) * profile.value(r2) * rho.powi(n as i32 - 2);
            }
            acc
        })
        .collect();
    shell * hx * hr * rows.iter().sum::<f64>()
}

fn check_samples(samples: &[(f64, f64)], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(Error::InvalidParameter(format!(
            "interaction fit needs at least {min} samples, got {}",
            samples.len()
        )));
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidParameter("sample distances must be strictly increasing".into()));
        }
    }
    for &(d, psi) in samples {
        if !(d > 0.0) || !(psi > 0.0) || !psi.is_finite() {
            return Err(Error::InvalidParameter(format!("sample (d = {d}, Ψ = {psi}) outside the log domain")));
        }
    }
    Ok(())
}

// least squares on columns scaled to unit norm; rejects numerically rank
// deficient designs
fn log_linear_fit(cols: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rhs.len();
    let scale: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i] / scale[j]);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-9 * smax) {
        return Err(Error::Degenerate(format!(
            "interaction fit design is rank deficient (σ_min/σ_max = {:.3e})",
            smin / smax
        )));
    }
    let b = DVector::from_column_slice(rhs);
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Degenerate(format!("interaction fit: {e}")))?;
    let resid = &a * &sol - b;
    let rms = (resid.norm_squared() / m as f64).sqrt();
    Ok(((0..cols.len()).map(|j| sol[j] / scale[j]).collect(), rms))
}

/// Least-squares fit of `ln Ψ = ln B̃2 - ν ln d - λ d`.
pub fn fit_interaction_law(samples: &[(f64, f64)]) -> Result<InteractionLaw> {
    check_samples(samples, 4)?;
    let ones = vec![1.0; samples.len()];
    let logd: Vec<f64> = samples.iter().map(|s| -s.0.ln()).collect();
    let dist: Vec<f64> = samples.iter().map(|s| -s.0).collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (c, residual) = log_linear_fit(&[ones, logd, dist], &rhs)?;
    Ok(InteractionLaw {
        amplitude: c[0].exp(),
        prefactor_power: c[1],
        exponent: c[2],
        d_min: samples[0].0,
        d_max: samples[samples.len() - 1].0,
        residual,
    })
}

/// The same fit with the algebraic prefactor pinned to `ν = 0`.
pub fn fit_pure_exponential(samples: &[(f64, f64)]) -> Result<InteractionLaw> {
    check_samples(samples, 4)?;
    let ones = vec![1.0; samples.len()];
    let dist: Vec<f64> = samples.iter().map(|s| -s.0).collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (c, residual) = log_linear_fit(&[ones, dist], &rhs)?;
    Ok(InteractionLaw {
        amplitude: c[0].exp(),
        prefactor_power: 0.0,
        exponent: c[1],
        d_min: samples[0].0,
        d_max: samples[samples.len() - 1].0,
        residual,
    })
}

/// `Ψ` on `n` equally spaced distances in `[d_min, d_max]`.
pub fn sample_interaction(profile: &RadialProfile, d_min: f64, d_max: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 || !(d_max > d_min) {
        return Err(Error::InvalidParameter(format!("bad sampling range [{d_min}, {d_max}] with {n} points")));
    }
    (0..n)
        .map(|i| {
            let d = d_min + (d_max - d_min) * i as f64 / (n - 1) as f64;
            Ok((d, interaction_integral(profile, d)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleBumpRow {
    pub r: f64,
    /// `I(U_{x_1})` with `|x_1| = r`.
    pub energy: f64,
    pub a: f64,
    pub b1: f64,
    /// `(I - A - B1/r^m)·r^m`.
    pub scaled_residual: f64,
}

/// `½∫(V(|y|) - 1)·U(|y - x_1|)² dy` for `|x_1| = r`, in polar coordinates
/// around the bump center. Gauss–Legendre in both the distance `s` to the
/// center and the angle `φ` between `y - x_1` and `x_1`.
pub fn potential_energy(profile: &RadialProfile, potential: &PotentialSpec, r: f64) -> f64 {
    let n = profile.dimension();
    let s_rule = Composite::new(0.0, 32.0, 128, 8);
    let phi_rule = Composite::new(0.0, PI, 32, 12);
    let excess = |t: f64| potential.value(t) - 1.0;
    let shell = if n >= 2 { sphere_area(n - 1) } else { 0.0 };
    let radial: Vec<f64> = s_rule
        .nodes
        .par_iter()
        .map(|&s| {
            let g = if n == 1 {
                excess((r + s).abs()) + excess((r - s).abs())
            } else {
                shell
                    * phi_rule.integrate(|phi| {
                        let t = (r * r + 2.0 * r * s * phi.cos() + s * s).max(0.0).sqrt();
                        excess(t) * phi.sin().powi(n as i32 - 2)
                    })
            };
            s.powi(n as i32 - 1) * profile.value(s).powi(2) * g
        })
        .collect();
    let total: f64 = radial.iter().zip(&s_rule.weights).map(|(f, w)| f * w).sum();
    0.5 * total
}

/// `I(U_{x_1}) = A + ½∫(V - 1)U_{x_1}²` for each radius; the split is exact by
/// translation invariance of the `V ≡ 1` functional, so only the potential
/// term depends on `r`.
pub fn single_bump_energy_report(
    profile: &RadialProfile,
    potential: &PotentialSpec,
    radii: &[f64],
) -> Result<Vec<SingleBumpRow>> {
    let consts = expansion_constants(profile, potential)?;
    radii
        .iter()
        .map(|&r| {
            if !(r >= 5.0) {
                return Err(Error::InvalidParameter(format!("single-bump radius r = {r} must be ≥ 5")));
            }
            let energy = consts.a + potential_energy(profile, potential, r);
            let rm = r.powf(potential.m);
            Ok(SingleBumpRow {
                r,
                energy,
                a: consts.a,
                b1: consts.b1,
                scaled_residual: (energy - consts.a - consts.b1 / rm) * rm,
            })
        })
        .collect()
}

/// `I(U_{x_1})` from the sector grid energy, for comparison with the
/// quadrature in [`single_bump_energy_report`].
pub fn single_bump_grid_energy(profile: &RadialProfile, potential: &PotentialSpec, r: f64, h: f64) -> Result<f64> {
    let grid = Arc::new(build_sector_grid(1, r + 15.0, r, h)?);
    let config = place_bumps(1, r)?;
    let u = Field::from_fn(grid, |y| eval_ansatz(&config, profile, &y));
    Ok(energy_functional(&u, potential, profile.exponent()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

/// `k·(A + B1/r^m - B2·e^{-2πr/k})`.
pub fn ansatz_energy_asymptotic(k: usize, r: f64, c: &AsymptoticConstants, m: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("ansatz expansion needs k ≥ 2, got {k}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("ring radius r = {r} must be > 0")));
    }
    let kf = k as f64;
    Ok(kf * (c.a + c.b1 / r.powf(m) - c.b2 * (-2.0 * PI * r / kf).exp()))
}

/// The `B2` that makes the closed formula reproduce the fitted pair law at the
/// nearest-neighbor distance: `B2·e^{-2πr/k} = Ψ(2r sin(π/k))`.
pub fn effective_b2(law: &InteractionLaw, k: usize, r: f64) -> f64 {
    let kf = k as f64;
    law.eval(2.0 * r * (PI / kf).sin()) * (2.0 * PI * r / kf).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionOptions {
    pub h: f64,
    /// `R_out = r + margin`.
    pub margin: f64,
    /// Combine grids `h` and `h/2` to cancel the second-order grid error.
    pub richardson: bool,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            h: 0.05,
            margin: 15.0,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub k: usize,
    pub r: f64,
    /// Nearest-neighbor distance `2r sin(π/k)`; zero for `k = 1`.
    pub d: f64,
    pub i_numeric: f64,
    /// `k(A + B1/r^m - B2 e^{-2πr/k})` with `B2` from [`effective_b2`].
    pub i_asymptotic: f64,
    pub mismatch: f64,
    /// Same with every pair `½Σ_j Ψ(2r sin(πj/k))` instead of the nearest two.
    pub i_all_pairs: f64,
    pub mismatch_all_pairs: f64,
    pub b2: f64,
}

/// Grid energy of the ansatz `W_r`.
pub fn ansatz_grid_energy(profile: &RadialProfile, potential: &PotentialSpec, k: usize, r: f64, h: f64, margin: f64) -> Result<f64> {
    let grid = Arc::new(build_sector_grid(k, r + margin, r, h)?);
    let config = place_bumps(k, r)?;
    let w = Field::from_fn(grid, |y| eval_ansatz(&config, profile, &y));
    Ok(energy_functional(&w, potential, profile.exponent()))
}

/// Numeric `I(W_r)` against the expansion for every `(k, r)` in `points`.
pub fn expansion_comparison(
    profile: &RadialProfile,
    potential: &PotentialSpec,
    law: &InteractionLaw,
    points: &[(usize, f64)],
    opts: &ExpansionOptions,
) -> Result<Vec<ExpansionRow>> {
    let consts: ExpansionConstants = expansion_constants(profile, potential)?;
    points
        .par_iter()
        .map(|&(k, r)| {
            let numeric = if opts.richardson {
                let coarse = ansatz_grid_energy(profile, potential, k, r, opts.h, opts.margin)?;
                let fine = ansatz_grid_energy(profile, potential, k, r, opts.h / 2.0, opts.margin)?;
                (4.0 * fine - coarse) / 3.0
            } else {
                ansatz_grid_energy(profile, potential, k, r, opts.h, opts.margin)?
            };
            let single = consts.a + consts.b1 / r.powf(potential.m);
            let (d, asym, all, b2) = if k == 1 {
                (0.0, single, single, 0.0)
            } else {
                let kf = k as f64;
                let b2 = effective_b2(law, k, r);
                let c = AsymptoticConstants {
                    a: consts.a,
                    b1: consts.b1,
                    b2,
                };
                let asym = ansatz_energy_asymptotic(k, r, &c, potential.m)?;
                let pairs: f64 = (1..k).map(|j| law.eval(2.0 * r * (PI * j as f64 / kf).sin())).sum();
                (2.0 * r * (PI / kf).sin(), asym, kf * (single - 0.5 * pairs), b2)
            };
            Ok(ExpansionRow {
                k,
                r,
                d,
                i_numeric: numeric,
                i_asymptotic: asym,
                mismatch: ((numeric - asym) / numeric).abs(),
                i_all_pairs: all,
                mismatch_all_pairs: ((numeric - all) / numeric).abs(),
                b2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::admissible_radii;
    use crate::radial::solve_ground_state;
    use crate::test_support::profile_2d;

    fn pot() -> PotentialSpec {
        PotentialSpec::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn coincident_centers_give_power_integral() {
        let prof = &profile_2d();
        let psi = interaction_integral(prof, 0.0).unwrap();
        let direct = prof.radial_integral(4.0).unwrap();
        assert!((psi - direct).abs() / direct < 1e-6, "{psi} vs {direct}");
        let prof3 = solve_ground_state(3, 3.0, 1e-10).unwrap();
        let psi3 = interaction_integral(&prof3, 0.0).unwrap();
        let direct3 = prof3.radial_integral(4.0).unwrap();
        assert!((psi3 - direct3).abs() / direct3 < 1e-6, "{psi3} vs {direct3}");
        assert!(interaction_integral(prof, -1.0).is_err());
    }

    #[test]
    fn stable_under_refinement() {
        let prof = &profile_2d();
        for d in [3.0, 10.0, 16.0] {
            let a = interaction_integral_with(prof, d, 0.05).unwrap();
            let b = interaction_integral_with(prof, d, 0.025).unwrap();
            assert!((a - b).abs() / b < 1e-6, "d = {d}: {a} vs {b}");
        }
    }

    // polar coordinates around the first center, Gauss–Legendre in both
    // variables: Ψ(d) = ∫ s U(s)^p ∫ U(|s e^{iφ} - d|) dφ ds
    fn polar_pair(prof: &RadialProfile, d: f64) -> f64 {
        let s_rule = Composite::new(0.0, 25.0, 100, 8);
        let phi_rule = Composite::new(0.0, PI, 40, 12);
        2.0 * s_rule.integrate(|s| {
            s * prof.value(s).powi(3)
                * phi_rule.integrate(|phi| prof.value((s * s + d * d - 2.0 * s * d * phi.cos()).max(0.0).sqrt()))
        })
    }

    #[test]
    fn matches_polar_quadrature() {
        let prof = &profile_2d();
        for d in [2.0, 6.0, 12.0] {
            let a = interaction_integral(prof, d).unwrap();
            let b = polar_pair(prof, d);
            assert!((a - b).abs() / b < 1e-6, "d = {d}: {a} vs {b}");
        }
    }

    #[test]
    fn decreasing_and_log_convex() {
        let prof = &profile_2d();
        let s = sample_interaction(prof, 4.0, 16.0, 7).unwrap();
        for w in s.windows(2) {
            assert!(w[1].1 < w[0].1 && w[1].1 > 0.0);
        }
        for w in s.windows(3) {
            assert!(w[1].1.ln() <= 0.5 * (w[0].1.ln() + w[2].1.ln()));
        }
    }

    #[test]
    fn one_dimensional_pure_exponential() {
        let prof = solve_ground_state(1, 3.0, 1e-10).unwrap();
        let ratio = interaction_integral(&prof, 11.0).unwrap() / interaction_integral(&prof, 10.0).unwrap();
        let expected = (-1.0f64).exp();
        assert!((ratio - expected).abs() / expected < 0.03, "{ratio}");
    }

    #[test]
    fn fit_recovers_exact_model() {
        let samples: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let d = 4.0 + 2.0 * i as f64;
                (d, 2.5 * d.powf(-0.5) * (-d).exp())
            })
            .collect();
        let law = fit_interaction_law(&samples).unwrap();
        assert!((law.amplitude - 2.5).abs() < 1e-8);
        assert!((law.prefactor_power - 0.5).abs() < 1e-8);
        assert!((law.exponent - 1.0).abs() < 1e-8);
        assert!(law.residual < 1e-10);
        assert_eq!((law.d_min, law.d_max), (4.0, 14.0));
        let pure = fit_pure_exponential(&samples).unwrap();
        assert_eq!(pure.prefactor_power, 0.0);
        assert!(pure.residual > law.residual);
    }

    #[test]
    fn fit_preconditions() {
        let three = [(1.0, 1.0), (2.0, 0.5), (3.0, 0.2)];
        assert!(matches!(fit_interaction_law(&three), Err(Error::InvalidParameter(_))));
        let unordered = [(1.0, 1.0), (3.0, 0.5), (2.0, 0.2), (4.0, 0.1)];
        assert!(matches!(fit_interaction_law(&unordered), Err(Error::InvalidParameter(_))));
        let negative = [(1.0, 1.0), (2.0, -0.5), (3.0, 0.2), (4.0, 0.1)];
        assert!(fit_interaction_law(&negative).is_err());
        let clustered: Vec<(f64, f64)> = (0..5).map(|i| (10.0 + i as f64 * 1e-9, 1.0 + i as f64 * 1e-3)).collect();
        assert!(matches!(fit_interaction_law(&clustered), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_dimensional_interaction_law() {
        let s = sample_interaction(&profile_2d(), 8.0, 16.0, 9).unwrap();
        let law = fit_interaction_law(&s).unwrap();
        assert!((law.exponent - 1.0).abs() < 0.01, "{law:?}");
        assert!((law.prefactor_power - 0.5).abs() < 0.05, "{law:?}");
    }

    #[test]
    fn next_nearest_pairs_are_subdominant() {
        let prof = &profile_2d();
        for k in [6usize, 8, 10, 12] {
            let s = admissible_radii(k, 2.0, 0.1).unwrap();
            for r in [s.lower, s.upper] {
                let kf = k as f64;
                let near = interaction_integral(prof, 2.0 * r * (PI / kf).sin()).unwrap();
                let next = interaction_integral(prof, 2.0 * r * (2.0 * PI / kf).sin()).unwrap();
                assert!(next / near <= (-PI * r / kf).exp(), "k = {k}, r = {r}");
            }
        }
    }

    #[test]
    fn flat_potential_single_bump_is_a() {
        let rows = single_bump_energy_report(&profile_2d(), &PotentialSpec::flat(), &[5.0, 12.0]).unwrap();
        for row in rows {
            assert_eq!(row.energy, row.a);
        }
        assert!(single_bump_energy_report(&profile_2d(), &pot(), &[4.0]).is_err());
    }

    #[test]
    fn single_bump_expansion() {
        let rows = single_bump_energy_report(&profile_2d(), &pot(), &[20.0, 40.0]).unwrap();
        let b1 = rows[0].b1;
        assert!((rows[0].energy - rows[0].a - b1 / 400.0).abs() <= 0.05 * b1 / 400.0);
        let ratio = rows[0].scaled_residual.abs() / rows[1].scaled_residual.abs();
        assert!(ratio >= 2.0, "ratio {ratio}");
    }

    #[test]
    fn single_bump_quadrature_matches_grid() {
        let prof = &profile_2d();
        let coarse = single_bump_grid_energy(prof, &pot(), 6.0, 0.1).unwrap();
        let fine = single_bump_grid_energy(prof, &pot(), 6.0, 0.05).unwrap();
        let grid = (4.0 * fine - coarse) / 3.0;
        let quad = expansion_constants(prof, &pot()).unwrap().a + potential_energy(prof, &pot(), 6.0);
        assert!((grid - quad).abs() < 2e-5, "{grid} vs {quad}");
    }

    #[test]
    fn closed_formula() {
        let c = AsymptoticConstants { a: 1.0, b1: 2.0, b2: 3.0 };
        let v = ansatz_energy_asymptotic(5, 10.0, &c, 2.0).unwrap();
        assert!((v - 5.0 * (1.02 - 3.0 * (-4.0 * PI).exp())).abs() < 1e-14);
        assert!((v - 5.09995).abs() < 1e-5);
        let flat = AsymptoticConstants { b2: 0.0, ..c };
        let mut last = f64::INFINITY;
        for i in 1..50 {
            let e = ansatz_energy_asymptotic(7, i as f64, &flat, 2.0).unwrap();
            assert!(e < last);
            last = e;
        }
        let far = ansatz_energy_asymptotic(7, 1e8, &c, 2.0).unwrap();
        assert!((far - 7.0).abs() < 1e-9);
        assert!(ansatz_energy_asymptotic(1, 5.0, &c, 2.0).is_err());
        assert!(ansatz_energy_asymptotic(6, 0.0, &c, 2.0).is_err());
    }

    #[test]
    fn expansion_table() {
        let prof = &profile_2d();
        let law = fit_interaction_law(&sample_interaction(prof, 8.0, 16.0, 9).unwrap()).unwrap();
        let mid = |k| admissible_radii(k, 2.0, 0.1).unwrap().midpoint();
        let pts = [(1, 6.0), (6, mid(6)), (8, mid(8)), (10, mid(10))];
        let rows = expansion_comparison(prof, &pot(), &law, &pts, &ExpansionOptions::default()).unwrap();
        let c = expansion_constants(prof, &pot()).unwrap();
        assert_eq!(rows[0].i_asymptotic, c.a + c.b1 / 36.0);
        assert!(rows[0].mismatch < 1e-3);
        assert!(rows[2].mismatch <= 0.05, "{:?}", rows[2]);
        assert!(rows[3].mismatch <= rows[1].mismatch);
        for row in &rows[1..] {
            assert!((row.d - 2.0 * row.r * (PI / row.k as f64).sin()).abs() < 1e-12);
            assert!(row.b2 > 0.0);
        }
    }
}
