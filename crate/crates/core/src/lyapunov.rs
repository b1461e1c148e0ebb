//! The constrained space `E`, the projected linearization `L`, the Riesz
//! representative `l_k`, the remainder `R` and the fixed-point solve for the
//! correction `φ(r)`.
//!
//! With `J(φ) = I(W_r + φ)` for `φ ∈ E`,
//!
//! `J(φ) = J(0) + l(φ) + ½⟨Lφ, φ⟩ - R(φ)`,
//!
//! `l(φ) = ∫(V-1)W_r φ - ∫(W_r^p - Σ U_{x_i}^p) φ`,
//! `R(φ) = 1/(p+1) ∫(|W+φ|^{p+1} - W^{p+1} - (p+1)W^p φ - ½(p+1)p W^{p-1} φ²)`,
//!
//! so critical points on `E` solve `φ = L^{-1}(R'(φ) - l_k)`.
//!
//! All operators act on the sector values of `H_s` fields. Riesz maps use the
//! Gram matrix `G = S + diag(wV)`, for which `⟨u, v⟩ = 2k·uᵀGv`, so the
//! representative of a density `g` (the functional `v ↦ ∫ g v`) is `G^{-1}(w g)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::geometry::{place_bumps, BumpConfiguration, PotentialSpec};
use crate::grid::{Field, SectorGrid};
use crate::krylov::{lanczos, minres};
use crate::radial::RadialProfile;

/// Grid, potential and factored Gram matrix, shared by every radius of one `k`.
#[derive(Debug)]
pub struct SectorOperator {
    grid: Arc<SectorGrid>,
    potential: PotentialSpec,
    exponent: f64,
    weights: Vec<f64>,
    potential_values: Vec<f64>,
    gram: BandedCholesky,
}

impl SectorOperator {
    pub fn new(grid: Arc<SectorGrid>, potential: PotentialSpec, exponent: f64) -> Result<Self> {
        let weights = grid.weights();
        let potential_values = grid.potential_values(&potential);
        let wv: Vec<f64> = weights.iter().zip(&potential_values).map(|(w, v)| w * v).collect();
        let gram = grid.assemble(&wv).cholesky()?;
        Ok(SectorOperator {
            grid,
            potential,
            exponent,
            weights,
            potential_values,
            gram,
        })
    }

    pub fn grid(&self) -> &Arc<SectorGrid> {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.potential_values
    }

    /// `G v`.
    pub fn gram_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.grid.stiffness_apply(v);
        for (n, o) in out.iter_mut().enumerate() {
            *o += self.weights[n] * self.potential_values[n] * v[n];
        }
        out
    }

    /// `⟨u, v⟩` over the whole space.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let gv = self.gram_apply(v);
        self.grid.multiplicity() * u.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Riesz representative of the functional `v ↦ ∫ g v`.
    pub fn riesz_density(&self, g: &[f64]) -> Vec<f64> {
        let wg: Vec<f64> = g.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        self.gram.solve(&wg)
    }

    /// Riesz representative of the functional `v ↦ 2k·aᵀv` given by nodal loads.
    pub fn riesz_loads(&self, a: &[f64]) -> Vec<f64> {
        self.gram.solve(a)
    }

    pub fn field(&self, values: Vec<f64>) -> Field {
        Field::from_values(self.grid.clone(), values).expect("values sized to the grid")
    }
}

/// The weight `ω = Σ_j U_{x_j}^{p-1} Z_j` defining `c(v) = ∫ U_{x_1}^{p-1} Z_1 v`
/// (equal to `(1/k)∫ ω v` for `v ∈ H_s`), plus its Riesz representative `z`.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub omega: Field,
    /// `γ = ∫ U_{x_1}^{p-1} Z_1²`.
    pub gamma: f64,
    z: Vec<f64>,
    cz: f64,
}

impl ConstraintSpec {
    /// `c(v) = ∫ U_{x_1}^{p-1} Z_1 v`.
    pub fn value(&self, v: &[f64]) -> f64 {
        let g = self.omega.grid();
        let om = self.omega.values();
        let s: f64 = (0..g.len()).map(|n| g.weight(n) * om[n] * v[n]).sum();
        2.0 * s
    }

    /// Representative `z` with `⟨z, v⟩ = c(v)`.
    pub fn representative(&self) -> &[f64] {
        &self.z
    }
}

/// How the linearization is formed; the non-default modes are test hooks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearMode {
    /// `L = P G^{-1}(S + diag(w(V - pW^{p-1})))`.
    Projected,
    /// `W ≡ 0`: the form reduces to the inner product and `L` to the identity on `E`.
    FreeField,
    /// Constraint removed: `G^{-1}(S + diag(w(V - pW^{p-1})))` on all of `H_s`.
    Unprojected,
}

/// `W_r`, its pieces and the constraint for one `(k, r)`.
#[derive(Debug, Clone)]
pub struct Ansatz {
    pub config: BumpConfiguration,
    pub op: Arc<SectorOperator>,
    /// `W_r = Σ U_{x_j}`.
    pub w: Field,
    /// `U_{x_1}` alone.
    pub first: Field,
    /// `Σ U_{x_j}^p`.
    pub sum_pow: Vec<f64>,
    pub constraint: ConstraintSpec,
}

impl Ansatz {
    pub fn new(op: Arc<SectorOperator>, profile: &RadialProfile, r: f64) -> Result<Ansatz> {
        let grid = op.grid().clone();
        let k = grid.k();
        let config = place_bumps(k, r)?;
        if r >= grid.r_out() {
            return Err(Error::InvalidParameter(format!(
                "ring radius {r} lies outside the grid (R_out = {})",
                grid.r_out()
            )));
        }
        let p = op.exponent();
        let nodes: Vec<[f64; 5]> = {
            use rayon::prelude::*;
            (0..grid.len())
                .into_par_iter()
                .map(|n| {
                    let y = grid.coords(n);
                    let mut acc = [0.0; 5];
                    for (j, c) in config.centers.iter().enumerate() {
                        let (dx, dy) = (y[0] - c[0], y[1] - c[1]);
                        let d = dx.hypot(dy);
                        let (u, du) = profile.eval(d);
                        let z = if d > 0.0 { -du * (dx * c[0] + dy * c[1]) / (d * r) } else { 0.0 };
                        let upm1 = u.abs().powf(p - 1.0);
                        acc[0] += u;
                        acc[1] += upm1 * u;
                        acc[2] += upm1 * z;
                        acc[3] += upm1 * z * z;
                        if j == 0 {
                            acc[4] = u;
                        }
                    }
                    acc
                })
                .collect()
        };
        let col = |c: usize| -> Vec<f64> { nodes.iter().map(|a| a[c]).collect() };
        let w = op.field(col(0));
        let sum_pow = col(1);
        let omega = op.field(col(2));
        let first = op.field(col(4));
        let zz = col(3);
        // ∫ U_{x_1}^{p-1} Z_1² = (1/k) ∫ Σ_j U_{x_j}^{p-1} Z_j²
        let gamma = 2.0 * (0..grid.len()).map(|n| grid.weight(n) * zz[n]).sum::<f64>();
        if !(gamma.abs() > 1e-14) {
            return Err(Error::Degenerate(format!("constraint self-pairing γ = {gamma:.3e}")));
        }
        // ⟨z, v⟩ = (1/k)·2k Σ w ω v
        let z: Vec<f64> = op.riesz_density(omega.values()).iter().map(|x| x / k as f64).collect();
        let mut constraint = ConstraintSpec {
            omega,
            gamma,
            z,
            cz: 0.0,
        };
        constraint.cz = constraint.value(&constraint.z.clone());
        if !(constraint.cz > 0.0) {
            return Err(Error::Degenerate("constraint representative has zero norm".into()));
        }
        Ok(Ansatz {
            config,
            op,
            w,
            first,
            sum_pow,
            constraint,
        })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn r(&self) -> f64 {
        self.config.r
    }

    fn multiplicity(&self) -> f64 {
        self.op.grid().multiplicity()
    }
}

/// `v - (c(v)/c(z))·z`: the `⟨·,·⟩`-orthogonal projection onto `E = ker c`.
pub fn project_to_e(v: &[f64], spec: &ConstraintSpec) -> Vec<f64> {
    let t = spec.value(v) / spec.cz;
    v.iter().zip(&spec.z).map(|(a, b)| a - t * b).collect()
}

/// `P` applied to a [`Field`].
pub fn project_field(v: &Field, spec: &ConstraintSpec) -> Field {
    Field::from_values(v.grid().clone(), project_to_e(v.values(), spec)).expect("same grid")
}

/// `l_k` with its potential and interaction parts.
#[derive(Debug, Clone)]
pub struct RieszLk {
    pub lk: Field,
    pub norm: f64,
    /// `P` of the representative of `∫(V-1)W φ`.
    pub potential_part: Field,
    pub potential_norm: f64,
    /// `P` of the representative of `-∫(W^p - ΣU_{x_i}^p) φ`.
    pub interaction_part: Field,
    pub interaction_norm: f64,
}

pub fn riesz_lk(ans: &Ansatz) -> RieszLk {
    let op = &ans.op;
    let p = op.exponent();
    let w = ans.w.values();
    let pot: Vec<f64> = w.iter().zip(op.potential_values()).map(|(u, v)| (v - 1.0) * u).collect();
    let inter: Vec<f64> = w
        .iter()
        .zip(&ans.sum_pow)
        .map(|(u, s)| -(u.abs().powf(p - 1.0) * u - s))
        .collect();
    let lp = project_to_e(&op.riesz_density(&pot), &ans.constraint);
    let li = project_to_e(&op.riesz_density(&inter), &ans.constraint);
    let lk: Vec<f64> = lp.iter().zip(&li).map(|(a, b)| a + b).collect();
    RieszLk {
        norm: op.norm(&lk),
        potential_norm: op.norm(&lp),
        interaction_norm: op.norm(&li),
        lk: op.field(lk),
        potential_part: op.field(lp),
        interaction_part: op.field(li),
    }
}

/// `L v` in the requested mode.
pub fn apply_l_mode(v: &[f64], ans: &Ansatz, mode: LinearMode) -> Vec<f64> {
    let op = &ans.op;
    match mode {
        LinearMode::FreeField => project_to_e(v, &ans.constraint),
        LinearMode::Projected | LinearMode::Unprojected => {
            let p = op.exponent();
            let mut kv = op.gram_apply(v);
            for (n, x) in kv.iter_mut().enumerate() {
                *x -= op.weights()[n] * p * ans.w.values()[n].abs().powf(p - 1.0) * v[n];
            }
            let image = op.riesz_loads(&kv);
            if mode == LinearMode::Projected {
                project_to_e(&image, &ans.constraint)
            } else {
                image
            }
        }
    }
}

/// `L v = P G^{-1}(S + diag(w(V - pW^{p-1}))) v`.
pub fn apply_l(v: &Field, ans: &Ansatz) -> Field {
    ans.op.field(apply_l_mode(v.values(), ans, LinearMode::Projected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    /// `ρ̂ = sqrt(λ_min(L²))` on `E`.
    pub rho_hat: f64,
    pub iterations: usize,
    /// Residual bound of the smallest Ritz pair of `L²`.
    pub ritz_residual: f64,
    pub seed: u64,
}

/// Smallest singular value of `L` on `E` by Lanczos on `L²`.
pub fn coercivity_probe(ans: &Ansatz, n_probe: usize, seed: u64) -> Result<CoercivityReport> {
    coercivity_probe_mode(ans, n_probe, seed, LinearMode::Projected)
}

pub fn coercivity_probe_mode(ans: &Ansatz, n_probe: usize, seed: u64, mode: LinearMode) -> Result<CoercivityReport> {
    if n_probe < 20 {
        return Err(Error::InvalidParameter(format!("coercivity probe needs ≥ 20 iterations, got {n_probe}")));
    }
    let op = &ans.op;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..op.grid().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if mode != LinearMode::Unprojected {
        start = project_to_e(&start, &ans.constraint);
    }
    let apply = |v: &[f64]| {
        let lv = apply_l_mode(v, ans, mode);
        apply_l_mode(&lv, ans, mode)
    };
    let project = |v: &mut Vec<f64>| {
        if mode != LinearMode::Unprojected {
            *v = project_to_e(v, &ans.constraint);
        }
    };
    let out = lanczos(apply, |a, b| op.inner(a, b), project, &start, n_probe)?;
    let lowest = out.ritz[0];
    if out.residual > 0.1 * lowest.abs().max(1e-3) && out.iterations == n_probe {
        return Err(Error::NoConvergence {
            what: format!("coercivity eigensolve (Ritz residual {:.3e} at λ = {lowest:.3e})", out.residual),
            iterations: n_probe,
        });
    }
    Ok(CoercivityReport {
        rho_hat: lowest.max(0.0).sqrt(),
        iterations: out.iterations,
        ritz_residual: out.residual,
        seed,
    })
}

/// `R(φ)` and its projected gradient `R'(φ) = P G^{-1}(w N(φ))`,
/// `N(φ) = |W+φ|^{p-1}(W+φ) - W^p - pW^{p-1}φ`.
pub fn nonlinear_remainder(phi: &Field, ans: &Ansatz) -> (f64, Field) {
    let op = &ans.op;
    let p = op.exponent();
    let w = ans.w.values();
    let f = phi.values();
    let g = op.grid();
    let mut value = 0.0;
    let mut dens = vec![0.0; f.len()];
    for n in 0..f.len() {
        let (wn, fn_) = (w[n], f[n]);
        let s = wn + fn_;
        let wp1 = wn.abs().powf(p - 1.0);
        let local = (s.abs().powf(p + 1.0) - wn.abs().powf(p + 1.0)) / (p + 1.0)
            - wp1 * wn * fn_
            - 0.5 * p * wp1 * fn_ * fn_;
        value += g.weight(n) * local;
        dens[n] = s.abs().powf(p - 1.0) * s - wp1 * wn - p * wp1 * fn_;
    }
    let grad = project_to_e(&op.riesz_density(&dens), &ans.constraint);
    (ans.multiplicity() * value, op.field(grad))
}

/// Outcome of the fixed-point solve for `φ(r)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub k: usize,
    pub r: f64,
    #[serde(skip)]
    pub phi: Option<Field>,
    /// `‖φ‖` in the `H¹_V` norm.
    pub norm: f64,
    pub iterations: usize,
    /// `‖φ_{n+1} - φ_n‖ / ‖φ_n - φ_{n-1}‖` from the second step on.
    pub ratios: Vec<f64>,
    /// `‖l_k + Lφ - R'(φ)‖`.
    pub projected_residual: f64,
    /// `‖P G^{-1}(discrete gradient of I at W + φ)‖`, which also carries the
    /// truncation error of the stencil.
    pub discrete_gradient: f64,
    /// `|c(φ)| / ‖φ‖`.
    pub constraint_violation: f64,
    pub lk_norm: f64,
    pub lk_potential_norm: f64,
    pub lk_interaction_norm: f64,
    pub remainder_norm: f64,
    pub linear_iterations: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct CorrectionOptions {
    /// Update-norm tolerance in `H¹_V`.
    pub tol: f64,
    pub max_outer: usize,
    pub max_linear: usize,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        CorrectionOptions {
            tol: 1e-8,
            max_outer: 30,
            max_linear: 2000,
        }
    }
}

/// Solves `L x = b` on `E` by MINRES in `⟨·,·⟩`, re-projecting every Krylov vector.
pub fn solve_l(ans: &Ansatz, b: &[f64], atol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let op = &ans.op;
    let b = project_to_e(b, &ans.constraint);
    let (x, out) = minres(
        |v| apply_l_mode(v, ans, LinearMode::Projected),
        |a, c| op.inner(a, c),
        |v: &mut Vec<f64>| *v = project_to_e(v, &ans.constraint),
        &b,
        0.0,
        atol,
        max_iter,
    )?;
    Ok((project_to_e(&x, &ans.constraint), out.iterations))
}

pub fn solve_correction(ans: &Ansatz, opts: &CorrectionOptions) -> Result<CorrectionResult> {
    let op = &ans.op;
    let lk = riesz_lk(ans);
    let n = op.grid().len();
    let lin_tol = (opts.tol * 1e-3).max(1e-15);
    let mut phi = op.field(vec![0.0; n]);
    let mut ratios = Vec::new();
    let mut linear_iterations = Vec::new();
    let mut last_update: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;
    for step in 1..=opts.max_outer {
        iterations = step;
        let (_, remainder) = nonlinear_remainder(&phi, ans);
        let rhs: Vec<f64> = remainder.values().iter().zip(lk.lk.values()).map(|(a, b)| a - b).collect();
        let (next, its) = if rhs.iter().all(|&x| x == 0.0) {
            (vec![0.0; n], 0)
        } else {
            solve_l(ans, &rhs, lin_tol, opts.max_linear)?
        };
        linear_iterations.push(its);
        let diff: Vec<f64> = next.iter().zip(phi.values()).map(|(a, b)| a - b).collect();
        let update = op.norm(&diff);
        phi = op.field(next);
        if let Some(prev) = last_update {
            let ratio = if prev > 0.0 { update / prev } else { 0.0 };
            ratios.push(ratio);
            if update > opts.tol && ratio >= 1.0 {
                return Err(Error::ContractionFailure {
                    step,
                    ratio,
                    history: ratios,
                });
            }
        }
        last_update = Some(update);
        if update <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "correction fixed point".into(),
            iterations: opts.max_outer,
        });
    }
    let (_, remainder) = nonlinear_remainder(&phi, ans);
    let lphi = apply_l_mode(phi.values(), ans, LinearMode::Projected);
    let res: Vec<f64> = (0..n)
        .map(|i| lk.lk.values()[i] + lphi[i] - remainder.values()[i])
        .collect();
    let norm = op.norm(phi.values());
    let discrete_gradient = op.norm(&projected_gradient(ans, &phi));
    Ok(CorrectionResult {
        k: ans.k(),
        r: ans.r(),
        norm,
        iterations,
        ratios,
        projected_residual: op.norm(&res),
        discrete_gradient,
        constraint_violation: if norm > 0.0 {
            ans.constraint.value(phi.values()).abs() / norm
        } else {
            0.0
        },
        lk_norm: lk.norm,
        lk_potential_norm: lk.potential_norm,
        lk_interaction_norm: lk.interaction_norm,
        remainder_norm: op.norm(remainder.values()),
        linear_iterations,
        phi: Some(phi),
    })
}

/// `P G^{-1}` of the nodal gradient of the discrete energy at `W + φ`.
pub fn projected_gradient(ans: &Ansatz, phi: &Field) -> Vec<f64> {
    let op = &ans.op;
    let p = op.exponent();
    let u: Vec<f64> = ans.w.values().iter().zip(phi.values()).map(|(a, b)| a + b).collect();
    let mut g = op.gram_apply(&u);
    for (n, x) in g.iter_mut().enumerate() {
        *x -= op.weights()[n] * u[n].abs().powf(p - 1.0) * u[n];
    }
    project_to_e(&op.riesz_loads(&g), &ans.constraint)
}
