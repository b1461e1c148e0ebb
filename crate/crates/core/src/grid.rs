//! Finite-volume discretization of `H_s` functions on the half-sector
//! `0 ≤ θ ≤ π/k`, `0 ≤ ρ ≤ R_out`.
//!
//! Cells are centered at `ρ_i = (i+½)Δρ`, `θ_j = (j+½)Δθ`. The flux through each
//! cell face is a two-point difference, so the stiffness matrix `S` is
//! symmetric and `Σ v·(Su)` equals the face sum `Σ c·[u][v]` exactly. The
//! angular edges carry no flux (even reflection), the outer circle is a
//! homogeneous Dirichlet wall half a cell beyond the last ring, and the
//! origin face has zero length. Every full-space quantity is `2k` times its
//! sector value.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::banded::BandedSym;
use crate::error::{Error, Result};
use crate::geometry::PotentialSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SectorGrid {
    k: usize,
    r_out: f64,
    n_rho: usize,
    n_theta: usize,
    d_rho: f64,
    d_theta: f64,
}

/// Grid function on a [`SectorGrid`], node `(i, j)` stored at `i·n_θ + j`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<SectorGrid>,
    values: Vec<f64>,
}

/// Builds the polar grid for `k`-fold symmetry. `ring` is the radius where the
/// bump centers sit; the angular step is `h` on the circle of radius
/// `max(ring, 2) + 4` and the radial step is `h`.
pub fn build_sector_grid(k: usize, r_out: f64, ring: f64, h: f64) -> Result<SectorGrid> {
    if k == 0 {
        return Err(Error::InvalidParameter("number of bumps k must be ≥ 1".into()));
    }
    if !(h > 0.0) || h > 0.25 {
        return Err(Error::InvalidParameter(format!(
            "grid step h = {h} must lie in (0, 0.25] to resolve the bumps"
        )));
    }
    if !(ring >= 0.0) || !(r_out > ring) {
        return Err(Error::InvalidParameter(format!(
            "outer radius R_out = {r_out} must exceed the ring radius {ring}"
        )));
    }
    let n_rho = (r_out / h).ceil() as usize;
    let span = PI / k as f64;
    let n_theta = ((ring.max(2.0) + 4.0) * span / h).ceil().max(2.0) as usize;
    Ok(SectorGrid {
        k,
        r_out,
        n_rho,
        n_theta,
        d_rho: r_out / n_rho as f64,
        d_theta: span / n_theta as f64,
    })
}

impl SectorGrid {
    /// Explicit node counts.
    pub fn with_counts(k: usize, r_out: f64, n_rho: usize, n_theta: usize) -> Result<SectorGrid> {
        if k == 0 || n_rho < 2 || n_theta < 1 || !(r_out > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid k={k}, R_out={r_out}, n_rho={n_rho}, n_theta={n_theta} not usable"
            )));
        }
        Ok(SectorGrid {
            k,
            r_out,
            n_rho,
            n_theta,
            d_rho: r_out / n_rho as f64,
            d_theta: PI / k as f64 / n_theta as f64,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r_out(&self) -> f64 {
        self.r_out
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_rho(&self) -> f64 {
        self.d_rho
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    /// Angular span `π/k` of the half-sector.
    pub fn span(&self) -> f64 {
        PI / self.k as f64
    }

    #[inline]
    pub fn rho(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.d_rho
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.d_theta
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    #[inline]
    pub fn node(&self, n: usize) -> (usize, usize) {
        (n / self.n_theta, n % self.n_theta)
    }

    #[inline]
    pub fn coords(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.node(n);
        let (r, t) = (self.rho(i), self.theta(j));
        [r * t.cos(), r * t.sin()]
    }

    /// Cell area `ρ_i Δρ Δθ`.
    #[inline]
    pub fn weight(&self, n: usize) -> f64 {
        self.rho(n / self.n_theta) * self.d_rho * self.d_theta
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.weight(n)).collect()
    }

    /// Area of the half-sector, `π R_out² / 2k`.
    pub fn sector_measure(&self) -> f64 {
        (0..self.len()).map(|n| self.weight(n)).sum()
    }

    /// `2k`: number of half-sector images tiling the plane.
    pub fn multiplicity(&self) -> f64 {
        2.0 * self.k as f64
    }

    #[inline]
    fn radial_face(&self, i: usize) -> f64 {
        // face between rings i and i+1 at radius (i+1)Δρ
        (i + 1) as f64 * self.d_theta
    }

    #[inline]
    fn angular_face(&self, i: usize) -> f64 {
        self.d_rho / (self.rho(i) * self.d_theta)
    }

    #[inline]
    fn outer_face(&self) -> f64 {
        self.r_out * self.d_theta / (0.5 * self.d_rho)
    }

    /// `S u`: the stiffness matrix applied to nodal values.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let nt = self.n_theta;
        let nr = self.n_rho;
        let mut out = vec![0.0; u.len()];
        out.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
            let ca = self.angular_face(i);
            let base = i * nt;
            for j in 0..nt {
                let n = base + j;
                let mut s = 0.0;
                if j > 0 {
                    s += ca * (u[n] - u[n - 1]);
                }
                if j + 1 < nt {
                    s += ca * (u[n] - u[n + 1]);
                }
                if i > 0 {
                    s += self.radial_face(i - 1) * (u[n] - u[n - nt]);
                }
                if i + 1 < nr {
                    s += self.radial_face(i) * (u[n] - u[n + nt]);
                } else {
                    s += self.outer_face() * u[n];
                }
                row[j] = s;
            }
        });
        out
    }

    /// Face sum `Σ c·(u_a - u_b)(v_a - v_b)` plus the Dirichlet wall term:
    /// the sector quadrature of `Du·Dv`.
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let nt = self.n_theta;
        let nr = self.n_rho;
        (0..nr)
            .into_par_iter()
            .map(|i| {
                let ca = self.angular_face(i);
                let base = i * nt;
                let mut s = 0.0;
                for j in 0..nt {
                    let n = base + j;
                    if j + 1 < nt {
                        s += ca * (u[n + 1] - u[n]) * (v[n + 1] - v[n]);
                    }
                    if i + 1 < nr {
                        s += self.radial_face(i) * (u[n + nt] - u[n]) * (v[n + nt] - v[n]);
                    } else {
                        s += self.outer_face() * u[n] * v[n];
                    }
                }
                s
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }

    /// `S + diag(extra)` as a band matrix (bandwidth `n_θ`).
    pub fn assemble(&self, extra: &[f64]) -> BandedSym {
        let nt = self.n_theta;
        let nr = self.n_rho;
        let mut m = BandedSym::zeros(self.len(), nt);
        for i in 0..nr {
            let ca = self.angular_face(i);
            for j in 0..nt {
                let n = self.index(i, j);
                m.add(n, n, extra[n]);
                if j + 1 < nt {
                    m.add(n, n, ca);
                    m.add(n + 1, n + 1, ca);
                    m.add(n + 1, n, -ca);
                }
                if i + 1 < nr {
                    let cr = self.radial_face(i);
                    m.add(n, n, cr);
                    m.add(n + nt, n + nt, cr);
                    m.add(n + nt, n, -cr);
                } else {
                    m.add(n, n, self.outer_face());
                }
            }
        }
        m
    }

    /// `V(ρ_i)` at every node.
    pub fn potential_values(&self, v: &PotentialSpec) -> Vec<f64> {
        let ring: Vec<f64> = (0..self.n_rho).map(|i| v.value(self.rho(i))).collect();
        (0..self.len()).map(|n| ring[n / self.n_theta]).collect()
    }

    /// Index of the ring nearest to radius `r` and the interpolation weight
    /// toward the next ring.
    pub fn ring_position(&self, r: f64) -> (usize, f64) {
        let x = (r / self.d_rho - 0.5).clamp(0.0, (self.n_rho - 1) as f64);
        let i = (x.floor() as usize).min(self.n_rho.saturating_sub(2));
        (i, x - i as f64)
    }
}

impl Field {
    pub fn zeros(grid: Arc<SectorGrid>) -> Field {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: Arc<SectorGrid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite value at node {n}")));
        }
        Ok(Field { grid, values })
    }

    /// Samples `f(x, y)` at the node positions.
    pub fn from_fn<F>(grid: Arc<SectorGrid>, f: F) -> Field
    where
        F: Fn([f64; 2]) -> f64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|n| f(grid.coords(n))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<SectorGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn check(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + t·other`.
    pub fn add_scaled(&self, t: f64, other: &Field) -> Result<Field> {
        self.check(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + t * b).collect(),
        })
    }

    pub fn scaled(&self, t: f64) -> Field {
        self.map(|v| t * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full-space `∫ u v`.
    pub fn l2_dot(&self, other: &Field) -> Result<f64> {
        self.check(other)?;
        let g = &self.grid;
        let s: f64 = (0..g.len()).map(|n| g.weight(n) * self.values[n] * other.values[n]).sum();
        Ok(g.multiplicity() * s)
    }

    /// Full-space `∫ f(u)` for a pointwise integrand.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        let s: f64 = (0..g.len()).map(|n| g.weight(n) * f(self.values[n])).sum();
        g.multiplicity() * s
    }

    /// Values along the circle `|y| = r`, interpolated linearly between rings.
    pub fn on_circle(&self, r: f64) -> Vec<f64> {
        let g = &self.grid;
        let (i, t) = g.ring_position(r);
        (0..g.n_theta())
            .map(|j| {
                let a = self.values[g.index(i, j)];
                let b = self.values[g.index((i + 1).min(g.n_rho() - 1), j)];
                (1.0 - t) * a + t * b
            })
            .collect()
    }

    /// Node coordinates and values, one row per node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let g = &self.grid;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "y", "rho", "theta", "value"])?;
        for n in 0..g.len() {
            let (i, j) = g.node(n);
            let [x, y] = g.coords(n);
            out.write_record(&[
                format!("{x:.12e}"),
                format!("{y:.12e}"),
                format!("{:.12e}", g.rho(i)),
                format!("{:.12e}", g.theta(j)),
                format!("{:.12e}", self.values[n]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `-Δu + V u` in the weighted sense: `(S u)/w + V u` at every node.
pub fn apply_hamiltonian(u: &Field, v: &PotentialSpec) -> Field {
    let g = u.grid();
    let su = g.stiffness_apply(u.values());
    let vv = g.potential_values(v);
    let values = (0..g.len())
        .map(|n| su[n] / g.weight(n) + vv[n] * u.values[n])
        .collect();
    Field {
        grid: g.clone(),
        values,
    }
}

/// `⟨u, v⟩ = ∫(Du·Dv + V u v)` over the whole space.
pub fn inner_product_h1v(u: &Field, v: &Field, pot: &PotentialSpec) -> Result<f64> {
    u.check(v)?;
    let g = u.grid();
    let vv = g.potential_values(pot);
    let mass: f64 = (0..g.len())
        .map(|n| g.weight(n) * vv[n] * u.values[n] * v.values[n])
        .sum();
    Ok(g.multiplicity() * (g.dirichlet_form(u.values(), v.values()) + mass))
}

/// `I(u) = ½∫(|Du|² + V u²) - 1/(p+1)∫|u|^{p+1}`.
pub fn energy_functional(u: &Field, pot: &PotentialSpec, p: f64) -> f64 {
    let quad = inner_product_h1v(u, u, pot).expect("field paired with itself");
    let power = u.integrate(|x| x.abs().powf(p + 1.0));
    0.5 * quad - power / (p + 1.0)
}

/// Residual `-Δu + V u - |u|^{p-1}u` and its full-space `L²` norm.
pub fn pde_residual(u: &Field, pot: &PotentialSpec, p: f64) -> (Field, f64) {
    let mut res = apply_hamiltonian(u, pot);
    for (r, &x) in res.values.iter_mut().zip(&u.values) {
        *r -= x.abs().powf(p - 1.0) * x;
    }
    let norm = res.integrate(|x| x * x).sqrt();
    (res, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::profile_2d;
    use proptest::prelude::*;

    fn grid(k: usize, r_out: f64, h: f64) -> Arc<SectorGrid> {
        Arc::new(build_sector_grid(k, r_out, 0.0, h).unwrap())
    }

    #[test]
    fn half_plane_for_single_bump() {
        let g = build_sector_grid(1, 10.0, 0.0, 0.1).unwrap();
        assert!((g.span() - PI).abs() < 1e-15);
        assert!((g.n_theta() as f64 * g.d_theta() - PI).abs() < 1e-12);
    }

    #[test]
    fn node_counts() {
        let g = build_sector_grid(8, 30.0, 10.0, 0.1).unwrap();
        assert_eq!(g.n_rho(), 300);
        assert_eq!(g.n_theta(), (14.0 * PI / 8.0 / 0.1f64).ceil() as usize);
        assert_eq!(g.len(), g.n_rho() * g.n_theta());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_sector_grid(6, 5.0, 8.0, 0.1).is_err());
        assert!(build_sector_grid(0, 5.0, 1.0, 0.1).is_err());
        assert!(build_sector_grid(6, 20.0, 3.0, 0.5).is_err());
    }

    #[test]
    fn full_measure_is_disc_area() {
        for k in [1, 3, 8] {
            let g = build_sector_grid(k, 12.0, 4.0, 0.2).unwrap();
            let full = g.multiplicity() * g.sector_measure();
            assert!((full - PI * 144.0).abs() < 1e-9 * full);
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn constant_is_reproduced_away_from_the_wall() {
        let g = grid(4, 10.0, 0.1);
        let u = Field::from_fn(g.clone(), |_| 3.0);
        let hu = apply_hamiltonian(&u, &PotentialSpec::flat());
        for n in 0..g.len() {
            let (i, _) = g.node(n);
            if i + 1 < g.n_rho() {
                assert!((hu.values()[n] - 3.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn plane_wave_eigenvalue() {
        // cos(κx)cos(μy) is even in y and in x, so it lives on the k = 2 sector
        let (kap, mu) = (0.7, 1.1);
        let lam = kap * kap + mu * mu;
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let g = grid(2, 10.0, h);
            let u = Field::from_fn(g.clone(), |[x, y]| (kap * x).cos() * (mu * y).cos());
            let hu = apply_hamiltonian(&u, &PotentialSpec { v0: 0.0, a: 0.0, m: 2.0 });
            let mut err: f64 = 0.0;
            for n in 0..g.len() {
                let r = g.rho(g.node(n).0);
                if (2.0..8.0).contains(&r) {
                    err = err.max((hu.values()[n] - lam * u.values()[n]).abs());
                }
            }
            errs.push(err);
        }
        assert!(errs[0] < 0.02, "{errs:?}");
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "order {order}, errors {errs:?}");
    }

    #[test]
    fn ground_state_equation_on_the_grid() {
        let prof = profile_2d();
        let mut norms = Vec::new();
        for h in [0.1, 0.05] {
            let g = grid(1, 20.0, h);
            let u = Field::from_fn(g.clone(), |[x, y]| prof.value(x.hypot(y)));
            let hu = apply_hamiltonian(&u, &PotentialSpec::flat());
            let target = u.map(|x| x.powi(3));
            let diff = hu.add_scaled(-1.0, &target).unwrap();
            norms.push(diff.integrate(|x| x * x).sqrt());
            let (_, res) = pde_residual(&u, &PotentialSpec::flat(), 3.0);
            assert!((res - norms.last().unwrap()).abs() < 1e-12);
        }
        let order = (norms[0] / norms[1]).log2();
        assert!(norms[0] < 0.1, "{norms:?}");
        assert!(order > 1.8, "order {order}, {norms:?}");
    }

    #[test]
    fn pohozaev_identity_and_energy() {
        let prof = profile_2d();
        let i4 = prof.radial_integral(4.0).unwrap();
        let a = 0.25 * i4;
        let mut errs = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let g = grid(1, 20.0, h);
            let u = Field::from_fn(g.clone(), |[x, y]| prof.value(x.hypot(y)));
            let q = inner_product_h1v(&u, &u, &PotentialSpec::flat()).unwrap();
            assert!((q - i4).abs() < 0.02 * i4);
            errs.push(energy_functional(&u, &PotentialSpec::flat(), 3.0) - a);
        }
        assert!(errs[0].abs() < 5e-3 * a, "{errs:?}");
        let order = ((errs[0] - errs[1]) / (errs[1] - errs[2])).abs().log2();
        assert!(order > 1.8, "order {order}, {errs:?}");
    }

    #[test]
    fn zero_field() {
        let g = grid(3, 8.0, 0.2);
        let z = Field::zeros(g.clone());
        let u = Field::from_fn(g, |[x, y]| (-(x * x + y * y)).exp());
        assert_eq!(inner_product_h1v(&z, &u, &PotentialSpec::flat()).unwrap(), 0.0);
        assert_eq!(energy_functional(&z, &PotentialSpec::flat(), 3.0), 0.0);
        assert_eq!(pde_residual(&z, &PotentialSpec::flat(), 3.0).1, 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Field::zeros(grid(3, 8.0, 0.2));
        let b = Field::zeros(grid(3, 8.0, 0.1));
        assert!(matches!(
            inner_product_h1v(&a, &b, &PotentialSpec::flat()),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn energy_scaling_derivative() {
        let prof = profile_2d();
        let g = grid(1, 15.0, 0.1);
        let pot = PotentialSpec::new(1.0, 2.0).unwrap();
        let u = Field::from_fn(g.clone(), |[x, y]| 0.8 * prof.value((x - 1.0).hypot(y)));
        let t = 1e-4;
        let fd = (energy_functional(&u.scaled(1.0 + t), &pot, 3.0)
            - energy_functional(&u.scaled(1.0 - t), &pot, 3.0))
            / (2.0 * t);
        let (res, _) = pde_residual(&u, &pot, 3.0);
        let exact = res.l2_dot(&u).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn assembled_matrix_matches_operator() {
        let g = grid(5, 6.0, 0.25);
        let pot = PotentialSpec::new(0.5, 3.0).unwrap();
        let wv: Vec<f64> = g
            .potential_values(&pot)
            .iter()
            .enumerate()
            .map(|(n, v)| v * g.weight(n))
            .collect();
        let m = g.assemble(&wv);
        let u = Field::from_fn(g.clone(), |[x, y]| (0.3 * x).sin() + y * y * 0.1);
        let mu = m.matvec(u.values());
        let hu = apply_hamiltonian(&u, &pot);
        for n in 0..g.len() {
            assert!((mu[n] / g.weight(n) - hu.values()[n]).abs() < 1e-9);
        }
    }

    #[test]
    fn dirichlet_truncation_is_exponentially_small() {
        let prof = profile_2d();
        let pot = PotentialSpec::new(1.0, 2.0).unwrap();
        let cfg = crate::geometry::place_bumps(6, 3.5).unwrap();
        let energy = |r_out: f64| {
            let g = Arc::new(SectorGrid::with_counts(6, r_out, (r_out / 0.1) as usize, 40).unwrap());
            let w = Field::from_fn(g, |y| crate::geometry::eval_ansatz(&cfg, &prof, &y));
            energy_functional(&w, &pot, 3.0)
        };
        let (e1, e2) = (energy(18.5), energy(37.0));
        assert!(((e1 - e2) / e2).abs() < (-18.5f64 / 2.0).exp(), "{e1} {e2}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn discrete_integration_by_parts(seed in 0u64..1000, k in 1usize..7) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Arc::new(SectorGrid::with_counts(k, 5.0, 12, 7).unwrap());
            let u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let su = g.stiffness_apply(&u);
            let sv = g.stiffness_apply(&v);
            let lhs: f64 = v.iter().zip(&su).map(|(a, b)| a * b).sum();
            let rhs = g.dirichlet_form(&u, &v);
            let sym: f64 = u.iter().zip(&sv).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()));
            prop_assert!((lhs - sym).abs() <= 1e-11 * (1.0 + rhs.abs()));
        }

        #[test]
        fn inner_product_symmetric_and_positive(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Arc::new(SectorGrid::with_counts(4, 6.0, 15, 9).unwrap());
            let pot = PotentialSpec::new(1.0, 2.0).unwrap();
            let u = Field::from_values(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let v = Field::from_values(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let uv = inner_product_h1v(&u, &v, &pot).unwrap();
            let vu = inner_product_h1v(&v, &u, &pot).unwrap();
            prop_assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(1.0));
            prop_assert!(inner_product_h1v(&u, &u, &pot).unwrap() > 0.0);
        }
    }
}
