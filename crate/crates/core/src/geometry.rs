//! Ring placement of the bumps, the ansatz `W_r`, the radial translation mode
//! `Z_1` and the admissible radius window.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialProfile;

/// `V(r) = 1 + a·(1 + r²)^{-m/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub v0: f64,
    pub a: f64,
    pub m: f64,
}

impl PotentialSpec {
    pub fn new(a: f64, m: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("potential amplitude a = {a} must be ≥ 0")));
        }
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("potential decay m = {m} must exceed 1")));
        }
        Ok(PotentialSpec { v0: 1.0, a, m })
    }

    /// The constant potential `V ≡ 1` of the limit problem.
    pub fn flat() -> Self {
        PotentialSpec {
            v0: 1.0,
            a: 0.0,
            m: 2.0,
        }
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.v0 + self.a * (1.0 + r * r).powf(-0.5 * self.m)
    }
}

/// `k` centers `x_j = r(cos 2(j-1)π/k, sin 2(j-1)π/k)` in the `y'` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpConfiguration {
    pub k: usize,
    pub r: f64,
    pub centers: Vec<[f64; 2]>,
}

/// The radius window `S_k = [(m/2π - β) k ln k, (m/2π + β) k ln k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub beta: f64,
}

impl AdmissibleInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lower && r <= self.upper
    }
}

pub fn place_bumps(k: usize, r: f64) -> Result<BumpConfiguration> {
    if k == 0 {
        return Err(Error::InvalidParameter("number of bumps k must be ≥ 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("ring radius r = {r} must be positive")));
    }
    let centers = (0..k)
        .map(|j| {
            let angle = 2.0 * PI * j as f64 / k as f64;
            [r * angle.cos(), r * angle.sin()]
        })
        .collect();
    Ok(BumpConfiguration { k, r, centers })
}

pub fn admissible_radii(k: usize, m: f64, beta: f64) -> Result<AdmissibleInterval> {
    if k < 2 {
        return Err(Error::InvalidParameter("admissible radii need k ≥ 2".into()));
    }
    let slope = m / (2.0 * PI);
    if !(beta >= 0.0) || beta >= slope {
        return Err(Error::InvalidParameter(format!(
            "β = {beta} must lie in [0, m/2π = {slope:.6})"
        )));
    }
    let scale = k as f64 * (k as f64).ln();
    Ok(AdmissibleInterval {
        lower: (slope - beta) * scale,
        upper: (slope + beta) * scale,
        beta,
    })
}

impl BumpConfiguration {
    /// Distance from `y` (plane point, extra coordinates folded into `transverse`)
    /// to center `j`.
    #[inline]
    fn distance(&self, j: usize, y: &[f64]) -> f64 {
        let c = self.centers[j];
        let dx = y[0] - c[0];
        let dy = y[1] - c[1];
        let extra: f64 = y[2..].iter().map(|v| v * v).sum();
        (dx * dx + dy * dy + extra).sqrt()
    }

    /// Nearest-neighbour spacing `2r sin(π/k)`.
    pub fn neighbor_distance(&self) -> f64 {
        2.0 * self.r * (PI / self.k as f64).sin()
    }

    /// `|x_i - x_j| = 2r sin(|i-j|π/k)`.
    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        let gap = i.abs_diff(j) as f64;
        2.0 * self.r * (gap * PI / self.k as f64).sin()
    }

    /// Whether `y` lies in `Ω_1`, the angular cell of width `2π/k` around `x_1`.
    pub fn in_first_cell(&self, y: &[f64]) -> bool {
        let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if rho == 0.0 {
            return true;
        }
        y[0] / rho >= (PI / self.k as f64).cos() - 1e-12
    }
}

/// `W_r(y) = Σ_j U(|y - x_j|)`.
pub fn eval_ansatz(config: &BumpConfiguration, profile: &RadialProfile, y: &[f64]) -> f64 {
    (0..config.k).map(|j| profile.value(config.distance(j, y))).sum()
}

/// `Σ_{j≥2} U(|y - x_j|)`: the part of `W_r` not carried by the first bump.
pub fn eval_neighbors(config: &BumpConfiguration, profile: &RadialProfile, y: &[f64]) -> f64 {
    (1..config.k).map(|j| profile.value(config.distance(j, y))).sum()
}

/// `Z_1 = ∂_r U(y - x_1(r)) = -U'(|y - x_1|)·⟨(y - x_1)/|y - x_1|, x_1/r⟩`.
pub fn eval_z1(config: &BumpConfiguration, profile: &RadialProfile, y: &[f64]) -> f64 {
    eval_zj(config, profile, 0, y)
}

/// Radial translation mode of bump `j`.
pub fn eval_zj(config: &BumpConfiguration, profile: &RadialProfile, j: usize, y: &[f64]) -> f64 {
    let c = config.centers[j];
    let d = config.distance(j, y);
    if d == 0.0 {
        return 0.0;
    }
    let (_, du) = profile.eval(d);
    let along = ((y[0] - c[0]) * c[0] + (y[1] - c[1]) * c[1]) / (d * config.r);
    -du * along
}

/// Measured constant of the neighbour tail bound on `Ω_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub k: usize,
    pub r: f64,
    pub eta: f64,
    pub samples: usize,
    /// `max Σ_{j≥2}U_{x_j}(y) / (e^{-η r π/k} e^{-(1-η)|y-x_1|})`.
    pub c_bar: f64,
    /// Sample achieving `c_bar`.
    pub argmax: [f64; 2],
}

pub fn tail_bound_check(
    config: &BumpConfiguration,
    profile: &RadialProfile,
    eta: f64,
    samples: &[[f64; 2]],
) -> Result<TailBoundReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("η = {eta} must lie in (0, 1]")));
    }
    let k = config.k as f64;
    let mut c_bar: f64 = 0.0;
    let mut argmax = [config.r, 0.0];
    for y in samples {
        if !config.in_first_cell(y) {
            return Err(Error::OutsideSector { x: y[0], y: y[1] });
        }
        let tail = eval_neighbors(config, profile, y);
        let d1 = ((y[0] - config.r).powi(2) + y[1] * y[1]).sqrt();
        let envelope = (-eta * config.r * PI / k).exp() * (-(1.0 - eta) * d1).exp();
        let ratio = tail / envelope;
        if ratio > c_bar {
            c_bar = ratio;
            argmax = *y;
        }
    }
    Ok(TailBoundReport {
        k: config.k,
        r: config.r,
        eta,
        samples: samples.len(),
        c_bar,
        argmax,
    })
}

/// Deterministic polar lattice of points inside `Ω_1` out to radius `r + reach`.
pub fn first_cell_samples(config: &BumpConfiguration, reach: f64, n_radial: usize, n_angular: usize) -> Vec<[f64; 2]> {
    let half = PI / config.k as f64;
    let r_max = config.r + reach;
    let mut out = Vec::with_capacity(n_radial * n_angular);
    for i in 0..n_radial {
        let rho = r_max * (i as f64 + 0.5) / n_radial as f64;
        for j in 0..n_angular {
            let theta = -half + 2.0 * half * (j as f64 + 0.5) / n_angular as f64;
            out.push([rho * theta.cos(), rho * theta.sin()]);
        }
    }
    out
}
