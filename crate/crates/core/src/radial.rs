//! Radial ground state of `-U'' - (N-1)/s U' + U = U^p` and its radial integrals.
//!
//! The solver shoots from the origin with bisection on `U(0)`: trajectories that
//! cross zero started too high, trajectories whose slope turns positive started
//! too low. Double precision only carries the forward shot out to a handful of
//! decay lengths, so the tail is produced by integrating inward from far out
//! along the decaying branch and matching amplitudes where both are reliable.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PotentialSpec;
use crate::ode::{Dopri, State};

/// Sampled ground state `U(s)` on `s_i = i·h`, `0 ≤ s_i ≤ S_max`, continued by
/// `c·s^{-(N-1)/2}·e^{-s}` beyond `S_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    dimension: usize,
    exponent: f64,
    step: f64,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    far_field_amplitude: f64,
    ode_residual: f64,
}

/// `A = (1/2 - 1/(p+1))∫U^{p+1}` and `B1 = (a/2)∫U²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub a: f64,
    pub b1: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    /// Output grid spacing.
    pub step: f64,
    /// Extent of the sampled part of the profile.
    pub s_max: f64,
    pub max_bisections: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            step: 0.01,
            s_max: 30.0,
            max_bisections: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    CrossesZero,
    TurnsUp,
    Undecided,
}

/// `|S^{N-1}|`, the surface area of the unit sphere in `R^N`.
pub fn sphere_area(dimension: usize) -> f64 {
    // Γ(N/2) by recursion from Γ(1/2) or Γ(1)
    let mut gamma = if dimension % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dimension % 2 == 0 { 1.0 } else { 0.5 };
    while x < dimension as f64 / 2.0 - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(dimension as f64 / 2.0) / gamma
}

/// `p > 1`, and `p < (N+2)/(N-2)` when `N ≥ 3`.
pub fn check_exponent(dimension: usize, p: f64) -> Result<()> {
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension N must be ≥ 1".into()));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    if dimension >= 3 {
        let critical = (dimension as f64 + 2.0) / (dimension as f64 - 2.0);
        if p >= critical {
            return Err(Error::Supercritical {
                dimension,
                p,
                critical,
            });
        }
    }
    Ok(())
}

/// Solves the limit problem with default grid options.
pub fn solve_ground_state(dimension: usize, p: f64, tol: f64) -> Result<RadialProfile> {
    solve_ground_state_with(dimension, p, tol, &GroundStateOptions::default())
}

pub fn solve_ground_state_with(
    dimension: usize,
    p: f64,
    tol: f64,
    opts: &GroundStateOptions,
) -> Result<RadialProfile> {
    check_exponent(dimension, p)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    if !(opts.step > 0.0) || !(opts.s_max > 20.0 * opts.step) || opts.s_max < 10.0 {
        return Err(Error::InvalidParameter(format!(
            "profile grid step {} / extent {} not usable",
            opts.step, opts.s_max
        )));
    }
    let nf = dimension as f64;
    let rhs = move |s: f64, y: &State| -> State {
        let u = y[0];
        [y[1], -(nf - 1.0) / s * y[1] + u - u.abs().powf(p - 1.0) * u]
    };
    let rtol = 1e-13;
    let atol = rtol * 1e-6;

    // series start away from the regular singular point
    let s_start = 1e-3 * opts.step.min(1.0);
    let series = |u0: f64, s: f64| -> State {
        let f0 = u0 - u0.powf(p);
        let a2 = f0 / (2.0 * nf);
        let a4 = (1.0 - p * u0.powf(p - 1.0)) * a2 / (4.0 * (nf + 2.0));
        [
            u0 + a2 * s * s + a4 * s.powi(4),
            2.0 * a2 * s + 4.0 * a4 * s.powi(3),
        ]
    };

    let classify = |u0: f64| -> Result<Shot> {
        let mut dp = Dopri::new(rtol, atol);
        dp.h = 1e-3;
        let mut outcome = Shot::Undecided;
        dp.integrate(rhs, s_start, series(u0, s_start), 80.0, |_, y| {
            if y[0] < 0.0 {
                outcome = Shot::CrossesZero;
                true
            } else if y[1] > 0.0 {
                outcome = Shot::TurnsUp;
                true
            } else {
                false
            }
        })?;
        Ok(outcome)
    };

    // bracket: just above the constant solution U ≡ 1 the shot oscillates back up
    let mut lo = 1.0 + 1e-3;
    if classify(lo)? != Shot::TurnsUp {
        return Err(Error::BracketNotFound {
            lo,
            hi: lo,
            reason: "lower shot does not turn upward".into(),
        });
    }
    let mut hi = 2.0;
    let mut doublings = 0;
    while classify(hi)? != Shot::CrossesZero {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 30 {
            return Err(Error::BracketNotFound {
                lo: 1.0 + 1e-3,
                hi,
                reason: "no shot crossed zero".into(),
            });
        }
    }

    let mut converged = false;
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        match classify(mid)? {
            Shot::CrossesZero => hi = mid,
            Shot::TurnsUp => lo = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
                converged = true;
                break;
            }
        }
    }
    if !converged && hi - lo > 4.0 * f64::EPSILON * hi {
        return Err(Error::NoConvergence {
            what: "ground-state bisection".into(),
            iterations: opts.max_bisections,
        });
    }
    let u0 = 0.5 * (lo + hi);

    let n = (opts.s_max / opts.step).round() as usize;
    let h = opts.s_max / n as f64;
    let s_max = h * n as f64;

    // forward trajectories on the grid, for the midpoint and both bracket ends
    let forward = |start: f64, last: usize| -> Result<Vec<State>> {
        let mut out = Vec::with_capacity(last + 1);
        out.push([start, 0.0]);
        let mut dp = Dopri::new(rtol, atol);
        dp.h = 1e-3;
        let mut leg = dp.integrate(rhs, s_start, series(start, s_start), h, |_, _| false)?;
        out.push(leg.y);
        for i in 1..last {
            if leg.y[0] <= 0.0 {
                break;
            }
            leg = dp.integrate(rhs, i as f64 * h, leg.y, (i + 1) as f64 * h, |_, _| false)?;
            out.push(leg.y);
        }
        Ok(out)
    };
    let half = n / 2;
    let mid_traj = forward(u0, half)?;
    let lo_traj = forward(lo.min(u0), half)?;
    let hi_traj = forward(hi.max(u0), half)?;
    let mut match_idx = 0;
    for i in 1..mid_traj.len().min(lo_traj.len()).min(hi_traj.len()) {
        let u = mid_traj[i][0];
        let spread = (hi_traj[i][0] - lo_traj[i][0]).abs();
        if u > 0.0 && mid_traj[i][1] < 0.0 && spread <= 1e-11 * u {
            match_idx = i;
        } else {
            break;
        }
    }
    if match_idx < 10 {
        return Err(Error::NoConvergence {
            what: "ground-state forward shot diverged before a matching point".into(),
            iterations: match_idx,
        });
    }
    let s_match = match_idx as f64 * h;
    let u_match = mid_traj[match_idx][0];

    // decaying branch s^{-(N-2)/2} K_ν(s), asymptotic series at far distance
    let nu = (nf - 2.0) / 2.0;
    let s_far = s_max + 10.0;
    let decaying = |s: f64| -> State {
        let mut a = 1.0;
        let mut sum = 1.0;
        let mut dsum = 0.0;
        for j in 1..12 {
            let jf = j as f64;
            a *= (4.0 * nu * nu - (2.0 * jf - 1.0).powi(2)) / (8.0 * jf);
            sum += a / s.powi(j);
            dsum -= jf * a / s.powi(j + 1);
        }
        let base = s.powf(-(nf - 1.0) / 2.0) * (-s).exp();
        let g = base * sum;
        [g, g * (-(nf - 1.0) / (2.0 * s) - 1.0) + base * dsum]
    };
    let inward = |alpha: f64| -> Result<Vec<State>> {
        let mut dp = Dopri::new(1e-13, 0.0);
        dp.h = 1e-2;
        let g = decaying(s_far);
        let mut leg = dp.integrate(rhs, s_far, [alpha * g[0], alpha * g[1]], s_max, |_, _| false)?;
        let mut out = vec![leg.y];
        for i in (match_idx..n).rev() {
            leg = dp.integrate(rhs, (i + 1) as f64 * h, leg.y, i as f64 * h, |_, _| false)?;
            out.push(leg.y);
        }
        out.reverse();
        Ok(out)
    };
    let mut alpha = u_match / decaying(s_match)[0];
    let mut tail = inward(alpha)?;
    for _ in 0..8 {
        let ratio = u_match / tail[0][0];
        if (ratio - 1.0).abs() < 1e-15 {
            break;
        }
        alpha *= ratio;
        tail = inward(alpha)?;
    }

    let mut values = Vec::with_capacity(n + 1);
    let mut derivatives = Vec::with_capacity(n + 1);
    for state in &mid_traj[..match_idx] {
        values.push(state[0]);
        derivatives.push(state[1]);
    }
    for state in &tail {
        values.push(state[0]);
        derivatives.push(state[1]);
    }
    debug_assert_eq!(values.len(), n + 1);
    derivatives[0] = 0.0;

    let u_end = values[n];
    let far_field_amplitude = u_end * s_max.powf((nf - 1.0) / 2.0) * s_max.exp();

    let mut profile = RadialProfile {
        dimension,
        exponent: p,
        step: h,
        values,
        derivatives,
        far_field_amplitude,
        ode_residual: 0.0,
    };
    profile.ode_residual = profile.compute_ode_residual();
    if let Some(i) = profile.values.iter().position(|&u| !(u > 0.0)) {
        return Err(Error::NoConvergence {
            what: format!("ground state lost positivity at s = {}", i as f64 * h),
            iterations: 0,
        });
    }
    if profile.ode_residual > tol {
        return Err(Error::NoConvergence {
            what: format!(
                "ground-state ODE residual {:.3e} above tolerance {:.3e}",
                profile.ode_residual, tol
            ),
            iterations: 0,
        });
    }
    Ok(profile)
}

impl RadialProfile {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn s_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn far_field_amplitude(&self) -> f64 {
        self.far_field_amplitude
    }

    /// `U(0)`.
    pub fn peak(&self) -> f64 {
        self.values[0]
    }

    /// Max-norm of `U'' + (N-1)/s U' - U + U^p` at interior nodes.
    pub fn ode_residual(&self) -> f64 {
        self.ode_residual
    }

    fn compute_ode_residual(&self) -> f64 {
        // tenth-order central stencil; U' is odd, so it reflects through s = 0
        const C: [f64; 5] = [5.0 / 6.0, -5.0 / 21.0, 5.0 / 84.0, -5.0 / 504.0, 1.0 / 1260.0];
        let h = self.step;
        let d = &self.derivatives;
        let du = |j: isize| -> f64 {
            if j < 0 {
                -d[(-j) as usize]
            } else {
                d[j as usize]
            }
        };
        let nf = self.dimension as f64;
        let mut worst: f64 = 0.0;
        for i in 1..self.values.len() - 5 {
            let ii = i as isize;
            let upp = (1..=5)
                .map(|k| C[k - 1] * (du(ii + k as isize) - du(ii - k as isize)))
                .sum::<f64>()
                / h;
            let s = i as f64 * h;
            let u = self.values[i];
            let r = upp + (nf - 1.0) / s * d[i] - u + u.abs().powf(self.exponent - 1.0) * u;
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Far-field law `c·s^{-(N-1)/2}·e^{-s}` and its derivative.
    pub fn far_field(&self, s: f64) -> (f64, f64) {
        let nf = self.dimension as f64;
        let u = self.far_field_amplitude * s.powf(-(nf - 1.0) / 2.0) * (-s).exp();
        (u, u * (-1.0 - (nf - 1.0) / (2.0 * s)))
    }

    /// `(U(s), U'(s))`: cubic Hermite on the grid, far-field law beyond it.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let s = s.abs();
        let last = self.values.len() - 1;
        let x = s / self.step;
        if x >= last as f64 {
            if s == self.s_max() {
                return (self.values[last], self.derivatives[last]);
            }
            return self.far_field(s);
        }
        let i = x as usize;
        let t = x - i as f64;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivatives[i] * h, self.derivatives[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let u = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let du = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (u, du)
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    /// `∫_{R^N} U^q`, trapezoid with endpoint correction plus the closed-form
    /// far-field tail.
    pub fn radial_integral(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("integral power q = {q} must be ≥ 1")));
        }
        let nf = self.dimension as f64;
        let h = self.step;
        let n = self.values.len() - 1;
        let f = |i: usize| -> f64 {
            let s = i as f64 * h;
            self.values[i].abs().powf(q) * s.powf(nf - 1.0)
        };
        let df = |i: usize| -> f64 {
            let s = i as f64 * h;
            let u = self.values[i].abs();
            let du = self.derivatives[i];
            let mut v = q * u.powf(q - 1.0) * du * s.powf(nf - 1.0);
            if self.dimension == 2 {
                v += u.powf(q);
            } else if self.dimension > 2 {
                v += (nf - 1.0) * u.powf(q) * s.powf(nf - 2.0);
            }
            v
        };
        let mut sum = 0.5 * (f(0) + f(n));
        for i in 1..n {
            sum += f(i);
        }
        let mut integral = h * sum - h * h / 12.0 * (df(n) - df(0));

        // ∫_S^∞ c^q s^α e^{-qs} ds, α = (N-1)(1 - q/2)
        let c = self.far_field_amplitude;
        if c > 0.0 {
            let s = self.s_max();
            let alpha = (nf - 1.0) * (1.0 - q / 2.0);
            let mut term = 1.0;
            let mut series = 1.0;
            for j in 0..10 {
                term *= (alpha - j as f64) / (q * s);
                series += term;
            }
            integral += c.powf(q) * s.powf(alpha) * (-q * s).exp() / q * series;
        }
        Ok(sphere_area(self.dimension) * integral)
    }

    /// Copy of the profile equal to `U` on `[0, support]` and zero beyond.
    pub fn zero_extended(&self, support: f64) -> RadialProfile {
        let mut out = self.clone();
        for (i, (u, du)) in out.values.iter_mut().zip(out.derivatives.iter_mut()).enumerate() {
            if i as f64 * self.step > support || support <= 0.0 {
                *u = 0.0;
                *du = 0.0;
            }
        }
        out.far_field_amplitude = 0.0;
        out
    }

    /// CSV with a `# N=..,p=..,h=..,c=..` header line and columns `s,U,dU`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# N={},p={:.17e},h={:.17e},c={:.17e}",
            self.dimension, self.exponent, self.step, self.far_field_amplitude
        )?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "U", "dU"])?;
        for (i, (u, du)) in self.values.iter().zip(&self.derivatives).enumerate() {
            wr.write_record([
                format!("{:.17e}", i as f64 * self.step),
                format!("{u:.17e}"),
                format!("{du:.17e}"),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<RadialProfile> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Format("profile CSV must start with a '#' header".into()))?;
        let mut dimension = None;
        let mut exponent = None;
        let mut step = None;
        let mut amplitude = None;
        for item in header.split(',') {
            let (key, val) = item
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header item '{item}'")))?;
            match key {
                "N" => dimension = val.parse::<usize>().ok(),
                "p" => exponent = val.parse::<f64>().ok(),
                "h" => step = val.parse::<f64>().ok(),
                "c" => amplitude = val.parse::<f64>().ok(),
                _ => {}
            }
        }
        let (Some(dimension), Some(exponent), Some(step), Some(far_field_amplitude)) =
            (dimension, exponent, step, amplitude)
        else {
            return Err(Error::Format("profile header needs N, p, h and c".into()));
        };
        let mut rd = csv::Reader::from_reader(reader);
        let mut values = Vec::new();
        let mut derivatives = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Format(format!("bad profile row {rec:?}")))
            };
            values.push(parse(1)?);
            derivatives.push(parse(2)?);
        }
        if values.len() < 8 {
            return Err(Error::Format("profile needs at least 8 samples".into()));
        }
        let mut profile = RadialProfile {
            dimension,
            exponent,
            step,
            values,
            derivatives,
            far_field_amplitude,
            ode_residual: 0.0,
        };
        profile.ode_residual = profile.compute_ode_residual();
        Ok(profile)
    }
}

/// Free-function form of [`RadialProfile::radial_integral`].
pub fn radial_integral(profile: &RadialProfile, q: f64) -> Result<f64> {
    profile.radial_integral(q)
}

/// Free-function form of [`RadialProfile::eval`].
pub fn eval_profile(profile: &RadialProfile, s: f64) -> (f64, f64) {
    profile.eval(s)
}

pub fn expansion_constants(
    profile: &RadialProfile,
    potential: &PotentialSpec,
) -> Result<ExpansionConstants> {
    let p = profile.exponent();
    let a = (0.5 - 1.0 / (p + 1.0)) * profile.radial_integral(p + 1.0)?;
    let b1 = 0.5 * potential.a * profile.radial_integral(2.0)?;
    Ok(ExpansionConstants { a, b1 })
}
