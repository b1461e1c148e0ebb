//! Adaptive Dormand–Prince 5(4) integrator for small first-order systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// difference between the 5th- and embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) type State = [f64; 2];

/// Outcome of an integration leg.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    #[cfg_attr(not(test), allow(dead_code))]
    pub s: f64,
    pub y: State,
    #[cfg_attr(not(test), allow(dead_code))]
    pub stopped: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Step size carried between legs (signed by direction on use).
    pub h: f64,
}

impl Dopri {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri {
            rtol,
            atol,
            max_steps: 1_000_000,
            h: 1e-3,
        }
    }

    /// Integrates `y' = f(s, y)` from `s0` to `s1` (either direction). After every
    /// accepted step `stop` is consulted; returning `true` ends the leg early.
    pub fn integrate<F, S>(&mut self, f: F, s0: f64, y0: State, s1: f64, mut stop: S) -> Result<Leg>
    where
        F: Fn(f64, &State) -> State,
        S: FnMut(f64, &State) -> bool,
    {
        let dir = if s1 >= s0 { 1.0 } else { -1.0 };
        let span = (s1 - s0).abs();
        if span == 0.0 {
            return Ok(Leg {
                s: s0,
                y: y0,
                stopped: false,
            });
        }
        let mut s = s0;
        let mut y = y0;
        let mut h = self.h.abs().min(span).max(1e-14);
        let mut k = [[0.0; 2]; 7];
        k[0] = f(s, &y);
        for _ in 0..self.max_steps {
            let remaining = (s1 - s) * dir;
            if remaining <= 1e-14 * span.max(1.0) {
                return Ok(Leg {
                    s: s1,
                    y,
                    stopped: false,
                });
            }
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let hs = dir * step;

            for i in 1..7 {
                let mut yi = y;
                for (j, kj) in k.iter().enumerate().take(i) {
                    let a = A[i][j];
                    if a != 0.0 {
                        yi[0] += hs * a * kj[0];
                        yi[1] += hs * a * kj[1];
                    }
                }
                k[i] = f(s + C[i] * hs, &yi);
            }
            // the 7th stage is evaluated at the 5th-order solution (FSAL)
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                y_new[0] += hs * A[6][j] * kj[0];
                y_new[1] += hs * A[6][j] * kj[1];
            }
            let mut err: f64 = 0.0;
            for c in 0..2 {
                let e: f64 = (0..7).map(|j| E[j] * k[j][c]).sum::<f64>() * hs;
                let scale = self.atol + self.rtol * y[c].abs().max(y_new[c].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                h *= 0.25;
                if h < 1e-14 {
                    return Err(Error::NoConvergence {
                        what: "ODE step size underflow".into(),
                        iterations: 0,
                    });
                }
                k[0] = f(s, &y);
                continue;
            }
            if err <= 1.0 {
                s = if last { s1 } else { s + hs };
                y = y_new;
                k[0] = k[6];
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last || grow < 1.0 {
                    h = step * grow;
                }
                self.h = h;
                if stop(s, &y) {
                    return Ok(Leg {
                        s,
                        y,
                        stopped: true,
                    });
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-14 * span.max(1.0) {
                    return Err(Error::NoConvergence {
                        what: "ODE step size underflow".into(),
                        iterations: 0,
                    });
                }
            }
        }
        Err(Error::NoConvergence {
            what: "ODE integration".into(),
            iterations: self.max_steps,
        })
    }
}
