//! Acceptance checks at desk scale (N = 2, p = 3, m = 2, a = 1 unless noted).
//! Runs every check in sequence, prints one PASS/FAIL line per check and
//! exits non-zero if any check fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use kbump::energy::{
    expansion_comparison, fit_interaction_law, sample_interaction, single_bump_energy_report, ExpansionOptions,
    InteractionLaw,
};
use kbump::geometry::{admissible_radii, PotentialSpec};
use kbump::lyapunov::{coercivity_probe, Ansatz};
use kbump::radial::{expansion_constants, solve_ground_state, RadialProfile};
use kbump::reduced::{
    locate_critical_radius, polish_and_certify, reduced_energy, reduced_energy_on, CriticalRadius, NewtonOptions,
    Objective, ReductionSetup,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Shared {
    profile: RadialProfile,
    potential: PotentialSpec,
    law: InteractionLaw,
    criticals: Vec<(usize, CriticalRadius)>,
}

impl Shared {
    fn setup(&self) -> ReductionSetup<'_> {
        let mut s = ReductionSetup::new(&self.profile, self.potential);
        s.law = Some(self.law.clone());
        s
    }

    fn critical(&self, k: usize) -> &CriticalRadius {
        &self.criticals.iter().find(|(j, _)| *j == k).expect("located").1
    }
}

fn ground_state_oracle() -> Outcome {
    let t = Instant::now();
    let u = solve_ground_state(1, 3.0, 1e-10).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let err = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - 2f64.sqrt() / (i as f64 * u.step()).cosh()).abs())
        .fold(0.0, f64::max);
    let i2 = u.radial_integral(2.0).unwrap();
    let i4 = u.radial_integral(4.0).unwrap();
    let (e2, e4) = ((i2 - 4.0).abs() / 4.0, (i4 - 16.0 / 3.0).abs() / (16.0 / 3.0));
    outcome(
        err <= 1e-6 && e2 <= 1e-5 && e4 <= 1e-5 && elapsed < 1.0,
        format!("max |U - √2 sech| = {err:.2e}, rel err ∫U² {e2:.2e}, ∫U⁴ {e4:.2e}, {elapsed:.2} s"),
    )
}

fn interaction_law(s: &Shared, elapsed: f64) -> Outcome {
    let (lam, nu) = (s.law.exponent, s.law.prefactor_power);
    outcome(
        (lam - 1.0).abs() <= 0.01 && (nu - 0.5).abs() <= 0.05 && elapsed < 60.0,
        format!("λ = {lam:.5}, ν = {nu:.4} over d ∈ [8, 16], {elapsed:.1} s"),
    )
}

fn single_bump(s: &Shared) -> Outcome {
    let rows = single_bump_energy_report(&s.profile, &s.potential, &[20.0, 40.0]).unwrap();
    let ratio = rows[0].scaled_residual.abs() / rows[1].scaled_residual.abs();
    outcome(
        ratio >= 1.8,
        format!(
            "scaled residual {:.4e} (r = 20) → {:.4e} (r = 40), ratio {ratio:.3}",
            rows[0].scaled_residual, rows[1].scaled_residual
        ),
    )
}

fn ansatz_expansion(s: &Shared) -> Outcome {
    let points: Vec<(usize, f64)> = [6, 8, 10]
        .iter()
        .map(|&k| (k, admissible_radii(k, 2.0, 0.1).unwrap().midpoint()))
        .collect();
    let rows = expansion_comparison(&s.profile, &s.potential, &s.law, &points, &ExpansionOptions::default()).unwrap();
    let mism: Vec<f64> = rows.iter().map(|r| r.mismatch).collect();
    let small = mism.iter().all(|&m| m <= 0.05);
    let monotone = mism.windows(2).all(|w| w[1] <= w[0]);
    let listing: Vec<String> = rows.iter().map(|r| format!("k={} {:.2}%", r.k, 100.0 * r.mismatch)).collect();
    outcome(small && monotone, format!("mismatch at S_k midpoints: {} (non-increasing: {monotone})", listing.join(", ")))
}

fn coercivity(s: &Shared) -> Outcome {
    let setup = s.setup();
    let per_k: Vec<(usize, Vec<(f64, f64)>)> = [6usize, 8, 10]
        .par_iter()
        .map(|&k| {
            let w = admissible_radii(k, 2.0, 0.1).unwrap();
            let op = setup.operator(k, w.upper).unwrap();
            // the radii of the coarse reduced-energy scan
            let rhos = (0..9)
                .map(|i| {
                    let r = w.lower + (w.upper - w.lower) * i as f64 / 8.0;
                    let ans = Ansatz::new(Arc::clone(&op), &s.profile, r).unwrap();
                    (r, coercivity_probe(&ans, setup.n_probe, setup.seed).unwrap().rho_hat)
                })
                .collect();
            (k, rhos)
        })
        .collect();
    let positive = per_k.iter().all(|(_, v)| v.iter().all(|&(_, rho)| rho > 0.0));
    let mins: Vec<f64> = per_k.iter().map(|(_, v)| v.iter().map(|x| x.1).fold(f64::INFINITY, f64::min)).collect();
    let lo = mins.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mins.iter().cloned().fold(0.0, f64::max);
    let listing: Vec<String> = per_k
        .iter()
        .map(|(k, v)| {
            let vals: Vec<String> = v.iter().map(|(r, rho)| format!("{r:.2}:{rho:.3}")).collect();
            format!("k={k} [{}]", vals.join(" "))
        })
        .collect();
    outcome(
        positive && lo >= 0.5 * hi,
        format!("ρ̂ at r:ρ̂ {}; min/max over ladder {:.3}", listing.join(" "), if hi > 0.0 { lo / hi } else { 0.0 }),
    )
}

fn correction_bound(s: &Shared) -> Outcome {
    let setup = s.setup();
    let ks = [6usize, 8, 10, 12];
    let rows: Vec<(usize, f64, f64, Vec<f64>)> = ks
        .par_iter()
        .map(|&k| {
            let r = s.critical(k).admissible.argmax;
            let e = reduced_energy(k, r, &setup).unwrap();
            (k, r, e.correction.norm, e.correction.ratios)
        })
        .collect();
    let contracting = rows.iter().all(|(_, _, _, q)| q.iter().all(|&x| x < 1.0));
    // least-squares slope of ln‖φ‖ against ln k
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.2.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let exponent = -slope;
    let listing: Vec<String> = rows
        .iter()
        .map(|(k, r, n, q)| format!("k={k} r={r:.3} ‖φ‖={n:.4} max ratio {:.3}", q.iter().cloned().fold(0.0, f64::max)))
        .collect();
    outcome(
        contracting && exponent >= 0.5,
        format!("{}; fitted decay exponent {exponent:.3}", listing.join(", ")),
    )
}

fn scaling(s: &Shared) -> Outcome {
    let target = 1.0 / PI;
    let mut interior = true;
    let mut inside = true;
    let mut dists = Vec::new();
    let mut listing = Vec::new();
    for (k, c) in &s.criticals {
        let a = &c.admissible;
        interior &= a.interior;
        inside &= (a.normalized_radius - target).abs() <= 0.1;
        dists.push((a.normalized_radius - target).abs());
        let ext = c
            .extended
            .as_ref()
            .filter(|e| e.interior)
            .map(|e| format!(", interior maximum past S_k at r = {:.3} ({:.4})", e.argmax, e.normalized_radius))
            .unwrap_or_default();
        listing.push(format!(
            "k={k} argmax {:.3} interior {} r/(k ln k) {:.4}{ext}",
            a.argmax, a.interior, a.normalized_radius
        ));
    }
    let monotone = dists.windows(2).all(|w| w[1] <= w[0]);
    outcome(interior && inside && monotone, listing.join("; "))
}

fn certified(s: &Shared) -> Outcome {
    let t = Instant::now();
    let crit = s.critical(6);
    let (r, kind) = match crit.critical() {
        Some(r) => (r, "critical point of F"),
        None => (crit.admissible.argmax, "argmax over S_k"),
    };
    let setup = s.setup();
    match polish_and_certify(6, r, &setup, &NewtonOptions::default()) {
        Ok(sol) => {
            let elapsed = t.elapsed().as_secs_f64();
            outcome(
                sol.residual <= 1e-6 && sol.newton_steps <= 10 && sol.min_value > 0.0 && sol.nonradiality >= 0.1 && elapsed < 600.0,
                format!(
                    "k=6 from r = {r:.4} ({kind}): residual {:.2e} in {} steps, min u {:.2e}, nonradiality {:.3}, {elapsed:.1} s",
                    sol.residual, sol.newton_steps, sol.min_value, sol.nonradiality
                ),
            )
        }
        Err(e) => outcome(false, format!("k=6 from r = {r:.4} ({kind}): {e}")),
    }
}

fn degenerate(profile: &RadialProfile) -> Outcome {
    let flat = PotentialSpec::flat();
    let setup = ReductionSetup::new(profile, flat);
    let a = expansion_constants(profile, &flat).unwrap().a;
    let op = setup.operator(1, 6.0).unwrap();
    let energies: Vec<_> = [3.0, 6.0].iter().map(|&r| reduced_energy_on(&op, r, &setup).unwrap()).collect();
    let zero_lk = energies.iter().all(|e| e.correction.lk_norm == 0.0);
    let zero_phi = energies.iter().all(|e| e.correction.norm == 0.0);
    let flat_f = energies.iter().all(|e| (e.f - a).abs() <= 2e-3 * a);
    let newton = polish_and_certify(1, 0.0, &setup, &NewtonOptions::default());
    let (steps_ok, newton_text) = match &newton {
        Ok(s) => (s.newton_steps <= 2 && s.residual <= 1e-6, format!("{} steps to {:.2e}", s.newton_steps, s.residual)),
        Err(e) => (false, e.to_string()),
    };
    outcome(
        zero_lk && zero_phi && flat_f && steps_ok,
        format!(
            "l_k = 0: {zero_lk}, φ = 0: {zero_phi}, F(3) = {:.6}, F(6) = {:.6} vs A = {a:.6}; Newton {newton_text}",
            energies[0].f, energies[1].f
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    println!(
        "{} {name}: {} [{:.1} s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        t.elapsed().as_secs_f64()
    );
    o.pass
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    results.push(run("1 ground-state oracle", ground_state_oracle));

    let profile = solve_ground_state(2, 3.0, 1e-10).unwrap();
    let potential = PotentialSpec::new(1.0, 2.0).unwrap();
    let t = Instant::now();
    let law = fit_interaction_law(&sample_interaction(&profile, 8.0, 16.0, 9).unwrap()).unwrap();
    let law_time = t.elapsed().as_secs_f64();
    let mut shared = Shared {
        profile,
        potential,
        law,
        criticals: Vec::new(),
    };
    {
        let setup = shared.setup();
        let located: Vec<(usize, CriticalRadius)> = [6usize, 8, 10, 12]
            .par_iter()
            .map(|&k| (k, locate_critical_radius(k, &setup, 9, Objective::Full).unwrap()))
            .collect();
        shared.criticals = located;
    }

    results.push(run("2 interaction law", || interaction_law(&shared, law_time)));
    results.push(run("3 single-bump expansion", || single_bump(&shared)));
    results.push(run("4 ansatz-energy expansion", || ansatz_expansion(&shared)));
    results.push(run("5 coercivity", || coercivity(&shared)));
    results.push(run("6 correction bound", || correction_bound(&shared)));
    results.push(run("7 optimal-radius scaling", || scaling(&shared)));
    results.push(run("8 certified solution", || certified(&shared)));
    results.push(run("9 degenerate oracle", || degenerate(&shared.profile)));

    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
