//! Config-driven runs: stages, artifacts, manifest and the summary report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{
    expansion_comparison, fit_interaction_law, fit_pure_exponential, sample_interaction, single_bump_energy_report,
    ExpansionOptions, InteractionLaw,
};
use crate::error::Error;
use crate::geometry::{admissible_radii, PotentialSpec};
use crate::lyapunov::CorrectionOptions;
use crate::radial::{check_exponent, expansion_constants, solve_ground_state, RadialProfile};
use crate::reduced::{
    fill_trend, locate_critical_radius, polish_and_certify, scaling_row, CertifiedSolution, CriticalRadius,
    NewtonOptions, Objective, ReductionSetup,
};

/// Run parameters. Lengths carry `_len`, tolerances name their norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub exponent_p: f64,
    pub potential_amplitude_a: f64,
    pub potential_decay_m: f64,
    pub window_beta: f64,
    pub k_list: Vec<usize>,
    pub grid_step_len: f64,
    /// `R_out` = largest ring radius on the grid + this margin.
    pub grid_outer_margin_len: f64,
    pub ground_state_tol_abs: f64,
    pub correction_tol_abs_h1v: f64,
    pub correction_max_outer: usize,
    pub correction_max_linear: usize,
    pub newton_tol_abs_l2: f64,
    pub newton_max_steps: usize,
    pub scan_samples: usize,
    pub probe_vectors: usize,
    pub probe_seed: u64,
    pub interaction_d_min_len: f64,
    pub interaction_d_max_len: f64,
    pub interaction_samples: usize,
    pub expansion_step_len: f64,
    pub single_bump_radii_len: Vec<f64>,
    pub certify_k: usize,
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 2,
            exponent_p: 3.0,
            potential_amplitude_a: 1.0,
            potential_decay_m: 2.0,
            window_beta: 0.1,
            k_list: vec![6, 8, 10, 12],
            grid_step_len: 0.1,
            grid_outer_margin_len: 15.0,
            ground_state_tol_abs: 1e-10,
            correction_tol_abs_h1v: 1e-8,
            correction_max_outer: 30,
            correction_max_linear: 2000,
            newton_tol_abs_l2: 1e-6,
            newton_max_steps: 20,
            scan_samples: 9,
            probe_vectors: 60,
            probe_seed: 7,
            interaction_d_min_len: 8.0,
            interaction_d_max_len: 16.0,
            interaction_samples: 9,
            expansion_step_len: 0.05,
            single_bump_radii_len: vec![20.0, 40.0],
            certify_k: 6,
            output_dir: None,
        }
    }
}

/// One configuration problem, with the line of the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key.is_empty()) {
            (Some(l), false) => write!(f, "line {l}: {}: {}", self.key, self.message),
            (Some(l), true) => write!(f, "line {l}: {}", self.message),
            (None, false) => write!(f, "{}: {}", self.key, self.message),
            (None, true) => write!(f, "{}", self.message),
        }
    }
}

fn list_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", list_issues(.0))]
    Validation(Vec<Issue>),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Error },
    #[error("missing artifact {0}")]
    MissingArtifact(String),
    #[error("malformed artifact {path}: {reason}")]
    BadArtifact { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for bad input, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) | RunError::MissingArtifact(_) | RunError::BadArtifact { .. } => 2,
            RunError::Stage { source, .. } => match source {
                Error::InvalidParameter(_) | Error::Supercritical { .. } => 2,
                Error::Io(_) => 1,
                _ => 3,
            },
            RunError::Io(_) => 1,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

impl RunConfig {
    /// Parses and validates; every problem found is reported at once.
    pub fn parse(text: &str) -> RunResult<RunConfig> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| {
            RunError::Validation(vec![Issue {
                key: String::new(),
                line: Some(e.line()),
                message: e.to_string(),
            }])
        })?;
        let issues = config.issues(Some(text));
        if issues.is_empty() {
            Ok(config)
        } else {
            Err(RunError::Validation(issues))
        }
    }

    pub fn load(path: &Path) -> RunResult<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            RunError::Validation(vec![Issue {
                key: String::new(),
                line: None,
                message: format!("cannot read {}: {e}", path.display()),
            }])
        })?;
        RunConfig::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> RunResult<()> {
        let issues = self.issues(None);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(RunError::Validation(issues))
        }
    }

    fn issues(&self, source: Option<&str>) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut bad = |key: &str, message: String| {
            let line = source.and_then(|t| {
                let needle = format!("\"{key}\"");
                t.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
            });
            out.push(Issue {
                key: key.to_string(),
                line,
                message,
            });
        };
        if let Err(e) = check_exponent(self.dimension, self.exponent_p) {
            let key = if self.dimension == 0 { "dimension" } else { "exponent_p" };
            let message = match e {
                Error::Supercritical { critical, .. } => format!(
                    "p = {} violates the subcritical rule p < (N+2)/(N-2) = {critical} for N = {}",
                    self.exponent_p, self.dimension
                ),
                other => other.to_string(),
            };
            bad(key, message);
        }
        if self.dimension != 2 {
            bad(
                "dimension",
                format!("the sector grid is planar: N = {} is not supported, use N = 2", self.dimension),
            );
        }
        if let Err(e) = PotentialSpec::new(self.potential_amplitude_a, self.potential_decay_m) {
            let key = if self.potential_amplitude_a >= 0.0 { "potential_decay_m" } else { "potential_amplitude_a" };
            bad(key, e.to_string());
        } else {
            let slope = self.potential_decay_m / (2.0 * PI);
            if !(self.window_beta > 0.0 && self.window_beta < slope) {
                bad("window_beta", format!("β = {} must lie in (0, m/2π = {slope:.6})", self.window_beta));
            }
        }
        if self.k_list.is_empty() {
            bad("k_list", "at least one k is needed".into());
        } else if self.k_list.contains(&0) {
            bad("k_list", "every k must be ≥ 1".into());
        } else if self.k_list.windows(2).any(|w| w[1] <= w[0]) {
            bad("k_list", "k values must be strictly increasing".into());
        }
        if !(self.grid_step_len > 0.0 && self.grid_step_len <= 0.25) {
            bad("grid_step_len", format!("h = {} must lie in (0, 0.25]", self.grid_step_len));
        }
        if !(self.grid_outer_margin_len >= 5.0) || !self.grid_outer_margin_len.is_finite() {
            bad("grid_outer_margin_len", format!("margin {} must be ≥ 5", self.grid_outer_margin_len));
        }
        for (key, v) in [
            ("ground_state_tol_abs", self.ground_state_tol_abs),
            ("correction_tol_abs_h1v", self.correction_tol_abs_h1v),
            ("newton_tol_abs_l2", self.newton_tol_abs_l2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bad(key, format!("tolerance {v} must be positive"));
            }
        }
        for (key, v, min) in [
            ("correction_max_outer", self.correction_max_outer, 1),
            ("correction_max_linear", self.correction_max_linear, 1),
            ("newton_max_steps", self.newton_max_steps, 1),
            ("scan_samples", self.scan_samples, 9),
            ("probe_vectors", self.probe_vectors, 2),
            ("interaction_samples", self.interaction_samples, 4),
        ] {
            if v < min {
                bad(key, format!("{v} is below the minimum {min}"));
            }
        }
        if !(self.interaction_d_min_len >= 0.0 && self.interaction_d_max_len > self.interaction_d_min_len) {
            bad(
                "interaction_d_max_len",
                format!("need 0 ≤ d_min < d_max, got [{}, {}]", self.interaction_d_min_len, self.interaction_d_max_len),
            );
        }
        if !(self.expansion_step_len > 0.0 && self.expansion_step_len <= 0.25) {
            bad("expansion_step_len", format!("h = {} must lie in (0, 0.25]", self.expansion_step_len));
        }
        if self.single_bump_radii_len.iter().any(|&r| !(r >= 5.0) || !r.is_finite()) {
            bad("single_bump_radii_len", "single-bump radii must be ≥ 5".into());
        }
        if self.certify_k < 2 {
            bad("certify_k", format!("k = {} has no admissible window, need k ≥ 2", self.certify_k));
        }
        out
    }

    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec::new(self.potential_amplitude_a, self.potential_decay_m).expect("validated")
    }

    fn setup<'a>(&self, profile: &'a RadialProfile, law: Option<InteractionLaw>) -> ReductionSetup<'a> {
        let mut s = ReductionSetup::new(profile, self.potential());
        s.beta = self.window_beta;
        s.h = self.grid_step_len;
        s.margin = self.grid_outer_margin_len;
        s.correction = CorrectionOptions {
            tol: self.correction_tol_abs_h1v,
            max_outer: self.correction_max_outer,
            max_linear: self.correction_max_linear,
        };
        s.n_probe = self.probe_vectors;
        s.seed = self.probe_seed;
        s.law = law;
        s
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    GroundState,
    Constants,
    Interaction,
    Expansion,
    Reduce,
    Study,
    Certify,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::GroundState,
        Stage::Constants,
        Stage::Interaction,
        Stage::Expansion,
        Stage::Reduce,
        Stage::Study,
        Stage::Certify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GroundState => "ground-state",
            Stage::Constants => "constants",
            Stage::Interaction => "interaction",
            Stage::Expansion => "expansion",
            Stage::Reduce => "reduce",
            Stage::Study => "study",
            Stage::Certify => "certify",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub probe_seed: u64,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

fn sci_opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsArtifact {
    pub a: f64,
    pub b1: f64,
    pub dimension: usize,
    pub exponent_p: f64,
    pub potential_amplitude_a: f64,
    pub potential_decay_m: f64,
    pub single_bump: Vec<crate::energy::SingleBumpRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionArtifact {
    pub law: InteractionLaw,
    pub pure_exponential: InteractionLaw,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateArtifact {
    /// `critical` when `F` has an interior maximum (inside `S_k` or past its
    /// upper end), `admissible-boundary` otherwise.
    pub start_radius_kind: String,
    #[serde(flatten)]
    pub solution: CertifiedSolution,
}

/// State of one run: computed inputs are cached so later stages reuse them.
pub struct Pipeline {
    config: RunConfig,
    out: PathBuf,
    profile: Option<RadialProfile>,
    interaction: Option<InteractionArtifact>,
    criticals: BTreeMap<usize, CriticalRadius>,
    manifest: Manifest,
}

impl Pipeline {
    pub fn new(config: RunConfig, out: &Path) -> RunResult<Pipeline> {
        config.validate()?;
        fs::create_dir_all(out)?;
        let fresh = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            probe_seed: config.probe_seed,
            stages: Vec::new(),
            files: Vec::new(),
        };
        // keep earlier stage records only if they came from the same config
        let manifest = fs::read(out.join(MANIFEST))
            .ok()
            .and_then(|b| serde_json::from_slice::<Manifest>(&b).ok())
            .filter(|m| m.config == config)
            .unwrap_or(fresh);
        Ok(Pipeline {
            config,
            out: out.to_path_buf(),
            profile: None,
            interaction: None,
            criticals: BTreeMap::new(),
            manifest,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Runs the given stages in pipeline order.
    pub fn run(&mut self, stages: &[Stage]) -> RunResult<()> {
        let mut todo = stages.to_vec();
        todo.sort();
        todo.dedup();
        for stage in todo {
            match self.run_stage(stage) {
                Ok(outputs) => self.record(stage, outputs, None)?,
                Err(source) => {
                    self.record(stage, Vec::new(), Some(source.to_string()))?;
                    return Err(RunError::Stage {
                        stage: stage.name(),
                        source,
                    });
                }
            }
        }
        Ok(())
    }

    fn record(&mut self, stage: Stage, outputs: Vec<String>, error: Option<String>) -> RunResult<()> {
        let m = &mut self.manifest;
        m.stages.retain(|s| s.stage != stage.name());
        m.stages.push(StageRecord {
            stage: stage.name().into(),
            status: if error.is_none() { "ok" } else { "failed" }.into(),
            outputs: outputs.clone(),
            error,
        });
        m.stages.sort_by_key(|s| Stage::from_name(&s.stage));
        for path in outputs {
            let bytes = fs::read(self.out.join(&path))?;
            m.files.retain(|f| f.path != path);
            m.files.push(FileRecord {
                path,
                sha256: sha256_hex(&bytes),
            });
        }
        m.files.sort_by(|a, b| a.path.cmp(&b.path));
        write_manifest(&self.out, m)
    }

    fn run_stage(&mut self, stage: Stage) -> crate::Result<Vec<String>> {
        match stage {
            Stage::GroundState => self.ground_state(),
            Stage::Constants => self.constants(),
            Stage::Interaction => self.interaction(),
            Stage::Expansion => self.expansion(),
            Stage::Reduce => self.reduce(),
            Stage::Study => self.study(),
            Stage::Certify => self.certify(),
        }
    }

    fn profile(&mut self) -> crate::Result<&RadialProfile> {
        if self.profile.is_none() {
            let c = &self.config;
            self.profile = Some(solve_ground_state(c.dimension, c.exponent_p, c.ground_state_tol_abs)?);
        }
        Ok(self.profile.as_ref().expect("profile"))
    }

    fn law(&mut self) -> crate::Result<InteractionArtifact> {
        if self.interaction.is_none() {
            let (d0, d1, n) = (
                self.config.interaction_d_min_len,
                self.config.interaction_d_max_len,
                self.config.interaction_samples,
            );
            let samples = sample_interaction(self.profile()?, d0, d1, n)?;
            self.interaction = Some(InteractionArtifact {
                law: fit_interaction_law(&samples)?,
                pure_exponential: fit_pure_exponential(&samples)?,
                samples,
            });
        }
        Ok(self.interaction.clone().expect("interaction"))
    }

    fn ensure_criticals(&mut self, ks: &[usize]) -> crate::Result<()> {
        let missing: Vec<usize> = ks.iter().cloned().filter(|k| *k >= 2 && !self.criticals.contains_key(k)).collect();
        if missing.is_empty() {
            return Ok(());
        }
        let law = self.law()?.law;
        self.profile()?;
        let profile = self.profile.as_ref().expect("profile");
        let setup = self.config.setup(profile, Some(law));
        let n = self.config.scan_samples;
        let found: Vec<(usize, CriticalRadius)> = missing
            .par_iter()
            .map(|&k| locate_critical_radius(k, &setup, n, Objective::Full).map(|c| (k, c)))
            .collect::<crate::Result<_>>()?;
        self.criticals.extend(found);
        Ok(())
    }

    fn write(&self, name: &str, bytes: &[u8]) -> crate::Result<String> {
        fs::write(self.out.join(name), bytes)?;
        Ok(name.to_string())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> crate::Result<String> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> crate::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        self.write(name, &bytes)
    }

    fn ground_state(&mut self) -> crate::Result<Vec<String>> {
        let mut bytes = Vec::new();
        self.profile()?.write_csv(&mut bytes)?;
        Ok(vec![self.write("profile.csv", &bytes)?])
    }

    fn constants(&mut self) -> crate::Result<Vec<String>> {
        let pot = self.config.potential();
        let radii = self.config.single_bump_radii_len.clone();
        let profile = self.profile()?;
        let c = expansion_constants(profile, &pot)?;
        let single_bump = single_bump_energy_report(profile, &pot, &radii)?;
        let art = ConstantsArtifact {
            a: c.a,
            b1: c.b1,
            dimension: self.config.dimension,
            exponent_p: self.config.exponent_p,
            potential_amplitude_a: self.config.potential_amplitude_a,
            potential_decay_m: self.config.potential_decay_m,
            single_bump,
        };
        Ok(vec![self.write_json("constants.json", &art)?])
    }

    fn interaction(&mut self) -> crate::Result<Vec<String>> {
        let art = self.law()?;
        let rows: Vec<Vec<String>> = art
            .samples
            .iter()
            .map(|&(d, psi)| vec![sci(d), sci(psi), sci(art.law.eval(d)), sci(art.pure_exponential.eval(d))])
            .collect();
        Ok(vec![
            self.write_csv("interaction.csv", &["d", "psi", "psi_fit", "psi_pure_exponential"], &rows)?,
            self.write_json("interaction_law.json", &art)?,
        ])
    }

    fn expansion(&mut self) -> crate::Result<Vec<String>> {
        let law = self.law()?.law;
        let pot = self.config.potential();
        let points: Vec<(usize, f64)> = self
            .config
            .k_list
            .iter()
            .filter(|&&k| k >= 2)
            .map(|&k| Ok((k, admissible_radii(k, pot.m, self.config.window_beta)?.midpoint())))
            .collect::<crate::Result<_>>()?;
        let opts = ExpansionOptions {
            h: self.config.expansion_step_len,
            margin: self.config.grid_outer_margin_len,
            ..ExpansionOptions::default()
        };
        let table = expansion_comparison(self.profile()?, &pot, &law, &points, &opts)?;
        let rows: Vec<Vec<String>> = table
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    sci(r.r),
                    sci(r.d),
                    sci(r.i_numeric),
                    sci(r.i_asymptotic),
                    sci(r.mismatch),
                    sci(r.i_all_pairs),
                    sci(r.mismatch_all_pairs),
                    sci(r.b2),
                ]
            })
            .collect();
        let header = [
            "k",
            "r",
            "d",
            "i_numeric",
            "i_asymptotic",
            "mismatch",
            "i_all_pairs",
            "mismatch_all_pairs",
            "b2",
        ];
        Ok(vec![self.write_csv("expansion.csv", &header, &rows)?])
    }

    fn reduce(&mut self) -> crate::Result<Vec<String>> {
        let ks = self.config.k_list.clone();
        self.ensure_criticals(&ks)?;
        let crits: Vec<&CriticalRadius> = ks.iter().filter_map(|k| self.criticals.get(k)).collect();
        let mut rows = Vec::new();
        for c in &crits {
            let windows = std::iter::once(("admissible", &c.admissible)).chain(c.extended.iter().map(|e| ("extended", e)));
            for (window, curve) in windows {
                for (phase, pts) in [("scan", &curve.samples), ("refine", &curve.refinement)] {
                    for &(r, f) in pts.iter() {
                        rows.push(vec![curve.k.to_string(), window.into(), phase.into(), sci(r), sci(f)]);
                    }
                }
            }
        }
        Ok(vec![
            self.write_json("reduce.json", &crits)?,
            self.write_csv("curves.csv", &["k", "window", "phase", "r", "f"], &rows)?,
        ])
    }

    fn study(&mut self) -> crate::Result<Vec<String>> {
        let ks = self.config.k_list.clone();
        self.ensure_criticals(&ks)?;
        let law = self.law()?.law;
        self.profile()?;
        let profile = self.profile.as_ref().expect("profile");
        let setup = self.config.setup(profile, Some(law));
        let mut table = ks
            .par_iter()
            .map(|&k| scaling_row(k, self.criticals.get(&k), &setup))
            .collect::<crate::Result<Vec<_>>>()?;
        fill_trend(&mut table);
        let rows: Vec<Vec<String>> = table
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    sci(r.r_k),
                    r.interior.to_string(),
                    sci_opt(r.normalized_radius),
                    sci_opt(r.distance_to_target),
                    sci_opt(r.trend),
                    sci_opt(r.extended_r),
                    sci_opt(r.extended_normalized),
                    sci(r.phi_norm),
                    sci(r.lk_norm),
                    sci(r.rho_hat),
                    sci(r.f_over_k),
                    sci_opt(r.contraction_ratios.iter().cloned().reduce(f64::max)),
                ]
            })
            .collect();
        let header = [
            "k",
            "r_k",
            "interior",
            "normalized_radius",
            "distance_to_target",
            "trend",
            "extended_r",
            "extended_normalized",
            "phi_norm",
            "lk_norm",
            "rho_hat",
            "f_over_k",
            "max_contraction_ratio",
        ];
        Ok(vec![self.write_csv("scaling.csv", &header, &rows)?])
    }

    fn certify(&mut self) -> crate::Result<Vec<String>> {
        let k = self.config.certify_k;
        self.ensure_criticals(&[k])?;
        let crit = self.criticals[&k].clone();
        let (r_k, kind) = match crit.critical() {
            Some(r) => (r, "critical"),
            None => (crit.admissible.argmax, "admissible-boundary"),
        };
        let law = self.law()?.law;
        let opts = NewtonOptions {
            tol: self.config.newton_tol_abs_l2,
            max_steps: self.config.newton_max_steps,
            ..NewtonOptions::default()
        };
        let profile = self.profile.as_ref().expect("profile");
        let setup = self.config.setup(profile, Some(law));
        let mut solution = polish_and_certify(k, r_k, &setup, &opts)?;
        let u = solution.u.take().expect("solution field");
        let mut bytes = Vec::new();
        u.write_csv(&mut bytes)?;
        let art = CertificateArtifact {
            start_radius_kind: kind.into(),
            solution,
        };
        Ok(vec![
            self.write(&format!("solution_k{k}.csv"), &bytes)?,
            self.write_json("certificate.json", &art)?,
        ])
    }
}

fn write_manifest(out: &Path, m: &Manifest) -> RunResult<()> {
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    fs::write(out.join(MANIFEST), text)?;
    Ok(())
}

/// Validates the config and runs `stages` into `out`.
pub fn run_pipeline(config: RunConfig, out: &Path, stages: &[Stage]) -> RunResult<()> {
    Pipeline::new(config, out)?.run(stages)
}

/// Artifacts the report reads, in the order they are checked.
pub const REPORT_INPUTS: [&str; 7] = [
    MANIFEST,
    "constants.json",
    "interaction_law.json",
    "expansion.csv",
    "reduce.json",
    "scaling.csv",
    "certificate.json",
];

fn read_artifact(dir: &Path, name: &str) -> RunResult<Vec<u8>> {
    fs::read(dir.join(name)).map_err(|_| RunError::MissingArtifact(name.into()))
}

fn parse_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> RunResult<T> {
    serde_json::from_slice(&read_artifact(dir, name)?).map_err(|e| RunError::BadArtifact {
        path: name.into(),
        reason: e.to_string(),
    })
}

fn parse_table(dir: &Path, name: &str) -> RunResult<Vec<BTreeMap<String, String>>> {
    let bytes = read_artifact(dir, name)?;
    let bad = |e: csv::Error| RunError::BadArtifact {
        path: name.into(),
        reason: e.to_string(),
    };
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header = r.headers().map_err(bad)?.clone();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(bad)?;
            Ok(header.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        })
        .collect()
}

fn cell(row: &BTreeMap<String, String>, key: &str) -> Option<f64> {
    row.get(key).and_then(|v| v.parse().ok())
}

fn show(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_else(|| "-".into())
}

/// Summary text plus plot CSVs for a completed run directory. Writes
/// `report.txt`, `plot_reduced_energy.csv` and `plot_radius_trend.csv` and
/// registers them in the manifest.
pub fn emit_report(dir: &Path) -> RunResult<String> {
    for name in REPORT_INPUTS {
        if !dir.join(name).is_file() {
            return Err(RunError::MissingArtifact(name.into()));
        }
    }
    let mut manifest: Manifest = parse_json(dir, MANIFEST)?;
    let constants: ConstantsArtifact = parse_json(dir, "constants.json")?;
    let inter: InteractionArtifact = parse_json(dir, "interaction_law.json")?;
    let expansion = parse_table(dir, "expansion.csv")?;
    let crits: Vec<CriticalRadius> = parse_json(dir, "reduce.json")?;
    let scaling = parse_table(dir, "scaling.csv")?;
    let cert: CertificateArtifact = parse_json(dir, "certificate.json")?;
    let cfg = &manifest.config;
    let m = cfg.potential_decay_m;
    let target = m / (2.0 * PI);

    let mut t = String::new();
    let mut line = |s: String| {
        t.push_str(&s);
        t.push('\n');
    };
    line("kbump run summary".into());
    line(format!(
        "N = {}, p = {}, a = {}, m = {}, beta = {}, h = {}, k = {:?}",
        cfg.dimension, cfg.exponent_p, cfg.potential_amplitude_a, m, cfg.window_beta, cfg.grid_step_len, cfg.k_list
    ));
    line(String::new());
    line(format!("A  = {:.10}", constants.a));
    line(format!("B1 = {:.10}", constants.b1));
    for row in &constants.single_bump {
        line(format!("single bump r = {:>5.1}: (I - A - B1/r^m) r^m = {:.4e}", row.r, row.scaled_residual));
    }
    let law = &inter.law;
    line(format!(
        "pair law Psi(d) = {:.6} d^-{:.4} exp(-{:.6} d) on [{}, {}], rms {:.2e}",
        law.amplitude, law.prefactor_power, law.exponent, law.d_min, law.d_max, law.residual
    ));
    let pe = &inter.pure_exponential;
    line(format!("pure exponential Psi(d) = {:.6} exp(-{:.6} d), rms {:.2e}", pe.amplitude, pe.exponent, pe.residual));
    line(String::new());
    line("ring exponent: decay rate of the nearest-pair term per unit r".into());
    line("  2 lambda sin(pi/k) is measured; 2 pi/k is the ring-geometry form; 2/k is the form without pi".into());
    for &k in cfg.k_list.iter().filter(|&&k| k >= 2) {
        let kf = k as f64;
        line(format!(
            "  k = {k:>3}: measured {:.5}  2pi/k {:.5}  2/k {:.5}",
            2.0 * law.exponent * (PI / kf).sin(),
            2.0 * PI / kf,
            2.0 / kf
        ));
    }
    line(String::new());
    line("ansatz energy vs expansion at the S_k midpoint".into());
    for r in &expansion {
        line(format!(
            "  k = {:>3}  r = {:>8}  mismatch {:>10}  all pairs {:>10}",
            r.get("k").cloned().unwrap_or_default(),
            show(cell(r, "r"), 4),
            show(cell(r, "mismatch"), 5),
            show(cell(r, "mismatch_all_pairs"), 5)
        ));
    }
    line(String::new());
    let rhos: Vec<f64> = scaling.iter().filter_map(|r| cell(r, "rho_hat")).collect();
    if let (Some(lo), Some(hi)) = (rhos.iter().cloned().reduce(f64::min), rhos.iter().cloned().reduce(f64::max)) {
        line(format!("rho_hat at r_k: min {lo:.5}, max {hi:.5}, ratio {:.4}", lo / hi));
    }
    line(format!("optimal radii (target r_k/(k ln k) = m/2pi = {target:.5})"));
    line("  k     r_k        interior  r_k/(k ln k)  r past S_k  normalized |phi|      F/k".into());
    for r in &scaling {
        line(format!(
            "  {:<4}  {:<9}  {:<8}  {:<12}  {:<9}  {:<9}  {:<9}  {}",
            r.get("k").cloned().unwrap_or_default(),
            show(cell(r, "r_k"), 4),
            r.get("interior").cloned().unwrap_or_default(),
            show(cell(r, "normalized_radius"), 5),
            show(cell(r, "extended_r"), 4),
            show(cell(r, "extended_normalized"), 5),
            show(cell(r, "phi_norm"), 5),
            show(cell(r, "f_over_k"), 6)
        ));
    }
    for c in &crits {
        if !c.admissible.failures.is_empty() {
            line(format!(
                "  k = {}: F not evaluated at {} radii of S_k (lowest failing r = {:.4})",
                c.admissible.k,
                c.admissible.failures.len(),
                c.admissible.failures.iter().map(|f| f.r).fold(f64::INFINITY, f64::min)
            ));
        }
    }
    line(String::new());
    let s = &cert.solution;
    line(format!(
        "certified solution k = {} at r = {:.5} ({}): residual {:.3e} after {} Newton steps",
        s.k, s.r_k, cert.start_radius_kind, s.residual, s.newton_steps
    ));
    line(format!(
        "  min u = {:.3e}, max u = {:.5}, nonradiality {:.4}, energy {:.8}",
        s.min_value, s.max_value, s.nonradiality, s.energy
    ));

    let mut curve_rows: Vec<(usize, f64, f64, &str)> = Vec::new();
    for c in &crits {
        for (window, curve) in std::iter::once(("admissible", &c.admissible)).chain(c.extended.iter().map(|e| ("extended", e))) {
            for &(r, f) in curve.samples.iter().chain(curve.refinement.iter()) {
                curve_rows.push((curve.k, r, f, window));
            }
        }
    }
    curve_rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RunError::Io(e.into());
    w.write_record(["k", "r", "f", "f_over_k", "window"]).map_err(io)?;
    for (k, r, f, window) in &curve_rows {
        w.write_record([k.to_string(), sci(*r), sci(*f), sci(f / *k as f64), window.to_string()]).map_err(io)?;
    }
    let energy_csv = w.into_inner().map_err(|e| RunError::Io(e.into_error()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "normalized_radius", "extended_normalized", "target"]).map_err(io)?;
    for r in &scaling {
        w.write_record([
            r.get("k").cloned().unwrap_or_default(),
            r.get("normalized_radius").cloned().unwrap_or_default(),
            r.get("extended_normalized").cloned().unwrap_or_default(),
            sci(target),
        ])
        .map_err(io)?;
    }
    let trend_csv = w.into_inner().map_err(|e| RunError::Io(e.into_error()))?;

    let outputs = [
        ("report.txt", t.as_bytes().to_vec()),
        ("plot_reduced_energy.csv", energy_csv),
        ("plot_radius_trend.csv", trend_csv),
    ];
    for (name, bytes) in &outputs {
        fs::write(dir.join(name), bytes)?;
        manifest.files.retain(|f| f.path != *name);
        manifest.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
    write_manifest(dir, &manifest)?;
    Ok(t)
}
