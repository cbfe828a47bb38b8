//! Figure recipes: layered flat configuration, presets and CSV/JSON artifacts.
//!
//! A configuration is assembled from per-experiment defaults, an optional
//! preset, an optional TOML file and explicit overrides, in that order. Every
//! CSV is written with 17 significant digits next to a JSON sidecar holding the
//! resolved configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::json;

use crate::bootstrap::{kappa_sweep, BootstrapParams};
use crate::ensemble::{atomic_protocol_check, sigma_for_squeezing};
use crate::error::Error;
use crate::fock::wigner_grid;
use crate::gaussian_map::{design_curve, gamma_max, solve_theta_for_gamma};
use crate::metrology::{baselines, log_grid, sweep, MWindow, QfiMetadata, ThetaModel};
use crate::protocol::CorrectionMode;
use crate::quadrature::QuadOptions;
use crate::stateprep::{average_fidelity_with, default_n_trunc, Preparation, TargetKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QfiSweep,
    KappaSweep,
    Stateprep,
    Wigner,
    EnsembleCheck,
    Baselines,
    DesignCurves,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::QfiSweep,
        ExperimentKind::KappaSweep,
        ExperimentKind::Stateprep,
        ExperimentKind::Wigner,
        ExperimentKind::EnsembleCheck,
        ExperimentKind::Baselines,
        ExperimentKind::DesignCurves,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::QfiSweep => "qfi-sweep",
            ExperimentKind::KappaSweep => "kappa-sweep",
            ExperimentKind::Stateprep => "stateprep",
            ExperimentKind::Wigner => "wigner",
            ExperimentKind::EnsembleCheck => "ensemble-check",
            ExperimentKind::Baselines => "baselines",
            ExperimentKind::DesignCurves => "design-curves",
        }
    }

    /// Experiments that draw measurement outcomes and therefore need a seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            ExperimentKind::Stateprep | ExperimentKind::Wigner | ExperimentKind::EnsembleCheck
        )
    }

    fn defaults(&self) -> &'static str {
        match self {
            ExperimentKind::EnsembleCheck => "r = 1.0\ng = 1.0\ntheta0 = 0.6\nalpha = 1.0\n",
            ExperimentKind::Stateprep | ExperimentKind::Wigner => "r = 4.0\ng = 1.0\nalpha = 2.0\n",
            ExperimentKind::KappaSweep => "r = 6.0\ng = 1.0\n",
            _ => "",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::Validation(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ConfigError {
    /// 2 for anything the user can fix in the configuration, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Validation(_) => 2,
            ConfigError::Numerical(
                Error::InvalidParameter(_) | Error::ThetaNearSingular { .. } | Error::NoSolution { .. },
            ) => 2,
            ConfigError::Numerical(_) => 3,
            ConfigError::Io(_) => 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

/// One experiment, fully resolved. Scalar keys that accept lists (`r`, `g`,
/// `theta0`, `alpha`, `two_j`) expand into every combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    #[serde(deserialize_with = "one_or_many")]
    pub r: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub g: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub theta0: Vec<f64>,
    /// `linear`, `none` or `exact`.
    pub correction: String,
    pub n_bar: Option<Vec<f64>>,
    pub n_bar_min: f64,
    pub n_bar_max: f64,
    pub per_decade: usize,
    pub n_trunc: Option<usize>,
    /// Fixed outcome window; otherwise `window_k` standard deviations around the support.
    pub m_window: Option<[f64; 2]>,
    pub window_k: f64,
    pub rel_tol: f64,
    /// Integrand evaluation budget per Fisher-information integral.
    pub max_evaluations: usize,
    pub kappa0: f64,
    pub r_prime: Option<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub alpha: Vec<f64>,
    pub target: TargetKind,
    pub n_runs: usize,
    pub seed: Option<u64>,
    #[serde(deserialize_with = "one_or_many")]
    pub two_j: Vec<usize>,
    pub q_max: Option<f64>,
    pub resolution: usize,
    pub theta_points: usize,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            r: vec![4.0],
            g: vec![1.0],
            theta0: vec![0.1],
            correction: "linear".into(),
            n_bar: None,
            n_bar_min: 1.0,
            n_bar_max: 50.0,
            per_decade: 12,
            n_trunc: None,
            m_window: None,
            window_k: 8.0,
            rel_tol: 1e-5,
            max_evaluations: 2_000_000,
            kappa0: 0.5,
            r_prime: None,
            alpha: vec![2.0],
            target: TargetKind::Cat,
            n_runs: 200,
            seed: None,
            two_j: vec![200, 400, 800],
            q_max: None,
            resolution: 101,
            theta_points: 400,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

pub const PRESETS: [&str; 6] = ["desk-fig2", "paper-fig2", "desk-fig3", "desk-fig4", "desk-fig5", "desk-fig7"];

/// Named recipe as a TOML fragment.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "desk-fig2" => {
            "experiment = \"qfi-sweep\"\nr = 4.0\ng = [0.3, 0.8, 1.4]\ntheta0 = [0.01, 0.1, 1.0]\n\
             correction = \"linear\"\nn_bar_min = 1.0\nn_bar_max = 30.0\nper_decade = 10\nn_trunc = 80\n"
        }
        "paper-fig2" => {
            "experiment = \"qfi-sweep\"\nr = 4.0\ng = [0.3, 0.8, 1.4]\ntheta0 = [0.01, 0.1, 1.0]\n\
             correction = \"linear\"\nn_bar_min = 1.0\nn_bar_max = 100.0\nper_decade = 10\nn_trunc = 260\n\
             m_window = [-900.0, 900.0]\n"
        }
        "desk-fig3" => {
            "experiment = \"qfi-sweep\"\nr = 6.0\ng = 1.0\ntheta0 = 0.1\ncorrection = \"linear\"\n\
             n_bar_min = 1.0\nn_bar_max = 50.0\nper_decade = 12\nn_trunc = 120\n"
        }
        "desk-fig4" => {
            "experiment = \"qfi-sweep\"\nr = 6.0\ng = 1.0\ntheta0 = 0.1\ncorrection = \"none\"\n\
             n_bar_min = 1.0\nn_bar_max = 50.0\nper_decade = 12\nn_trunc = 120\n"
        }
        "desk-fig5" => {
            "experiment = \"kappa-sweep\"\nr = 6.0\ng = 1.0\nkappa0 = 0.5\ncorrection = \"linear\"\n\
             n_bar_min = 1.0\nn_bar_max = 50.0\nper_decade = 12\nn_trunc = 120\n"
        }
        "desk-fig7" => {
            "experiment = \"stateprep\"\nr = [3.0, 3.5, 4.0, 4.5, 5.0]\ng = 1.0\nalpha = [2.0, 3.0, 4.0]\n\
             target = \"cat\"\nn_runs = 200\n"
        }
        _ => return None,
    })
}

fn parse_table(src: &str, what: &str) -> Result<toml::Table, ConfigError> {
    src.parse::<toml::Table>()
        .map_err(|e| invalid(format!("{what}: {e}")))
}

/// Builds a configuration from its layers. `overrides` are `key=value` pairs
/// with TOML values; a bare word is read as a string.
pub fn resolve(
    kind: ExperimentKind,
    preset_name: Option<&str>,
    file: Option<&str>,
    overrides: &[String],
) -> Result<ExperimentConfig, ConfigError> {
    let mut table = parse_table(kind.defaults(), "defaults")?;
    let mut layer = |t: toml::Table| {
        for (k, v) in t {
            table.insert(k, v);
        }
    };
    if let Some(name) = preset_name {
        let src = preset(name).ok_or_else(|| {
            invalid(format!("unknown preset '{name}' (known: {})", PRESETS.join(", ")))
        })?;
        layer(parse_table(src, "preset")?);
    }
    if let Some(src) = file {
        layer(parse_table(src, "config file")?);
    }
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| invalid(format!("override '{kv}' is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        let value = match parse_table(&format!("x = {v}"), "override") {
            Ok(mut t) => t.remove("x").expect("parsed key"),
            Err(_) => toml::Value::String(v.to_string()),
        };
        layer(toml::Table::from_iter([(k.to_string(), value)]));
    }
    if let Some(v) = table.get("experiment") {
        if v.as_str() != Some(kind.name()) {
            return Err(invalid(format!(
                "configuration is for experiment {v}, but {} was requested",
                kind.name()
            )));
        }
    }
    table.insert("experiment".into(), toml::Value::String(kind.name().into()));
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| invalid(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_range(name: &str, xs: &[f64], ok: impl Fn(f64) -> bool, range: &str) -> Result<(), ConfigError> {
    if xs.is_empty() {
        return Err(invalid(format!("{name} is empty")));
    }
    for &x in xs {
        if !x.is_finite() || !ok(x) {
            return Err(invalid(format!("{name} = {x} outside {range}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn kind(&self) -> Result<ExperimentKind, ConfigError> {
        self.experiment.ok_or_else(|| invalid("experiment not set"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind()?;
        check_range("r", &self.r, |x| (0.0..=12.0).contains(&x), "[0, 12]")?;
        check_range("g", &self.g, |x| x > 0.0 && x <= 5.0, "(0, 5]")?;
        for &t in &self.theta0 {
            if !(t > 0.0 && t < std::f64::consts::PI) {
                return Err(invalid(format!(
                    "theta0 = {t} outside (0, π): the bias angle is singular at 0 and π"
                )));
            }
        }
        if self.theta0.is_empty() {
            return Err(invalid("theta0 is empty"));
        }
        match (kind, self.correction.as_str()) {
            (_, "none" | "linear") => {}
            (ExperimentKind::QfiSweep | ExperimentKind::KappaSweep, "exact") => {
                return Err(invalid("correction = exact needs the unknown parameter; use linear or none"))
            }
            (_, "exact") => {}
            (_, other) => return Err(invalid(format!("correction '{other}' is not one of none, linear, exact"))),
        }
        if let Some(nb) = &self.n_bar {
            check_range("n_bar", nb, |x| x >= 0.0, "[0, ∞)")?;
        } else if !(self.n_bar_min > 0.0 && self.n_bar_max > self.n_bar_min && self.n_bar_max.is_finite()) {
            return Err(invalid(format!(
                "need 0 < n_bar_min < n_bar_max, got {} and {}",
                self.n_bar_min, self.n_bar_max
            )));
        }
        if matches!(kind, ExperimentKind::QfiSweep | ExperimentKind::KappaSweep) {
            let grid = self.n_bar_grid();
            if grid.len() < 3 || grid.iter().any(|&x| !(x > 0.0)) {
                return Err(invalid("sweeps need at least 3 positive n_bar points"));
            }
        }
        if let Some([lo, hi]) = self.m_window {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(format!("m_window [{lo}, {hi}] is empty")));
            }
        }
        if !(self.window_k > 0.0) {
            return Err(invalid("window_k must be positive"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(invalid("rel_tol must lie in (0, 1)"));
        }
        if self.max_evaluations < 1000 {
            return Err(invalid("max_evaluations must be at least 1000"));
        }
        if kind == ExperimentKind::KappaSweep && !(self.kappa0.is_finite() && self.kappa0 != 0.0) {
            return Err(invalid("kappa0 must be finite and nonzero"));
        }
        if let Some(rp) = self.r_prime {
            check_range("r_prime", &[rp], |x| (0.0..=12.0).contains(&x), "[0, 12]")?;
        }
        check_range("alpha", &self.alpha, |x| x >= 0.0 && x <= 20.0, "[0, 20]")?;
        if self.n_runs == 0 {
            return Err(invalid("n_runs must be at least 1"));
        }
        if self.two_j.is_empty() || self.two_j.iter().any(|&t| t < 2) {
            return Err(invalid("two_j entries must be at least 2"));
        }
        if self.resolution < 2 || self.theta_points < 2 {
            return Err(invalid("resolution and theta_points must be at least 2"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        if kind.is_stochastic() && self.seed.is_none() {
            return Err(invalid(format!("{} is stochastic: a seed is required", kind.name())));
        }
        Ok(())
    }

    pub fn n_bar_grid(&self) -> Vec<f64> {
        match &self.n_bar {
            Some(v) => v.clone(),
            None => log_grid(self.n_bar_min, self.n_bar_max, self.per_decade),
        }
    }

    fn window(&self) -> MWindow {
        match self.m_window {
            Some([lo, hi]) => MWindow::Fixed { lo, hi },
            None => MWindow::Auto { k: self.window_k },
        }
    }

    fn mode(&self, bias: f64) -> CorrectionMode {
        match self.correction.as_str() {
            "none" => CorrectionMode::None,
            "exact" => CorrectionMode::Exact,
            _ => CorrectionMode::Linear(bias),
        }
    }

    fn quad(&self) -> QuadOptions {
        QuadOptions {
            rel_tol: self.rel_tol,
            max_evaluations: self.max_evaluations,
            ..Default::default()
        }
    }

    fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }
}

/// One CSV table plus the experiment-specific part of its sidecar.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub csv: String,
    pub details: serde_json::Value,
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(xs: &[f64]) -> String {
    let mut s = xs.iter().map(|&x| e(x)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Runs the experiment in memory. Deterministic given the configuration.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    cfg.validate()?;
    let kind = cfg.kind()?;
    let out = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|err| invalid(format!("thread pool: {err}")))?
            .install(|| dispatch(kind, cfg)),
        None => dispatch(kind, cfg),
    }?;
    Ok(out)
}

fn dispatch(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    match kind {
        ExperimentKind::Baselines => run_baselines(cfg),
        ExperimentKind::QfiSweep => run_qfi(cfg),
        ExperimentKind::KappaSweep => run_kappa(cfg),
        ExperimentKind::Stateprep => run_stateprep(cfg),
        ExperimentKind::Wigner => run_wigner(cfg),
        ExperimentKind::EnsembleCheck => run_ensemble(cfg),
        ExperimentKind::DesignCurves => run_design(cfg),
    }
}

fn run_baselines(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let mut csv = String::from("n_bar,sql,heisenberg,kerr\n");
    for nb in cfg.n_bar_grid() {
        let b = baselines(nb);
        csv += &row(&[nb, b.sql, b.heisenberg, b.kerr]);
    }
    Ok(vec![Artifact {
        name: "baselines".into(),
        csv,
        details: json!({}),
    }])
}

fn sweep_n_trunc(cfg: &ExperimentConfig, grid: &[f64]) -> usize {
    cfg.n_trunc.unwrap_or_else(|| {
        let top = grid.iter().cloned().fold(0.0, f64::max);
        default_n_trunc(top.sqrt())
    })
}

fn run_qfi(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let grid = cfg.n_bar_grid();
    let n_trunc = sweep_n_trunc(cfg, &grid);
    let mut out = Vec::new();
    for &r in &cfg.r {
        for &g in &cfg.g {
            for &t0 in &cfg.theta0 {
                let mode = cfg.mode(t0);
                log::info!("qfi sweep r={r} g={g} theta0={t0} ({})", mode.name());
                let model = ThetaModel::new(r, t0, g, mode)?;
                let meta = QfiMetadata {
                    parameter: "theta".into(),
                    r,
                    bias: t0,
                    g,
                    correction: mode,
                    n_trunc,
                    window: cfg.window(),
                    rel_tol: cfg.rel_tol,
                };
                let rep = sweep(&model, &grid, n_trunc, cfg.window(), &cfg.quad(), meta)?;
                out.push(Artifact {
                    name: format!("qfi_r{r}_g{g}_theta{t0}_{}", mode.name()),
                    csv: rep.to_csv(),
                    details: json!({ "sweep": rep.metadata }),
                });
            }
        }
    }
    Ok(out)
}

fn run_kappa(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let grid = cfg.n_bar_grid();
    let n_trunc = sweep_n_trunc(cfg, &grid);
    let mode = cfg.mode(cfg.kappa0);
    let mut out = Vec::new();
    for &r in &cfg.r {
        for &g in &cfg.g {
            log::info!("kappa sweep r={r} g={g} kappa0={} ({})", cfg.kappa0, mode.name());
            let params = BootstrapParams::new(cfg.kappa0, cfg.r_prime, r, g);
            let rep = kappa_sweep(&params, &grid, n_trunc, mode, cfg.window(), &cfg.quad())?;
            out.push(Artifact {
                name: format!("kappa_r{r}_g{g}_{}", mode.name()),
                csv: rep.to_csv(),
                details: json!({ "sweep": rep.metadata, "r_prime": cfg.r_prime }),
            });
        }
    }
    Ok(out)
}

fn kind_name(k: TargetKind) -> &'static str {
    match k {
        TargetKind::Cat => "cat",
        TargetKind::Compass => "compass",
    }
}

fn run_stateprep(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let target = kind_name(cfg.target);
    let mut summary = String::from("alpha,r,g,theta,zeta,f_avg,f_std_err,infidelity,zeta_alpha2\n");
    let mut out = Vec::new();
    for &r in &cfg.r {
        for &g in &cfg.g {
            for &a in &cfg.alpha {
                log::info!("{target} preparation alpha={a} r={r} g={g}");
                let n_trunc = cfg.n_trunc.unwrap_or_else(|| default_n_trunc(a));
                let rep = average_fidelity_with(Complex64::new(a, 0.0), r, g, cfg.target, cfg.n_runs, cfg.seed(), n_trunc)?;
                let mut csv = String::from("run,m,fidelity\n");
                for (i, run) in rep.runs.iter().enumerate() {
                    let _ = writeln!(csv, "{i},{},{}", e(run.m), e(run.fidelity));
                }
                summary += &row(&[
                    a,
                    r,
                    g,
                    rep.theta,
                    rep.zeta,
                    rep.f_avg,
                    rep.f_std_err,
                    rep.infidelity(),
                    rep.zeta * a * a,
                ]);
                let (m1, m2) = rep.sample_m_moments();
                out.push(Artifact {
                    name: format!("stateprep_{target}_r{r}_g{g}_alpha{a}"),
                    csv,
                    details: json!({
                        "theta": rep.theta,
                        "zeta": rep.zeta,
                        "n_trunc": n_trunc,
                        "f_avg": rep.f_avg,
                        "f_std_err": rep.f_std_err,
                        "m_mean": { "expected": rep.m_mean, "sample": m1 },
                        "m_second_moment": { "expected": rep.m_second_moment, "sample": m2 },
                    }),
                });
            }
        }
    }
    out.push(Artifact {
        name: format!("stateprep_{target}_summary"),
        csv: summary,
        details: json!({}),
    });
    Ok(out)
}

fn run_wigner(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let target = kind_name(cfg.target);
    let mut out = Vec::new();
    for &r in &cfg.r {
        for &g in &cfg.g {
            for &a in &cfg.alpha {
                let n_trunc = cfg.n_trunc.unwrap_or_else(|| default_n_trunc(a));
                let prep = Preparation::new(Complex64::new(a, 0.0), r, g, cfg.target, n_trunc)?;
                let (state, m, f) = prep.run_once(cfg.seed())?;
                let q = cfg.q_max.unwrap_or(std::f64::consts::SQRT_2 * a + 4.0);
                log::info!("wigner {target} alpha={a} r={r} g={g}: m={m:.4} F={f:.6}");
                let w = wigner_grid(&state, (-q, q), (-q, q), cfg.resolution)?;
                let mut csv = String::from("q,p,W\n");
                for (i, qi) in w.q.iter().enumerate() {
                    for (k, pk) in w.p.iter().enumerate() {
                        csv += &row(&[*qi, *pk, w.values[i][k]]);
                    }
                }
                out.push(Artifact {
                    name: format!("wigner_{target}_r{r}_g{g}_alpha{a}"),
                    csv,
                    details: json!({
                        "m": m,
                        "fidelity": f,
                        "theta": prep.theta,
                        "zeta": prep.zeta,
                        "n_trunc": n_trunc,
                        "grid_integral": w.integral(),
                        "min_value": w.min_value(),
                    }),
                });
            }
        }
    }
    Ok(out)
}

fn run_ensemble(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let mut out = Vec::new();
    for &r in &cfg.r {
        for &g in &cfg.g {
            for &t in &cfg.theta0 {
                for &a in &cfg.alpha {
                    let mut csv = String::from("two_j,j,sigma_meas,r_equivalent,m,ancilla_fidelity,fidelity\n");
                    for &two_j in &cfg.two_j {
                        let j = two_j as f64 / 2.0;
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
                        log::info!("ensemble check j={j} r={r} g={g} theta={t} alpha={a}");
                        let c = atomic_protocol_check(two_j, sigma_for_squeezing(j, r), g, t, a, &mut rng)?;
                        let _ = writeln!(
                            csv,
                            "{two_j},{}",
                            [c.j, c.sigma_meas, c.r_equivalent, c.m, c.ancilla_fidelity, c.fidelity]
                                .map(e)
                                .join(",")
                        );
                    }
                    out.push(Artifact {
                        name: format!("ensemble_r{r}_g{g}_theta{t}_alpha{a}"),
                        csv,
                        details: json!({}),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn run_design(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, ConfigError> {
    let mut out = Vec::new();
    let eps = 1e-3;
    for &r in &cfg.r {
        for &g in &cfg.g {
            let mut csv = String::from("theta,gamma,zeta\n");
            for p in design_curve(r, g, eps, std::f64::consts::PI - eps, cfg.theta_points) {
                csv += &row(&[p.theta, p.gamma, p.zeta]);
            }
            let (theta_c, gmax) = gamma_max(r, g);
            let solve = |k: TargetKind| solve_theta_for_gamma(r, g, k.gamma::<f64>()).ok();
            out.push(Artifact {
                name: format!("design_r{r}_g{g}"),
                csv,
                details: json!({
                    "theta_c": theta_c,
                    "gamma_max": gmax,
                    "theta_cat": solve(TargetKind::Cat),
                    "theta_compass": solve(TargetKind::Compass),
                }),
            });
        }
    }
    Ok(out)
}

/// Writes `<name>.csv` and `<name>.json` for every artifact into `dir`.
pub fn write_artifacts(
    cfg: &ExperimentConfig,
    artifacts: &[Artifact],
    wall_time_s: f64,
    dir: &Path,
) -> Result<Vec<PathBuf>, ConfigError> {
    std::fs::create_dir_all(dir)?;
    let echo = toml::to_string(cfg).map_err(|err| invalid(format!("config echo: {err}")))?;
    let mut written = Vec::new();
    for a in artifacts {
        let csv_path = dir.join(format!("{}.csv", a.name));
        std::fs::write(&csv_path, &a.csv)?;
        let meta = json!({
            "file": format!("{}.csv", a.name),
            "experiment": cfg.experiment,
            "version": VERSION,
            "wall_time_s": wall_time_s,
            "config": cfg,
            "config_toml": echo,
            "details": a.details,
        });
        let json_path = dir.join(format!("{}.json", a.name));
        std::fs::write(&json_path, serde_json::to_string_pretty(&meta).expect("serializable") + "\n")?;
        written.push(csv_path);
    }
    Ok(written)
}

/// [`run`] followed by [`write_artifacts`] into `cfg.out`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, ConfigError> {
    let t = Instant::now();
    let artifacts = run(cfg)?;
    write_artifacts(cfg, &artifacts, t.elapsed().as_secs_f64(), &cfg.out)
}
