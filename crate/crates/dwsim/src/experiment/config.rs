use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{parse_occupation, Boundary, FermiChainSpec, ModelParams, Parity};
use crate::evolution::{NoiseSpec, RescalePolicy, DENSITY_CAP};
use crate::operator::DEFAULT_REGISTER_CAP;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    SshStatic,
    AaSingle,
    AaHalfFilling,
    AaDqpt,
    XxzStatistics,
    XxzDynamics,
    FloquetNnn,
    Custom,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::SshStatic,
        Kind::AaSingle,
        Kind::AaHalfFilling,
        Kind::AaDqpt,
        Kind::XxzStatistics,
        Kind::XxzDynamics,
        Kind::FloquetNnn,
        Kind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::SshStatic => "ssh_static",
            Kind::AaSingle => "aa_single",
            Kind::AaHalfFilling => "aa_half_filling",
            Kind::AaDqpt => "aa_dqpt",
            Kind::XxzStatistics => "xxz_statistics",
            Kind::XxzDynamics => "xxz_dynamics",
            Kind::FloquetNnn => "floquet_nnn",
            Kind::Custom => "custom",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Kind::SshStatic => "SSH chain: DW vs exact spectra, edge states, operator fidelity over a J sweep",
            Kind::AaSingle => "Aubry-Andre quench from a localized particle: occupations and fidelities",
            Kind::AaHalfFilling => "Aubry-Andre random localized starts: time-averaged participation entropy over a lambda x mu grid",
            Kind::AaDqpt => "Aubry-Andre rate function, closed and with qubit noise",
            Kind::XxzStatistics => "inhomogeneous XXZ: gap ratios and spacing histograms, exact vs effective",
            Kind::XxzDynamics => "inhomogeneous XXZ: survival probability and fidelity",
            Kind::FloquetNnn => "driven chain realizing imaginary NNN hopping: DW and fermionic drives vs the static target",
            Kind::Custom => "explicit chain and initial occupation: occupations and fidelities",
        }
    }

    fn requires_model(self) -> Option<&'static str> {
        match self {
            Kind::SshStatic => Some("ssh"),
            Kind::AaSingle | Kind::AaHalfFilling | Kind::AaDqpt => Some("aubry_andre"),
            Kind::XxzStatistics | Kind::XxzDynamics => Some("xxz"),
            Kind::FloquetNnn => Some("floquet_nnn"),
            Kind::Custom => None,
        }
    }

    fn is_dynamic(self) -> bool {
        !matches!(self, Kind::SshStatic | Kind::XxzStatistics)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample times: an evenly spaced grid on [0, t_max] or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Times {
    Grid { t_max: f64, samples: usize },
    List(Vec<f64>),
}

impl Times {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Times::Grid { t_max, samples } => match samples {
                0 => vec![],
                1 => vec![*t_max],
                s => (0..*s).map(|k| t_max * k as f64 / (*s - 1) as f64).collect(),
            },
            Times::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Γ1
    #[serde(default)]
    pub relax: f64,
    /// Γ2
    #[serde(default)]
    pub dephase: f64,
}

impl NoiseConfig {
    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec::new(self.relax, self.dephase)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

impl Default for Ensemble {
    fn default() -> Self {
        Ensemble { count: 1, seed: None }
    }
}

/// Explicit chain for `custom` runs; missing lists default to zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub t: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub v: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
}

impl ChainConfig {
    pub fn n(&self) -> usize {
        if self.periodic {
            self.t.len()
        } else {
            self.t.len() + 1
        }
    }

    pub fn spec(&self, parity: Parity) -> crate::Result<FermiChainSpec> {
        let n = self.n();
        let eps = if self.eps.is_empty() { vec![0.0; n] } else { self.eps.clone() };
        let v = if self.v.is_empty() { vec![0.0; self.t.len()] } else { self.v.clone() };
        let boundary = if self.periodic { Boundary::Periodic } else { Boundary::Open };
        FermiChainSpec::new(self.t.clone(), eps, v, boundary, parity)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// number of sites; taken from `chain` when that is given
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(default)]
    pub rescale: RescalePolicy,
    #[serde(default)]
    pub times: Option<Times>,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub ensemble: Ensemble,
    /// parameter name → grid values; groups are the Cartesian product in name order
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// initial occupation string, site 1 first
    #[serde(default)]
    pub initial: Option<String>,
    /// particle-number sectors for static kinds
    #[serde(default)]
    pub sectors: Option<Vec<usize>>,
    /// averaging window [T0, T1] in evolution time
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Names accepted as sweep axes.
pub const SWEEP_PARAMETERS: [&str; 15] =
    ["J", "alpha", "lambda", "mu", "beta", "phi", "v", "w", "t", "delta", "theta", "k1", "k2", "tau", "dephase"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn field(errs: &mut Vec<FieldError>, name: &str, message: impl Into<String>) {
    errs.push(FieldError { field: name.into(), message: message.into() });
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, Vec<FieldError>> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default();
            vec![FieldError { field: "<config>".into(), message: format!("{}{span}", e.message()) }]
        })
    }

    pub fn load(path: &Path) -> Result<Self, Vec<FieldError>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![FieldError { field: "<config>".into(), message: format!("{}: {e}", path.display()) }])?;
        Self::from_toml(&text)
    }

    pub fn n_sites(&self) -> Option<usize> {
        self.chain.as_ref().map(ChainConfig::n).or(self.n)
    }

    pub fn default_initial(&self) -> Option<String> {
        let n = self.n_sites()?;
        let s: String = match self.kind {
            // one particle in the middle site
            Kind::AaSingle | Kind::FloquetNnn | Kind::Custom => (1..=n).map(|k| if k == n.div_ceil(2) { '1' } else { '0' }).collect(),
            // staggered 0101…
            Kind::AaDqpt | Kind::XxzDynamics => (1..=n).map(|k| if k % 2 == 0 { '1' } else { '0' }).collect(),
            _ => return None,
        };
        Some(s)
    }

    pub fn initial_occupation(&self) -> Option<String> {
        self.initial.clone().or_else(|| self.default_initial())
    }

    pub fn time_values(&self) -> Vec<f64> {
        self.times.as_ref().map(Times::values).unwrap_or_default()
    }

    pub fn grid_size(&self) -> usize {
        self.sweep.values().map(Vec::len).product()
    }

    /// Every field-level problem, empty when the config is runnable.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let e = &mut errs;
        if !self.j.is_finite() || self.j == 0.0 {
            field(e, "J", "must be finite and nonzero");
        }
        match (&self.model, &self.chain) {
            (Some(_), Some(_)) => field(e, "model", "give either model or chain, not both"),
            (None, None) => field(e, "model", "a model or an explicit chain is required"),
            (Some(m), None) => {
                if let Err(err) = m.validate() {
                    field(e, "model", err.to_string());
                }
                if let Some(req) = self.kind.requires_model() {
                    let tag = serde_json::to_value(m).ok().and_then(|v| v["model"].as_str().map(str::to_owned));
                    if tag.as_deref() != Some(req) {
                        field(e, "model", format!("kind {} needs model = \"{req}\"", self.kind));
                    }
                }
                if self.n.is_none() {
                    field(e, "n", "number of sites is required with a model");
                }
            }
            (None, Some(c)) => {
                if self.kind != Kind::Custom {
                    field(e, "chain", format!("explicit chains are only accepted for kind custom, not {}", self.kind));
                }
                if c.t.is_empty() {
                    field(e, "chain.t", "needs at least one hopping");
                }
                if let Err(err) = c.spec(Parity::Odd) {
                    field(e, "chain", err.to_string());
                }
            }
        }
        let n = self.n_sites().unwrap_or(0);
        if self.model.is_some() && n < 2 {
            field(e, "n", "needs at least two sites");
        }
        if self.kind.is_dynamic() {
            match &self.times {
                None => field(e, "times", format!("required for kind {}", self.kind)),
                Some(t) => {
                    let v = t.values();
                    if v.is_empty() {
                        field(e, "times", "no sample times");
                    }
                    if let Err(err) = crate::evolution::validate_times(&v) {
                        field(e, "times", err.to_string());
                    }
                }
            }
        }
        if self.kind == Kind::FloquetNnn && !matches!(self.rescale, RescalePolicy::Alpha(a) if a == 1.0) {
            field(e, "rescale", "driven runs do not rescale");
        }
        if let RescalePolicy::Alpha(a) = self.rescale {
            if !(a.is_finite() && a >= 1.0) {
                field(e, "rescale", "factor must be finite and >= 1");
            }
        }
        if let Some(noise) = &self.noise {
            if let Err(err) = noise.spec().validate() {
                field(e, "noise", err.to_string());
            }
            if !matches!(self.kind, Kind::AaDqpt | Kind::AaSingle | Kind::XxzDynamics | Kind::Custom) {
                field(e, "noise", format!("noise is not supported for kind {}", self.kind));
            }
            let nq = n.saturating_sub(1);
            if nq < usize::BITS as usize && (1usize << nq) > DENSITY_CAP {
                field(e, "noise", format!("density matrix of {nq} qubits exceeds the cap of {DENSITY_CAP} states"));
            }
        }
        if n > 1 && n - 1 > DEFAULT_REGISTER_CAP {
            field(e, "n", format!("register of {} qubits exceeds the cap of {DEFAULT_REGISTER_CAP}", n - 1));
        }
        if self.ensemble.count == 0 {
            field(e, "ensemble.count", "must be at least 1");
        }
        if self.ensemble.count > 1 && self.ensemble.seed.is_none() {
            field(e, "ensemble.seed", "required when ensemble.count > 1");
        }
        if self.kind == Kind::AaHalfFilling && self.ensemble.seed.is_none() {
            field(e, "ensemble.seed", "random initializations need a seed");
        }
        for (name, vals) in &self.sweep {
            if !SWEEP_PARAMETERS.contains(&name.as_str()) {
                field(e, &format!("sweep.{name}"), format!("unknown parameter; expected one of {}", SWEEP_PARAMETERS.join(", ")));
            }
            if vals.is_empty() {
                field(e, &format!("sweep.{name}"), "empty grid");
            }
            if vals.iter().any(|x| !x.is_finite()) {
                field(e, &format!("sweep.{name}"), "non-finite grid value");
            }
        }
        if let Some(occ) = self.initial_occupation() {
            match parse_occupation(&occ) {
                Err(err) => field(e, "initial", err.to_string()),
                Ok(_) if occ.len() != n => field(e, "initial", format!("{} sites given for a chain of {n}", occ.len())),
                Ok(0) => field(e, "initial", "needs at least one particle"),
                Ok(_) => {}
            }
        } else if matches!(self.kind, Kind::AaSingle | Kind::AaDqpt | Kind::XxzDynamics | Kind::FloquetNnn | Kind::Custom) {
            field(e, "initial", "initial occupation required");
        }
        if let Some(s) = &self.sectors {
            if s.is_empty() || s.iter().any(|&m| m == 0 || m > n) {
                field(e, "sectors", format!("sectors must lie in 1..={n}"));
            }
        }
        if let Some([a, b]) = self.window {
            let tmax = self.time_values().last().copied().unwrap_or(0.0);
            if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a && b <= tmax + 1e-12) {
                field(e, "window", format!("need 0 <= T0 < T1 <= {tmax}"));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t < 1.0) {
                field(e, "tolerance", "must lie in (0, 1)");
            }
        }
        errs
    }
}
