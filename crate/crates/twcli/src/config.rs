use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use twcore::chainops::{Boundary, ChainSpec};
use twcore::{c64, C64};

/// Configuration errors, each tagged with the offending key path.
#[derive(Debug, thiserror::Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Spectrum,
    Roots,
    Bae,
    Thermo,
    Decay,
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Roots => "roots",
            Command::Bae => "bae",
            Command::Thermo => "thermo",
            Command::Decay => "decay",
            Command::Figures => "figures",
        }
    }

    /// Commands that work on the ground state and its zero roots.
    pub fn needs_ground_state(self) -> bool {
        matches!(self, Command::Roots | Command::Bae | Command::Thermo | Command::Decay | Command::Figures)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedName {
    Density,
    Continuation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Periodic,
    Open,
}

/// A complex number written either as a real number or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> C64 {
        match self {
            ComplexValue::Real(x) => c64(x, 0.0),
            ComplexValue::Pair([re, im]) => c64(re, im),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChain {
    pub n: Option<usize>,
    pub boundary: Option<BoundaryName>,
    pub eta: Option<ComplexValue>,
    pub thetas: Option<Vec<ComplexValue>>,
    pub p: Option<ComplexValue>,
    pub q: Option<ComplexValue>,
    pub q_bar: Option<ComplexValue>,
    pub xi: Option<ComplexValue>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub n: Option<Vec<usize>>,
    pub u: Option<Vec<ComplexValue>>,
}

/// Tolerance table. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub bae: f64,
    pub bae_max_iter: usize,
    pub bae_roundtrip: f64,
    pub energy_periodic: f64,
    pub energy_open: f64,
    pub symmetry: f64,
    pub hamiltonian: f64,
    pub fd_step: f64,
    pub closed_form_gap: f64,
    pub energy_gap: f64,
    pub decay_slope: f64,
    pub surface_rel: f64,
    pub identity_tw: f64,
    pub identity_tw_open: f64,
    pub identity_point: f64,
    pub identity_crossing: f64,
    pub identity_hermiticity: f64,
    pub identity_commutator: f64,
    pub identity_parity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        use twcore::spectra::thresholds as t;
        Self {
            bae: twcore::baes::DEFAULT_TOL,
            bae_max_iter: twcore::baes::DEFAULT_MAX_ITER,
            bae_roundtrip: 1e-7,
            energy_periodic: 1e-8,
            energy_open: 1e-7,
            symmetry: 1e-9,
            hamiltonian: 1e-7,
            fd_step: 1e-5,
            closed_form_gap: 0.05,
            energy_gap: 0.05,
            decay_slope: 0.3,
            surface_rel: 0.1,
            identity_tw: t::TW,
            identity_tw_open: t::TW_OPEN,
            identity_point: t::POINT,
            identity_crossing: t::CROSSING,
            identity_hermiticity: t::HERMITICITY,
            identity_commutator: t::COMMUTATOR,
            identity_parity: t::PARITY,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Option<Command>,
    pub output_dir: Option<PathBuf>,
    pub seed_strategy: Option<SeedName>,
    pub seed: Option<u64>,
    pub parallel: Option<bool>,
    #[serde(default)]
    pub chain: RawChain,
    #[serde(default)]
    pub sweep: RawSweep,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Resolved chain parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainConfig {
    pub n: usize,
    pub boundary: BoundaryName,
    pub eta: C64,
    pub thetas: Vec<C64>,
    pub p: Option<C64>,
    pub q: Option<C64>,
    pub q_bar: Option<C64>,
    pub xi: Option<C64>,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub chain: ChainConfig,
    pub sweep: Vec<usize>,
    pub u_points: Vec<C64>,
    pub output_dir: PathBuf,
    pub seed_strategy: SeedName,
    pub seed: u64,
    pub parallel: bool,
    pub tolerances: Tolerances,
    pub physical: bool,
    pub warnings: Vec<String>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "twlab-out";
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Reference open-chain boundary parameters used by the figure tables.
pub fn figure_open_spec(n: usize) -> twcore::Result<ChainSpec> {
    ChainSpec::open_from_qbar(n, c64(0.0, -1.2), c64(0.0, 0.8), c64(1.0, 0.0))
}

impl RunConfig {
    /// Chain description at the configured size.
    pub fn spec(&self) -> Result<ChainSpec, ConfigError> {
        self.spec_at(self.chain.n)
    }

    /// Chain description at size `n`; inhomogeneities apply only at the configured size.
    pub fn spec_at(&self, n: usize) -> Result<ChainSpec, ConfigError> {
        let c = &self.chain;
        let thetas = if n == c.n { c.thetas.clone() } else { vec![C64::default(); n] };
        let boundary = match c.boundary {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Open => Boundary::Open {
                p: c.p.unwrap_or_default(),
                q: c.q.unwrap_or_default(),
                xi: c.xi.unwrap_or_default(),
            },
        };
        ChainSpec::new(n, c.eta, thetas, boundary).map_err(|e| ConfigError::new("chain", e.to_string()))
    }
}

/// Parses configuration text and resolves defaults.
pub fn parse_config(source: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(source, &Overrides::default())
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub output_dir: Option<PathBuf>,
    pub sweep: Option<Vec<usize>>,
}

/// Parses configuration text, then applies command-line overrides.
pub fn parse_config_with(source: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::new(source);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        ConfigError::new(key, e.inner().message().trim().to_string())
    })?;
    resolve(raw, Some(overrides))
}

fn resolve(mut raw: RawConfig, overrides: Option<&Overrides>) -> Result<RunConfig, ConfigError> {
    let mut warnings = Vec::new();
    if let Some(o) = overrides {
        if let Some(c) = o.command {
            if raw.command.is_some_and(|rc| rc != c) {
                warnings.push(format!("command `{}` from the command line replaces the configured one", c.name()));
            }
            raw.command = Some(c);
        }
        if o.output_dir.is_some() {
            raw.output_dir = o.output_dir.clone();
        }
        if o.sweep.is_some() {
            raw.sweep.n = o.sweep.clone();
        }
    }
    let command = raw.command.ok_or_else(|| ConfigError::new("command", "missing command"))?;
    let chain = resolve_chain(&raw.chain, &mut warnings)?;

    let sweep = match &raw.sweep.n {
        Some(v) if v.is_empty() => return Err(ConfigError::new("sweep.n", "empty size list")),
        Some(v) => v.clone(),
        None if command == Command::Figures && chain.boundary == BoundaryName::Periodic => vec![6, 8, 10, 12],
        None => vec![chain.n],
    };
    let sweep_key = if raw.sweep.n.is_some() { "sweep.n" } else { "chain.n" };
    if sweep.contains(&0) {
        return Err(ConfigError::new(sweep_key, "sizes must be positive"));
    }
    if command.needs_ground_state() {
        if chain.n % 2 == 1 {
            return Err(ConfigError::new("chain.n", format!("`{}` needs an even chain, got N = {}", command.name(), chain.n)));
        }
        if let Some(&n) = sweep.iter().find(|&&n| n % 2 == 1) {
            return Err(ConfigError::new(sweep_key, format!("`{}` needs even sizes, got N = {n}", command.name())));
        }
    }
    let u_points = match &raw.sweep.u {
        Some(v) if v.is_empty() => return Err(ConfigError::new("sweep.u", "empty point list")),
        Some(v) => v.iter().map(|z| z.value()).collect(),
        None => match command {
            Command::Thermo => vec![c64(0.5, 0.0), c64(1.0, 0.0)],
            _ => vec![c64(1.0, 0.0)],
        },
    };
    let tol = raw.tolerances;
    for (k, v) in [
        ("bae", tol.bae),
        ("bae_roundtrip", tol.bae_roundtrip),
        ("energy_periodic", tol.energy_periodic),
        ("energy_open", tol.energy_open),
        ("symmetry", tol.symmetry),
        ("hamiltonian", tol.hamiltonian),
        ("fd_step", tol.fd_step),
        ("closed_form_gap", tol.closed_form_gap),
        ("energy_gap", tol.energy_gap),
        ("decay_slope", tol.decay_slope),
        ("surface_rel", tol.surface_rel),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ConfigError::new(format!("tolerances.{k}"), format!("must be positive, got {v}")));
        }
    }
    if tol.bae_max_iter == 0 {
        return Err(ConfigError::new("tolerances.bae_max_iter", "must be positive"));
    }

    let mut cfg = RunConfig {
        command,
        chain,
        sweep,
        u_points,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        seed_strategy: raw.seed_strategy.unwrap_or(SeedName::Density),
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        parallel: raw.parallel.unwrap_or(true),
        tolerances: tol,
        physical: true,
        warnings,
    };
    let spec = cfg.spec()?;
    cfg.physical = spec.is_physical();
    if !cfg.physical {
        cfg.warnings.push("boundary parameters are not physical: the Hamiltonian is not Hermitian".into());
    }
    Ok(cfg)
}

fn resolve_chain(raw: &RawChain, warnings: &mut Vec<String>) -> Result<ChainConfig, ConfigError> {
    let n = raw.n.ok_or_else(|| ConfigError::new("chain.n", "missing chain size"))?;
    if n == 0 {
        return Err(ConfigError::new("chain.n", "chain size must be positive"));
    }
    let eta = raw.eta.map(ComplexValue::value).unwrap_or(c64(0.0, 1.0));
    let thetas = match &raw.thetas {
        Some(v) if v.len() != n => {
            return Err(ConfigError::new("chain.thetas", format!("{} inhomogeneities for {n} sites", v.len())))
        }
        Some(v) => v.iter().map(|z| z.value()).collect(),
        None => vec![C64::default(); n],
    };
    let open_keys = raw.p.is_some() || raw.q.is_some() || raw.q_bar.is_some() || raw.xi.is_some();
    let boundary = raw.boundary.unwrap_or(if open_keys { BoundaryName::Open } else { BoundaryName::Periodic });
    match boundary {
        BoundaryName::Periodic => {
            if open_keys {
                warnings.push("boundary parameters are ignored for the periodic chain".into());
            }
            Ok(ChainConfig { n, boundary, eta, thetas, p: None, q: None, q_bar: None, xi: None })
        }
        BoundaryName::Open => {
            let p = raw.p.ok_or_else(|| ConfigError::new("chain.p", "open chain needs p"))?.value();
            let xi = raw.xi.map(ComplexValue::value).unwrap_or_default();
            let norm = (c64(1.0, 0.0) + xi * xi).sqrt();
            let (q, q_bar) = match (raw.q, raw.q_bar) {
                (Some(_), Some(_)) => return Err(ConfigError::new("chain.q_bar", "give either q or q_bar, not both")),
                (Some(q), None) => (q.value(), q.value() / norm),
                (None, Some(qb)) => (qb.value() * norm, qb.value()),
                (None, None) => return Err(ConfigError::new("chain.q_bar", "open chain needs q or q_bar")),
            };
            if norm.norm() == 0.0 {
                return Err(ConfigError::new("chain.xi", "1 + xi^2 vanishes"));
            }
            Ok(ChainConfig { n, boundary, eta, thetas, p: Some(p), q: Some(q), q_bar: Some(q_bar), xi: Some(xi) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_periodic() {
        let c = parse_config("command = \"verify\"\n[chain]\nn = 4\n").unwrap();
        assert_eq!(c.command, Command::Verify);
        assert_eq!(c.chain.eta, c64(0.0, 1.0));
        assert_eq!(c.chain.thetas, vec![C64::default(); 4]);
        assert_eq!(c.sweep, vec![4]);
        assert!(c.physical);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn figure_two_parameters_are_physical() {
        let c = parse_config("command = \"roots\"\n[chain]\nn = 6\np = [0, -1.2]\nq_bar = [0, 0.8]\nxi = 1\n").unwrap();
        assert_eq!(c.chain.boundary, BoundaryName::Open);
        assert!(c.physical);
        let q = c.chain.q.unwrap();
        assert!((q - c64(0.0, 0.8 * 2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn real_p_is_flagged() {
        let c = parse_config("command = \"spectrum\"\n[chain]\nn = 3\np = 0.7\nq_bar = [0, 0.8]\n").unwrap();
        assert!(!c.physical);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn unknown_key_has_path() {
        let e = parse_config("command = \"verify\"\n[chain]\nn = 4\nbogus = 1\n").unwrap_err();
        assert_eq!(e.key, "chain.bogus");
        let e = parse_config("command = \"verify\"\n[chain]\nn = 4\n[tolerances]\nbae = 1e-10\nbea = 2\n").unwrap_err();
        assert!(e.key.starts_with("tolerances"), "{e}");
    }

    #[test]
    fn type_mismatch_has_path() {
        let e = parse_config("command = \"verify\"\n[chain]\nn = \"four\"\n").unwrap_err();
        assert_eq!(e.key, "chain.n");
    }

    #[test]
    fn odd_sizes_rejected_for_ground_state() {
        let e = parse_config("command = \"roots\"\n[chain]\nn = 5\n").unwrap_err();
        assert_eq!(e.key, "chain.n");
        let e = parse_config("command = \"bae\"\n[chain]\nn = 4\n[sweep]\nn = [4, 7]\n").unwrap_err();
        assert_eq!(e.key, "sweep.n");
        assert!(parse_config("command = \"spectrum\"\n[chain]\nn = 5\n").is_ok());
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides { command: Some(Command::Spectrum), output_dir: Some("x".into()), sweep: Some(vec![2, 3]) };
        let c = parse_config_with("command = \"verify\"\n[chain]\nn = 4\n", &o).unwrap();
        assert_eq!(c.command, Command::Spectrum);
        assert_eq!(c.sweep, vec![2, 3]);
        assert_eq!(c.output_dir, PathBuf::from("x"));
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn tolerance_overrides() {
        let c = parse_config("command = \"bae\"\n[chain]\nn = 4\n[tolerances]\nbae = 1e-10\n").unwrap();
        assert_eq!(c.tolerances.bae, 1e-10);
        assert_eq!(c.tolerances.energy_open, 1e-7);
        assert!(parse_config("command = \"bae\"\n[chain]\nn = 4\n[tolerances]\nbae = -1\n").is_err());
    }
}
