use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{check_hurst_constraint, level_for_gamma};
use crate::tensor::MAX_TOP_LEVEL_ENTRIES;

/// Largest grid exponent; the Cholesky factor of a `2^13` grid is 512 MiB.
pub const MAX_GRID_K: u32 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SampleFbm,
    Lift,
    Integrate,
    Flow,
    ItoCheck,
    Stability,
    Continuity,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::SampleFbm,
        Command::Lift,
        Command::Integrate,
        Command::Flow,
        Command::ItoCheck,
        Command::Stability,
        Command::Continuity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::SampleFbm => "sample-fbm",
            Command::Lift => "lift",
            Command::Integrate => "integrate",
            Command::Flow => "flow",
            Command::ItoCheck => "ito-check",
            Command::Stability => "stability",
            Command::Continuity => "continuity",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command '{s}'")))
    }
}

/// Driver used by the flow-based commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    Fbm,
    Smooth,
}

/// One flat configuration document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub hurst: f64,
    pub dim: usize,
    pub gamma: f64,
    pub horizon: f64,
    pub grid_k: u32,
    pub substeps: usize,
    pub particles: usize,
    pub seed: u64,
    pub eps_ladder: Vec<f64>,
    pub drift: String,
    pub eta: String,
    pub measure: String,
    pub driver: DriverKind,
    pub out: PathBuf,
    /// Adds wall-clock seconds to the reports, which breaks byte-identity.
    pub timing: bool,
}

pub const KEYS: [&str; 16] = [
    "hurst",
    "dim",
    "gamma",
    "horizon",
    "grid-k",
    "substeps",
    "particles",
    "seed",
    "eps-ladder",
    "drift",
    "eta",
    "measure",
    "driver",
    "out",
    "timing",
    "command",
];

impl ExperimentConfig {
    /// Defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let mut c = Self {
            command,
            hurst: 0.3,
            dim: 1,
            gamma: 0.28,
            horizon: 1.0,
            grid_k: 8,
            substeps: 4,
            particles: crate::continuity::DEFAULT_PARTICLES,
            seed: 0,
            eps_ladder: (2..=7).map(|k| 2f64.powi(-k)).collect(),
            drift: "sine".into(),
            eta: "gauss-bump-1".into(),
            measure: "gaussian".into(),
            driver: DriverKind::Fbm,
            out: PathBuf::from("out"),
            timing: false,
        };
        match command {
            Command::Flow => c.particles = 16,
            Command::ItoCheck => {
                c.grid_k = 12;
                c.substeps = 64;
            }
            Command::Continuity => {
                c.hurst = 0.2;
                c.gamma = 0.19;
                c.grid_k = 10;
                c.substeps = 32;
                c.particles = 64;
                c.drift = "sign-cutoff".into();
            }
            _ => {}
        }
        c
    }

    /// Applies `key = value` pairs in order; later pairs win.
    pub fn apply<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut problems = Vec::new();
        for (key, value) in pairs {
            if let Err(e) = self.set(key, value) {
                problems.push(e);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse '{v}'"))
        }
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "hurst" => self.hurst = num("hurst", v)?,
            "dim" => self.dim = num("dim", v)?,
            "gamma" => self.gamma = num("gamma", v)?,
            "horizon" => self.horizon = num("horizon", v)?,
            "grid-k" => self.grid_k = num("grid-k", v)?,
            "substeps" => self.substeps = num("substeps", v)?,
            "particles" => self.particles = num("particles", v)?,
            "seed" => self.seed = num("seed", v)?,
            "eps-ladder" => {
                self.eps_ladder = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num("eps-ladder", s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "drift" => self.drift = v.into(),
            "eta" => self.eta = v.into(),
            "measure" => self.measure = v.into(),
            "driver" => {
                self.driver = match v {
                    "fbm" => DriverKind::Fbm,
                    "smooth" => DriverKind::Smooth,
                    _ => return Err(format!("driver: expected fbm or smooth, got '{v}'")),
                }
            }
            "out" => self.out = PathBuf::from(v),
            "timing" => self.timing = num("timing", v)?,
            "command" => {
                if v != self.command.as_str() {
                    return Err(format!(
                        "command: file is for '{v}', running '{}'",
                        self.command
                    ));
                }
            }
            other => {
                return Err(format!(
                    "unknown key '{other}' (known: {})",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Checks every precondition and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };
        let h = self.hurst;
        check(
            h > 0.0 && h < 0.5,
            format!("hurst must lie in (0, 0.5), got {h}"),
        );
        check(
            self.gamma > 0.0,
            format!("gamma must be positive, got {}", self.gamma),
        );
        check(
            self.gamma < h,
            format!(
                "gamma < H is required for the lift, got gamma = {} and H = {h}",
                self.gamma
            ),
        );
        check(self.dim >= 1, "dim must be at least 1".into());
        check(
            self.horizon > 0.0 && self.horizon.is_finite(),
            format!("horizon must be positive, got {}", self.horizon),
        );
        check(
            (1..=MAX_GRID_K).contains(&self.grid_k),
            format!(
                "grid-k must lie in 1..={MAX_GRID_K} (N = 2^k), got {}",
                self.grid_k
            ),
        );
        check(self.substeps >= 1, "substeps must be at least 1".into());
        check(self.particles >= 1, "particles must be at least 1".into());
        if self.gamma > 0.0 && self.dim >= 1 {
            let p = level_for_gamma(self.gamma);
            let entries = (self.dim as f64).powi(p as i32);
            check(
                entries <= MAX_TOP_LEVEL_ENTRIES as f64,
                format!(
                    "d^p = {}^{p} exceeds the supported {MAX_TOP_LEVEL_ENTRIES} entries",
                    self.dim
                ),
            );
        }
        if self.command == Command::ItoCheck {
            check(
                self.grid_k >= 5,
                format!(
                    "ito-check compares k-4, k-2 and k, so grid-k must be at least 5, got {}",
                    self.grid_k
                ),
            );
        }
        if self.command == Command::Continuity {
            check(
                check_hurst_constraint(h, self.dim),
                format!(
                    "Hurst constraint H < 1/(2(3d-1)) = {} violated for d = {}, H = {h}",
                    1.0 / (2.0 * (3.0 * self.dim as f64 - 1.0)),
                    self.dim
                ),
            );
            check(
                !self.eps_ladder.is_empty(),
                "eps-ladder must not be empty".into(),
            );
            check(
                self.eps_ladder.iter().all(|e| *e > 0.0)
                    && self.eps_ladder.windows(2).all(|w| w[1] < w[0]),
                "eps-ladder must be positive and strictly decreasing".into(),
            );
        }
        if let Err(e) = crate::flow::drift::preset(&self.drift, self.dim.max(1)) {
            problems.push(e.to_string());
        }
        if let Err(e) = crate::flow::stack::eta_preset(&self.eta, self.dim.max(1), 1) {
            problems.push(e.to_string());
        }
        if let Err(e) =
            crate::continuity::ParticleMeasure::preset(&self.measure, self.dim.max(1), 1)
        {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// `N = 2^k`.
    pub fn intervals(&self) -> usize {
        1 << self.grid_k
    }

    pub fn level(&self) -> usize {
        level_for_gamma(self.gamma)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key = value, got '{line}'",
                n + 1
            ))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
