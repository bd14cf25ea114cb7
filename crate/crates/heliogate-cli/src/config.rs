//! Run configuration: defaults, key = value config files, and command-line
//! overrides (flags win over the file, the file wins over defaults).

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use heliogate::experiments::{ContextParams, DEFAULT_SAMPLE_STRIDE};
use heliogate::helium::{Grid, PhysicalConstants, CALIBRATED_DB_DZ, CALIBRATED_KAPPA_0};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(ConfigError(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Csv => write!(f, "csv"),
            Self::Json => write!(f, "json"),
        }
    }
}

/// Fully resolved run configuration. Defaults reproduce the reference
/// operating point: E⊥ = 100 V/cm, T = 25 ns, σ = T/8, area-π pulses,
/// step = T/5000, gate (θ, φ) = (π/2, 0).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub e_perp: f64,
    pub pulse_duration: f64,
    pub sigma: Option<f64>,
    /// gate angle; `None` means the subcommand default
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub lag: f64,
    pub step: Option<f64>,
    pub kappa_scale: f64,
    pub sample_stride: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub delta13: Option<f64>,
    pub delta23: Option<f64>,
    pub delta12: Option<f64>,
    pub kappa12: Option<f64>,
    pub kappa13: Option<f64>,
    pub kappa23: Option<f64>,
    pub kappa0: f64,
    pub db_dz: f64,
    pub grid_z_min: f64,
    pub grid_z_max: f64,
    pub grid_points: usize,
    pub rabi: f64,
    pub duration: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = Grid::default();
        Self {
            e_perp: 100.0,
            pulse_duration: 25.0,
            sigma: None,
            theta: None,
            phi: None,
            lag: 0.0,
            step: None,
            kappa_scale: 1.0,
            sample_stride: DEFAULT_SAMPLE_STRIDE,
            format: OutputFormat::Csv,
            out: None,
            jobs: 1,
            delta13: None,
            delta23: None,
            delta12: None,
            kappa12: None,
            kappa13: None,
            kappa23: None,
            kappa0: CALIBRATED_KAPPA_0,
            db_dz: CALIBRATED_DB_DZ,
            grid_z_min: grid.z_min,
            grid_z_max: grid.z_max,
            grid_points: grid.n_points,
            rabi: 2.0 * PI * 0.01,
            duration: None,
        }
    }
}

impl RunConfig {
    /// Apply one key = value assignment; `where_` names the source for
    /// diagnostics.
    fn assign(&mut self, key: &str, value: &str, where_: &str) -> Result<(), ConfigError> {
        let err = |e: &dyn fmt::Display| ConfigError(format!("{where_}: `{key}` = `{value}`: {e}"));
        let f = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>().map_err(|e| err(&e))
        };
        let u = |v: &str| -> Result<usize, ConfigError> {
            v.parse::<usize>().map_err(|e| err(&e))
        };
        match key {
            "e_perp" => self.e_perp = f(value)?,
            "pulse_duration" => self.pulse_duration = f(value)?,
            "sigma" => self.sigma = Some(f(value)?),
            "theta" => self.theta = Some(f(value)?),
            "phi" => self.phi = Some(f(value)?),
            "lag" => self.lag = f(value)?,
            "step" => self.step = Some(f(value)?),
            "kappa_scale" => self.kappa_scale = f(value)?,
            "sample_stride" => self.sample_stride = u(value)?,
            "format" => self.format = OutputFormat::parse(value).map_err(|e| err(&e))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "jobs" => self.jobs = u(value)?.max(1),
            "delta13" => self.delta13 = Some(parse_detuning(value).map_err(|e| err(&e))?),
            "delta23" => self.delta23 = Some(parse_detuning(value).map_err(|e| err(&e))?),
            "delta12" => self.delta12 = Some(parse_detuning(value).map_err(|e| err(&e))?),
            "kappa12" => self.kappa12 = Some(f(value)?),
            "kappa13" => self.kappa13 = Some(f(value)?),
            "kappa23" => self.kappa23 = Some(f(value)?),
            "kappa0" => self.kappa0 = f(value)?,
            "db_dz" => self.db_dz = f(value)?,
            "grid_z_min" => self.grid_z_min = f(value)?,
            "grid_z_max" => self.grid_z_max = f(value)?,
            "grid_points" => self.grid_points = u(value)?,
            "rabi" => self.rabi = f(value)?,
            "duration" => self.duration = Some(f(value)?),
            other => {
                return Err(ConfigError(format!("{where_}: unknown key `{other}`")));
            }
        }
        Ok(())
    }

    /// Parse a config file of `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let where_ = format!("{}:{}", path.display(), lineno + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "{where_}: expected `key = value`, got `{line}`"
                )));
            };
            self.assign(key.trim(), value.trim(), &where_)?;
        }
        Ok(())
    }

    pub fn apply_flag(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.assign(key, value, "command line")
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.grid_z_min, self.grid_z_max, self.grid_points)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn context_params(&self) -> Result<ContextParams, ConfigError> {
        Ok(ContextParams {
            e_perp: self.e_perp,
            kappa_scale: self.kappa_scale,
            pulse_duration: self.pulse_duration,
            sigma: self.sigma,
            step: self.step,
            sample_stride: self.sample_stride,
            detuning_override: [self.delta13, self.delta23, self.delta12],
            rate_override: [self.kappa12, self.kappa13, self.kappa23],
            grid: self.grid()?,
            constants: PhysicalConstants::new(1.057, self.kappa0),
            db_dz: self.db_dz,
        })
    }

    /// Deterministic dump of every resolved key.
    pub fn dump(&self) -> String {
        let opt = |v: &Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => "default".to_string(),
        };
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        push("e_perp", format!("{}", self.e_perp));
        push("pulse_duration", format!("{}", self.pulse_duration));
        push("sigma", opt(&self.sigma));
        push("theta", opt(&self.theta));
        push("phi", opt(&self.phi));
        push("lag", format!("{}", self.lag));
        push("step", opt(&self.step));
        push("kappa_scale", format!("{}", self.kappa_scale));
        push("sample_stride", format!("{}", self.sample_stride));
        push("format", format!("{}", self.format));
        push(
            "out",
            self.out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "stdout".into()),
        );
        push("jobs", format!("{}", self.jobs));
        push("delta13", opt(&self.delta13));
        push("delta23", opt(&self.delta23));
        push("delta12", opt(&self.delta12));
        push("kappa12", opt(&self.kappa12));
        push("kappa13", opt(&self.kappa13));
        push("kappa23", opt(&self.kappa23));
        push("kappa0", format!("{}", self.kappa0));
        push("db_dz", format!("{}", self.db_dz));
        push("grid_z_min", format!("{}", self.grid_z_min));
        push("grid_z_max", format!("{}", self.grid_z_max));
        push("grid_points", format!("{}", self.grid_points));
        push("rabi", format!("{}", self.rabi));
        push("duration", opt(&self.duration));
        s
    }
}

/// Detunings accept `inf`/`decoupled` for the ideally selective limit.
fn parse_detuning(value: &str) -> Result<f64, ConfigError> {
    match value {
        "inf" | "decoupled" => Ok(f64::INFINITY),
        v => v
            .parse::<f64>()
            .map_err(|e| ConfigError(format!("{e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_overrides_defaults_and_reports_line_numbers() {
        let dir = std::env::temp_dir();
        let path = dir.join("heliogate_cfg_test.conf");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment\ne_perp = 250\nkappa_scale = 0.5\ndelta13 = decoupled").unwrap();
        drop(f);
        let mut cfg = RunConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.e_perp, 250.0);
        assert_eq!(cfg.kappa_scale, 0.5);
        assert_eq!(cfg.delta13, Some(f64::INFINITY));

        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "e_perp = 100\nbogus line").unwrap();
        drop(f);
        let err = RunConfig::default().apply_file(&path).unwrap_err();
        assert!(err.0.contains(":2"), "diagnostic missing line number: {err}");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_flag("nonsense", "1").is_err());
    }
}
