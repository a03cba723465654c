//! Command-line front end for the pebble mosaic pipeline.
//!
//! Settings resolve as flags over config file over defaults. The config file is
//! flat `key = value` text whose keys are the flag names without the dashes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use pebble_core::pipeline::{run_pipeline, Dump, JobConfig, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Args(#[from] clap::Error),
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    File {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Parser)]
#[command(name = "pebble", version, about = "Render a photograph as a pebble mosaic")]
pub struct Cli {
    /// Input image (PNG, PPM or another common format)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output PNG
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Flat key=value file; keys are the flag names
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of pebbles [default: 2000]
    #[arg(long)]
    pub pebbles: Option<usize>,
    /// Random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output size relative to the input, at least 0.1 [default: 1]
    #[arg(long)]
    pub scale: Option<f64>,
    /// Fourier coefficients kept per outline, odd [default: 7]
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Elongation along image edges [default: 3]
    #[arg(long = "phi-a1")]
    pub phi_a1: Option<f64>,
    /// Coherence threshold for oriented pebbles [default: 0.5]
    #[arg(long = "t-coh")]
    pub t_coh: Option<f64>,
    /// Normalised distance of the flat top [default: 0.85]
    #[arg(long = "t-dist")]
    pub t_dist: Option<f64>,
    /// Edge slope of the pebble profile [default: 2]
    #[arg(long)]
    pub beta: Option<f64>,
    /// SLIC compactness [default: 10]
    #[arg(long)]
    pub compactness: Option<f64>,
    /// Texture multiplied into each pebble
    #[arg(long)]
    pub texture: Option<PathBuf>,
    /// Grey mask; pebbles are smaller where it is bright
    #[arg(long)]
    pub importance: Option<PathBuf>,
    /// Density increase inside the importance mask [default: 4]
    #[arg(long = "importance-factor")]
    pub importance_factor: Option<f64>,
    /// full, untextured or layout-only [default: full]
    #[arg(long)]
    pub mode: Option<String>,
    /// Debug outputs: labels, contours, heightfield, stats (comma separated or repeated)
    #[arg(long, value_delimiter = ',')]
    pub dump: Vec<String>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Light direction as x,y,z [default: -0.4,-0.4,1]
    #[arg(long = "light-dir", allow_hyphen_values = true)]
    pub light_dir: Option<String>,
    /// Ambient term [default: 0.25]
    #[arg(long)]
    pub ambient: Option<f64>,
    /// Diffuse weight [default: 0.65]
    #[arg(long)]
    pub diffuse: Option<f64>,
    /// Specular weight [default: 0.25]
    #[arg(long)]
    pub specular: Option<f64>,
    /// Phong exponent [default: 16]
    #[arg(long)]
    pub shininess: Option<f64>,
    /// Grout grey level [default: 0.15]
    #[arg(long)]
    pub grout: Option<f64>,
    /// Pixel elevation of a pebble top [default: 0.6 x grid interval]
    #[arg(long = "height-scale")]
    pub height_scale: Option<f64>,
    /// Also write the composite heightfield as a 16-bit PNG
    #[arg(long = "export-heightfield")]
    pub export_heightfield: Option<PathBuf>,
    /// Print the resolved configuration and stage timings
    #[arg(long)]
    pub verbose: bool,
}

impl Cli {
    /// Flags that were given, as `(key, value)` pairs in config-file syntax.
    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e: Vec<(&'static str, String)> = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                e.push((k, v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        push("input", path(&self.input));
        push("output", path(&self.output));
        push("pebbles", self.pebbles.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("scale", self.scale.map(|v| v.to_string()));
        push("L", self.l.map(|v| v.to_string()));
        push("phi-a1", self.phi_a1.map(|v| v.to_string()));
        push("t-coh", self.t_coh.map(|v| v.to_string()));
        push("t-dist", self.t_dist.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("compactness", self.compactness.map(|v| v.to_string()));
        push("texture", path(&self.texture));
        push("importance", path(&self.importance));
        push("importance-factor", self.importance_factor.map(|v| v.to_string()));
        push("mode", self.mode.clone());
        push("dump", (!self.dump.is_empty()).then(|| self.dump.join(",")));
        push("threads", self.threads.map(|v| v.to_string()));
        push("light-dir", self.light_dir.clone());
        push("ambient", self.ambient.map(|v| v.to_string()));
        push("diffuse", self.diffuse.map(|v| v.to_string()));
        push("specular", self.specular.map(|v| v.to_string()));
        push("shininess", self.shininess.map(|v| v.to_string()));
        push("grout", self.grout.map(|v| v.to_string()));
        push("height-scale", self.height_scale.map(|v| v.to_string()));
        push("export-heightfield", path(&self.export_heightfield));
        e
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value '{value}' for {key}"))
}

/// Applies one setting to a configuration.
pub fn apply_setting(cfg: &mut JobConfig, key: &str, value: &str) -> Result<(), String> {
    let value = value.trim();
    match key {
        "input" => cfg.input = PathBuf::from(value),
        "output" => cfg.output = PathBuf::from(value),
        "pebbles" => cfg.pebble_count = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "scale" => cfg.scale = num(key, value)?,
        "L" => cfg.l = num(key, value)?,
        "phi-a1" => cfg.phi_a1 = num(key, value)?,
        "t-coh" => cfg.t_coh = num(key, value)?,
        "t-dist" => cfg.t_dist = num(key, value)?,
        "beta" => cfg.beta = num(key, value)?,
        "compactness" => cfg.compactness = num(key, value)?,
        "texture" => cfg.texture = Some(PathBuf::from(value)),
        "importance" => cfg.importance = Some(PathBuf::from(value)),
        "importance-factor" => cfg.importance_factor = num(key, value)?,
        "mode" => cfg.mode = value.parse::<Mode>().map_err(|e| e.to_string())?,
        "dump" => {
            cfg.dumps.clear();
            for d in value.split(',').map(str::trim).filter(|d| !d.is_empty()) {
                cfg.dumps.insert(d.parse::<Dump>().map_err(|e| e.to_string())?);
            }
        }
        "threads" => cfg.threads = Some(num(key, value)?),
        "light-dir" => {
            let v: Vec<f64> = value
                .split(',')
                .map(|c| num::<f64>(key, c.trim()))
                .collect::<Result<_, _>>()?;
            let [x, y, z] = v[..] else {
                return Err(format!("light-dir needs three components x,y,z, got '{value}'"));
            };
            cfg.lighting.light_dir = Some([x, y, z]);
        }
        "ambient" => cfg.lighting.ambient = Some(num(key, value)?),
        "diffuse" => cfg.lighting.diffuse = Some(num(key, value)?),
        "specular" => cfg.lighting.specular = Some(num(key, value)?),
        "shininess" => cfg.lighting.shininess = Some(num(key, value)?),
        "grout" => cfg.lighting.grout = Some(num(key, value)?),
        "height-scale" => cfg.lighting.height_scale = Some(num(key, value)?),
        "export-heightfield" => cfg.export_heightfield = Some(PathBuf::from(value)),
        _ => return Err(format!("unknown setting '{key}'")),
    }
    Ok(())
}

/// Parses config-file text into `(line, key, value)` entries. `#` starts a comment.
pub fn parse_config_file(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::File {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            });
        };
        out.push((
            i + 1,
            k.trim().trim_start_matches("--").to_string(),
            v.trim().to_string(),
        ));
    }
    Ok(out)
}

/// Resolves the job configuration from command-line arguments (program name first).
/// Returns the configuration and whether verbose output was requested.
pub fn parse_config<I, T>(args: I) -> Result<(JobConfig, bool), ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let mut cfg = JobConfig::new("", "");
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.clone(),
            source,
        })?;
        for (line, key, value) in parse_config_file(&text, path)? {
            apply_setting(&mut cfg, &key, &value).map_err(|message| ConfigError::File {
                path: path.clone(),
                line,
                message,
            })?;
        }
    }
    for (key, value) in cli.entries() {
        apply_setting(&mut cfg, key, &value).map_err(|m| ConfigError::Invalid(format!("--{m}")))?;
    }
    check_paths(&cfg)?;
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok((cfg, cli.verbose))
}

fn check_paths(cfg: &JobConfig) -> Result<(), ConfigError> {
    if cfg.input.as_os_str().is_empty() {
        return Err(ConfigError::Invalid("--input is required".into()));
    }
    if cfg.output.as_os_str().is_empty() {
        return Err(ConfigError::Invalid("--output is required".into()));
    }
    let inputs = [
        Some(("--input", &cfg.input)),
        cfg.texture.as_ref().map(|p| ("--texture", p)),
        cfg.importance.as_ref().map(|p| ("--importance", p)),
    ];
    for (flag, p) in inputs.into_iter().flatten() {
        if !p.is_file() {
            return Err(ConfigError::Invalid(format!("{flag}: file not found: {}", p.display())));
        }
    }
    Ok(())
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (cfg, verbose) = match parse_config(args) {
        Ok(c) => c,
        Err(ConfigError::Args(e)) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(ConfigError::Args(e)) => {
            let _ = e.print();
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if verbose {
        eprintln!("{cfg:#?}");
    }
    match run_pipeline(&cfg) {
        Ok(report) => {
            if verbose {
                for s in &report.stages {
                    eprintln!("{:<13} {:>10.1} ms", s.name, s.ms);
                }
                eprintln!(
                    "{} pebbles ({} dropped, {} degenerate, {} unsmoothed), solver: {} unknowns, {} iterations",
                    report.pebbles,
                    report.dropped,
                    report.degenerate,
                    report.unsmoothed,
                    report.solver.unknowns,
                    report.solver.iterations
                );
            }
            for id in &report.fallback {
                eprintln!("warning: pebble {id}: solver did not converge, used distance profile");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_PIPELINE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_errors() {
        let mut c = JobConfig::new("a", "b");
        assert!(apply_setting(&mut c, "pebbles", "many").is_err());
        assert!(apply_setting(&mut c, "colour", "red").is_err());
        assert!(apply_setting(&mut c, "light-dir", "1,2").is_err());
        apply_setting(&mut c, "light-dir", "-1, 0, 1").unwrap();
        assert_eq!(c.lighting.light_dir, Some([-1.0, 0.0, 1.0]));
        apply_setting(&mut c, "dump", "labels,stats").unwrap();
        assert_eq!(c.dumps.len(), 2);
        assert!(apply_setting(&mut c, "dump", "everything").is_err());
    }

    #[test]
    fn file_syntax() {
        let p = Path::new("job.cfg");
        let e = parse_config_file("# comment\n\npebbles = 300  # trailing\nL=9\n", p).unwrap();
        assert_eq!(
            e,
            vec![(3, "pebbles".into(), "300".into()), (4, "L".into(), "9".into())]
        );
        assert!(matches!(
            parse_config_file("pebbles 300", p),
            Err(ConfigError::File { line: 1, .. })
        ));
    }

    #[test]
    fn flags_round_trip_through_settings() {
        let cli = Cli::try_parse_from(["pebble", "--scale", "0.30000000000000004", "--light-dir", "-0.5,0,1"]).unwrap();
        let mut c = JobConfig::new("a", "b");
        for (k, v) in cli.entries() {
            apply_setting(&mut c, k, &v).unwrap();
        }
        assert_eq!(c.scale, 0.30000000000000004);
        assert_eq!(c.lighting.light_dir, Some([-0.5, 0.0, 1.0]));
    }
}
