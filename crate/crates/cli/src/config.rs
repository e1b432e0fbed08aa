//! Run configuration: a flat `key=value` file overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use elastica_core::assembly::QuadratureMode;
use elastica_core::verification::SolvePath;

pub const OUT_ENV: &str = "ELASTICA_OUT";

const KEYS: [&str; 11] = ["case", "mode", "path", "n", "n_list", "lambda", "mu", "out", "threads", "rtol", "mesh"];

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// zero | linear_patch | trig | trig_varcoef
    #[arg(long)]
    pub case: Option<String>,
    /// exact | corner
    #[arg(long)]
    pub mode: Option<String>,
    /// full | reduced
    #[arg(long)]
    pub path: Option<String>,
    /// Cube mesh resolution (cells per side).
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated resolutions, e.g. 2,4,8.
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Output directory (overridden by ELASTICA_OUT).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Read the mesh from a file instead of generating a cube.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub mode: QuadratureMode,
    pub path: SolvePath,
    pub n: usize,
    pub n_list: Option<Vec<usize>>,
    /// `None` keeps the case's own material.
    pub material: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub rtol: f64,
    pub mesh: Option<PathBuf>,
}

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key `{}`", i + 1, k.trim());
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("invalid mesh level `{t}` in n-list")))
        .collect()
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
        .transpose()
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, env_out: Option<PathBuf>) -> Result<Self> {
        let file = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let case = pick(args.case.clone(), &file, "case")?.unwrap_or_else(|| "trig".into());
        let mode: QuadratureMode = pick(args.mode.clone(), &file, "mode")?
            .map(|s: String| s.parse().map_err(|e: String| anyhow!(e)))
            .transpose()?
            .unwrap_or_default();
        let path: SolvePath = pick(args.path.clone(), &file, "path")?
            .map(|s: String| s.parse().map_err(|e: String| anyhow!(e)))
            .transpose()?
            .unwrap_or_default();
        let n = pick(args.n, &file, "n")?.unwrap_or(2);
        let n_list = pick(args.n_list.clone(), &file, "n_list")?.map(|s: String| parse_n_list(&s)).transpose()?;
        let lambda = pick(args.lambda, &file, "lambda")?;
        let mu = pick(args.mu, &file, "mu")?;
        let material = match (lambda, mu) {
            (None, None) => None,
            (l, m) => Some((l.unwrap_or(1.0), m.unwrap_or(1.0))),
        };
        let out = env_out.or(pick(args.out.clone(), &file, "out")?);
        let threads = pick(args.threads, &file, "threads")?.unwrap_or(1);
        let rtol = pick(args.rtol, &file, "rtol")?.unwrap_or(elastica_core::solver::DEFAULT_RTOL);
        let mesh = pick(args.mesh.clone(), &file, "mesh")?;
        let cfg = RunConfig { case, mode, path, n, n_list, material, out, threads, rtol, mesh };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.path == SolvePath::Reduced && self.mode != QuadratureMode::Corner {
            bail!("the reduced path requires --mode corner");
        }
        if self.rtol.is_nan() || self.rtol <= 0.0 {
            bail!("rtol must be positive, got {}", self.rtol);
        }
        if self.threads == 0 {
            bail!("threads must be at least 1");
        }
        if self.n == 0 {
            bail!("n must be at least 1");
        }
        Ok(())
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

pub fn env_out() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_flag_precedence() {
        let dir = std::env::temp_dir().join(format!("elastica-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("run.cfg");
        std::fs::write(&p, "# comment\ncase = linear_patch\nmode=corner\npath=reduced\nn=3\nn-list=1,2,3\nmu=2.5\n").unwrap();
        let args = CommonArgs { config: Some(p), n: Some(5), ..Default::default() };
        let cfg = RunConfig::resolve(&args, None).unwrap();
        assert_eq!(cfg.case, "linear_patch");
        assert_eq!(cfg.mode, QuadratureMode::Corner);
        assert_eq!(cfg.path, SolvePath::Reduced);
        assert_eq!(cfg.n, 5);
        assert_eq!(cfg.n_list, Some(vec![1, 2, 3]));
        assert_eq!(cfg.material, Some((1.0, 2.5)));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn env_overrides_out() {
        let args = CommonArgs { out: Some("a".into()), ..Default::default() };
        let cfg = RunConfig::resolve(&args, Some("b".into())).unwrap();
        assert_eq!(cfg.out, Some(PathBuf::from("b")));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_config_file("bogus=1").is_err());
        assert!(parse_config_file("no equals").is_err());
        assert!(parse_n_list("2,x").is_err());
        let args = CommonArgs { path: Some("reduced".into()), ..Default::default() };
        assert!(RunConfig::resolve(&args, None).is_err());
        let args = CommonArgs { rtol: Some(0.0), ..Default::default() };
        assert!(RunConfig::resolve(&args, None).is_err());
    }
}
