//! Run configuration: command-line flags layered over an optional
//! `key = value` file layered over recipe defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use ebh_core::model::Boundary;
use ebh_core::sweep::{linspace, Axis, Format, Observables, QMode, SweepSpec};

/// Flags shared by every subcommand. Unset flags fall back to the config file,
/// then to the recipe.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Plain-text key=value file; keys are the long flag names without dashes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "L")]
    pub sites: Option<usize>,
    #[arg(long = "N")]
    pub bosons: Option<usize>,
    #[arg(long = "J")]
    pub hopping: Option<f64>,
    #[arg(long = "U")]
    pub onsite: Option<f64>,
    #[arg(long = "ULR")]
    pub long_range: Option<f64>,
    /// Swept coupling: J (values are 2J/U) or ULR (values are U_LR/U).
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated list, or start:stop:count.
    #[arg(long)]
    pub values: Option<String>,
    /// zero, min, or a grid index m (q = 2*pi*m/L).
    #[arg(long)]
    pub q: Option<String>,
    /// pbc or obc.
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long = "j-eps")]
    pub j_eps: Option<f64>,
    #[arg(long = "pin-eps")]
    pub pin_eps: Option<f64>,
    #[arg(long)]
    pub cut: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated subset of witness,entropy,gap,theta,sf (or all / none).
    #[arg(long)]
    pub observables: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
}

const KEYS: &[&str] = &[
    "L",
    "N",
    "J",
    "U",
    "ULR",
    "axis",
    "values",
    "q",
    "boundary",
    "j-eps",
    "pin-eps",
    "cut",
    "seed",
    "tol",
    "observables",
    "out",
    "format",
];

pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", lineno + 1))?;
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            bail!("config line {}: unknown key {k:?}", lineno + 1);
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

/// Resolved flag-or-file value for one key.
struct Layer<'a> {
    file: &'a HashMap<String, String>,
}

impl Layer<'_> {
    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}: {e}")),
            None => Ok(None),
        }
    }
}

pub struct Resolved {
    pub spec: SweepSpec,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    if let Some((a, rest)) = s.split_once(':') {
        let (b, n) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("range must be start:stop:count, got {s:?}"))?;
        let start: f64 = a.trim().parse().context("range start")?;
        let stop: f64 = b.trim().parse().context("range stop")?;
        let count: usize = n.trim().parse().context("range count")?;
        return Ok(linspace(start, stop, count));
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad value {t:?}"))
        })
        .collect()
}

pub fn parse_q(s: &str) -> Result<QMode> {
    Ok(match s {
        "zero" | "0" => QMode::Zero,
        "min" => QMode::Min,
        m => QMode::Mode(m.parse().with_context(|| format!("bad q mode {m:?}"))?),
    })
}

pub fn parse_observables(s: &str) -> Result<Observables> {
    match s {
        "all" => return Ok(Observables::ALL),
        "none" | "" => return Ok(Observables::NONE),
        _ => {}
    }
    let mut o = Observables::NONE;
    for t in s.split(',').map(str::trim) {
        match t {
            "witness" => o.witness = true,
            "entropy" => o.entropy = true,
            "gap" => o.gap = true,
            "theta" => o.theta = true,
            "sf" | "structure_factor" => o.structure_factor = true,
            other => bail!("unknown observable {other:?}"),
        }
    }
    Ok(o)
}

fn parse_axis(s: &str) -> Result<Axis> {
    match s {
        "J" | "2J_over_U" => Ok(Axis::Hopping),
        "ULR" | "ULR_over_U" => Ok(Axis::LongRange),
        _ => bail!("axis must be J or ULR, got {s:?}"),
    }
}

fn parse_boundary(s: &str) -> Result<Boundary> {
    match s {
        "pbc" | "periodic" => Ok(Boundary::Periodic),
        "obc" | "open" => Ok(Boundary::Open),
        _ => bail!("boundary must be pbc or obc, got {s:?}"),
    }
}

fn parse_format(s: &str) -> Result<Format> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => bail!("format must be csv or json, got {s:?}"),
    }
}

impl Overrides {
    fn file(&self) -> Result<HashMap<String, String>> {
        match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                parse_config(&text)
            }
            None => Ok(HashMap::new()),
        }
    }

    /// Applies flags and config entries on top of `base`.
    pub fn resolve(&self, mut spec: SweepSpec) -> Result<Resolved> {
        let file = self.file()?;
        let layer = Layer { file: &file };
        let p = &mut spec.fixed;
        if let Some(v) = layer.get(self.sites, "L")? {
            p.sites = v;
        }
        if let Some(v) = layer.get(self.bosons, "N")? {
            p.bosons = v;
        }
        if let Some(v) = layer.get(self.hopping, "J")? {
            p.hopping = v;
        }
        if let Some(v) = layer.get(self.onsite, "U")? {
            p.onsite = v;
        }
        if let Some(v) = layer.get(self.long_range, "ULR")? {
            p.long_range = v;
        }
        if let Some(v) = layer.get(self.j_eps, "j-eps")? {
            p.j_epsilon = v;
        }
        if let Some(v) = layer.get(self.pin_eps, "pin-eps")? {
            p.pin_epsilon = v;
        }
        if let Some(s) = layer.get(self.boundary.clone(), "boundary")? {
            p.boundary = parse_boundary(&s)?;
        }
        if let Some(s) = layer.get(self.axis.clone(), "axis")? {
            spec.axis = parse_axis(&s)?;
        }
        if let Some(s) = layer.get(self.values.clone(), "values")? {
            spec.values = parse_values(&s)?;
        }
        if let Some(s) = layer.get(self.q.clone(), "q")? {
            spec.q_mode = parse_q(&s)?;
        }
        if let Some(s) = layer.get(self.observables.clone(), "observables")? {
            spec.observables = parse_observables(&s)?;
        }
        if let Some(v) = layer.get(self.cut, "cut")? {
            spec.cut = Some(v);
        }
        if let Some(v) = layer.get(self.seed, "seed")? {
            spec.solver.seed = v;
        }
        if let Some(v) = layer.get(self.tol, "tol")? {
            spec.solver.tol = v;
        }
        let out = layer.get(self.out.as_ref().map(|p| p.display().to_string()), "out")?;
        let format = match layer.get(self.format.clone(), "format")? {
            Some(s) => parse_format(&s)?,
            None => out
                .as_deref()
                .filter(|o| o.ends_with(".json"))
                .map_or(Format::Csv, |_| Format::Json),
        };
        Ok(Resolved {
            spec,
            out: out.map(PathBuf::from),
            format,
        })
    }
}

/// `fig3.csv` -> `fig3_ULR0.1.csv`.
pub fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}
