//! Parameter sweeps, figure recipes and the CSV/JSON row format.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::fock::enumerate_basis;
use crate::model::{Boundary, ModelParams};
use crate::obs::{self, WitnessReport};
use crate::par;
use crate::solver::{solve, SolverOptions};

/// Coupling varied by a sweep. Axis values are dimensionless: 2J/U for
/// `Hopping`, U_LR/U for `LongRange`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Hopping,
    LongRange,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Hopping => "2J_over_U",
            Axis::LongRange => "ULR_over_U",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "2J_over_U" => Some(Axis::Hopping),
            "ULR_over_U" => Some(Axis::LongRange),
            _ => None,
        }
    }

    /// Sets the swept coupling of `params` from a dimensionless axis value.
    pub fn apply(self, params: &mut ModelParams, value: f64) {
        match self {
            Axis::Hopping => params.hopping = 0.5 * value * params.onsite,
            Axis::LongRange => params.long_range = value * params.onsite,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QMode {
    Zero,
    Min,
    Mode(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observables {
    pub witness: bool,
    pub entropy: bool,
    pub gap: bool,
    pub theta: bool,
    pub structure_factor: bool,
}

impl Observables {
    pub const ALL: Self = Self {
        witness: true,
        entropy: true,
        gap: true,
        theta: true,
        structure_factor: true,
    };
    pub const NONE: Self = Self {
        witness: false,
        entropy: false,
        gap: false,
        theta: false,
        structure_factor: false,
    };
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub fixed: ModelParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub observables: Observables,
    pub q_mode: QMode,
    /// Sites in the left block of the entropy bipartition; `None` means L/2.
    pub cut: Option<usize>,
    pub solver: SolverOptions,
}

/// One sweep point. Columns not requested hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub e0: f64,
    pub lambda: f64,
    pub var_r: f64,
    pub r_sep: f64,
    pub mean_r: f64,
    pub q_used: f64,
    pub theta_signed: f64,
    pub theta_rms: f64,
    pub s_v: f64,
    pub delta: f64,
    pub residual: f64,
}

impl SweepRow {
    fn values(&self) -> [f64; 12] {
        [
            self.axis_value,
            self.e0,
            self.lambda,
            self.var_r,
            self.r_sep,
            self.mean_r,
            self.q_used,
            self.theta_signed,
            self.theta_rms,
            self.s_v,
            self.delta,
            self.residual,
        ]
    }

    fn from_values(v: [f64; 12]) -> Self {
        Self {
            axis_value: v[0],
            e0: v[1],
            lambda: v[2],
            var_r: v[3],
            r_sep: v[4],
            mean_r: v[5],
            q_used: v[6],
            theta_signed: v[7],
            theta_rms: v[8],
            s_v: v[9],
            delta: v[10],
            residual: v[11],
        }
    }

    /// Bitwise equality, treating NaN == NaN.
    pub fn same_as(&self, other: &Self) -> bool {
        self.values()
            .iter()
            .zip(other.values().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

/// Column names after the axis column.
pub const COLUMNS: [&str; 11] = [
    "E0",
    "lambda",
    "var_R",
    "r_sep",
    "mean_R",
    "q_used",
    "theta_signed",
    "theta_rms",
    "S_V",
    "delta",
    "residual",
];

pub fn header(axis: Axis) -> Vec<&'static str> {
    std::iter::once(axis.label()).chain(COLUMNS).collect()
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParams(
                "sweep needs at least one value".into(),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("sweep values must be finite".into()));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParams(
                "sweep values must be strictly increasing".into(),
            ));
        }
        if self.fixed.onsite == 0.0 {
            return Err(Error::InvalidParams(
                "axis values are in units of U, which must be nonzero".into(),
            ));
        }
        let l = self.fixed.sites;
        if self.observables.theta && l % 2 == 1 {
            return Err(Error::InvalidParams(format!(
                "order parameter needs an even number of sites, got L = {l}"
            )));
        }
        if self.observables.entropy {
            let cut = self.entropy_cut();
            if cut == 0 || cut >= l {
                return Err(Error::InvalidParams(format!(
                    "entropy cut {cut} out of range for L = {l}"
                )));
            }
        }
        if let QMode::Mode(m) = self.q_mode {
            if m >= l {
                return Err(Error::InvalidParams(format!(
                    "momentum index {m} out of range for L = {l}"
                )));
            }
        }
        if self.observables.gap && self.fixed.bosons < 2 {
            return Err(Error::InvalidParams("energy gap needs N >= 2".into()));
        }
        // validate every point's couplings and the basis capacity up front
        for &v in &self.values {
            let mut p = self.fixed.clone();
            self.axis.apply(&mut p, v);
            p.validate()?;
        }
        let top = self.fixed.bosons + usize::from(self.observables.gap);
        enumerate_basis(l, top).map(|_| ())
    }

    pub fn entropy_cut(&self) -> usize {
        self.cut.unwrap_or(self.fixed.sites / 2)
    }

    pub fn params_at(&self, value: f64) -> ModelParams {
        let mut p = self.fixed.clone();
        self.axis.apply(&mut p, value);
        p
    }
}

fn evaluate_point(spec: &SweepSpec, value: f64) -> Result<SweepRow> {
    let params = spec.params_at(value);
    let (basis, gs) = solve(&params, &spec.solver)?;
    let psi = &gs.vector;
    let l = basis.sites();
    let mut row = SweepRow {
        axis_value: value,
        e0: gs.energy,
        lambda: f64::NAN,
        var_r: f64::NAN,
        r_sep: f64::NAN,
        mean_r: f64::NAN,
        q_used: f64::NAN,
        theta_signed: f64::NAN,
        theta_rms: f64::NAN,
        s_v: f64::NAN,
        delta: f64::NAN,
        residual: gs.residual,
    };
    let m = match spec.q_mode {
        QMode::Zero => Some(0),
        QMode::Mode(m) => Some(m),
        QMode::Min => None,
    };
    if spec.observables.witness {
        let w: WitnessReport = match m {
            Some(m) => obs::witness_mode(psi, &basis, m)?,
            None => obs::witness_min_over_q(psi, &basis)?,
        };
        row.lambda = w.lambda;
        row.var_r = w.var_r;
        row.r_sep = w.r_sep;
        row.mean_r = w.mean_r;
        row.q_used = w.q;
    } else if spec.observables.structure_factor {
        let q = obs::grid_q(m.unwrap_or(0), l);
        row.mean_r = obs::structure_factor(psi, &basis, q)? / l as f64;
        row.q_used = q;
    }
    if spec.observables.theta {
        let t = obs::theta_lr(psi, &basis)?;
        row.theta_signed = t.signed;
        row.theta_rms = t.rms;
    }
    if spec.observables.entropy {
        row.s_v = obs::entanglement_entropy(psi, &basis, spec.entropy_cut())?.entropy;
    }
    if spec.observables.gap {
        let n = params.bosons;
        let opts = SolverOptions {
            detect_degeneracy: false,
            ..spec.solver.clone()
        };
        let energy = |bosons| solve(&params.with_bosons(bosons), &opts).map(|(_, g)| g.energy);
        let (minus, plus) = par::join(|| energy(n - 1), || energy(n + 1));
        row.delta = obs::gap_formula(n, minus?, gs.energy, plus?);
    }
    Ok(row)
}

/// Evaluates every sweep point independently, returning rows in axis order.
/// The first failing point (in axis order) aborts the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let results = par::map(&spec.values, |&v| {
        evaluate_point(spec, v).map_err(|e| Error::SweepPoint {
            value: v,
            source: Box::new(e),
        })
    });
    results.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        // 17 significant digits round-trip every f64
        format!("{v:.16e}")
    }
}

pub fn to_csv(axis: Axis, rows: &[SweepRow]) -> String {
    let mut out = header(axis).join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.values().iter().map(|&v| fmt_value(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// JSON array of objects keyed by the CSV header; NaN is written as null.
pub fn to_json(axis: Axis, rows: &[SweepRow]) -> String {
    let names = header(axis);
    let arr: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, v) in names.iter().zip(row.values()) {
                let val = Number::from_f64(v).map_or(Value::Null, Value::Number);
                obj.insert((*name).to_string(), val);
            }
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(arr)).expect("plain values serialize");
    s.push('\n');
    s
}

pub fn parse_csv(text: &str) -> Result<(Axis, Vec<SweepRow>)> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let names: Vec<&str> = head.split(',').collect();
    let axis = names
        .first()
        .and_then(|n| Axis::from_label(n))
        .ok_or_else(|| Error::Parse(format!("unknown axis column in header {head:?}")))?;
    if names[1..] != COLUMNS {
        return Err(Error::Parse(format!("unexpected header {head:?}")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 12 {
            return Err(Error::Parse(format!(
                "row {} has {} cells",
                k + 1,
                cells.len()
            )));
        }
        let mut v = [0.0; 12];
        for (slot, cell) in v.iter_mut().zip(&cells) {
            *slot = cell
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {cell:?}: {e}", k + 1)))?;
        }
        rows.push(SweepRow::from_values(v));
    }
    Ok((axis, rows))
}

pub fn parse_json(text: &str) -> Result<(Axis, Vec<SweepRow>)> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let arr = value
        .as_array()
        .ok_or_else(|| Error::Parse("expected a JSON array".into()))?;
    let mut axis = None;
    let mut rows = Vec::with_capacity(arr.len());
    for obj in arr {
        let obj = obj
            .as_object()
            .ok_or_else(|| Error::Parse("expected JSON objects".into()))?;
        let a = [Axis::Hopping, Axis::LongRange]
            .into_iter()
            .find(|a| obj.contains_key(a.label()))
            .ok_or_else(|| Error::Parse("row without axis column".into()))?;
        axis = Some(a);
        let mut v = [0.0; 12];
        for (slot, name) in v.iter_mut().zip(header(a)) {
            *slot = match obj.get(name) {
                Some(Value::Null) => f64::NAN,
                Some(x) => x
                    .as_f64()
                    .ok_or_else(|| Error::Parse(format!("{name} is not a number")))?,
                None => return Err(Error::Parse(format!("missing key {name}"))),
            };
        }
        rows.push(SweepRow::from_values(v));
    }
    Ok((axis.unwrap_or(Axis::Hopping), rows))
}

pub fn render(axis: Axis, rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Csv => to_csv(axis, rows),
        Format::Json => to_json(axis, rows),
    }
}

/// Writes the rows to `path`, or to stdout when `path` is `None`.
pub fn emit(axis: Axis, rows: &[SweepRow], format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(axis, rows, format);
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Crossing points of `lambda` from non-negative to negative, by linear
/// interpolation between neighbouring rows. Values with |λ| <= `zero_band`
/// count as zero.
pub fn sign_changes(rows: &[SweepRow], zero_band: f64) -> Vec<f64> {
    let sign = |x: f64| {
        if x < -zero_band {
            -1
        } else if x > zero_band {
            1
        } else {
            0
        }
    };
    let mut out = Vec::new();
    let mut prev: Option<(&SweepRow, i32)> = None;
    for r in rows {
        let s = sign(r.lambda);
        if let Some((p, ps)) = prev {
            if ps >= 0 && s < 0 {
                let (x0, x1, y0, y1) = (p.axis_value, r.axis_value, p.lambda, r.lambda);
                let t = if y0 > zero_band { y0 / (y0 - y1) } else { 0.0 };
                out.push(x0 + t * (x1 - x0));
            } else if ps < 0 && s >= 0 {
                out.push(r.axis_value);
            }
        }
        prev = Some((r, s));
    }
    out
}

/// Built-in sweeps that regenerate the three phase-diagram figures.
pub mod recipes {
    use super::*;

    pub const POINTS: usize = 25;
    /// Hopping used in place of J = 0 for the CDW figure.
    pub const FIG1_J_EPSILON: f64 = 1e-6;
    pub const FIG3_LONG_RANGE: [f64; 3] = [0.0, 0.1, 0.2];

    fn base(sites: usize, bosons: usize) -> ModelParams {
        ModelParams {
            onsite: 1.0,
            boundary: Boundary::Periodic,
            ..ModelParams::new(sites, bosons)
        }
    }

    /// Mott insulator to CDW at J = 0 (regularized by a tiny hopping).
    pub fn fig1() -> SweepSpec {
        SweepSpec {
            fixed: ModelParams {
                j_epsilon: FIG1_J_EPSILON,
                ..base(8, 8)
            },
            axis: Axis::LongRange,
            values: linspace(0.0, 1.2, POINTS),
            observables: Observables {
                gap: false,
                ..Observables::ALL
            },
            q_mode: QMode::Zero,
            cut: None,
            solver: SolverOptions::default(),
        }
    }

    /// Mott insulator to superfluid without the cavity term.
    pub fn fig2() -> SweepSpec {
        fig3_at(0.0)
    }

    /// Hopping sweep at a fixed long-range coupling U_LR/U.
    pub fn fig3_at(long_range: f64) -> SweepSpec {
        SweepSpec {
            fixed: ModelParams {
                long_range,
                ..base(8, 8)
            },
            axis: Axis::Hopping,
            values: linspace(0.0, 3.0, POINTS),
            observables: Observables::ALL,
            q_mode: QMode::Zero,
            cut: None,
            solver: SolverOptions::default(),
        }
    }

    pub fn fig3() -> Vec<SweepSpec> {
        FIG3_LONG_RANGE.iter().map(|&u| fig3_at(u)).collect()
    }
}

/// Short human-readable summary of a sweep, one line per row.
pub fn summary(axis: Axis, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>12} {:>14} {:>12} {:>10} {:>10} {:>10}",
        axis.label(),
        "E0",
        "lambda",
        "theta_rms",
        "S_V",
        "delta"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>12.4} {:>14.8} {:>12.6} {:>10.5} {:>10.5} {:>10.5}",
            r.axis_value, r.e0, r.lambda, r.theta_rms, r.s_v, r.delta
        );
    }
    s
}
