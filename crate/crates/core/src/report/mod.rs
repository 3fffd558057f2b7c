//! Loading system files, sampling regions and assembling reports.

pub mod cli;
pub mod random;
mod schema;
pub mod selftest;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ParseError;
use crate::flows::{ExtremalTrajectory, FlowConfig, FlowError, FlowStatus};
use crate::invariants::{self, CheckSample, InvariantConfig, InvariantError, InvariantSample};
use crate::linalg::Vec2;
use crate::systems::{ControlDomain, ControlSystem2D};

pub use schema::{
    CoZermeloSpec, GeneralSpec, MoserSpec, RiemannianSpec, SystemFile, SystemSpec, ZermeloSpec, KINDS, SCHEMA_VERSION,
};

pub const CAVEAT: &str = "numerical verdict on sampled region, not a proof";

/// Fraction of excluded samples above which a report is unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.2;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("cannot parse `{field}`: {source}")]
    Expression { field: String, source: ParseError },
    #[error(transparent)]
    Family(FlowError),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("regularity violated at {} of {checked} spot-check points, first: {}", violations.len(), violations[0])]
    Regularity { checked: usize, violations: Vec<String> },
}

/// Sampling region as written in a system file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub q1: [f64; 2],
    pub q2: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nq: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_samples: Option<usize>,
}

/// A tensor grid over `q1_range × q2_range × control domain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionGrid {
    pub q1_range: [f64; 2],
    pub q2_range: [f64; 2],
    pub nq: usize,
    pub u_samples: usize,
}

impl RegionGrid {
    pub const DEFAULT_RANGE: [f64; 2] = [-0.3, 0.3];
    pub const DEFAULT_NQ: usize = 9;
    pub const DEFAULT_U_SAMPLES: usize = 16;

    pub fn new(q1_range: [f64; 2], q2_range: [f64; 2], nq: usize, u_samples: usize) -> Result<Self, LoadError> {
        if nq < 3 {
            return Err(LoadError::Region(format!("nq must be at least 3, got {nq}")));
        }
        if u_samples < 8 {
            return Err(LoadError::Region(format!("u_samples must be at least 8, got {u_samples}")));
        }
        for (name, [lo, hi]) in [("q1", q1_range), ("q2", q2_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(LoadError::Region(format!("{name} range [{lo}, {hi}] is degenerate")));
            }
        }
        Ok(RegionGrid { q1_range, q2_range, nq, u_samples })
    }

    pub fn from_spec(spec: Option<&RegionSpec>) -> Result<Self, LoadError> {
        match spec {
            Some(s) => Self::new(
                s.q1,
                s.q2,
                s.nq.unwrap_or(Self::DEFAULT_NQ),
                s.u_samples.unwrap_or(Self::DEFAULT_U_SAMPLES),
            ),
            None => Self::new(Self::DEFAULT_RANGE, Self::DEFAULT_RANGE, Self::DEFAULT_NQ, Self::DEFAULT_U_SAMPLES),
        }
    }

    pub fn with_resolution(self, nq: Option<usize>, u_samples: Option<usize>) -> Result<Self, LoadError> {
        Self::new(self.q1_range, self.q2_range, nq.unwrap_or(self.nq), u_samples.unwrap_or(self.u_samples))
    }

    fn axis([lo, hi]: [f64; 2], n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
    }

    /// Control samples: `2πk/n` on the circle, cell midpoints on an interval.
    pub fn u_values(&self, domain: ControlDomain) -> Vec<f64> {
        let n = self.u_samples;
        match domain {
            ControlDomain::Circle => (0..n).map(|k| TAU * k as f64 / n as f64).collect(),
            ControlDomain::Interval { lo, hi } => (0..n).map(|k| lo + (k as f64 + 0.5) * (hi - lo) / n as f64).collect(),
        }
    }

    /// All sample points, ordered by q1, then q2, then u.
    pub fn points(&self, domain: ControlDomain) -> Vec<(Vec2, f64)> {
        let us = self.u_values(domain);
        let mut out = Vec::with_capacity(self.len());
        for q1 in Self::axis(self.q1_range, self.nq) {
            for q2 in Self::axis(self.q2_range, self.nq) {
                out.extend(us.iter().map(|&u| ([q1, q2], u)));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nq * self.nq * self.u_samples
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A validated system together with its file metadata.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub file: SystemFile,
    pub system: ControlSystem2D,
    pub grid: RegionGrid,
}

impl LoadedSystem {
    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or(self.system.kind().name())
    }
}

pub fn load_system(path: impl AsRef<Path>) -> Result<LoadedSystem, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    load_system_str(&text)
}

/// Parse, build and spot-check regularity on a 5×5×8 grid over the file's region.
pub fn load_system_str(text: &str) -> Result<LoadedSystem, LoadError> {
    let file = SystemFile::from_json(text)?;
    let system = file.build()?;
    let grid = RegionGrid::from_spec(file.region.as_ref())?;
    let spot = RegionGrid::new(grid.q1_range, grid.q2_range, 5, 8)?;
    let violations = regularity_violations(&system, &spot, InvariantConfig::default().regularity_tol);
    if !violations.is_empty() {
        return Err(LoadError::Regularity { checked: spot.len(), violations });
    }
    Ok(LoadedSystem { file, system, grid })
}

/// Points of `grid` where `f ∧ ∂_u f` or `∂_u f ∧ ∂²_u f` vanishes or evaluation fails.
pub fn regularity_violations(sys: &ControlSystem2D, grid: &RegionGrid, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (q, u) in grid.points(sys.domain()) {
        match invariants::check_regularity(sys, q, u) {
            Ok((w1, w2)) if w1.abs() > tol && w2.abs() > tol => {}
            Ok((w1, w2)) => out.push(format!("q=({}, {}), u={u}: w1={w1:e}, w2={w2:e}", q[0], q[1])),
            Err(e) => out.push(format!("q=({}, {}), u={u}: {e}", q[0], q[1])),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub const INVARIANT_COLUMNS: [&str; 14] = [
    "q1", "q2", "u", "c", "b", "kappa", "Lhb", "L2hb", "Lvk", "Lvhb", "res_bnk", "res_lemma", "res_bracket", "status",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantRow {
    pub q1: f64,
    pub q2: f64,
    pub u: f64,
    pub c: Option<f64>,
    pub b: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "Lhb")]
    pub lhb: Option<f64>,
    #[serde(rename = "L2hb")]
    pub l2hb: Option<f64>,
    #[serde(rename = "Lvk")]
    pub lvk: Option<f64>,
    #[serde(rename = "Lvhb")]
    pub lvhb: Option<f64>,
    pub res_bnk: Option<f64>,
    pub res_lemma: Option<f64>,
    pub res_bracket: Option<f64>,
    pub status: String,
}

impl InvariantRow {
    fn new(q: Vec2, u: f64, r: &Result<InvariantSample, InvariantError>) -> Self {
        let s = r.as_ref().ok();
        let pick = |g: fn(&InvariantSample) -> f64| s.map(g);
        InvariantRow {
            q1: q[0],
            q2: q[1],
            u,
            c: pick(|s| s.c),
            b: pick(|s| s.b),
            kappa: pick(|s| s.kappa),
            lhb: pick(|s| s.lhb),
            l2hb: pick(|s| s.l2hb),
            lvk: pick(|s| s.lvk),
            lvhb: pick(|s| s.lvhb),
            res_bnk: pick(|s| s.res_bnk),
            res_lemma: pick(|s| s.res_lemma),
            res_bracket: pick(|s| s.res_bracket),
            status: match r {
                Ok(_) => "ok".into(),
                Err(e) => format!("excluded:{}", e.reason()),
            },
        }
    }

    fn values(&self) -> [Option<f64>; 10] {
        [
            self.c, self.b, self.kappa, self.lhb, self.l2hb, self.lvk, self.lvhb, self.res_bnk, self.res_lemma,
            self.res_bracket,
        ]
    }

    pub fn is_valid(&self) -> bool {
        self.status == "ok"
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantTable {
    pub rows: Vec<InvariantRow>,
}

impl InvariantTable {
    pub fn excluded(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_valid()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = INVARIANT_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", num(r.q1), num(r.q2), num(r.u));
            for v in r.values() {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&num(v));
                }
            }
            let _ = writeln!(out, ",{}", r.status);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialise") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Map `eval` over the grid in parallel, keeping grid order.
fn sample_grid<T: Send>(
    sys: &ControlSystem2D,
    grid: &RegionGrid,
    eval: impl Fn(Vec2, f64) -> T + Sync,
) -> Vec<(Vec2, f64, T)> {
    grid.points(sys.domain()).into_par_iter().map(|(q, u)| (q, u, eval(q, u))).collect()
}

/// Every invariant and residual on the grid.
pub fn cmd_invariants(sys: &ControlSystem2D, grid: &RegionGrid, cfg: &InvariantConfig) -> InvariantTable {
    let rows = sample_grid(sys, grid, |q, u| invariants::derived_invariants(sys, q, u, cfg))
        .into_iter()
        .map(|(q, u, r)| InvariantRow::new(q, u, &r))
        .collect();
    InvariantTable { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrivializabilityReport {
    pub verdict_thm1: bool,
    pub verdict_thm2: bool,
    /// Sup-norms over valid samples; NaN (null in JSON) when there are none.
    pub sup_kappa: f64,
    #[serde(rename = "sup_Lhb")]
    pub sup_lhb: f64,
    #[serde(rename = "sup_Lvhb")]
    pub sup_lvhb: f64,
    pub excluded: usize,
    pub excluded_reasons: BTreeMap<String, usize>,
    pub total: usize,
    pub threshold: f64,
    pub unreliable: bool,
    pub caveat: String,
}

impl TrivializabilityReport {
    pub fn from_samples<'a>(
        samples: impl IntoIterator<Item = &'a Result<CheckSample, InvariantError>>,
        threshold: f64,
    ) -> Self {
        let (mut sk, mut sl, mut sv) = (0.0f64, 0.0f64, 0.0f64);
        let (mut total, mut valid) = (0usize, 0usize);
        let mut reasons = BTreeMap::new();
        for r in samples {
            total += 1;
            match r {
                Ok(s) => {
                    valid += 1;
                    sk = sk.max(s.kappa.abs());
                    sl = sl.max(s.lhb.abs());
                    sv = sv.max(s.lvhb.abs());
                }
                Err(e) => *reasons.entry(e.reason().to_string()).or_insert(0) += 1,
            }
        }
        if valid == 0 {
            (sk, sl, sv) = (f64::NAN, f64::NAN, f64::NAN);
        }
        let excluded = total - valid;
        let mut report = TrivializabilityReport {
            verdict_thm1: false,
            verdict_thm2: false,
            sup_kappa: sk,
            sup_lhb: sl,
            sup_lvhb: sv,
            excluded,
            excluded_reasons: reasons,
            total,
            threshold,
            unreliable: excluded as f64 > UNRELIABLE_FRACTION * total as f64,
            caveat: CAVEAT.to_string(),
        };
        report.set_threshold(threshold);
        report
    }

    /// Recompute both verdicts for a new threshold.
    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
        self.verdict_thm1 = self.sup_kappa < threshold && self.sup_lhb < threshold;
        self.verdict_thm2 = self.verdict_thm1 && self.sup_lvhb < threshold;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "verdict_thm1,verdict_thm2,sup_kappa,sup_Lhb,sup_Lvhb,excluded,total,threshold,unreliable\n{},{},{},{},{},{},{},{},{}\n",
            self.verdict_thm1,
            self.verdict_thm2,
            num(self.sup_kappa),
            num(self.sup_lhb),
            num(self.sup_lvhb),
            self.excluded,
            self.total,
            num(self.threshold),
            self.unreliable
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Sup-norms of κ, `L_h b`, `L_{[v,h]} b` on the grid and the two verdicts.
pub fn cmd_check(sys: &ControlSystem2D, grid: &RegionGrid, cfg: &InvariantConfig) -> TrivializabilityReport {
    let samples: Vec<_> =
        sample_grid(sys, grid, |q, u| invariants::check_sample(sys, q, u, cfg)).into_iter().map(|x| x.2).collect();
    TrivializabilityReport::from_samples(&samples, cfg.verdict_threshold)
}

/// Initial conditions for the extremal flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub q: Vec2,
    pub u: f64,
}

/// `n` initial controls spread over the domain at a single point.
pub fn fan(sys: &ControlSystem2D, q: Vec2, n: usize) -> Vec<InitialCondition> {
    let grid = RegionGrid { q1_range: [0.0, 1.0], q2_range: [0.0, 1.0], nq: 3, u_samples: n };
    grid.u_values(sys.domain()).into_iter().map(|u| InitialCondition { q, u }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub initial: InitialCondition,
    pub trajectory: ExtremalTrajectory,
}

/// Extremals from each initial condition, integrated in parallel.
pub fn cmd_extremals(
    sys: &ControlSystem2D,
    inits: &[InitialCondition],
    t_end: f64,
    cfg: &FlowConfig,
) -> Result<Vec<TrajectoryRecord>, FlowError> {
    inits
        .par_iter()
        .enumerate()
        .map(|(index, ic)| {
            let trajectory = crate::flows::extremal_flow(sys, ic.q, ic.u, t_end, cfg)?;
            Ok(TrajectoryRecord { index, initial: *ic, trajectory })
        })
        .collect()
}

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["trajectory", "t", "q1", "q2", "u", "status"];

fn status_name(s: &FlowStatus) -> String {
    match s {
        FlowStatus::Completed => "completed".into(),
        FlowStatus::RegularityLost { .. } => "regularity-lost".into(),
        FlowStatus::StepUnderflow { .. } => "step-underflow".into(),
        FlowStatus::TooManySteps { .. } => "too-many-steps".into(),
    }
}

/// One CSV for a set of trajectories; the status column is set on each
/// trajectory's last row.
pub fn trajectories_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for rec in records {
        let n = rec.trajectory.samples.len();
        for (k, s) in rec.trajectory.samples.iter().enumerate() {
            let status = if k + 1 == n { status_name(&rec.trajectory.status) } else { String::new() };
            let _ = writeln!(out, "{},{},{},{},{},{}", rec.index, num(s.t), num(s.q[0]), num(s.q[1]), num(s.u), status);
        }
    }
    out
}

pub fn trajectories_json(records: &[TrajectoryRecord]) -> String {
    serde_json::to_string_pretty(records).expect("trajectories serialise") + "\n"
}

pub const VELOCITY_COLUMNS: [&str; 7] = ["q1", "q2", "u", "f1", "f2", "fu1", "fu2"];

/// `f` and `∂_u f` on the grid, with empty cells where evaluation fails.
pub fn velocity_table_csv(sys: &ControlSystem2D, grid: &RegionGrid) -> String {
    let rows = sample_grid(sys, grid, |q, u| sys.velocity_u_jet(q, u));
    let mut out = VELOCITY_COLUMNS.join(",");
    out.push('\n');
    for (q, u, r) in rows {
        let _ = write!(out, "{},{},{}", num(q[0]), num(q[1]), num(u));
        match r {
            Ok(j) => {
                let _ = writeln!(out, ",{},{},{},{}", num(j[0].value), num(j[1].value), num(j[0].du), num(j[1].du));
            }
            Err(_) => out.push_str(",,,,\n"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::FramePair;

    #[test]
    fn grid_validation() {
        assert!(RegionGrid::new([0.0, 1.0], [0.0, 1.0], 2, 8).is_err());
        assert!(RegionGrid::new([0.0, 1.0], [0.0, 1.0], 3, 7).is_err());
        assert!(RegionGrid::new([1.0, 1.0], [0.0, 1.0], 3, 8).is_err());
        assert!(RegionGrid::new([0.0, 1.0], [0.0, f64::NAN], 3, 8).is_err());
        let g = RegionGrid::new([0.0, 1.0], [-1.0, 1.0], 3, 8).unwrap();
        let pts = g.points(ControlDomain::Circle);
        assert_eq!(pts.len(), 72);
        assert_eq!(pts[0], ([0.0, -1.0], 0.0));
        assert_eq!(pts[8], ([0.0, 0.0], 0.0));
        assert_eq!(pts[71].0, [1.0, 1.0]);
    }

    #[test]
    fn interval_samples_are_midpoints() {
        let g = RegionGrid::new([0.0, 1.0], [0.0, 1.0], 3, 8).unwrap();
        let us = g.u_values(ControlDomain::Interval { lo: 0.0, hi: 8.0 });
        assert_eq!(us, vec![0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5]);
    }

    #[test]
    fn degenerate_general_system_is_rejected() {
        let err = load_system_str(r#"{"kind":"general","f":["cos(u)","0"]}"#).unwrap_err();
        match err {
            LoadError::Regularity { checked, violations } => {
                assert_eq!(checked, 200);
                assert_eq!(violations.len(), 200);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn csv_has_exact_columns() {
        let sys = ControlSystem2D::riemannian(FramePair::euclidean());
        let grid = RegionGrid::new([-1.0, 1.0], [-1.0, 1.0], 3, 8).unwrap();
        let csv = cmd_invariants(&sys, &grid, &InvariantConfig::default()).to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "q1,q2,u,c,b,kappa,Lhb,L2hb,Lvk,Lvhb,res_bnk,res_lemma,res_bracket,status"
        );
        for line in lines {
            assert_eq!(line.split(',').count(), 14);
            assert!(line.ends_with(",ok"));
        }
    }

    #[test]
    fn empty_report_has_false_verdicts() {
        let samples: Vec<Result<CheckSample, InvariantError>> = vec![Err(InvariantError::NonFinite("x")); 3];
        let r = TrivializabilityReport::from_samples(&samples, 1e-5);
        assert!(!r.verdict_thm1 && !r.verdict_thm2 && r.unreliable);
        assert_eq!(r.excluded_reasons["non-finite"], 3);
        assert!(r.to_json().contains("\"sup_kappa\": null"));
    }
}
