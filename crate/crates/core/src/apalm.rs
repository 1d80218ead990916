//! Adaptive parallel arc-length method: a coarse serial path is cut into
//! intervals that are re-solved independently with finer steps and refined
//! hierarchically where the fine solution disagrees with the coarse one.
//!
//! One coordinator owns every interval; workers only receive job
//! descriptions, hold their own operator copy and send back complete results.
//! The final path is ordered by interval id, so it does not depend on the
//! number of workers or on completion order.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuation::{
    path_distance, run, run_from, ContinuationConfig, ContinuationState, EquilibriumPath, PathPoint, Stepper,
};
use crate::io::{csv_row, IoError};
use crate::numerics::dot;
use crate::operators::Operators;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApalmError {
    #[error("invalid APALM configuration: {0}")]
    InvalidConfig(String),
    #[error("operator factory failed: {0}")]
    Factory(String),
    #[error("serial initialisation aborted: {0}")]
    Init(String),
    #[error("{0} is not implemented")]
    Unsupported(&'static str),
}

/// Hierarchical interval id: level-0 index followed by one child index per level.
pub type IntervalId = Vec<u32>;

pub fn format_id(id: &[u32]) -> String {
    id.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalStatus {
    Pending,
    Solved,
    Refined,
    Converged,
    /// Error above ε_u at the maximum level; kept with a warning.
    Accepted,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApalmInterval {
    pub id: IntervalId,
    pub level: u32,
    pub parent: Option<IntervalId>,
    pub start: (Vec<f64>, f64),
    pub end: (Vec<f64>, f64),
    /// Target length in the constraint metric.
    pub length: f64,
    pub error: f64,
    pub status: IntervalStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApalmConfig {
    pub eps_l: f64,
    pub eps_u: f64,
    pub n_sub: usize,
    pub max_level: u32,
    /// Coarse increment ΔL.
    pub dl: f64,
    pub workers: usize,
    pub stepper: Stepper,
    pub psi: f64,
    pub tol_f: f64,
    pub max_iterations: usize,
    /// Overlap initialisation with correction. Not available.
    pub pipelined: bool,
}

impl Default for ApalmConfig {
    fn default() -> Self {
        Self {
            eps_l: 1e-3,
            eps_u: 1e-3,
            n_sub: 2,
            max_level: 5,
            dl: 0.05,
            workers: 1,
            stepper: Stepper::Crisfield,
            psi: 1.0,
            tol_f: 1e-9,
            max_iterations: 25,
            pipelined: false,
        }
    }
}

impl ApalmConfig {
    pub fn validate(&self) -> Result<(), ApalmError> {
        let bad = |m: String| Err(ApalmError::InvalidConfig(m));
        if !(self.eps_l > 0.0 && self.eps_l <= self.eps_u) {
            return bad(format!("need 0 < eps_l <= eps_u, got {} and {}", self.eps_l, self.eps_u));
        }
        if self.n_sub < 2 {
            return bad(format!("n_sub must be at least 2, got {}", self.n_sub));
        }
        if !(self.dl > 0.0 && self.dl.is_finite()) {
            return bad(format!("dl must be positive, got {}", self.dl));
        }
        if self.stepper == Stepper::LoadControl {
            return bad("APALM needs an arc-length stepper".into());
        }
        if self.pipelined {
            return Err(ApalmError::Unsupported("pipelined initialisation"));
        }
        Ok(())
    }

    fn continuation(&self, dl: f64, steps: usize) -> ContinuationConfig {
        let mut c = ContinuationConfig::new(self.stepper, dl, steps)
            .with_psi(self.psi)
            .with_tol_f(self.tol_f);
        c.max_iterations = self.max_iterations;
        c
    }
}

fn metric<O: Operators + ?Sized>(ops: &O) -> f64 {
    ops.force().map(|p| dot(&p, &p)).unwrap_or(1.0)
}

/// Coarse serial run of `n` steps of length ΔL; each consecutive pair of
/// points becomes a level-0 interval whose length is their measured distance.
pub fn serial_init<O: Operators + ?Sized>(
    ops: &O,
    cfg: &ApalmConfig,
    n: usize,
) -> Result<(EquilibriumPath, Vec<ApalmInterval>), ApalmError> {
    cfg.validate()?;
    if n == 0 {
        return Ok((EquilibriumPath::default(), Vec::new()));
    }
    let path = run(ops, &cfg.continuation(cfg.dl, n));
    if path.points.is_empty() {
        return Err(ApalmError::Init(path.abort.unwrap_or_else(|| "no converged point".into())));
    }
    let pp = metric(ops);
    let pts: Vec<&PathPoint> = path.all_points().collect();
    let intervals = pts
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (a, b) = (w[0], w[1]);
            ApalmInterval {
                id: vec![i as u32],
                level: 0,
                parent: None,
                start: (a.u.clone(), a.lambda),
                end: (b.u.clone(), b.lambda),
                length: path_distance((&a.u, a.lambda), (&b.u, b.lambda), cfg.psi, pp),
                error: f64::NAN,
                status: IntervalStatus::Pending,
            }
        })
        .collect();
    Ok((path, intervals))
}

/// Result of re-solving one interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalResult {
    pub id: IntervalId,
    pub points: Vec<PathPoint>,
    pub error: f64,
    pub failure: Option<String>,
    pub seconds: f64,
}

fn sub_solve<O: Operators + ?Sized>(
    iv: &ApalmInterval,
    ops: &O,
    cfg: &ApalmConfig,
    n_sub: usize,
    pp: f64,
) -> (Vec<PathPoint>, f64, Option<String>) {
    let du: Vec<f64> = iv.end.0.iter().zip(&iv.start.0).map(|(a, b)| a - b).collect();
    let dlam = iv.end.1 - iv.start.1;
    let h = iv.length / n_sub as f64;
    let state = ContinuationState::new(iv.start.0.clone(), iv.start.1, h, cfg.psi).with_direction(du, dlam);
    let path = run_from(ops, &cfg.continuation(h, n_sub), state);
    if let Some(reason) = path.abort {
        return (path.points, f64::INFINITY, Some(reason));
    }
    let last = path.points.last().expect("n_sub >= 1 steps");
    let gap = path_distance((&last.u, last.lambda), (&iv.end.0, iv.end.1), cfg.psi, pp);
    (path.points, gap / iv.length, None)
}

/// Re-solves `iv` from its start with `n_sub` steps of `L/n_sub`. The error is
/// the distance between the reached point and the stored end, relative to
/// `L`. A failed sub-solve is retried once with twice as many steps.
pub fn correct_interval<O: Operators + ?Sized>(iv: &ApalmInterval, ops: &O, cfg: &ApalmConfig) -> IntervalResult {
    let t0 = Instant::now();
    let done = |points, error, failure| IntervalResult {
        id: iv.id.clone(),
        points,
        error,
        failure,
        seconds: t0.elapsed().as_secs_f64(),
    };
    if iv.length == 0.0 {
        return done(Vec::new(), 0.0, None);
    }
    let pp = metric(ops);
    let (points, error, failure) = sub_solve(iv, ops, cfg, cfg.n_sub, pp);
    if failure.is_none() {
        return done(points, error, None);
    }
    let (points, error, failure) = sub_solve(iv, ops, cfg, 2 * cfg.n_sub, pp);
    done(points, error, failure)
}

/// A point of the refined path with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApalmPoint {
    pub point: PathPoint,
    pub level: u32,
    pub interval_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub interval_id: String,
    pub level: u32,
    pub error: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ApalmReport {
    pub intervals: Vec<ApalmInterval>,
    pub jobs: Vec<JobReport>,
    pub max_level: u32,
    pub warnings: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ApalmPath {
    pub start: Option<PathPoint>,
    pub points: Vec<ApalmPoint>,
    pub report: ApalmReport,
}

impl ApalmPath {
    /// Path CSV with the extra columns `level,interval_id`.
    pub fn to_csv(&self) -> Result<String, IoError> {
        let n = self.start.as_ref().map_or(0, |p| p.u.len());
        let mut out = EquilibriumPath::csv_header(n);
        out.push_str(",level,interval_id\n");
        let row = |p: &PathPoint, level: u32, id: &str, out: &mut String| -> Result<(), IoError> {
            let mut vals = vec![p.lambda];
            vals.extend_from_slice(&p.u);
            out.push_str(&format!("{},{},{},{},{level},{id}\n", p.step, csv_row(&vals)?, p.stability, csv_row(&[p.dl])?));
            Ok(())
        };
        if let Some(s) = &self.start {
            row(s, 0, "", &mut out)?;
        }
        for (i, p) in self.points.iter().enumerate() {
            let mut pt = p.point.clone();
            pt.step = i + 1;
            row(&pt, p.level, &p.interval_id, &mut out)?;
        }
        Ok(out)
    }

    pub fn report_json(&self) -> Result<String, IoError> {
        serde_json::to_string_pretty(&self.report).map_err(|e| IoError::Parse(e.to_string()))
    }
}

struct Store {
    intervals: BTreeMap<IntervalId, ApalmInterval>,
    points: BTreeMap<IntervalId, Vec<PathPoint>>,
    jobs: Vec<JobReport>,
    warnings: Vec<String>,
}

impl Store {
    /// Applies one job result; returns the children to schedule.
    fn absorb(&mut self, res: IntervalResult, cfg: &ApalmConfig) -> Vec<ApalmInterval> {
        let iv = self.intervals.get_mut(&res.id).expect("known interval");
        iv.error = res.error;
        iv.status = IntervalStatus::Solved;
        self.jobs.push(JobReport {
            interval_id: format_id(&res.id),
            level: iv.level,
            error: res.error,
            seconds: res.seconds,
        });
        if let Some(f) = res.failure {
            iv.status = IntervalStatus::Failed;
            self.warnings.push(format!("interval {} failed: {f}", format_id(&iv.id)));
            return Vec::new();
        }
        if res.error <= cfg.eps_u {
            iv.status = IntervalStatus::Converged;
            self.points.insert(res.id, res.points);
            return Vec::new();
        }
        if iv.level >= cfg.max_level || res.points.len() != cfg.n_sub {
            iv.status = IntervalStatus::Accepted;
            self.warnings.push(format!(
                "interval {} kept at level {} with error {:.3e}",
                format_id(&iv.id),
                iv.level,
                res.error
            ));
            self.points.insert(res.id, res.points);
            return Vec::new();
        }
        iv.status = IntervalStatus::Refined;
        let parent = iv.clone();
        let child_len = parent.length / cfg.n_sub as f64;
        let mut start = parent.start.clone();
        let mut children = Vec::with_capacity(cfg.n_sub);
        for (k, p) in res.points.iter().enumerate() {
            let mut id = parent.id.clone();
            id.push(k as u32);
            let end = (p.u.clone(), p.lambda);
            children.push(ApalmInterval {
                id,
                level: parent.level + 1,
                parent: Some(parent.id.clone()),
                start: std::mem::replace(&mut start, end.clone()),
                end,
                length: child_len,
                error: f64::NAN,
                status: IntervalStatus::Pending,
            });
        }
        for c in &children {
            self.intervals.insert(c.id.clone(), c.clone());
        }
        children
    }
}

/// Refines the level-0 intervals until none is pending. With `workers = 0`
/// jobs run inline on the coordinator.
pub fn solve<O, F, E>(
    path0: &EquilibriumPath,
    intervals: Vec<ApalmInterval>,
    cfg: &ApalmConfig,
    factory: F,
) -> Result<ApalmPath, ApalmError>
where
    O: Operators + Send,
    F: Fn() -> Result<O, E> + Sync,
    E: Display,
{
    cfg.validate()?;
    let t0 = Instant::now();
    let mut store = Store {
        intervals: intervals.iter().map(|iv| (iv.id.clone(), iv.clone())).collect(),
        points: BTreeMap::new(),
        jobs: Vec::new(),
        warnings: Vec::new(),
    };
    let make = || factory().map_err(|e| ApalmError::Factory(e.to_string()));

    if cfg.workers == 0 {
        let ops = make()?;
        let mut queue: std::collections::VecDeque<ApalmInterval> = intervals.into();
        while let Some(iv) = queue.pop_front() {
            let res = correct_interval(&iv, &ops, cfg);
            queue.extend(store.absorb(res, cfg));
        }
    } else {
        let (job_tx, job_rx) = crossbeam_channel::unbounded::<ApalmInterval>();
        let (res_tx, res_rx) = crossbeam_channel::unbounded::<IntervalResult>();
        let copies: Vec<O> = (0..cfg.workers).map(|_| make()).collect::<Result<_, _>>()?;
        std::thread::scope(|s| {
            for ops in copies {
                let job_rx = job_rx.clone();
                let res_tx = res_tx.clone();
                s.spawn(move || {
                    for iv in job_rx {
                        if res_tx.send(correct_interval(&iv, &ops, cfg)).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(res_tx);
            let mut pending = 0usize;
            for iv in intervals {
                pending += 1;
                job_tx.send(iv).expect("workers alive");
            }
            while pending > 0 {
                let res = res_rx.recv().expect("a worker result");
                pending -= 1;
                for child in store.absorb(res, cfg) {
                    pending += 1;
                    job_tx.send(child).expect("workers alive");
                }
            }
            drop(job_tx);
        });
    }

    let mut points = Vec::new();
    for (id, pts) in &store.points {
        let level = store.intervals[id].level;
        for p in pts {
            points.push(ApalmPoint {
                point: p.clone(),
                level,
                interval_id: format_id(id),
            });
        }
    }
    let max_level = store.intervals.values().map(|iv| iv.level).max().unwrap_or(0);
    Ok(ApalmPath {
        start: path0.start.clone(),
        points,
        report: ApalmReport {
            intervals: store.intervals.into_values().collect(),
            jobs: store.jobs,
            max_level,
            warnings: store.warnings,
            wall_seconds: t0.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearSpring;

    #[test]
    fn spring_intervals_have_equal_length() {
        let s = LinearSpring::new(2.0, 1.0).unwrap();
        let cfg = ApalmConfig { dl: 0.1, ..ApalmConfig::default() };
        let (_, ivs) = serial_init(&s, &cfg, 3).unwrap();
        assert_eq!(ivs.len(), 3);
        for iv in &ivs {
            assert!((iv.length - 0.1).abs() <= 1e-10);
        }
        let r = correct_interval(&ivs[1], &s, &cfg);
        assert!(r.error <= 1e-12, "{}", r.error);
    }

    #[test]
    fn empty_init_and_zero_length() {
        let s = LinearSpring::new(1.0, 1.0).unwrap();
        let cfg = ApalmConfig::default();
        let (p, ivs) = serial_init(&s, &cfg, 0).unwrap();
        assert!(p.points.is_empty() && ivs.is_empty());
        let iv = ApalmInterval {
            id: vec![0],
            level: 0,
            parent: None,
            start: (vec![0.0], 0.0),
            end: (vec![0.0], 0.0),
            length: 0.0,
            error: f64::NAN,
            status: IntervalStatus::Pending,
        };
        let r = correct_interval(&iv, &s, &cfg);
        assert_eq!(r.error, 0.0);
        assert!(r.points.is_empty());
    }

    #[test]
    fn config_checks() {
        assert!(ApalmConfig { n_sub: 1, ..ApalmConfig::default() }.validate().is_err());
        assert!(ApalmConfig { eps_l: 1e-2, eps_u: 1e-3, ..ApalmConfig::default() }.validate().is_err());
        assert_eq!(
            ApalmConfig { pipelined: true, ..ApalmConfig::default() }.validate(),
            Err(ApalmError::Unsupported("pipelined initialisation"))
        );
    }

    #[test]
    fn ids_format() {
        assert_eq!(format_id(&[3, 0, 1]), "3.0.1");
    }
}
