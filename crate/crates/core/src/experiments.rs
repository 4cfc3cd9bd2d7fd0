//! Sensitivity sweeps: does packing printers pay off, and by how much?
//!
//! Each instance is solved twice, with and without printers. The
//! printer-free optimum seeds the second solve, so the reported reward with
//! printers is never below the one without.

use std::fmt::Write as _;
use std::time::Instant;

use log::info;
use num_traits::Zero;
use serde::Serialize;

use crate::det_equiv::{build_for_instance, extract_solution, solution_vector, solve_det_equiv};
use crate::error::{Error, Result};
use crate::generator::{generate_with, Aspect, GenConfig, SweepOverride, SweepValue};
use crate::mip::{MipParams, MipResult, MipStatus};
use crate::model::Instance;
use crate::rational::{format_decimal, int, Rational};

/// Solver figures of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub status: String,
    pub nodes: u64,
    pub branches: u64,
    pub gap: f64,
    pub seconds: f64,
}

impl RunStats {
    fn of(result: &MipResult, started: Instant) -> Self {
        RunStats {
            status: result.status.as_str().to_string(),
            nodes: result.nodes,
            branches: result.branches,
            gap: result.gap,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gain {
    Percent(Rational),
    /// Positive reward with printers against zero without.
    Undefined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceOutcome {
    pub printers: u64,
    pub with_printers: Rational,
    pub without_printers: Rational,
    pub gain: Gain,
    pub with_stats: RunStats,
    pub without_stats: RunStats,
}

/// Result of one instance in a sweep. A run that stops on a limit, or whose
/// solver errors, is a fail.
#[derive(Clone, Debug, PartialEq)]
pub enum RunOutcome {
    Solved(InstanceOutcome),
    Failed { reason: String },
}

pub fn gain_percent(with: &Rational, without: &Rational) -> Gain {
    if without.is_zero() {
        if with.is_zero() {
            Gain::Percent(Rational::zero())
        } else {
            Gain::Undefined
        }
    } else {
        Gain::Percent(int(100) * (with - without) / without)
    }
}

/// Solves `instance` without and then with printers.
pub fn reward_gain(instance: &Instance, params: &MipParams) -> Result<RunOutcome> {
    instance.ensure_valid()?;
    match solve_pair(instance, params) {
        Ok(outcome) => Ok(outcome),
        Err(Error::Solver(reason)) | Err(Error::Internal(reason)) => Ok(RunOutcome::Failed { reason }),
        Err(other) => Err(other),
    }
}

fn solve_pair(instance: &Instance, params: &MipParams) -> Result<RunOutcome> {
    let started = Instant::now();
    let (plain, plain_map) = build_for_instance(instance, false)?;
    let base = solve_det_equiv(instance, &plain, &plain_map, params, None)?;
    let without_stats = RunStats::of(&base, started);
    if base.status != MipStatus::OptimalWithinGap {
        return Ok(RunOutcome::Failed {
            reason: format!("without printers: {}", base.status.as_str()),
        });
    }
    let (decision, plans) = extract_solution(instance, &base, &plain_map)?;
    let without = base
        .objective
        .clone()
        .ok_or_else(|| Error::Internal("solved run has no objective".into()))?;

    let started = Instant::now();
    let (full, full_map) = build_for_instance(instance, true)?;
    let start = solution_vector(&full_map, &decision, &plans)?;
    let result = solve_det_equiv(instance, &full, &full_map, params, Some(&start))?;
    let with_stats = RunStats::of(&result, started);
    if result.status != MipStatus::OptimalWithinGap {
        return Ok(RunOutcome::Failed {
            reason: format!("with printers: {}", result.status.as_str()),
        });
    }
    let (packed, _) = extract_solution(instance, &result, &full_map)?;
    let with = result
        .objective
        .clone()
        .ok_or_else(|| Error::Internal("solved run has no objective".into()))?;
    Ok(RunOutcome::Solved(InstanceOutcome {
        printers: packed.printers,
        gain: gain_percent(&with, &without),
        with_printers: with,
        without_printers: without,
        with_stats,
        without_stats,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    pub median: Rational,
    pub min: Rational,
    pub max: Rational,
    pub mean: Rational,
}

pub fn summarize(values: &[Rational]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty list".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2].clone()
    } else {
        (&sorted[n / 2 - 1] + &sorted[n / 2]) / int(2)
    };
    let total: Rational = sorted.iter().sum();
    Ok(Summary {
        median,
        min: sorted[0].clone(),
        max: sorted[n - 1].clone(),
        mean: total / int(n as u64),
    })
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub config: GenConfig,
    pub aspect: Aspect,
    pub grid: Vec<SweepValue>,
    pub per_value: usize,
    pub base_seed: u64,
    pub params: MipParams,
}

impl SweepSpec {
    /// Desk-scale sweep over the aspect's full grid.
    pub fn desk(aspect: Aspect, per_value: usize, base_seed: u64) -> Self {
        SweepSpec {
            config: GenConfig::default(),
            aspect,
            grid: aspect.studied_grid(),
            per_value,
            base_seed,
            params: MipParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: SweepValue,
    /// `(seed, outcome)` in seed order.
    pub outcomes: Vec<(u64, RunOutcome)>,
    pub fails: usize,
    pub undefined_gains: usize,
    pub printers: Option<Summary>,
    pub gain: Option<Summary>,
}

impl SweepRow {
    fn new(value: SweepValue, outcomes: Vec<(u64, RunOutcome)>) -> Result<Self> {
        let solved: Vec<&InstanceOutcome> = outcomes
            .iter()
            .filter_map(|(_, o)| match o {
                RunOutcome::Solved(s) => Some(s),
                RunOutcome::Failed { .. } => None,
            })
            .collect();
        let printers: Vec<Rational> = solved.iter().map(|s| int(s.printers)).collect();
        let gains: Vec<Rational> = solved
            .iter()
            .filter_map(|s| match &s.gain {
                Gain::Percent(g) => Some(g.clone()),
                Gain::Undefined => None,
            })
            .collect();
        Ok(SweepRow {
            fails: outcomes.len() - solved.len(),
            undefined_gains: solved.len() - gains.len(),
            printers: optional_summary(&printers)?,
            gain: optional_summary(&gains)?,
            value,
            outcomes,
        })
    }

    /// Instances that finished within budget.
    pub fn solved(&self) -> impl Iterator<Item = (u64, &InstanceOutcome)> {
        self.outcomes.iter().filter_map(|(seed, o)| match o {
            RunOutcome::Solved(s) => Some((*seed, s)),
            RunOutcome::Failed { .. } => None,
        })
    }
}

fn optional_summary(values: &[Rational]) -> Result<Option<Summary>> {
    if values.is_empty() {
        Ok(None)
    } else {
        summarize(values).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub aspect: Aspect,
    pub base_seed: u64,
    pub per_value: usize,
    pub relative_gap: f64,
    pub node_limit: Option<u64>,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.config.validate()?;
    for value in &spec.grid {
        if !spec.aspect.accepts(value) {
            return Err(Error::InvalidArgument(format!(
                "{value} is not a studied value of {}",
                spec.aspect
            )));
        }
    }
    let mut rows = Vec::new();
    for value in &spec.grid {
        let over = SweepOverride {
            aspect: spec.aspect,
            value: value.clone(),
        };
        let mut outcomes = Vec::new();
        for index in 0..spec.per_value {
            let seed = spec
                .base_seed
                .checked_add(index as u64)
                .ok_or_else(|| Error::InvalidArgument("seed range overflows".into()))?;
            let instance = generate_with(&spec.config, seed, Some(&over))?;
            let outcome = reward_gain(&instance, &spec.params)?;
            match &outcome {
                RunOutcome::Solved(s) => info!(
                    "{}={} seed {seed}: printers {} gain {:?} nodes {}+{}",
                    spec.aspect, value, s.printers, s.gain, s.without_stats.nodes, s.with_stats.nodes
                ),
                RunOutcome::Failed { reason } => info!("{}={} seed {seed}: fail ({reason})", spec.aspect, value),
            }
            outcomes.push((seed, outcome));
        }
        rows.push(SweepRow::new(value.clone(), outcomes)?);
    }
    Ok(SweepReport {
        aspect: spec.aspect,
        base_seed: spec.base_seed,
        per_value: spec.per_value,
        relative_gap: spec.params.relative_gap,
        node_limit: spec.params.node_limit,
        rows,
    })
}

pub const CSV_HEADER: &str = "value,n,fails,undef_gains,printers_median,printers_min,printers_max,printers_mean,\
gain_median,gain_min,gain_max,gain_mean";

fn stat_cells(summary: &Option<Summary>) -> [String; 4] {
    match summary {
        Some(s) => [
            format_decimal(&s.median, 3),
            format_decimal(&s.min, 3),
            format_decimal(&s.max, 3),
            format_decimal(&s.mean, 1),
        ],
        None => Default::default(),
    }
}

impl SweepReport {
    /// CSV table, one row per grid value, after a `#` metadata line.
    /// Medians and extremes carry three decimals, means one.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let limit = self.node_limit.map_or("none".to_string(), |n| n.to_string());
        let _ = writeln!(
            out,
            "# aspect={} seed={} per_value={} gap={} node_limit={limit}",
            self.aspect, self.base_seed, self.per_value, self.relative_gap
        );
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![
                row.value.to_string(),
                row.outcomes.len().to_string(),
                row.fails.to_string(),
                row.undefined_gains.to_string(),
            ];
            cells.extend(stat_cells(&row.printers));
            cells.extend(stat_cells(&row.gain));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Mean of a summary, or `None` for an all-fail row.
pub fn mean_of(summary: &Option<Summary>) -> Option<Rational> {
    summary.as_ref().map(|s| s.mean.clone())
}

/// Whether the sequence never decreases; `None` entries break the chain.
pub fn nondecreasing(values: &[Option<Rational>]) -> bool {
    values.windows(2).all(|w| match (&w[0], &w[1]) {
        (Some(a), Some(b)) => a <= b,
        _ => false,
    })
}

/// Share of solved instances with no printer packed.
pub fn zero_printer_share(row: &SweepRow) -> Option<Rational> {
    let solved: Vec<_> = row.solved().collect();
    if solved.is_empty() {
        return None;
    }
    let zero = solved.iter().filter(|(_, s)| s.printers == 0).count();
    Some(int(zero as u64) / int(solved.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_one;
    use crate::rational::ratio;

    #[test]
    fn summarize_examples() {
        let s = summarize(&[int(1), int(2), int(3)]).unwrap();
        assert_eq!((s.median, s.min, s.max, s.mean), (int(2), int(1), int(3), int(2)));
        let s = summarize(&[int(2), int(1)]).unwrap();
        assert_eq!((s.median, s.min, s.max, s.mean), (ratio(3, 2), int(1), int(2), ratio(3, 2)));
        let s = summarize(&[int(5)]).unwrap();
        assert_eq!((s.median, s.min, s.max, s.mean), (int(5), int(5), int(5), int(5)));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn gain_cases() {
        assert_eq!(gain_percent(&int(0), &int(0)), Gain::Percent(int(0)));
        assert_eq!(gain_percent(&int(1), &int(0)), Gain::Undefined);
        assert_eq!(gain_percent(&ratio(26, 25), &ratio(7, 10)), Gain::Percent(ratio(340, 7)));
    }

    #[test]
    fn example_one_gain() {
        let outcome = reward_gain(&example_one(), &MipParams::exact()).unwrap();
        let RunOutcome::Solved(s) = outcome else { panic!("{outcome:?}") };
        assert_eq!(s.printers, 1);
        assert_eq!(s.with_printers, ratio(26, 25));
        assert_eq!(s.without_printers, ratio(7, 10));
        let Gain::Percent(g) = &s.gain else { panic!() };
        assert_eq!(format_decimal(g, 3), "48.571");
    }

    #[test]
    fn no_printable_items_no_gain() {
        let mut instance = example_one();
        for item in &mut instance.items {
            item.print = None;
        }
        let RunOutcome::Solved(s) = reward_gain(&instance, &MipParams::exact()).unwrap() else { panic!() };
        assert_eq!(s.printers, 0);
        assert_eq!(s.gain, Gain::Percent(int(0)));
    }

    #[test]
    fn zero_alpha_no_gain() {
        let mut instance = example_one();
        instance.alpha = int(0);
        let RunOutcome::Solved(s) = reward_gain(&instance, &MipParams::exact()).unwrap() else { panic!() };
        assert_eq!(s.printers, 0);
        assert_eq!(s.gain, Gain::Percent(int(0)));
    }

    #[test]
    fn node_limit_is_a_fail() {
        let (instance, _) = crate::generator::generate(&GenConfig::default(), 3).unwrap();
        let params = MipParams {
            relative_gap: 0.0,
            node_limit: Some(1),
            time_limit: None,
        };
        assert!(matches!(reward_gain(&instance, &params).unwrap(), RunOutcome::Failed { .. }));
    }

    #[test]
    fn empty_grid_gives_empty_report() {
        let mut spec = SweepSpec::desk(Aspect::Alpha, 2, 0);
        spec.grid.clear();
        let report = run_sweep(&spec).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.to_csv().lines().count(), 2);
    }

    #[test]
    fn off_grid_value_rejected() {
        let mut spec = SweepSpec::desk(Aspect::Alpha, 1, 0);
        spec.grid = vec![SweepValue::Finite(ratio(3, 20))];
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn tiny_sweep_csv() {
        let mut spec = SweepSpec::desk(Aspect::Alpha, 2, 7);
        spec.config = GenConfig::new(4, 3, 2);
        spec.grid = vec![SweepValue::Finite(ratio(1, 10)), SweepValue::Finite(int(1))];
        let report = run_sweep(&spec).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# aspect=alpha seed=7 per_value=2 gap=0.001 node_limit=none");
        assert_eq!(lines[1], CSV_HEADER);
        assert!(lines[2].starts_with("0.1,2,"));
        assert!(lines[3].starts_with("1,2,"));
        for row in &report.rows {
            assert_eq!(row.outcomes.iter().map(|(s, _)| *s).collect::<Vec<_>>(), vec![7, 8]);
            if let Some(p) = &row.printers {
                assert!(p.min <= p.median && p.median <= p.max);
            }
        }
        assert_eq!(run_sweep(&spec).unwrap().to_csv(), csv);
    }

    #[test]
    fn trend_helpers() {
        assert!(nondecreasing(&[Some(int(1)), Some(int(1)), Some(int(2))]));
        assert!(!nondecreasing(&[Some(int(2)), Some(int(1))]));
        assert!(!nondecreasing(&[Some(int(1)), None]));
    }
}
