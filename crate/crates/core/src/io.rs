//! Instance and solution files (JSON) and free-format MPS export/import.
//!
//! Rationals are written as strings (`"7/10"`, or a plain integer) so they
//! survive a round trip exactly; decimals such as `"0.7"` are accepted on
//! input.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LpProblem, Relation};
use crate::det_equiv::{extract_solution, VariableMap};
use crate::mip::{MipProblem, MipResult};
use crate::model::{
    check_first_stage, expected_reward, Capacity, FirstStageDecision, Instance, Item, MaterialSpec, PrintPlan,
    PrintSpec, PrinterSpec, Scenario, Violation, ViolationCode,
};
use crate::rational::{exact_decimal, format_decimal, format_rational, from_f64, parse_rational, Rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format_version: u32,
    /// Generator seed, when the instance was drawn by `gen`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    items: Vec<ItemFile>,
    printer: PrinterFile,
    material: MaterialFile,
    capacity: CapacityFile,
    alpha: String,
    scenarios: Vec<ScenarioFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemFile {
    w: u64,
    v: u64,
    r: u64,
    printable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrinterFile {
    w_p: u64,
    v_p: u64,
    #[serde(rename = "T")]
    time: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    w_b: u64,
    v_b: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityFile {
    #[serde(rename = "W")]
    weight: u64,
    #[serde(rename = "V")]
    volume: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    q: String,
    d: Vec<u64>,
}

fn json_error(err: serde_json::Error) -> Error {
    Error::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

fn rational_field(text: &str, field: &str) -> Result<Rational> {
    parse_rational(text).ok_or_else(|| Error::Parse {
        line: 0,
        column: 0,
        message: format!("{field}: '{text}' is not a rational number"),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("file structs always serialize");
    text.push('\n');
    text
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(json_error)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Parse {
            line: 0,
            column: 0,
            message: format!("unsupported format_version {}", file.format_version),
        });
    }
    let mut violations = Vec::new();
    let items = file
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let print = match (item.printable, item.m, item.t) {
                (true, Some(material), Some(time)) => Some(PrintSpec { material, time }),
                (true, _, _) => {
                    violations.push(Violation::new(
                        ViolationCode::MissingPrintFields,
                        format!("printable item {i} needs both m and t"),
                    ));
                    None
                }
                (false, None, None) => None,
                (false, _, _) => {
                    violations.push(Violation::new(
                        ViolationCode::UnexpectedPrintFields,
                        format!("item {i} is not printable but carries m or t"),
                    ));
                    None
                }
            };
            Item {
                weight: item.w,
                volume: item.v,
                reward: item.r,
                print,
            }
        })
        .collect();
    let scenarios = file
        .scenarios
        .iter()
        .enumerate()
        .map(|(s, scenario)| {
            Ok(Scenario {
                probability: rational_field(&scenario.q, &format!("scenarios[{s}].q"))?,
                demand: scenario.d.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let instance = Instance {
        items,
        printer: PrinterSpec {
            weight: file.printer.w_p,
            volume: file.printer.v_p,
            time_budget: file.printer.time,
        },
        material: MaterialSpec {
            weight: file.material.w_b,
            volume: file.material.v_b,
        },
        capacity: Capacity {
            weight: file.capacity.weight,
            volume: file.capacity.volume,
        },
        alpha: rational_field(&file.alpha, "alpha")?,
        scenarios,
    };
    violations.extend(crate::model::validate_instance(&instance));
    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(Error::InvalidInstance(violations))
    }
}

pub fn instance_to_json(instance: &Instance) -> String {
    instance_to_json_seeded(instance, None)
}

/// Like [`instance_to_json`], recording the seed the instance was drawn from.
pub fn instance_to_json_seeded(instance: &Instance, seed: Option<u64>) -> String {
    let file = InstanceFile {
        seed,
        format_version: FORMAT_VERSION,
        items: instance
            .items
            .iter()
            .map(|item| ItemFile {
                w: item.weight,
                v: item.volume,
                r: item.reward,
                printable: item.is_printable(),
                m: item.print.map(|spec| spec.material),
                t: item.print.map(|spec| spec.time),
            })
            .collect(),
        printer: PrinterFile {
            w_p: instance.printer.weight,
            v_p: instance.printer.volume,
            time: instance.printer.time_budget,
        },
        material: MaterialFile {
            w_b: instance.material.weight,
            v_b: instance.material.volume,
        },
        capacity: CapacityFile {
            weight: instance.capacity.weight,
            volume: instance.capacity.volume,
        },
        alpha: format_rational(&instance.alpha),
        scenarios: instance
            .scenarios
            .iter()
            .map(|s| ScenarioFile {
                q: format_rational(&s.probability),
                d: s.demand.clone(),
            })
            .collect(),
    };
    to_json(&file)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, instance_to_json(instance))?;
    Ok(())
}

/// Solver figures recorded next to a solution.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverStats {
    pub status: String,
    pub nodes: u64,
    pub branches: u64,
    pub gap: f64,
    pub best_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub objective: Rational,
    pub decision: FirstStageDecision,
    pub plans: Vec<PrintPlan>,
    pub stats: SolverStats,
}

impl Solution {
    /// Packages a solved deterministic equivalent; `None` when the run found
    /// no incumbent.
    pub fn from_result(instance: &Instance, result: &MipResult, map: &VariableMap) -> Result<Option<Solution>> {
        let Some(objective) = result.objective.clone() else {
            return Ok(None);
        };
        let (decision, plans) = extract_solution(instance, result, map)?;
        Ok(Some(Solution {
            objective,
            decision,
            plans,
            stats: SolverStats {
                status: result.status.as_str().to_string(),
                nodes: result.nodes,
                branches: result.branches,
                gap: result.gap,
                best_bound: result.best_bound,
            },
        }))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    format_version: u32,
    objective: ObjectiveFile,
    first_stage: FirstStageFile,
    plans: Vec<PlanFile>,
    solver_stats: StatsFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveFile {
    decimal: String,
    exact: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FirstStageFile {
    a: Vec<u64>,
    a_p: u64,
    a_b: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    scenario: usize,
    a_s: Vec<u64>,
    p: Vec<Vec<u64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsFile {
    status: String,
    nodes: u64,
    branches: u64,
    gap: Option<f64>,
    best_bound: Option<f64>,
}

fn finite(value: f64) -> Option<f64> {
    value.is_finite().then_some(value)
}

pub fn solution_to_json(solution: &Solution) -> String {
    let file = SolutionFile {
        format_version: FORMAT_VERSION,
        objective: ObjectiveFile {
            decimal: format_decimal(&solution.objective, 6),
            exact: format_rational(&solution.objective),
        },
        first_stage: FirstStageFile {
            a: solution.decision.items.clone(),
            a_p: solution.decision.printers,
            a_b: solution.decision.material,
        },
        plans: solution
            .plans
            .iter()
            .map(|plan| PlanFile {
                scenario: plan.scenario,
                a_s: plan.matched.clone(),
                p: plan.prints.clone(),
            })
            .collect(),
        solver_stats: StatsFile {
            status: solution.stats.status.clone(),
            nodes: solution.stats.nodes,
            branches: solution.stats.branches,
            gap: finite(solution.stats.gap),
            best_bound: finite(solution.stats.best_bound),
        },
    };
    to_json(&file)
}

pub fn write_solution(solution: &Solution, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, solution_to_json(solution))?;
    Ok(())
}

/// Parses a solution and checks it against `instance`: the packing and
/// plans must be feasible and the stated objective must equal their reward.
pub fn parse_solution(text: &str, instance: &Instance) -> Result<Solution> {
    let file: SolutionFile = serde_json::from_str(text).map_err(json_error)?;
    let objective = rational_field(&file.objective.exact, "objective.exact")?;
    let decision = FirstStageDecision {
        items: file.first_stage.a,
        printers: file.first_stage.a_p,
        material: file.first_stage.a_b,
    };
    let violations = check_first_stage(instance, &decision);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let plans: Vec<PrintPlan> = file
        .plans
        .into_iter()
        .map(|plan| PrintPlan {
            scenario: plan.scenario,
            matched: plan.a_s,
            prints: plan.p,
        })
        .collect();
    if plans.len() != instance.num_scenarios() {
        return Err(Error::Dimension(format!(
            "{} plans for {} scenarios",
            plans.len(),
            instance.num_scenarios()
        )));
    }
    let reward = expected_reward(instance, &decision, &plans)?;
    if reward != objective {
        return Err(Error::InvalidArgument(format!(
            "stated objective {} differs from plan reward {}",
            format_rational(&objective),
            format_rational(&reward)
        )));
    }
    Ok(Solution {
        objective,
        decision,
        plans,
        stats: SolverStats {
            status: file.solver_stats.status,
            nodes: file.solver_stats.nodes,
            branches: file.solver_stats.branches,
            gap: file.solver_stats.gap.unwrap_or(f64::INFINITY),
            best_bound: file.solver_stats.best_bound.unwrap_or(f64::INFINITY),
        },
    })
}

pub fn load_solution(path: impl AsRef<Path>, instance: &Instance) -> Result<Solution> {
    parse_solution(&std::fs::read_to_string(path)?, instance)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MpsOptions {
    /// Write `min -c x` without an OBJSENSE section, for readers that do not
    /// understand it.
    pub negate_objective: bool,
}

fn mps_number(value: &Rational) -> String {
    exact_decimal(value).unwrap_or_else(|| crate::rational::to_f64(value).to_string())
}

const OBJECTIVE_ROW: &str = "obj";

/// Free-format MPS text for a maximisation problem.
pub fn mps_string(problem: &MipProblem, name: &str, options: MpsOptions) -> Result<String> {
    let lp = &problem.lp;
    lp.check()?;
    if problem.integer.len() != lp.num_vars() {
        return Err(Error::Dimension("integrality flags do not match variables".into()));
    }
    let mut out = String::new();
    writeln!(out, "NAME {name}").unwrap();
    if !options.negate_objective {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    writeln!(out, " N  {OBJECTIVE_ROW}").unwrap();
    for row in &lp.rows {
        let kind = match row.relation {
            Relation::Le => "L",
            Relation::Eq => "E",
            Relation::Ge => "G",
        };
        writeln!(out, " {kind}  {}", row.name).unwrap();
    }
    let mut columns: Vec<Vec<(usize, &Rational)>> = vec![Vec::new(); lp.num_vars()];
    for (r, row) in lp.rows.iter().enumerate() {
        for (j, a) in &row.coeffs {
            columns[*j].push((r, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_integer = false;
    let mut marker = 0;
    for (j, name) in lp.var_names.iter().enumerate() {
        if problem.integer[j] != in_integer {
            let kind = if problem.integer[j] { "INTORG" } else { "INTEND" };
            writeln!(out, "    MARKER{marker} 'MARKER' '{kind}'").unwrap();
            marker += 1;
            in_integer = problem.integer[j];
        }
        let cost = if options.negate_objective {
            -lp.objective[j].clone()
        } else {
            lp.objective[j].clone()
        };
        if !cost.is_zero() || columns[j].is_empty() {
            writeln!(out, "    {name}  {OBJECTIVE_ROW}  {}", mps_number(&cost)).unwrap();
        }
        for (r, a) in &columns[j] {
            writeln!(out, "    {name}  {}  {}", lp.rows[*r].name, mps_number(a)).unwrap();
        }
    }
    if in_integer {
        writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'").unwrap();
    }
    out.push_str("RHS\n");
    for row in &lp.rows {
        if !row.rhs.is_zero() {
            writeln!(out, "    RHS  {}  {}", row.name, mps_number(&row.rhs)).unwrap();
        }
    }
    out.push_str("BOUNDS\n");
    for (j, name) in lp.var_names.iter().enumerate() {
        match &lp.upper[j] {
            Some(u) if *u == lp.lower[j] => writeln!(out, " FX BND  {name}  {}", mps_number(u)).unwrap(),
            Some(u) => {
                if !lp.lower[j].is_zero() {
                    writeln!(out, " LO BND  {name}  {}", mps_number(&lp.lower[j])).unwrap();
                }
                writeln!(out, " UP BND  {name}  {}", mps_number(u)).unwrap();
            }
            None => {
                if !lp.lower[j].is_zero() {
                    writeln!(out, " LO BND  {name}  {}", mps_number(&lp.lower[j])).unwrap();
                }
                writeln!(out, " PL BND  {name}").unwrap();
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

pub fn export_mps(problem: &MipProblem, path: impl AsRef<Path>, options: MpsOptions) -> Result<()> {
    let name = path
        .as_ref()
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace))
        .unwrap_or("model")
        .to_string();
    std::fs::write(path, mps_string(problem, &name, options)?)?;
    Ok(())
}

fn mps_value(text: &str, line: usize) -> Result<Rational> {
    parse_rational(text)
        .or_else(|| text.parse::<f64>().ok().filter(|v| v.is_finite()).and_then(from_f64))
        .ok_or_else(|| Error::Mps {
            line,
            message: format!("'{text}' is not a number"),
        })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    Objsense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Reads free-format MPS back into a maximisation problem.
pub fn parse_mps_str(text: &str) -> Result<MipProblem> {
    let mut lp = LpProblem::default();
    let mut integer = Vec::new();
    let mut maximize = false;
    let mut objective_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut in_integer = false;
    let mut section = Section::Start;
    let mps_err = |line: usize, message: String| Error::Mps { line, message };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            let keyword = fields[0];
            section = match keyword {
                "NAME" => Section::Start,
                "OBJSENSE" => {
                    if let Some(sense) = fields.get(1) {
                        maximize = parse_sense(sense, line)?;
                    }
                    Section::Objsense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(Error::UnsupportedMpsSection(other.to_string())),
            };
            continue;
        }
        match section {
            Section::Start | Section::End => {
                return Err(mps_err(line, "data outside a section".into()));
            }
            Section::Objsense => maximize = parse_sense(fields[0], line)?,
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(mps_err(line, "row lines need a type and a name".into()));
                }
                let relation = match fields[0] {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(fields[1].to_string());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    other => return Err(mps_err(line, format!("unknown row type {other}"))),
                };
                if row_index.insert(fields[1].to_string(), lp.rows.len()).is_some() {
                    return Err(mps_err(line, format!("duplicate row {}", fields[1])));
                }
                lp.add_row(fields[1], Vec::new(), relation, Rational::zero());
            }
            Section::Columns => {
                if fields.len() == 3 && fields[1] == "'MARKER'" {
                    in_integer = match fields[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => return Err(mps_err(line, format!("unknown marker {other}"))),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(mps_err(line, "column lines need one or two row/value pairs".into()));
                }
                let j = match col_index.get(fields[0]) {
                    Some(&j) => j,
                    None => {
                        let j = lp.add_var(fields[0], Rational::zero(), Rational::zero(), None);
                        integer.push(in_integer);
                        col_index.insert(fields[0].to_string(), j);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = mps_value(pair[1], line)?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        lp.objective[j] = value;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| mps_err(line, format!("unknown row {}", pair[0])))?;
                        if !value.is_zero() {
                            lp.rows[r].coeffs.push((j, value));
                        }
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(mps_err(line, "RHS lines need a set name and row/value pairs".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let value = mps_value(pair[1], line)?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        continue;
                    }
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| mps_err(line, format!("unknown row {}", pair[0])))?;
                    lp.rows[r].rhs = value;
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(mps_err(line, "bound lines need a type, set name and column".into()));
                }
                let j = *col_index
                    .get(fields[2])
                    .ok_or_else(|| mps_err(line, format!("unknown column {}", fields[2])))?;
                let value = || -> Result<Rational> {
                    let text = fields.get(3).ok_or_else(|| mps_err(line, "bound needs a value".into()))?;
                    mps_value(text, line)
                };
                match fields[0] {
                    "UP" | "UI" => lp.upper[j] = Some(value()?),
                    "LO" | "LI" => lp.lower[j] = value()?,
                    "FX" => {
                        let v = value()?;
                        lp.lower[j] = v.clone();
                        lp.upper[j] = Some(v);
                    }
                    "PL" => lp.upper[j] = None,
                    "BV" => {
                        lp.lower[j] = Rational::zero();
                        lp.upper[j] = Some(Rational::one());
                        integer[j] = true;
                    }
                    "MI" | "FR" => {
                        return Err(mps_err(line, "variables without a finite lower bound are not supported".into()))
                    }
                    other => return Err(mps_err(line, format!("unknown bound type {other}"))),
                }
                if matches!(fields[0], "UI" | "LI") {
                    integer[j] = true;
                }
            }
        }
    }
    if section != Section::End {
        return Err(mps_err(text.lines().count(), "missing ENDATA".into()));
    }
    if !maximize {
        for c in &mut lp.objective {
            *c = -c.clone();
        }
    }
    for row in &mut lp.rows {
        row.coeffs.sort_by_key(|(j, _)| *j);
    }
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l.is_negative() && u.is_none()) {
        return Err(mps_err(0, "negative lower bound without an upper bound".into()));
    }
    Ok(MipProblem::new(lp, integer))
}

fn parse_sense(text: &str, line: usize) -> Result<bool> {
    match text {
        "MAX" | "MAXIMIZE" => Ok(true),
        "MIN" | "MINIMIZE" => Ok(false),
        other => Err(Error::Mps {
            line,
            message: format!("unknown objective sense {other}"),
        }),
    }
}

pub fn parse_mps(path: impl AsRef<Path>) -> Result<MipProblem> {
    parse_mps_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det_equiv::build_for_instance;
    use crate::fixtures::{example_one, example_two};
    use crate::mip::{solve_mip, MipParams};
    use crate::rational::{int, ratio};

    #[test]
    fn instance_round_trip() {
        for instance in [example_one(), example_two()] {
            let text = instance_to_json(&instance);
            assert_eq!(parse_instance(&text).unwrap(), instance);
            assert_eq!(instance_to_json(&parse_instance(&text).unwrap()), text);
        }
    }

    #[test]
    fn probability_sum_is_checked() {
        let text = instance_to_json(&example_one()).replace("\"3/10\"", "\"0.29\"");
        match parse_instance(&text) {
            Err(Error::InvalidInstance(v)) => assert_eq!(v[0].code, ViolationCode::ProbabilitySum),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = instance_to_json(&example_one()).replacen("\"alpha\"", "\"fooo\": 1,\n  \"alpha\"", 1);
        match parse_instance(&text) {
            Err(Error::Parse { line, message, .. }) => {
                assert!(line > 0);
                assert!(message.contains("fooo"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decimals_are_accepted() {
        let text = instance_to_json(&example_one()).replace("\"4/5\"", "\"0.8\"");
        assert_eq!(parse_instance(&text).unwrap().alpha, ratio(4, 5));
    }

    #[test]
    fn missing_print_fields() {
        let text = instance_to_json(&example_one()).replacen("\"m\": 2,", "", 1);
        match parse_instance(&text) {
            Err(Error::InvalidInstance(v)) => assert_eq!(v[0].code, ViolationCode::MissingPrintFields),
            other => panic!("{other:?}"),
        }
    }

    fn sorted(mut lp: LpProblem) -> LpProblem {
        for row in &mut lp.rows {
            row.coeffs.sort_by_key(|(j, _)| *j);
        }
        lp
    }

    #[test]
    fn mps_round_trip() {
        let (problem, _) = build_for_instance(&example_one(), true).unwrap();
        for options in [MpsOptions::default(), MpsOptions { negate_objective: true }] {
            let text = mps_string(&problem, "example", options).unwrap();
            let parsed = parse_mps_str(&text).unwrap();
            assert_eq!(sorted(parsed.lp), sorted(problem.lp.clone()));
            assert_eq!(parsed.integer, problem.integer);
        }
        let text = mps_string(&problem, "example", MpsOptions::default()).unwrap();
        assert!(text.contains("OBJSENSE\n    MAX"));
        assert!(text.contains("'INTORG'"));
        assert!(text.contains(" UP BND  y_1  1"));
        let solved = solve_mip(&parse_mps_str(&text).unwrap(), &MipParams::exact()).unwrap();
        assert_eq!(solved.objective, Some(ratio(26, 25)));
    }

    #[test]
    fn empty_model() {
        let problem = MipProblem::all_integer(LpProblem::default());
        let text = mps_string(&problem, "empty", MpsOptions::default()).unwrap();
        assert_eq!(parse_mps_str(&text).unwrap(), problem);
    }

    #[test]
    fn hand_written_mps() {
        let text = "\
NAME tiny
OBJSENSE
    MAX
ROWS
 N  z
 L  c1
 G  c2
COLUMNS
    MARKER 'MARKER' 'INTORG'
    x  z  3  c1  1
    MARKER 'MARKER' 'INTEND'
    y  z  2
    y  c1  1  c2  1
RHS
    RHS  c1  4  c2  0.5
BOUNDS
 UP BND  x  3
 UP BND  y  10
ENDATA
";
        let problem = parse_mps_str(text).unwrap();
        assert_eq!(problem.integer, vec![true, false]);
        assert_eq!(problem.lp.objective, vec![int(3), int(2)]);
        assert_eq!(problem.lp.rows[1].relation, Relation::Ge);
        assert_eq!(problem.lp.rows[1].rhs, ratio(1, 2));
        assert_eq!(problem.lp.upper, vec![Some(int(3)), Some(int(10))]);
        let result = solve_mip(&problem, &MipParams::exact()).unwrap();
        assert_eq!(result.objective, Some(int(11)));
    }

    #[test]
    fn unsupported_sections_are_named() {
        let text = "NAME x\nROWS\n N obj\nRANGES\n    R r 1\nENDATA\n";
        match parse_mps_str(text) {
            Err(Error::UnsupportedMpsSection(name)) => assert_eq!(name, "RANGES"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn solution_round_trip_and_revalidation() {
        let instance = example_one();
        let decision = FirstStageDecision {
            items: vec![0, 0],
            printers: 1,
            material: 2,
        };
        let plans = vec![
            PrintPlan {
                scenario: 0,
                matched: vec![0, 0],
                prints: vec![vec![1], vec![0]],
            },
            PrintPlan {
                scenario: 1,
                matched: vec![0, 0],
                prints: vec![vec![0], vec![1]],
            },
        ];
        let solution = Solution {
            objective: ratio(26, 25),
            decision,
            plans,
            stats: SolverStats {
                status: "optimal_within_gap".into(),
                nodes: 3,
                branches: 1,
                gap: 0.0,
                best_bound: 1.04,
            },
        };
        let text = solution_to_json(&solution);
        assert!(text.contains("\"decimal\": \"1.040000\""));
        assert_eq!(parse_solution(&text, &instance).unwrap(), solution);

        let mut other = instance.clone();
        other.capacity.weight = 1;
        assert!(parse_solution(&text, &other).is_err());
        let mut other = instance.clone();
        other.alpha = ratio(1, 2);
        assert!(matches!(parse_solution(&text, &other), Err(Error::InvalidArgument(_))));
    }
}
