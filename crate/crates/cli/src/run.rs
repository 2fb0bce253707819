//! Command implementations. Each returns a process exit code:
//! 0 success / feasible / plan accepted, 1 negative verdict, 2 error.

use std::fs;
use std::path::Path;

use layercast_core::capacity::check_feasibility;
use layercast_core::model::{parse_instance, Instance};
use layercast_core::oracle::oracle_feasible_with_limit;
use layercast_core::plan::{plan_from_json, plan_to_json};
use layercast_core::rational::Rational;
use layercast_core::scheduler::{schedule, ScheduleOutcome};
use layercast_core::verifier::verify_plan;

use crate::random::{sample_instance, InstanceBounds, SplitMix64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

fn fail(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    EXIT_ERROR
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

pub fn cmd_check(instance_path: &Path) -> i32 {
    let inst = match load_instance(instance_path) {
        Ok(inst) => inst,
        Err(e) => return fail(e),
    };
    let report = check_feasibility(&inst);
    print!("{}", report.to_json());
    if report.feasible {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

pub fn cmd_plan(instance_path: &Path, out: Option<&Path>) -> i32 {
    let inst = match load_instance(instance_path) {
        Ok(inst) => inst,
        Err(e) => return fail(e),
    };
    match schedule(&inst) {
        Ok(ScheduleOutcome::Plan(plan)) => {
            let text = plan_to_json(&inst, &plan);
            match emit(out, &text) {
                Ok(()) => EXIT_OK,
                Err(e) => fail(e),
            }
        }
        Ok(ScheduleOutcome::Infeasible(report)) => {
            print!("{}", report.to_json());
            EXIT_NEGATIVE
        }
        Err(e) => fail(e),
    }
}

pub fn cmd_verify(instance_path: &Path, plan_path: &Path) -> i32 {
    let inst = match load_instance(instance_path) {
        Ok(inst) => inst,
        Err(e) => return fail(e),
    };
    let plan_text = match fs::read_to_string(plan_path) {
        Ok(text) => text,
        Err(e) => return fail(format!("cannot read {}: {e}", plan_path.display())),
    };
    let plan = match plan_from_json(&inst, &plan_text) {
        Ok(plan) => plan,
        Err(e) => return fail(format!("{}: {e}", plan_path.display())),
    };
    let report = verify_plan(&inst, &plan);
    print!("{}", report.to_json(&inst));
    if report.ok {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

pub fn cmd_oracle(instance_path: &Path, limit: usize) -> i32 {
    let inst = match load_instance(instance_path) {
        Ok(inst) => inst,
        Err(e) => return fail(e),
    };
    match oracle_feasible_with_limit(&inst, limit) {
        Ok(feasible) => {
            println!("{{\"feasible\": {feasible}}}");
            if feasible {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            }
        }
        Err(e) => fail(e),
    }
}

pub fn cmd_compare(seed: u64, count: usize, bounds: &InstanceBounds) -> i32 {
    if bounds.max_peers > layercast_core::oracle::DEFAULT_PEER_LIMIT {
        return fail(format!(
            "--max-peers {} exceeds the oracle enumeration limit {}",
            bounds.max_peers,
            layercast_core::oracle::DEFAULT_PEER_LIMIT
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let mut agree = 0usize;
    let mut plan_failures = 0usize;
    for index in 0..count {
        let inst = sample_instance(&mut rng, bounds);
        let closed_form = check_feasibility(&inst).feasible;
        let oracle = match oracle_feasible_with_limit(&inst, bounds.max_peers) {
            Ok(verdict) => verdict,
            Err(e) => return fail(e),
        };
        if closed_form == oracle {
            agree += 1;
        } else {
            eprintln!(
                "disagreement at instance {index}: closed form {closed_form}, oracle {oracle}"
            );
        }
        match schedule(&inst) {
            Ok(ScheduleOutcome::Plan(plan)) => {
                if !closed_form {
                    plan_failures += 1;
                    eprintln!("instance {index}: plan produced for an infeasible instance");
                } else if !verify_plan(&inst, &plan).ok {
                    plan_failures += 1;
                    eprintln!("instance {index}: plan rejected by the verifier");
                }
            }
            Ok(ScheduleOutcome::Infeasible(_)) => {
                if closed_form {
                    plan_failures += 1;
                    eprintln!("instance {index}: no plan for a feasible instance");
                }
            }
            Err(e) => {
                plan_failures += 1;
                eprintln!("instance {index}: scheduling error: {e}");
            }
        }
    }
    println!("seed: {seed}");
    println!("{agree}/{count} agree, {plan_failures} plan failures");
    if agree == count && plan_failures == 0 {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

pub enum SweepFormat {
    Csv,
    Json,
}

pub struct SweepSpec {
    pub vary_a: usize,
    pub vary_b: usize,
    pub from: Rational,
    pub to: Rational,
    pub step: Rational,
}

pub fn cmd_sweep(
    instance_path: &Path,
    spec: &SweepSpec,
    format: SweepFormat,
    out: Option<&Path>,
) -> i32 {
    let inst = match load_instance(instance_path) {
        Ok(inst) => inst,
        Err(e) => return fail(e),
    };
    let n = inst.layer_count();
    let (a, b) = (spec.vary_a, spec.vary_b);
    if a < 1 || a > n || b < 1 || b > n || a == b {
        return fail(format!(
            "sweep layers must be distinct and within 1..={n}, got {a} and {b}"
        ));
    }
    if !spec.step.is_positive() || spec.from > spec.to || spec.from.is_negative() {
        return fail("sweep range needs 0 <= from <= to and a positive step");
    }
    let mut grid = Vec::new();
    let mut value = spec.from.clone();
    while value <= spec.to {
        grid.push(value.clone());
        value = &value + &spec.step;
    }

    let mut csv = String::from(&format!("L{a},L{b},feasible,required_total\n"));
    let mut json_rows = Vec::new();
    for va in &grid {
        for vb in &grid {
            let mut rates = inst.layer_rates().to_vec();
            rates[a - 1] = va.clone();
            rates[b - 1] = vb.clone();
            let scaled = inst
                .with_layer_rates(rates)
                .expect("sweep rates stay valid");
            let report = check_feasibility(&scaled);
            let required = report
                .required_total
                .as_ref()
                .map(Rational::to_string)
                .unwrap_or_default();
            csv.push_str(&format!("{va},{vb},{},{required}\n", report.feasible));
            json_rows.push(format!(
                "{{\"rate_a\": \"{va}\", \"rate_b\": \"{vb}\", \"feasible\": {}, \
                 \"required_total\": {}}}",
                report.feasible,
                if required.is_empty() {
                    "null".to_string()
                } else {
                    format!("\"{required}\"")
                }
            ));
        }
    }
    let content = match format {
        SweepFormat::Csv => csv,
        SweepFormat::Json => format!("[\n  {}\n]\n", json_rows.join(",\n  ")),
    };
    match emit(out, &content) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(e),
    }
}
