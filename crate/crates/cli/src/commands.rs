use std::fs;

use serde::Serialize;
use tdsec_core::attacks::{kpa_average, run_attack_measured, KpaReport, UNCERTIFIED};
use tdsec_core::bounds::{
    entropy_lower_bound, fano_ber_deviation, markov_failure_budget, sequence_error_bound, BoundReport, FailureBudget,
};
use tdsec_core::casebook::{biased_summary, locking_summary, reproduce_rows};
use tdsec_core::io::{ensemble_to_json, parse_ensemble, povm_to_json};
use tdsec_core::{
    build_biased_classical, build_locking_example, build_random_ensemble, compare_to_bounds, compute_d,
    compute_d_joint, AttackResult, AttackSpec, BitSubset, CqEnsemble, HermitianMatrix, Key, Method, Purity,
    SolverOptions, Target,
};

use crate::args::{
    AttackArgs, BoundsArgs, Builtin, CounterexampleArgs, CounterexampleName, EnsembleArgs, ExportArgs, MethodArg,
    TargetKind,
};
use crate::output::{Cell, Report, Table};

pub type CmdResult<T> = Result<T, String>;

fn core<T>(r: tdsec_core::Result<T>) -> CmdResult<T> {
    r.map_err(|e| e.to_string())
}

/// Largest key length the biased and ideal built-ins will enumerate.
const MAX_BUILTIN_BITS: usize = 16;

pub fn load_ensemble(args: &EnsembleArgs, seed: u64) -> CmdResult<CqEnsemble> {
    if let Some(path) = &args.input {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        return parse_ensemble(&text).map_err(|e| format!("{}: {e}", path.display()));
    }
    let n_bits = args.n_bits.unwrap_or(2);
    let builtin = args.builtin.expect("clap requires --builtin without --input");
    if builtin != Builtin::Biased && args.eps.is_some() {
        return Err("--eps only applies to --builtin biased".into());
    }
    if matches!(builtin, Builtin::Ideal | Builtin::Biased) && n_bits > MAX_BUILTIN_BITS {
        return Err(format!("--n-bits must be at most {MAX_BUILTIN_BITS} for this built-in"));
    }
    match builtin {
        Builtin::Locking => {
            if args.n_bits.is_some() || args.dim.is_some() {
                return Err("the locking ensemble has fixed size; drop --n-bits and --dim".into());
            }
            Ok(build_locking_example())
        }
        Builtin::Ideal => core(CqEnsemble::ideal(n_bits, HermitianMatrix::maximally_mixed(args.dim.unwrap_or(2)))),
        Builtin::Biased => {
            if args.dim.is_some() {
                return Err("the biased ensemble carries no quantum state; drop --dim".into());
            }
            let probs = core(build_biased_classical(n_bits, args.eps.unwrap_or(0.1)))?;
            core(CqEnsemble::with_common_state(n_bits, &probs, HermitianMatrix::identity(1)))
        }
        Builtin::Random => {
            let purity = if args.pure { Purity::Pure } else { Purity::Mixed };
            core(build_random_ensemble(n_bits, args.dim.unwrap_or(2), seed, purity))
        }
    }
}

#[derive(Serialize)]
struct ComputeD {
    n_bits: usize,
    dim: usize,
    d: f64,
    d_joint: Option<f64>,
    abs_difference: Option<f64>,
    note: Option<String>,
}

pub fn compute_d_cmd(ens: &CqEnsemble) -> Report {
    let d = compute_d(ens);
    let (d_joint, note) = match compute_d_joint(ens) {
        Ok(j) => (Some(j), None),
        Err(e) => (None, Some(format!("joint-state cross-check skipped: {e}"))),
    };
    let out = ComputeD {
        n_bits: ens.n_bits(),
        dim: ens.dim(),
        d,
        d_joint,
        abs_difference: d_joint.map(|j| (j - d).abs()),
        note: note.clone(),
    };
    let mut t = Table::fields();
    t.field("n_bits", out.n_bits as f64);
    t.field("dim", out.dim as f64);
    t.field("d", d);
    t.field("d_joint", d_joint);
    t.field("abs_difference", out.abs_difference);
    let mut report = Report::new("compute-d", &out, t);
    report.notes.extend(note);
    report
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Map => Method::Map,
        MethodArg::Pgm => Method::Pgm,
        MethodArg::Iterative => Method::Iterative,
        MethodArg::PerBit => Method::PerBit,
        MethodArg::Helstrom => Method::Helstrom,
    }
}

fn subset(positions: &[usize], flag: &str) -> CmdResult<BitSubset> {
    if positions.is_empty() {
        return Err(format!("{flag} needs at least one bit position"));
    }
    core(BitSubset::new(positions.to_vec())).map_err(|e| format!("{flag}: {e}"))
}

fn target(args: &AttackArgs, n_bits: usize) -> CmdResult<Target> {
    let unused = |flag: &str, set: bool| if set { Err(format!("{flag} does not apply to --target {:?}", args.target).to_lowercase()) } else { Ok(()) };
    match args.target {
        TargetKind::Whole => {
            unused("--positions", !args.positions.is_empty())?;
            unused("--known", !args.known.is_empty())?;
            unused("--values", args.values.is_some())?;
            Ok(Target::WholeKey)
        }
        TargetKind::Subset => {
            unused("--known", !args.known.is_empty())?;
            unused("--values", args.values.is_some())?;
            Ok(Target::Subset { positions: subset(&args.positions, "--positions")? })
        }
        TargetKind::Kpa => {
            let known = subset(&args.known, "--known")?;
            let values: Key = args
                .values
                .as_deref()
                .ok_or("--target kpa needs --values")?
                .parse()
                .map_err(|e: tdsec_core::Error| format!("--values: {e}"))?;
            // Without --positions every unknown bit is targeted.
            let positions =
                if args.positions.is_empty() { known.complement(n_bits) } else { args.positions.clone() };
            Ok(Target::Kpa { known, values, target: subset(&positions, "--positions")? })
        }
    }
}

#[derive(Serialize)]
struct AttackOut {
    spec: AttackSpec,
    d: f64,
    result: AttackResult,
    /// For known-plaintext attacks: the same attack for every value of the known bits.
    kpa: Option<KpaReport>,
}

fn result_fields(t: &mut Table, prefix: &str, r: &AttackResult) {
    t.field(format!("{prefix}success_prob"), r.success_prob);
    t.field(format!("{prefix}ber"), r.ber);
    for (i, e) in r.per_bit_error.iter().enumerate() {
        t.field(format!("{prefix}per_bit_error[{i}]"), *e);
    }
    if r.certificate_residual.is_some() {
        t.field(format!("{prefix}certificate_residual"), r.certificate_residual);
        t.field(format!("{prefix}converged"), r.converged);
        t.field(format!("{prefix}iterations"), r.iterations.map(|n| n as f64));
    }
}

pub fn attack_cmd(args: &AttackArgs, seed: u64, opts: &SolverOptions) -> CmdResult<Report> {
    let ens = load_ensemble(&args.ensemble, seed)?;
    let spec = core(AttackSpec::new(target(args, ens.n_bits())?, method(args.method)))?;
    let (result, povm) = core(run_attack_measured(&ens, &spec, opts))?;
    let kpa = match &spec.target {
        Target::Kpa { known, target, .. } => Some(core(kpa_average(&ens, known, target, spec.method, opts))?),
        _ => None,
    };
    if let Some(path) = &args.povm_out {
        let povm = povm.ok_or("per-bit attacks use a separate measurement per bit; no single POVM to write")?;
        fs::write(path, povm_to_json(&povm) + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }

    let mut t = Table::fields();
    t.field("method", spec.method.as_str());
    t.field("d", compute_d(&ens));
    result_fields(&mut t, "", &result);
    let mut unconverged = !result.is_certified();
    if let Some(kpa) = &kpa {
        t.field("kpa.average_success", kpa.average_success);
        t.field("kpa.best_case_success", kpa.best_case_success);
        for case in &kpa.cases {
            t.field(format!("kpa[{}].prob", case.values), case.prob);
            t.field(format!("kpa[{}].success_prob", case.values), case.result.success_prob);
            unconverged |= !case.result.is_certified();
        }
    }
    let out = AttackOut { spec, d: compute_d(&ens), result, kpa };
    let mut report = Report::new("attack", &out, t);
    report.unconverged = unconverged;
    Ok(report)
}

fn bound_table(rows: &[BoundReport]) -> Table {
    let mut t = Table::new(&["name", "value", "achieved", "holds", "formula", "note"]);
    for r in rows {
        t.push(vec![
            r.name.clone().into(),
            r.value.into(),
            r.achieved.into(),
            r.holds.into(),
            r.formula_ref.clone().into(),
            r.note.clone().into(),
        ]);
    }
    t
}

pub fn compare_cmd(ens: &CqEnsemble, opts: &SolverOptions) -> CmdResult<Report> {
    let rows = core(compare_to_bounds(ens, opts))?;
    let unconverged = rows.iter().any(|r| r.note.as_deref() == Some(UNCERTIFIED));
    let mut report = Report::new("compare", &rows, bound_table(&rows));
    report.unconverged = unconverged;
    Ok(report)
}

#[derive(Serialize)]
struct Rejected {
    name: String,
    reason: String,
}

#[derive(Serialize)]
struct BoundsOut {
    eps: f64,
    failure_budget: FailureBudget,
    bounds: Vec<BoundReport>,
    rejected: Vec<Rejected>,
}

pub fn bounds_cmd(args: &BoundsArgs) -> CmdResult<Report> {
    let eps = args.eps;
    if !(0.0..1.0).contains(&eps) {
        return Err(format!("--eps must satisfy 0 <= eps < 1 (got {eps}); the bounds are statements about small eps"));
    }
    let budget = core(markov_failure_budget(eps, args.uses))?;
    let mut bounds = vec![core(sequence_error_bound(args.n_bits, eps))?, core(fano_ber_deviation(eps))?];
    let mut rejected = Vec::new();
    if let Some(n) = args.entropy_n {
        match entropy_lower_bound(n, eps) {
            Ok(v) => bounds.push(
                BoundReport::new("key entropy lower bound", v, "n - eps (n + log2(1/eps))")
                    .input("eps", eps)
                    .input("n", f64::from(n)),
            ),
            Err(e) => rejected.push(Rejected { name: "key entropy lower bound".into(), reason: e.to_string() }),
        }
    }

    let mut t = Table::new(&["name", "value", "formula", "note"]);
    for (i, s) in budget.sigmas.iter().enumerate() {
        t.push(vec![format!("Markov threshold sigma_{}", i + 1).into(), (*s).into(), "eps^(1/(m+1))".into(), Cell::Empty]);
    }
    t.push(vec!["total failure probability".into(), budget.total_failure.into(), "(m+1) eps^(1/(m+1))".into(), Cell::Empty]);
    if let Some(exact) = budget.exact_two_level {
        t.push(vec!["exact one-use failure".into(), exact.into(), "sigma + eps/sigma - eps".into(), Cell::Empty]);
    }
    for b in &bounds {
        t.push(vec![b.name.clone().into(), b.value.into(), b.formula_ref.clone().into(), b.note.clone().into()]);
    }
    for r in &rejected {
        t.push(vec![r.name.clone().into(), Cell::Empty, "rejected".into(), r.reason.clone().into()]);
    }
    Ok(Report::new("bounds", &BoundsOut { eps, failure_budget: budget, bounds, rejected }, t))
}

pub fn reproduce_cmd() -> CmdResult<Report> {
    let rows = core(reproduce_rows())?;
    let mut t = Table::new(&["row", "formula", "eps", "value", "log2_value", "quoted", "note"]);
    for r in &rows {
        t.push(vec![
            r.label.clone().into(),
            r.formula.clone().into(),
            r.eps.into(),
            r.value.into(),
            r.log2_value.into(),
            r.quoted.clone().into(),
            r.note.clone().into(),
        ]);
    }
    Ok(Report::new("reproduce", &rows, t))
}

pub fn counterexample_cmd(args: &CounterexampleArgs, opts: &SolverOptions) -> CmdResult<Report> {
    let mut t = Table::fields();
    match args.name {
        CounterexampleName::Locking => {
            let s = core(locking_summary(opts))?;
            t.field("d", s.d);
            t.field("whole_key_success", s.whole_key_success);
            t.field("whole_key_residual", s.whole_key_residual);
            t.field("kpa_success", s.kpa_success);
            t.field("kpa_average_success", s.kpa_average_success);
            let verdict = s.verdict.clone();
            let unconverged = s.whole_key_residual.is_none_or(|r| r > opts.tol);
            let mut report = Report::new("counterexample", &s, t);
            report.notes.push(verdict);
            report.unconverged = unconverged;
            Ok(report)
        }
        CounterexampleName::Biased => {
            let s = core(biased_summary(args.n_bits, args.eps))?;
            t.field("n_bits", s.n_bits as f64);
            t.field("eps", s.eps);
            t.field("v_unhalved", s.v_unhalved);
            t.field("v_halved", s.v_halved);
            t.field("gain_fraction", s.gain_fraction);
            t.field("map_success", s.map_success);
            t.field("blind_success", s.blind_success);
            Ok(Report::new("counterexample", &s, t))
        }
    }
}

/// Returns the ensemble JSON, or writes it and returns nothing.
pub fn export_cmd(args: &ExportArgs, seed: u64) -> CmdResult<Option<String>> {
    let ens = load_ensemble(&args.ensemble, seed)?;
    let json = ensemble_to_json(&ens) + "\n";
    match &args.output {
        Some(path) => {
            fs::write(path, json).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            Ok(None)
        }
        None => Ok(Some(json)),
    }
}
