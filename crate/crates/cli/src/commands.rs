use friedrichs::galerkin::{refinement_verdict, FormMatrices, GalerkinError, GalerkinReport, GridSpec, Verdict};
use friedrichs::mellin::{self, KernelSpec, Kind, MellinError};
use friedrichs::predict::{self, ChannelVariant, CountResult, PredictError, Sign};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{GridArgs, KernelArg, PredictArgs, SelfcheckArgs, SigmaArgs, TableArgs, VerifyArgs};
use crate::report::{cell, Report};
use crate::{CliError, Command, EXIT_DISAGREEMENT, EXIT_NUMERICAL};

impl From<MellinError> for CliError {
    fn from(e: MellinError) -> Self {
        match e {
            MellinError::InvalidKernel(_) | MellinError::Domain(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::Domain(_) | PredictError::Parity { .. } => CliError::Validation(e.to_string()),
            PredictError::Mellin(m) => m.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<GalerkinError> for CliError {
    fn from(e: GalerkinError) -> Self {
        match e {
            GalerkinError::Spec(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub fn dispatch(cmd: &Command, _config: &Value) -> Result<Report, CliError> {
    match cmd {
        Command::Sigma(a) => sigma(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Verify(a) => verify(a),
        Command::Table(a) => table(a),
        Command::Selfcheck(a) => selfcheck(a),
    }
}

fn check_l(l: f64) -> Result<(), CliError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(CliError::Validation(format!("--l must be positive and finite, got {l}")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<(), CliError> {
    if d < 1 {
        return Err(CliError::Validation("--d must be at least 1".into()));
    }
    Ok(())
}

fn check_gamma(g: f64) -> Result<(), CliError> {
    if !g.is_finite() {
        return Err(CliError::Validation(format!("--gamma must be finite, got {g}")));
    }
    Ok(())
}

/// Threshold with the resonance convention `sigma = 0`.
fn sigma_or_zero(r: Result<f64, MellinError>) -> Result<(f64, bool), CliError> {
    match r {
        Ok(s) => Ok((s, false)),
        Err(MellinError::Resonance { .. }) => Ok((0.0, true)),
        Err(e) => Err(e.into()),
    }
}

fn sigma(a: &SigmaArgs) -> Result<Report, CliError> {
    check_l(a.l)?;
    check_d(a.d)?;
    let (s, resonant) = match (a.p, a.q) {
        (Some(p), Some(q)) => {
            let k = KernelSpec::bessel(p, q)?;
            if k.resonance(a.l).is_some() {
                (0.0, true)
            } else {
                sigma_or_zero(mellin::sigma_l(&k, a.l))?
            }
        }
        _ => sigma_or_zero(mellin::sigma_cs(a.d, a.l, a.kind))?,
    };
    let mut r = Report::new(json!({ "sigma": s, "resonant": resonant }), &["d", "kind", "l", "p", "q", "sigma", "resonant"]);
    r.rows.push(vec![
        a.d.to_string(),
        a.kind.to_string(),
        a.l.to_string(),
        a.p.map(|x| x.to_string()).unwrap_or_default(),
        a.q.map(|x| x.to_string()).unwrap_or_default(),
        s.to_string(),
        resonant.to_string(),
    ]);
    Ok(r)
}

/// Closed-form total: the d = 1 interval counts, or the channel-sum formulas with the infinite cases first.
pub fn closed_total(d: usize, l: f64, gamma: f64, kind: Kind) -> Result<CountResult, CliError> {
    if d == 1 {
        return Ok(predict::count_d1(l, gamma, kind)?);
    }
    let Some(sign) = Sign::of(gamma) else {
        return Ok(CountResult::Finite(0));
    };
    let (s, resonant) = sigma_or_zero(mellin::sigma_cs(d, l, kind))?;
    if resonant || gamma.abs() > s {
        return Ok(CountResult::Infinite);
    }
    Ok(predict::count_total_closed(d, l, sign, kind)?)
}

#[derive(Debug, Clone, Serialize)]
struct PredictRow {
    count: CountResult,
    variant_fr: CountResult,
    variant_bes: CountResult,
    sigma: f64,
    resonant: bool,
    unperturbed: bool,
}

fn predict_row(d: usize, l: f64, gamma: f64, kind: Kind) -> Result<PredictRow, CliError> {
    let (sigma, resonant) = sigma_or_zero(mellin::sigma_cs(d, l, kind))?;
    Ok(PredictRow {
        count: closed_total(d, l, gamma, kind)?,
        variant_fr: predict::count_total(d, l, gamma, kind, ChannelVariant::Fr)?,
        variant_bes: predict::count_total(d, l, gamma, kind, ChannelVariant::Bes)?,
        sigma,
        resonant,
        unperturbed: gamma == 0.0,
    })
}

fn predict_cmd(a: &PredictArgs) -> Result<Report, CliError> {
    check_l(a.l)?;
    check_d(a.d)?;
    check_gamma(a.gamma)?;
    let row = predict_row(a.d, a.l, a.gamma, a.kind)?;
    let mut r = Report::new(
        serde_json::to_value(&row).expect("row serializes"),
        &["d", "kind", "l", "gamma", "count", "variant_fr", "variant_bes", "sigma", "resonant", "unperturbed"],
    );
    r.rows.push(vec![
        a.d.to_string(),
        a.kind.to_string(),
        a.l.to_string(),
        a.gamma.to_string(),
        row.count.to_string(),
        row.variant_fr.to_string(),
        row.variant_bes.to_string(),
        row.sigma.to_string(),
        row.resonant.to_string(),
        row.unperturbed.to_string(),
    ]);
    Ok(r)
}

fn kernel_from(kind: KernelArg, p: Option<f64>, q: Option<f64>) -> Result<(KernelSpec, f64, f64), CliError> {
    let (p, q) = match kind {
        KernelArg::Cos => (-0.5, 0.5),
        KernelArg::Sin => (0.5, 0.5),
        KernelArg::Bessel => match (p, q) {
            (Some(p), Some(q)) => (p, q),
            _ => return Err(CliError::Validation("--kernel bessel needs --p and --q".into())),
        },
    };
    Ok((KernelSpec::bessel(p, q)?, p, q))
}

fn grid_specs(g: &GridArgs) -> Result<Vec<GridSpec>, CliError> {
    if !(g.window > 0.0) || !g.window.is_finite() {
        return Err(CliError::Validation(format!("--window must be positive, got {}", g.window)));
    }
    if g.levels < 3 {
        return Err(CliError::Validation(format!("--levels must be at least 3, got {}", g.levels)));
    }
    let mut specs = vec![GridSpec::from_log_bounds(-g.window, g.window, g.base_cells)?];
    for _ in 1..g.levels {
        let next = specs.last().unwrap().extend()?;
        specs.push(next);
    }
    Ok(specs)
}

fn verdict_text(v: Verdict) -> String {
    match v {
        Verdict::Finite(n) => format!("finite({n})"),
        Verdict::LikelyInfinite => "likely_infinite".into(),
        Verdict::Inconclusive => "inconclusive".into(),
    }
}

/// Whether a predicted count is consistent with a verdict; `None` when the verdict decides nothing.
fn agrees(v: Verdict, c: CountResult) -> Option<bool> {
    match (v, c) {
        (Verdict::Finite(n), CountResult::Finite(m)) => Some(n == m),
        (Verdict::LikelyInfinite, CountResult::Infinite) => Some(true),
        (Verdict::Inconclusive, _) => None,
        _ => Some(false),
    }
}

/// A predictor contradicted by the numerics.
#[derive(Debug, Clone, Serialize)]
pub struct Disagreement {
    pub l: f64,
    pub gamma: f64,
    pub predictor: String,
    pub predicted: CountResult,
    pub numerical: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub p: f64,
    pub q: f64,
    pub l: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub resonant: bool,
    pub count_fr: CountResult,
    pub count_bes: CountResult,
    pub report: GalerkinReport,
    pub matching: Vec<String>,
    pub contradicted: Vec<String>,
}

impl VerifyOutcome {
    pub fn disagreements(&self) -> Vec<Disagreement> {
        self.contradicted
            .iter()
            .map(|name| Disagreement {
                l: self.l,
                gamma: self.gamma,
                predictor: name.clone(),
                predicted: if name == "count_fr" { self.count_fr } else { self.count_bes },
                numerical: verdict_text(self.report.verdict),
            })
            .collect()
    }
}

/// Runs the sweep for `t^q J_p(t)` and compares the verdict with both d = 1 predictors.
pub fn verify_case(p: f64, q: f64, l: f64, gamma: f64, specs: &[GridSpec], eps: &[f64]) -> Result<VerifyOutcome, CliError> {
    let kernel = KernelSpec::bessel(p, q)?;
    let resonant = kernel.resonance(l).is_some();
    let sigma = if resonant { 0.0 } else { sigma_or_zero(mellin::sigma_l(&kernel, l))?.0 };
    let count_fr = predict::count_fr(&predict::bessel_expansion_for(p, q, l), l, gamma, sigma)?;
    let count_bes = predict::count_bes(p, q, l, gamma, sigma)?;
    let report = refinement_verdict(specs, &kernel, l, gamma, eps)?;
    let mut matching = Vec::new();
    let mut contradicted = Vec::new();
    for (name, c) in [("count_fr", count_fr), ("count_bes", count_bes)] {
        match agrees(report.verdict, c) {
            Some(true) => matching.push(name.to_string()),
            Some(false) => contradicted.push(name.to_string()),
            None => {}
        }
    }
    Ok(VerifyOutcome { p, q, l, gamma, sigma, resonant, count_fr, count_bes, report, matching, contradicted })
}

const ROW_HEADER: [&str; 6] = ["cells", "ln_x_min", "ln_x_max", "epsilon", "negative_count", "eigen_count"];

fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    check_l(a.l)?;
    check_gamma(a.gamma)?;
    let (kernel, p, q) = kernel_from(a.kernel, a.p, a.q)?;
    let specs = grid_specs(&a.grid)?;
    let o = verify_case(p, q, a.l, a.gamma, &specs, &a.grid.eps)?;
    if let Some(dir) = &a.dump_dir {
        let eps = a.grid.eps.iter().cloned().fold(f64::INFINITY, f64::min);
        for s in &specs {
            let f = FormMatrices::assemble(s, &kernel, a.l)?;
            f.write_dumps(&dir.join(format!("cells_{}", s.cells)), a.gamma, eps, o.report.ln_reference)?;
        }
    }
    let mut r = Report::new(outcome_json(&o), &ROW_HEADER);
    for row in &o.report.rows {
        r.rows.push(vec![
            row.cells.to_string(),
            row.ln_x_min.to_string(),
            row.ln_x_max.to_string(),
            row.epsilon.to_string(),
            row.negative_count.to_string(),
            row.eigen_count.map(|c| c.to_string()).unwrap_or_default(),
        ]);
    }
    r.notes = vec![
        ("verdict".into(), verdict_text(o.report.verdict)),
        ("count_fr".into(), o.count_fr.to_string()),
        ("count_bes".into(), o.count_bes.to_string()),
        ("matching".into(), o.matching.join(" ")),
        ("contradicted".into(), o.contradicted.join(" ")),
    ];
    Ok(r)
}

fn outcome_json(o: &VerifyOutcome) -> Value {
    json!({
        "kernel": { "p": o.p, "q": o.q },
        "l": o.l,
        "gamma": o.gamma,
        "sigma": o.sigma,
        "resonant": o.resonant,
        "verdict": o.report.verdict,
        "rows": o.report.rows,
        "monotone": o.report.monotone,
        "epsilon_monotone": o.report.epsilon_monotone,
        "eigen_agrees": o.report.eigen_agrees,
        "predictions": { "count_fr": o.count_fr, "count_bes": o.count_bes },
        "matching": o.matching,
        "contradicted": o.contradicted,
    })
}

fn range(lo: f64, hi: f64, step: f64, name: &str) -> Result<Vec<f64>, CliError> {
    if !lo.is_finite() || !hi.is_finite() || !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Validation(format!("{name} range needs finite bounds and a positive step")));
    }
    if lo > hi {
        return Err(CliError::Validation(format!("{name} range is empty: {lo} > {hi}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Validation(format!("{name} range has too many points")));
    }
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

#[derive(Debug, Clone, Serialize)]
struct TableRow {
    l: f64,
    gamma: f64,
    sigma: f64,
    resonant: bool,
    count_fr: CountResult,
    count_bes: CountResult,
    count_total_closed: Option<CountResult>,
    unperturbed: bool,
}

fn table(a: &TableArgs) -> Result<Report, CliError> {
    check_d(a.d)?;
    let ls = range(a.l_min, a.l_max, a.l_step, "l")?;
    let gs = range(a.gamma_min, a.gamma_max, a.gamma_step, "gamma")?;
    if !(a.l_min > 0.0) {
        return Err(CliError::Validation(format!("--l-min must be positive, got {}", a.l_min)));
    }
    let cells: Vec<(f64, f64)> = ls.iter().flat_map(|l| gs.iter().map(move |g| (*l, *g))).collect();
    let rows: Vec<TableRow> = cells
        .par_iter()
        .map(|&(l, g)| {
            let p = predict_row(a.d, l, g, a.kind).map_err(|e| match e {
                CliError::Numerical(m) => CliError::Numerical(format!("{m} (l = {l}, gamma = {g})")),
                other => other,
            })?;
            Ok(TableRow {
                l,
                gamma: g,
                sigma: p.sigma,
                resonant: p.resonant,
                count_fr: p.variant_fr,
                count_bes: p.variant_bes,
                count_total_closed: (a.d >= 2).then_some(p.count),
                unperturbed: p.unperturbed,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let header = ["l", "gamma", "sigma", "resonant", "count_fr", "count_bes", "count_total_closed", "unperturbed"];
    let mut r = Report::new(json!({ "rows": rows }), &header);
    for row in &rows {
        let v = serde_json::to_value(row).expect("row serializes");
        r.rows.push(header.iter().map(|k| cell(&v[*k])).collect());
    }
    Ok(r)
}

/// `(l, gamma)` cases of the self-check, all for the cosine kernel.
pub fn selfcheck_cases() -> Vec<(f64, f64)> {
    vec![(1.0, -0.25), (1.0, 0.25), (0.5, 0.1), (0.5, -0.1), (1.0, -0.6), (3.0, -0.45)]
}

fn selfcheck(a: &SelfcheckArgs) -> Result<Report, CliError> {
    let specs = grid_specs(&a.grid)?;
    let outcomes: Vec<VerifyOutcome> = selfcheck_cases()
        .par_iter()
        .map(|&(l, g)| verify_case(-0.5, 0.5, l, g, &specs, &a.grid.eps))
        .collect::<Result<_, _>>()?;
    let disagreements: Vec<Disagreement> = outcomes.iter().flat_map(|o| o.disagreements()).collect();
    let structural_ok =
        outcomes.iter().all(|o| o.report.monotone && o.report.epsilon_monotone && o.report.eigen_agrees);
    let cases: Vec<Value> = outcomes.iter().map(outcome_json).collect();
    let mut r = Report::new(
        json!({ "cases": cases, "disagreements": disagreements, "structural_ok": structural_ok }),
        &["l", "gamma", "verdict", "count_fr", "count_bes", "matching", "contradicted", "monotone", "eigen_agrees"],
    );
    for o in &outcomes {
        r.rows.push(vec![
            o.l.to_string(),
            o.gamma.to_string(),
            verdict_text(o.report.verdict),
            o.count_fr.to_string(),
            o.count_bes.to_string(),
            o.matching.join(" "),
            o.contradicted.join(" "),
            o.report.monotone.to_string(),
            o.report.eigen_agrees.to_string(),
        ]);
    }
    for d in &disagreements {
        r.notes.push((
            "disagreement".into(),
            format!("l={} gamma={} {} predicts {} numerics give {}", d.l, d.gamma, d.predictor, d.predicted, d.numerical),
        ));
    }
    r.exit_code = if !disagreements.is_empty() {
        EXIT_DISAGREEMENT
    } else if !structural_ok {
        EXIT_NUMERICAL
    } else {
        crate::EXIT_OK
    };
    Ok(r)
}
