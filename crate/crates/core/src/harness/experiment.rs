//! One experiment end to end: least metastability rank, the bound, the
//! realizer, and the cross-checks between them.

use super::config::{ConfigError, Experiment, RealizerMode, Scheme};
use super::sunny::{check_sunny, compare_with_projection, SunnyReport};
use super::verify::{interval_is_stable, least_endpoint_rank, verify_metastability};
use crate::bound::{run_realizer, theta_bound, BoundParams, Claim2Constants, ConstantsBundle, RealizerInstance};
use crate::eval::{Budget, EvalError};
use crate::num::{fmt_q, nat, nat_to_u64, Nat};
use crate::spaces::h_map;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

/// Literal written in place of a bound that ran out of fuel.
pub const FUEL_EXCEEDED: &str = "FUEL_EXCEEDED";
pub const SKIPPED: &str = "SKIPPED";
pub const NONE: &str = "NONE";

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Eval(EvalError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => e.fmt(f),
            HarnessError::Eval(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<EvalError> for HarnessError {
    fn from(e: EvalError) -> Self {
        HarnessError::Eval(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// A finding that is not a failure (e.g. bound not evaluated within fuel).
    Note,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

fn check(name: &str, outcome: Outcome, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        outcome,
        detail: detail.into(),
    }
}

/// Wall-clock microseconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub least_n_us: u64,
    pub theta_us: u64,
    pub realizer_us: u64,
    pub checks_us: u64,
    pub total_us: u64,
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetastabilityReport {
    pub instance: String,
    pub epsilon: String,
    pub g_spec: String,
    /// Decimal, or `NONE` when the horizon was exhausted.
    pub least_N: String,
    /// Decimal, `FUEL_EXCEEDED`, or `SKIPPED`.
    pub theta: String,
    /// Decimal, `FUEL_EXCEEDED`, or `SKIPPED`.
    pub realizer_N: String,
    pub pairwise_check: bool,
    pub horizon: u64,
    pub theta_applications: u64,
    pub theta_stage: String,
    pub realizer_applications: u64,
    pub realizer_constants: String,
    pub checks: Vec<Check>,
    pub sunny: Option<SunnyReport>,
    pub timings: Timings,
}

impl MetastabilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn least_n(&self) -> Option<u64> {
        self.least_N.parse().ok()
    }

    pub fn theta_value(&self) -> Option<Nat> {
        self.theta.parse().ok()
    }

    pub fn realizer_n(&self) -> Option<Nat> {
        self.realizer_N.parse().ok()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

/// Bound evaluation. `Ok(None)` when not applicable to the scheme.
pub fn run_bound(e: &Experiment) -> Result<Option<crate::bound::ThetaOutcome>, HarnessError> {
    let Scheme::Resolvent { schedule, .. } = &e.scheme else {
        return Ok(None);
    };
    let (eps, g) = required(e)?;
    let params = BoundParams {
        b: e.b(),
        eta: e.eta.clone(),
        tau: e.tau.clone(),
        theta: e.theta.clone(),
        alpha: schedule.alpha_fn(),
        gamma: schedule.gamma_fn(),
        eps: eps.clone(),
        g: g.majorant(),
    };
    Ok(Some(theta_bound(&params, &e.fuel)?))
}

fn required(e: &Experiment) -> Result<(&crate::num::Q, &super::GSpec), ConfigError> {
    let eps = e.eps.as_ref().ok_or_else(|| ConfigError {
        path: "epsilon".into(),
        message: "required (set it in the config or pass --epsilon)".into(),
    })?;
    let g = e.g.as_ref().ok_or_else(|| ConfigError {
        path: "g".into(),
        message: "required (set it in the config or pass --g)".into(),
    })?;
    Ok((eps, g))
}

/// The realizer constants for the configured mode.
pub fn realizer_constants(e: &Experiment) -> Result<Option<Claim2Constants>, HarnessError> {
    let Scheme::Resolvent { schedule, .. } = &e.scheme else {
        return Ok(None);
    };
    let (eps, _) = required(e)?;
    Ok(match e.realizer.mode {
        RealizerMode::Skip => None,
        RealizerMode::Derived => {
            let bundle = ConstantsBundle::new(e.b(), eps, &e.eta, &e.tau, &e.theta, &schedule.gamma_fn())?;
            Some(Claim2Constants::from_bundle(&bundle))
        }
        RealizerMode::Custom => {
            let c = e.realizer.custom.as_ref().expect("checked at build");
            Some(Claim2Constants::custom(eps.clone(), c.delta.clone(), c.u.clone(), c.nu1.clone(), c.nu2.clone()))
        }
    })
}

/// Builds the realizer instance; `None` when the scheme is not a resolvent path.
pub fn realizer_instance(e: &Experiment) -> Result<Option<RealizerInstance>, HarnessError> {
    let Scheme::Resolvent { path, schedule, anchor } = &e.scheme else {
        return Ok(None);
    };
    let (_, g) = required(e)?;
    let h_t = h_map(&e.map).map_err(|err| HarnessError::Eval(EvalError::Domain(err.to_string())))?;
    Ok(Some(RealizerInstance {
        x: path.clone(),
        anchor: anchor.clone(),
        h_t,
        g: g.natfn(&e.seq),
        alpha: schedule.alpha_fn(),
        b: e.b(),
    }))
}

pub fn run_experiment(e: &Experiment) -> Result<MetastabilityReport, HarnessError> {
    let start = Instant::now();
    let (eps, gspec) = required(e)?;
    let g = gspec.natfn(&e.seq);
    let mut checks = vec![];
    let mut timings = Timings::default();

    let t0 = Instant::now();
    let least = verify_metastability(e.seq.as_ref(), eps, &g, e.horizon)?;
    timings.least_n_us = micros(t0);
    checks.push(match least {
        Some(n) => check("least_N", Outcome::Pass, format!("all pairs in [{n}, {n}+g({n})] within ε")),
        None => check("least_N", Outcome::Note, format!("no N ≤ {} found; horizon exhausted", e.horizon)),
    });

    // Bound.
    let t0 = Instant::now();
    let (theta, theta_apps, theta_stage) = match run_bound(e) {
        Ok(Some(t)) => (t.theta.clone(), t.applications, t.stage.clone()),
        Ok(None) => (SKIPPED.to_string(), 0, "not applicable to this scheme".into()),
        Err(HarnessError::Eval(EvalError::FuelExceeded { applications, stage, .. })) => (FUEL_EXCEEDED.to_string(), applications, stage),
        Err(err) => return Err(err),
    };
    timings.theta_us = micros(t0);
    match (theta.parse::<Nat>(), least) {
        (Ok(th), Some(n)) => checks.push(check(
            "theta_dominates_least_N",
            if nat(n) <= th { Outcome::Pass } else { Outcome::Fail },
            format!("least_N = {n}, theta = {th}"),
        )),
        (Ok(_), None) => checks.push(check("theta_dominates_least_N", Outcome::Note, "least_N not found")),
        (Err(_), _) => checks.push(check(
            "theta_dominates_least_N",
            Outcome::Note,
            if theta == FUEL_EXCEEDED {
                format!("bound not evaluated within fuel {} (stage `{theta_stage}`)", e.fuel)
            } else {
                "bound skipped".to_string()
            },
        )),
    }

    // Realizer.
    let t0 = Instant::now();
    let mut realizer_n = SKIPPED.to_string();
    let mut realizer_apps = 0;
    let mut realizer_label = String::new();
    let constants = if e.space.is_hilbert() { realizer_constants(e) } else { Ok(None) };
    match (constants, realizer_instance(e)?) {
        (Ok(Some(c)), Some(inst)) => {
            realizer_label = c.label.clone();
            let budget = Budget::from_nat(&e.realizer_fuel());
            match run_realizer(&inst, &c, &budget) {
                Ok(run) => {
                    realizer_apps = run.report.applications;
                    realizer_n = run.witness.to_string();
                    let all = run.output.transcripts.iter().all(|t| t.holds);
                    let ok = run.report.endpoint_holds && all;
                    checks.push(check(
                        "realizer_endpoint",
                        if ok { Outcome::Pass } else { Outcome::Fail },
                        format!(
                            "N = {}, g(N) = {}, ‖x_N − x_(N+g(N))‖² = {}, {} A-instances re-verified",
                            run.report.witness_n,
                            run.report.g_of_n,
                            run.report.gap_sq,
                            run.output.transcripts.len()
                        ),
                    ));
                    let wn = nat_to_u64(&run.witness);
                    let le = least_endpoint_rank(e.seq.as_ref(), eps, &g, wn)?;
                    checks.push(check(
                        "least_endpoint_rank_le_realizer_N",
                        if le.is_some() { Outcome::Pass } else { Outcome::Fail },
                        format!("least endpoint rank {le:?}, realizer N = {wn}"),
                    ));
                    let len = nat_to_u64(&g.call(&run.witness)?);
                    let pw = interval_is_stable(e.seq.as_ref(), eps, wn, len)?;
                    checks.push(check(
                        "realizer_N_pairwise",
                        if pw { Outcome::Pass } else { Outcome::Note },
                        if pw { "all pairs within ε" } else { "endpoint-only witness" },
                    ));
                }
                Err(err) => {
                    realizer_apps = budget.used();
                    if err.is_fuel() {
                        realizer_n = FUEL_EXCEEDED.to_string();
                    }
                    checks.push(check("realizer_endpoint", Outcome::Fail, err.to_string()));
                }
            }
        }
        (Err(err), _) => {
            realizer_n = if matches!(&err, HarnessError::Eval(x) if x.is_fuel()) { FUEL_EXCEEDED.into() } else { SKIPPED.into() };
            checks.push(check("realizer_endpoint", Outcome::Fail, err.to_string()));
        }
        (Ok(None), _) | (_, None) => {
            let why = if !e.space.is_hilbert() {
                "realizer refuses p ≠ 2; bound-only mode"
            } else if !matches!(e.scheme, Scheme::Resolvent { .. }) {
                "realizer applies to resolvent paths only"
            } else {
                "realizer.mode = skip"
            };
            checks.push(check("realizer_endpoint", Outcome::Note, why));
        }
    }
    timings.realizer_us = micros(t0);

    // Scheme-level checks.
    let t0 = Instant::now();
    if let Scheme::Resolvent { path, schedule, .. } = &e.scheme {
        let mut bad = vec![];
        for n in 0..=e.tol.residual_prefix {
            if !path.residual_law_holds(&nat(n))? {
                bad.push(n);
            }
        }
        checks.push(check(
            "residual_law",
            if bad.is_empty() { Outcome::Pass } else { Outcome::Fail },
            if bad.is_empty() {
                format!("‖x_n − Tx_n‖ ≤ (1−t_n)b + 2·tol for n ≤ {}", e.tol.residual_prefix)
            } else {
                format!("violated at n ∈ {bad:?}")
            },
        ));
        let v = schedule.check_contracts(1, e.tol.residual_prefix.max(1), 4);
        checks.push(check(
            "schedule_contracts",
            if v.is_empty() { Outcome::Pass } else { Outcome::Fail },
            v.first().cloned().unwrap_or_else(|| "α/γ contracts hold on the prefix".into()),
        ));
    }
    let sunny = match &e.sunny {
        Some(s) => {
            let mut r = check_sunny(&e.space, &e.map, &s.anchors, &s.fixed_points, &s.t_close, &e.opts)
                .map_err(|m| HarnessError::Eval(EvalError::Solver(m)))?;
            if s.projection {
                compare_with_projection(&mut r, &e.space, &e.map, &s.anchors, &s.t_close, &e.opts, &e.tol.projection)
                    .map_err(|m| HarnessError::Eval(EvalError::Solver(m)))?;
            }
            checks.push(check(
                "sunny",
                if r.passed { Outcome::Pass } else { Outcome::Fail },
                format!("{} pairings, {} projections, slack {}", r.entries.len(), r.projections.len(), r.slack),
            ));
            Some(r)
        }
        None => None,
    };
    timings.checks_us = micros(t0);
    timings.total_us = micros(start);

    Ok(MetastabilityReport {
        instance: e.name.clone(),
        epsilon: fmt_q(eps),
        g_spec: gspec.to_string(),
        least_N: least.map_or(NONE.to_string(), |n| n.to_string()),
        theta,
        realizer_N: realizer_n,
        pairwise_check: least.is_some(),
        horizon: e.horizon,
        theta_applications: theta_apps,
        theta_stage,
        realizer_applications: realizer_apps,
        realizer_constants: realizer_label,
        checks,
        sunny,
        timings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (json|csv)")),
        }
    }
}

/// The CSV projection of a report.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub instance: String,
    pub epsilon: String,
    pub g_spec: String,
    pub least_N: String,
    pub theta: String,
    pub realizer_N: String,
    pub pairwise_check: bool,
}

pub const CSV_COLUMNS: [&str; 7] = ["instance", "epsilon", "g_spec", "least_N", "theta", "realizer_N", "pairwise_check"];

impl From<&MetastabilityReport> for CsvRow {
    fn from(r: &MetastabilityReport) -> Self {
        CsvRow {
            instance: r.instance.clone(),
            epsilon: r.epsilon.clone(),
            g_spec: r.g_spec.clone(),
            least_N: r.least_N.clone(),
            theta: r.theta.clone(),
            realizer_N: r.realizer_N.clone(),
            pairwise_check: r.pairwise_check,
        }
    }
}

/// JSON (one object, or an array for several reports) or CSV with a header.
pub fn export_reports(reports: &[MetastabilityReport], format: Format) -> Result<Vec<u8>, String> {
    match format {
        Format::Json => {
            let mut v = if reports.len() == 1 {
                serde_json::to_vec_pretty(&reports[0])
            } else {
                serde_json::to_vec_pretty(reports)
            }
            .map_err(|e| e.to_string())?;
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(vec![]);
            if reports.is_empty() {
                w.write_record(CSV_COLUMNS).map_err(|e| e.to_string())?;
            }
            for r in reports {
                w.serialize(CsvRow::from(r)).map_err(|e| e.to_string())?;
            }
            w.into_inner().map_err(|e| e.to_string())
        }
    }
}

pub fn export_report(report: &MetastabilityReport, format: Format) -> Result<Vec<u8>, String> {
    export_reports(std::slice::from_ref(report), format)
}

pub fn import_report_json(bytes: &[u8]) -> Result<MetastabilityReport, String> {
    serde_json::from_slice(bytes).map_err(|e| e.to_string())
}

pub fn import_csv(bytes: &[u8]) -> Result<Vec<CsvRow>, String> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .map_err(|e| e.to_string())
}
