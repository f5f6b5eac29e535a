//! The subcommands. Each one fills an [`Output`] from a validated config.

use qpump::classical::{classical_bpt_charge, partition_table, trajectory};
use qpump::counting::{noise_report, NoiseMethod};
use qpump::geometry::{cycle_line_charge, fractional_charge, winding_number, RowPath};
use qpump::models::make_pump;
use qpump::smatrix::{checked_eval, Cycle};
use qpump::transport::transport_report;
use serde_json::json;

use crate::config::{RunConfig, SchemaError};
use crate::output::{Output, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Domain(#[from] qpump::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("self-check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use qpump::Error as E;
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) | CliError::Domain(E::InvalidSpec(_)) => 2,
            CliError::Check(_) => 3,
            CliError::Domain(E::ZeroTemperature | E::NonPulseCycle | E::RegionTouchesDiscontinuity) => 4,
            CliError::Domain(E::MaxEventsExceeded(_)) => 5,
            CliError::Domain(_) => 3,
        }
    }
}

fn cycle_of(cfg: &RunConfig) -> Result<Cycle, CliError> {
    let model = cfg
        .model
        .as_ref()
        .ok_or_else(|| SchemaError {
            path: "model".into(),
            message: "this command needs a model".into(),
        })?;
    Ok(make_pump(model)?)
}

fn to_json(value: impl serde::Serialize) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

pub fn transport(cfg: &RunConfig) -> Result<Output, CliError> {
    let cycle = cycle_of(cfg)?;
    let report = transport_report(cycle.as_ref(), &cfg.thermal, &cfg.quadrature)?;
    let mut out = Output::new("transport", cfg);
    let series = [
        ("current", Some(&report.current), "charge/time"),
        ("dissipation", Some(&report.dissipation), "energy/time"),
        ("entropy_current", report.entropy_current.as_ref(), "1/time"),
        ("noise_current", report.noise_current.as_ref(), "charge^2/time"),
    ];
    for (name, data, unit) in series {
        let Some(data) = data else { continue };
        for (j, values) in data.iter().enumerate() {
            for (t, v) in report.times.iter().zip(values) {
                out.rows.push(Row::new(name, *v, unit).channel(j).at(*t));
            }
        }
    }
    for (j, q) in report.cycle_charge.iter().enumerate() {
        out.rows.push(Row::new("cycle_charge", *q, "charge").channel(j));
    }
    out.rows.push(Row::new("birman_krein_residual", report.birman_krein_residual, "charge"));
    out.rows.push(Row::new("bound_violation", report.bound_violation, "energy/time"));
    out.report = to_json(&report);
    Ok(out)
}

pub fn geometry(cfg: &RunConfig) -> Result<Output, CliError> {
    let cycle = cycle_of(cfg)?;
    let q = &cfg.quadrature;
    let mu = cfg.thermal.mu;
    let n = cycle.n_channels();
    let period = cycle.timing().scale();
    let mut out = Output::new("geometry", cfg);
    let mut report = serde_json::Map::new();
    let matrices = (0..q.time_points)
        .map(|k| checked_eval(cycle.as_ref(), mu, period * k as f64 / q.time_points as f64, q.unitarity_tol))
        .collect::<qpump::Result<Vec<_>>>()?;
    for j in 0..n {
        let path = RowPath::from_cycle(cycle.as_ref(), j, mu, q.time_points, q.unitarity_tol)?;
        let mut angle = 0.0;
        for (k, psi) in path.samples.iter().enumerate() {
            out.rows.push(Row::new("global_angle", angle, "rad").channel(j).at(period * k as f64 / q.time_points as f64));
            let next = &path.samples[(k + 1) % path.samples.len()];
            angle += psi.dotc(next).arg();
        }
        let line = cycle_line_charge(cycle.as_ref(), j, mu, q)?;
        out.rows.push(Row::new("line_charge", line, "charge").channel(j));
        let mut entry = json!({ "line_charge": line, "global_angle": angle });
        if n == 2 {
            let fraction = fractional_charge(&path)?;
            out.rows.push(Row::new("fractional_charge", fraction, "charge").channel(j));
            entry["fractional_charge"] = json!(fraction);
        }
        let diagonal: Vec<_> = matrices.iter().map(|s| s[(j, j)]).collect();
        match winding_number(&diagonal) {
            Ok(w) => {
                out.rows.push(Row::new("winding_diagonal", w.winding as f64, "1").channel(j));
                entry["winding_diagonal"] = json!(w.winding);
            }
            Err(e) => out.note(&format!("winding_diagonal.{j}"), format!("unavailable: {e}")),
        }
        report.insert(format!("channel_{j}"), entry);
    }
    let dets: Vec<_> = matrices.iter().map(|s| s.determinant()).collect();
    let w = winding_number(&dets)?;
    out.rows.push(Row::new("winding_det", w.winding as f64, "1"));
    report.insert("winding_det".into(), json!(w.winding));
    out.report = serde_json::Value::Object(report);
    Ok(out)
}

pub fn noise(cfg: &RunConfig, zero_t: bool) -> Result<Output, CliError> {
    let cycle = cycle_of(cfg)?;
    let mut out = Output::new("noise", cfg);
    let mut reports = Vec::new();
    for j in 0..cycle.n_channels() {
        let r = noise_report(cycle.as_ref(), j, &cfg.thermal, &cfg.quadrature, zero_t)?;
        if let Some(jn) = r.jn_noise {
            out.rows.push(Row::new("jn_noise", jn, "charge^2").channel(j));
        }
        out.rows.push(Row::new("shot_noise", r.shot_noise, "charge^2").channel(j));
        let method = match r.method {
            NoiseMethod::FiniteT => "finite-t",
            NoiseMethod::ZeroT => "zero-t",
        };
        out.note("noise.method", method);
        out.note(&format!("noise.{j}.grid"), r.grid);
        out.note(&format!("noise.{j}.refine"), r.refine);
        out.note(&format!("noise.{j}.diagonal_substitutions"), r.diagonal_substitutions);
        out.note("noise.large_mu_assumed", r.large_mu_assumed);
        reports.push(r);
    }
    out.report = to_json(&reports);
    Ok(out)
}

pub fn classical(cfg: &RunConfig) -> Result<Output, CliError> {
    let c = &cfg.classical;
    let mut out = Output::new("classical", cfg);
    out.note("classical.plow", format!("{:?}", c.plow));
    let table = partition_table(&c.plow, c.energy, c.time, c.points)?;
    let mut mismatches = 0;
    for s in &table {
        let ch = s.incoming as usize;
        out.rows.push(Row::new("partition_outgoing", s.outgoing as f64, "channel").channel(ch).energy(s.energy).at(s.time));
        out.rows.push(Row::new("simulated_outgoing", s.simulated_outgoing as f64, "channel").channel(ch).energy(s.energy).at(s.time));
        mismatches += usize::from(s.outgoing != s.simulated_outgoing);
    }
    out.note("classical.partition_mismatches", mismatches);
    let mut charges = Vec::new();
    for ch in [1u8, 2] {
        let q = classical_bpt_charge(&c.plow, &cfg.thermal, c.window, ch, c.time_points)?;
        out.rows.push(Row::new("charge_direct", q.direct, "charge").channel(ch as usize));
        out.rows.push(Row::new("charge_formula", q.formula, "charge").channel(ch as usize));
        charges.push(q);
    }
    let mut histories = Vec::new();
    for (k, p) in c.trajectories.iter().enumerate() {
        let (events, result) = trajectory(&c.plow, *p)?;
        for e in &events {
            out.rows.push(Row::new("event_position", e.position, "length").channel(k).energy(0.5 * e.velocity_out * e.velocity_out).at(e.time));
        }
        histories.push(json!({ "incoming": p, "events": events, "result": result }));
    }
    out.report = json!({ "partition_mismatches": mismatches, "charges": charges, "trajectories": histories });
    Ok(out)
}
