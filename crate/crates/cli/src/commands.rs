use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ni_freebody::beam::{self, BeamParameters};
use ni_freebody::freebody;
use ni_freebody::linalg;
use ni_freebody::montecarlo::{montecarlo_agreement, GeneratorSpec};
use ni_freebody::ni::{classify_ni, classify_sni, FrequencyGrid};
use ni_freebody::sim::{step_response, SimulationConfig, Wiring};
use ni_freebody::verdict::{Outcome, VerdictOptions};
use ni_freebody::DMatrix;
use serde::Serialize;

use crate::analysis::run_analysis;
use crate::cli::{BeamCommand, Cli, Command, GlobalOpts, WiringArg};
use crate::error::{CliError, EXIT_OK, EXIT_PRECONDITION};
use crate::model::{load_beam_params, load_model, rows};
use crate::report::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

impl GlobalOpts {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Text
        }
    }

    fn verdict_options(&self) -> Result<VerdictOptions, CliError> {
        let mut opts = VerdictOptions::default();
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Input(format!("--tol must be positive and finite, got {tol}")));
            }
            opts.tolerances.zero_rel = tol;
        }
        Ok(opts)
    }
}

fn no_csv(command: &str) -> CliError {
    CliError::Input(format!("--csv is not available for `{command}`"))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn fmt_matrix(m: &[Vec<f64>], indent: &str) -> String {
    let mut s = String::new();
    for row in m {
        s.push_str(indent);
        s.push('[');
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "{x:>13.6e}");
        }
        s.push_str("]\n");
    }
    s
}

fn opt_text(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("-")
}

/// Runs one parsed command line, writing the report to `out`. Returns the
/// process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let format = cli.global.format();
    match &cli.command {
        Command::Classify { model, sni } => classify(model, *sni, format, out),
        Command::Laurent { model } => laurent(model, format, out),
        Command::Stability { plant, controller } => {
            stability(plant, controller, &cli.global.verdict_options()?, format, out)
        }
        Command::Verify { count, seed } => verify(*count, *seed, format, out),
        Command::Beam { params, command } => {
            let p = load_beam_params(params.as_deref())?;
            match command {
                BeamCommand::Modes { count } => beam_modes(&p, *count, format, out),
                BeamCommand::Approx { modes } => beam_approx(&p, *modes, format, out),
                BeamCommand::Scan { gamma, w_min, w_max, points } => {
                    beam_scan(&p, *gamma, (*w_min, *w_max), *points, format, out)
                }
            }
        }
        Command::Simulate { plant, controller, t_end, dt, wiring, amplitude } => {
            let wiring = match wiring {
                WiringArg::Reference => Wiring::ReferenceOnFirstOutput,
                WiringArg::InputDisturbance => Wiring::InputDisturbance,
            };
            let config = SimulationConfig { wiring, t_end: *t_end, dt: *dt, amplitude: *amplitude };
            simulate(plant, controller, config, format, out)
        }
    }
}

fn classify(path: &Path, sni: bool, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = load_model(path)?;
    let grid = FrequencyGrid::default();
    let (ni_report, sni_report, sweep) = if sni {
        let r = classify_sni(&loaded.model, &grid);
        let sweep = r.cond2_min_eig_by_freq.clone();
        (None, Some(SniReportJson::from(&r)), sweep)
    } else {
        let r = classify_ni(&loaded.model, &grid)?;
        let sweep = r.cond2_min_eig_by_freq.clone();
        (Some(NiReportJson::from(&r)), None, sweep)
    };
    match format {
        Format::Json => write_json(
            out,
            &ClassifyReport { schema_version: SCHEMA_VERSION, model: loaded.name, ni_report, sni_report },
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["omega", "min_eig"])?;
            for (omega, value) in sweep {
                w.write_record([omega.to_string(), value.to_string()])?;
            }
            w.flush()?;
        }
        Format::Text => {
            if let Some(r) = ni_report {
                writeln!(out, "NI: {}", r.is_ni)?;
                writeln!(out, "  open right-half-plane poles: {}", r.rhp_poles.len())?;
                writeln!(out, "  sweep: {} points, min eigenvalue {:.6e}", r.sweep_points, r.sweep_min_eig)?;
                writeln!(out, "  imaginary-axis residues: {} (ok: {})", r.residues.len(), r.residues_ok)?;
                for res in &r.residues {
                    writeln!(out, "    omega {:.6} min eig {:.6e}", res.omega, res.min_eig)?;
                }
                let kind = r.g2_definiteness.as_ref().map(|d| d.kind).unwrap_or("-");
                writeln!(out, "  G2 ({kind}):\n{}", fmt_matrix(&r.g2, "    ").trim_end())?;
                writeln!(out, "  reason: {}", opt_text(&r.reason))?;
            }
            if let Some(r) = sni_report {
                writeln!(out, "SNI: {}", r.is_sni)?;
                writeln!(out, "  closed right-half-plane poles: {}", r.rhp_poles.len())?;
                writeln!(out, "  sweep: {} points, min eigenvalue {:.6e}", r.sweep_points, r.sweep_min_eig)?;
                writeln!(out, "  reason: {}", opt_text(&r.reason))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn laurent(path: &Path, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = load_model(path)?;
    let (a, b, d) = freebody::laurent_cross_checked(&loaded.model)?;
    let report = LaurentReport {
        schema_version: SCHEMA_VERSION,
        realization: (&a).into(),
        numeric: (&b).into(),
        relative_difference: d,
    };
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => return Err(no_csv("laurent")),
        Format::Text => {
            for (name, m) in
                [("G2", &report.realization.g2), ("G1", &report.realization.g1), ("G0", &report.realization.g0)]
            {
                writeln!(out, "{name}:\n{}", fmt_matrix(m, "  ").trim_end())?;
            }
            writeln!(out, "realization vs contour limit: relative difference {d:.3e}")?;
        }
    }
    Ok(EXIT_OK)
}

fn stability(
    plant: &Path,
    controller: &Path,
    opts: &VerdictOptions,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let g = load_model(plant)?;
    let gbar = load_model(controller)?;
    let report = run_analysis(&g, &gbar, opts)?;
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => return Err(no_csv("stability")),
        Format::Text => {
            let v = &report.verdict;
            writeln!(out, "outcome: {}", v.outcome)?;
            writeln!(out, "criterion: {}", v.criterion.unwrap_or("-"))?;
            writeln!(out, "branch: {}", v.branch)?;
            for (k, x) in &v.condition_values {
                writeln!(out, "  {k}: {x:.6e}")?;
            }
            if let Some(o) = &report.oracle {
                writeln!(out, "closed-loop spectral abscissa: {:.6e}", o.spectral_abscissa)?;
            }
            let agrees = v.oracle_agrees.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
            writeln!(out, "oracle agrees: {agrees}")?;
            writeln!(out, "reason: {}", opt_text(&v.reason))?;
            for n in &report.notes {
                writeln!(out, "note: {n}")?;
            }
        }
    }
    Ok(if report.verdict.outcome == Outcome::PreconditionFailed.name() { EXIT_PRECONDITION } else { EXIT_OK })
}

fn verify(count: usize, seed: u64, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    if count == 0 {
        return Err(CliError::Input("--count must be positive".into()));
    }
    let report = VerifyReport::from(&montecarlo_agreement(count, seed, &GeneratorSpec::default()));
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => return Err(no_csv("verify")),
        Format::Text => {
            writeln!(out, "trials: {} (seed {})", report.count, report.seed)?;
            writeln!(out, "agreement: {}/{} ({:.4})", report.agreed, report.applicable, report.agreement)?;
            writeln!(out, "stable: {}  unstable: {}", report.stable, report.unstable)?;
            writeln!(
                out,
                "boundary: {}  inconclusive: {}  precondition failed: {}  generation errors: {}",
                report.boundary, report.inconclusive, report.precondition_failed, report.generation_errors
            )?;
            for (k, n) in &report.by_criterion {
                writeln!(out, "  {k}: {n}")?;
            }
            for c in &report.counterexamples {
                writeln!(out, "counterexample #{} ({}): {} {}", c.index, c.kind, c.outcome, c.note)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn beam_modes(p: &BeamParameters, count: usize, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    if count == 0 {
        return Err(CliError::Input("--count must be positive".into()));
    }
    let roots = beam::first_modal_roots(p, count)?;
    let limit = beam::free_body_limit(p)?;
    let mut modes = Vec::with_capacity(roots.len());
    for (i, &w) in roots.iter().enumerate() {
        let r = beam::modal_residue(p, w)?;
        let k = r.record.residue.map(|z| z.re);
        let (vals, _) = linalg::sym_eigen_sorted(&k);
        modes.push(ModeJson {
            index: i + 1,
            omega: w,
            d_prime: r.d_prime,
            residue: rows(&k),
            min_eig: vals[0],
            max_eig: vals[vals.len() - 1],
        });
    }
    let report = BeamModesReport {
        schema_version: SCHEMA_VERSION,
        total_inertia: p.total_inertia(),
        g2: rows(&limit.g2),
        g0: rows(&limit.g0),
        modes,
    };
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["index", "omega", "d_prime", "min_eig", "max_eig"])?;
            for m in &report.modes {
                w.write_record([
                    m.index.to_string(),
                    m.omega.to_string(),
                    m.d_prime.to_string(),
                    m.min_eig.to_string(),
                    m.max_eig.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Text => {
            writeln!(out, "{:>5} {:>18} {:>14} {:>14}", "mode", "omega (rad/s)", "min eig", "max eig")?;
            for m in &report.modes {
                writeln!(out, "{:>5} {:>18.10} {:>14.6e} {:>14.6e}", m.index, m.omega, m.min_eig, m.max_eig)?;
            }
            writeln!(out, "G2 (1/total inertia = {:.10}):", 1.0 / report.total_inertia)?;
            write!(out, "{}", fmt_matrix(&report.g2, "  "))?;
        }
    }
    Ok(EXIT_OK)
}

fn beam_approx(p: &BeamParameters, n: usize, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    let approx = beam::finite_dim_approx(p, n)?;
    let is_ni = classify_ni(&approx.model.to_state_space()?, &FrequencyGrid::default())?.is_ni;
    let c0 = approx.model.g2.clone().unwrap_or_else(|| DMatrix::zeros(2, 2));
    let report = BeamApproxReport {
        schema_version: SCHEMA_VERSION,
        c0: rows(&c0),
        modes: approx
            .model
            .modes
            .iter()
            .map(|m| ApproxModeJson { frequency: m.frequency, coefficient: rows(&m.coefficient) })
            .collect(),
        k: approx.k,
        omega0: approx.omega0,
        static_residual: rows(&approx.static_residual),
        is_ni,
    };
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => return Err(no_csv("beam approx")),
        Format::Text => {
            writeln!(out, "C0:\n{}", fmt_matrix(&report.c0, "  ").trim_end())?;
            for (i, m) in report.modes.iter().enumerate() {
                writeln!(
                    out,
                    "C{} (p = {:.10}):\n{}",
                    i + 1,
                    m.frequency,
                    fmt_matrix(&m.coefficient, "  ").trim_end()
                )?;
            }
            writeln!(out, "k: {:.6e} (calibrated at omega0 = {:.6})", report.k, report.omega0)?;
            writeln!(out, "static residual:\n{}", fmt_matrix(&report.static_residual, "  ").trim_end())?;
            writeln!(out, "NI: {}", report.is_ni)?;
        }
    }
    Ok(EXIT_OK)
}

fn beam_scan(
    p: &BeamParameters,
    gamma: f64,
    (w_min, w_max): (f64, f64),
    points: usize,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    if !(w_min > 0.0 && w_max > w_min && w_max.is_finite()) || points == 0 {
        return Err(CliError::Input("need 0 < w-min < w-max and points > 0".into()));
    }
    let scan = beam::emit_residue_scan(p, gamma, &beam::linear_grid(w_min, w_max, points))?;
    if format == Format::Json {
        #[derive(Serialize)]
        struct ScanReport {
            schema_version: u32,
            gamma: f64,
            omega: Vec<f64>,
            value: Vec<f64>,
        }
        let report = ScanReport {
            schema_version: SCHEMA_VERSION,
            gamma,
            omega: scan.iter().map(|x| x.omega).collect(),
            value: scan.iter().map(|x| x.value).collect(),
        };
        write_json(out, &report)?;
    } else {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega", "value"])?;
        for x in &scan {
            w.write_record([x.omega.to_string(), x.value.to_string()])?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn simulate(
    plant: &Path,
    controller: &Path,
    config: SimulationConfig,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let g = load_model(plant)?;
    let gbar = load_model(controller)?;
    let res = step_response(&g.model, &gbar.model, config)?;
    if format == Format::Json {
        let report = SimulationReport {
            schema_version: SCHEMA_VERSION,
            wiring: config.wiring.name(),
            t_end: config.t_end,
            dt: config.dt,
            amplitude: config.amplitude,
            spectral_abscissa: res.spectral_abscissa,
            hurwitz: res.hurwitz,
            diverged: res.diverged,
            t: res.t.clone(),
            theta: res.theta().to_vec(),
            vs: res.vs().map(|v| v.to_vec()),
        };
        write_json(out, &report)?;
    } else {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "theta", "Vs"])?;
        let vs = res.vs();
        for (k, t) in res.t.iter().enumerate() {
            let v = vs.map(|v| v[k].to_string()).unwrap_or_default();
            w.write_record([t.to_string(), res.theta()[k].to_string(), v])?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}
