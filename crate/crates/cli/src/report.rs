//! Serializable reports. Every top-level report carries `schema_version`.

use std::collections::BTreeMap;

use ni_freebody::freebody::{LaurentCoefficients, LaurentMethod};
use ni_freebody::linalg::{Definiteness, DefinitenessKind};
use ni_freebody::montecarlo::AgreementReport;
use ni_freebody::ni::{NiReport, ResidueRecord, SniReport};
use ni_freebody::verdict::{OracleResult, StabilityVerdict, Tolerances};
use ni_freebody::{CMatrix, Complex};
use serde::Serialize;

use crate::model::rows;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for ComplexMatrixJson {
    fn from(m: &CMatrix) -> Self {
        Self { re: rows(&m.map(|z| z.re)), im: rows(&m.map(|z| z.im)) }
    }
}

fn complex_pair(z: &Complex<f64>) -> [f64; 2] {
    [z.re, z.im]
}

pub fn definiteness_name(kind: DefinitenessKind) -> &'static str {
    match kind {
        DefinitenessKind::PositiveDefinite => "positive_definite",
        DefinitenessKind::PositiveSemidefinite => "positive_semidefinite",
        DefinitenessKind::NegativeDefinite => "negative_definite",
        DefinitenessKind::NegativeSemidefinite => "negative_semidefinite",
        DefinitenessKind::Indefinite => "indefinite",
        DefinitenessKind::Zero => "zero",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefinitenessJson {
    pub kind: &'static str,
    pub min_eig: f64,
    pub max_eig: f64,
    pub tol_used: f64,
}

impl From<&Definiteness> for DefinitenessJson {
    fn from(d: &Definiteness) -> Self {
        Self { kind: definiteness_name(d.kind), min_eig: d.min_eig, max_eig: d.max_eig, tol_used: d.tol_used }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueJson {
    pub omega: f64,
    pub residue: ComplexMatrixJson,
    pub min_eig: f64,
    pub hermitian_defect: f64,
    pub ok: bool,
}

impl From<&ResidueRecord> for ResidueJson {
    fn from(r: &ResidueRecord) -> Self {
        Self {
            omega: r.omega,
            residue: (&r.residue).into(),
            min_eig: r.min_eig,
            hermitian_defect: r.hermitian_defect,
            ok: r.ok,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NiReportJson {
    pub is_ni: bool,
    /// Open right-half-plane poles as `[re, im]`.
    pub rhp_poles: Vec<[f64; 2]>,
    pub sweep_points: usize,
    pub sweep_min_eig: f64,
    pub sweep_ok: bool,
    pub residues: Vec<ResidueJson>,
    pub residues_ok: bool,
    pub g2: Vec<Vec<f64>>,
    pub g2_definiteness: Option<DefinitenessJson>,
    pub higher_order_ok: bool,
    pub origin_ok: bool,
    pub reason: Option<String>,
}

impl From<&NiReport> for NiReportJson {
    fn from(r: &NiReport) -> Self {
        Self {
            is_ni: r.is_ni,
            rhp_poles: r.cond1_rhp_poles.iter().map(complex_pair).collect(),
            sweep_points: r.cond2_min_eig_by_freq.len(),
            sweep_min_eig: r.cond2_min(),
            sweep_ok: r.cond2_ok,
            residues: r.cond3_residues.iter().map(Into::into).collect(),
            residues_ok: r.cond3_ok,
            g2: rows(&r.cond4_g2),
            g2_definiteness: r.cond4_g2_definiteness.as_ref().map(Into::into),
            higher_order_ok: r.cond4_higher_order,
            origin_ok: r.cond4_ok,
            reason: r.reason.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SniReportJson {
    pub is_sni: bool,
    /// Closed right-half-plane poles as `[re, im]`.
    pub rhp_poles: Vec<[f64; 2]>,
    pub sweep_points: usize,
    pub sweep_min_eig: f64,
    pub reason: Option<String>,
}

impl From<&SniReport> for SniReportJson {
    fn from(r: &SniReport) -> Self {
        Self {
            is_sni: r.is_sni,
            rhp_poles: r.closed_rhp_poles.iter().map(complex_pair).collect(),
            sweep_points: r.cond2_min_eig_by_freq.len(),
            sweep_min_eig: r.cond2_min(),
            reason: r.reason.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaurentJson {
    pub method: &'static str,
    pub g0: Vec<Vec<f64>>,
    pub g1: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
}

impl From<&LaurentCoefficients> for LaurentJson {
    fn from(l: &LaurentCoefficients) -> Self {
        let method = match l.method {
            LaurentMethod::Realization => "realization",
            LaurentMethod::NumericLimit => "numeric_limit",
        };
        Self { method, g0: rows(&l.g0), g1: rows(&l.g1), g2: rows(&l.g2) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaurentReport {
    pub schema_version: u32,
    pub realization: LaurentJson,
    pub numeric: LaurentJson,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleJson {
    pub spectral_abscissa: f64,
    pub stable: bool,
    pub boundary: bool,
}

impl From<&OracleResult> for OracleJson {
    fn from(o: &OracleResult) -> Self {
        Self { spectral_abscissa: o.spectral_abscissa, stable: o.stable, boundary: o.boundary }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TolerancesJson {
    pub zero_rel: f64,
    pub boundary_rel: f64,
    pub hurwitz_margin: f64,
    pub nullspace_rel: f64,
}

impl From<&Tolerances> for TolerancesJson {
    fn from(t: &Tolerances) -> Self {
        Self {
            zero_rel: t.zero_rel,
            boundary_rel: t.boundary_rel,
            hurwitz_margin: t.hurwitz_margin,
            nullspace_rel: t.nullspace_rel,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub outcome: &'static str,
    pub criterion: Option<&'static str>,
    pub branch: &'static str,
    pub condition_values: BTreeMap<String, f64>,
    pub reason: Option<String>,
    pub oracle_agrees: Option<bool>,
}

impl From<&StabilityVerdict> for VerdictJson {
    fn from(v: &StabilityVerdict) -> Self {
        Self {
            outcome: v.outcome.name(),
            criterion: v.criterion.map(|c| c.name()),
            branch: v.branch.name(),
            condition_values: v.condition_values.clone(),
            reason: v.reason.clone(),
            oracle_agrees: v.oracle_agrees,
        }
    }
}

/// Full pipeline result for a plant/controller pair.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub plant: Option<String>,
    pub controller: Option<String>,
    pub ni_report: Option<NiReportJson>,
    pub sni_report: SniReportJson,
    pub laurent: Option<LaurentJson>,
    pub verdict: VerdictJson,
    pub oracle: Option<OracleJson>,
    pub tolerances: TolerancesJson,
    /// Errors met by pipeline stages that did not stop the run.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub schema_version: u32,
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ni_report: Option<NiReportJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sni_report: Option<SniReportJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleJson {
    pub index: usize,
    pub kind: &'static str,
    pub criterion: Option<&'static str>,
    pub outcome: &'static str,
    pub spectral_abscissa: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub count: usize,
    pub seed: u64,
    pub applicable: usize,
    pub agreed: usize,
    pub agreement: f64,
    pub boundary: usize,
    pub inconclusive: usize,
    pub precondition_failed: usize,
    pub generation_errors: usize,
    pub stable: usize,
    pub unstable: usize,
    pub by_criterion: BTreeMap<String, usize>,
    pub by_kind: BTreeMap<String, usize>,
    pub counterexamples: Vec<CounterexampleJson>,
}

impl From<&AgreementReport> for VerifyReport {
    fn from(r: &AgreementReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            count: r.count,
            seed: r.seed,
            applicable: r.applicable,
            agreed: r.agreed,
            agreement: r.agreement(),
            boundary: r.boundary,
            inconclusive: r.inconclusive,
            precondition_failed: r.precondition_failed,
            generation_errors: r.generation_errors,
            stable: r.stable,
            unstable: r.unstable,
            by_criterion: r.by_criterion.clone(),
            by_kind: r.by_kind.clone(),
            counterexamples: r
                .counterexamples
                .iter()
                .map(|c| CounterexampleJson {
                    index: c.index,
                    kind: c.kind.name(),
                    criterion: c.criterion,
                    outcome: c.outcome.name(),
                    spectral_abscissa: c.spectral_abscissa,
                    note: c.note.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeJson {
    pub index: usize,
    pub omega: f64,
    pub d_prime: f64,
    pub residue: Vec<Vec<f64>>,
    pub min_eig: f64,
    pub max_eig: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BeamModesReport {
    pub schema_version: u32,
    pub total_inertia: f64,
    pub g2: Vec<Vec<f64>>,
    pub g0: Vec<Vec<f64>>,
    pub modes: Vec<ModeJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxModeJson {
    pub frequency: f64,
    pub coefficient: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BeamApproxReport {
    pub schema_version: u32,
    pub c0: Vec<Vec<f64>>,
    pub modes: Vec<ApproxModeJson>,
    pub k: f64,
    pub omega0: f64,
    pub static_residual: Vec<Vec<f64>>,
    pub is_ni: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub wiring: &'static str,
    pub t_end: f64,
    pub dt: f64,
    pub amplitude: f64,
    pub spectral_abscissa: f64,
    pub hurwitz: bool,
    pub diverged: bool,
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(rename = "Vs")]
    pub vs: Option<Vec<f64>>,
}
