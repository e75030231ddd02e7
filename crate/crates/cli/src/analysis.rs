use ni_freebody::ni::{classify_ni, classify_sni};
use ni_freebody::verdict::{stability_verdict, VerdictOptions};

use crate::error::CliError;
use crate::model::LoadedModel;
use crate::report::{AnalysisReport, SCHEMA_VERSION, TOOL_VERSION};

/// Classification, Laurent coefficients, stability verdict and eigenvalue
/// oracle for one plant/controller pair.
pub fn run_analysis(
    plant: &LoadedModel,
    controller: &LoadedModel,
    opts: &VerdictOptions,
) -> Result<AnalysisReport, CliError> {
    if plant.model.ports() != controller.model.ports() {
        return Err(CliError::Input(format!(
            "plant has {} ports, controller has {}",
            plant.model.ports(),
            controller.model.ports()
        )));
    }
    let mut notes = Vec::new();
    let ni_report = match classify_ni(&plant.model, &opts.grid) {
        Ok(r) => Some((&r).into()),
        Err(e) => {
            notes.push(format!("NI classification: {e}"));
            None
        }
    };
    let sni_report = (&classify_sni(&controller.model, &opts.grid)).into();
    let verdict = stability_verdict(&plant.model, &controller.model, opts);
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        plant: plant.name.clone(),
        controller: controller.name.clone(),
        ni_report,
        sni_report,
        laurent: verdict.laurent.as_ref().map(Into::into),
        verdict: (&verdict).into(),
        oracle: verdict.oracle.as_ref().map(Into::into),
        tolerances: (&verdict.tolerances).into(),
        notes,
    })
}
