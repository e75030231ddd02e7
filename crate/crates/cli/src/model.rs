//! JSON model and beam-parameter files.
//!
//! A model file holds either a realization
//! `{"A": [[..]], "B": [[..]], "C": [[..]], "D": [[..]], "name": ".."}` with
//! row-major matrices, or an integral resonant controller
//! `{"irc": {"Gamma": [[..]], "Phi": [[..]], "Delta": [[..]]}, "name": ".."}`.
//! `D` may be omitted (zero). Empty `A`, `B`, `C` describe a static gain.

use std::path::Path;

use ni_freebody::beam::BeamParameters;
use ni_freebody::irc::{make_irc, IrcController};
use ni_freebody::lti::StateSpaceModel;
use ni_freebody::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irc: Option<IrcFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrcFile {
    #[serde(rename = "Gamma")]
    pub gamma: Rows,
    #[serde(rename = "Phi")]
    pub phi: Rows,
    #[serde(rename = "Delta")]
    pub delta: Rows,
}

/// A parsed model; `irc` is set when the file described a controller.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub name: Option<String>,
    pub model: StateSpaceModel,
    pub irc: Option<IrcController>,
}

pub fn rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl ModelFile {
    pub fn from_model(model: &StateSpaceModel, name: Option<String>) -> Self {
        Self {
            a: Some(rows(model.a())),
            b: Some(rows(model.b())),
            c: Some(rows(model.c())),
            d: Some(rows(model.d())),
            irc: None,
            name,
        }
    }

    pub fn from_irc(irc: &IrcController, name: Option<String>) -> Self {
        Self {
            irc: Some(IrcFile { gamma: rows(&irc.gamma), phi: rows(&irc.phi), delta: rows(&irc.delta) }),
            name,
            ..Self::default()
        }
    }
}

/// Row-major rows to a matrix; empty input gives `empty_shape`.
fn matrix(name: &str, r: &Rows, empty_shape: (usize, usize)) -> Result<DMatrix<f64>, CliError> {
    if r.iter().all(|row| row.is_empty()) {
        return Ok(DMatrix::zeros(empty_shape.0, empty_shape.1));
    }
    let cols = r[0].len();
    for (i, row) in r.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Input(format!("{name}: row {} has {} entries, row 1 has {cols}", i + 1, row.len())));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(CliError::Input(format!("{name}: entry ({}, {}) is not finite", i + 1, j + 1)));
        }
    }
    Ok(DMatrix::from_fn(r.len(), cols, |i, j| r[i][j]))
}

fn required<'a>(name: &str, r: &'a Option<Rows>) -> Result<&'a Rows, CliError> {
    r.as_ref().ok_or_else(|| CliError::Input(format!("missing key \"{name}\"")))
}

impl ModelFile {
    pub fn into_loaded(self) -> Result<LoadedModel, CliError> {
        if let Some(irc) = &self.irc {
            if self.a.is_some() || self.b.is_some() || self.c.is_some() || self.d.is_some() {
                return Err(CliError::Input("give either \"irc\" or A/B/C/D, not both".into()));
            }
            let gamma = matrix("Gamma", &irc.gamma, (0, 0))?;
            let phi = matrix("Phi", &irc.phi, (0, 0))?;
            let delta = matrix("Delta", &irc.delta, (0, 0))?;
            let ctrl = make_irc(&gamma, &phi, &delta)?;
            return Ok(LoadedModel { name: self.name, model: ctrl.realization.clone(), irc: Some(ctrl) });
        }
        let d_rows = self.d.as_ref();
        let a = matrix("A", required("A", &self.a)?, (0, 0))?;
        let n = a.nrows();
        let (d_p, d_m) = match d_rows {
            Some(d) if !d.is_empty() => (d.len(), d[0].len()),
            _ => (0, 0),
        };
        let b = matrix("B", required("B", &self.b)?, (n, d_m))?;
        let c = matrix("C", required("C", &self.c)?, (d_p, n))?;
        let d = match d_rows {
            Some(d) => matrix("D", d, (c.nrows(), b.ncols()))?,
            None => DMatrix::zeros(c.nrows(), b.ncols()),
        };
        let model = StateSpaceModel::new(a, b, c, d)?;
        Ok(LoadedModel { name: self.name, model, irc: None })
    }
}

/// Parses a model from JSON text. Syntax errors carry line and column.
pub fn parse_model(text: &str) -> Result<LoadedModel, CliError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
    file.into_loaded()
}

pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = read(path)?;
    parse_model(&text).map_err(|e| prefix(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn prefix(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        CliError::Precondition(m) => CliError::Precondition(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// Beam parameters; missing fields default to the robotic-arm values.
/// Each field also accepts its usual symbol (`Ih`, `L`, `rho`, ...).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamParamsFile {
    #[serde(alias = "Ih")]
    pub hub_inertia: f64,
    #[serde(alias = "L")]
    pub length: f64,
    #[serde(alias = "rho")]
    pub density: f64,
    #[serde(alias = "A")]
    pub area: f64,
    #[serde(alias = "E")]
    pub youngs_modulus: f64,
    #[serde(alias = "I")]
    pub moment_of_inertia: f64,
    pub k31: f64,
    #[serde(alias = "C")]
    pub capacitance: f64,
    #[serde(alias = "t")]
    pub thickness: f64,
    #[serde(alias = "Ca")]
    pub actuator_constant: f64,
    #[serde(alias = "Cs")]
    pub sensor_constant: f64,
}

impl Default for BeamParamsFile {
    fn default() -> Self {
        BeamParameters::robotic_arm().into()
    }
}

impl From<BeamParameters> for BeamParamsFile {
    fn from(p: BeamParameters) -> Self {
        Self {
            hub_inertia: p.hub_inertia,
            length: p.length,
            density: p.density,
            area: p.area,
            youngs_modulus: p.youngs_modulus,
            moment_of_inertia: p.moment_of_inertia,
            k31: p.k31,
            capacitance: p.capacitance,
            thickness: p.thickness,
            actuator_constant: p.actuator_constant,
            sensor_constant: p.sensor_constant,
        }
    }
}

impl From<BeamParamsFile> for BeamParameters {
    fn from(f: BeamParamsFile) -> Self {
        Self {
            hub_inertia: f.hub_inertia,
            length: f.length,
            density: f.density,
            area: f.area,
            youngs_modulus: f.youngs_modulus,
            moment_of_inertia: f.moment_of_inertia,
            k31: f.k31,
            capacitance: f.capacitance,
            thickness: f.thickness,
            actuator_constant: f.actuator_constant,
            sensor_constant: f.sensor_constant,
        }
    }
}

pub fn parse_beam_params(text: &str) -> Result<BeamParameters, CliError> {
    let file: BeamParamsFile = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
    let p: BeamParameters = file.into();
    p.validate()?;
    Ok(p)
}

/// Robotic-arm parameters when `path` is `None`.
pub fn load_beam_params(path: Option<&Path>) -> Result<BeamParameters, CliError> {
    match path {
        None => Ok(BeamParameters::robotic_arm()),
        Some(p) => parse_beam_params(&read(p)?).map_err(|e| prefix(p, e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omitted_d_is_zero() {
        let m = parse_model(r#"{"A": [[0, 1], [0, 0]], "B": [[0], [1]], "C": [[1, 0]]}"#).unwrap();
        assert_eq!(m.model.d().shape(), (1, 1));
        assert_eq!(m.model.d()[(0, 0)], 0.0);
        assert!(m.irc.is_none());
    }

    #[test]
    fn static_gain_from_empty_realization() {
        let m = parse_model(r#"{"A": [], "B": [], "C": [], "D": [[-1, 0], [0, -2]]}"#).unwrap();
        assert_eq!(m.model.states(), 0);
        assert_eq!(m.model.ports(), 2);
    }

    #[test]
    fn irc_and_realization_are_exclusive() {
        let text = r#"{"A": [[0]], "B": [[1]], "C": [[1]], "irc": {"Gamma": [[1]], "Phi": [[1]], "Delta": [[1]]}}"#;
        assert!(matches!(parse_model(text), Err(CliError::Input(_))));
    }

    #[test]
    fn irc_requires_positive_definite_gains() {
        let text = r#"{"irc": {"Gamma": [[-1]], "Phi": [[1]], "Delta": [[1]]}}"#;
        assert!(matches!(parse_model(text), Err(CliError::Input(_))));
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let text = r#"{"A": [[0, 1], [0, 0]], "B": [[1]], "C": [[1, 0]]}"#;
        assert!(matches!(parse_model(text), Err(CliError::Input(_))));
    }

    #[test]
    fn model_round_trips_through_json() {
        let m = parse_model(r#"{"A": [[0, 1], [-4, -0.5]], "B": [[0], [1]], "C": [[1, 0]], "name": "osc"}"#).unwrap();
        let text = serde_json::to_string(&ModelFile::from_model(&m.model, m.name.clone())).unwrap();
        let back = parse_model(&text).unwrap();
        assert_eq!(back.model, m.model);
        assert_eq!(back.name.as_deref(), Some("osc"));
    }

    #[test]
    fn beam_params_default_and_validate() {
        let p = parse_beam_params("{}").unwrap();
        assert_eq!(p, BeamParameters::robotic_arm());
        assert!(matches!(parse_beam_params(r#"{"E": 0}"#), Err(CliError::Input(_))));
    }
}
