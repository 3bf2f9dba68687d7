//! Plain-text field configuration: typed sections [alpha], [action],
//! [kernel], [cocycle]. Exact quantities travel as strings
//! ("a/b + c/d sqrt m" for quadratic numbers, "n/d" for rationals), so the
//! round-trip is lossless.

use serde::{Deserialize, Serialize};

use super::field::{BoxSupport, CocycleSpec, FieldSpec, KernelSpec};
use super::{
    ActionSpec, AtomicAction, CoordinateShiftAction, Marginal, TranslationAction,
};
use crate::stable::Alpha;
use crate::{Quad, Rational};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Toml(String),
    #[error("invalid field config: {0}")]
    Semantic(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct Doc {
    alpha: AlphaDoc,
    action: ActionDoc,
    kernel: KernelDoc,
    cocycle: CocycleDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct AlphaDoc {
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActionDoc {
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    columns: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flip_patterns: Option<Vec<Vec<u8>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<String>>,
    /// forward tables, one row per generator; −1 marks an escape
    #[serde(skip_serializing_if = "Option::is_none")]
    forward: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    marginal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelDoc {
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    intervals: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flips: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pieces: Option<Vec<PieceDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PieceDoc {
    intervals: Vec<Vec<String>>,
    flips: Vec<String>,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocycleDoc {
    #[serde(rename = "type")]
    kind: String,
    signs: Vec<i8>,
}

fn quad_to_string(q: &Quad) -> String {
    q.to_string()
}

fn quad_from_string(s: &str) -> Result<Quad, ConfigError> {
    s.parse()
        .map_err(|e| ConfigError::Semantic(format!("bad quadratic number {s:?}: {e}")))
}

fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn rational_from_string(s: &str) -> Result<Rational, ConfigError> {
    let q = quad_from_string(s)?;
    if !q.is_rational() {
        return Err(ConfigError::Semantic(format!("{s:?} is not rational")));
    }
    Ok(q.rational_part().clone())
}

fn flip_req_to_string(r: &Option<i8>) -> String {
    match r {
        Some(1) => "+1".into(),
        Some(-1) => "-1".into(),
        Some(other) => format!("{other}"),
        None => "any".into(),
    }
}

fn flip_req_from_string(s: &str) -> Result<Option<i8>, ConfigError> {
    match s.trim() {
        "any" => Ok(None),
        "+1" | "1" => Ok(Some(1)),
        "-1" => Ok(Some(-1)),
        other => Err(ConfigError::Semantic(format!("bad flip value {other:?}"))),
    }
}

fn box_to_doc(b: &BoxSupport) -> (Vec<Vec<String>>, Vec<String>) {
    (
        b.intervals
            .iter()
            .map(|(lo, hi)| vec![quad_to_string(lo), quad_to_string(hi)])
            .collect(),
        b.flips.iter().map(flip_req_to_string).collect(),
    )
}

fn box_from_doc(
    intervals: &[Vec<String>],
    flips: &[String],
) -> Result<BoxSupport, ConfigError> {
    let mut ivs = Vec::with_capacity(intervals.len());
    for pair in intervals {
        if pair.len() != 2 {
            return Err(ConfigError::Semantic(
                "interval must be [lo, hi]".into(),
            ));
        }
        ivs.push((quad_from_string(&pair[0])?, quad_from_string(&pair[1])?));
    }
    let mut fs = Vec::with_capacity(flips.len());
    for f in flips {
        fs.push(flip_req_from_string(f)?);
    }
    Ok(BoxSupport {
        intervals: ivs,
        flips: fs,
    })
}

/// Serialize a field description to the documented config text.
pub fn field_to_toml(field: &FieldSpec) -> String {
    let action = match &field.action {
        ActionSpec::Translation(a) => ActionDoc {
            kind: "translation".into(),
            columns: Some(
                a.columns
                    .iter()
                    .map(|col| col.iter().map(quad_to_string).collect())
                    .collect(),
            ),
            flip_patterns: Some(a.flip_patterns.clone()),
            weights: None,
            forward: None,
            dim: None,
            marginal: None,
            theta: None,
        },
        ActionSpec::Atomic(a) => ActionDoc {
            kind: "atomic".into(),
            columns: None,
            flip_patterns: None,
            weights: Some(a.weights.iter().map(rational_to_string).collect()),
            forward: Some(
                a.forward
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|img| img.map(|x| x as i64).unwrap_or(-1))
                            .collect()
                    })
                    .collect(),
            ),
            dim: None,
            marginal: None,
            theta: None,
        },
        ActionSpec::CoordinateShift(a) => ActionDoc {
            kind: "coordinate-shift".into(),
            columns: None,
            flip_patterns: None,
            weights: None,
            forward: None,
            dim: Some(a.group_rank),
            marginal: Some(match a.marginal {
                Marginal::Gaussian => "gaussian".into(),
                Marginal::Pareto { .. } => "pareto".into(),
            }),
            theta: match a.marginal {
                Marginal::Pareto { theta } => Some(theta),
                Marginal::Gaussian => None,
            },
        },
    };
    let kernel = match &field.kernel {
        KernelSpec::IndicatorBox(b) => {
            let (intervals, flips) = box_to_doc(b);
            KernelDoc {
                kind: "indicator-box".into(),
                intervals: Some(intervals),
                flips: Some(flips),
                pieces: None,
                values: None,
                value: None,
            }
        }
        KernelSpec::PiecewiseConstant(pieces) => KernelDoc {
            kind: "piecewise-constant".into(),
            intervals: None,
            flips: None,
            pieces: Some(
                pieces
                    .iter()
                    .map(|(b, v)| {
                        let (intervals, flips) = box_to_doc(b);
                        PieceDoc {
                            intervals,
                            flips,
                            value: *v,
                        }
                    })
                    .collect(),
            ),
            values: None,
            value: None,
        },
        KernelSpec::AtomTable(values) => KernelDoc {
            kind: "atom-table".into(),
            intervals: None,
            flips: None,
            pieces: None,
            values: Some(values.clone()),
            value: None,
        },
        KernelSpec::CoordinateProjection => KernelDoc {
            kind: "coordinate-projection".into(),
            intervals: None,
            flips: None,
            pieces: None,
            values: None,
            value: None,
        },
        KernelSpec::Constant(v) => KernelDoc {
            kind: "constant".into(),
            intervals: None,
            flips: None,
            pieces: None,
            values: None,
            value: Some(*v),
        },
    };
    let cocycle = match &field.cocycle {
        CocycleSpec::ParityPattern { signs } => CocycleDoc {
            kind: "parity".into(),
            signs: signs.clone(),
        },
        CocycleSpec::BrokenFirstAxis { signs } => CocycleDoc {
            kind: "broken-first-axis".into(),
            signs: signs.clone(),
        },
    };
    let doc = Doc {
        alpha: AlphaDoc {
            value: field.alpha.value(),
        },
        action,
        kernel,
        cocycle,
    };
    toml::to_string_pretty(&doc).expect("config serialization cannot fail")
}

/// Parse and validate a field description.
pub fn field_from_toml(text: &str) -> Result<FieldSpec, ConfigError> {
    let doc: Doc = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
    let alpha = Alpha::new(doc.alpha.value)
        .map_err(|e| ConfigError::Semantic(e.to_string()))?;
    let action = match doc.action.kind.as_str() {
        "translation" => {
            let columns_doc = doc
                .action
                .columns
                .ok_or_else(|| ConfigError::Semantic("translation needs columns".into()))?;
            let mut columns = Vec::with_capacity(columns_doc.len());
            for col in &columns_doc {
                let mut out = Vec::with_capacity(col.len());
                for entry in col {
                    out.push(quad_from_string(entry)?);
                }
                columns.push(out);
            }
            let flips = doc.action.flip_patterns.unwrap_or_default();
            ActionSpec::Translation(
                TranslationAction::new(columns, flips)
                    .map_err(|e| ConfigError::Semantic(e.to_string()))?,
            )
        }
        "atomic" => {
            let weights_doc = doc
                .action
                .weights
                .ok_or_else(|| ConfigError::Semantic("atomic needs weights".into()))?;
            let mut weights = Vec::with_capacity(weights_doc.len());
            for w in &weights_doc {
                weights.push(rational_from_string(w)?);
            }
            let forward_doc = doc
                .action
                .forward
                .ok_or_else(|| ConfigError::Semantic("atomic needs forward tables".into()))?;
            let n = weights.len();
            let mut forward = Vec::with_capacity(forward_doc.len());
            for row in &forward_doc {
                let mut out = Vec::with_capacity(row.len());
                for &img in row {
                    out.push(match img {
                        -1 => None,
                        x if x >= 0 && (x as usize) < n => Some(x as usize),
                        other => {
                            return Err(ConfigError::Semantic(format!(
                                "atom image {other} out of range"
                            )))
                        }
                    });
                }
                forward.push(out);
            }
            ActionSpec::Atomic(
                AtomicAction::new(weights, forward)
                    .map_err(|e| ConfigError::Semantic(e.to_string()))?,
            )
        }
        "coordinate-shift" => {
            let dim = doc
                .action
                .dim
                .ok_or_else(|| ConfigError::Semantic("coordinate-shift needs dim".into()))?;
            let marginal = match doc.action.marginal.as_deref() {
                Some("gaussian") => Marginal::Gaussian,
                Some("pareto") => Marginal::Pareto {
                    theta: doc.action.theta.ok_or_else(|| {
                        ConfigError::Semantic("pareto marginal needs theta".into())
                    })?,
                },
                other => {
                    return Err(ConfigError::Semantic(format!(
                        "unknown marginal {other:?}"
                    )))
                }
            };
            ActionSpec::CoordinateShift(
                CoordinateShiftAction::new(dim, marginal)
                    .map_err(|e| ConfigError::Semantic(e.to_string()))?,
            )
        }
        other => {
            return Err(ConfigError::Semantic(format!(
                "unknown action type {other:?}"
            )))
        }
    };
    let kernel = match doc.kernel.kind.as_str() {
        "indicator-box" => KernelSpec::IndicatorBox(box_from_doc(
            doc.kernel.intervals.as_deref().unwrap_or(&[]),
            doc.kernel.flips.as_deref().unwrap_or(&[]),
        )?),
        "piecewise-constant" => {
            let pieces_doc = doc.kernel.pieces.unwrap_or_default();
            let mut pieces = Vec::with_capacity(pieces_doc.len());
            for p in &pieces_doc {
                pieces.push((box_from_doc(&p.intervals, &p.flips)?, p.value));
            }
            KernelSpec::PiecewiseConstant(pieces)
        }
        "atom-table" => KernelSpec::AtomTable(
            doc.kernel
                .values
                .ok_or_else(|| ConfigError::Semantic("atom-table needs values".into()))?,
        ),
        "coordinate-projection" => KernelSpec::CoordinateProjection,
        "constant" => KernelSpec::Constant(doc.kernel.value.unwrap_or(0.0)),
        other => {
            return Err(ConfigError::Semantic(format!(
                "unknown kernel type {other:?}"
            )))
        }
    };
    let cocycle = match doc.cocycle.kind.as_str() {
        "parity" => CocycleSpec::ParityPattern {
            signs: doc.cocycle.signs,
        },
        "broken-first-axis" => CocycleSpec::BrokenFirstAxis {
            signs: doc.cocycle.signs,
        },
        other => {
            return Err(ConfigError::Semantic(format!(
                "unknown cocycle type {other:?}"
            )))
        }
    };
    FieldSpec::new(alpha, action, kernel, cocycle)
        .map_err(|e| ConfigError::Semantic(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::fixtures;

    #[test]
    fn round_trip_is_lossless() {
        let alpha = Alpha::new(1.2).unwrap();
        for field in [
            fixtures::irrational_rot(alpha),
            fixtures::z3_flip(alpha),
            fixtures::gauss_iid(Alpha::new(1.0).unwrap(), 2),
            fixtures::pareto_iid(Alpha::new(1.5).unwrap(), 2, 3.0),
            fixtures::moving_avg(Alpha::new(1.5).unwrap(), 1, 8),
            fixtures::two_component(alpha),
        ] {
            let text = field_to_toml(&field);
            let back = field_from_toml(&text).unwrap_or_else(|e| {
                panic!("failed to reparse:\n{text}\nerror: {e}")
            });
            assert_eq!(field, back, "round trip drifted:\n{text}");
            // serialization is canonical: a second trip is byte-identical
            assert_eq!(text, field_to_toml(&back));
        }
    }

    #[test]
    fn quadratic_entries_survive_exactly() {
        let alpha = Alpha::new(1.2).unwrap();
        let field = fixtures::irrational_rot(alpha);
        let text = field_to_toml(&field);
        assert!(text.contains("sqrt 2"), "{text}");
        let back = field_from_toml(&text).unwrap();
        let ActionSpec::Translation(a) = &back.action else {
            panic!()
        };
        assert_eq!(a.columns[1][0], Quad::sqrt(2).unwrap());
    }

    #[test]
    fn bad_configs_are_reported() {
        assert!(field_from_toml("not toml at all [").is_err());
        let bad_alpha = r#"
[alpha]
value = 2.5
[action]
type = "coordinate-shift"
dim = 1
marginal = "gaussian"
[kernel]
type = "coordinate-projection"
[cocycle]
type = "parity"
signs = [1]
"#;
        assert!(matches!(
            field_from_toml(bad_alpha),
            Err(ConfigError::Semantic(_))
        ));
        let bad_action = bad_alpha.replace("value = 2.5", "value = 1.5").replace(
            "type = \"coordinate-shift\"",
            "type = \"unknown-action\"",
        );
        assert!(field_from_toml(&bad_action).is_err());
    }
}
