//! JSON system definitions.
//!
//! ```json
//! {
//!   "schema": "1",
//!   "kind": "cozermelo",
//!   "e1": ["1", "0"],
//!   "e2": ["0", "1"],
//!   "ups": ["2*q1", "2*q2"],
//!   "region": { "q1": [-0.3, 0.3], "q2": [-0.3, 0.3], "nq": 9, "u_samples": 16 }
//! }
//! ```
//!
//! `kind` is one of `general` (`f`, optional `control`, `epsilon_hint`),
//! `riemannian` (`e1`, `e2`), `zermelo` (`e1`, `e2` and either `x` in frame
//! components or `drift` in coordinates), `cozermelo` (`e1`, `e2` and either
//! `ups` in frame components or `form` in coordinates) and `moser` (`a1`, `a2`,
//! `sign`, `u0`, optional `span` and `steps`). `schema`, `name` and `region` are
//! optional on every kind.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::expr::Expression;
use crate::flows::{generate_commuting_system, GenerateConfig, MoserFamily, TransportConfig};
use crate::systems::{CoZermeloData, ControlDomain, ControlSystem2D, FramePair, ZermeloData};

use super::{LoadError, RegionSpec};

pub const SCHEMA_VERSION: &str = "1";

type Pair = [String; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSpec {
    pub f: Pair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_hint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannianSpec {
    pub e1: Pair,
    pub e2: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZermeloSpec {
    pub e1: Pair,
    pub e2: Pair,
    /// Drift in frame components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Pair>,
    /// Drift in coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoZermeloSpec {
    pub e1: Pair,
    pub e2: Pair,
    /// One-form in frame components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ups: Option<Pair>,
    /// One-form in coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoserSpec {
    pub a1: String,
    pub a2: String,
    pub sign: f64,
    pub u0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemSpec {
    General(GeneralSpec),
    Riemannian(RiemannianSpec),
    Zermelo(ZermeloSpec),
    Cozermelo(CoZermeloSpec),
    Moser(MoserSpec),
}

pub const KINDS: [&str; 5] = ["general", "riemannian", "zermelo", "cozermelo", "moser"];

impl SystemSpec {
    /// Deserialise by `kind`, reporting field paths relative to the file root.
    fn from_map(mut map: serde_json::Map<String, Value>) -> Result<Self, LoadError> {
        let kind = match map.remove("kind") {
            Some(Value::String(k)) => k,
            Some(other) => {
                return Err(LoadError::Schema { path: "kind".into(), message: format!("expected a string, got {other}") })
            }
            None => return Err(LoadError::Schema { path: ".".into(), message: "missing field `kind`".into() }),
        };
        let rest = Value::Object(map);
        Ok(match kind.as_str() {
            "general" => SystemSpec::General(typed(rest, "")?),
            "riemannian" => SystemSpec::Riemannian(typed(rest, "")?),
            "zermelo" => SystemSpec::Zermelo(typed(rest, "")?),
            "cozermelo" => SystemSpec::Cozermelo(typed(rest, "")?),
            "moser" => SystemSpec::Moser(typed(rest, "")?),
            other => {
                return Err(LoadError::Schema {
                    path: "kind".into(),
                    message: format!("unknown kind `{other}`, expected one of {}", KINDS.join(", ")),
                })
            }
        })
    }
}

/// A parsed definition file before lowering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemFile {
    pub schema: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
    #[serde(flatten)]
    pub spec: SystemSpec,
}

fn typed<T: for<'de> Deserialize<'de>>(value: Value, prefix: &str) -> Result<T, LoadError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner,
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        LoadError::Schema { path, message: e.into_inner().to_string() }
    })
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| LoadError::Schema { path: ".".into(), message: e.to_string() })?;
        let Value::Object(mut map) = value else {
            return Err(LoadError::Schema { path: ".".into(), message: "expected a JSON object".into() });
        };
        let schema = match map.remove("schema") {
            None => SCHEMA_VERSION.to_string(),
            Some(Value::String(s)) if s == SCHEMA_VERSION => s,
            Some(other) => {
                return Err(LoadError::Schema {
                    path: "schema".into(),
                    message: format!("unsupported schema version {other}, expected \"{SCHEMA_VERSION}\""),
                })
            }
        };
        let name = map.remove("name").map(|v| typed::<String>(v, "name")).transpose()?;
        let region = map.remove("region").map(|v| typed::<RegionSpec>(v, "region")).transpose()?;
        let spec = SystemSpec::from_map(map)?;
        Ok(SystemFile { schema, name, region, spec })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files serialise")
    }

    /// Lower to a system, parsing every expression.
    pub fn build(&self) -> Result<ControlSystem2D, LoadError> {
        let expr = |field: &str, text: &str| {
            Expression::parse(text).map_err(|source| LoadError::Expression { field: field.to_string(), source })
        };
        let pair =
            |field: &str, p: &Pair| -> Result<[Expression; 2], LoadError> {
                Ok([expr(&format!("{field}[0]"), &p[0])?, expr(&format!("{field}[1]"), &p[1])?])
            };
        let frame = |e1: &Pair, e2: &Pair| -> Result<FramePair, LoadError> {
            Ok(FramePair::new(pair("e1", e1)?, pair("e2", e2)?))
        };
        let one_of = |a: &Option<Pair>, an: &str, b: &Option<Pair>, bn: &str| -> Result<(bool, Pair), LoadError> {
            match (a, b) {
                (Some(p), None) => Ok((true, p.clone())),
                (None, Some(p)) => Ok((false, p.clone())),
                _ => Err(LoadError::Schema { path: ".".into(), message: format!("exactly one of `{an}` and `{bn}` is required") }),
            }
        };
        Ok(match &self.spec {
            SystemSpec::General(GeneralSpec { f, control, epsilon_hint }) => {
                let sys = ControlSystem2D::general(pair("f", f)?, control.unwrap_or(ControlDomain::Circle));
                match epsilon_hint {
                    Some(e) if *e == 1.0 || *e == -1.0 => sys.with_epsilon_hint(*e),
                    Some(e) => {
                        return Err(LoadError::Schema {
                            path: "epsilon_hint".into(),
                            message: format!("expected 1 or -1, got {e}"),
                        })
                    }
                    None => sys,
                }
            }
            SystemSpec::Riemannian(RiemannianSpec { e1, e2 }) => ControlSystem2D::riemannian(frame(e1, e2)?),
            SystemSpec::Zermelo(ZermeloSpec { e1, e2, x, drift }) => {
                let fr = frame(e1, e2)?;
                let data = match one_of(x, "x", drift, "drift")? {
                    (true, p) => {
                        let [x1, x2] = pair("x", &p)?;
                        ZermeloData::new(fr, x1, x2)
                    }
                    (false, p) => ZermeloData::from_coordinate_drift(fr, pair("drift", &p)?),
                };
                ControlSystem2D::zermelo(data)
            }
            SystemSpec::Cozermelo(CoZermeloSpec { e1, e2, ups, form }) => {
                let fr = frame(e1, e2)?;
                let data = match one_of(ups, "ups", form, "form")? {
                    (true, p) => {
                        let [u1, u2] = pair("ups", &p)?;
                        CoZermeloData::new(fr, u1, u2)
                    }
                    (false, p) => CoZermeloData::from_coordinate_form(fr, pair("form", &p)?),
                };
                ControlSystem2D::cozermelo(data)
            }
            SystemSpec::Moser(MoserSpec { a1, a2, sign, u0, span, steps }) => {
                let fam = MoserFamily::new(expr("a1", a1)?, expr("a2", a2)?, *sign, *u0).map_err(LoadError::Family)?;
                let defaults = GenerateConfig::default();
                let cfg = GenerateConfig {
                    transport: TransportConfig { steps: steps.unwrap_or(defaults.transport.steps), ..defaults.transport },
                    span: span.unwrap_or(defaults.span),
                };
                generate_commuting_system(&fam, &cfg)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_riemannian_file() {
        let f = SystemFile::from_json(r#"{"kind":"riemannian","e1":["1","0"],"e2":["0","1"]}"#).unwrap();
        assert_eq!(f.schema, "1");
        assert!(f.region.is_none());
        f.build().unwrap();
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = SystemFile::from_json(r#"{"kind":"riemannian","e1":["1",0],"e2":["0","1"]}"#).unwrap_err();
        assert!(matches!(&err, LoadError::Schema { path, .. } if path == "e1[1]"), "{err}");
        let err = SystemFile::from_json(r#"{"kind":"riemannian","e1":["1","0"],"e2":["0","1"],"e3":1}"#).unwrap_err();
        assert!(err.to_string().contains("e3"), "{err}");
        let err = SystemFile::from_json(r#"{"kind":"warp","f":["1","0"]}"#).unwrap_err();
        assert!(err.to_string().contains("warp"), "{err}");
        let err = SystemFile::from_json(r#"{"schema":"2","kind":"general","f":["1","0"]}"#).unwrap_err();
        assert!(matches!(&err, LoadError::Schema { path, .. } if path == "schema"));
        let err = SystemFile::from_json(r#"{"kind":"general","f":["1","0"],"region":{"q1":[0,1]}}"#).unwrap_err();
        assert!(matches!(&err, LoadError::Schema { path, .. } if path.starts_with("region")), "{err}");
    }

    #[test]
    fn expression_errors_name_the_field() {
        let f = SystemFile::from_json(r#"{"kind":"general","f":["cos(u)","sin(u"]}"#).unwrap();
        let err = f.build().unwrap_err();
        assert!(matches!(&err, LoadError::Expression { field, .. } if field == "f[1]"), "{err}");
    }

    #[test]
    fn zermelo_needs_exactly_one_drift() {
        let both = r#"{"kind":"zermelo","e1":["1","0"],"e2":["0","1"],"x":["0","0"],"drift":["0","0"]}"#;
        assert!(SystemFile::from_json(both).unwrap().build().is_err());
        let none = r#"{"kind":"zermelo","e1":["1","0"],"e2":["0","1"]}"#;
        assert!(SystemFile::from_json(none).unwrap().build().is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{"schema":"1","name":"m","kind":"moser","a1":"0","a2":"0.1*q2^2","sign":1,"u0":0,"steps":32}"#;
        let f = SystemFile::from_json(text).unwrap();
        assert_eq!(SystemFile::from_json(&f.to_json()).unwrap(), f);
    }
}
