//! Finite enumeration domains for program variables.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use super::ast::Side;
use crate::dist::Value;

/// A memory: variable name to value.
pub type Memory = BTreeMap<String, Value>;

pub const DEFAULT_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("no domain declared for variable {0}")]
    Missing(String),
    #[error("enumeration needs {needed} memories, above the cap of {cap}")]
    Capacity { needed: String, cap: u64 },
    #[error("malformed domain declaration: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Bool,
    /// Inclusive integer interval.
    Int(i64, i64),
    Enum(Vec<String>),
    /// All lists of length at most `max_len`.
    List {
        elem: Box<Domain>,
        max_len: usize,
    },
    Tuple(Vec<Domain>),
    /// Tuples of `len` elements from one domain.
    Vec {
        elem: Box<Domain>,
        len: usize,
    },
    /// An explicit set of values.
    Values(Vec<Value>),
}

impl Domain {
    pub fn size(&self) -> u128 {
        match self {
            Domain::Bool => 2,
            Domain::Int(lo, hi) => {
                if hi < lo {
                    0
                } else {
                    (*hi as i128 - *lo as i128 + 1) as u128
                }
            }
            Domain::Enum(vs) => vs.len() as u128,
            Domain::List { elem, max_len } => {
                let e = elem.size();
                let mut total: u128 = 0;
                let mut layer: u128 = 1;
                for _ in 0..=*max_len {
                    total = total.saturating_add(layer);
                    layer = layer.saturating_mul(e);
                }
                total
            }
            Domain::Tuple(ds) => ds.iter().fold(1u128, |acc, d| acc.saturating_mul(d.size())),
            Domain::Vec { elem, len } => {
                (0..*len).fold(1u128, |acc, _| acc.saturating_mul(elem.size()))
            }
            Domain::Values(vs) => vs.len() as u128,
        }
    }

    /// All values, in a fixed order. Callers check `size` against a cap
    /// first.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Int(lo, hi) => (*lo..=*hi).map(Value::int).collect(),
            Domain::Enum(vs) => vs.iter().map(|v| Value::enumeration(v)).collect(),
            Domain::List { elem, max_len } => {
                let elems = elem.values();
                let mut out = vec![Value::List(vec![])];
                let mut layer: Vec<Vec<Value>> = vec![vec![]];
                for _ in 0..*max_len {
                    layer = layer
                        .iter()
                        .flat_map(|prefix| {
                            elems.iter().map(move |e| {
                                let mut l = prefix.clone();
                                l.push(e.clone());
                                l
                            })
                        })
                        .collect();
                    out.extend(layer.iter().cloned().map(Value::List));
                }
                out
            }
            Domain::Tuple(ds) => product(&ds.iter().map(Domain::values).collect::<Vec<_>>())
                .into_iter()
                .map(Value::Tuple)
                .collect(),
            Domain::Vec { elem, len } => product(&vec![elem.values(); *len])
                .into_iter()
                .map(Value::Tuple)
                .collect(),
            Domain::Values(vs) => vs.clone(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Int(lo, hi), Value::Int(i)) => {
                i64::try_from(i.clone()).is_ok_and(|i| *lo <= i && i <= *hi)
            }
            (Domain::Enum(vs), Value::Enum(c)) => vs.contains(c),
            (Domain::List { elem, max_len }, Value::List(xs)) => {
                xs.len() <= *max_len && xs.iter().all(|x| elem.contains(x))
            }
            (Domain::Tuple(ds), Value::Tuple(xs)) => {
                ds.len() == xs.len() && ds.iter().zip(xs).all(|(d, x)| d.contains(x))
            }
            (Domain::Vec { elem, len }, Value::Tuple(xs)) => {
                xs.len() == *len && xs.iter().all(|x| elem.contains(x))
            }
            (Domain::Values(vs), _) => vs.contains(v),
            _ => false,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Domain::Bool => json!("bool"),
            Domain::Int(lo, hi) => json!({ "int": [lo, hi] }),
            Domain::Enum(vs) => json!({ "enum": vs }),
            Domain::List { elem, max_len } => {
                json!({ "list": { "elem": elem.to_json(), "max_len": max_len } })
            }
            Domain::Tuple(ds) => {
                json!({ "tuple": ds.iter().map(Domain::to_json).collect::<Vec<_>>() })
            }
            Domain::Vec { elem, len } => json!({ "vec": { "elem": elem.to_json(), "len": len } }),
            Domain::Values(vs) => {
                json!({ "values": vs.iter().map(Value::to_json).collect::<Vec<_>>() })
            }
        }
    }

    pub fn from_json(j: &Json) -> Result<Domain, DomainError> {
        let bad = || DomainError::Malformed(j.to_string());
        if j.as_str() == Some("bool") {
            return Ok(Domain::Bool);
        }
        let obj = j.as_object().filter(|o| o.len() == 1).ok_or_else(bad)?;
        let (key, body) = obj.iter().next().expect("one entry");
        let usize_field = |o: &Json, f: &str| {
            o.get(f)
                .and_then(Json::as_u64)
                .map(|v| v as usize)
                .ok_or_else(bad)
        };
        match key.as_str() {
            "int" => {
                let b = body.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
                let lo = b[0].as_i64().ok_or_else(bad)?;
                let hi = b[1].as_i64().ok_or_else(bad)?;
                Ok(Domain::Int(lo, hi))
            }
            "enum" => Ok(Domain::Enum(
                body.as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).ok_or_else(bad))
                    .collect::<Result<_, _>>()?,
            )),
            "list" => Ok(Domain::List {
                elem: Box::new(Domain::from_json(body.get("elem").ok_or_else(bad)?)?),
                max_len: usize_field(body, "max_len")?,
            }),
            "vec" => Ok(Domain::Vec {
                elem: Box::new(Domain::from_json(body.get("elem").ok_or_else(bad)?)?),
                len: usize_field(body, "len")?,
            }),
            "tuple" => Ok(Domain::Tuple(
                body.as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(Domain::from_json)
                    .collect::<Result<_, _>>()?,
            )),
            "values" => Ok(Domain::Values(
                body.as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|v| Value::from_json(v).map_err(DomainError::Malformed))
                    .collect::<Result<_, _>>()?,
            )),
            _ => Err(bad()),
        }
    }
}

fn product(factors: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![vec![]];
    for f in factors {
        out = out
            .iter()
            .flat_map(|prefix| {
                f.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Domains for the variables of both programs: shared entries plus
/// per-side overrides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainDecl {
    pub vars: BTreeMap<String, Domain>,
    pub left: BTreeMap<String, Domain>,
    pub right: BTreeMap<String, Domain>,
    pub cap: u64,
}

impl Default for DomainDecl {
    fn default() -> Self {
        DomainDecl {
            vars: BTreeMap::new(),
            left: BTreeMap::new(),
            right: BTreeMap::new(),
            cap: DEFAULT_CAP,
        }
    }
}

pub const DOMAINS_SCHEMA: &str = "prhl-domains/1";

impl DomainDecl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, d: Domain) -> Self {
        self.vars.insert(name.to_string(), d);
        self
    }

    pub fn with_side(mut self, side: Side, name: &str, d: Domain) -> Self {
        self.side_map_mut(side).insert(name.to_string(), d);
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    fn side_map_mut(&mut self, side: Side) -> &mut BTreeMap<String, Domain> {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }

    pub fn get(&self, side: Option<Side>, name: &str) -> Option<&Domain> {
        let specific = match side {
            Some(Side::Left) => self.left.get(name),
            Some(Side::Right) => self.right.get(name),
            None => None,
        };
        specific.or_else(|| self.vars.get(name))
    }

    /// Adds domains declared inline in a program, without overriding
    /// explicit entries.
    pub fn absorb_inline(&mut self, side: Option<Side>, inline: &BTreeMap<String, Domain>) {
        for (name, d) in inline {
            if self.get(side, name).is_none() {
                match side {
                    Some(s) => self.side_map_mut(s).insert(name.clone(), d.clone()),
                    None => self.vars.insert(name.clone(), d.clone()),
                };
            }
        }
    }

    pub fn check_size(&self, size: u128) -> Result<(), DomainError> {
        if size > u128::from(self.cap) {
            return Err(DomainError::Capacity {
                needed: size.to_string(),
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Every memory over `names`, in lexicographic order of the domains.
    pub fn memories<'a, I>(&self, side: Option<Side>, names: I) -> Result<Vec<Memory>, DomainError>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut doms = Vec::new();
        for n in names {
            let d = self
                .get(side, n)
                .ok_or_else(|| DomainError::Missing(n.clone()))?;
            doms.push((n.clone(), d));
        }
        let size = doms
            .iter()
            .fold(1u128, |acc, (_, d)| acc.saturating_mul(d.size()));
        self.check_size(size)?;
        let values: Vec<Vec<Value>> = doms.iter().map(|(_, d)| d.values()).collect();
        Ok(product(&values)
            .into_iter()
            .map(|vs| doms.iter().map(|(n, _)| n.clone()).zip(vs).collect())
            .collect())
    }

    pub fn to_json(&self) -> Json {
        let enc = |m: &BTreeMap<String, Domain>| -> Json {
            Json::Object(
                m.iter()
                    .map(|(k, d)| (k.clone(), d.to_json()))
                    .collect::<Map<_, _>>(),
            )
        };
        let mut out = Map::new();
        out.insert("schema".into(), json!(DOMAINS_SCHEMA));
        out.insert("vars".into(), enc(&self.vars));
        if !self.left.is_empty() {
            out.insert("left".into(), enc(&self.left));
        }
        if !self.right.is_empty() {
            out.insert("right".into(), enc(&self.right));
        }
        out.insert("cap".into(), json!(self.cap));
        Json::Object(out)
    }

    pub fn from_json(j: &Json) -> Result<DomainDecl, DomainError> {
        let obj = j
            .as_object()
            .ok_or_else(|| DomainError::Malformed("expected an object".into()))?;
        if let Some(s) = obj.get("schema") {
            if s.as_str() != Some(DOMAINS_SCHEMA) {
                return Err(DomainError::Malformed(format!("unsupported schema {s}")));
            }
        }
        let dec = |key: &str| -> Result<BTreeMap<String, Domain>, DomainError> {
            match obj.get(key) {
                None => Ok(BTreeMap::new()),
                Some(Json::Object(m)) => m
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), Domain::from_json(v)?)))
                    .collect(),
                Some(other) => Err(DomainError::Malformed(format!(
                    "{key} must be an object, got {other}"
                ))),
            }
        };
        let cap = match obj.get("cap") {
            None => DEFAULT_CAP,
            Some(c) => c
                .as_u64()
                .ok_or_else(|| DomainError::Malformed(format!("cap must be a natural, got {c}")))?,
        };
        Ok(DomainDecl {
            vars: dec("vars")?,
            left: dec("left")?,
            right: dec("right")?,
            cap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_domain_enumerates_by_length() {
        let d = Domain::List {
            elem: Box::new(Domain::Bool),
            max_len: 2,
        };
        let vs = d.values();
        assert_eq!(vs.len() as u128, d.size());
        assert_eq!(vs.len(), 7);
        assert_eq!(vs[0], Value::List(vec![]));
        assert!(vs.iter().all(|v| d.contains(v)));
        assert!(!d.contains(&Value::List(vec![Value::Bool(true); 3])));
    }

    #[test]
    fn json_round_trip() {
        let decl = DomainDecl::new()
            .with("x", Domain::Int(-2, 2))
            .with(
                "H",
                Domain::List {
                    elem: Box::new(Domain::Bool),
                    max_len: 3,
                },
            )
            .with_side(
                Side::Right,
                "m",
                Domain::Enum(vec!["Left".into(), "Right".into()]),
            )
            .with("p", Domain::Values(vec![Value::rat(1, 2)]))
            .with_cap(50);
        assert_eq!(DomainDecl::from_json(&decl.to_json()).unwrap(), decl);
    }

    #[test]
    fn cap_is_enforced() {
        let decl = DomainDecl::new()
            .with("x", Domain::Int(0, 99))
            .with("y", Domain::Int(0, 99))
            .with_cap(1000);
        let names = ["x".to_string(), "y".to_string()];
        assert!(matches!(
            decl.memories(None, &names),
            Err(DomainError::Capacity { .. })
        ));
        assert_eq!(decl.memories(None, &names[..1]).unwrap().len(), 100);
        assert!(matches!(
            decl.memories(None, &["z".to_string()]),
            Err(DomainError::Missing(_))
        ));
    }
}
