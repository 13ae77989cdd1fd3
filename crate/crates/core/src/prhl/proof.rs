//! Proof trees and their JSON encoding.

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::pwhile::ast::{Expr, Side};
use crate::pwhile::{parse_relational, Transform};

pub const PROOF_SCHEMA: &str = "prhl-proof/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed proof at {at}: {msg}")]
pub struct ProofFormatError {
    pub at: String,
    pub msg: String,
}

/// One step of a sequence split: how many leading statements of each
/// program it covers and the assertion holding afterwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqPart {
    /// `None` on the last part means "the remaining statements".
    pub left: Option<usize>,
    pub right: Option<usize>,
    /// Required on every part except the last, which ends in the goal's
    /// postcondition.
    pub mid: Option<Expr>,
    pub proof: ProofNode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofNode {
    Skip,
    /// Loop-free deterministic code on both sides.
    Assign,
    /// Loop-free deterministic code on one side, `skip` on the other.
    AssignSide(Side),
    /// Couples two samplings through the bijection `bij`, an expression in
    /// the bound name `var` that may read both memories.
    Sample {
        var: String,
        bij: Expr,
    },
    SampleSide(Side),
    Seq(Vec<SeqPart>),
    If {
        then: Box<ProofNode>,
        els: Box<ProofNode>,
    },
    IfSide {
        side: Side,
        then: Box<ProofNode>,
        els: Box<ProofNode>,
    },
    While {
        inv: Expr,
        body: Box<ProofNode>,
    },
    WhileSide {
        side: Side,
        inv: Expr,
        fuel: Option<usize>,
        body: Box<ProofNode>,
    },
    Case {
        split: Expr,
        yes: Box<ProofNode>,
        no: Box<ProofNode>,
    },
    Conseq {
        pre: Option<Expr>,
        post: Option<Expr>,
        inner: Box<ProofNode>,
    },
    Equiv {
        side: Side,
        transform: Transform,
        path: Vec<usize>,
        inner: Box<ProofNode>,
    },
}

fn side_suffix(side: Side) -> &'static str {
    match side {
        Side::Left => "l",
        Side::Right => "r",
    }
}

impl ProofNode {
    pub fn rule(&self) -> String {
        match self {
            ProofNode::Skip => "skip".into(),
            ProofNode::Assign => "assign".into(),
            ProofNode::AssignSide(s) => format!("assign-{}", side_suffix(*s)),
            ProofNode::Sample { .. } => "sample".into(),
            ProofNode::SampleSide(s) => format!("sample-{}", side_suffix(*s)),
            ProofNode::Seq(_) => "seq".into(),
            ProofNode::If { .. } => "if".into(),
            ProofNode::IfSide { side, .. } => format!("if-{}", side_suffix(*side)),
            ProofNode::While { .. } => "while".into(),
            ProofNode::WhileSide { side, .. } => format!("while-{}", side_suffix(*side)),
            ProofNode::Case { .. } => "case".into(),
            ProofNode::Conseq { .. } => "conseq".into(),
            ProofNode::Equiv { .. } => "equiv".into(),
        }
    }

    /// Identity coupling of two samplings.
    pub fn sample_identity() -> ProofNode {
        ProofNode::Sample {
            var: "v".into(),
            bij: Expr::var("v"),
        }
    }

    /// Number of rule applications in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            ProofNode::Seq(parts) => parts.iter().map(|p| p.proof.size()).sum(),
            ProofNode::If { then, els } | ProofNode::IfSide { then, els, .. } => {
                then.size() + els.size()
            }
            ProofNode::Case { yes, no, .. } => yes.size() + no.size(),
            ProofNode::While { body, .. } | ProofNode::WhileSide { body, .. } => body.size(),
            ProofNode::Conseq { inner, .. } | ProofNode::Equiv { inner, .. } => inner.size(),
            _ => 0,
        }
    }

    pub fn to_json(&self) -> Json {
        let mut o = Map::new();
        o.insert("rule".into(), json!(self.rule()));
        let mut put = |k: &str, v: Json| {
            o.insert(k.into(), v);
        };
        match self {
            ProofNode::Skip
            | ProofNode::Assign
            | ProofNode::AssignSide(_)
            | ProofNode::SampleSide(_) => {}
            ProofNode::Sample { var, bij } => {
                put("var", json!(var));
                put("bij", json!(bij.to_string()));
            }
            ProofNode::Seq(parts) => {
                let ps: Vec<Json> = parts
                    .iter()
                    .map(|p| {
                        let mut m = Map::new();
                        if let Some(l) = p.left {
                            m.insert("left".into(), json!(l));
                        }
                        if let Some(r) = p.right {
                            m.insert("right".into(), json!(r));
                        }
                        if let Some(mid) = &p.mid {
                            m.insert("mid".into(), json!(mid.to_string()));
                        }
                        m.insert("proof".into(), p.proof.to_json());
                        Json::Object(m)
                    })
                    .collect();
                put("parts", Json::Array(ps));
            }
            ProofNode::If { then, els } | ProofNode::IfSide { then, els, .. } => {
                put("then", then.to_json());
                put("else", els.to_json());
            }
            ProofNode::While { inv, body } => {
                put("inv", json!(inv.to_string()));
                put("body", body.to_json());
            }
            ProofNode::WhileSide {
                inv, fuel, body, ..
            } => {
                put("inv", json!(inv.to_string()));
                if let Some(f) = fuel {
                    put("fuel", json!(f));
                }
                put("body", body.to_json());
            }
            ProofNode::Case { split, yes, no } => {
                put("split", json!(split.to_string()));
                put("yes", yes.to_json());
                put("no", no.to_json());
            }
            ProofNode::Conseq { pre, post, inner } => {
                if let Some(p) = pre {
                    put("pre", json!(p.to_string()));
                }
                if let Some(p) = post {
                    put("post", json!(p.to_string()));
                }
                put("proof", inner.to_json());
            }
            ProofNode::Equiv {
                side,
                transform,
                path,
                inner,
            } => {
                put("side", json!(side.index()));
                put("transform", transform.to_json());
                put("path", json!(path));
                put("proof", inner.to_json());
            }
        }
        Json::Object(o)
    }

    pub fn from_json(j: &Json) -> Result<ProofNode, ProofFormatError> {
        decode(j, "proof")
    }
}

fn err(at: &str, msg: impl Into<String>) -> ProofFormatError {
    ProofFormatError {
        at: at.to_string(),
        msg: msg.into(),
    }
}

fn text<'j>(j: &'j Json, key: &str, at: &str) -> Result<&'j str, ProofFormatError> {
    j.get(key)
        .and_then(Json::as_str)
        .ok_or_else(|| err(at, format!("missing string field `{key}`")))
}

fn assertion(j: &Json, key: &str, at: &str) -> Result<Expr, ProofFormatError> {
    parse_relational(text(j, key, at)?, &[]).map_err(|e| err(at, format!("{key}: {e}")))
}

fn opt_assertion(j: &Json, key: &str, at: &str) -> Result<Option<Expr>, ProofFormatError> {
    match j.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(_) => assertion(j, key, at).map(Some),
    }
}

fn child(j: &Json, key: &str, at: &str) -> Result<Box<ProofNode>, ProofFormatError> {
    let sub = j
        .get(key)
        .ok_or_else(|| err(at, format!("missing sub-proof `{key}`")))?;
    Ok(Box::new(decode(sub, &format!("{at}.{key}"))?))
}

fn opt_usize(j: &Json, key: &str, at: &str) -> Result<Option<usize>, ProofFormatError> {
    match j.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| err(at, format!("`{key}` must be a natural"))),
    }
}

fn side_field(j: &Json, at: &str) -> Result<Side, ProofFormatError> {
    match j.get("side").and_then(Json::as_u64) {
        Some(1) => Ok(Side::Left),
        Some(2) => Ok(Side::Right),
        _ => Err(err(at, "`side` must be 1 or 2")),
    }
}

fn decode(j: &Json, at: &str) -> Result<ProofNode, ProofFormatError> {
    let rule = text(j, "rule", at)?;
    let at = &format!("{at}:{rule}");
    let (base, side) = match rule.rsplit_once('-') {
        Some((b, "l")) => (b, Some(Side::Left)),
        Some((b, "r")) => (b, Some(Side::Right)),
        _ => (rule, None),
    };
    Ok(match (base, side) {
        ("skip", None) => ProofNode::Skip,
        ("assign", None) => ProofNode::Assign,
        ("assign", Some(s)) => ProofNode::AssignSide(s),
        ("sample", None) => {
            let var = j
                .get("var")
                .and_then(Json::as_str)
                .unwrap_or("v")
                .to_string();
            let bij = match j.get("bij").and_then(Json::as_str) {
                None => Expr::var(&var),
                Some(src) => {
                    parse_relational(src, &[&var]).map_err(|e| err(at, format!("bij: {e}")))?
                }
            };
            ProofNode::Sample { var, bij }
        }
        ("sample", Some(s)) => ProofNode::SampleSide(s),
        ("seq", None) => {
            let parts = j
                .get("parts")
                .and_then(Json::as_array)
                .ok_or_else(|| err(at, "missing `parts` array"))?;
            let mut out = Vec::new();
            for (i, p) in parts.iter().enumerate() {
                let pat = format!("{at}.parts[{i}]");
                out.push(SeqPart {
                    left: opt_usize(p, "left", &pat)?,
                    right: opt_usize(p, "right", &pat)?,
                    mid: opt_assertion(p, "mid", &pat)?,
                    proof: *child(p, "proof", &pat)?,
                });
            }
            ProofNode::Seq(out)
        }
        ("if", None) => ProofNode::If {
            then: child(j, "then", at)?,
            els: child(j, "else", at)?,
        },
        ("if", Some(side)) => ProofNode::IfSide {
            side,
            then: child(j, "then", at)?,
            els: child(j, "else", at)?,
        },
        ("while", None) => ProofNode::While {
            inv: assertion(j, "inv", at)?,
            body: child(j, "body", at)?,
        },
        ("while", Some(side)) => ProofNode::WhileSide {
            side,
            inv: assertion(j, "inv", at)?,
            fuel: opt_usize(j, "fuel", at)?,
            body: child(j, "body", at)?,
        },
        ("case", None) => ProofNode::Case {
            split: assertion(j, "split", at)?,
            yes: child(j, "yes", at)?,
            no: child(j, "no", at)?,
        },
        ("conseq", None) => ProofNode::Conseq {
            pre: opt_assertion(j, "pre", at)?,
            post: opt_assertion(j, "post", at)?,
            inner: child(j, "proof", at)?,
        },
        ("equiv", None) => {
            let transform = Transform::from_json(
                j.get("transform")
                    .ok_or_else(|| err(at, "missing `transform`"))?,
            )
            .map_err(|e| err(at, e.to_string()))?;
            let path = j
                .get("path")
                .and_then(Json::as_array)
                .and_then(|a| {
                    a.iter()
                        .map(|x| x.as_u64().map(|n| n as usize))
                        .collect::<Option<Vec<_>>>()
                })
                .ok_or_else(|| err(at, "`path` must be an array of naturals"))?;
            ProofNode::Equiv {
                side: side_field(j, at)?,
                transform,
                path,
                inner: child(j, "proof", at)?,
            }
        }
        _ => return Err(err(at, format!("unknown rule `{rule}`"))),
    })
}

/// A judgment's assertions together with the proof tree, as stored in a
/// proof file. The programs come from separate files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofScript {
    pub pre: Expr,
    pub post: Expr,
    pub proof: ProofNode,
}

impl ProofScript {
    pub fn to_json(&self) -> Json {
        json!({
            "schema": PROOF_SCHEMA,
            "pre": self.pre.to_string(),
            "post": self.post.to_string(),
            "proof": self.proof.to_json(),
        })
    }

    pub fn from_json(j: &Json) -> Result<ProofScript, ProofFormatError> {
        match j.get("schema").and_then(Json::as_str) {
            Some(PROOF_SCHEMA) | None => {}
            Some(other) => return Err(err("script", format!("unsupported schema {other}"))),
        }
        Ok(ProofScript {
            pre: assertion(j, "pre", "script")?,
            post: assertion(j, "post", "script")?,
            proof: *child(j, "proof", "script")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let rel = |s: &str| parse_relational(s, &[]).unwrap();
        let p = ProofNode::Seq(vec![
            SeqPart {
                left: Some(1),
                right: Some(1),
                mid: Some(rel("x#1 = x#2")),
                proof: ProofNode::Assign,
            },
            SeqPart {
                left: None,
                right: None,
                mid: None,
                proof: ProofNode::Case {
                    split: rel("x#1 = 0"),
                    yes: Box::new(ProofNode::Sample {
                        var: "v".into(),
                        bij: parse_relational("!v", &["v"]).unwrap(),
                    }),
                    no: Box::new(ProofNode::WhileSide {
                        side: Side::Right,
                        inv: rel("true"),
                        fuel: Some(9),
                        body: Box::new(ProofNode::AssignSide(Side::Right)),
                    }),
                },
            },
        ]);
        let script = ProofScript {
            pre: rel("x#1 = x#2"),
            post: rel("x#1 >= x#2"),
            proof: p,
        };
        let back = ProofScript::from_json(&script.to_json()).unwrap();
        assert_eq!(back, script);
        assert_eq!(back.proof.size(), 6);
    }

    #[test]
    fn unknown_rules_are_rejected() {
        let e = ProofNode::from_json(&json!({ "rule": "frobnicate" })).unwrap_err();
        assert!(e.msg.contains("frobnicate"));
        assert!(
            ProofNode::from_json(&json!({ "rule": "while", "body": { "rule": "skip" } })).is_err()
        );
    }
}
