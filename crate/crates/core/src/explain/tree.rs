use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condition::ThresholdCondition;

/// Boolean formula over threshold conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NodeDoc", try_from = "NodeDoc")]
pub enum Explanation {
    And(Vec<Explanation>),
    Or(Vec<Explanation>),
    Not(Box<Explanation>),
    Leaf(ThresholdCondition),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicType {
    And,
    Or,
    Not,
    Leaf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NodeDoc {
    logic_type: LogicType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<ThresholdCondition>,
}

impl From<Explanation> for NodeDoc {
    fn from(e: Explanation) -> Self {
        let node = |logic_type, children: Vec<Explanation>| NodeDoc {
            logic_type,
            children: children.into_iter().map(Into::into).collect(),
            condition: None,
        };
        match e {
            Explanation::And(c) => node(LogicType::And, c),
            Explanation::Or(c) => node(LogicType::Or, c),
            Explanation::Not(c) => node(LogicType::Not, vec![*c]),
            Explanation::Leaf(cond) => NodeDoc { logic_type: LogicType::Leaf, children: Vec::new(), condition: Some(cond) },
        }
    }
}

impl TryFrom<NodeDoc> for Explanation {
    type Error = String;

    fn try_from(doc: NodeDoc) -> Result<Self, String> {
        let children = doc.children.into_iter().map(Explanation::try_from).collect::<Result<Vec<_>, _>>()?;
        match doc.logic_type {
            LogicType::And => Ok(Explanation::And(children)),
            LogicType::Or => Ok(Explanation::Or(children)),
            LogicType::Not => match <[Explanation; 1]>::try_from(children) {
                Ok([c]) => Ok(Explanation::Not(Box::new(c))),
                Err(_) => Err("Not needs exactly one child".into()),
            },
            LogicType::Leaf => {
                if !children.is_empty() {
                    return Err("Leaf cannot have children".into());
                }
                doc.condition.map(Explanation::Leaf).ok_or_else(|| "Leaf needs a condition".into())
            }
        }
    }
}

impl Explanation {
    pub fn logic_type(&self) -> LogicType {
        match self {
            Explanation::And(_) => LogicType::And,
            Explanation::Or(_) => LogicType::Or,
            Explanation::Not(_) => LogicType::Not,
            Explanation::Leaf(_) => LogicType::Leaf,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Explanation::And(c) | Explanation::Or(c) if c.is_empty())
    }

    /// Crisp truth on a raw feature row. An empty And is true, an empty Or false.
    pub fn eval(&self, raw: &[f64]) -> bool {
        match self {
            Explanation::And(c) => c.iter().all(|e| e.eval(raw)),
            Explanation::Or(c) => c.iter().any(|e| e.eval(raw)),
            Explanation::Not(c) => !c.eval(raw),
            Explanation::Leaf(cond) => cond.holds(raw),
        }
    }

    pub fn leaves(&self) -> Vec<&ThresholdCondition> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ThresholdCondition>) {
        match self {
            Explanation::And(c) | Explanation::Or(c) => c.iter().for_each(|e| e.collect_leaves(out)),
            Explanation::Not(c) => c.collect_leaves(out),
            Explanation::Leaf(cond) => out.push(cond),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    pub fn count_not(&self) -> usize {
        match self {
            Explanation::And(c) | Explanation::Or(c) => c.iter().map(Explanation::count_not).sum(),
            Explanation::Not(c) => 1 + c.count_not(),
            Explanation::Leaf(_) => 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serializes")
    }
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, c: &[Explanation]| {
            write!(f, "{name}(")?;
            for (i, e) in c.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str(")")
        };
        match self {
            e if e.is_empty() => Ok(()),
            Explanation::And(c) => list(f, "AND", c),
            Explanation::Or(c) => list(f, "OR", c),
            Explanation::Not(c) => write!(f, "NOT({c})"),
            Explanation::Leaf(cond) => write!(f, "{cond}"),
        }
    }
}
