//! Rewrite rules that turn a raw explanation tree into a short rule list.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::tree::Explanation;
use crate::condition::ThresholdCondition;

/// Moves every negation onto a leaf: double negation, De Morgan, and
/// operator flips on negated conditions.
pub fn push_negations_down(e: &Explanation) -> Explanation {
    push(e, false)
}

fn push(e: &Explanation, negate: bool) -> Explanation {
    match e {
        Explanation::Leaf(c) if negate => Explanation::Leaf(c.negated()),
        Explanation::Leaf(c) => Explanation::Leaf(c.clone()),
        Explanation::Not(inner) => push(inner, !negate),
        Explanation::And(cs) => {
            let cs = cs.iter().map(|c| push(c, negate)).collect();
            if negate {
                Explanation::Or(cs)
            } else {
                Explanation::And(cs)
            }
        }
        Explanation::Or(cs) => {
            let cs = cs.iter().map(|c| push(c, negate)).collect();
            if negate {
                Explanation::And(cs)
            } else {
                Explanation::Or(cs)
            }
        }
    }
}

fn flatten(children: Vec<Explanation>, is_and: bool) -> Vec<Explanation> {
    let mut out = Vec::with_capacity(children.len());
    for c in children {
        match c {
            Explanation::And(g) if is_and => out.extend(g),
            Explanation::Or(g) if !is_and => out.extend(g),
            other => out.push(other),
        }
    }
    out
}

/// Flattens nested And-in-And and Or-in-Or.
pub fn collapse_repeated_operands(e: &Explanation) -> Explanation {
    match e {
        Explanation::And(cs) => Explanation::And(flatten(cs.iter().map(collapse_repeated_operands).collect(), true)),
        Explanation::Or(cs) => Explanation::Or(flatten(cs.iter().map(collapse_repeated_operands).collect(), false)),
        Explanation::Not(c) => Explanation::Not(Box::new(collapse_repeated_operands(c))),
        leaf => leaf.clone(),
    }
}

/// Replaces single-child connectives by their child. A hoisted child of the
/// same type as its new parent is flattened into it.
pub fn collapse_single_operands(e: &Explanation) -> Explanation {
    let rebuild = |cs: &[Explanation], is_and: bool| {
        let mut cs = flatten(cs.iter().map(collapse_single_operands).collect(), is_and);
        if cs.len() == 1 {
            cs.pop().unwrap()
        } else if is_and {
            Explanation::And(cs)
        } else {
            Explanation::Or(cs)
        }
    };
    match e {
        Explanation::And(cs) => rebuild(cs, true),
        Explanation::Or(cs) => rebuild(cs, false),
        Explanation::Not(c) => Explanation::Not(Box::new(collapse_single_operands(c))),
        leaf => leaf.clone(),
    }
}

/// The tighter (in an And) or looser (in an Or) of two same-feature,
/// same-direction bounds. At equal thresholds a conjunction keeps the strict
/// operator and a disjunction the non-strict one.
fn merge(a: &ThresholdCondition, b: &ThresholdCondition, in_and: bool) -> ThresholdCondition {
    let upper = a.op.is_upper_bound();
    if a.threshold == b.threshold {
        let want_strict = in_and;
        return if a.op.is_strict() == want_strict { a.clone() } else { b.clone() };
    }
    let a_smaller = a.threshold < b.threshold;
    // And: upper bounds keep the min, lower bounds the max. Or: the reverse.
    let keep_a = if upper == in_and { a_smaller } else { !a_smaller };
    if keep_a {
        a.clone()
    } else {
        b.clone()
    }
}

/// Merges leaf siblings constraining the same feature in the same direction.
pub fn remove_redundant_predicates(e: &Explanation) -> Explanation {
    let dedup = |cs: &[Explanation], in_and: bool| -> Vec<Explanation> {
        let mut out: Vec<Explanation> = Vec::with_capacity(cs.len());
        for c in cs.iter().map(remove_redundant_predicates) {
            if let Explanation::Leaf(cond) = &c {
                let slot = out.iter_mut().find(|o| {
                    matches!(o, Explanation::Leaf(p)
                        if p.feature_index == cond.feature_index && p.op.is_upper_bound() == cond.op.is_upper_bound())
                });
                if let Some(Explanation::Leaf(prev)) = slot {
                    *prev = merge(prev, cond, in_and);
                    continue;
                }
            }
            out.push(c);
        }
        out
    };
    match e {
        Explanation::And(cs) => Explanation::And(dedup(cs, true)),
        Explanation::Or(cs) => Explanation::Or(dedup(cs, false)),
        Explanation::Not(c) => Explanation::Not(Box::new(remove_redundant_predicates(c))),
        leaf => leaf.clone(),
    }
}

fn drop_false_branches(e: &Explanation, raw: &[f64]) -> Explanation {
    match e {
        Explanation::And(cs) => Explanation::And(cs.iter().map(|c| drop_false_branches(c, raw)).collect()),
        Explanation::Or(cs) => {
            Explanation::Or(cs.iter().filter(|c| c.eval(raw)).map(|c| drop_false_branches(c, raw)).collect())
        }
        Explanation::Not(c) => Explanation::Not(Box::new(drop_false_branches(c, raw))),
        leaf => leaf.clone(),
    }
}

/// Drops disjunction branches that are false on the sample and gathers every
/// remaining condition into one conjunction.
pub fn collapse_sample_explanation(e: &Explanation, raw: &[f64]) -> Explanation {
    let kept = drop_false_branches(&push_negations_down(e), raw);
    Explanation::And(kept.leaves().into_iter().cloned().map(Explanation::Leaf).collect())
}

/// Negation push-down, flattening, merging and single-operand removal,
/// repeated in that order until the tree stops changing.
pub fn simplify_tree(e: &Explanation) -> Explanation {
    let mut cur = e.clone();
    loop {
        let next = push_negations_down(&cur);
        let next = collapse_repeated_operands(&next);
        let next = remove_redundant_predicates(&next);
        let next = collapse_single_operands(&next);
        let next = remove_redundant_predicates(&next);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// A single conjunction of conditions explaining one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleExplanation {
    pub rules: Vec<ThresholdCondition>,
    /// Network output for the sample.
    pub confidence: f64,
}

impl SampleExplanation {
    pub fn size(&self) -> usize {
        self.rules.len()
    }

    pub fn holds(&self, raw: &[f64]) -> bool {
        self.rules.iter().all(|r| r.holds(raw))
    }

    pub fn to_tree(&self) -> Explanation {
        Explanation::And(self.rules.iter().cloned().map(Explanation::Leaf).collect())
    }
}

impl fmt::Display for SampleExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_tree())
    }
}

/// Full sample pipeline: [`simplify_tree`], then branch dropping against
/// `raw` and a final merge.
pub fn simplify(e: &Explanation, raw: &[f64], confidence: f64) -> SampleExplanation {
    let tree = simplify_tree(e);
    let flat = remove_redundant_predicates(&collapse_sample_explanation(&tree, raw));
    SampleExplanation { rules: flat.leaves().into_iter().cloned().collect(), confidence }
}
