use std::fmt;

use serde::{Deserialize, Serialize};

/// Comparison operator of a threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    /// Operator of the complementary rule: `NOT f < a` is `f >= a`.
    pub fn negate(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// True for `<` and `<=`.
    pub fn is_upper_bound(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Le)
    }

    pub fn is_strict(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Gt)
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            CmpOp::Lt => value < threshold,
            CmpOp::Le => value <= threshold,
            CmpOp::Gt => value > threshold,
            CmpOp::Ge => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `feature op threshold`, with the threshold in raw feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCondition {
    pub feature_index: usize,
    pub feature: String,
    pub op: CmpOp,
    pub threshold: f64,
}

impl ThresholdCondition {
    pub fn new(feature_index: usize, feature: impl Into<String>, op: CmpOp, threshold: f64) -> Self {
        Self {
            feature_index,
            feature: feature.into(),
            op,
            threshold,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            op: self.op.negate(),
            ..self.clone()
        }
    }

    /// Evaluates the rule on a raw sample indexed by feature.
    pub fn holds(&self, raw_sample: &[f64]) -> bool {
        self.op.holds(raw_sample[self.feature_index], self.threshold)
    }
}

/// Formats with six significant digits, trimming trailing zeros.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl fmt::Display for ThresholdCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.feature, self.op, format_sig6(self.threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_table() {
        assert_eq!(CmpOp::Lt.negate(), CmpOp::Ge);
        assert_eq!(CmpOp::Le.negate(), CmpOp::Gt);
        assert_eq!(CmpOp::Gt.negate(), CmpOp::Le);
        assert_eq!(CmpOp::Ge.negate(), CmpOp::Lt);
    }

    #[test]
    fn negation_complements_on_the_line() {
        for op in [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge] {
            for v in [-1.0, 2.9, 3.0, 3.1, 10.0] {
                assert_ne!(op.holds(v, 3.0), op.negate().holds(v, 3.0));
            }
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(-118.2123456), "-118.212");
        assert_eq!(format_sig6(0.5), "0.5");
        assert_eq!(format_sig6(3.0), "3");
        assert_eq!(format_sig6(1234567.0), "1234567");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
    }

    #[test]
    fn display() {
        let c = ThresholdCondition::new(0, "Longitude", CmpOp::Le, -118.21);
        assert_eq!(c.to_string(), "Longitude <= -118.21");
    }
}
