//! Gini classification trees, used only for their split thresholds.

use ndarray::ArrayView2;

/// Internal split `feature <= threshold` of a fitted tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitNode {
    pub feature: usize,
    pub threshold: f64,
    pub depth: usize,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Best {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn best_split(x: ArrayView2<'_, f64>, y: &[u8], rows: &[usize], features: &[usize]) -> Option<Best> {
    let total = rows.len();
    let total_pos = rows.iter().filter(|&&r| y[r] == 1).count();
    let parent = gini(total_pos, total);
    let mut best: Option<Best> = None;
    let mut order = rows.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
        let mut left_pos = 0;
        for k in 0..total - 1 {
            if y[order[k]] == 1 {
                left_pos += 1;
            }
            let (a, b) = (x[[order[k], f]], x[[order[k + 1], f]]);
            if a == b {
                continue;
            }
            let n_left = k + 1;
            let n_right = total - n_left;
            let weighted = (n_left as f64 * gini(left_pos, n_left)
                + n_right as f64 * gini(total_pos - left_pos, n_right))
                / total as f64;
            if weighted < parent - 1e-12 && best.as_ref().is_none_or(|b| weighted < b.impurity) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Best { feature: f, threshold, impurity: weighted });
            }
        }
    }
    best
}

/// Grows a depth-limited CART tree on `rows` restricted to `features` and
/// returns its internal splits in pre-order. Splits are placed midway between
/// adjacent distinct values and only taken when they reduce Gini impurity.
pub fn fit_gini_tree(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: &[usize],
    features: &[usize],
    max_depth: usize,
) -> Vec<SplitNode> {
    let mut out = Vec::new();
    grow(x, y, rows, features, 0, max_depth, &mut out);
    out
}

fn grow(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: &[usize],
    features: &[usize],
    depth: usize,
    max_depth: usize,
    out: &mut Vec<SplitNode>,
) {
    if depth >= max_depth || rows.len() < 2 {
        return;
    }
    let pos = rows.iter().filter(|&&r| y[r] == 1).count();
    if pos == 0 || pos == rows.len() {
        return;
    }
    let Some(best) = best_split(x, y, rows, features) else {
        return;
    };
    out.push(SplitNode { feature: best.feature, threshold: best.threshold, depth });
    let (left, right): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x[[r, best.feature]] <= best.threshold);
    grow(x, y, &left, features, depth + 1, max_depth, out);
    grow(x, y, &right, features, depth + 1, max_depth, out);
}
