//! CART decision tree: Gini impurity, best single-feature threshold per
//! node, one sample minimum per leaf, depth as the only regularizer.

use super::Design;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        proba: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub max_depth: usize,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Tree {
    pub fn fit(design: &Design, y: &[u8], max_depth: usize) -> Self {
        let mut tree = Tree {
            nodes: Vec::new(),
            max_depth,
        };
        let idx: Vec<usize> = (0..design.n).collect();
        tree.grow(design, y, idx, 0);
        tree
    }

    fn grow(&mut self, design: &Design, y: &[u8], idx: Vec<usize>, depth: usize) -> usize {
        let total = idx.len() as f64;
        let pos = idx.iter().filter(|&&i| y[i] == 1).count() as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            proba: if total > 0.0 { pos / total } else { 0.0 },
        });
        if depth >= self.max_depth || pos == 0.0 || pos == total {
            return id;
        }
        let parent = total * gini(pos, total);
        let Some(best) = best_split(design, y, &idx, pos) else {
            return id;
        };
        if parent - best.score <= 1e-12 {
            return id;
        }
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| design.columns[best.feature][i] <= best.threshold);
        let left = self.grow(design, y, left, depth + 1);
        let right = self.grow(design, y, right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Leaf probability and the number of splits visited on the way.
    pub fn path(&self, x: &[f64]) -> (f64, usize) {
        let mut node = 0;
        let mut questions = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf { proba } => return (proba, questions),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    questions += 1;
                    node = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        self.path(x).0
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Lowest weighted child impurity over all features and midpoints between
/// distinct consecutive values. Earlier features and thresholds win ties.
fn best_split(design: &Design, y: &[u8], idx: &[usize], pos: f64) -> Option<Best> {
    let total = idx.len() as f64;
    let mut best: Option<Best> = None;
    let mut order = idx.to_vec();
    for (feature, col) in design.columns.iter().enumerate() {
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let mut left_pos = 0.0;
        for k in 0..order.len() - 1 {
            left_pos += y[order[k]] as f64;
            let (v, next) = (col[order[k]], col[order[k + 1]]);
            if v == next {
                continue;
            }
            let left_n = (k + 1) as f64;
            let right_n = total - left_n;
            let score = left_n * gini(left_pos, left_n) + right_n * gini(pos - left_pos, right_n);
            if best.as_ref().is_none_or(|b| score < b.score - 1e-12) {
                best = Some(Best {
                    feature,
                    threshold: 0.5 * (v + next),
                    score,
                });
            }
        }
    }
    best
}
