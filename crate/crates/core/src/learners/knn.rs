//! k-nearest neighbours on standardized inputs; the probability is the
//! fraction of positive labels among the `k` closest training rows
//! (Euclidean distance, ties broken by training order).

use super::Design;

#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    rows: Vec<f64>,
    labels: Vec<u8>,
    d: usize,
    k: usize,
}

impl Knn {
    pub fn fit(design: &Design, y: &[u8], k: usize) -> Self {
        let d = design.d();
        let mut rows = Vec::with_capacity(design.n * d);
        for i in 0..design.n {
            rows.extend(design.columns.iter().map(|c| c[i]));
        }
        Self {
            rows,
            labels: y.to_vec(),
            d,
            k: k.min(design.n).max(1),
        }
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .chunks_exact(self.d.max(1))
            .take(self.labels.len())
            .enumerate()
            .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
        }
        let votes = dist[..self.k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
        votes as f64 / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_neighbour_returns_own_label() {
        let design = Design {
            columns: vec![vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.5, 0.1, 0.9]],
            n: 4,
        };
        let y = [1, 0, 0, 1];
        let m = Knn::fit(&design, &y, 1);
        for (i, &yi) in y.iter().enumerate() {
            assert_eq!(m.proba(&design.row(i)), yi as f64);
        }
    }

    #[test]
    fn vote_fraction() {
        let design = Design {
            columns: vec![vec![0.0, 0.1, 0.2, 5.0]],
            n: 4,
        };
        let m = Knn::fit(&design, &[1, 1, 0, 0], 3);
        assert!((m.proba(&[0.05]) - 2.0 / 3.0).abs() < 1e-15);
        // k larger than the training set uses every row.
        let all = Knn::fit(&design, &[1, 1, 0, 0], 10);
        assert_eq!(all.proba(&[0.0]), 0.5);
    }
}
