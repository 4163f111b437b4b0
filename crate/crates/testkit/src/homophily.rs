use std::collections::BTreeMap;

/// Labels: `None` for unlabeled nodes. Pairs are unordered, deduplicated and
/// free of self-pairs.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub labels: Vec<Option<Vec<f64>>>,
    pub pairs: Vec<(usize, usize)>,
    pub regression: bool,
}

impl Fixture {
    fn labeled_pairs(&self) -> Vec<(&[f64], &[f64], usize, usize)> {
        self.pairs
            .iter()
            .filter_map(|&(u, v)| match (&self.labels[u], &self.labels[v]) {
                (Some(a), Some(b)) => Some((a.as_slice(), b.as_slice(), u, v)),
                _ => None,
            })
            .collect()
    }

    fn labeled(&self) -> Vec<&[f64]> {
        self.labels.iter().flatten().map(|v| v.as_slice()).collect()
    }

    fn kernel(&self) -> impl Fn(&[f64], &[f64]) -> f64 {
        let (mu, var) = if self.regression {
            let ys: Vec<f64> = self.labeled().iter().map(|y| y[0]).collect();
            let n = ys.len() as f64;
            let mu = ys.iter().sum::<f64>() / n;
            (mu, ys.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / n)
        } else {
            (0.0, 0.0)
        };
        let regression = self.regression;
        move |a: &[f64], b: &[f64]| {
            if regression {
                (a[0] - mu) * (b[0] - mu) / var
            } else {
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
        }
    }

    pub fn h_edge(&self) -> f64 {
        let k = self.kernel();
        let ps = self.labeled_pairs();
        ps.iter().map(|(a, b, _, _)| k(a, b)).sum::<f64>() / ps.len() as f64
    }

    pub fn h_adj(&self) -> f64 {
        let ps = self.labeled_pairs();
        let c = ps[0].0.len();
        let m = ps.len() as f64;
        let mut expected = 0.0;
        for k in 0..c {
            let dk: f64 = ps.iter().map(|(a, b, _, _)| a[k] + b[k]).sum();
            expected += (dk / (2.0 * m)).powi(2);
        }
        (self.h_edge() - expected) / (1.0 - expected)
    }

    pub fn h_ins(&self) -> f64 {
        if self.regression {
            return self.h_edge();
        }
        let k = self.kernel();
        let labeled = self.labeled();
        let c = labeled[0].len();
        let prior: Vec<f64> = (0..c)
            .map(|j| labeled.iter().map(|y| y[j]).sum::<f64>() / labeled.len() as f64)
            .collect();
        let ps = self.labeled_pairs();
        let mut total = 0.0;
        for j in 0..c {
            // both orientations of every unordered pair
            let num: f64 = ps.iter().map(|(a, b, _, _)| k(a, b) * (a[j] + b[j])).sum();
            let den: f64 = ps.iter().map(|(a, b, _, _)| a[j] + b[j]).sum();
            if den > 0.0 {
                total += (num / den - prior[j]).max(0.0);
            }
        }
        total / (c - 1) as f64
    }

    pub fn h_agg(&self) -> f64 {
        let k = self.kernel();
        let mut nbrs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (_, _, u, v) in self.labeled_pairs() {
            nbrs.entry(u).or_default().push(v);
            nbrs.entry(v).or_default().push(u);
        }
        let mut total = 0.0;
        for (&u, vs) in &nbrs {
            let yu = self.labels[u].as_ref().unwrap();
            let mean: Vec<f64> = (0..yu.len())
                .map(|j| vs.iter().map(|&v| self.labels[v].as_ref().unwrap()[j]).sum::<f64>() / vs.len() as f64)
                .collect();
            total += k(yu, &mean);
        }
        total / nbrs.len() as f64
    }
}
