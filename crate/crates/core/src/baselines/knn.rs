use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset, Features, ScalerParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 10 }
    }
}

/// Majority vote among the `k` nearest standardized training points.
///
/// Distance ties go to the lower sample index. The score is the fraction of
/// the `k` neighbours in class 1; an even split takes the nearest neighbour's class.
pub fn knn_predict(
    train_std: &[(Features, Class)],
    x_std: &Features,
    params: &KnnParams,
) -> Result<(Class, f64)> {
    let k = params.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if train_std.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k > train_std.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} training samples",
            train_std.len()
        )));
    }
    let mut dist: Vec<(f64, usize)> = train_std
        .iter()
        .enumerate()
        .map(|(i, (p, _))| {
            let d2: f64 = p.iter().zip(x_std).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by_distance);
        dist.truncate(k);
    }
    dist.sort_by(by_distance);

    let high = dist
        .iter()
        .filter(|(_, i)| train_std[*i].1 == Class::High)
        .count();
    let score = high as f64 / k as f64;
    let class = match (2 * high).cmp(&k) {
        std::cmp::Ordering::Greater => Class::High,
        std::cmp::Ordering::Less => Class::Low,
        std::cmp::Ordering::Equal => train_std[dist[0].1].1,
    };
    Ok((class, score))
}

/// A KNN classifier: the standardized training set plus its scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub params: KnnParams,
    pub scaler: ScalerParams,
    pub train_std: Vec<(Features, Class)>,
}

impl KnnModel {
    pub fn fit(train: &Dataset, params: KnnParams) -> Result<KnnModel> {
        let (xs, ys) = train.labeled()?;
        if params.k == 0 || params.k > xs.len() {
            return Err(Error::invalid(format!(
                "k = {} must lie in [1, {}]",
                params.k,
                xs.len()
            )));
        }
        let scaler = ScalerParams::fit(&xs)?;
        let train_std = xs.iter().map(|x| scaler.transform(x)).zip(ys).collect();
        Ok(KnnModel {
            params,
            scaler,
            train_std,
        })
    }

    /// Prediction for a raw (unstandardized) feature triple.
    pub fn predict(&self, x: &Features) -> (Class, f64) {
        knn_predict(&self.train_std, &self.scaler.transform(x), &self.params)
            .expect("k validated at fit time")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[([f64; 2], Class)]) -> Vec<(Features, Class)> {
        rows.iter().map(|(p, c)| ([p[0], p[1], 0.0], *c)).collect()
    }

    #[test]
    fn three_point_example() {
        use Class::*;
        let t = pts(&[([0.0, 0.0], Low), ([1.0, 0.0], Low), ([0.0, 1.0], High)]);
        let (c, s) = knn_predict(&t, &[0.1, 0.9, 0.0], &KnnParams { k: 3 }).unwrap();
        assert_eq!(c, Low);
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
        let (c, s) = knn_predict(&t, &[0.1, 0.9, 0.0], &KnnParams { k: 1 }).unwrap();
        assert_eq!((c, s), (High, 1.0));
    }

    #[test]
    fn k_equal_n_gives_global_fraction() {
        use Class::*;
        let t = pts(&[([0.0, 0.0], Low), ([5.0, 0.0], High), ([0.0, 9.0], Low), ([3.0, 3.0], Low)]);
        for x in [[0.0, 0.0, 0.0], [100.0, -4.0, 2.0]] {
            assert_eq!(knn_predict(&t, &x, &KnnParams { k: 4 }).unwrap(), (Low, 0.25));
        }
    }

    #[test]
    fn vote_tie_takes_nearest() {
        use Class::*;
        let t = pts(&[([0.0, 0.0], High), ([2.0, 0.0], Low)]);
        assert_eq!(knn_predict(&t, &[0.5, 0.0, 0.0], &KnnParams { k: 2 }).unwrap(), (High, 0.5));
        assert_eq!(knn_predict(&t, &[1.9, 0.0, 0.0], &KnnParams { k: 2 }).unwrap(), (Low, 0.5));
    }

    #[test]
    fn distance_tie_takes_lower_index() {
        use Class::*;
        let t = pts(&[([1.0, 0.0], Low), ([-1.0, 0.0], High)]);
        assert_eq!(knn_predict(&t, &[0.0; 3], &KnnParams { k: 1 }).unwrap().0, Low);
    }

    #[test]
    fn k_too_large() {
        let t = pts(&[([0.0, 0.0], Class::Low)]);
        assert!(knn_predict(&t, &[0.0; 3], &KnnParams { k: 2 }).is_err());
        assert!(knn_predict(&t, &[0.0; 3], &KnnParams { k: 0 }).is_err());
    }
}
