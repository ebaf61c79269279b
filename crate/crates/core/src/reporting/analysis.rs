//! Run analyses: best-so-far trajectories, high-performer counts and a
//! principal-component view of the top configurations.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::evolution::EvaluationRecord;
use crate::space::{ArchConfig, HpSpace};

fn ok_by_finish<'a>(records: impl IntoIterator<Item = &'a EvaluationRecord>) -> Vec<&'a EvaluationRecord> {
    let mut ok: Vec<_> = records.into_iter().filter(|r| r.is_ok()).collect();
    ok.sort_by(|a, b| a.finish_time.total_cmp(&b.finish_time));
    ok
}

/// Running maximum of the objective over ok records, ordered by finish time:
/// one `(finish_time, best)` step per ok record.
pub fn best_so_far<'a>(records: impl IntoIterator<Item = &'a EvaluationRecord>) -> Vec<(f64, f64)> {
    let mut best = f64::NEG_INFINITY;
    ok_by_finish(records)
        .into_iter()
        .map(|r| {
            best = best.max(r.objective);
            (r.finish_time, best)
        })
        .collect()
}

/// Quantile with linear interpolation between order statistics, at rank
/// `q * (n - 1)`.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighPerformerCounts {
    pub threshold: f64,
    /// Per log: `(finish_time, unique architectures above threshold so far)`
    /// at every ok record.
    pub curves: Vec<Vec<(f64, usize)>>,
}

/// Counts unique architectures whose objective strictly exceeds the
/// smallest per-log `q`-quantile of ok objectives.
pub fn high_performer_counts(logs: &[&[EvaluationRecord]], q: f64) -> Result<HighPerformerCounts> {
    let threshold = logs
        .iter()
        .filter_map(|log| {
            let objectives: Vec<f64> = log.iter().filter(|r| r.is_ok()).map(|r| r.objective).collect();
            quantile(&objectives, q)
        })
        .reduce(f64::min)
        .ok_or(Error::NoData("no ok records in any log"))?;
    let curves = logs
        .iter()
        .map(|log| {
            let mut seen: HashSet<&ArchConfig> = HashSet::new();
            ok_by_finish(log.iter())
                .into_iter()
                .map(|r| {
                    if r.objective > threshold {
                        seen.insert(&r.arch);
                    }
                    (r.finish_time, seen.len())
                })
                .collect()
        })
        .collect();
    Ok(HighPerformerCounts { threshold, curves })
}

/// Two-dimensional principal-component projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub points: Vec<[f64; 2]>,
    /// Share of total variance captured by the first two components.
    pub variance_ratio: [f64; 2],
}

/// Projects centered `vectors` onto the two leading eigenvectors of their
/// covariance. Degenerate input (no variance) maps every point to the
/// origin with zero ratios.
pub fn pca_2d(vectors: &[Vec<f64>]) -> Projection {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, Vec::len);
    let zero = Projection {
        points: vec![[0.0; 2]; n],
        variance_ratio: [0.0; 2],
    };
    if n < 2 || dim == 0 {
        return zero;
    }
    let mean: Vec<f64> = (0..dim)
        .map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64)
        .collect();
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in &centered {
        for a in 0..dim {
            for b in a..dim {
                cov[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            cov[a][b] /= (n - 1) as f64;
            cov[b][a] = cov[a][b];
        }
    }
    let (values, vecs) = symmetric_eigen(cov);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return zero;
    }
    let mut components = [vec![0.0; dim], vec![0.0; dim]];
    let mut variance_ratio = [0.0; 2];
    for k in 0..2.min(dim) {
        components[k] = vecs[k].clone();
        variance_ratio[k] = values[k].max(0.0) / total;
    }
    let points = centered
        .iter()
        .map(|row| {
            let dot = |c: &[f64]| row.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
            [dot(&components[0]), dot(&components[1])]
        })
        .collect();
    Projection {
        points,
        variance_ratio,
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with unit eigenvectors whose largest
/// component is positive.
pub fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= scale * 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = v.iter().map(|row| row[i]).collect();
            let lead = col
                .iter()
                .copied()
                .reduce(|m, x| if x.abs() > m.abs() { x } else { m })
                .unwrap_or(0.0);
            if lead < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopConfigPca {
    pub job_ids: Vec<u64>,
    pub objectives: Vec<f64>,
    pub arch: Projection,
    pub hp: Projection,
}

/// PCA of the top `ceil(fraction * ok)` records, computed separately on the
/// architecture decisions and on the encoded hyperparameters.
pub fn pca_top_configs<'a>(
    records: impl IntoIterator<Item = &'a EvaluationRecord>,
    fraction: f64,
    hp_space: &HpSpace,
) -> Result<TopConfigPca> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("fraction {fraction} outside (0, 1]")));
    }
    let mut ok: Vec<&EvaluationRecord> = records.into_iter().filter(|r| r.is_ok()).collect();
    ok.sort_by(|a, b| b.objective.total_cmp(&a.objective).then(a.finish_time.total_cmp(&b.finish_time)));
    let take = (fraction * ok.len() as f64).ceil() as usize;
    if take < 3 {
        return Err(Error::InvalidInput(format!(
            "top {fraction} of {} ok records leaves {take} points, need at least 3",
            ok.len()
        )));
    }
    let top = &ok[..take];
    let arch: Vec<Vec<f64>> = top
        .iter()
        .map(|r| r.arch.decisions.iter().map(|&d| f64::from(d)).collect())
        .collect();
    let hp = top
        .iter()
        .map(|r| hp_space.encode(&r.hp).map(|x| x.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TopConfigPca {
        job_ids: top.iter().map(|r| r.job_id).collect(),
        objectives: top.iter().map(|r| r.objective).collect(),
        arch: pca_2d(&arch),
        hp: pca_2d(&hp),
    })
}
