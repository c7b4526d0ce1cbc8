//! Correlation measures between coordinate series.
//!
//! Inputs may be `f32` or `f64`; statistics are accumulated in `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// A correlation value plus a flag raised when the measure had to fall back
/// (zero variance, zero MAD, zero norm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corr {
    pub value: f64,
    pub degenerate: bool,
}

impl Corr {
    fn ok(value: f64) -> Self {
        Corr {
            value: value.clamp(-1.0, 1.0),
            degenerate: false,
        }
    }

    const DEGENERATE: Corr = Corr {
        value: 0.0,
        degenerate: true,
    };
}

fn check<T>(u: &[T], v: &[T]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    if u.len() < 3 {
        return Err(invalid(format!("correlation needs at least 3 samples, got {}", u.len())));
    }
    Ok(())
}

fn to_f64<T: Scalar>(u: &[T]) -> Vec<f64> {
    u.iter().map(|x| x.as_f64()).collect()
}

fn centered(u: &[f64]) -> Vec<f64> {
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    u.iter().map(|x| x - mean).collect()
}

fn cosine_raw(a: &[f64], b: &[f64]) -> Corr {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Corr::DEGENERATE;
    }
    Corr::ok(dot / (na.sqrt() * nb.sqrt()))
}

fn pearson_f64(u: &[f64], v: &[f64]) -> Corr {
    cosine_raw(&centered(u), &centered(v))
}

/// Pearson product-moment correlation.
pub fn pearson<T: Scalar>(u: &[T], v: &[T]) -> Result<Corr> {
    check(u, v)?;
    Ok(pearson_f64(&to_f64(u), &to_f64(v)))
}

/// One-based ranks; ties share the average of their positions.
pub fn ranks(u: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let mut r = vec![0.0; u.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && u[order[j + 1]] == u[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman<T: Scalar>(u: &[T], v: &[T]) -> Result<Corr> {
    check(u, v)?;
    Ok(pearson_f64(&ranks(&to_f64(u)), &ranks(&to_f64(v))))
}

pub(crate) fn median(u: &[f64]) -> f64 {
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Tuning constant of the biweight weights, in MAD units.
pub const BICOR_C: f64 = 9.0;

/// Median-centred, biweight-weighted series; `None` when the MAD is zero.
fn biweighted(u: &[f64]) -> Option<Vec<f64>> {
    let med = median(u);
    let dev: Vec<f64> = u.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&dev);
    if mad == 0.0 {
        return None;
    }
    Some(
        u.iter()
            .map(|&x| {
                let t = (x - med) / (BICOR_C * mad);
                let w = if t.abs() < 1.0 { (1.0 - t * t).powi(2) } else { 0.0 };
                (x - med) * w
            })
            .collect(),
    )
}

/// Biweight midcorrelation. Falls back to Pearson, flagged, when either MAD is zero.
pub fn bicor<T: Scalar>(u: &[T], v: &[T]) -> Result<Corr> {
    check(u, v)?;
    let (u, v) = (to_f64(u), to_f64(v));
    match (biweighted(&u), biweighted(&v)) {
        (Some(a), Some(b)) => Ok(cosine_raw(&a, &b)),
        _ => Ok(Corr {
            degenerate: true,
            ..pearson_f64(&u, &v)
        }),
    }
}

/// Scalar correlation used per axis by the x-y-z measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMeasure {
    Pearson,
    Spearman,
    Bicor,
}

impl ScalarMeasure {
    pub fn eval<T: Scalar>(self, u: &[T], v: &[T]) -> Result<Corr> {
        match self {
            ScalarMeasure::Pearson => pearson(u, v),
            ScalarMeasure::Spearman => spearman(u, v),
            ScalarMeasure::Bicor => bicor(u, v),
        }
    }
}

/// Per-atom series: x, y and z sequences of equal length.
pub type Xyz<T> = [Vec<T>; 3];

/// Pair similarity with both the unsigned value used for networks and a signed
/// companion kept for raw dumps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSimilarity {
    pub value: f64,
    pub signed: f64,
    pub degenerate: bool,
}

fn check_xyz<T>(a: &Xyz<T>, b: &Xyz<T>) -> Result<usize> {
    let n = a[0].len();
    if a.iter().chain(b.iter()).any(|s| s.len() != n) {
        return Err(invalid("atom series lengths differ"));
    }
    if n < 3 {
        return Err(invalid(format!("need at least 3 frames, got {n}")));
    }
    Ok(n)
}

/// Mean over x, y, z of the absolute per-axis correlation.
pub fn xyz_avg_abs_corr<T: Scalar>(
    a: &Xyz<T>,
    b: &Xyz<T>,
    measure: ScalarMeasure,
) -> Result<PairSimilarity> {
    check_xyz(a, b)?;
    let mut abs_sum = 0.0;
    let mut signed_sum = 0.0;
    let mut degenerate = false;
    for k in 0..3 {
        let c = measure.eval(&a[k], &b[k])?;
        abs_sum += c.value.abs();
        signed_sum += c.value;
        degenerate |= c.degenerate;
    }
    Ok(PairSimilarity {
        value: abs_sum / 3.0,
        signed: signed_sum / 3.0,
        degenerate,
    })
}

fn fluctuations<T: Scalar>(a: &Xyz<T>) -> Vec<f64> {
    a.iter().flat_map(|s| centered(&to_f64(s))).collect()
}

/// Absolute cosine between the concatenated, per-axis centred displacement vectors.
pub fn cosine_fluct<T: Scalar>(a: &Xyz<T>, b: &Xyz<T>) -> Result<PairSimilarity> {
    check_xyz(a, b)?;
    let c = cosine_raw(&fluctuations(a), &fluctuations(b));
    Ok(PairSimilarity {
        value: c.value.abs(),
        signed: c.value,
        degenerate: c.degenerate,
    })
}

/// Absolute Pearson correlation of the concatenated, per-axis centred vectors.
pub fn concat_pearson<T: Scalar>(a: &Xyz<T>, b: &Xyz<T>) -> Result<PairSimilarity> {
    check_xyz(a, b)?;
    let c = pearson_f64(&fluctuations(a), &fluctuations(b));
    Ok(PairSimilarity {
        value: c.value.abs(),
        signed: c.value,
        degenerate: c.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_exact_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().value - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().value + 1.0).abs() < 1e-15);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap().value;
        let expected = 8.0 / (2.0f64 * 294.0 / 9.0).sqrt();
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.98974).abs() < 1e-5);
    }

    #[test]
    fn pearson_zero_variance_is_flagged() {
        let c = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c, Corr { value: 0.0, degenerate: true });
    }

    #[test]
    fn length_checks() {
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_monotone_and_ties() {
        let u = [0.5, 1.0, 2.0, 3.5, 7.0];
        let cubed: Vec<f64> = u.iter().map(|x| x * x * x).collect();
        assert!((spearman(&u, &cubed).unwrap().value - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = u.iter().rev().copied().collect();
        assert!((spearman(&u, &rev).unwrap().value + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        // Ranks (1.5, 1.5, 3) against (1, 2, 3): 1.5 / sqrt(1.5 * 2).
        let rho = spearman(&[1.0, 1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap().value;
        assert!((rho - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn bicor_self_and_affine() {
        let u = [1.0, 3.0, 2.5, 7.0, 4.0, 6.5, 0.5];
        assert!((bicor(&u, &u).unwrap().value - 1.0).abs() < 1e-12);
        let v: Vec<f64> = u.iter().map(|x| 2.5 * x - 4.0).collect();
        assert!((bicor(&u, &v).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bicor_downweights_outlier() {
        let u = [1.0, 2.0, 3.0, 4.0, 100.0];
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = bicor(&u, &v).unwrap();
        let p = pearson(&u, &v).unwrap();
        assert!(!b.degenerate);
        assert!((b.value - p.value).abs() > 0.05);
    }

    #[test]
    fn bicor_zero_mad_falls_back_to_pearson() {
        let u = [1.0, 1.0, 1.0, 2.0, 3.0];
        let v = [2.0, 1.0, 4.0, 3.0, 5.0];
        let b = bicor(&u, &v).unwrap();
        assert!(b.degenerate);
        assert_eq!(b.value, pearson(&u, &v).unwrap().value);
    }

    fn series(seed: f64) -> Xyz<f64> {
        [0.0, 1.0, 2.0].map(|k| (0..6).map(|i| ((i as f64 + k) * seed).sin()).collect())
    }

    #[test]
    fn xyz_identity_and_mirror() {
        let a = series(0.7);
        let mirror = a.clone().map(|s| s.iter().map(|x| -x).collect::<Vec<_>>());
        for m in [ScalarMeasure::Pearson, ScalarMeasure::Spearman, ScalarMeasure::Bicor] {
            assert!((xyz_avg_abs_corr(&a, &a, m).unwrap().value - 1.0).abs() < 1e-12);
            assert!((xyz_avg_abs_corr(&a, &mirror, m).unwrap().value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_identity_negation_orthogonal() {
        let a = series(0.9);
        assert!((cosine_fluct(&a, &a).unwrap().value - 1.0).abs() < 1e-12);
        let neg = a.clone().map(|s| s.iter().map(|x| 5.0 - x).collect::<Vec<_>>());
        assert!((cosine_fluct(&a, &neg).unwrap().value - 1.0).abs() < 1e-12);
        // a moves along x with (1,-1,1,-1), b along y with (1,1,-1,-1): zero dot product.
        let x_only: Xyz<f64> = [vec![1.0, -1.0, 1.0, -1.0], vec![0.0; 4], vec![0.0; 4]];
        let y_only: Xyz<f64> = [vec![0.0; 4], vec![1.0, 1.0, -1.0, -1.0], vec![0.0; 4]];
        assert_eq!(cosine_fluct(&x_only, &y_only).unwrap().value, 0.0);
    }

    #[test]
    fn frozen_atom_is_degenerate() {
        let a = series(0.3);
        let frozen: Xyz<f64> = [vec![1.0; 6], vec![2.0; 6], vec![3.0; 6]];
        let c = cosine_fluct(&a, &frozen).unwrap();
        assert!(c.degenerate && c.value == 0.0);
        let x = xyz_avg_abs_corr(&a, &frozen, ScalarMeasure::Pearson).unwrap();
        assert!(x.degenerate && x.value == 0.0);
    }

    #[test]
    fn concat_pearson_agrees_with_cosine_of_fluctuations() {
        let (a, b) = (series(0.31), series(1.7));
        let c = cosine_fluct(&a, &b).unwrap();
        let p = concat_pearson(&a, &b).unwrap();
        assert!((c.signed - p.signed).abs() < 1e-12);
    }
}
