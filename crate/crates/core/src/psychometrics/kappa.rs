use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Cohen's kappa for two raters labelling the same items.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "label lists differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InsufficientData("no labels".into()));
    }
    let n = a.len() as f64;
    let mut ma: BTreeMap<&T, f64> = BTreeMap::new();
    let mut mb: BTreeMap<&T, f64> = BTreeMap::new();
    let mut agree = 0.0;
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1.0;
        *mb.entry(y).or_default() += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let po = agree / n;
    let pe: f64 = ma
        .iter()
        .map(|(k, ca)| ca * mb.get(k).copied().unwrap_or(0.0))
        .sum::<f64>()
        / (n * n);
    if (1.0 - pe).abs() < 1e-15 {
        return Err(Error::degenerate("chance agreement is 1; kappa undefined"));
    }
    Ok((po - pe) / (1.0 - pe))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_two_by_two() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(0, 0, 20), (1, 1, 20), (0, 1, 5), (1, 0, 5)] {
            for _ in 0..n {
                a.push(x);
                b.push(y);
            }
        }
        assert!((cohens_kappa(&a, &b).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_constant() {
        assert_eq!(cohens_kappa(&["x", "y", "x"], &["x", "y", "x"]).unwrap(), 1.0);
        assert!(matches!(
            cohens_kappa(&["x", "x"], &["x", "x"]),
            Err(Error::Degenerate(_))
        ));
    }
}
