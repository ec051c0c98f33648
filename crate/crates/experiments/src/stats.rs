//! Small aggregation helpers.

/// Mean and sample standard deviation (`0` for a single value).
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Some((mean, var.sqrt()))
}

/// Lower median where `None` ranks above every value; `None` if the median
/// itself is unranked or the input is empty.
pub fn lower_median(xs: impl IntoIterator<Item = Option<usize>>) -> Option<usize> {
    let mut v: Vec<usize> = xs.into_iter().map(|x| x.unwrap_or(usize::MAX)).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v[(v.len() - 1) / 2];
    (m != usize::MAX).then_some(m)
}

/// Pool-adjacent-violators fit of a non-decreasing sequence (equal weights).
pub fn isotonic(xs: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &x in xs {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat(v).take(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(lower_median([Some(3), Some(1), Some(2)]), Some(2));
        assert_eq!(lower_median([Some(3), Some(1), None, Some(2)]), Some(2));
        assert_eq!(lower_median([None, None, Some(1)]), None);
        assert_eq!(lower_median(std::iter::empty()), None);
    }

    #[test]
    fn mean_and_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert_eq!(mean_std(&[4.0]), Some((4.0, 0.0)));
    }

    #[test]
    fn isotonic_regression() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic(&[1.0, 2.0]), vec![1.0, 2.0]);
    }
}
