//! Shape diagnostics on sampled curves (sweep results along one axis).

/// Interior indices `i` with `v[i] < v[i-1]` and `v[i] < v[i+1]`.
pub fn local_minima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] < v[i - 1] && v[i] < v[i + 1])
        .collect()
}

/// Interior indices `i` with `v[i] > v[i-1]` and `v[i] > v[i+1]`.
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect()
}

/// Index of the largest value (first on ties); NaN entries are skipped.
pub fn argmax(v: &[f64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_nan())
        .fold(None, |best, (i, &x)| match best {
            Some((_, b)) if b >= x => best,
            _ => Some((i, x)),
        })
        .map(|(i, _)| i)
}

pub fn argmin(v: &[f64]) -> Option<usize> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    argmax(&neg)
}

/// Pairs `(i, j)` of a minimum of `a` and a maximum of `b` at most `steps`
/// grid points apart.
pub fn coinciding_extrema(
    a_minima: &[usize],
    b_maxima: &[usize],
    steps: usize,
) -> Vec<(usize, usize)> {
    a_minima
        .iter()
        .flat_map(|&i| {
            b_maxima
                .iter()
                .filter(move |&&j| i.abs_diff(j) <= steps)
                .map(move |&j| (i, j))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrema() {
        let v = [3.0, 1.0, 2.0, 5.0, 4.0, 4.0, 6.0];
        assert_eq!(local_minima(&v), vec![1]);
        assert_eq!(local_maxima(&v), vec![3]);
        assert_eq!(argmax(&v), Some(6));
        assert_eq!(argmin(&v), Some(1));
        assert!(local_minima(&[1.0, 2.0]).is_empty());
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[f64::NAN, 1.0, 1.0]), Some(1));
    }

    #[test]
    fn coincidences() {
        assert_eq!(coinciding_extrema(&[4, 10], &[5, 20], 1), vec![(4, 5)]);
        assert!(coinciding_extrema(&[4], &[6], 1).is_empty());
    }
}
