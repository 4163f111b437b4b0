use super::BankError;

/// Kendall tau-b via Knight's merge-sort algorithm.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, BankError> {
    if x.len() != y.len() {
        return Err(BankError::LengthMismatch);
    }
    let n = x.len();
    if n < 2 {
        return Err(BankError::DegenerateRanking);
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(BankError::NonFinite("ranking value".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * (t.saturating_sub(1)) / 2;
    let n0 = pairs(n as u64);
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            tied_y += pairs(run);
            run = 1;
        }
    }
    tied_y += pairs(run);

    let untied_x = n0 - tied_x;
    let untied_y = n0 - tied_y;
    if untied_x == 0 || untied_y == 0 {
        return Err(BankError::DegenerateRanking);
    }
    let diff = (n0 + tied_xy) as i64 - (tied_x + tied_y) as i64 - 2 * swaps as i64;
    Ok(diff as f64 / (untied_x as f64 * untied_y as f64).sqrt())
}

/// Stable merge sort of `v`; returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..n].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((kendall_tau(&x, &[2.0, 1.0, 3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kendall_tau(&x, &[1.0; 3]), Err(BankError::DegenerateRanking));
    }
}
