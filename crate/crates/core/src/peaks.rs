//! Greedy peak picking with circular non-maximum suppression.

/// Picks up to `k` indices in decreasing `power`, skipping any index within
/// `guard` circular bins of one already taken. Only indices whose
/// `strength` is strictly positive are eligible.
pub(crate) fn pick_peaks(power: &[f64], strength: &[f64], k: usize, guard: usize) -> Vec<usize> {
    let n = power.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| strength[i] > 0.0).collect();
    order.sort_by(|&a, &b| power[b].total_cmp(&power[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for i in order {
        if picked.len() == k {
            break;
        }
        let clear = picked.iter().all(|&p| {
            let d = p.abs_diff(i);
            d.min(n - d) > guard
        });
        if clear {
            picked.push(i);
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suppresses_neighbours_circularly() {
        let mut p = vec![0.0; 16];
        p[0] = 5.0;
        p[15] = 4.0;
        p[2] = 3.0;
        p[8] = 1.0;
        let picked = pick_peaks(&p, &p, 3, 2);
        assert_eq!(picked, vec![0, 8]);
    }

    #[test]
    fn zero_strength_is_ineligible() {
        let p = vec![1.0; 8];
        assert!(pick_peaks(&p, &[0.0; 8], 2, 1).is_empty());
    }
}
