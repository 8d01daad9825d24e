use rand::seq::index;

use crate::dataset::LabelSet;

/// Draws `min(alpha·|P|, |N|)` distinct irrelevant labels uniformly at random,
/// where `N` is the complement of `positives` in `0..m`.
pub fn sample_negatives<R: rand::Rng + ?Sized>(
    positives: &LabelSet,
    m: usize,
    alpha: usize,
    rng: &mut R,
) -> LabelSet {
    let n_neg = m.saturating_sub(positives.len());
    let count = alpha.saturating_mul(positives.len()).min(n_neg);
    if count == 0 {
        return LabelSet::empty();
    }
    if count * 4 <= n_neg {
        // Sparse regime: rejection against P and the picks so far.
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        while picked.len() < count {
            let j = rng.gen_range(0..m);
            if positives.contains(j) || picked.contains(&j) {
                continue;
            }
            picked.push(j);
        }
        picked.into_iter().collect()
    } else {
        let negatives = positives.complement(m);
        index::sample(rng, negatives.len(), count)
            .into_iter()
            .map(|i| negatives[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use rand::SeedableRng;

    fn set(v: &[usize]) -> LabelSet {
        v.iter().copied().collect()
    }

    #[test]
    fn sizes() {
        let mut rng = Rng::seed_from_u64(0);
        let p = set(&[4, 50, 99]);
        let s = sample_negatives(&p, 100, 5, &mut rng);
        assert_eq!(s.len(), 15);
        assert!(s.is_disjoint(&p));

        assert!(sample_negatives(&LabelSet::empty(), 100, 5, &mut rng).is_empty());

        let p = set(&[0, 3, 5, 9]);
        let s = sample_negatives(&p, 10, 5, &mut rng);
        assert_eq!(s.as_slice(), &[1, 2, 4, 6, 7, 8]);
    }

    #[test]
    fn inclusion_frequencies_match_binomial() {
        // |P| = 2, alpha = 3, m = 12: each of the 10 negatives is included
        // with probability 6/10.
        let mut rng = Rng::seed_from_u64(42);
        let p = set(&[2, 7]);
        let draws = 100_000;
        let mut hits = [0usize; 12];
        for _ in 0..draws {
            let s = sample_negatives(&p, 12, 3, &mut rng);
            assert_eq!(s.len(), 6);
            for j in s.iter() {
                hits[j] += 1;
            }
        }
        let q = 0.6;
        let sd = (draws as f64 * q * (1.0 - q)).sqrt();
        for j in 0..12 {
            if p.contains(j) {
                assert_eq!(hits[j], 0);
            } else {
                let dev = (hits[j] as f64 - draws as f64 * q).abs();
                assert!(dev < 3.0 * sd, "label {j}: {} hits", hits[j]);
            }
        }
    }

    #[test]
    fn sparse_regime_is_uniform() {
        // count * 4 <= |N| exercises the rejection path: |P| = 1, alpha = 2, m = 41
        let mut rng = Rng::seed_from_u64(8);
        let p = set(&[10]);
        let draws = 40_000;
        let mut hits = vec![0usize; 41];
        for _ in 0..draws {
            for j in sample_negatives(&p, 41, 2, &mut rng).iter() {
                hits[j] += 1;
            }
        }
        let q = 2.0 / 40.0;
        let sd = (draws as f64 * q * (1.0 - q)).sqrt();
        for (j, &h) in hits.iter().enumerate() {
            if j == 10 {
                assert_eq!(h, 0);
            } else {
                assert!((h as f64 - draws as f64 * q).abs() < 4.0 * sd, "label {j}: {h}");
            }
        }
    }
}
