use std::collections::HashMap;

use super::Monomial;

/// All monomials of degree at most `d` in `n` variables, in graded order.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    nvars: usize,
    max_degree: u32,
    entries: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn new(nvars: usize, max_degree: u32) -> Self {
        let mut entries = Vec::with_capacity(binomial(nvars + max_degree as usize, nvars));
        for deg in 0..=max_degree {
            let mut exps = vec![0u32; nvars];
            push_compositions(&mut entries, &mut exps, 0, deg);
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MonomialBasis {
            nvars,
            max_degree,
            entries,
            index,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &Monomial {
        &self.entries[i]
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Number of leading entries with degree at most `d`.
    pub fn prefix_len(&self, d: u32) -> usize {
        binomial(self.nvars + d.min(self.max_degree) as usize, self.nvars)
    }
}

// Exponent vectors of total degree `remaining` over positions `pos..`,
// larger powers of earlier variables first.
fn push_compositions(out: &mut Vec<Monomial>, exps: &mut [u32], pos: usize, remaining: u32) {
    let n = exps.len();
    if pos + 1 == n {
        exps[pos] = remaining;
        out.push(Monomial::new(exps.to_vec()));
        exps[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        push_compositions(out, exps, pos + 1, remaining - e);
    }
    exps[pos] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(MonomialBasis::new(3, 3).len(), 20);
        assert_eq!(MonomialBasis::new(3, 6).len(), binomial(9, 3));
        let b = MonomialBasis::new(1, 0);
        assert_eq!(b.entries(), &[Monomial::one(1)]);
    }

    #[test]
    fn linear_basis_order() {
        let b = MonomialBasis::new(2, 1);
        assert_eq!(
            b.entries(),
            &[Monomial::one(2), Monomial::var(2, 0), Monomial::var(2, 1)]
        );
    }

    #[test]
    fn entries_sorted_and_indexed() {
        let b = MonomialBasis::new(3, 4);
        assert!(b.entries().windows(2).all(|w| w[0] < w[1]));
        for (i, m) in b.entries().iter().enumerate() {
            assert_eq!(b.index_of(m), Some(i));
        }
        assert_eq!(b.prefix_len(2), 10);
        assert!(b.entries()[..10].iter().all(|m| m.degree() <= 2));
    }
}
