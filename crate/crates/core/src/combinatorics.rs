//! Binomial coefficients and lexicographic subset enumeration.

use crate::error::{Error, Result};

/// Maximum number of kernel evaluations any exact enumeration may perform.
pub const ENUMERATION_GUARD: u128 = 10_000_000;

/// `C(n, k)` in 128-bit integer arithmetic; saturates at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1); split the gcd first so the
        // product never exceeds the final magnitude by more than a factor k
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        match (acc / g).checked_mul(num / (den / g)) {
            Some(v) => acc = v,
            None => return u128::MAX,
        }
    }
    acc
}

/// `C(n, k)` as a float, computed exactly in integers first.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial(n as u64, k as u64) as f64
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// Fails with [`Error::Guard`] if `count` exceeds [`ENUMERATION_GUARD`].
pub fn check_guard(what: &'static str, count: u128) -> Result<()> {
    if count > ENUMERATION_GUARD {
        Err(Error::Guard {
            what,
            needed: count,
            limit: ENUMERATION_GUARD,
        })
    } else {
        Ok(())
    }
}

/// Iterator over all `k`-subsets of `0..n` in lexicographic order.
///
/// Yields a borrowed slice per step through [`Subsets::next_subset`] to avoid
/// allocating one vector per subset.
pub struct Subsets {
    n: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl Subsets {
    pub fn new(n: usize, k: usize) -> Self {
        Subsets {
            n,
            idx: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    pub fn next_subset(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        let k = self.idx.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
        self.done = true;
        None
    }
}

/// Calls `f` once for every `k`-subset of `0..n`.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut it = Subsets::new(n, k);
    while let Some(s) = it.next_subset() {
        f(s);
    }
}

/// Calls `f` for every tuple in `{0..base}^len`, last coordinate fastest.
pub fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut t = vec![0usize; len];
    if base == 0 && len > 0 {
        return;
    }
    loop {
        f(&t);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < base {
                break;
            }
            t[i] = 0;
        }
    }
}

/// Calls `f` for every permutation of `items` (Heap's algorithm).
pub fn for_each_permutation<T: Clone>(items: &[T], mut f: impl FnMut(&[T])) {
    let mut a = items.to_vec();
    let n = a.len();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
