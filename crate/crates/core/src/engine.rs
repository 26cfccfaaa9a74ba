//! Summation machinery shared by the enumeration scorers: odometers over
//! ordered completions, the count-vector (composition) enumerator, and a
//! term evaluator with per-cell log-gamma caches.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::NetworkStructure;
use crate::math::{ln_factorials, ln_gamma, LogSumExp};
use crate::prior::FamilyPrior;
use crate::score::{row_log_score, SufficientCounts};

/// `C(n, k)`, saturating.
pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub(crate) fn saturating_pow(base: u128, exp: u64) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u128::MAX || base <= 1 {
            break;
        }
    }
    if base == 0 && exp > 0 { 0 } else { acc }
}

/// Number of count vectors of `m` items over `k` slots.
pub(crate) fn composition_count(m: u64, k: u128) -> u128 {
    if k == 0 {
        return if m == 0 { 1 } else { 0 };
    }
    binomial(m as u128 + k - 1, k - 1)
}

pub(crate) fn check_budget(terms: u128, budget: u64) -> Result<()> {
    if terms > budget as u128 { Err(Error::BudgetExceeded { terms, budget }) } else { Ok(()) }
}

/// Advances `c` to the next composition of the same total in ascending
/// lexicographic order. Returns `false` after the last one.
pub(crate) fn next_composition(c: &mut [u32]) -> bool {
    let k = c.len();
    if k < 2 {
        return false;
    }
    let mut tail = c[k - 1];
    let mut i = k - 1;
    while i > 0 {
        i -= 1;
        if tail > 0 {
            c[i] += 1;
            for x in &mut c[i + 1..] {
                *x = 0;
            }
            c[k - 1] = tail - 1;
            return true;
        }
        tail += c[i];
    }
    false
}

/// Advances a mixed-radix odometer (first digit most significant).
pub(crate) fn next_odometer(digits: &mut [usize], radix: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radix[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// Score of the families touched by unsampled cases, as a function of how
/// many unsampled cases take each joint configuration of the enumerated
/// variables.
pub(crate) struct Coupled {
    configs: usize,
    families: usize,
    span: usize,
    base: f64,
    /// `configs x families` global cell indices.
    cell_of: Vec<u32>,
    row_of: Vec<u32>,
    /// `(span + 1)` deltas per global cell / row.
    cell_d: Vec<f64>,
    row_d: Vec<f64>,
    ln_fact: Vec<f64>,
}

pub(crate) struct Scratch {
    cell_e: Vec<u32>,
    row_e: Vec<u32>,
    cells: Vec<u32>,
    rows: Vec<u32>,
}

impl Coupled {
    /// `vars` are the enumerated variables (ascending, excluding `S`),
    /// `touched` the families whose counts can change; every parent of a
    /// touched family must be in `vars` or be `S`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        structure: &NetworkStructure,
        prior: &FamilyPrior,
        base: &SufficientCounts,
        vars: &[usize],
        touched: &[usize],
        s: usize,
        unsampled: usize,
        span: u64,
    ) -> Result<Self> {
        let span = span as usize;
        let radix: Vec<usize> = vars.iter().map(|&v| structure.arity(v)).collect();
        let configs: usize = radix.iter().product();
        let mut cell_off = Vec::with_capacity(touched.len());
        let mut row_off = Vec::with_capacity(touched.len());
        let mut cell_d = Vec::new();
        let mut row_d = Vec::new();
        let mut base_score = 0.0;
        let (mut nc, mut nr) = (0u32, 0u32);
        for &f in touched {
            cell_off.push(nc);
            row_off.push(nr);
            let table = &prior.tables[f];
            for (j, alpha) in table.rows.iter().enumerate() {
                let counts = &base.tables[f][j];
                if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                    return Err(Error::InvalidPrior(alloc::format!(
                        "nonpositive alpha in family `{}`",
                        structure.name(f)
                    )));
                }
                base_score += row_log_score(alpha, counts);
                let a_row: f64 = alpha.iter().sum();
                let b_row: u64 = counts.iter().sum();
                let r0 = ln_gamma(a_row + b_row as f64);
                for n in 0..=span {
                    row_d.push(r0 - ln_gamma(a_row + (b_row + n as u64) as f64));
                }
                for (&a, &b) in alpha.iter().zip(counts) {
                    let c0 = ln_gamma(a + b as f64);
                    for n in 0..=span {
                        cell_d.push(ln_gamma(a + (b + n as u64) as f64) - c0);
                    }
                }
                nr += 1;
                nc += alpha.len() as u32;
            }
        }
        let mut cell_of = Vec::with_capacity(configs * touched.len());
        let mut row_of = Vec::with_capacity(configs * touched.len());
        let mut states = vec![0usize; structure.len()];
        states[s] = unsampled;
        let mut digits = vec![0usize; vars.len()];
        for _ in 0..configs {
            for (d, &v) in digits.iter().zip(vars) {
                states[v] = *d;
            }
            for (t, &f) in touched.iter().enumerate() {
                let row = structure.row_index(f, &states);
                row_of.push(row_off[t] + row as u32);
                cell_of.push(cell_off[t] + (row * structure.arity(f) + states[f]) as u32);
            }
            next_odometer(&mut digits, &radix);
        }
        Ok(Self {
            configs,
            families: touched.len(),
            span,
            base: base_score,
            cell_of,
            row_of,
            cell_d,
            row_d,
            ln_fact: ln_factorials(span),
        })
    }

    pub(crate) fn scratch(&self) -> Scratch {
        Scratch {
            cell_e: vec![0; self.cell_d.len() / (self.span + 1)],
            row_e: vec![0; self.row_d.len() / (self.span + 1)],
            cells: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Touched-family score with `c[a]` extra cases in configuration `a`.
    pub(crate) fn evaluate(&self, c: &[u32], sc: &mut Scratch) -> f64 {
        for (a, &n) in c.iter().enumerate() {
            if n == 0 {
                continue;
            }
            for t in 0..self.families {
                let cell = self.cell_of[a * self.families + t];
                if sc.cell_e[cell as usize] == 0 {
                    sc.cells.push(cell);
                }
                sc.cell_e[cell as usize] += n;
                let row = self.row_of[a * self.families + t];
                if sc.row_e[row as usize] == 0 {
                    sc.rows.push(row);
                }
                sc.row_e[row as usize] += n;
            }
        }
        let w = self.span + 1;
        let mut v = self.base;
        for &cell in &sc.cells {
            let e = core::mem::take(&mut sc.cell_e[cell as usize]) as usize;
            v += self.cell_d[cell as usize * w + e];
        }
        for &row in &sc.rows {
            let e = core::mem::take(&mut sc.row_e[row as usize]) as usize;
            v += self.row_d[row as usize * w + e];
        }
        sc.cells.clear();
        sc.rows.clear();
        v
    }

    pub(crate) fn ln_multinomial(&self, c: &[u32]) -> f64 {
        let total: u32 = c.iter().sum();
        let mut v = self.ln_fact[total as usize];
        for &x in c {
            v -= self.ln_fact[x as usize];
        }
        v
    }

    /// log-sum over count vectors with multinomial weights.
    pub(crate) fn sum_collapsed(&self, m: u64) -> f64 {
        let mut sc = self.scratch();
        let mut c = vec![0u32; self.configs];
        let mut acc = LogSumExp::new();
        if let Some(last) = c.last_mut() {
            *last = m as u32;
        }
        loop {
            acc.push(self.ln_multinomial(&c) + self.evaluate(&c, &mut sc));
            if !next_composition(&mut c) {
                break;
            }
        }
        acc.value()
    }

    /// log-sum over ordered tuples of configurations, one per unsampled case.
    pub(crate) fn sum_ordered(&self, m: u64) -> f64 {
        let mut sc = self.scratch();
        let m = m as usize;
        let radix = vec![self.configs; m];
        let mut digits = vec![0usize; m];
        let mut c = vec![0u32; self.configs];
        c[0] = m as u32;
        let mut acc = LogSumExp::new();
        loop {
            acc.push(self.evaluate(&c, &mut sc));
            let before = digits.clone();
            if !next_odometer(&mut digits, &radix) {
                break;
            }
            for (b, a) in before.iter().zip(&digits) {
                if b != a {
                    c[*b] -= 1;
                    c[*a] += 1;
                }
            }
        }
        acc.value()
    }
}
