use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A dense non-negative function over a set of discrete named variables.
///
/// Values are stored row-major: the last variable varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    vars: Vec<String>,
    card: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(vars: Vec<String>, card: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(vars.len(), card.len());
        assert_eq!(values.len(), card.iter().product::<usize>());
        Table { vars, card, values }
    }

    pub fn scalar(v: f64) -> Self {
        Table::new(vec![], vec![], vec![v])
    }

    /// Builds a table by calling `f` on every assignment.
    pub fn from_fn(vars: Vec<String>, card: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let n: usize = card.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut state = vec![0usize; card.len()];
        for _ in 0..n {
            values.push(f(&state));
            advance(&mut state, &card);
        }
        Table { vars, card, values }
    }

    /// The same values under new variable names, position for position.
    pub fn with_vars(mut self, vars: Vec<String>) -> Table {
        assert_eq!(vars.len(), self.vars.len());
        self.vars = vars;
        self
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn card(&self) -> &[usize] {
        &self.card
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    pub fn cardinality_of(&self, var: &str) -> Option<usize> {
        self.position(var).map(|i| self.card[i])
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.card.len()];
        for i in (0..self.card.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.card[i + 1];
        }
        s
    }

    /// Decodes a flat index into one state per variable.
    pub fn assignment(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.card.len()];
        for i in (0..self.card.len()).rev() {
            out[i] = idx % self.card[i];
            idx /= self.card[i];
        }
        out
    }

    pub fn index_of(&self, states: &[usize]) -> usize {
        states
            .iter()
            .zip(&self.card)
            .fold(0, |acc, (&s, &c)| acc * c + s)
    }

    /// Value at an assignment given by name; variables not in the table are ignored.
    pub fn get(&self, assignment: &HashMap<String, usize>) -> Option<f64> {
        let mut states = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            states.push(*assignment.get(v)?);
        }
        Some(self.values[self.index_of(&states)])
    }

    /// Combines two tables cell-wise over the union of their variables.
    /// Output variables are `self`'s followed by `other`'s new ones.
    pub fn combine(&self, other: &Table, f: impl Fn(f64, f64) -> f64) -> Table {
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        for (v, &c) in other.vars.iter().zip(&other.card) {
            if !vars.contains(v) {
                vars.push(v.clone());
                card.push(c);
            }
        }
        let sa = self.strides();
        let sb = other.strides();
        let map_a: Vec<usize> = vars
            .iter()
            .map(|v| self.position(v).map_or(0, |i| sa[i]))
            .collect();
        let map_b: Vec<usize> = vars
            .iter()
            .map(|v| other.position(v).map_or(0, |i| sb[i]))
            .collect();
        let n: usize = card.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut state = vec![0usize; card.len()];
        for _ in 0..n {
            let ia: usize = state.iter().zip(&map_a).map(|(s, m)| s * m).sum();
            let ib: usize = state.iter().zip(&map_b).map(|(s, m)| s * m).sum();
            values.push(f(self.values[ia], other.values[ib]));
            advance(&mut state, &card);
        }
        Table { vars, card, values }
    }

    /// Product where a zero annihilates an undefined cell.
    pub fn mul(&self, other: &Table) -> Table {
        self.combine(other, |a, b| if a == 0.0 || b == 0.0 { 0.0 } else { a * b })
    }

    /// Quotient; division by zero yields an undefined (NaN) cell.
    pub fn div(&self, other: &Table) -> Table {
        self.combine(other, |a, b| if b == 0.0 { f64::NAN } else { a / b })
    }

    /// Sums out the named variables; names not in the table are skipped.
    pub fn sum_out(&self, vars: &[String]) -> Table {
        let keep: Vec<usize> = (0..self.vars.len())
            .filter(|&i| !vars.contains(&self.vars[i]))
            .collect();
        if keep.len() == self.vars.len() {
            return self.clone();
        }
        let out_vars: Vec<String> = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let out_card: Vec<usize> = keep.iter().map(|&i| self.card[i]).collect();
        let mut out = Table::new(
            out_vars,
            out_card.clone(),
            vec![0.0; out_card.iter().product()],
        );
        let ostrides = out.strides();
        let mut state = vec![0usize; self.card.len()];
        for &v in &self.values {
            let idx: usize = keep.iter().zip(&ostrides).map(|(&i, s)| state[i] * s).sum();
            out.values[idx] += v;
            advance(&mut state, &self.card);
        }
        out
    }

    /// Marginal over `vars` in the given order.
    pub fn marginal(&self, vars: &[String]) -> Table {
        let drop: Vec<String> = self
            .vars
            .iter()
            .filter(|v| !vars.contains(v))
            .cloned()
            .collect();
        self.sum_out(&drop).permute(vars)
    }

    /// Reorders variables; `order` must be a permutation of `vars()`.
    pub fn permute(&self, order: &[String]) -> Table {
        if order == self.vars.as_slice() {
            return self.clone();
        }
        assert_eq!(order.len(), self.vars.len(), "permute needs every variable");
        let pos: Vec<usize> = order
            .iter()
            .map(|v| self.position(v).expect("permute: unknown variable"))
            .collect();
        let card: Vec<usize> = pos.iter().map(|&i| self.card[i]).collect();
        let strides = self.strides();
        Table::from_fn(order.to_vec(), card, |st| {
            let idx: usize = st.iter().zip(&pos).map(|(s, &i)| s * strides[i]).sum();
            self.values[idx]
        })
    }

    /// Divides every cell by the sum over `var` within its context.
    pub fn normalize_over(&self, var: &str) -> Table {
        let total = self.sum_out(&[var.to_string()]);
        self.combine(&total, |a, s| if s == 0.0 { f64::NAN } else { a / s })
            .permute(&self.vars)
    }

    /// Extends the table with a new variable along which it is constant.
    pub fn broadcast(&self, var: &str, card: usize) -> Table {
        let ones = Table::new(vec![var.to_string()], vec![card], vec![1.0; card]);
        self.combine(&ones, |a, _| a)
    }

    /// First undefined cell, if any.
    pub fn first_nan(&self) -> Option<Vec<(String, usize)>> {
        let i = self.values.iter().position(|v| v.is_nan())?;
        Some(self.vars.iter().cloned().zip(self.assignment(i)).collect())
    }

    /// Largest absolute cell-wise difference after aligning variables.
    /// Variables present in only one table are broadcast.
    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        self.combine(other, |a, b| (a - b).abs())
            .values
            .iter()
            .fold(0.0, |m, &d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
    }
}

fn advance(state: &mut [usize], card: &[usize]) {
    for i in (0..state.len()).rev() {
        state[i] += 1;
        if state[i] < card[i] {
            return;
        }
        state[i] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn marginal_and_permute() {
        let t = Table::new(s(&["A", "B"]), vec![2, 3], vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(t.marginal(&s(&["A"])).values(), &[6., 15.]);
        assert_eq!(t.marginal(&s(&["B"])).values(), &[5., 7., 9.]);
        let p = t.permute(&s(&["B", "A"]));
        assert_eq!(p.values(), &[1., 4., 2., 5., 3., 6.]);
        assert_eq!(p.permute(&s(&["A", "B"])), t);
    }

    #[test]
    fn broadcasting_product() {
        let a = Table::new(s(&["A"]), vec![2], vec![0.5, 2.0]);
        let b = Table::new(s(&["B"]), vec![2], vec![3.0, 4.0]);
        let ab = a.mul(&b);
        assert_eq!(ab.vars(), &s(&["A", "B"]));
        assert_eq!(ab.values(), &[1.5, 2.0, 6.0, 8.0]);
    }

    #[test]
    fn zero_annihilates_undefined() {
        let w = Table::new(s(&["A"]), vec![2], vec![0.0, 1.0]);
        let q = Table::new(s(&["A"]), vec![2], vec![1.0, 1.0]).div(&Table::new(
            s(&["A"]),
            vec![2],
            vec![0.0, 2.0],
        ));
        assert!(q.values()[0].is_nan());
        let r = w.mul(&q);
        assert_eq!(r.values(), &[0.0, 0.5]);
        assert!(r.first_nan().is_none());
        assert_eq!(q.first_nan(), Some(vec![("A".to_string(), 0)]));
    }

    #[test]
    fn normalize_over_a_variable() {
        let t = Table::new(s(&["T", "C"]), vec![2, 2], vec![1., 3., 3., 1.]);
        let n = t.normalize_over("T");
        assert_eq!(n.values(), &[0.25, 0.75, 0.75, 0.25]);
    }
}
