//! Dense table algebra over discrete variables.
//!
//! A [`Factor`] stores one real number per joint configuration of its scope,
//! in row-major order with the last scope variable varying fastest. Every
//! backend in the crate is written against the handful of operations here:
//! product, sum- and max-marginalization, and evidence reduction.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::VarId;

/// Outcome index per variable.
pub type Assignment = BTreeMap<VarId, usize>;

/// Relative tolerance under which two candidates for a maximum are treated
/// as tied, so that the lowest index wins.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Returns true when `candidate` beats `incumbent` by more than the tie tolerance.
pub fn exceeds(candidate: f64, incumbent: f64) -> bool {
    let scale = candidate.abs().max(incumbent.abs());
    candidate > incumbent + TIE_TOLERANCE * scale
}

/// Index of the first maximal entry, honouring [`TIE_TOLERANCE`].
pub fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if exceeds(v, b) => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

/// What the numbers in a factor mean. Products take the larger tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Semantics {
    Probability,
    Likelihood,
    Utility,
    Valuation,
}

impl Semantics {
    pub fn join(self, other: Semantics) -> Semantics {
        self.max(other)
    }
}

/// Row-major iteration over all configurations of a list of cardinalities.
pub struct Configurations {
    cards: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl Configurations {
    pub fn new(cards: &[usize]) -> Self {
        Configurations {
            cards: cards.to_vec(),
            current: vec![0; cards.len()],
            done: cards.iter().any(|&c| c == 0),
        }
    }
}

impl Iterator for Configurations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut pos = self.cards.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.cards[pos] {
                break;
            }
            self.current[pos] = 0;
        }
        Some(out)
    }
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

/// Linear index of a multi-index under row-major layout.
pub fn linear_index(cards: &[usize], index: &[usize]) -> usize {
    index
        .iter()
        .zip(cards)
        .fold(0, |acc, (&i, &c)| acc * c + i)
}

#[derive(Clone, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    semantics: Semantics,
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Factor[{:?}]{:?} {:?}", self.semantics, self.scope, self.values)
    }
}

impl Factor {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>, semantics: Semantics) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::InvalidArgument(format!(
                "scope has {} variables but {} cardinalities",
                scope.len(),
                cards.len()
            )));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::InvalidArgument(format!("duplicate variable {v:?} in scope")));
            }
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: values.len() });
        }
        Ok(Factor { scope, cards, values, semantics })
    }

    pub fn constant(scope: Vec<VarId>, cards: Vec<usize>, value: f64, semantics: Semantics) -> Self {
        let n = cards.iter().product();
        Factor::new(scope, cards, vec![value; n], semantics).expect("constant factor is well formed")
    }

    pub fn ones(scope: Vec<VarId>, cards: Vec<usize>) -> Self {
        Factor::constant(scope, cards, 1.0, Semantics::Probability)
    }

    pub fn scalar(value: f64, semantics: Semantics) -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![value], semantics }
    }

    /// Likelihood that is 1 at `index` and 0 elsewhere.
    pub fn indicator(var: VarId, cardinality: usize, index: usize) -> Result<Self> {
        if index >= cardinality {
            return Err(Error::IndexOutOfRange { var, index, cardinality });
        }
        let mut values = vec![0.0; cardinality];
        values[index] = 1.0;
        Factor::new(vec![var], vec![cardinality], values, Semantics::Likelihood)
    }

    /// Builds a factor by evaluating `f` at every configuration in row-major order.
    pub fn from_fn(
        scope: Vec<VarId>,
        cards: Vec<usize>,
        semantics: Semantics,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let values = Configurations::new(&cards).map(|c| f(&c)).collect();
        Factor::new(scope, cards, values, semantics)
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn with_semantics(mut self, semantics: Semantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, var: VarId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.scope.contains(&var)
    }

    pub fn cardinality_of(&self, var: VarId) -> Option<usize> {
        self.position(var).map(|i| self.cards[i])
    }

    /// Entry at a multi-index given in scope order.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[linear_index(&self.cards, index)]
    }

    /// Entry selected by an assignment covering at least the scope.
    pub fn value_at(&self, assignment: &Assignment) -> Result<f64> {
        let mut lin = 0;
        for (&v, &c) in self.scope.iter().zip(&self.cards) {
            let i = *assignment.get(&v).ok_or(Error::VarNotInScope(v))?;
            if i >= c {
                return Err(Error::IndexOutOfRange { var: v, index: i, cardinality: c });
            }
            lin = lin * c + i;
        }
        Ok(self.values[lin])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Scales entries to sum to one and returns the previous total.
    pub fn normalize(&mut self) -> f64 {
        let z = self.total();
        if z != 0.0 {
            for v in &mut self.values {
                *v /= z;
            }
        }
        z
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Factor {
        Factor { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Per-position strides of `self` laid out against a target scope (0 where absent).
    fn strides_against(&self, target: &[VarId]) -> Vec<usize> {
        let own = strides(&self.cards);
        target
            .iter()
            .map(|v| self.position(*v).map_or(0, |p| own[p]))
            .collect()
    }

    /// Linear offsets into `self` for every configuration of `vars` (row-major in `vars` order).
    fn offsets(&self, vars: &[VarId]) -> Vec<usize> {
        let own = strides(&self.cards);
        let (pos_strides, cards): (Vec<usize>, Vec<usize>) = vars
            .iter()
            .map(|v| {
                let p = self.position(*v).expect("offset variable in scope");
                (own[p], self.cards[p])
            })
            .unzip();
        Configurations::new(&cards)
            .map(|c| c.iter().zip(&pos_strides).map(|(i, s)| i * s).sum())
            .collect()
    }

    /// Walks a target layout and yields, per target entry, the matching index in `self`.
    fn gather(&self, target_scope: &[VarId], target_cards: &[usize]) -> Vec<usize> {
        let st = self.strides_against(target_scope);
        let total: usize = target_cards.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut digits = vec![0usize; target_cards.len()];
        let mut idx = 0usize;
        for _ in 0..total {
            out.push(idx);
            let mut pos = target_cards.len();
            while pos > 0 {
                pos -= 1;
                digits[pos] += 1;
                idx += st[pos];
                if digits[pos] < target_cards[pos] {
                    break;
                }
                idx -= st[pos] * target_cards[pos];
                digits[pos] = 0;
            }
        }
        out
    }

    fn check_cards(&self, other: &Factor) -> Result<()> {
        for (v, c) in self.scope.iter().zip(&self.cards) {
            if let Some(oc) = other.cardinality_of(*v) {
                if oc != *c {
                    return Err(Error::CardinalityMismatch { var: *v, left: *c, right: oc });
                }
            }
        }
        Ok(())
    }

    /// Pointwise product over the union of scopes (own variables first).
    pub fn multiply(&self, other: &Factor) -> Result<Factor> {
        self.check_cards(other)?;
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(v) {
                scope.push(*v);
                cards.push(*c);
            }
        }
        let ia = self.gather(&scope, &cards);
        let ib = other.gather(&scope, &cards);
        let values = ia
            .iter()
            .zip(&ib)
            .map(|(&a, &b)| self.values[a] * other.values[b])
            .collect();
        Ok(Factor { scope, cards, values, semantics: self.semantics.join(other.semantics) })
    }

    /// Same table with the scope reordered.
    pub fn permute(&self, order: &[VarId]) -> Result<Factor> {
        if order.len() != self.scope.len() {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of {:?}", self.scope)));
        }
        let mut cards = Vec::with_capacity(order.len());
        for v in order {
            cards.push(self.cardinality_of(*v).ok_or(Error::VarNotInScope(*v))?);
        }
        let idx = self.gather(order, &cards);
        let values = idx.iter().map(|&i| self.values[i]).collect();
        Factor::new(order.to_vec(), cards, values, self.semantics)
    }

    /// Extends the scope with extra variables, replicating entries.
    pub fn broadcast(&self, scope: &[VarId], cards: &[usize]) -> Result<Factor> {
        for v in &self.scope {
            if !scope.contains(v) {
                return Err(Error::VarNotInScope(*v));
            }
        }
        let target = Factor::ones(scope.to_vec(), cards.to_vec());
        self.check_cards(&target)?;
        let idx = self.gather(scope, cards);
        let values = idx.iter().map(|&i| self.values[i]).collect();
        Factor::new(scope.to_vec(), cards.to_vec(), values, self.semantics)
    }

    fn split(&self, vars: &[VarId]) -> Result<(Vec<VarId>, Vec<usize>, Vec<VarId>)> {
        for v in vars {
            if !self.contains(*v) {
                return Err(Error::VarNotInScope(*v));
            }
        }
        let mut kept = Vec::new();
        let mut kept_cards = Vec::new();
        let mut dropped = Vec::new();
        for (v, c) in self.scope.iter().zip(&self.cards) {
            if vars.contains(v) {
                dropped.push(*v);
            } else {
                kept.push(*v);
                kept_cards.push(*c);
            }
        }
        Ok((kept, kept_cards, dropped))
    }

    /// Sums the listed variables out.
    pub fn marginalize_sum(&self, vars: &[VarId]) -> Result<Factor> {
        let (kept, kept_cards, dropped) = self.split(vars)?;
        let outer = self.offsets(&kept);
        let inner = self.offsets(&dropped);
        let values = outer
            .iter()
            .map(|&o| inner.iter().map(|&i| self.values[o + i]).sum())
            .collect();
        Ok(Factor { scope: kept, cards: kept_cards, values, semantics: self.semantics })
    }

    /// Keeps only the listed variables, summing out the rest.
    pub fn sum_onto(&self, keep: &[VarId]) -> Result<Factor> {
        for v in keep {
            if !self.contains(*v) {
                return Err(Error::VarNotInScope(*v));
            }
        }
        let drop: Vec<VarId> = self.scope.iter().copied().filter(|v| !keep.contains(v)).collect();
        self.marginalize_sum(&drop)
    }

    /// Maximizes the listed variables out, recording the maximizing configuration.
    pub fn marginalize_max(&self, vars: &[VarId]) -> Result<(Factor, ArgmaxTable)> {
        let (kept, kept_cards, dropped) = self.split(vars)?;
        let dropped_cards: Vec<usize> = dropped
            .iter()
            .map(|v| self.cardinality_of(*v).expect("dropped variable in scope"))
            .collect();
        let outer = self.offsets(&kept);
        let inner = self.offsets(&dropped);
        let mut values = Vec::with_capacity(outer.len());
        let mut choices = Vec::with_capacity(outer.len());
        for &o in &outer {
            let j = argmax_first(inner.iter().map(|&i| self.values[o + i])).expect("nonempty");
            values.push(self.values[o + inner[j]]);
            choices.push(j);
        }
        let table = ArgmaxTable {
            retained: kept.clone(),
            retained_cards: kept_cards.clone(),
            eliminated: dropped,
            eliminated_cards: dropped_cards,
            choices,
        };
        Ok((Factor { scope: kept, cards: kept_cards, values, semantics: self.semantics }, table))
    }

    /// Slice consistent with the evidence; every evidence variable must be in scope.
    pub fn reduce(&self, evidence: &Assignment) -> Result<Factor> {
        let mut base = 0;
        let st = strides(&self.cards);
        for (&v, &i) in evidence {
            let p = self.position(v).ok_or(Error::VarNotInScope(v))?;
            if i >= self.cards[p] {
                return Err(Error::IndexOutOfRange { var: v, index: i, cardinality: self.cards[p] });
            }
            base += st[p] * i;
        }
        let vars: Vec<VarId> = evidence.keys().copied().collect();
        let (kept, kept_cards, _) = self.split(&vars)?;
        let values = self.offsets(&kept).iter().map(|&o| self.values[base + o]).collect();
        Ok(Factor { scope: kept, cards: kept_cards, values, semantics: self.semantics })
    }

    /// Like [`Factor::reduce`], ignoring evidence on variables outside the scope.
    pub fn reduce_present(&self, evidence: &Assignment) -> Result<Factor> {
        let local: Assignment = evidence
            .iter()
            .filter(|(v, _)| self.contains(**v))
            .map(|(v, i)| (*v, *i))
            .collect();
        self.reduce(&local)
    }

    /// Entrywise comparison after aligning scopes.
    pub fn approx_eq(&self, other: &Factor, tol: f64) -> bool {
        if self.scope.len() != other.scope.len() {
            return false;
        }
        let Ok(aligned) = other.permute(&self.scope) else {
            return false;
        };
        aligned.cards == self.cards
            && self
                .values
                .iter()
                .zip(&aligned.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Maximizing configurations recorded by [`Factor::marginalize_max`].
#[derive(Clone, Debug, PartialEq)]
pub struct ArgmaxTable {
    pub retained: Vec<VarId>,
    pub retained_cards: Vec<usize>,
    pub eliminated: Vec<VarId>,
    pub eliminated_cards: Vec<usize>,
    /// Row-major index over `eliminated`, one per retained configuration.
    pub choices: Vec<usize>,
}

impl ArgmaxTable {
    /// Maximizing configuration of the eliminated variables for a retained configuration.
    pub fn choice(&self, retained_index: usize) -> Vec<usize> {
        let mut rest = self.choices[retained_index];
        let mut out = vec![0; self.eliminated_cards.len()];
        for (slot, &c) in out.iter_mut().zip(&self.eliminated_cards).rev() {
            *slot = rest % c;
            rest /= c;
        }
        out
    }
}
