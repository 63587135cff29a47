//! Two-word codes: unique factorisation and growth rate.

use std::collections::{BTreeSet, HashMap};

use crate::word::{Symbol, Word};

fn strip<'a>(word: &'a [Symbol], prefix: &[Symbol]) -> Option<&'a [Symbol]> {
    word.strip_prefix(prefix)
}

/// Dangling suffixes obtained from `a` and `b` when one is a prefix of the other.
fn dangling(a: &[Symbol], b: &[Symbol]) -> Option<Vec<Symbol>> {
    if let Some(s) = strip(b, a) {
        return Some(s.to_vec());
    }
    strip(a, b).map(|s| s.to_vec())
}

/// Sardinas–Patterson test on `{x, y}`, extended to infinite words.
///
/// Finite ambiguity shows up as a codeword (or the empty word) among the
/// dangling suffixes; an infinite word with two factorisations corresponds to
/// a cycle in the dangling-suffix graph. Returns true when neither occurs.
pub fn is_unambiguous(x: &Word, y: &Word) -> bool {
    if x == y || x.is_empty() || y.is_empty() {
        return false;
    }
    let code = [x.symbols().to_vec(), y.symbols().to_vec()];
    let first = match dangling(&code[0], &code[1]) {
        Some(s) => s,
        None => return true,
    };
    // graph over dangling suffixes; nodes are discovered lazily
    let mut edges: HashMap<Vec<Symbol>, Vec<Vec<Symbol>>> = HashMap::new();
    let mut todo = vec![first];
    while let Some(s) = todo.pop() {
        if edges.contains_key(&s) {
            continue;
        }
        if s.is_empty() || code.contains(&s) {
            return false;
        }
        let next: Vec<Vec<Symbol>> = code.iter().filter_map(|c| dangling(&s, c)).collect();
        todo.extend(next.iter().cloned());
        edges.insert(s, next);
    }
    !has_cycle(&edges)
}

fn has_cycle(edges: &HashMap<Vec<Symbol>, Vec<Vec<Symbol>>>) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(
        n: &Vec<Symbol>,
        edges: &HashMap<Vec<Symbol>, Vec<Vec<Symbol>>>,
        marks: &mut HashMap<Vec<Symbol>, Mark>,
    ) -> bool {
        match marks.get(n) {
            Some(Mark::Open) => return true,
            Some(Mark::Done) => return false,
            None => {}
        }
        marks.insert(n.clone(), Mark::Open);
        for m in edges.get(n).into_iter().flatten() {
            if visit(m, edges, marks) {
                return true;
            }
        }
        marks.insert(n.clone(), Mark::Done);
        false
    }
    let mut marks = HashMap::new();
    let keys: BTreeSet<&Vec<Symbol>> = edges.keys().collect();
    keys.into_iter().any(|k| visit(k, edges, &mut marks))
}

/// Entropy of the free monoid on two words of lengths `len1`, `len2`: `log x`
/// for the root `x > 1` of `x^{-len1} + x^{-len2} = 1`.
pub fn code_entropy(len1: usize, len2: usize) -> f64 {
    code_growth_root(len1, len2).ln()
}

pub fn code_growth_root(len1: usize, len2: usize) -> f64 {
    assert!(len1 >= 1 && len2 >= 1, "word lengths must be positive");
    let f = |x: f64| x.powi(-(len1 as i32)) + x.powi(-(len2 as i32)) - 1.0;
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
