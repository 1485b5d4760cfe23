//! Canonical labelling of coloured finite preorders, and enumeration of
//! preorders up to isomorphism.
//!
//! Colour refinement (by colour multisets above and below each world) is
//! followed by individualisation of the first ambiguous cell; the smallest
//! resulting code wins. This is exact; it is only fast because the
//! structures handled here are small.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::preorder::{world_set, Preorder};

/// A canonical code: equal codes iff isomorphic as coloured preorders.
pub type Code = Vec<u64>;

fn refine(p: &Preorder, colors: &[u64]) -> Vec<u64> {
    let n = p.len();
    let mut cur: Vec<u64> = colors.to_vec();
    let mut classes = count_classes(&cur);
    loop {
        let sigs: Vec<(u64, Vec<u64>, Vec<u64>)> = (0..n)
            .map(|w| {
                let mut d: Vec<u64> = p.downset(w).ones().filter(|&v| v != w).map(|v| cur[v]).collect();
                let mut u: Vec<u64> = p.upset(w).ones().filter(|&v| v != w).map(|v| cur[v]).collect();
                d.sort_unstable();
                u.sort_unstable();
                (cur[w], d, u)
            })
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        let next: Vec<u64> = sigs
            .iter()
            .map(|s| sorted.binary_search(s).expect("present") as u64)
            .collect();
        let k = sorted.len();
        cur = next;
        if k == classes {
            return cur;
        }
        classes = k;
    }
}

fn count_classes(c: &[u64]) -> usize {
    c.iter().collect::<BTreeSet<_>>().len()
}

fn build_code(p: &Preorder, colors: &[u64], order: &[usize]) -> Code {
    let n = order.len();
    let mut code = Vec::with_capacity(1 + n + n);
    code.push(n as u64);
    code.extend(order.iter().map(|&w| colors[w]));
    for &w in order {
        let mut row = 0u64;
        for (j, &v) in order.iter().enumerate() {
            if p.le(v, w) {
                row |= 1 << j;
            }
        }
        code.push(row);
    }
    code
}

fn search(p: &Preorder, input: &[u64], colors: &[u64], best: &mut Option<(Code, Vec<usize>)>) {
    let c = refine(p, colors);
    let n = p.len();
    let mut by_color: Vec<Vec<usize>> = vec![Vec::new(); n];
    for w in 0..n {
        by_color[c[w] as usize].push(w);
    }
    match by_color.iter().find(|cell| cell.len() > 1) {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&w| c[w]);
            let code = build_code(p, input, &order);
            if best.as_ref().is_none_or(|(b, _)| code < *b) {
                *best = Some((code, order));
            }
        }
        Some(cell) => {
            for &v in cell {
                let ind: Vec<u64> = (0..n)
                    .map(|x| c[x] * 2 + u64::from(x != v && c[x] == c[v]))
                    .collect();
                search(p, input, &ind, best);
            }
        }
    }
}

/// Canonical code of a coloured preorder, and the ordering of worlds that
/// produces it (new position `i` holds old world `order[i]`).
pub fn canonical_form(p: &Preorder, colors: &[u64]) -> (Code, Vec<usize>) {
    assert!(p.len() <= 64, "canonical form supports at most 64 worlds");
    assert_eq!(colors.len(), p.len());
    if p.is_empty() {
        return (vec![0], Vec::new());
    }
    let mut best = None;
    search(p, colors, colors, &mut best);
    best.expect("at least one leaf")
}

pub fn canonical_code(p: &Preorder, colors: &[u64]) -> Code {
    canonical_form(p, colors).0
}

/// All preorders on exactly `n` worlds up to isomorphism, each in
/// canonical numbering.
pub fn preorders_of_size(n: usize) -> Vec<Preorder> {
    let mut layer = vec![Preorder::discrete(0)];
    for _ in 0..n {
        layer = extend_layer(&layer);
    }
    layer
}

/// All preorders with `1..=n_max` worlds up to isomorphism.
pub fn preorders_up_to_iso(n_max: usize) -> Vec<Preorder> {
    let mut out = Vec::new();
    let mut layer = vec![Preorder::discrete(0)];
    for _ in 0..n_max {
        layer = extend_layer(&layer);
        out.extend(layer.iter().cloned());
    }
    out
}

/// Adds one world in every consistent way: the new world gets a down-set
/// `d` and an up-set `u` among the old worlds, with `d` down-closed, `u`
/// up-closed and everything in `d` below everything in `u`.
fn extend_layer(layer: &[Preorder]) -> Vec<Preorder> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in layer {
        let n = p.len();
        let subsets: Vec<_> = (0u64..(1 << n))
            .map(|m| world_set(n, (0..n).filter(|&i| m & (1 << i) != 0)))
            .collect();
        let downs: Vec<_> = subsets.iter().filter(|s| p.is_open(s)).collect();
        let ups: Vec<_> = subsets.iter().filter(|s| p.is_closed(s)).collect();
        for d in &downs {
            for u in &ups {
                if !d.ones().all(|a| u.ones().all(|b| p.le(a, b))) {
                    continue;
                }
                let mut pairs: Vec<(usize, usize)> = Vec::new();
                for w in 0..n {
                    for v in p.downset(w).ones() {
                        pairs.push((v, w));
                    }
                }
                pairs.extend(d.ones().map(|a| (a, n)));
                pairs.extend(u.ones().map(|b| (n, b)));
                let q = Preorder::from_pairs(n + 1, &pairs).expect("indices in range");
                let (code, order) = canonical_form(&q, &vec![0; n + 1]);
                if seen.insert(code) {
                    let canon = q.permute(&order);
                    let names = (0..=n).map(|i| alloc::format!("w{i}")).collect();
                    out.push(canon.with_names(names));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_known_sequence() {
        // unlabelled preorders (finite topologies) on n points
        let counts: Vec<usize> = (1..=5).map(|n| preorders_of_size(n).len()).collect();
        assert_eq!(counts, vec![1, 3, 9, 33, 139]);
        assert_eq!(preorders_up_to_iso(2).len(), 4);
    }

    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..n {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn iso_brute(a: &Preorder, ca: &[u64], b: &Preorder, cb: &[u64]) -> bool {
        a.len() == b.len()
            && perms(a.len()).iter().any(|pi| {
                (0..a.len()).all(|v| ca[v] == cb[pi[v]])
                    && (0..a.len()).all(|v| (0..a.len()).all(|w| a.le(v, w) == b.le(pi[v], pi[w])))
            })
    }

    #[test]
    fn codes_agree_with_brute_force_isomorphism() {
        let ps = preorders_up_to_iso(4);
        let colorings = |n: usize| -> Vec<Vec<u64>> {
            (0..(1u32 << n))
                .map(|m| (0..n).map(|i| u64::from(m & (1 << i) != 0)).collect())
                .collect()
        };
        let mut items = Vec::new();
        for p in &ps {
            for c in colorings(p.len()) {
                // a random-ish relabelling must not change the code
                let order: Vec<usize> = (0..p.len()).rev().collect();
                let q = p.permute(&order);
                let cq: Vec<u64> = order.iter().map(|&w| c[w]).collect();
                assert_eq!(canonical_code(p, &c), canonical_code(&q, &cq));
                items.push((p.clone(), c));
            }
        }
        for (i, (a, ca)) in items.iter().enumerate() {
            for (b, cb) in items.iter().skip(i + 1).filter(|(b, _)| b.len() == a.len()) {
                let same = canonical_code(a, ca) == canonical_code(b, cb);
                if a.len() <= 3 || same {
                    assert_eq!(same, iso_brute(a, ca, b, cb));
                }
            }
        }
    }
}
