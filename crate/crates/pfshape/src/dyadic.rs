//! Optimal dyadic approximation of a PMF via Geometric Huffman Coding,
//! prefix-free modulation codes, and bit-stream encode/decode.
//!
//! A dyadic PMF assigns each included symbol a probability 2^(-l); it is
//! exactly what parsing fair bits with a full prefix-free code realizes.
//! `ghc` returns the dyadic PMF minimizing D(dyadic || target);
//! `huffman_lengths` is the classical baseline minimizing expected length
//! instead, which is the wrong objective for shaping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// Codeword lengths of a full prefix-free code with the induced dyadic
/// probabilities 2^(-l_i); excluded symbols carry no length.
///
/// Kraft equality over included symbols holds exactly (verified in integer
/// arithmetic at construction). A length-0 word (probability 1) is legal
/// only as the sole included symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicPmf {
    lengths: Vec<Option<u32>>,
    probs: Vec<f64>,
}

impl DyadicPmf {
    pub fn from_lengths(lengths: Vec<Option<u32>>) -> Result<Self> {
        verify_kraft_equality(&lengths)?;
        let probs = lengths
            .iter()
            .map(|l| match l {
                Some(l) => (2.0f64).powi(-(*l as i32)),
                None => 0.0,
            })
            .collect();
        Ok(Self { lengths, probs })
    }

    pub fn lengths(&self) -> &[Option<u32>] {
        &self.lengths
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn included(&self) -> usize {
        self.lengths.iter().flatten().count()
    }

    pub fn to_pmf(&self) -> Pmf {
        Pmf::new(self.probs.clone()).expect("Kraft equality implies a valid PMF")
    }

    /// D(self || p) in nats, evaluated from the exact lengths:
    /// sum 2^(-l_i) (-l_i ln 2 - ln p_i); +inf if some included symbol has
    /// p_i = 0.
    pub fn kl_to(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.lengths.len(), "PMF misaligned");
        let mut acc = 0.0;
        for (l, &pi) in self.lengths.iter().zip(p) {
            if let Some(l) = l {
                if pi <= 0.0 {
                    return f64::INFINITY;
                }
                let d = (2.0f64).powi(-(*l as i32));
                acc += d * (-(*l as f64) * std::f64::consts::LN_2 - pi.ln());
            }
        }
        acc
    }
}

/// Exact Kraft-equality check: process codeword counts from the longest
/// length down, carrying pairs to the next shorter level; a full code
/// leaves exactly one unit at level 0.
fn verify_kraft_equality(lengths: &[Option<u32>]) -> Result<()> {
    let max_len = lengths.iter().flatten().max().copied();
    let max_len = match max_len {
        Some(l) => l as usize,
        None => return Err(Error::NotFullCode("no included symbols".into())),
    };
    let mut counts = vec![0u64; max_len + 1];
    for l in lengths.iter().flatten() {
        counts[*l as usize] += 1;
    }
    let mut carry = 0u64;
    for level in (1..=max_len).rev() {
        let total = counts[level] + carry;
        if total % 2 != 0 {
            return Err(Error::NotFullCode(format!(
                "odd node count {total} at depth {level}"
            )));
        }
        carry = total / 2;
    }
    if counts[0] + carry != 1 {
        return Err(Error::NotFullCode(format!(
            "root count is {}, expected 1",
            counts[0] + carry
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Geometric Huffman Coding
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Node {
    Leaf(usize),
    Internal(u32, u32),
}

/// Optimal dyadic approximation of `p`: argmin over dyadic PMFs d of
/// D(d || p).
///
/// Merge rule on the two smallest remaining masses a <= b: if 4a <= b the
/// smaller is dropped (its symbols end up excluded), otherwise both become
/// children of a node of mass 2 sqrt(ab). Symbols with p_i = 0 are always
/// excluded. Ties are broken by original symbol index, so the output is
/// deterministic.
pub fn ghc(p: &Pmf) -> Result<DyadicPmf> {
    let lengths = ghc_lengths(p)?;
    let out = DyadicPmf::from_lengths(lengths)?;
    debug_assert!(
        out.probs().iter().zip(p.probs()).all(|(&d, &pi)| d == 0.0 || pi > 0.0),
        "support condition violated: dyadic mass on a zero-probability symbol"
    );
    Ok(out)
}

fn ghc_lengths(p: &Pmf) -> Result<Vec<Option<u32>>> {
    let m = p.len();
    // included leaves sorted ascending by (probability, original index)
    let mut order: Vec<usize> = (0..m).filter(|&i| p[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::InvalidInput("PMF has empty support".into()));
    }
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));

    // two-queue merge: the original sorted queue and a FIFO of merged
    // nodes, whose produced values are nondecreasing
    let mut nodes: Vec<Node> = (0..m).map(Node::Leaf).collect();
    let mut values: Vec<f64> = p.probs().to_vec();
    let mut q_leaf = std::collections::VecDeque::from(order);
    let mut q_merge: std::collections::VecDeque<usize> = std::collections::VecDeque::new();

    let pop_min = |q1: &mut std::collections::VecDeque<usize>,
                       q2: &mut std::collections::VecDeque<usize>,
                       values: &Vec<f64>|
     -> usize {
        match (q1.front(), q2.front()) {
            (Some(&a), Some(&b)) => {
                if values[a] <= values[b] {
                    q1.pop_front().unwrap()
                } else {
                    q2.pop_front().unwrap()
                }
            }
            (Some(_), None) => q1.pop_front().unwrap(),
            (None, Some(_)) => q2.pop_front().unwrap(),
            (None, None) => unreachable!("queues exhausted"),
        }
    };

    while q_leaf.len() + q_merge.len() > 1 {
        let small = pop_min(&mut q_leaf, &mut q_merge, &values);
        let second = pop_min(&mut q_leaf, &mut q_merge, &values);
        if 4.0 * values[small] <= values[second] {
            // drop the smaller node; anything under it stays unreachable.
            // the survivor is <= every remaining value, so the front keeps
            // the merge queue sorted
            q_merge.push_front(second);
        } else {
            let merged = 2.0 * (values[small] * values[second]).sqrt();
            let id = nodes.len();
            nodes.push(Node::Internal(small as u32, second as u32));
            values.push(merged);
            debug_assert!(
                q_merge.back().map_or(true, |&b| values[b] <= merged),
                "merged values must be nondecreasing"
            );
            q_merge.push_back(id);
        }
    }
    let root = pop_min(&mut q_leaf, &mut q_merge, &values);

    // assign depths iteratively; children were created before parents
    let mut depth = vec![u32::MAX; nodes.len()];
    depth[root] = 0;
    for id in (0..nodes.len()).rev() {
        if depth[id] == u32::MAX {
            continue;
        }
        if let Node::Internal(a, b) = nodes[id] {
            depth[a as usize] = depth[id] + 1;
            depth[b as usize] = depth[id] + 1;
        }
    }
    let mut lengths = vec![None; m];
    for (id, node) in nodes.iter().enumerate() {
        if let Node::Leaf(sym) = node {
            if depth[id] != u32::MAX {
                lengths[*sym] = Some(depth[id]);
            }
        }
    }
    Ok(lengths)
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Independent oracle for [`ghc`]: exact optimum over all length
/// assignments (exclusions included) satisfying Kraft equality with
/// l_i <= max_len, by dynamic programming over the remaining Kraft budget.
/// KL ties resolve to the lexicographically smallest length vector, with
/// exclusion ordered after every finite length.
pub fn ghc_bruteforce(p: &Pmf, max_len: u32) -> Result<DyadicPmf> {
    let m = p.len();
    if m > 8 || max_len > 10 {
        return Err(Error::SearchSpaceTooLarge { m, max_len });
    }
    let budget = 1usize << max_len;
    // choices in order of preference at equal KL: l = 0, 1, ..., max_len, excluded
    let choices: Vec<usize> = std::iter::once(budget)
        .chain((1..=max_len).map(|l| 1usize << (max_len - l)))
        .chain(std::iter::once(0))
        .collect();

    const INF: f64 = f64::INFINITY;
    // dp[i][r]: best (kl, chosen budget) for symbols i.. with r budget left
    let mut dp = vec![vec![(INF, usize::MAX); budget + 1]; m + 1];
    dp[m][0] = (0.0, 0);
    for i in (0..m).rev() {
        for r in 0..=budget {
            let mut best = (INF, usize::MAX);
            for &b in &choices {
                if b > r {
                    continue;
                }
                let tail = dp[i + 1][r - b].0;
                if tail.is_infinite() {
                    continue;
                }
                let cost = if b == 0 {
                    0.0
                } else {
                    if p[i] <= 0.0 {
                        continue;
                    }
                    let d = b as f64 / budget as f64;
                    d * (d / p[i]).ln()
                };
                let total = cost + tail;
                // strict improvement keeps the first (most preferred) choice at ties
                if total < best.0 {
                    best = (total, b);
                }
            }
            dp[i][r] = best;
        }
    }
    if dp[0][budget].0.is_infinite() {
        return Err(Error::InvalidInput(
            "no full code exists within the length bound".into(),
        ));
    }
    let mut lengths = vec![None; m];
    let mut r = budget;
    for i in 0..m {
        let b = dp[i][r].1;
        if b > 0 {
            lengths[i] = Some(max_len - (b.trailing_zeros()));
            r -= b;
        }
    }
    DyadicPmf::from_lengths(lengths)
}

// ---------------------------------------------------------------------------
// Classical Huffman baseline
// ---------------------------------------------------------------------------

/// Codeword lengths of the classical Huffman code of `p` (minimum expected
/// length), as the induced dyadic PMF. Merge-order ties break toward the
/// lowest original symbol index. Zero-probability symbols are excluded.
pub fn huffman_lengths(p: &Pmf) -> Result<DyadicPmf> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Item {
        prob: f64,
        min_idx: usize,
        node: usize,
    }
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.prob
                .total_cmp(&other.prob)
                .then(self.min_idx.cmp(&other.min_idx))
        }
    }

    let m = p.len();
    let mut nodes: Vec<Node> = (0..m).map(Node::Leaf).collect();
    let mut heap: BinaryHeap<Reverse<Item>> = (0..m)
        .filter(|&i| p[i] > 0.0)
        .map(|i| {
            Reverse(Item {
                prob: p[i],
                min_idx: i,
                node: i,
            })
        })
        .collect();
    if heap.is_empty() {
        return Err(Error::InvalidInput("PMF has empty support".into()));
    }
    while heap.len() > 1 {
        let Reverse(a) = heap.pop().unwrap();
        let Reverse(b) = heap.pop().unwrap();
        let id = nodes.len();
        nodes.push(Node::Internal(a.node as u32, b.node as u32));
        heap.push(Reverse(Item {
            prob: a.prob + b.prob,
            min_idx: a.min_idx.min(b.min_idx),
            node: id,
        }));
    }
    let root = heap.pop().unwrap().0.node;
    let mut depth = vec![u32::MAX; nodes.len()];
    depth[root] = 0;
    for id in (0..nodes.len()).rev() {
        if depth[id] == u32::MAX {
            continue;
        }
        if let Node::Internal(a, b) = nodes[id] {
            depth[a as usize] = depth[id] + 1;
            depth[b as usize] = depth[id] + 1;
        }
    }
    let mut lengths = vec![None; m];
    for (id, node) in nodes.iter().enumerate() {
        if let Node::Leaf(sym) = node {
            if depth[id] != u32::MAX {
                lengths[*sym] = Some(depth[id]);
            }
        }
    }
    DyadicPmf::from_lengths(lengths)
}

// ---------------------------------------------------------------------------
// Prefix codes and bit-stream coding
// ---------------------------------------------------------------------------

/// A full prefix-free binary code mapping included symbols to codewords.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrefixCode {
    /// Codeword bits (0/1) per symbol; None for excluded symbols.
    codewords: Vec<Option<Vec<u8>>>,
}

impl PrefixCode {
    pub fn codeword(&self, symbol: usize) -> Option<&[u8]> {
        self.codewords.get(symbol)?.as_deref()
    }

    pub fn codewords(&self) -> &[Option<Vec<u8>>] {
        &self.codewords
    }

    pub fn alphabet_size(&self) -> usize {
        self.codewords.len()
    }

    fn parse_tree(&self) -> Result<ParseTree> {
        ParseTree::build(&self.codewords)
    }
}

struct ParseTree {
    /// children[node] = [zero-child, one-child]; -1 = absent
    children: Vec<[i64; 2]>,
    leaf: Vec<i64>,
}

impl ParseTree {
    fn build(codewords: &[Option<Vec<u8>>]) -> Result<Self> {
        let mut t = ParseTree {
            children: vec![[-1, -1]],
            leaf: vec![-1],
        };
        for (sym, cw) in codewords.iter().enumerate() {
            let Some(cw) = cw else { continue };
            if cw.is_empty() {
                return Err(Error::InvalidInput(
                    "code has a zero-length word; parsing would consume no bits".into(),
                ));
            }
            let mut node = 0usize;
            for &bit in cw {
                let next = t.children[node][bit as usize];
                let next = if next < 0 {
                    let id = t.children.len() as i64;
                    t.children.push([-1, -1]);
                    t.leaf.push(-1);
                    t.children[node][bit as usize] = id;
                    id
                } else {
                    next
                };
                node = next as usize;
            }
            t.leaf[node] = sym as i64;
        }
        Ok(t)
    }
}

/// Canonical prefix code from a dyadic PMF: included symbols sorted by
/// (length, original index), codewords assigned as successive binary
/// counter values left-justified at each length.
pub fn build_prefix_code(d: &DyadicPmf) -> Result<PrefixCode> {
    let mut order: Vec<(u32, usize)> = d
        .lengths()
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|l| (l, i)))
        .collect();
    order.sort();
    let mut codewords: Vec<Option<Vec<u8>>> = vec![None; d.lengths().len()];
    let mut code: u64 = 0;
    let mut prev_len: u32 = order.first().map(|&(l, _)| l).unwrap_or(0);
    for (k, &(len, sym)) in order.iter().enumerate() {
        if k > 0 {
            code = (code + 1) << (len - prev_len);
        }
        let bits = (0..len)
            .rev()
            .map(|b| ((code >> b) & 1) as u8)
            .collect::<Vec<u8>>();
        codewords[sym] = Some(bits);
        prev_len = len;
    }
    Ok(PrefixCode { codewords })
}

/// Parses an equiprobable bit stream into symbol indices by walking the
/// code tree; a trailing partial word is discarded.
pub fn encode(bits: &[u8], code: &PrefixCode) -> Result<Vec<usize>> {
    let tree = code.parse_tree()?;
    let mut out = Vec::new();
    let mut node = 0usize;
    for &bit in bits {
        if bit > 1 {
            return Err(Error::InvalidInput(format!("bit value {bit} is not 0/1")));
        }
        let next = tree.children[node][bit as usize];
        if next < 0 {
            return Err(Error::InvalidInput(
                "bit sequence leaves the code tree; code is not full".into(),
            ));
        }
        node = next as usize;
        if tree.leaf[node] >= 0 {
            out.push(tree.leaf[node] as usize);
            node = 0;
        }
    }
    Ok(out)
}

/// Maps symbol indices back to their codeword bits.
pub fn decode(symbols: &[usize], code: &PrefixCode) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for &sym in symbols {
        let cw = code
            .codeword(sym)
            .ok_or(Error::InvalidSymbol(sym))?;
        out.extend_from_slice(cw);
    }
    Ok(out)
}

/// Spec-facing re-export of the PMF-level KL divergence.
pub use crate::pmf::kl_pmf as kl_between_pmfs;
