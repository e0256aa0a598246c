//! Bit-packed linear algebra over GF(2): vectors, matrices, reduced row
//! echelon form, canonical subspaces, subspace enumeration, support
//! domination and the block matrix product used by the composition bound.

use crate::caps::Caps;
use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// An element of `F_2^n`, bit-packed into a `u64`.
///
/// Coordinate `i` (1-based, as in the text formats) is stored in bit `i - 1`,
/// so the packed value doubles as a truth-table index with coordinate 1 as the
/// least significant bit. Ordering is by that integer value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    bits: u64,
    n: u8,
}

impl BitVec {
    pub fn new(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::DimensionOutOfRange(format!(
                "vector dimension must be in 1..=64, got {n}"
            )));
        }
        if n < 64 && bits >> n != 0 {
            return Err(Error::DimensionOutOfRange(format!(
                "bits {bits:#x} exceed dimension {n}"
            )));
        }
        Ok(BitVec { bits, n: n as u8 })
    }

    pub fn zero(n: usize) -> Self {
        BitVec::new(n, 0).expect("valid dimension")
    }

    /// Unit vector for 1-based coordinate `i`.
    pub fn unit(n: usize, i: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(Error::DimensionOutOfRange(format!(
                "coordinate {i} out of range for n={n}"
            )));
        }
        BitVec::new(n, 1u64 << (i - 1))
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// 1-based coordinate accessor.
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i >= 1 && i <= self.n());
        self.bits >> (i - 1) & 1 == 1
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.n, other.n);
        (self.bits & other.bits).count_ones() % 2 == 1
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        debug_assert_eq!(self.n, other.n);
        BitVec { bits: self.bits ^ other.bits, n: self.n }
    }

    /// True when the support of `self` is contained in the support of `other`.
    pub fn support_subset_of(&self, other: &BitVec) -> bool {
        self.bits & !other.bits == 0
    }

    /// Character value `(-1)^{self . x}` as an integer.
    pub fn chi(&self, x: &BitVec) -> i32 {
        if self.dot(x) {
            -1
        } else {
            1
        }
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n() {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = Error;

    /// Parse a '0'/'1' string; the leftmost character is coordinate 1.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        let n = s.len();
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1u64 << i,
                '0' => {}
                other => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("expected '0' or '1', got '{other}'"),
                    })
                }
            }
        }
        BitVec::new(n, bits)
    }
}

/// A matrix over GF(2) stored as a list of rows of shared arity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    n: u8,
    rows: Vec<u64>,
}

impl Gf2Matrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::DimensionOutOfRange(format!(
                "matrix arity must be in 1..=64, got {n}"
            )));
        }
        Ok(Gf2Matrix { n: n as u8, rows: Vec::new() })
    }

    pub fn from_rows(vecs: &[BitVec]) -> Result<Self> {
        let n = vecs
            .first()
            .map(BitVec::n)
            .ok_or_else(|| Error::DimensionMismatch("cannot infer arity of an empty matrix".into()))?;
        let mut m = Gf2Matrix::new(n)?;
        for v in vecs {
            m.push_row(*v)?;
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Gf2Matrix::new(n)?;
        for i in 1..=n {
            m.push_row(BitVec::unit(n, i)?)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, v: BitVec) -> Result<()> {
        if v.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "row arity {} differs from matrix arity {}",
                v.n(),
                self.n()
            )));
        }
        self.rows.push(v.bits());
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> BitVec {
        BitVec { bits: self.rows[i], n: self.n }
    }

    pub fn rows(&self) -> impl Iterator<Item = BitVec> + '_ {
        self.rows.iter().map(|&bits| BitVec { bits, n: self.n })
    }

    pub fn raw_rows(&self) -> &[u64] {
        &self.rows
    }

    /// Reduced row echelon form, its rank and its pivot columns (0-based).
    /// Zero rows are dropped, so the result has exactly `rank` rows.
    pub fn rref(&self) -> (Gf2Matrix, usize, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for col in 0..self.n() {
            let mask = 1u64 << col;
            let Some(pos) = (r..rows.len()).find(|&i| rows[i] & mask != 0) else {
                continue;
            };
            rows.swap(r, pos);
            let pivot_row = rows[r];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && *row & mask != 0 {
                    *row ^= pivot_row;
                }
            }
            pivots.push(col);
            r += 1;
        }
        rows.truncate(r);
        (Gf2Matrix { n: self.n, rows }, r, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1
    }

    /// Canonical basis of `{ x : Mx = 0 }` (one generator per non-pivot
    /// column of the reduced form).
    pub fn null_space(&self) -> Gf2Matrix {
        let (red, _, pivots) = self.rref();
        let n = self.n();
        let mut basis = Vec::new();
        for free in 0..n {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = 1u64 << free;
            for (r, &p) in pivots.iter().enumerate() {
                if red.rows[r] >> free & 1 == 1 {
                    v |= 1u64 << p;
                }
            }
            basis.push(v);
        }
        Gf2Matrix { n: self.n, rows: basis }
    }

    /// Serialize in the exchange format: header `n=<int> r=<int>` followed by
    /// one '0'/'1' row per line, leftmost character = coordinate 1.
    pub fn to_text(&self) -> String {
        let mut out = format!("n={} r={}\n", self.n(), self.row_count());
        for row in self.rows() {
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty matrix file".into() })?;
        let mut n = None;
        let mut r = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("r", v)) => r = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (n, r) = match (n, r) {
            (Some(n), Some(r)) => (n, r),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header 'n=<int> r=<int>', got '{header}'"),
                })
            }
        };
        let mut m = Gf2Matrix::new(n)?;
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.len() != n {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("row has {} characters, expected {n}", line.len()),
                });
            }
            let v: BitVec = line.parse().map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: idx + 1, msg },
                other => other,
            })?;
            m.push_row(v)?;
        }
        if m.row_count() != r {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares r={r} rows but file has {}", m.row_count()),
            });
        }
        Ok(m)
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Matrix[")?;
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{row}")?;
        }
        write!(f, "]")
    }
}

/// A linear subspace of `F_2^n`, represented by its unique reduced
/// row echelon basis. Equality of subspaces is equality of that basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    basis: Gf2Matrix,
}

impl Subspace {
    /// Zero subspace of `F_2^n`.
    pub fn trivial(n: usize) -> Result<Self> {
        Ok(Subspace { basis: Gf2Matrix::new(n)? })
    }

    /// Span of the given vectors, reduced to canonical form.
    pub fn span(vecs: &[BitVec]) -> Result<Self> {
        let m = Gf2Matrix::from_rows(vecs)?;
        Ok(Subspace { basis: m.rref().0 })
    }

    pub fn from_matrix(m: &Gf2Matrix) -> Self {
        Subspace { basis: m.rref().0 }
    }

    /// Standard subspace spanned by unit vectors at the given 1-based
    /// coordinates.
    pub fn standard(n: usize, coords: &[usize]) -> Result<Self> {
        let mut m = Gf2Matrix::new(n)?;
        let mut sorted: Vec<usize> = coords.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for c in sorted {
            m.push_row(BitVec::unit(n, c)?)?;
        }
        Ok(Subspace { basis: m })
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.row_count()
    }

    pub fn basis(&self) -> &Gf2Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis.rref().2
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Canonical coset representative: `v` with all pivot coordinates of the
    /// basis eliminated. Two vectors reduce identically iff they lie in the
    /// same coset.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        debug_assert_eq!(v.n(), self.n());
        let mut bits = v.bits();
        for (row, &p) in self.basis.raw_rows().iter().zip(self.pivot_cache().iter()) {
            if bits >> p & 1 == 1 {
                bits ^= row;
            }
        }
        BitVec { bits, n: self.basis.n }
    }

    fn pivot_cache(&self) -> Vec<usize> {
        // Basis is RREF with dropped zero rows: pivot of row i is its lowest set bit.
        self.basis.raw_rows().iter().map(|r| r.trailing_zeros() as usize).collect()
    }

    /// All `2^dim` elements of the subspace in subset-counter order.
    pub fn elements(&self) -> Vec<BitVec> {
        let d = self.dim();
        assert!(d < 64, "span enumeration requires dim < 64");
        let mut out = Vec::with_capacity(1 << d);
        let mut cur = 0u64;
        out.push(BitVec { bits: 0, n: self.basis.n });
        for g in 1u64..(1 << d) {
            cur ^= self.basis.raw_rows()[g.trailing_zeros() as usize];
            out.push(BitVec { bits: cur, n: self.basis.n });
        }
        out
    }

    /// Dual subspace `{ y : x . y = 0 for all x in self }`.
    pub fn orthogonal(&self) -> Subspace {
        if self.dim() == 0 {
            return Subspace { basis: Gf2Matrix::identity(self.n()).expect("valid arity") };
        }
        Subspace::from_matrix(&self.basis.null_space())
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace{:?}", self.basis)
    }
}

/// A coset `H + shift`. The shift is normalized to the canonical coset
/// representative so that structural equality is coset equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineSubspace {
    sub: Subspace,
    shift: BitVec,
}

impl AffineSubspace {
    pub fn new(sub: Subspace, shift: BitVec) -> Result<Self> {
        if shift.n() != sub.n() {
            return Err(Error::DimensionMismatch(format!(
                "shift arity {} differs from subspace arity {}",
                shift.n(),
                sub.n()
            )));
        }
        let shift = sub.reduce(&shift);
        Ok(AffineSubspace { sub, shift })
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    pub fn shift(&self) -> BitVec {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.sub.dim()
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.sub.reduce(v) == self.shift
    }

    pub fn elements(&self) -> Vec<BitVec> {
        self.sub.elements().into_iter().map(|e| e.xor(&self.shift)).collect()
    }
}

/// Gaussian binomial coefficient: the number of d-dimensional subspaces of
/// `F_2^n`. `None` when the count overflows `u128`.
pub fn gaussian_binomial(n: usize, d: usize) -> Option<u128> {
    if d > n {
        return Some(0);
    }
    // [n,d] = [n-1,d-1] + 2^d [n-1,d]
    let mut prev: Vec<Option<u128>> = vec![Some(1)];
    for row in 1..=n {
        let mut cur: Vec<Option<u128>> = Vec::with_capacity(row + 1);
        cur.push(Some(1));
        for k in 1..row {
            let a = prev[k - 1];
            let b = prev[k];
            let pow = 1u128.checked_shl(k as u32);
            let term = match (b, pow) {
                (Some(b), Some(p)) => b.checked_mul(p),
                _ => None,
            };
            cur.push(match (a, term) {
                (Some(a), Some(t)) => a.checked_add(t),
                _ => None,
            });
        }
        cur.push(Some(1));
        prev = cur;
    }
    prev[d]
}

/// Stream of every d-dimensional subspace of `F_2^n`, each exactly once.
///
/// Subspaces are generated directly in canonical form: choose pivot columns
/// in lexicographic order, then fill the free entries (row i may have
/// arbitrary bits in non-pivot columns right of its pivot) in counter order.
/// No deduplication pass is needed because distinct fillings give distinct
/// reduced bases.
pub fn enumerate_subspaces(n: usize, d: usize, caps: &Caps) -> Result<SubspaceIter> {
    if d > n {
        return Err(Error::DimensionOutOfRange(format!(
            "requested dimension {d} exceeds ambient dimension {n}"
        )));
    }
    if n > caps.enum_dim {
        return Err(Error::EnumerationCap(format!(
            "subspace enumeration capped at n<={}, got n={n}",
            caps.enum_dim
        )));
    }
    Ok(SubspaceIter::new(n, d))
}

/// Enumeration without the ambient-dimension cap, for internal callers that
/// have already bounded the subspace count.
pub(crate) fn enumerate_subspaces_unchecked(n: usize, d: usize) -> SubspaceIter {
    SubspaceIter::new(n, d)
}

pub struct SubspaceIter {
    n: usize,
    d: usize,
    pivots: Option<Vec<usize>>,
    free_slots: Vec<(usize, usize)>,
    counter: u64,
    counter_end: u64,
}

impl SubspaceIter {
    fn new(n: usize, d: usize) -> Self {
        let mut it = SubspaceIter {
            n,
            d,
            pivots: Some((0..d).collect()),
            free_slots: Vec::new(),
            counter: 0,
            counter_end: 0,
        };
        it.reset_free_slots();
        it
    }

    fn reset_free_slots(&mut self) {
        self.free_slots.clear();
        self.counter = 0;
        if let Some(pivots) = &self.pivots {
            for (i, &p) in pivots.iter().enumerate() {
                for col in p + 1..self.n {
                    if !pivots.contains(&col) {
                        self.free_slots.push((i, col));
                    }
                }
            }
            assert!(self.free_slots.len() < 64, "free-entry counter overflow");
            self.counter_end = 1u64 << self.free_slots.len();
        }
    }

    fn advance_pivots(&mut self) {
        // Next d-combination of {0..n-1} in lexicographic order.
        let Some(pivots) = &mut self.pivots else { return };
        if self.d == 0 {
            self.pivots = None;
            return;
        }
        let n = self.n;
        let d = self.d;
        let mut i = d;
        loop {
            if i == 0 {
                self.pivots = None;
                return;
            }
            i -= 1;
            if pivots[i] < n - d + i {
                pivots[i] += 1;
                for j in i + 1..d {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
        self.reset_free_slots();
    }

    fn build(&self) -> Subspace {
        let pivots = self.pivots.as_ref().expect("pivots present");
        let mut rows = vec![0u64; self.d];
        for (i, &p) in pivots.iter().enumerate() {
            rows[i] |= 1u64 << p;
        }
        for (bit, &(row, col)) in self.free_slots.iter().enumerate() {
            if self.counter >> bit & 1 == 1 {
                rows[row] |= 1u64 << col;
            }
        }
        Subspace { basis: Gf2Matrix { n: self.n as u8, rows } }
    }
}

impl Iterator for SubspaceIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        loop {
            self.pivots.as_ref()?;
            if self.counter < self.counter_end {
                let s = self.build();
                self.counter += 1;
                return Some(s);
            }
            self.advance_pivots();
        }
    }
}

/// Odd-Hamming-weight members of the subspace.
pub fn odd_set(l: &Subspace, caps: &Caps) -> Result<Vec<BitVec>> {
    if l.dim() > caps.span_dim {
        return Err(Error::EnumerationCap(format!(
            "span enumeration capped at dim<={}, got {}",
            caps.span_dim,
            l.dim()
        )));
    }
    // Weight parity is linear, so the odd set is empty or exactly half the span.
    let mut out: Vec<BitVec> = l.elements().into_iter().filter(|v| v.weight() % 2 == 1).collect();
    out.sort_unstable();
    Ok(out)
}

/// Decide whether `s1` dominates `s2`: a matching that pairs every vector of
/// `s2` with a distinct vector of `s1` whose support it contains. Returns the
/// matching as `(dominator, dominated)` pairs when it exists.
pub fn set_dominates(s1: &[BitVec], s2: &[BitVec]) -> (bool, Option<Vec<(BitVec, BitVec)>>) {
    // Maximum bipartite matching by augmenting paths; any maximum matching
    // is an acceptable witness.
    let adj: Vec<Vec<usize>> = s2
        .iter()
        .map(|v2| {
            s1.iter()
                .enumerate()
                .filter(|(_, v1)| v1.support_subset_of(v2))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut matched_left: Vec<Option<usize>> = vec![None; s1.len()];

    fn augment(
        right: usize,
        adj: &[Vec<usize>],
        matched_left: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &left in &adj[right] {
            if visited[left] {
                continue;
            }
            visited[left] = true;
            if matched_left[left].is_none()
                || augment(matched_left[left].unwrap(), adj, matched_left, visited)
            {
                matched_left[left] = Some(right);
                return true;
            }
        }
        false
    }

    let mut size = 0usize;
    for right in 0..s2.len() {
        let mut visited = vec![false; s1.len()];
        if augment(right, &adj, &mut matched_left, &mut visited) {
            size += 1;
        }
    }
    if size < s2.len() {
        return (false, None);
    }
    let mut pairs: Vec<(BitVec, BitVec)> = matched_left
        .iter()
        .enumerate()
        .filter_map(|(left, right)| right.map(|r| (s1[left], s2[r])))
        .collect();
    pairs.sort_unstable_by_key(|(_, v2)| *v2);
    (true, Some(pairs))
}

/// Output of [`standard_domination_decompose`]: three standard subspaces
/// whose odd sets jointly dominate the odd set of the input, with an explicit
/// matching `(dominator, odd element of L)`.
#[derive(Debug, Clone)]
pub struct DominationDecomposition {
    pub s1: Subspace,
    pub s2: Subspace,
    pub s3: Subspace,
    pub matching: Vec<(BitVec, BitVec)>,
}

/// Decompose the odd set of `l` against three standard subspaces of
/// dimensions at most `d-1`, `d` and `min(2d, n)`.
///
/// The construction normalizes a basis so every row has odd weight, then
/// routes each odd element to a distinct witness according to whether its
/// expansion uses the designated first row and how it splits across the
/// originally-odd and originally-even rows. Everything is done in original
/// coordinates: the roles played by "first d columns" in the usual
/// row-reduced picture are played by the pivot columns here.
pub fn standard_domination_decompose(l: &Subspace, caps: &Caps) -> Result<DominationDecomposition> {
    let n = l.n();
    let d = l.dim();
    if d == 0 {
        return Err(Error::DimensionOutOfRange("decomposition requires dim >= 1".into()));
    }
    if d > caps.span_dim {
        return Err(Error::EnumerationCap(format!(
            "span enumeration capped at dim<={}, got {d}",
            caps.span_dim
        )));
    }

    let rref_rows: Vec<BitVec> = l.basis().rows().collect();
    let pivot_of = |v: &BitVec| v.bits().trailing_zeros() as usize + 1; // 1-based

    // All-even basis means the whole span is even and there is nothing to match.
    if rref_rows.iter().all(|r| r.weight() % 2 == 0) {
        return Ok(DominationDecomposition {
            s1: Subspace::trivial(n)?,
            s2: Subspace::trivial(n)?,
            s3: Subspace::trivial(n)?,
            matching: Vec::new(),
        });
    }

    // Reorder rows odd-weight first, then add the leading odd row to every
    // even row so that all rows have odd weight. Row reordering and row
    // addition preserve the span.
    let mut odd: Vec<BitVec> = rref_rows.iter().copied().filter(|r| r.weight() % 2 == 1).collect();
    let even: Vec<BitVec> = rref_rows.iter().copied().filter(|r| r.weight() % 2 == 0).collect();
    let head = odd[0];
    let k = odd.len();
    let mut basis = Vec::with_capacity(d);
    basis.append(&mut odd);
    for e in &even {
        basis.push(e.xor(&head));
    }
    let head_pivot = pivot_of(&head);
    // Pivot column of each row in the new order (for rows k.. the original
    // even row's pivot; the added head contributes only head_pivot besides it).
    let mut pivots: Vec<usize> = basis[..k].iter().map(pivot_of).collect();
    pivots.extend(even.iter().map(pivot_of));
    let pivot_mask: u64 = pivots.iter().map(|&p| 1u64 << (p - 1)).sum();

    // Tail pivots: reduce the basis restricted to non-pivot columns.
    let tail_rows: Vec<BitVec> = basis
        .iter()
        .map(|r| BitVec::new(n, r.bits() & !pivot_mask))
        .collect::<Result<_>>()?;
    let (tail_rref, _tail_rank, tail_pivot_cols) = Gf2Matrix::from_rows(&tail_rows)?.rref();
    let tail_pivots: Vec<usize> = tail_pivot_cols.iter().map(|&c| c + 1).collect();

    let s1 = Subspace::standard(n, &pivots[1..])?;
    let s2 = Subspace::standard(n, &pivots)?;
    let mut s3_coords = pivots.clone();
    s3_coords.extend_from_slice(&tail_pivots);
    let s3 = Subspace::standard(n, &s3_coords)?;

    // Every odd element of L is a combination of an odd number of the
    // normalized rows; walk all odd-size subsets.
    let mut matching = Vec::new();
    for subset in 0u64..(1 << d) {
        if subset.count_ones() % 2 == 0 {
            continue;
        }
        let mut x = 0u64;
        for (i, row) in basis.iter().enumerate() {
            if subset >> i & 1 == 1 {
                x ^= row.bits();
            }
        }
        let x = BitVec::new(n, x)?;
        debug_assert_eq!(x.weight() % 2, 1);
        let uses_head = subset & 1 == 1;
        let even_rows_used = (subset >> k).count_ones();
        // One pivot unit per row used; rows are zero on each other's pivots,
        // so these coordinates of x are all 1.
        let subset_pivots: u64 = (0..d)
            .filter(|i| subset >> i & 1 == 1)
            .map(|i| 1u64 << (pivots[i] - 1))
            .sum();
        let witness = if !uses_head {
            BitVec::new(n, subset_pivots)?
        } else if even_rows_used % 2 == 0 {
            // Head pivot survives; pivot support lies in s2.
            debug_assert!(x.get(head_pivot));
            BitVec::new(n, subset_pivots)?
        } else {
            // Head pivot cancels, pivot support is even, tail is odd and
            // nonzero, so it hits a tail pivot of the reduced tail basis.
            debug_assert!(!x.get(head_pivot));
            let tail = x.bits() & !pivot_mask;
            debug_assert!(tail != 0);
            let hit = tail_pivots
                .iter()
                .find(|&&p| tail >> (p - 1) & 1 == 1)
                .copied()
                .expect("nonzero tail combination hits a tail pivot");
            let _ = &tail_rref;
            BitVec::new(n, (subset_pivots & !(1u64 << (head_pivot - 1))) | 1u64 << (hit - 1))?
        };
        debug_assert!(witness.support_subset_of(&x));
        debug_assert_eq!(witness.weight() % 2, 1);
        matching.push((witness, x));
    }

    Ok(DominationDecomposition { s1, s2, s3, matching })
}

/// Block matrix product: for `A (a x n)` and `B (b x m)`, a matrix with
/// `a * b^n` rows of arity `n * m`. The row of block `i` indexed by
/// `j in {1..b}^n` is `(A_{i,1} B_{j_1}, ..., A_{i,n} B_{j_n})`.
pub fn super_slam(a: &Gf2Matrix, b: &Gf2Matrix, caps: &Caps) -> Result<Gf2Matrix> {
    let (n, m) = (a.n(), b.n());
    let cols = n.checked_mul(m).filter(|&c| c <= 64).ok_or_else(|| {
        Error::SizeCap(format!("result arity {n}*{m} exceeds 64 columns"))
    })?;
    let rows_per_block = (b.row_count() as u128).checked_pow(n as u32);
    let cells = rows_per_block
        .and_then(|r| r.checked_mul(a.row_count() as u128))
        .and_then(|r| r.checked_mul(cols as u128));
    match cells {
        Some(c) if c <= caps.superslam_cells => {}
        _ => {
            return Err(Error::SizeCap(format!(
                "block product of {}x{n} and {}x{m} exceeds the cell cap {}",
                a.row_count(),
                b.row_count(),
                caps.superslam_cells
            )))
        }
    }

    let mut out = Gf2Matrix::new(cols)?;
    let bcount = b.row_count();
    let mut index = vec![0usize; n];
    for i in 0..a.row_count() {
        let arow = a.raw_rows()[i];
        index.fill(0);
        'rows: loop {
            let mut bits = 0u64;
            for (l, &j) in index.iter().enumerate() {
                if arow >> l & 1 == 1 {
                    bits |= b.raw_rows()[j] << (l * m);
                }
            }
            out.rows.push(bits);
            // Odometer over {0..b-1}^n, last position fastest.
            for pos in (0..n).rev() {
                index[pos] += 1;
                if index[pos] < bcount {
                    continue 'rows;
                }
                index[pos] = 0;
            }
            break;
        }
        if bcount == 0 {
            // No row selection exists; the block is empty.
            continue;
        }
    }
    Ok(out)
}
