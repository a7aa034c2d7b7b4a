//! Finite sets, total functions and relations.
//!
//! Carriers are canonically `0..n`. Subsets of small carriers are `u64`
//! bitmasks, and the canonical enumeration of `P(n)` is ascending bitmask
//! order, so the subset with mask `m` has index `m`. Relations are dense
//! row-major bit matrices.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite carrier `{0, .., size-1}` with optional display labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinSet {
    size: usize,
    labels: Option<Arc<[String]>>,
}

impl FinSet {
    pub fn new(size: usize) -> Self {
        FinSet { size, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::usage(format!("duplicate label `{l}`")));
            }
        }
        Ok(FinSet {
            size: labels.len(),
            labels: Some(labels.into()),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) => ls[i].clone(),
            None => i.to_string(),
        }
    }
}

/// Growable fixed-length bit set. Used for rows of relations and for
/// subsets of carriers too large for a single word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, items: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(len);
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i >> 6] &= !(1 << (i & 63));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Helpers for subsets encoded as `u64` masks.
pub mod mask {
    /// Iterate the members of a mask in ascending order.
    pub fn members(mut m: u64) -> impl Iterator<Item = usize> {
        std::iter::from_fn(move || {
            if m == 0 {
                return None;
            }
            let t = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(t)
        })
    }

    /// Full mask on `n` elements.
    pub fn full(n: usize) -> u64 {
        if n >= 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn from_iter(items: impl IntoIterator<Item = usize>) -> u64 {
        items.into_iter().fold(0, |m, i| m | 1 << i)
    }

    pub fn is_subset(a: u64, b: u64) -> bool {
        a & !b == 0
    }

    /// All submasks of `m`, in ascending numeric order.
    pub fn submasks(m: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut s = 0u64;
        loop {
            out.push(s);
            if s == m {
                break;
            }
            s = (s.wrapping_sub(m)) & m;
        }
        out
    }

    /// Render a subset of a labelled carrier in brace notation.
    pub fn render(m: u64, label: impl Fn(usize) -> String) -> String {
        let parts: Vec<String> = members(m).map(label).collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// A total function between finite carriers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FinFun {
    dom: usize,
    cod: usize,
    images: Vec<usize>,
}

impl FinFun {
    pub fn new(cod: usize, images: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = images.iter().find(|&&i| i >= cod) {
            return Err(Error::usage(format!(
                "function image {bad} outside codomain of size {cod}"
            )));
        }
        Ok(FinFun {
            dom: images.len(),
            cod,
            images,
        })
    }

    /// Constructor for callers that guarantee totality.
    pub(crate) fn new_unchecked(cod: usize, images: Vec<usize>) -> Self {
        debug_assert!(images.iter().all(|&i| i < cod));
        FinFun {
            dom: images.len(),
            cod,
            images,
        }
    }

    pub fn identity(n: usize) -> Self {
        FinFun::new_unchecked(n, (0..n).collect())
    }

    pub fn constant(dom: usize, cod: usize, value: usize) -> Result<Self> {
        FinFun::new(cod, vec![value; dom])
    }

    pub fn dom(&self) -> usize {
        self.dom
    }

    pub fn cod(&self) -> usize {
        self.cod
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.images[x]
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &FinFun) -> Result<FinFun> {
        if self.cod != g.dom {
            return Err(Error::usage(format!(
                "cannot compose {}→{} with {}→{}",
                self.dom, self.cod, g.dom, g.cod
            )));
        }
        Ok(FinFun::new_unchecked(
            g.cod,
            self.images.iter().map(|&y| g.images[y]).collect(),
        ))
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod];
        self.images
            .iter()
            .all(|&y| !std::mem::replace(&mut seen[y], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.cod];
        for &y in &self.images {
            hit[y] = true;
        }
        hit.into_iter().all(|h| h)
    }

    /// Direct image of a subset mask.
    pub fn image_mask(&self, m: u64) -> u64 {
        mask::members(m).fold(0, |acc, x| acc | 1 << self.images[x])
    }

    /// Inverse image of a subset mask of the codomain.
    pub fn preimage_mask(&self, m: u64) -> u64 {
        self.images
            .iter()
            .enumerate()
            .filter(|&(_, &y)| m >> y & 1 == 1)
            .fold(0, |acc, (x, _)| acc | 1 << x)
    }

    /// Image factorization `self = i ∘ e` with `e` surjective onto the
    /// image (enumerated ascending) and `i` injective.
    pub fn image_factorize(&self) -> (FinFun, FinFun) {
        let mut in_image = vec![false; self.cod];
        for &y in &self.images {
            in_image[y] = true;
        }
        let image: Vec<usize> = (0..self.cod).filter(|&y| in_image[y]).collect();
        let mut pos = vec![usize::MAX; self.cod];
        for (k, &y) in image.iter().enumerate() {
            pos[y] = k;
        }
        let e = FinFun::new_unchecked(image.len(), self.images.iter().map(|&y| pos[y]).collect());
        let i = FinFun::new_unchecked(self.cod, image);
        (e, i)
    }

    /// Every function `dom → cod`, in lexicographic order of image vectors
    /// (first argument most significant).
    pub fn all(dom: usize, cod: usize) -> impl Iterator<Item = FinFun> {
        let total = if dom == 0 {
            Some(1)
        } else if cod == 0 {
            Some(0)
        } else {
            (cod as u128).checked_pow(dom as u32).map(|t| t.min(u64::MAX as u128) as u64)
        }
        .unwrap_or(u64::MAX);
        (0..total).map(move |mut code| {
            let mut images = vec![0; dom];
            for slot in images.iter_mut().rev() {
                *slot = (code % cod as u64) as usize;
                code /= cod as u64;
            }
            FinFun::new_unchecked(cod, images)
        })
    }

    /// Every injection `dom → cod`.
    pub fn injections(dom: usize, cod: usize) -> impl Iterator<Item = FinFun> {
        FinFun::all(dom, cod).filter(FinFun::is_injective)
    }

    /// Every surjection `dom → cod`.
    pub fn surjections(dom: usize, cod: usize) -> impl Iterator<Item = FinFun> {
        FinFun::all(dom, cod).filter(FinFun::is_surjective)
    }

    /// Every permutation of `0..n`, in lexicographic order.
    pub fn permutations(n: usize) -> Vec<FinFun> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(FinFun::new_unchecked(n, cur.clone()));
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }
}

impl fmt::Display for FinFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(x, y)| format!("{x}↦{y}"))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A relation `r : X ⇸ Y` as a dense row-major bit matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rel {
    dom: usize,
    cod: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl Rel {
    pub fn empty(dom: usize, cod: usize) -> Self {
        let stride = cod.div_ceil(64);
        Rel {
            dom,
            cod,
            stride,
            bits: vec![0; dom * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Rel::empty(n, n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    pub fn full(dom: usize, cod: usize) -> Self {
        let mut r = Rel::empty(dom, cod);
        for x in 0..dom {
            for y in 0..cod {
                r.insert(x, y);
            }
        }
        r
    }

    pub fn from_pairs(dom: usize, cod: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut r = Rel::empty(dom, cod);
        for (x, y) in pairs {
            if x >= dom || y >= cod {
                return Err(Error::usage(format!(
                    "pair ({x},{y}) out of range for {dom}×{cod}"
                )));
            }
            r.insert(x, y);
        }
        Ok(r)
    }

    /// Decode a relation from its row-major bit code (bit `x*cod + y`).
    /// Requires `dom*cod ≤ 64`.
    pub fn from_code(dom: usize, cod: usize, code: u64) -> Self {
        debug_assert!(dom * cod <= 64);
        let mut r = Rel::empty(dom, cod);
        for x in 0..dom {
            for y in 0..cod {
                if code >> (x * cod + y) & 1 == 1 {
                    r.insert(x, y);
                }
            }
        }
        r
    }

    /// Row-major bit code; inverse of [`Rel::from_code`].
    pub fn code(&self) -> u64 {
        debug_assert!(self.dom * self.cod <= 64);
        let mut c = 0u64;
        for (x, y) in self.pairs() {
            c |= 1 << (x * self.cod + y);
        }
        c
    }

    /// Every relation `dom ⇸ cod` in ascending code order.
    pub fn all(dom: usize, cod: usize) -> impl Iterator<Item = Rel> {
        let n = dom * cod;
        assert!(n < 64, "relation enumeration limited to < 64 pairs");
        (0..1u64 << n).map(move |c| Rel::from_code(dom, cod, c))
    }

    pub fn dom(&self) -> usize {
        self.dom
    }

    pub fn cod(&self) -> usize {
        self.cod
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bits[x * self.stride + (y >> 6)] >> (y & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, x: usize, y: usize) {
        self.bits[x * self.stride + (y >> 6)] |= 1 << (y & 63);
    }

    pub fn remove(&mut self, x: usize, y: usize) {
        self.bits[x * self.stride + (y >> 6)] &= !(1 << (y & 63));
    }

    #[inline]
    fn row_words(&self, x: usize) -> &[u64] {
        &self.bits[x * self.stride..(x + 1) * self.stride]
    }

    /// Row `x` as the set `{y | x r y}`.
    pub fn row(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(x).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn row_set(&self, x: usize) -> BitSet {
        BitSet::from_indices(self.cod, self.row(x))
    }

    /// Row `x` as a mask; requires `cod ≤ 64`.
    pub fn row_mask(&self, x: usize) -> u64 {
        debug_assert!(self.cod <= 64);
        if self.stride == 0 {
            0
        } else {
            self.bits[x * self.stride]
        }
    }

    pub fn set_row(&mut self, x: usize, set: &BitSet) {
        debug_assert_eq!(set.len(), self.cod);
        let s = self.stride;
        self.bits[x * s..(x + 1) * s].copy_from_slice(set.words());
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dom).flat_map(move |x| self.row(x).map(move |y| (x, y)))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// `s · self` (first `self`, then `s`).
    pub fn then(&self, s: &Rel) -> Result<Rel> {
        if self.cod != s.dom {
            return Err(Error::usage(format!(
                "cannot compose relations {}⇸{} and {}⇸{}",
                self.dom, self.cod, s.dom, s.cod
            )));
        }
        let mut out = Rel::empty(self.dom, s.cod);
        for x in 0..self.dom {
            let dst = x * out.stride;
            for y in self.row(x) {
                let src = s.row_words(y);
                for (k, w) in src.iter().enumerate() {
                    out.bits[dst + k] |= w;
                }
            }
        }
        Ok(out)
    }

    pub fn converse(&self) -> Rel {
        let mut out = Rel::empty(self.cod, self.dom);
        for (x, y) in self.pairs() {
            out.insert(y, x);
        }
        out
    }

    /// Pointwise inclusion `self ≤ other`.
    pub fn is_subset(&self, other: &Rel) -> bool {
        self.dom == other.dom
            && self.cod == other.cod
            && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Rel) -> Rel {
        debug_assert!(self.dom == other.dom && self.cod == other.cod);
        let mut out = self.clone();
        for (a, b) in out.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        out
    }

    /// First pair of `self` missing from `other`, in row-major order.
    pub fn first_not_in(&self, other: &Rel) -> Option<(usize, usize)> {
        self.pairs().find(|&(x, y)| !other.contains(x, y))
    }

    /// Relational image `r[A]` of a subset of the domain.
    pub fn image_of(&self, a: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.cod);
        for x in a.iter() {
            for (k, w) in self.row_words(x).iter().enumerate() {
                out.words[k] |= w;
            }
        }
        out
    }

    /// Relational image of a mask; requires `dom, cod ≤ 64`.
    pub fn image_mask(&self, a: u64) -> u64 {
        mask::members(a).fold(0, |acc, x| acc | self.row_mask(x))
    }

    pub fn graph(f: &FinFun) -> Rel {
        let mut r = Rel::empty(f.dom(), f.cod());
        for (x, &y) in f.images().iter().enumerate() {
            r.insert(x, y);
        }
        r
    }

    /// The function whose graph this is, if every row has exactly one bit.
    pub fn is_map(&self) -> Option<FinFun> {
        let mut images = Vec::with_capacity(self.dom);
        for x in 0..self.dom {
            let mut it = self.row(x);
            let y = it.next()?;
            if it.next().is_some() {
                return None;
            }
            images.push(y);
        }
        Some(FinFun::new_unchecked(self.cod, images))
    }

    /// The canonical span `X ← R → Y`, apex enumerating pairs row-major.
    pub fn span_factorize(&self) -> Span {
        let (left, right): (Vec<usize>, Vec<usize>) = self.pairs().unzip();
        Span {
            apex: left.len(),
            left: FinFun::new_unchecked(self.dom, left),
            right: FinFun::new_unchecked(self.cod, right),
        }
    }

    /// `r♯ : X → P(Y)`, with `P(Y)` enumerated by ascending bitmask.
    pub fn kleisli_transpose(&self) -> Result<FinFun> {
        if self.cod > 20 {
            return Err(Error::bound("P(Y)", format!("2^{}", self.cod), 1 << 20));
        }
        Ok(FinFun::new_unchecked(
            1 << self.cod,
            (0..self.dom).map(|x| self.row_mask(x) as usize).collect(),
        ))
    }

    /// Inverse of [`Rel::kleisli_transpose`]; `f` must land in `P(cod)`.
    pub fn kleisli_untranspose(f: &FinFun, cod: usize) -> Result<Rel> {
        if cod >= 64 || f.cod() != 1usize << cod {
            return Err(Error::usage(format!(
                "codomain of size {} is not the powerset carrier of {cod}",
                f.cod()
            )));
        }
        let mut r = Rel::empty(f.dom(), cod);
        for (x, &m) in f.images().iter().enumerate() {
            for y in mask::members(m as u64) {
                r.insert(x, y);
            }
        }
        Ok(r)
    }

    pub fn to_json(&self) -> RelJson {
        RelJson {
            dom: self.dom,
            cod: self.cod,
            pairs: self.pairs().map(|(x, y)| [x, y]).collect(),
        }
    }

    pub fn from_json(j: &RelJson) -> Result<Rel> {
        Rel::from_pairs(j.dom, j.cod, j.pairs.iter().map(|p| (p[0], p[1])))
    }
}

impl fmt::Debug for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rel({}⇸{}, ", self.dom, self.cod)?;
        f.debug_set().entries(self.pairs()).finish()?;
        write!(f, ")")
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs().map(|(x, y)| format!("({x},{y})")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Relation interchange format: `{"dom": n, "cod": m, "pairs": [[x,y], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelJson {
    pub dom: usize,
    pub cod: usize,
    pub pairs: Vec<[usize; 2]>,
}

/// A span `X ← apex → Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span {
    pub apex: usize,
    pub left: FinFun,
    pub right: FinFun,
}

impl Span {
    /// The relation `right · left°`.
    pub fn relation(&self) -> Rel {
        let mut r = Rel::empty(self.left.cod(), self.right.cod());
        for p in 0..self.apex {
            r.insert(self.left.apply(p), self.right.apply(p));
        }
        r
    }
}
