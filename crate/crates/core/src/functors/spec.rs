use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::finset::{FinFun, FinSet};
use crate::functors::base::{BaseTable, Elementary};
use crate::functors::expr::{parse_functor, BaseFunctor, FunctorExpr};
use crate::functors::monoid::MonoidRegistry;

/// Default bound on `|F X|`.
pub const DEFAULT_MAX_ELEMENTS: usize = 1 << 20;

/// Environment variable overriding [`DEFAULT_MAX_ELEMENTS`].
pub const MAX_ELEMENTS_ENV: &str = "RELLIFT_MAX_ELEMENTS";

/// The resource bound in effect: the environment override if set and
/// valid, else the default.
pub fn default_limit() -> usize {
    std::env::var(MAX_ELEMENTS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&v: &usize| v > 0)
        .unwrap_or(DEFAULT_MAX_ELEMENTS)
}

#[derive(Clone, Debug)]
enum Node {
    Var,
    Const(usize),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Apply { id: usize, base: Elementary, inner: Box<Node> },
}

/// Object and map actions of a set functor on finite carriers.
pub trait SetFunctor: Sync {
    /// `|F n|`.
    fn size(&self, n: usize) -> Result<usize>;
    /// `F f : F(dom f) → F(cod f)`.
    fn map(&self, f: &FinFun) -> Result<Arc<FinFun>>;
}

/// A parsed functor expression with memoized object and map actions.
#[derive(Debug)]
pub struct FunctorSpec {
    expr: FunctorExpr,
    root: Node,
    limit: usize,
    tables: RwLock<HashMap<(usize, usize), Arc<BaseTable>>>,
    maps: RwLock<HashMap<FinFun, Arc<FinFun>>>,
}

impl FunctorSpec {
    pub fn new(expr: FunctorExpr, monoids: &MonoidRegistry) -> Result<Self> {
        let mut next_id = 0;
        let root = compile(&expr, monoids, &mut next_id)?;
        Ok(FunctorSpec {
            expr,
            root,
            limit: default_limit(),
            tables: RwLock::default(),
            maps: RwLock::default(),
        })
    }

    pub fn parse(text: &str, monoids: &MonoidRegistry) -> Result<Self> {
        FunctorSpec::new(parse_functor(text, monoids)?, monoids)
    }

    /// Parse against the default monoid registry.
    pub fn parse_default(text: &str) -> Result<Self> {
        FunctorSpec::parse(text, &MonoidRegistry::default())
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn expr(&self) -> &FunctorExpr {
        &self.expr
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// The elementary functor `B` when this functor is exactly `B(X)`.
    pub fn base_on_var(&self) -> Option<&BaseFunctor> {
        match &self.expr {
            FunctorExpr::Apply(b, inner) if **inner == FunctorExpr::Var => Some(b),
            _ => None,
        }
    }

    pub fn is_base(&self, b: &BaseFunctor) -> bool {
        self.base_on_var() == Some(b)
    }

    pub(crate) fn base_table(&self, n: usize) -> Result<Arc<BaseTable>> {
        match &self.root {
            Node::Apply { id, base, inner } if matches!(**inner, Node::Var) => self.table(*id, base, n),
            _ => Err(Error::usage(format!("{} is not an elementary functor on X", self.expr))),
        }
    }

    fn table(&self, id: usize, base: &Elementary, m: usize) -> Result<Arc<BaseTable>> {
        if let Some(t) = self.tables.read().unwrap().get(&(id, m)) {
            return Ok(t.clone());
        }
        self.check_count(base, m)?;
        let t = Arc::new(base.build(m)?);
        self.tables.write().unwrap().insert((id, m), t.clone());
        Ok(t)
    }

    fn check_count(&self, base: &Elementary, m: usize) -> Result<usize> {
        match base.count(m) {
            Some(c) if c <= self.limit as u128 => Ok(c as usize),
            Some(c) => Err(Error::bound(format!("{base:?}({m})"), c, self.limit)),
            None => Err(Error::bound(format!("{base:?}({m})"), "overflow", self.limit)),
        }
    }

    fn node_size(&self, node: &Node, n: usize) -> Result<usize> {
        let s = match node {
            Node::Var => n,
            Node::Const(k) => *k,
            Node::Sum(ts) => {
                let mut acc = 0usize;
                for t in ts {
                    acc = acc.saturating_add(self.node_size(t, n)?);
                }
                acc
            }
            Node::Product(ts) => {
                let mut acc = 1usize;
                for t in ts {
                    acc = acc.saturating_mul(self.node_size(t, n)?);
                }
                acc
            }
            Node::Apply { base, inner, .. } => {
                let m = self.node_size(inner, n)?;
                self.check_count(base, m)?
            }
        };
        if s > self.limit {
            return Err(Error::bound(format!("F({n})"), s, self.limit));
        }
        Ok(s)
    }

    fn node_map(&self, node: &Node, f: &FinFun) -> Result<FinFun> {
        Ok(match node {
            Node::Var => f.clone(),
            Node::Const(k) => FinFun::identity(*k),
            Node::Sum(ts) => {
                let mut images = Vec::new();
                let mut cod_off = 0;
                for t in ts {
                    let g = self.node_map(t, f)?;
                    images.extend(g.images().iter().map(|&y| y + cod_off));
                    cod_off += g.cod();
                }
                FinFun::new_unchecked(cod_off, images)
            }
            Node::Product(ts) => {
                let gs: Vec<FinFun> = ts.iter().map(|t| self.node_map(t, f)).collect::<Result<_>>()?;
                let dom: usize = gs.iter().map(FinFun::dom).product();
                let cod: usize = gs.iter().map(FinFun::cod).product();
                let images = (0..dom)
                    .map(|mut i| {
                        // last component least significant
                        let mut out = 0;
                        let mut stride = 1;
                        for g in gs.iter().rev() {
                            let c = i % g.dom();
                            i /= g.dom();
                            out += g.apply(c) * stride;
                            stride *= g.cod();
                        }
                        out
                    })
                    .collect();
                FinFun::new_unchecked(cod, images)
            }
            Node::Apply { id, base, inner } => {
                let g = self.node_map(inner, f)?;
                let src = self.table(*id, base, g.dom())?;
                let dst = self.table(*id, base, g.cod())?;
                src.map(&dst, &g)
            }
        })
    }

    fn node_render(&self, node: &Node, n: usize, idx: usize, label: &dyn Fn(usize) -> String) -> Result<String> {
        Ok(match node {
            Node::Var => label(idx),
            Node::Const(_) => format!("#{idx}"),
            Node::Sum(ts) => {
                let mut off = 0;
                for (k, t) in ts.iter().enumerate() {
                    let s = self.node_size(t, n)?;
                    if idx < off + s {
                        return Ok(format!("in{k}({})", self.node_render(t, n, idx - off, label)?));
                    }
                    off += s;
                }
                unreachable!("index within sum")
            }
            Node::Product(ts) => {
                let sizes: Vec<usize> = ts.iter().map(|t| self.node_size(t, n)).collect::<Result<_>>()?;
                let mut comps = vec![0; ts.len()];
                let mut rest = idx;
                for (k, s) in sizes.iter().enumerate().rev() {
                    comps[k] = rest % s;
                    rest /= s;
                }
                let parts: Vec<String> = ts
                    .iter()
                    .zip(&comps)
                    .map(|(t, &c)| self.node_render(t, n, c, label))
                    .collect::<Result<_>>()?;
                format!("({})", parts.join(","))
            }
            Node::Apply { id, base, inner } => {
                let m = self.node_size(inner, n)?;
                let t = self.table(*id, base, m)?;
                let err = std::cell::RefCell::new(None);
                let s = t.render(idx, &|j| match self.node_render(inner, n, j, label) {
                    Ok(s) => s,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        String::new()
                    }
                });
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                s
            }
        })
    }

    /// `|F n|`, or a bound error.
    pub fn size(&self, n: usize) -> Result<usize> {
        self.node_size(&self.root, n)
    }

    /// `F X` as a labelled carrier in canonical order.
    pub fn apply_object(&self, x: &FinSet) -> Result<FinSet> {
        let n = self.size(x.size())?;
        let labels = (0..n)
            .map(|i| self.render_in(x, i))
            .collect::<Result<Vec<_>>>()?;
        FinSet::with_labels(labels)
    }

    /// `F f`, memoized.
    pub fn apply_map(&self, f: &FinFun) -> Result<Arc<FinFun>> {
        if let Some(g) = self.maps.read().unwrap().get(f) {
            return Ok(g.clone());
        }
        self.size(f.dom())?;
        self.size(f.cod())?;
        let g = Arc::new(self.node_map(&self.root, f)?);
        self.maps.write().unwrap().insert(f.clone(), g.clone());
        Ok(g)
    }

    /// Canonical rendering of element `idx` of `F n` with numeric labels.
    pub fn render(&self, n: usize, idx: usize) -> String {
        self.node_render(&self.root, n, idx, &|i| i.to_string())
            .unwrap_or_else(|e| format!("<{e}>"))
    }

    pub fn render_in(&self, x: &FinSet, idx: usize) -> Result<String> {
        self.node_render(&self.root, x.size(), idx, &|i| x.label(i))
    }

    /// Inverse of [`FunctorSpec::render`], by linear search.
    pub fn find_rendered(&self, n: usize, text: &str) -> Result<Option<usize>> {
        let size = self.size(n)?;
        let wanted: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        Ok((0..size).find(|&i| {
            let r: String = self.render(n, i).chars().filter(|c| !c.is_whitespace()).collect();
            r == wanted
        }))
    }

    /// Whether `a ∈ F n` lies in the image of `F` applied to the inclusion
    /// of the subset `sub` (a mask over `0..n`).
    pub fn member_of_subobject(&self, n: usize, a: usize, sub: u64) -> Result<bool> {
        let incl = inclusion(n, sub);
        let fi = self.apply_map(&incl)?;
        Ok(fi.images().contains(&a))
    }
}

/// The inclusion `A ↪ n` of a subset mask, `A` enumerated ascending.
pub fn inclusion(n: usize, sub: u64) -> FinFun {
    FinFun::new_unchecked(n, crate::finset::mask::members(sub).collect())
}

impl SetFunctor for FunctorSpec {
    fn size(&self, n: usize) -> Result<usize> {
        FunctorSpec::size(self, n)
    }

    fn map(&self, f: &FinFun) -> Result<Arc<FinFun>> {
        self.apply_map(f)
    }
}

fn compile(e: &FunctorExpr, monoids: &MonoidRegistry, next_id: &mut usize) -> Result<Node> {
    Ok(match e {
        FunctorExpr::Var => Node::Var,
        FunctorExpr::Const(k) => Node::Const(*k),
        FunctorExpr::Sum(ts) => Node::Sum(ts.iter().map(|t| compile(t, monoids, next_id)).collect::<Result<_>>()?),
        FunctorExpr::Product(ts) => {
            Node::Product(ts.iter().map(|t| compile(t, monoids, next_id)).collect::<Result<_>>()?)
        }
        FunctorExpr::Power(b, k) => {
            let b = compile(b, monoids, next_id)?;
            match k {
                0 => Node::Const(1),
                1 => b,
                _ => Node::Product(vec![b; *k]),
            }
        }
        FunctorExpr::Apply(base, inner) => {
            let inner = Box::new(compile(inner, monoids, next_id)?);
            let base = match base {
                BaseFunctor::Powerset => Elementary::Powerset,
                BaseFunctor::BoundedPowerset(k) => Elementary::BoundedPowerset(*k),
                BaseFunctor::MonoidValued(m) => Elementary::MonoidValued(monoids.get(m)?),
                BaseFunctor::Neighbourhood => Elementary::Neighbourhood,
                BaseFunctor::Monotone => Elementary::Monotone,
                BaseFunctor::Filter => Elementary::Filter,
                BaseFunctor::Ultrafilter => Elementary::Ultrafilter,
                BaseFunctor::Triples => Elementary::Triples,
                BaseFunctor::Distribution(d) => Elementary::Distribution(*d),
            };
            let id = *next_id;
            *next_id += 1;
            Node::Apply { id, base, inner }
        }
    })
}
