//! Phase trees: derivations φ = φ₀ − Σ w_k (φ_k′)⁴ over generators in span{1, cos x, sin x}.
//!
//! Trees share subtrees through `Arc`, so a tree is a DAG; evaluation is memoized per node.

use super::trig::{q, qi, Q, TrigPolynomial};
use crate::error::{Error, Result};
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, PartialEq, Eq)]
pub enum Node {
    /// λ₀ + λ₁ cos x + λ₂ sin x.
    Generator([Q; 3]),
    /// affine − Σ w (child′)⁴.
    Quartic { affine: PhaseTree, children: Vec<(Q, PhaseTree)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseTree(pub Arc<Node>);

fn key(t: &PhaseTree) -> usize {
    Arc::as_ptr(&t.0) as usize
}

impl PhaseTree {
    pub fn generator(c0: Q, c1: Q, c2: Q) -> Self {
        PhaseTree(Arc::new(Node::Generator([c0, c1, c2])))
    }

    pub fn zero() -> Self {
        Self::generator(Q::zero(), Q::zero(), Q::zero())
    }

    pub fn constant(c: Q) -> Self {
        Self::generator(c, Q::zero(), Q::zero())
    }

    pub fn cos1() -> Self {
        Self::generator(Q::zero(), Q::one(), Q::zero())
    }

    pub fn sin1() -> Self {
        Self::generator(Q::zero(), Q::zero(), Q::one())
    }

    /// Quartic node; zero weights are dropped and repeated children merged.
    pub fn quartic(affine: PhaseTree, children: Vec<(Q, PhaseTree)>) -> Self {
        let mut merged: Vec<(Q, PhaseTree)> = Vec::new();
        let mut index: HashMap<usize, usize> = HashMap::new();
        for (w, c) in children {
            match index.get(&key(&c)) {
                Some(&i) => merged[i].0 += w,
                None => {
                    index.insert(key(&c), merged.len());
                    merged.push((w, c));
                }
            }
        }
        merged.retain(|(w, _)| !w.is_zero());
        if merged.is_empty() {
            return affine;
        }
        PhaseTree(Arc::new(Node::Quartic { affine, children: merged }))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// a·x + b·y as a tree of depth max(depth x, depth y).
    pub fn lin(a: &Q, x: &PhaseTree, b: &Q, y: &PhaseTree) -> PhaseTree {
        match (x.node(), y.node()) {
            (Node::Generator(gx), Node::Generator(gy)) => PhaseTree::generator(
                a * &gx[0] + b * &gy[0],
                a * &gx[1] + b * &gy[1],
                a * &gx[2] + b * &gy[2],
            ),
            (Node::Generator(_), Node::Quartic { affine, children }) => {
                let aff = PhaseTree::lin(a, x, b, affine);
                PhaseTree::quartic(aff, children.iter().map(|(w, c)| (w * b, c.clone())).collect())
            }
            (Node::Quartic { .. }, Node::Generator(_)) => PhaseTree::lin(b, y, a, x),
            (Node::Quartic { affine: ax, children: cx }, Node::Quartic { affine: ay, children: cy }) => {
                let aff = PhaseTree::lin(a, ax, b, ay);
                let ch = cx
                    .iter()
                    .map(|(w, c)| (w * a, c.clone()))
                    .chain(cy.iter().map(|(w, c)| (w * b, c.clone())))
                    .collect();
                PhaseTree::quartic(aff, ch)
            }
        }
    }

    pub fn scale(&self, a: &Q) -> PhaseTree {
        PhaseTree::lin(a, self, &Q::zero(), &PhaseTree::zero())
    }

    pub fn add(&self, o: &PhaseTree) -> PhaseTree {
        PhaseTree::lin(&Q::one(), self, &Q::one(), o)
    }

    pub fn sub(&self, o: &PhaseTree) -> PhaseTree {
        PhaseTree::lin(&Q::one(), self, &-Q::one(), o)
    }

    /// Exact value as a trigonometric polynomial.
    pub fn evaluate(&self) -> TrigPolynomial {
        let mut memo = HashMap::new();
        self.eval_memo(&mut memo)
    }

    fn eval_memo(&self, memo: &mut HashMap<usize, TrigPolynomial>) -> TrigPolynomial {
        if let Some(v) = memo.get(&key(self)) {
            return v.clone();
        }
        let v = match self.node() {
            Node::Generator([c0, c1, c2]) => TrigPolynomial::from_terms(vec![
                (c0.clone(), Q::zero()),
                (c1.clone(), c2.clone()),
            ]),
            Node::Quartic { affine, children } => {
                let mut acc = affine.eval_memo(memo);
                for (w, c) in children {
                    let d = c.eval_memo(memo).derivative();
                    acc = acc.sub(&d.pow(4).scale(w));
                }
                acc
            }
        };
        memo.insert(key(self), v.clone());
        v
    }

    /// Derivation depth j: the tree witnesses membership in H_j.
    pub fn depth(&self) -> usize {
        let mut memo = HashMap::new();
        self.depth_memo(&mut memo)
    }

    fn depth_memo(&self, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&d) = memo.get(&key(self)) {
            return d;
        }
        let d = match self.node() {
            Node::Generator(_) => 0,
            Node::Quartic { affine, children } => {
                let mut m = affine.depth_memo(memo);
                for (_, c) in children {
                    m = m.max(c.depth_memo(memo));
                }
                m + 1
            }
        };
        memo.insert(key(self), d);
        d
    }

    /// Distinct nodes reachable from the root.
    pub fn node_count(&self) -> usize {
        self.topo_order().len()
    }

    /// Nodes in dependency order (children first), each listed once.
    fn topo_order(&self) -> Vec<PhaseTree> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        let mut stack = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if seen.contains_key(&key(&t)) {
                continue;
            }
            if expanded {
                seen.insert(key(&t), out.len());
                out.push(t);
                continue;
            }
            stack.push((t.clone(), true));
            if let Node::Quartic { affine, children } = t.node() {
                for (_, c) in children.iter().rev() {
                    if !seen.contains_key(&key(c)) {
                        stack.push((c.clone(), false));
                    }
                }
                if !seen.contains_key(&key(affine)) {
                    stack.push((affine.clone(), false));
                }
            }
        }
        out
    }

    /// Plain-text s-expression listing each shared node once.
    pub fn to_sexpr(&self) -> String {
        let order = self.topo_order();
        let ids: HashMap<usize, usize> = order.iter().enumerate().map(|(i, t)| (key(t), i)).collect();
        let mut s = String::from("(phase-tree\n");
        for (i, t) in order.iter().enumerate() {
            match t.node() {
                Node::Generator([a, b, c]) => {
                    let _ = writeln!(s, "  (node {i} (gen {a} {b} {c}))");
                }
                Node::Quartic { affine, children } => {
                    let _ = write!(s, "  (node {i} (quartic {}", ids[&key(affine)]);
                    for (w, c) in children {
                        let _ = write!(s, " ({w} {})", ids[&key(c)]);
                    }
                    s.push_str("))\n");
                }
            }
        }
        let _ = writeln!(s, "  (root {}))", order.len() - 1);
        s
    }

    pub fn from_sexpr(text: &str) -> Result<PhaseTree> {
        let toks = tokenize(text);
        let mut pos = 0;
        let sx = parse_sx(&toks, &mut pos)?;
        let items = sx.list().ok_or_else(|| perr("expected list"))?;
        if items.first().and_then(Sx::atom) != Some("phase-tree") {
            return Err(perr("missing phase-tree header"));
        }
        let mut nodes: Vec<PhaseTree> = Vec::new();
        let mut root = None;
        for item in &items[1..] {
            let l = item.list().ok_or_else(|| perr("expected node"))?;
            match l.first().and_then(Sx::atom) {
                Some("node") => {
                    let id: usize = l.get(1).and_then(Sx::atom).ok_or_else(|| perr("node id"))?.parse().map_err(|_| perr("node id"))?;
                    if id != nodes.len() {
                        return Err(perr("node ids must be consecutive"));
                    }
                    let body = l.get(2).and_then(Sx::list).ok_or_else(|| perr("node body"))?;
                    nodes.push(parse_node(body, &nodes)?);
                }
                Some("root") => {
                    let id: usize = l.get(1).and_then(Sx::atom).ok_or_else(|| perr("root id"))?.parse().map_err(|_| perr("root id"))?;
                    root = Some(nodes.get(id).cloned().ok_or_else(|| perr("root id out of range"))?);
                }
                _ => return Err(perr("unknown entry")),
            }
        }
        root.ok_or_else(|| perr("missing root"))
    }
}

fn perr(msg: &str) -> Error {
    Error::Parse(format!("phase tree: {msg}"))
}

fn parse_q(s: &str) -> Result<Q> {
    s.parse::<Q>().map_err(|_| perr(&format!("bad rational '{s}'")))
}

fn parse_node(body: &[Sx], nodes: &[PhaseTree]) -> Result<PhaseTree> {
    let get = |i: usize| -> Result<&str> { body.get(i).and_then(Sx::atom).ok_or_else(|| perr("missing field")) };
    let node_ref = |s: &str| -> Result<PhaseTree> {
        let i: usize = s.parse().map_err(|_| perr("bad reference"))?;
        nodes.get(i).cloned().ok_or_else(|| perr("forward reference"))
    };
    match get(0)? {
        "gen" => Ok(PhaseTree::generator(parse_q(get(1)?)?, parse_q(get(2)?)?, parse_q(get(3)?)?)),
        "quartic" => {
            let affine = node_ref(get(1)?)?;
            let mut children = Vec::new();
            for c in &body[2..] {
                let pair = c.list().ok_or_else(|| perr("child pair"))?;
                let w = parse_q(pair.first().and_then(Sx::atom).ok_or_else(|| perr("weight"))?)?;
                let t = node_ref(pair.get(1).and_then(Sx::atom).ok_or_else(|| perr("child"))?)?;
                children.push((w, t));
            }
            Ok(PhaseTree(Arc::new(Node::Quartic { affine, children })))
        }
        other => Err(perr(&format!("unknown node kind '{other}'"))),
    }
}

enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

impl Sx {
    fn atom(&self) -> Option<&str> {
        match self {
            Sx::Atom(s) => Some(s),
            Sx::List(_) => None,
        }
    }

    fn list(&self) -> Option<&[Sx]> {
        match self {
            Sx::List(l) => Some(l),
            Sx::Atom(_) => None,
        }
    }
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(str::to_owned).collect()
}

fn parse_sx(toks: &[String], pos: &mut usize) -> Result<Sx> {
    let t = toks.get(*pos).ok_or_else(|| perr("unexpected end"))?;
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match toks.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sx::List(items));
                    }
                    Some(_) => items.push(parse_sx(toks, pos)?),
                    None => return Err(perr("unbalanced parentheses")),
                }
            }
        }
        ")" => Err(perr("unexpected ')'")),
        a => Ok(Sx::Atom(a.to_owned())),
    }
}

/// Tree in H_{j+1} evaluating to (φ′)², via a²b² = [(a+b)⁴ + (a−b)⁴ − 2a⁴ − 2b⁴]/12
/// with partners sin x and −cos x (so that b² sums to 1).
pub fn expand_square_to_quartics(phi: &PhaseTree) -> PhaseTree {
    let one = Q::one();
    let mut children = Vec::new();
    for chi in [PhaseTree::sin1(), PhaseTree::cos1().scale(&-Q::one())] {
        children.push((q(-1, 12), PhaseTree::lin(&one, phi, &one, &chi)));
        children.push((q(-1, 12), PhaseTree::lin(&one, phi, &-one.clone(), &chi)));
        children.push((q(1, 6), phi.clone()));
        children.push((q(1, 6), chi));
    }
    PhaseTree::quartic(PhaseTree::zero(), children)
}

/// Tree evaluating to φ₁′φ₂′ = ½[((φ₁+φ₂)′)² − (φ₁′)² − (φ₂′)²].
pub fn cross_product(phi1: &PhaseTree, phi2: &PhaseTree) -> PhaseTree {
    let sum = expand_square_to_quartics(&phi1.add(phi2));
    let s1 = expand_square_to_quartics(phi1);
    let s2 = expand_square_to_quartics(phi2);
    let half = q(1, 2);
    let mh = -half.clone();
    PhaseTree::lin(&half, &sum, &Q::one(), &PhaseTree::lin(&mh, &s1, &mh, &s2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderStrategy {
    /// n from n−1 and n−2 by cross products with the frequency-1 partner: depth n − 1.
    Incremental,
    /// Even n = 2m from squares / cross products of mode m; odd n incrementally.
    Doubling,
}

/// Trees for (cos nx, sin nx).
#[derive(Clone, Debug)]
pub struct ModePair {
    pub n: usize,
    pub cos: PhaseTree,
    pub sin: PhaseTree,
}

/// Witness trees for cos nx and sin nx for every n in 0..=n_max.
pub fn mode_ladder_all(n_max: usize, cap: usize, strategy: LadderStrategy) -> Result<Vec<ModePair>> {
    if n_max > cap {
        return Err(Error::BudgetExceeded(format!("mode {n_max} above frequency cap {cap}")));
    }
    let mut ladder = vec![ModePair { n: 0, cos: PhaseTree::constant(Q::one()), sin: PhaseTree::zero() }];
    if n_max >= 1 {
        ladder.push(ModePair { n: 1, cos: PhaseTree::cos1(), sin: PhaseTree::sin1() });
    }
    for n in 2..=n_max {
        let pair = if strategy == LadderStrategy::Doubling && n % 2 == 0 && n > 2 {
            let m = n / 2;
            let inv = q(1, m as i64);
            // φ = sin(mx)/m, ψ = −cos(mx)/m: φ′ = cos mx, ψ′ = sin mx
            let phi = ladder[m].sin.scale(&inv);
            let psi = ladder[m].cos.scale(&-inv.clone());
            let cos = PhaseTree::lin(&qi(2), &expand_square_to_quartics(&phi), &-Q::one(), &ladder[0].cos);
            let sin = cross_product(&phi, &psi).scale(&qi(2));
            ModePair { n, cos, sin }
        } else {
            let p = n - 1;
            let inv = q(1, p as i64);
            let partner = PhaseTree::sin1();
            // cos(px)·cos x = [cos nx + cos(n−2)x]/2 ; sin(px)·cos x = [sin nx + sin(n−2)x]/2
            let phi_c = ladder[p].sin.scale(&inv);
            let phi_s = ladder[p].cos.scale(&-inv.clone());
            let cos = PhaseTree::lin(&qi(2), &cross_product(&phi_c, &partner), &-Q::one(), &ladder[n - 2].cos);
            let sin = PhaseTree::lin(&qi(2), &cross_product(&phi_s, &partner), &-Q::one(), &ladder[n - 2].sin);
            ModePair { n, cos, sin }
        };
        ladder.push(pair);
    }
    Ok(ladder)
}

/// Witness trees for cos nx and sin nx with the default incremental ladder.
pub fn mode_ladder(n: usize, cap: usize) -> Result<ModePair> {
    Ok(mode_ladder_all(n, cap, LadderStrategy::Incremental)?.pop().expect("ladder has n + 1 entries"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_sin_is_cos_squared() {
        let t = expand_square_to_quartics(&PhaseTree::sin1());
        let want = TrigPolynomial::constant(q(1, 2)).add(&TrigPolynomial::cos(2).scale(&q(1, 2)));
        assert_eq!(t.evaluate(), want);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn square_of_constant_is_zero() {
        assert!(expand_square_to_quartics(&PhaseTree::constant(qi(3))).evaluate().is_zero());
    }

    #[test]
    fn scalar_binomial_identity() {
        let (a, b) = (qi(2), qi(3));
        let p4 = |x: &Q| x * x * x * x;
        let v = (p4(&(&a + &b)) + p4(&(&a - &b)) - qi(2) * p4(&a) - qi(2) * p4(&b)) / qi(12);
        assert_eq!(v, qi(36));
    }

    #[test]
    fn ladder_is_exact_for_both_strategies() {
        for strategy in [LadderStrategy::Incremental, LadderStrategy::Doubling] {
            let ladder = mode_ladder_all(8, 8, strategy).unwrap();
            for p in &ladder {
                assert_eq!(p.cos.evaluate(), TrigPolynomial::cos(p.n), "cos {} {:?}", p.n, strategy);
                let want = if p.n == 0 { TrigPolynomial::zero() } else { TrigPolynomial::sin(p.n) };
                assert_eq!(p.sin.evaluate(), want, "sin {} {:?}", p.n, strategy);
            }
        }
    }

    #[test]
    fn incremental_depths_are_n_minus_one() {
        let ladder = mode_ladder_all(6, 6, LadderStrategy::Incremental).unwrap();
        for p in &ladder[1..] {
            assert_eq!(p.cos.depth().max(p.sin.depth()), p.n - 1);
        }
        assert!(mode_ladder(5, 5).unwrap().cos.depth() <= 4);
    }

    #[test]
    fn budget_enforced() {
        assert!(matches!(mode_ladder(6, 5), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn sexpr_round_trip() {
        let t = mode_ladder(3, 8).unwrap().sin;
        let text = t.to_sexpr();
        let back = PhaseTree::from_sexpr(&text).unwrap();
        assert_eq!(back.evaluate(), t.evaluate());
        assert_eq!(back.to_sexpr(), text);
        assert!(PhaseTree::from_sexpr("(phase-tree (node 0 (gen 1 0)))").is_err());
    }
}
