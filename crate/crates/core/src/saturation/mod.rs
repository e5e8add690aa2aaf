//! Exact saturation algebra: the chain H₀ ⊂ H₁ ⊂ … and constructive mode witnesses.

mod span;
mod tree;
mod trig;

pub use span::{chain, generate_next, Membership, SpanBasis};
pub use tree::{
    cross_product, expand_square_to_quartics, mode_ladder, mode_ladder_all, LadderStrategy, ModePair, Node,
    PhaseTree,
};
pub use trig::{q, q_from_f64, qi, TrigPolynomial, Q};

/// One row of the derivation table.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DerivationRow {
    pub n: usize,
    /// max(depth of cos nx witness, depth of sin nx witness).
    pub depth: usize,
    /// Distinct nodes in the two witnesses.
    pub node_count: usize,
}

/// Depth and size of the ladder witnesses for n = 1..=n_max.
pub fn derivation_table(n_max: usize, cap: usize, strategy: LadderStrategy) -> crate::Result<Vec<DerivationRow>> {
    let ladder = mode_ladder_all(n_max, cap, strategy)?;
    Ok(ladder
        .iter()
        .skip(1)
        .map(|p| {
            let both = PhaseTree::quartic(PhaseTree::zero(), vec![(qi(1), p.cos.clone()), (qi(1), p.sin.clone())]);
            DerivationRow {
                n: p.n,
                depth: p.cos.depth().max(p.sin.depth()),
                node_count: both.node_count() - 2,
            }
        })
        .collect())
}

/// Exact certificate that `target` lies in span{φ₀, (φ_k′)⁴} of the root node of `tree`.
pub fn certify_root(tree: &PhaseTree, target: &TrigPolynomial) -> crate::Result<Membership> {
    let mut gens = Vec::new();
    match tree.node() {
        Node::Generator(_) => gens.push(tree.evaluate()),
        Node::Quartic { affine, children } => {
            gens.push(affine.evaluate());
            gens.extend(children.iter().map(|(_, c)| c.evaluate().derivative().pow(4)));
        }
    }
    let cap = gens.iter().map(TrigPolynomial::max_freq).chain([target.max_freq()]).max().unwrap_or(0);
    SpanBasis::from_polys(cap, &gens)?.membership(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_and_certificates() {
        let rows = derivation_table(5, 8, LadderStrategy::Incremental).unwrap();
        assert_eq!(rows.iter().map(|r| r.depth).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        for n in 1..=5 {
            let p = mode_ladder(n, 8).unwrap();
            assert!(certify_root(&p.cos, &TrigPolynomial::cos(n)).unwrap().member);
            assert!(certify_root(&p.sin, &TrigPolynomial::sin(n)).unwrap().member);
        }
        let p = mode_ladder(3, 8).unwrap();
        assert!(!certify_root(&p.cos, &TrigPolynomial::cos(20)).unwrap().member);
    }
}
