use bilinear_lab::saturation::{
    certify_root, chain, derivation_table, mode_ladder, mode_ladder_all, LadderStrategy, PhaseTree, SpanBasis,
    TrigPolynomial,
};

#[test]
fn ladder_witnesses_are_exact() {
    for n in 1..=5 {
        let pair = mode_ladder(n, 8).unwrap();
        assert_eq!(pair.cos.evaluate(), TrigPolynomial::cos(n));
        assert_eq!(pair.sin.evaluate(), TrigPolynomial::sin(n));
        assert!(certify_root(&pair.cos, &TrigPolynomial::cos(n)).unwrap().member);
        assert!(certify_root(&pair.sin, &TrigPolynomial::sin(n)).unwrap().member);
    }
}

#[test]
fn doubling_ladder_is_shallower() {
    let inc = mode_ladder_all(8, 16, LadderStrategy::Incremental).unwrap();
    let dbl = mode_ladder_all(8, 16, LadderStrategy::Doubling).unwrap();
    assert_eq!(dbl[8].cos.evaluate(), TrigPolynomial::cos(8));
    assert!(dbl[8].cos.depth() < inc[8].cos.depth());
}

#[test]
fn sexpr_round_trip() {
    let tree = mode_ladder(3, 8).unwrap().sin;
    let back = PhaseTree::from_sexpr(&tree.to_sexpr()).unwrap();
    assert_eq!(back.evaluate(), tree.evaluate());
    assert_eq!(back.depth(), tree.depth());
}

#[test]
fn derivation_table_depths() {
    let rows = derivation_table(5, 8, LadderStrategy::Incremental).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[1].node_count > w[0].node_count));
}

#[test]
fn chain_is_nested() {
    let c = chain(2, 16, 200).unwrap();
    assert_eq!(c[0], SpanBasis::h0(16));
    for w in c.windows(2) {
        assert!(w[0].is_subspace_of(&w[1]).unwrap());
    }
    assert!(c[1].membership(&TrigPolynomial::cos(2)).unwrap().member);
}

#[test]
fn chain_respects_cap() {
    assert!(chain(2, 8, 64).is_err());
}

#[test]
fn mode_above_cap_is_rejected() {
    assert!(mode_ladder(9, 8).is_err());
}
