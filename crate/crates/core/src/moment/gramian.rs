//! Minimum-L²-norm control of the truncated diagonal system via its controllability Gramian.

use super::biorth::PrecisionPolicy;
use super::xprec::{XCtx, XC};
use crate::dynamics::{ExpSumControl, ExpTerm, LinearModel, LinearizedSystem};
use crate::error::{Error, Result};
use crate::field::FourierField;
use num_complex::Complex64;
use serde::Serialize;

/// One decoupled block x_i' = λ_i x_i + b_i p(t).
struct Block {
    rates: Vec<Complex64>,
    gains: Vec<Complex64>,
    state: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GramianControl {
    #[serde(skip)]
    pub law: ExpSumControl,
    pub norms: Vec<f64>,
    pub total_norm: f64,
    /// max over blocks of ‖z + W y‖/‖z‖ with the extended-precision solution.
    pub solve_residual: f64,
    /// Same with the double-precision control coefficients.
    pub replay_residual: f64,
    /// ‖controlled modes of v(T)‖/‖v0‖ from the closed-form linear flow.
    pub residual: f64,
    pub tail_residual: f64,
    #[serde(skip)]
    pub terminal: FourierField,
}

/// Largest controlled |k| for the model and count.
fn controlled_kmax(model: LinearModel, count: usize) -> usize {
    match model {
        LinearModel::ChLin => count - 1,
        LinearModel::KsLin => (count - 1) / 2,
    }
}

fn blocks(sys: &LinearizedSystem, z: &FourierField, count: usize) -> Vec<Block> {
    let phi = sys.phi;
    let kc = controlled_kmax(sys.model, count);
    match sys.model {
        LinearModel::ChLin => {
            let (mu4, mu5) = (&sys.profiles[0], &sys.profiles[1]);
            let cs = |f: &FourierField, k: usize| if k == 0 { (f.mean(), 0.0) } else { f.cos_sin(k) };
            let cos = Block {
                rates: (0..=kc).map(|k| sys.mode_rate(k)).collect(),
                gains: (0..=kc).map(|k| Complex64::new(phi * cs(mu4, k).0, 0.0)).collect(),
                state: (0..=kc).map(|k| Complex64::new(cs(z, k).0, 0.0)).collect(),
            };
            let sin = Block {
                rates: (1..=kc).map(|k| sys.mode_rate(k)).collect(),
                gains: (1..=kc).map(|k| Complex64::new(phi * mu5.cos_sin(k).1, 0.0)).collect(),
                state: (1..=kc).map(|k| Complex64::new(z.cos_sin(k).1, 0.0)).collect(),
            };
            vec![cos, sin]
        }
        LinearModel::KsLin => {
            let mu4 = &sys.profiles[0];
            let ks: Vec<i64> = (-(kc as i64)..=kc as i64).collect();
            vec![Block {
                rates: ks.iter().map(|&k| sys.eigenvalue(-k)).collect(),
                gains: ks.iter().map(|&k| phi * mu4.coeff(k)).collect(),
                state: ks.iter().map(|&k| z.coeff(k)).collect(),
            }]
        }
    }
}

/// Minimum-norm control for a given free terminal state.
#[derive(Clone, Debug)]
pub struct GramianLaw {
    pub law: ExpSumControl,
    pub norms: Vec<f64>,
    pub solve_residual: f64,
    pub replay_residual: f64,
}

/// Minimum-norm control cancelling the controlled modes of the free terminal state z.
pub fn gramian_for_terminal(
    sys: &LinearizedSystem,
    z: &FourierField,
    t: f64,
    count: usize,
    policy: &PrecisionPolicy,
) -> Result<GramianLaw> {
    if !(t > 0.0) || count < 2 {
        return Err(Error::ConfigError("Gramian oracle needs T > 0 and count ≥ 2".into()));
    }
    if sys.model == LinearModel::KsLin && count.is_multiple_of(2) {
        return Err(Error::ConfigError(format!("KS count {count} must be odd")));
    }
    if controlled_kmax(sys.model, count) > z.truncation() {
        return Err(Error::ConfigError(format!("count {count} exceeds the field truncation")));
    }
    let x = XCtx::new(policy.bits.max(super::xprec::MIN_BITS))?;
    let mut components = Vec::new();
    let mut norms = Vec::new();
    let (mut solve_residual, mut replay_residual) = (0.0f64, 0.0f64);
    for (bi, block) in blocks(sys, z, count).into_iter().enumerate() {
        if let Some(k) = block.gains.iter().position(|b| b.norm() == 0.0) {
            return Err(Error::SingularGramian(format!("block {bi}: pairing {k} vanishes")));
        }
        let n = block.rates.len();
        let xb: Vec<XC> = block.gains.iter().map(|&b| x.c(b)).collect();
        let xl: Vec<XC> = block.rates.iter().map(|&l| x.c(l)).collect();
        // K_ij = ∫₀ᵀ e^{(λ_i + conj λ_j)τ} dτ
        let kern: Vec<Vec<XC>> = (0..n)
            .map(|i| (0..n).map(|j| x.gram_kernel(&x.neg(&x.add(&xl[i], &x.conj(&xl[j]))), t)).collect())
            .collect();
        let w: Vec<Vec<XC>> = (0..n)
            .map(|i| (0..n).map(|j| x.mul(&x.mul(&xb[i], &x.conj(&xb[j])), &kern[i][j])).collect())
            .collect();
        let xz: Vec<XC> = block.state.iter().map(|&c| x.c(c)).collect();
        let zn = block.state.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if zn == 0.0 {
            components.push(Vec::new());
            norms.push(0.0);
            continue;
        }
        let rhs: Vec<Vec<XC>> = xz.iter().map(|c| vec![x.neg(c)]).collect();
        let y: Vec<XC> = x
            .solve(&w, &rhs)
            .map_err(|e| Error::SingularGramian(format!("block {bi}: {e}")))?
            .into_iter()
            .map(|mut r| r.remove(0))
            .collect();
        // p(t) = Σ_j conj(b_j) y_j e^{conj λ_j (T − t)}
        let xc: Vec<XC> = (0..n).map(|j| x.mul(&x.conj(&xb[j]), &y[j])).collect();
        let coeffs: Vec<Complex64> = xc.iter().map(|c| x.to_c64(c)).collect();
        let terminal_norm = |c: &[XC]| {
            let mut s = 0.0;
            for i in 0..n {
                let mut acc = xz[i].clone();
                for j in 0..n {
                    acc = x.add(&acc, &x.mul(&x.mul(&xb[i], &c[j]), &kern[i][j]));
                }
                s += x.to_c64(&acc).norm_sqr();
            }
            s.sqrt() / zn
        };
        solve_residual = solve_residual.max(terminal_norm(&xc));
        let rounded: Vec<XC> = coeffs.iter().map(|&c| x.c(c)).collect();
        replay_residual = replay_residual.max(terminal_norm(&rounded));
        // ‖p‖² = y^H W y
        let mut nrm = x.zero();
        for i in 0..n {
            for j in 0..n {
                nrm = x.add(&nrm, &x.mul(&x.mul(&x.conj(&y[i]), &w[i][j]), &y[j]));
            }
        }
        norms.push(x.to_f64(&nrm.re).max(0.0).sqrt());
        components.push(
            coeffs
                .iter()
                .zip(&block.rates)
                .map(|(&coeff, l)| ExpTerm { coeff, rate: -l.conj(), anchor: t })
                .collect(),
        );
    }
    Ok(GramianLaw { law: ExpSumControl { duration: t, components }, norms, solve_residual, replay_residual })
}

/// Minimum-norm control driving the controlled modes of v(T) to zero.
pub fn gramian_oracle(
    sys: &LinearizedSystem,
    v0: &FourierField,
    t: f64,
    count: usize,
    policy: &PrecisionPolicy,
) -> Result<GramianControl> {
    if controlled_kmax(sys.model, count.max(2)) > v0.truncation() {
        return Err(Error::ConfigError(format!("count {count} exceeds the field truncation")));
    }
    let z = sys.flow(v0, None, None, t)?;
    let GramianLaw { law, norms, solve_residual, replay_residual } = gramian_for_terminal(sys, &z, t, count, policy)?;
    let terminal = sys.flow(v0, Some(&law), None, t)?;
    let kc = controlled_kmax(sys.model, count);
    let mut ctrl = terminal.clone();
    for (k, c) in ctrl.half_spectrum_mut().iter_mut().enumerate() {
        if k > kc {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    let tail = &terminal - &ctrl;
    let v0n = v0.l2_norm();
    let scale = if v0n > 0.0 { v0n } else { 1.0 };
    Ok(GramianControl {
        total_norm: norms.iter().sum(),
        norms,
        law,
        solve_residual,
        replay_residual,
        residual: ctrl.l2_norm() / scale,
        tail_residual: tail.l2_norm() / scale,
        terminal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cubic_profile, quartic_profile};
    use crate::moment::control::{basis_cos, moment_control_ch};

    const K: usize = 16;
    const N: usize = 64;

    #[test]
    fn zero_state_zero_control() {
        let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![quartic_profile(K, N), cubic_profile(K, N)])
            .unwrap();
        let g = gramian_oracle(&sys, &FourierField::zeros(K, N), 0.5, 4, &PrecisionPolicy::default()).unwrap();
        assert_eq!(g.total_norm, 0.0);
    }

    #[test]
    fn oracle_beats_moment_series() {
        let (mu4, mu5) = (quartic_profile(K, N), cubic_profile(K, N));
        let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![mu4.clone(), mu5.clone()]).unwrap();
        let v0 = &basis_cos(0, K, N) + &basis_cos(1, K, N).scale(0.5);
        let pol = PrecisionPolicy::default();
        let g = gramian_oracle(&sys, &v0, 0.5, 4, &pol).unwrap();
        let m = moment_control_ch(&v0, 1.0, &mu4, &mu5, 0.5, 4, &pol).unwrap();
        assert!(g.solve_residual < 1e-10, "{}", g.solve_residual);
        assert!(g.total_norm <= m.total_norm * (1.0 + 1e-9));
        for (a, b) in g.norms.iter().zip(&m.norms) {
            assert!(a <= &(b * (1.0 + 1e-9)));
        }
    }

    #[test]
    fn singular_pairing_detected() {
        let mu4 = FourierField::from_cos_sin(K, N, &[(0, 1.0, 0.0), (1, 1.0, 0.0)]);
        let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![mu4, cubic_profile(K, N)]).unwrap();
        let v0 = basis_cos(2, K, N);
        let r = gramian_oracle(&sys, &v0, 0.5, 4, &PrecisionPolicy::default());
        assert!(matches!(r, Err(Error::SingularGramian(_))));
    }
}
