//! Linear maps in Choi form, with factors ordered output-then-input:
//! `J(Λ) = Σ_ij Λ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, so `Λ(X) = Tr_in(J (I_out ⊗ Xᵀ))`.
//!
//! Every factor carries a party label (`0` is party A). The A-side of the Choi
//! operator, the `A₂A₁` block, is the set of output and input factors labelled 0.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::io::MatrixJson;
use crate::linalg::{kron, partial_trace, partial_transpose_factors, permute_factors, Operator, C64};
use crate::separability::Bipartition;
use crate::tolerance::Tolerances;

/// Measure-and-prepare map `X ↦ Tr(A X) ρ₁ + Tr((I − A) X) ρ₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoBranch {
    pub effect: Operator,
    pub rho1: Operator,
    pub rho2: Operator,
}

impl TwoBranch {
    /// Checks `0 ⪯ A ⪯ I` and that both branch states are unit-trace PSD.
    pub fn new(effect: Operator, rho1: Operator, rho2: Operator) -> Result<Self> {
        let tol = 1e-10;
        let h = Tolerances::DEFAULT.hermiticity * 100.0;
        effect.ensure_hermitian(h)?;
        let values = effect.eigenvalues();
        let (lo, hi) = (values[values.len() - 1], values[0]);
        if lo < -tol || hi > 1.0 + tol {
            return Err(invalid(format!("effect spectrum [{lo}, {hi}] not inside [0, 1]")));
        }
        for (name, rho) in [("ρ₁", &rho1), ("ρ₂", &rho2)] {
            rho.ensure_hermitian(h)?;
            if rho.dims() != rho1.dims() {
                return Err(Error::Dimension("branch states have different dims".into()));
            }
            let tr = rho.trace_re();
            if (tr - 1.0).abs() > tol {
                return Err(invalid(format!("{name} has trace {tr}")));
            }
            let min = rho.min_eigenvalue();
            if min < -tol {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(TwoBranch { effect, rho1, rho2 })
    }

    pub fn in_dims(&self) -> &[usize] {
        self.effect.dims()
    }

    pub fn out_dims(&self) -> &[usize] {
        self.rho1.dims()
    }

    fn complement(&self) -> Operator {
        Operator::identity(self.effect.dims().to_vec()) - &self.effect
    }

    /// `ρ₁ ⊗ Aᵀ + ρ₂ ⊗ (I − A)ᵀ`.
    pub fn choi(&self) -> Operator {
        kron(&self.rho1, &self.effect.transpose()) + kron(&self.rho2, &self.complement().transpose())
    }

    /// The direct formula, independent of the Choi route.
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        check_side(x, self.effect.side(), "input")?;
        let p1 = (self.effect.mat() * x.mat()).trace();
        let p2 = x.trace() - p1;
        Ok(self.rho1.scale_c(p1) + self.rho2.scale_c(p2))
    }

    /// `Λ*(Y) = Tr(ρ₁ Y) A + Tr(ρ₂ Y)(I − A)`.
    pub fn dual_apply(&self, y: &Operator) -> Result<Operator> {
        check_side(y, self.rho1.side(), "output")?;
        let t1 = (self.rho1.mat() * y.mat()).trace();
        let t2 = (self.rho2.mat() * y.mat()).trace();
        Ok(self.effect.scale_c(t1) + self.complement().scale_c(t2))
    }

    /// Weight `Tr(A X)` that the first branch receives.
    pub fn first_branch_weight(&self, x: &Operator) -> f64 {
        self.effect.trace_product(x)
    }
}

fn check_side(x: &Operator, expected: usize, what: &str) -> Result<()> {
    if x.side() != expected {
        return Err(Error::Dimension(format!("{what} operator has side {}, channel expects {expected}", x.side())));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    choi: Operator,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    in_parties: Vec<usize>,
    out_parties: Vec<usize>,
    two_branch: Option<TwoBranch>,
}

/// Party labels used when none are given: a two-factor space is split `[A, B]`,
/// a single factor belongs to A, and `n` factors get one party each.
fn default_parties(n: usize) -> Vec<usize> {
    (0..n).collect()
}

impl Channel {
    pub fn from_choi(choi: Operator, out_dims: Vec<usize>, in_dims: Vec<usize>) -> Result<Self> {
        let (no, ni) = (out_dims.len(), in_dims.len());
        Self::with_parties(choi, out_dims, in_dims, default_parties(no), default_parties(ni))
    }

    pub fn with_parties(
        choi: Operator,
        out_dims: Vec<usize>,
        in_dims: Vec<usize>,
        out_parties: Vec<usize>,
        in_parties: Vec<usize>,
    ) -> Result<Self> {
        if out_parties.len() != out_dims.len() || in_parties.len() != in_dims.len() {
            return Err(Error::Dimension("one party label per factor is required".into()));
        }
        let mut dims = out_dims.clone();
        dims.extend_from_slice(&in_dims);
        let choi = choi.with_dims(dims)?;
        Ok(Channel { choi, in_dims, out_dims, in_parties, out_parties, two_branch: None })
    }

    /// Relabels parties, keeping the Choi operator.
    pub fn relabel(mut self, out_parties: Vec<usize>, in_parties: Vec<usize>) -> Result<Self> {
        if out_parties.len() != self.out_dims.len() || in_parties.len() != self.in_dims.len() {
            return Err(Error::Dimension("one party label per factor is required".into()));
        }
        self.out_parties = out_parties;
        self.in_parties = in_parties;
        Ok(self)
    }

    pub fn from_two_branch(tb: TwoBranch) -> Result<Self> {
        let mut ch = Self::from_choi(tb.choi(), tb.out_dims().to_vec(), tb.in_dims().to_vec())?;
        ch.two_branch = Some(tb);
        Ok(ch)
    }

    pub fn choi(&self) -> &Operator {
        &self.choi
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_parties(&self) -> &[usize] {
        &self.in_parties
    }

    pub fn out_parties(&self) -> &[usize] {
        &self.out_parties
    }

    pub fn two_branch(&self) -> Option<&TwoBranch> {
        self.two_branch.as_ref()
    }

    fn din(&self) -> usize {
        self.in_dims.iter().product()
    }

    fn dout(&self) -> usize {
        self.out_dims.iter().product()
    }

    /// Choi factor indices of the `A₂A₁` block (party 0 on both sides).
    pub fn choi_a_factors(&self) -> Vec<usize> {
        let no = self.out_dims.len();
        let outs = self.out_parties.iter().enumerate().filter(|(_, &p)| p == 0).map(|(i, _)| i);
        let ins = self.in_parties.iter().enumerate().filter(|(_, &p)| p == 0).map(|(i, _)| no + i);
        outs.chain(ins).collect()
    }

    /// The `A₂A₁ : B₂B₁` cut of the Choi operator.
    pub fn choi_cut(&self) -> Bipartition {
        Bipartition::new(self.choi_a_factors())
    }

    /// Input factors labelled party 0.
    pub fn input_cut(&self) -> Bipartition {
        Bipartition::new(self.in_parties.iter().enumerate().filter(|(_, &p)| p == 0).map(|(i, _)| i).collect())
    }

    /// Output factors labelled party 0.
    pub fn output_cut(&self) -> Bipartition {
        Bipartition::new(self.out_parties.iter().enumerate().filter(|(_, &p)| p == 0).map(|(i, _)| i).collect())
    }

    /// `Λ(X)_{ab} = Σ_ij J[(a,i),(b,j)] X_ij`.
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        check_side(x, self.din(), "input")?;
        let (dout, din) = (self.dout(), self.din());
        let j = self.choi.mat();
        let xm = x.mat();
        let out = DMatrix::from_fn(dout, dout, |a, b| {
            let mut acc = C64::from(0.0);
            for jj in 0..din {
                for i in 0..din {
                    acc += j[(a * din + i, b * din + jj)] * xm[(i, jj)];
                }
            }
            acc
        });
        Operator::from_matrix(out, self.out_dims.clone())
    }

    /// `Λ*(Y) = [Tr_out(J (Y ⊗ I))]ᵀ`, i.e. `Λ*(Y)_ij = Σ_ab J[(a,j),(b,i)] Y_ba`.
    pub fn dual_apply(&self, y: &Operator) -> Result<Operator> {
        check_side(y, self.dout(), "output")?;
        let (dout, din) = (self.dout(), self.din());
        let j = self.choi.mat();
        let ym = y.mat();
        let out = DMatrix::from_fn(din, din, |i, jj| {
            let mut acc = C64::from(0.0);
            for a in 0..dout {
                for b in 0..dout {
                    acc += j[(a * din + jj, b * din + i)] * ym[(b, a)];
                }
            }
            acc
        });
        Operator::from_matrix(out, self.in_dims.clone())
    }

    /// `Λ₁ ⊗ Λ₂`, Choi factors reordered to `(out₁ out₂ : in₁ in₂)`.
    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        let (o1, i1) = (self.out_dims.len(), self.in_dims.len());
        let (o2, i2) = (other.out_dims.len(), other.in_dims.len());
        let k = kron(&self.choi, &other.choi);
        // Current order: out1 (0..o1), in1 (o1..o1+i1), out2, in2.
        let out1 = 0..o1;
        let in1 = o1..o1 + i1;
        let out2 = o1 + i1..o1 + i1 + o2;
        let in2 = o1 + i1 + o2..o1 + i1 + o2 + i2;
        let perm: Vec<usize> = out1.chain(out2).chain(in1).chain(in2).collect();
        let choi = permute_factors(&k, &perm)?;
        let cat = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Channel::with_parties(
            choi,
            cat(&self.out_dims, &other.out_dims),
            cat(&self.in_dims, &other.in_dims),
            cat(&self.out_parties, &other.out_parties),
            cat(&self.in_parties, &other.in_parties),
        )
    }

    /// `Tr_out J`, which equals `I_in` exactly when the map is trace preserving.
    pub fn trace_over_output(&self) -> Result<Operator> {
        let keep: Vec<usize> = (self.out_dims.len()..self.out_dims.len() + self.in_dims.len()).collect();
        partial_trace(&self.choi, &keep)
    }

    /// Choi PSD (relative tolerance) and `Tr_out J = I` within 1e-10.
    pub fn is_cptp(&self) -> bool {
        let tol = Tolerances::DEFAULT.psd;
        let scale = self.choi.frobenius_norm().max(1.0);
        if self.choi.min_eigenvalue() < -tol * scale {
            return false;
        }
        match self.trace_over_output() {
            Ok(t) => t.max_abs_diff(&Operator::identity(self.in_dims.clone())) <= 1e-10,
            Err(_) => false,
        }
    }

    /// Smallest eigenvalue of `J^Γ` with the `A₂A₁` factors transposed.
    pub fn choi_pt_min_eigenvalue(&self) -> Result<f64> {
        Ok(partial_transpose_factors(&self.choi, &self.choi_a_factors())?.min_eigenvalue())
    }

    pub fn is_ppt_map(&self) -> bool {
        let scale = self.choi.frobenius_norm().max(1.0);
        self.choi_pt_min_eigenvalue().map(|m| m >= -Tolerances::DEFAULT.psd * scale).unwrap_or(false)
    }
}

fn unnormalised_max_entangled(n: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = C64::from(1.0);
    }
    v
}

/// Identity map on `dims`; its Choi operator is `|Ω⟩⟨Ω|` with `Ω = Σ_i |i⟩|i⟩`.
pub fn identity_channel(dims: Vec<usize>) -> Channel {
    let n: usize = dims.iter().product();
    let mut all = dims.clone();
    all.extend_from_slice(&dims);
    let choi = Operator::projector(&unnormalised_max_entangled(n), all);
    Channel::from_choi(choi, dims.clone(), dims).expect("consistent dims")
}

/// Unitary conjugation `X ↦ U X U†`.
pub fn unitary_channel(u: &DMatrix<C64>, dims: Vec<usize>) -> Result<Channel> {
    let n: usize = dims.iter().product();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::Dimension("unitary does not match dims".into()));
    }
    let omega = unnormalised_max_entangled(n);
    let lifted = u.kronecker(&DMatrix::<C64>::identity(n, n)) * omega;
    let mut all = dims.clone();
    all.extend_from_slice(&dims);
    Channel::from_choi(Operator::projector(&lifted, all), dims.clone(), dims)
}

/// Swap of two `d`-dimensional parties, `X ↦ F X F`.
pub fn swap_channel(d: usize) -> Result<Channel> {
    let f = crate::states::flip(d)?;
    unitary_channel(f.mat(), vec![d, d])
}

/// Channel file format: the matrix JSON of the Choi operator plus metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    #[serde(flatten)]
    pub choi: MatrixJson,
    pub metadata: ChannelMetadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetadata {
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub bipartition: PartyLabels,
}

/// Party label of each factor; the Choi `A₂A₁` block is every factor labelled 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyLabels {
    pub out_parties: Vec<usize>,
    pub in_parties: Vec<usize>,
    pub choi_a_factors: Vec<usize>,
}

impl From<&Channel> for ChannelJson {
    fn from(ch: &Channel) -> Self {
        ChannelJson {
            choi: MatrixJson::from(&ch.choi),
            metadata: ChannelMetadata {
                in_dims: ch.in_dims.clone(),
                out_dims: ch.out_dims.clone(),
                bipartition: PartyLabels {
                    out_parties: ch.out_parties.clone(),
                    in_parties: ch.in_parties.clone(),
                    choi_a_factors: ch.choi_a_factors(),
                },
            },
        }
    }
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Channel> {
        let choi = Operator::try_from(j.choi)?;
        let m = j.metadata;
        Channel::with_parties(choi, m.out_dims, m.in_dims, m.bipartition.out_parties, m.bipartition.in_parties)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{density, hermitian, stream_rng};
    use crate::states::{flip, phi_plus};
    use approx::assert_relative_eq;

    fn superactivation_branch() -> TwoBranch {
        let phi = phi_plus().density();
        let rho2 = Operator::diagonal(&[0.0, 0.5, 0.5, 0.0], vec![2, 2]).unwrap();
        TwoBranch::new(phi.clone(), phi, rho2).unwrap()
    }

    fn random_two_branch(seed: u64, din: &[usize], dout: &[usize]) -> TwoBranch {
        let mut rng = stream_rng(seed, "two-branch", 0);
        let h = hermitian(&mut rng, din);
        // Squash the spectrum into [0, 1].
        let s = h.spectrum();
        let effect = Operator::from_matrix(s.map(|x| 0.5 + 0.5 * x.tanh()), din.to_vec()).unwrap();
        TwoBranch::new(effect, density(&mut rng, dout, 2), density(&mut rng, dout, 3)).unwrap()
    }

    #[test]
    fn degenerate_branches() {
        let mut rng = stream_rng(0, "degenerate-branch", 0);
        let rho1 = density(&mut rng, &[3], 2);
        let rho2 = density(&mut rng, &[3], 3);
        let all = TwoBranch::new(Operator::identity(vec![2]), rho1.clone(), rho2.clone()).unwrap();
        assert!(all.choi().max_abs_diff(&kron(&rho1, &Operator::identity(vec![2]))) < 1e-15);
        let none = TwoBranch::new(Operator::zeros(vec![2]), rho1, rho2.clone()).unwrap();
        assert!(none.choi().max_abs_diff(&kron(&rho2, &Operator::identity(vec![2]))) < 1e-15);
    }

    #[test]
    fn two_branch_validation() {
        let rho = Operator::maximally_mixed(vec![2]);
        assert!(TwoBranch::new(Operator::identity(vec![2]) * 1.5, rho.clone(), rho.clone()).is_err());
        assert!(TwoBranch::new(Operator::identity(vec![2]), rho.clone() * 2.0, rho).is_err());
    }

    #[test]
    fn superactivation_channel_fixes_bell_state() {
        let ch = Channel::from_two_branch(superactivation_branch()).unwrap();
        let out = ch.apply(&phi_plus().density()).unwrap();
        assert!(out.max_abs_diff(&phi_plus().density()) < 1e-15);
        assert!(ch.is_cptp());
    }

    #[test]
    fn identity_channel_is_identity() {
        let mut rng = stream_rng(1, "id-channel", 0);
        let rho = density(&mut rng, &[2, 3], 3);
        let id = identity_channel(vec![2, 3]);
        assert!(id.apply(&rho).unwrap().max_abs_diff(&rho) < 1e-15);
        assert!(id.is_cptp());
    }

    #[test]
    fn choi_route_matches_direct_formula() {
        for i in 0..50 {
            let tb = random_two_branch(i, &[2, 2], &[3]);
            let ch = Channel::from_two_branch(tb.clone()).unwrap();
            let mut rng = stream_rng(i, "apply-direct", 1);
            let x = density(&mut rng, &[2, 2], 4);
            assert!(ch.apply(&x).unwrap().max_abs_diff(&tb.apply(&x).unwrap()) < 1e-13);
            assert!(ch.is_cptp());
        }
    }

    #[test]
    fn duality_identity() {
        for i in 0..100 {
            let tb = random_two_branch(100 + i, &[3], &[2, 2]);
            let ch = Channel::from_two_branch(tb.clone()).unwrap();
            let mut rng = stream_rng(i, "duality", 0);
            let x = hermitian(&mut rng, &[3]);
            let y = hermitian(&mut rng, &[2, 2]);
            let lhs = ch.apply(&x).unwrap().trace_product(&y);
            let rhs = x.trace_product(&tb.dual_apply(&y).unwrap());
            assert_relative_eq!(lhs, rhs, epsilon = 1e-10 * (1.0 + lhs.abs()));
            assert!(ch.dual_apply(&y).unwrap().max_abs_diff(&tb.dual_apply(&y).unwrap()) < 1e-12);
        }
        let tb = random_two_branch(7, &[3], &[2]);
        let unital = tb.dual_apply(&Operator::identity(vec![2])).unwrap();
        assert!(unital.max_abs_diff(&Operator::identity(vec![3])) < 1e-14);
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let a = identity_channel(vec![2]);
        let b = identity_channel(vec![3]);
        let ab = a.tensor(&b).unwrap();
        assert!(ab.choi().max_abs_diff(identity_channel(vec![2, 3]).choi()) < 1e-15);
    }

    #[test]
    fn tensor_acts_on_products() {
        for i in 0..10 {
            let t1 = random_two_branch(200 + i, &[2], &[3]);
            let t2 = random_two_branch(300 + i, &[3], &[2]);
            let c1 = Channel::from_two_branch(t1).unwrap();
            let c2 = Channel::from_two_branch(t2).unwrap();
            let c12 = c1.tensor(&c2).unwrap();
            let mut rng = stream_rng(i, "tensor-prod", 0);
            let x = hermitian(&mut rng, &[2]);
            let y = hermitian(&mut rng, &[3]);
            let lhs = c12.apply(&kron(&x, &y)).unwrap();
            let rhs = kron(&c1.apply(&x).unwrap(), &c2.apply(&y).unwrap());
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            assert!(c12.is_cptp());

            let id = identity_channel(vec![3]);
            let c1id = c1.tensor(&id).unwrap();
            let rho = density(&mut rng, &[2], 2);
            let sigma = density(&mut rng, &[3], 2);
            let out = c1id.apply(&kron(&rho, &sigma)).unwrap();
            assert!(out.max_abs_diff(&kron(&c1.apply(&rho).unwrap(), &sigma)) < 1e-13);
        }
    }

    #[test]
    fn tensor_is_associative_up_to_reordering() {
        let c1 = Channel::from_two_branch(random_two_branch(1, &[2], &[2])).unwrap();
        let c2 = Channel::from_two_branch(random_two_branch(2, &[2], &[3])).unwrap();
        let c3 = Channel::from_two_branch(random_two_branch(3, &[3], &[2])).unwrap();
        let left = c1.tensor(&c2).unwrap().tensor(&c3).unwrap();
        let right = c1.tensor(&c2.tensor(&c3).unwrap()).unwrap();
        assert!(left.choi().max_abs_diff(right.choi()) < 1e-14);
    }

    #[test]
    fn swap_channel_is_cptp_but_not_ppt() {
        for d in 2..=3 {
            let s = swap_channel(d).unwrap();
            assert!(s.is_cptp());
            assert!(!s.is_ppt_map());
            let mut rng = stream_rng(d as u64, "swap", 0);
            let rho = density(&mut rng, &[d, d], 2);
            let f = flip(d).unwrap();
            assert!(s.apply(&rho).unwrap().max_abs_diff(&(&f * &rho * &f)) < 1e-14);
        }
        assert!(identity_channel(vec![2, 2]).is_ppt_map());
    }

    #[test]
    fn constant_map_is_ppt() {
        let tb = TwoBranch::new(
            Operator::identity(vec![3, 3]),
            Operator::maximally_mixed(vec![2, 2]),
            Operator::maximally_mixed(vec![2, 2]),
        )
        .unwrap();
        assert!(Channel::from_two_branch(tb).unwrap().is_ppt_map());
    }

    #[test]
    fn choi_cut_collects_party_a_factors() {
        let ch = identity_channel(vec![2, 3]);
        assert_eq!(ch.choi_a_factors(), vec![0, 2]);
        let t = ch.tensor(&identity_channel(vec![2, 2])).unwrap();
        assert_eq!(t.out_parties(), &[0, 1, 0, 1]);
        assert_eq!(t.choi_a_factors(), vec![0, 2, 4, 6]);
    }

    #[test]
    fn json_round_trip() {
        let ch = Channel::from_two_branch(superactivation_branch()).unwrap();
        let s = serde_json::to_string(&ChannelJson::from(&ch)).unwrap();
        let back = Channel::try_from(serde_json::from_str::<ChannelJson>(&s).unwrap()).unwrap();
        assert_eq!(back.choi(), ch.choi());
        assert_eq!(back.in_dims(), ch.in_dims());
        assert_eq!(back.choi_a_factors(), ch.choi_a_factors());
        assert!(s.contains("\"metadata\""));
    }

    #[test]
    fn apply_rejects_wrong_dims() {
        let ch = identity_channel(vec![2]);
        assert!(ch.apply(&Operator::identity(vec![3])).is_err());
    }
}
