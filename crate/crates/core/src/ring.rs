//! Tensor-ring cores and the algebra connecting them to dense tensors.
//!
//! A ring of order `d` is a list of 3-order cores `G^(k)` with dims
//! `(r_k, n_k, r_{k+1})` and cyclic closure `r_{d+1} = r_1`. The entry of the
//! composed tensor is the trace of the product of mode-2 slices,
//! `x_{j_1...j_d} = tr(G^(1)_{j_1} ... G^(d)_{j_d})`.

use crate::error::{Error, Result};
use crate::prox::singular_values;
use crate::tensor::DenseTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Ordered list of tensor-ring cores with validated chain dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrCores {
    cores: Vec<DenseTensor>,
}

impl TrCores {
    /// Validates that every core is 3-order and that adjacent bond dims chain
    /// cyclically (the third dim of core `k` equals the first dim of core
    /// `k+1`, wrapping at the end).
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        let d = cores.len();
        if d < 2 {
            return Err(Error::DimMismatch("a tensor ring needs at least 2 cores".into()));
        }
        for (k, core) in cores.iter().enumerate() {
            if core.order() != 3 {
                return Err(Error::DimMismatch(format!(
                    "core {} must be 3-order, got dims {:?}",
                    k + 1,
                    core.dims()
                )));
            }
            let next = &cores[(k + 1) % d];
            let right = core.dims()[2];
            let left = next.dims()[0];
            if right != left {
                return Err(Error::ChainMismatch { core: k + 1, right, left });
            }
        }
        Ok(Self { cores })
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// Mode sizes `(n_1, ..., n_d)` of the composed tensor.
    pub fn mode_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Bond ranks `(r_1, ..., r_d)`; `r_{d+1} = r_1` by the chain invariant.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[0]).collect()
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<DenseTensor> {
        self.cores
    }

    /// Merges the cyclic span of cores `a..=b` (1-based, spanning fewer than
    /// `d` cores) into a single core of dims `(r_a, prod n_i, r_{b+1})`.
    ///
    /// The merged middle index runs over the span's mode indices with the
    /// first span mode fastest, matching the first-index-fastest tensor
    /// layout, so composing the reduced ring reproduces the original
    /// composition after regrouping modes.
    pub fn connect(&self, a: usize, b: usize) -> Result<DenseTensor> {
        let d = self.order();
        if a < 1 || a > d {
            return Err(Error::InvalidMode { mode: a, order: d });
        }
        if b < 1 || b > d {
            return Err(Error::InvalidMode { mode: b, order: d });
        }
        let span = (b + d - a) % d + 1;
        if span == d {
            return Err(Error::DimMismatch(
                "connection span must cover fewer than d cores".into(),
            ));
        }
        let (r_left, middle, r_right, data) = self.merge_span(a - 1, span);
        DenseTensor::new(vec![r_left, middle, r_right], data)
    }

    /// Contracts the whole ring into the dense tensor it represents.
    ///
    /// Evaluated by sequential core contraction (polynomial in the ranks);
    /// the exponential scalar sum survives only as a test oracle.
    pub fn compose(&self) -> DenseTensor {
        let d = self.order();
        let (r, middle, _, data) = self.merge_span(0, d);
        debug_assert_eq!(middle, self.mode_dims().iter().product::<usize>());
        let mut out = vec![0.0; middle];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut trace = 0.0;
            for t in 0..r {
                trace += data[t + r * (j + middle * t)];
            }
            *slot = trace;
        }
        DenseTensor::new(self.mode_dims(), out).expect("dims validated at construction")
    }

    /// Sequentially contracts `count` cores starting at 0-based `start`
    /// (cyclic). Returns `(r_left, merged_mode, r_right, data)` where `data`
    /// is laid out first-index-fastest as `(r_left, merged_mode, r_right)`.
    fn merge_span(&self, start: usize, count: usize) -> (usize, usize, usize, Vec<f64>) {
        let d = self.order();
        let first = &self.cores[start];
        let r_left = first.dims()[0];
        let mut middle = first.dims()[1];
        let mut r_right = first.dims()[2];
        let mut data = first.data().to_vec();
        for step in 1..count {
            let core = &self.cores[(start + step) % d];
            let (rc, n, rn) = (core.dims()[0], core.dims()[1], core.dims()[2]);
            debug_assert_eq!(rc, r_right);
            let mut next = vec![0.0; r_left * middle * n * rn];
            let cd = core.data();
            for tn in 0..rn {
                for j in 0..n {
                    for tr in 0..rc {
                        let c = cd[tr + rc * (j + n * tn)];
                        if c == 0.0 {
                            continue;
                        }
                        let src_base = r_left * middle * tr;
                        let dst_base = r_left * (middle * j + middle * n * tn);
                        for pos in 0..r_left * middle {
                            next[dst_base + pos] += data[src_base + pos] * c;
                        }
                    }
                }
            }
            data = next;
            middle *= n;
            r_right = rn;
        }
        (r_left, middle, r_right, data)
    }
}

/// True when `r_k * r_{k+l} <= min(rows, cols)` of the `{k,l}` unfolding for
/// every shift `k`, the implementable (sub)criticality criterion.
pub fn subcritical(dims: &[usize], ranks: &[usize], split: usize) -> bool {
    let d = dims.len();
    if ranks.len() != d || split == 0 || split >= d {
        return false;
    }
    let total: usize = dims.iter().product();
    (0..d).all(|k| {
        let rows: usize = (0..split).map(|t| dims[(k + t) % d]).product();
        let cols = total / rows;
        ranks[k] * ranks[(k + split) % d] <= rows.min(cols)
    })
}

/// Draws i.i.d. standard-normal cores from a seeded generator and returns
/// both the cores and their composition. The rank vector must be subcritical
/// for the balanced split `l = ceil(d/2)`.
pub fn random_tr_tensor(
    dims: &[usize],
    ranks: &[usize],
    seed: u64,
) -> Result<(DenseTensor, TrCores)> {
    let d = dims.len();
    if d < 2 || ranks.len() != d {
        return Err(Error::InfeasibleRank(format!(
            "need d >= 2 and one rank per mode, got dims {dims:?} ranks {ranks:?}"
        )));
    }
    if dims.iter().any(|&n| n == 0) || ranks.iter().any(|&r| r == 0) {
        return Err(Error::InfeasibleRank("dims and ranks must be >= 1".into()));
    }
    let balanced = d.div_ceil(2);
    if !subcritical(dims, ranks, balanced) {
        return Err(Error::InfeasibleRank(format!(
            "ranks {ranks:?} exceed the balanced unfolding of dims {dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let shape = [ranks[k], dims[k], ranks[(k + 1) % d]];
        let len: usize = shape.iter().product();
        let data: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
        cores.push(DenseTensor::new(shape.to_vec(), data)?);
    }
    let cores = TrCores::new(cores)?;
    Ok((cores.compose(), cores))
}

/// Numerical rank of the `{k,l}` unfolding: the number of singular values
/// exceeding `tol * sigma_max`.
pub fn unfolding_rank_check(x: &DenseTensor, shift: usize, split: usize, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam(format!("rank tolerance must be > 0, got {tol}")));
    }
    let m = x.shift_matricize(shift, split)?;
    let sv = singular_values(&m)?;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > tol * sigma_max).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RANK_TOL: f64 = 1e-8;

    fn random_cores(dims: &[usize], ranks: &[usize], seed: u64) -> TrCores {
        random_tr_tensor(dims, ranks, seed).unwrap().1
    }

    /// Exponential scalar-form evaluation, kept independent of `compose`.
    fn scalar_oracle(cores: &TrCores, index: &[usize]) -> f64 {
        let d = cores.order();
        let ranks = cores.ranks();
        let mut total = 0.0;
        let mut bond = vec![1usize; d];
        'outer: loop {
            let mut term = 1.0;
            for k in 0..d {
                let t_k = bond[k];
                let t_next = bond[(k + 1) % d];
                term *= cores.cores()[k].get(&[t_k, index[k], t_next]).unwrap();
            }
            total += term;
            for k in 0..d {
                bond[k] += 1;
                if bond[k] <= ranks[k] {
                    continue 'outer;
                }
                bond[k] = 1;
            }
            break;
        }
        total
    }

    #[test]
    fn compose_rank_one_is_outer_product() {
        let u = DenseTensor::new(vec![1, 3, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let v = DenseTensor::new(vec![1, 2, 1], vec![4.0, 5.0]).unwrap();
        let ring = TrCores::new(vec![u, v]).unwrap();
        let x = ring.compose();
        assert_eq!(x.dims(), &[3, 2]);
        for j1 in 1..=3usize {
            for j2 in 1..=2usize {
                let expect = [1.0, 2.0, 3.0][j1 - 1] * [4.0, 5.0][j2 - 1];
                assert_eq!(x.get(&[j1, j2]).unwrap(), expect);
            }
        }
    }

    #[test]
    fn compose_zero_cores_gives_zero_tensor() {
        let ring = TrCores::new(vec![
            DenseTensor::zeros(&[2, 3, 2]),
            DenseTensor::zeros(&[2, 4, 2]),
        ])
        .unwrap();
        assert_eq!(ring.compose().frobenius(), 0.0);
    }

    #[test]
    fn compose_matches_scalar_form_oracle() {
        let ring = random_cores(&[2, 2, 2], &[2, 2, 2], 11);
        let x = ring.compose();
        for j1 in 1..=2usize {
            for j2 in 1..=2usize {
                for j3 in 1..=2usize {
                    let got = x.get(&[j1, j2, j3]).unwrap();
                    let want = scalar_oracle(&ring, &[j1, j2, j3]);
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn chain_mismatch_rejected() {
        let bad = TrCores::new(vec![
            DenseTensor::zeros(&[2, 3, 2]),
            DenseTensor::zeros(&[3, 4, 2]),
        ]);
        assert!(matches!(bad, Err(Error::ChainMismatch { core: 1, right: 2, left: 3 })));
    }

    #[test]
    fn connect_single_core_is_identity() {
        let ring = random_cores(&[3, 4, 5], &[2, 2, 2], 5);
        let merged = ring.connect(2, 2).unwrap();
        assert_eq!(&merged, &ring.cores()[1]);
    }

    #[test]
    fn connect_rejects_full_span() {
        let ring = random_cores(&[3, 4, 5], &[2, 2, 2], 5);
        assert!(ring.connect(1, 3).is_err());
        assert!(ring.connect(2, 1).is_err());
    }

    #[test]
    fn connect_merged_shape() {
        let ring = random_cores(&[3, 4, 5, 6], &[2, 3, 2, 3], 9);
        let merged = ring.connect(2, 3).unwrap();
        assert_eq!(merged.dims(), &[3, 20, 3]);
        // cyclic span 4..1 merges n_4 * n_1
        let wrap = ring.connect(4, 1).unwrap();
        assert_eq!(wrap.dims(), &[3, 18, 3]);
    }

    #[test]
    fn connect_then_compose_regroups_modes() {
        // merge cores 1..2 of a 3-ring; the reduced ring composes to the
        // (n1*n2, n3) regrouping of the original composition
        let ring = random_cores(&[2, 3, 4], &[2, 2, 2], 21);
        let x = ring.compose();
        let merged = ring.connect(1, 2).unwrap();
        let reduced = TrCores::new(vec![merged, ring.cores()[2].clone()]).unwrap();
        let y = reduced.compose();
        let regrouped = x.reshape(&[6, 4]).unwrap();
        assert_eq!(y.dims(), regrouped.dims());
        for (a, b) in y.data().iter().zip(regrouped.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn connect_cyclic_span_regroups_modes() {
        // span 4..1 on a 4-ring: reduced ring (G2, G3, merged) composes to
        // permute([2,3,4,1]) of the original, with modes (n4, n1) regrouped
        let ring = random_cores(&[2, 3, 4, 5], &[2, 2, 2, 2], 33);
        let x = ring.compose();
        let merged = ring.connect(4, 1).unwrap();
        let reduced = TrCores::new(vec![
            ring.cores()[1].clone(),
            ring.cores()[2].clone(),
            merged,
        ])
        .unwrap();
        let y = reduced.compose();
        let expect = x.permute(&[2, 3, 4, 1]).unwrap().reshape(&[3, 4, 10]).unwrap();
        for (a, b) in y.data().iter().zip(expect.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn compose_cyclically_invariant() {
        let ring = random_cores(&[2, 3, 4], &[2, 3, 2], 7);
        let x = ring.compose();
        // rotate the core list by one: composition permutes modes cyclically
        let mut rotated = ring.cores().to_vec();
        rotated.rotate_left(1);
        let y = TrCores::new(rotated).unwrap().compose();
        let expect = x.permute(&[2, 3, 1]).unwrap();
        assert_eq!(y.dims(), expect.dims());
        for (a, b) in y.data().iter().zip(expect.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn random_tr_tensor_deterministic() {
        let (x1, _) = random_tr_tensor(&[3, 3, 3], &[2, 2, 2], 42).unwrap();
        let (x2, _) = random_tr_tensor(&[3, 3, 3], &[2, 2, 2], 42).unwrap();
        assert_eq!(x1, x2);
        let (x3, _) = random_tr_tensor(&[3, 3, 3], &[2, 2, 2], 43).unwrap();
        assert_ne!(x1, x3);
    }

    #[test]
    fn random_tr_tensor_rejects_infeasible_ranks() {
        // balanced unfolding of (2,2,2,2) is 4x4; ranks (3,3,3,3) give 9 > 4
        assert!(random_tr_tensor(&[2, 2, 2, 2], &[3, 3, 3, 3], 1).is_err());
        assert!(random_tr_tensor(&[4, 4], &[2, 2, 2], 1).is_err());
    }

    #[test]
    fn rank_one_ring_has_rank_one_unfoldings() {
        let (x, _) = random_tr_tensor(&[3, 3, 3, 3], &[1, 1, 1, 1], 4).unwrap();
        for k in 1..=4 {
            assert_eq!(unfolding_rank_check(&x, k, 2, RANK_TOL).unwrap(), 1);
        }
    }

    #[test]
    fn unfolding_rank_matches_rank_product() {
        let (x, _) = random_tr_tensor(&[6, 6, 6, 6], &[2, 2, 2, 2], 17).unwrap();
        assert_eq!(unfolding_rank_check(&x, 1, 2, RANK_TOL).unwrap(), 4);
        let (y, _) = random_tr_tensor(&[6, 6, 6, 6], &[2, 3, 2, 3], 18).unwrap();
        // r_1 * r_3 = 4 and r_2 * r_4 = 9
        assert_eq!(unfolding_rank_check(&y, 1, 2, RANK_TOL).unwrap(), 4);
        assert_eq!(unfolding_rank_check(&y, 2, 2, RANK_TOL).unwrap(), 9);
    }

    #[test]
    fn zero_tensor_has_rank_zero() {
        let z = DenseTensor::zeros(&[3, 3, 3]);
        assert_eq!(unfolding_rank_check(&z, 1, 1, RANK_TOL).unwrap(), 0);
        assert!(unfolding_rank_check(&z, 1, 1, 0.0).is_err());
    }

    #[test]
    fn subcritical_criterion() {
        assert!(subcritical(&[6, 6, 6, 6], &[2, 2, 2, 2], 2));
        assert!(subcritical(&[6, 6, 6, 6], &[2, 3, 2, 3], 1));
        // 3*3 = 9 > 6 = n_k on the l=1 unfolding
        assert!(!subcritical(&[6, 6, 6, 6], &[3, 3, 3, 3], 1));
    }

    #[test]
    fn random_cores_are_standard_normal_scale() {
        let (_, cores) = random_tr_tensor(&[8, 8, 8], &[2, 2, 2], 3).unwrap();
        let all: Vec<f64> = cores.cores().iter().flat_map(|c| c.data().to_vec()).collect();
        let mean: f64 = all.iter().sum::<f64>() / all.len() as f64;
        let var: f64 = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / all.len() as f64;
        assert!(mean.abs() < 0.5, "mean {mean}");
        assert!((var - 1.0).abs() < 0.5, "var {var}");
    }
}
