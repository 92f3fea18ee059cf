//! The bialternate product `G = g⊙g`, Kulkarni–Nomizu products and recovery of
//! `g` from `G`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor_kernel::field::MetricField;
use crate::tensor_kernel::tensor::{index_pairs, Tensor4};

/// `G_ijkl = g_ik g_jl − g_il g_jk`.
pub fn bialternate_product(g: &DMatrix<f64>) -> Tensor4 {
    Tensor4::from_fn(g.nrows(), |i, j, k, l| g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)])
}

pub fn bialternate_field(g: &MetricField) -> Vec<Tensor4> {
    (0..g.len()).map(|s| bialternate_product(g.value(s))).collect()
}

/// `(a∧b)_ijkl = a_ik b_jl + a_jl b_ik − a_il b_jk − a_jk b_il`.
pub fn kulkarni_nomizu(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Tensor4 {
    Tensor4::from_fn(a.nrows(), |i, j, k, l| {
        a[(i, k)] * b[(j, l)] + a[(j, l)] * b[(i, k)] - a[(i, l)] * b[(j, k)] - a[(j, k)] * b[(i, l)]
    })
}

/// Symmetric `X` whose product `X∧g` has the same pair trace as `rate`.
///
/// The pair trace of `X∧g` is `(n−2)X + (tr_g X) g`; inverting it gives
/// `X = (S − τg)/(n−2)` with `S_ik = g^{jl} rate_ijkl` and
/// `τ = tr_g S / (2(n−1))`. When `rate` lies in the image of `X ↦ X∧g` the
/// result solves `X∧g = rate` exactly.
pub fn velocity_from_rate(rate: &Tensor4, g: &DMatrix<f64>, ginv: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: n });
    }
    let nf = n as f64;
    let s = linalg::symmetrize(&rate.pair_trace(ginv));
    let tau = linalg::contract(ginv, &s) / (2.0 * (nf - 1.0));
    Ok((s - g * tau) / (nf - 2.0))
}

fn packed_slots(n: usize) -> Vec<(usize, usize, usize, usize)> {
    let pairs = index_pairs(n);
    let mut out = Vec::new();
    for p in 0..pairs.len() {
        for q in p..pairs.len() {
            out.push((pairs[p].0, pairs[p].1, pairs[q].0, pairs[q].1));
        }
    }
    out
}

fn sym_params(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

fn from_params(n: usize, p: &DVector<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    for (v, &(a, b)) in p.iter().zip(&sym_params(n)) {
        g[(a, b)] = *v;
        g[(b, a)] = *v;
    }
    g
}

fn to_params(g: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(sym_params(g.nrows()).len(), sym_params(g.nrows()).iter().map(|&(a, b)| g[(a, b)]))
}

fn residual(target: &Tensor4, g: &DMatrix<f64>, slots: &[(usize, usize, usize, usize)]) -> DVector<f64> {
    DVector::from_iterator(
        slots.len(),
        slots.iter().map(|&(i, j, k, l)| g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)] - target.get(i, j, k, l)),
    )
}

fn gauss_newton(target: &Tensor4, start: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = target.dim();
    let slots = packed_slots(n);
    let params = sym_params(n);
    let mut p = to_params(&start);
    let mut r = residual(target, &from_params(n, &p), &slots);
    for _ in 0..50 {
        if r.amax() <= 1e-15 {
            break;
        }
        let g = from_params(n, &p);
        let mut jac = DMatrix::zeros(slots.len(), params.len());
        for (c, &(a, b)) in params.iter().enumerate() {
            let mut e = DMatrix::zeros(n, n);
            e[(a, b)] = 1.0;
            e[(b, a)] = 1.0;
            let d = kulkarni_nomizu(&e, &g);
            for (row, &(i, j, k, l)) in slots.iter().enumerate() {
                jac[(row, c)] = d.get(i, j, k, l);
            }
        }
        let Ok(step) = jac.svd(true, true).solve(&(-&r), 1e-13) else { break };
        let norm0 = r.norm();
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-4 {
            let trial = &p + &step * alpha;
            let rt = residual(target, &from_params(n, &trial), &slots);
            if rt.norm() < norm0 {
                p = trial;
                r = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (from_params(n, &p), r.amax())
}

fn starting_points(t: &Tensor4) -> Vec<DMatrix<f64>> {
    let n = t.dim();
    let others = |i: usize, j: usize| (0..n).find(|&k| k != i && k != j).unwrap();
    let mut diag = DVector::zeros(n);
    for i in 0..n {
        let j = others(i, i);
        let k = (0..n).find(|&k| k != i && k != j).unwrap();
        diag[i] = (t.get(i, j, i, j) * t.get(i, k, i, k) / t.get(j, k, j, k)).sqrt();
    }
    let mut starts = Vec::new();
    if diag.iter().all(|d| d.is_finite() && *d > 0.0) {
        let mut full = DMatrix::from_diagonal(&diag);
        for i in 0..n {
            for j in (i + 1)..n {
                let k = others(i, j);
                let v = t.get(i, k, j, k) / diag[k];
                full[(i, j)] = v;
                full[(j, i)] = v;
            }
        }
        starts.push(full);
        starts.push(DMatrix::from_diagonal(&diag));
    }
    let mean: f64 = index_pairs(n).iter().map(|&(i, j)| t.get(i, j, i, j).abs()).sum::<f64>()
        / index_pairs(n).len() as f64;
    starts.push(DMatrix::identity(n, n) * mean.sqrt().max(f64::MIN_POSITIVE));
    starts
}

/// Recovers the positive-definite `g` with `g⊙g = G`, for `n ≥ 3`.
///
/// `G` is normalized by its largest component, a guess is read off the
/// diagonal products `G_ijij G_ikik / G_jkjk`, and damped Gauss–Newton on the
/// quadratic map refines it (at most 50 iterations per start).
pub fn recover_metric(big_g: &Tensor4) -> Result<DMatrix<f64>> {
    let n = big_g.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: n });
    }
    let scale = big_g.max_abs();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NotInImage { residual: f64::INFINITY });
    }
    let t = big_g.scaled(1.0 / scale);
    let mut best = f64::INFINITY;
    for start in starting_points(&t) {
        let (g, res) = gauss_newton(&t, start);
        best = best.min(res);
        if res > 1e-10 {
            continue;
        }
        let root = scale.sqrt();
        if linalg::check_spd(&g, 0).is_ok() {
            return Ok(g * root);
        }
        if linalg::check_spd(&(-&g), 0).is_ok() {
            return Ok(g * -root);
        }
    }
    Err(Error::NotInImage { residual: best })
}

fn identity_residual(g: &DMatrix<f64>, t: &Tensor4, ix: [usize; 8]) -> f64 {
    let [i, j, k, l, m, q, r, s] = ix;
    let gg = |a: usize, b: usize, c: usize, d: usize| t.get(a, b, c, d);
    let lhs = 2.0 * g[(i, j)] * (g[(k, s)] * gg(m, l, q, r) + g[(k, q)] * gg(l, m, s, r) + g[(k, r)] * gg(m, l, s, q));
    let rhs = gg(m, i, j, q) * gg(k, l, r, s) + gg(m, i, j, s) * gg(k, l, q, r) + gg(m, i, j, r) * gg(k, l, s, q)
        - gg(l, i, j, q) * gg(k, m, r, s)
        - gg(l, i, j, s) * gg(k, m, q, r)
        - gg(l, i, j, r) * gg(k, m, s, q)
        - gg(m, l, j, s) * gg(k, i, r, q)
        - gg(m, l, j, r) * gg(k, i, q, s)
        - gg(m, l, j, q) * gg(k, i, s, r);
    (lhs - rhs).abs()
}

/// Number of index tuples sampled for `n ≥ 5`.
pub const IDENTITY_SAMPLES: usize = 10_000;

/// Largest residual of the quadratic identity tying `g` to `G = g⊙g`:
///
/// ```text
/// 2g_ij(g_ks G_mlnr + g_kn G_lmsr + g_kr G_mlsn)
///   = G_mijn G_klrs + G_mijs G_klnr + G_mijr G_klsn
///   − G_lijn G_kmrs − G_lijs G_kmnr − G_lijr G_kmsn
///   − G_mljs G_kirn − G_mljr G_kins − G_mljn G_kisr
/// ```
///
/// All `n⁸` tuples are visited up to `n = 4`; above that a seeded sample of
/// [`IDENTITY_SAMPLES`] tuples.
pub fn verify_recovery_identity(g: &DMatrix<f64>, big_g: &Tensor4, seed: u64) -> f64 {
    let n = g.nrows();
    let mut worst = 0.0_f64;
    if n <= 4 {
        let total = n.pow(8);
        for mut c in 0..total {
            let mut ix = [0usize; 8];
            for slot in ix.iter_mut() {
                *slot = c % n;
                c /= n;
            }
            worst = worst.max(identity_residual(g, big_g, ix));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..IDENTITY_SAMPLES {
            let mut ix = [0usize; 8];
            for slot in ix.iter_mut() {
                *slot = rng.gen_range(0..n);
            }
            worst = worst.max(identity_residual(g, big_g, ix));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::linalg::random_spd;

    #[test]
    fn two_dimensional_product_is_determinant() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7]);
        let t = bialternate_product(&g);
        let det = g.determinant();
        assert!((t.get(0, 1, 0, 1) - det).abs() < 1e-15);
        assert!((t.get(0, 1, 1, 0) + det).abs() < 1e-15);
        assert!((t.get(1, 0, 0, 1) + det).abs() < 1e-15);
        assert!((t.get(1, 0, 1, 0) - det).abs() < 1e-15);
    }

    #[test]
    fn kulkarni_nomizu_square_is_twice_bialternate() {
        let g = random_spd(4, 1);
        let d = kulkarni_nomizu(&g, &g).sub(&bialternate_product(&g).scaled(2.0));
        assert!(d.max_abs() < 1e-13);
        let id = DMatrix::identity(3, 3);
        let e = kulkarni_nomizu(&id, &id);
        assert_eq!(e.get(0, 1, 0, 1), 2.0);
        assert_eq!(e.get(0, 1, 1, 0), -2.0);
    }

    #[test]
    fn velocity_inverts_kulkarni_nomizu_with_metric() {
        for n in 3..=5 {
            let g = random_spd(n, 10 + n as u64);
            let x = random_spd(n, 20 + n as u64) - DMatrix::identity(n, n);
            let ginv = g.clone().try_inverse().unwrap();
            let back = velocity_from_rate(&kulkarni_nomizu(&x, &g), &g, &ginv).unwrap();
            assert!(linalg::max_abs(&(back - &x)) < 1e-12);
        }
        let g = DMatrix::identity(2, 2);
        assert!(matches!(
            velocity_from_rate(&Tensor4::zeros(2), &g, &g),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn recovery_round_trip_and_homogeneity() {
        for n in 3..=5 {
            for seed in 0..20 {
                let g = random_spd(n, seed * 7 + n as u64);
                let back = recover_metric(&bialternate_product(&g)).unwrap();
                assert!(linalg::max_abs(&(back - &g)) < 1e-10, "n={n} seed={seed}");
            }
        }
        let id = DMatrix::identity(3, 3);
        assert!(linalg::max_abs(&(recover_metric(&bialternate_product(&id)).unwrap() - &id)) < 1e-14);
        let g = random_spd(3, 99);
        let c = 2.5;
        let back = recover_metric(&bialternate_product(&g).scaled(c * c)).unwrap();
        assert!(linalg::max_abs(&(back - &g * c)) < 1e-10);
    }

    #[test]
    fn recovery_refuses_non_images_and_low_dimension() {
        assert!(matches!(
            recover_metric(&bialternate_product(&DMatrix::identity(2, 2))),
            Err(Error::DimensionTooSmall { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let comps: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let junk = Tensor4::from_independent(3, &comps);
        assert!(matches!(recover_metric(&junk), Err(Error::NotInImage { .. })));
    }

    #[test]
    fn quadratic_identity_holds() {
        let id = DMatrix::identity(3, 3);
        assert_eq!(verify_recovery_identity(&id, &bialternate_product(&id), 0), 0.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert!(verify_recovery_identity(&d, &bialternate_product(&d), 0) <= 1e-12);
        for n in [3, 4] {
            let g = random_spd(n, 40 + n as u64);
            let g = &g / linalg::max_abs(&g);
            assert!(verify_recovery_identity(&g, &bialternate_product(&g), 0) <= 1e-12);
        }
    }
}
