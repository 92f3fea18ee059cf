use nalgebra::DMatrix;

/// Dense covariant 4-tensor `T_ijkl` in row-major index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

/// Largest violations of the algebraic curvature symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryDefects {
    pub first_pair: f64,
    pub second_pair: f64,
    pub pair_exchange: f64,
    pub bianchi: f64,
}

impl SymmetryDefects {
    pub fn max(&self) -> f64 {
        self.first_pair.max(self.second_pair).max(self.pair_exchange).max(self.bianchi)
    }
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut t = Tensor4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let ix = t.index(i, j, k, l);
                        t.data[ix] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.index(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let ix = self.index(i, j, k, l);
        self.data[ix] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Tensor4 {
        Tensor4 { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Tensor4, b: f64) -> Tensor4 {
        assert_eq!(self.n, other.n);
        Tensor4 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn add(&self, other: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, other.n);
        Tensor4 { n: self.n, data: self.data.iter().zip(&other.data).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, other.n);
        Tensor4 { n: self.n, data: self.data.iter().zip(&other.data).map(|(x, y)| x - y).collect() }
    }

    pub fn neg(&self) -> Tensor4 {
        Tensor4 { n: self.n, data: self.data.iter().map(|x| -x).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_defects(&self) -> SymmetryDefects {
        let n = self.n;
        let mut d = SymmetryDefects { first_pair: 0.0, second_pair: 0.0, pair_exchange: 0.0, bianchi: 0.0 };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        d.first_pair = d.first_pair.max((r + self.get(j, i, k, l)).abs());
                        d.second_pair = d.second_pair.max((r + self.get(i, j, l, k)).abs());
                        d.pair_exchange = d.pair_exchange.max((r - self.get(k, l, i, j)).abs());
                        let b = r + self.get(i, k, l, j) + self.get(i, l, j, k);
                        d.bianchi = d.bianchi.max(b.abs());
                    }
                }
            }
        }
        d
    }

    /// `S_ik = a^{jl} T_ijkl`.
    pub fn pair_trace(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, k| {
            let mut s = 0.0;
            for j in 0..n {
                for l in 0..n {
                    s += a[(j, l)] * self.get(i, j, k, l);
                }
            }
            s
        })
    }

    /// Raises every index with `ginv`.
    pub fn raised(&self, ginv: &DMatrix<f64>) -> Tensor4 {
        let n = self.n;
        let mut cur = self.clone();
        for slot in 0..4 {
            let mut next = Tensor4::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let mut s = 0.0;
                            for m in 0..n {
                                let (w, v) = match slot {
                                    0 => (ginv[(i, m)], cur.get(m, j, k, l)),
                                    1 => (ginv[(j, m)], cur.get(i, m, k, l)),
                                    2 => (ginv[(k, m)], cur.get(i, j, m, l)),
                                    _ => (ginv[(l, m)], cur.get(i, j, k, m)),
                                };
                                s += w * v;
                            }
                            next.set(i, j, k, l, s);
                        }
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Matrix of the tensor on the bivector basis `e_i∧e_j`, `i < j`.
    pub fn pair_matrix(&self) -> DMatrix<f64> {
        let pairs = index_pairs(self.n);
        DMatrix::from_fn(pairs.len(), pairs.len(), |p, q| {
            let ((i, j), (k, l)) = (pairs[p], pairs[q]);
            self.get(i, j, k, l)
        })
    }

    /// Components independent under the curvature symmetries, in a fixed order.
    pub fn independent_components(&self) -> Vec<f64> {
        independent_slots(self.n).iter().map(|&(i, j, k, l)| self.get(i, j, k, l)).collect()
    }

    /// Rebuilds an algebraic curvature tensor from its independent components.
    pub fn from_independent(n: usize, comps: &[f64]) -> Tensor4 {
        let slots = independent_slots(n);
        assert_eq!(comps.len(), slots.len());
        let mut t = Tensor4::zeros(n);
        let put = |t: &mut Tensor4, (i, j, k, l): (usize, usize, usize, usize), v: f64| {
            for (a, b, c, d, s) in [
                (i, j, k, l, 1.0),
                (j, i, k, l, -1.0),
                (i, j, l, k, -1.0),
                (j, i, l, k, 1.0),
                (k, l, i, j, 1.0),
                (l, k, i, j, -1.0),
                (k, l, j, i, -1.0),
                (l, k, j, i, 1.0),
            ] {
                t.set(a, b, c, d, s * v);
            }
        };
        for (&slot, &v) in slots.iter().zip(comps) {
            put(&mut t, slot, v);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        // R_iljk = R_ikjl − R_ijkl
                        let v = t.get(i, k, j, l) - t.get(i, j, k, l);
                        put(&mut t, (i, l, j, k), v);
                    }
                }
            }
        }
        t
    }
}

/// Index pairs `(i, j)` with `i < j` in lexicographic order.
pub fn index_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// `n²(n²−1)/12`.
pub fn independent_count(n: usize) -> usize {
    n * n * (n * n - 1) / 12
}

fn independent_slots(n: usize) -> Vec<(usize, usize, usize, usize)> {
    let pairs = index_pairs(n);
    let mut out = Vec::new();
    for p in 0..pairs.len() {
        for q in p..pairs.len() {
            let ((i, l), (j, k)) = (pairs[p], pairs[q]);
            // the Bianchi identity fixes R_iljk once R_ijkl and R_ikjl are known
            let dependent = i < j && j < k && k < l;
            if !dependent {
                out.push((pairs[p].0, pairs[p].1, pairs[q].0, pairs[q].1));
            }
        }
    }
    out
}

/// Christoffel symbols of both kinds at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    n: usize,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Connection {
    pub fn new(n: usize, first: Vec<f64>, second: Vec<f64>) -> Self {
        assert_eq!(first.len(), n * n * n);
        assert_eq!(second.len(), n * n * n);
        Connection { n, first, second }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^i_jk`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.second[(i * self.n + j) * self.n + k]
    }

    /// `Γ_{l,jk} = g_li Γ^i_jk`.
    #[inline]
    pub fn lowered(&self, l: usize, j: usize, k: usize) -> f64 {
        self.first[(l * self.n + j) * self.n + k]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m = m.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_count_matches_slot_enumeration() {
        for n in 2..=6 {
            let pairs = n * (n - 1) / 2;
            let quads = if n >= 4 { n * (n - 1) * (n - 2) * (n - 3) / 24 } else { 0 };
            assert_eq!(independent_slots(n).len(), pairs * (pairs + 1) / 2 - quads);
            assert_eq!(independent_slots(n).len(), independent_count(n));
        }
        assert_eq!(independent_count(2), 1);
        assert_eq!(independent_count(3), 6);
        assert_eq!(independent_count(4), 20);
    }

    #[test]
    fn packed_round_trip_preserves_curvature_tensor() {
        let n = 4;
        let comps: Vec<f64> = (0..independent_count(n)).map(|i| (i as f64 * 0.37).sin()).collect();
        let t = Tensor4::from_independent(n, &comps);
        assert!(t.symmetry_defects().max() < 1e-15);
        assert_eq!(t.independent_components(), comps);
    }
}
