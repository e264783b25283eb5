//! Lattices given by a generator matrix, the root lattice `A_n`, the corners
//! of the fundamental parallelotope and the relevant Voronoi vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cholesky_lower, orient_axis_frame, Mat};

/// Largest dimension for which corners are enumerated.
pub const CORNER_GUARD: usize = 24;
/// Largest dimension for relevant-vector enumeration.
pub const RELEVANT_GUARD: usize = 8;

/// A full-rank lattice in `Rⁿ`. Rows of the generator are the basis vectors.
///
/// Constructors put the basis in the frame where `b_2, …, b_n` are orthogonal
/// to the first axis and `b_1` has a positive first coordinate.
#[derive(Clone, Debug)]
pub struct Lattice {
    n: usize,
    generator: Mat,
    gram: Mat,
    inverse: Mat,
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    n: usize,
    generator: Mat,
    gram: Mat,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeJson { n: self.n, generator: self.generator.clone(), gram: self.gram.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = LatticeJson::deserialize(d)?;
        if raw.generator.rows() != raw.n || raw.gram.rows() != raw.n {
            return Err(D::Error::custom("dimension does not match n"));
        }
        if raw.generator.gram().max_abs_diff(&raw.gram) > 1e-10 {
            return Err(D::Error::custom("gram does not match generator"));
        }
        Lattice::with_parts(raw.generator, raw.gram).map_err(D::Error::custom)
    }
}

impl Lattice {
    /// `A_n` with Gram matrix `J_n + I_n`.
    pub fn an(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension { n, reason: "A_n needs n >= 2" });
        }
        let gram = an_gram(n);
        let (generator, _) = orient_axis_frame(&cholesky_lower(&gram)?)?;
        Lattice::with_parts(generator, gram)
    }

    /// Lattice realized from a symmetric positive-definite Gram matrix.
    pub fn from_gram(gram: &Mat) -> Result<Self> {
        let l = cholesky_lower(gram)?;
        let generator = if l.rows() >= 2 { orient_axis_frame(&l)?.0 } else { l };
        Lattice::with_parts(generator, gram.clone())
    }

    /// Lattice spanned by the rows of `generator`, rotated into the oriented frame.
    pub fn from_generator(generator: &Mat) -> Result<Self> {
        if !generator.is_square() || generator.rows() == 0 {
            return Err(Error::DimensionMismatch { expected: generator.rows(), found: generator.cols() });
        }
        let generator = if generator.rows() >= 2 {
            orient_axis_frame(generator)?.0
        } else {
            generator.clone()
        };
        let gram = generator.gram();
        Lattice::with_parts(generator, gram)
    }

    fn with_parts(generator: Mat, gram: Mat) -> Result<Self> {
        let inverse = generator.inverse()?;
        Ok(Lattice { n: generator.rows(), generator, gram, inverse })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> &Mat {
        &self.generator
    }

    pub fn gram(&self) -> &Mat {
        &self.gram
    }

    pub fn basis(&self, i: usize) -> &[f64] {
        self.generator.row(i)
    }

    /// True when the Gram matrix is exactly `J_n + I_n`.
    pub fn is_an(&self) -> bool {
        self.n >= 2 && self.gram == an_gram(self.n)
    }

    /// `z·G` for integer coordinates.
    pub fn point(&self, z: &[i64]) -> Vec<f64> {
        let zf: Vec<f64> = z.iter().map(|&x| x as f64).collect();
        self.generator.vec_mul(&zf).expect("coordinate length")
    }

    /// `z·G` for a binary corner label.
    pub fn corner_point(&self, z: &[u8]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0 {
                out.iter_mut().zip(self.basis(i)).for_each(|(o, b)| *o += b);
            }
        }
        out
    }

    /// Real coordinates `α` with `y = α·G`.
    pub fn coords(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inverse.vec_mul(y)
    }

    /// Whether `ỹ` lies in the projection of `P(B)` along the first axis:
    /// some `y₁` puts every coordinate of `(y₁, ỹ)` in `[−tol, 1 + tol]`.
    pub fn in_projected_parallelotope(&self, yt: &[f64], tol: f64) -> bool {
        assert_eq!(yt.len() + 1, self.n, "ỹ has dimension n - 1");
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.n {
            // α_i = y₁·r + c
            let r = self.inverse[(0, i)];
            let c: f64 = (1..self.n).map(|k| yt[k - 1] * self.inverse[(k, i)]).sum();
            let (a, b) = (-tol - c, 1.0 + tol - c);
            if r.abs() < 1e-15 {
                if a > 0.0 || b < 0.0 {
                    return false;
                }
            } else {
                let (u, v) = if r > 0.0 { (a / r, b / r) } else { (b / r, a / r) };
                lo = lo.max(u);
                hi = hi.min(v);
            }
        }
        lo <= hi
    }

    /// Same lattice with `b_1` and `b_{axis+1}` exchanged, re-oriented.
    ///
    /// Returns the view and the rotation `Q` taking a point of this lattice's
    /// frame to the view's frame (`y_view = y·Q`). Axis `0` is the identity.
    pub fn axis_view(&self, axis: usize) -> Result<(Lattice, Mat)> {
        if axis >= self.n {
            return Err(Error::AxisOutOfRange { axis, n: self.n });
        }
        if axis == 0 {
            return Ok((self.clone(), Mat::identity(self.n)));
        }
        let mut g = self.generator.clone();
        g.swap_rows(0, axis);
        let (g, q) = orient_axis_frame(&g)?;
        // P·Γ·Pᵀ for the transposition P
        let mut gram = self.gram.clone();
        gram.swap_rows(0, axis);
        let mut gram = gram.transpose();
        gram.swap_rows(0, axis);
        Ok((Lattice::with_parts(g, gram)?, q))
    }

    /// All `2ⁿ` corners of the fundamental parallelotope, indexed so that
    /// bit `i` of the position is `z_i`.
    pub fn corners(&self) -> Result<Vec<Corner>> {
        if self.n > CORNER_GUARD {
            return Err(Error::GuardExceeded { what: "corner enumeration", n: self.n, limit: CORNER_GUARD });
        }
        Ok((0u32..1 << self.n)
            .map(|mask| {
                let z: Vec<u8> = (0..self.n).map(|i| ((mask >> i) & 1) as u8).collect();
                let point = self.corner_point(&z);
                Corner { z, point }
            })
            .collect())
    }

    /// Corners split into `(C⁰, C¹)` by the value of `z_axis`.
    pub fn corner_split(&self, axis: usize) -> Result<(Vec<Corner>, Vec<Corner>)> {
        if axis >= self.n {
            return Err(Error::AxisOutOfRange { axis, n: self.n });
        }
        Ok(self.corners()?.into_iter().partition(|c| c.z[axis] == 0))
    }

    /// Relevant Voronoi vectors by the coset criterion: a nonzero `v` is
    /// relevant iff `±v` are the only shortest vectors of `v + 2Λ`.
    pub fn relevant_vectors(&self) -> Result<RelevantVectorSet> {
        if self.n > RELEVANT_GUARD {
            return Err(Error::GuardExceeded { what: "relevant vectors", n: self.n, limit: RELEVANT_GUARD });
        }
        let n = self.n;
        let gram_inv = self.gram.inverse()?;
        let mut coords = Vec::new();
        for mask in 1u32..1 << n {
            let parity: Vec<i64> = (0..n).map(|i| ((mask >> i) & 1) as i64).collect();
            let mut bound = 2i64;
            let shortest = loop {
                let found = self.coset_minima(&parity, bound);
                let m = self.norm2_int(&found[0]);
                // Any vector of squared norm <= m has |z_i| <= sqrt(m · Γ⁻¹_ii).
                let needed = (0..n)
                    .map(|i| ((m * gram_inv[(i, i)]).max(0.0).sqrt() + 1e-9).floor() as i64)
                    .max()
                    .unwrap();
                if needed <= bound {
                    break found;
                }
                bound = needed;
            };
            if shortest.len() == 2 {
                coords.extend(shortest);
            }
        }
        coords.sort();
        let vectors = coords.iter().map(|z| self.point(z)).collect();
        Ok(RelevantVectorSet { coords, vectors })
    }

    fn norm2_int(&self, z: &[i64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            if z[i] == 0 {
                continue;
            }
            for j in 0..self.n {
                s += (z[i] * z[j]) as f64 * self.gram[(i, j)];
            }
        }
        s
    }

    /// Shortest vectors of the coset `parity + 2Λ` among coordinates in `[-bound, bound]`.
    fn coset_minima(&self, parity: &[i64], bound: i64) -> Vec<Vec<i64>> {
        let n = self.n;
        let values: Vec<Vec<i64>> = parity
            .iter()
            .map(|&p| (-bound..=bound).filter(|v| (v - p).rem_euclid(2) == 0).collect())
            .collect();
        let mut best = f64::INFINITY;
        let mut out: Vec<Vec<i64>> = Vec::new();
        let mut z = vec![0i64; n];
        let mut idx = vec![0usize; n];
        loop {
            for i in 0..n {
                z[i] = values[i][idx[i]];
            }
            let q = self.norm2_int(&z);
            let tol = 1e-9 * q.abs().max(1.0);
            if q < best - tol {
                best = q;
                out.clear();
                out.push(z.clone());
            } else if (q - best).abs() <= tol {
                out.push(z.clone());
            }
            // odometer
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                idx[k] += 1;
                if idx[k] < values[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Corners of `side` sharing a Voronoi facet with `x` (which must lie in C¹ for `axis`).
    pub fn facet_neighbors(
        &self,
        relevant: &RelevantVectorSet,
        x: &Corner,
        axis: usize,
    ) -> Result<Vec<Corner>> {
        if axis >= self.n {
            return Err(Error::AxisOutOfRange { axis, n: self.n });
        }
        if x.z.len() != self.n || x.z[axis] != 1 {
            return Err(Error::NotUpperCorner { z: x.z.clone(), axis });
        }
        let (lower, _) = self.corner_split(axis)?;
        Ok(lower
            .into_iter()
            .filter(|l| {
                let diff: Vec<i64> = l.z.iter().zip(&x.z).map(|(&a, &b)| a as i64 - b as i64).collect();
                relevant.contains(&diff)
            })
            .collect())
    }

    /// Reduce `y` into the half-open fundamental parallelotope.
    ///
    /// Returns `(y′, k)` with `y′ = y − k·G` and `y′·G⁻¹ ∈ [0, 1)ⁿ`.
    pub fn reduce_to_parallelotope(&self, y: &[f64]) -> Result<(Vec<f64>, Vec<i64>)> {
        let alpha = self.coords(y)?;
        let mut k: Vec<i64> = alpha.iter().map(|a| a.floor() as i64).collect();
        // floor can land on 1.0 - ulp style boundaries; nudge to keep [0, 1).
        for (ki, a) in k.iter_mut().zip(&alpha) {
            if a - (*ki as f64) >= 1.0 {
                *ki += 1;
            }
        }
        if k.iter().all(|&x| x == 0) {
            return Ok((y.to_vec(), k));
        }
        let shift = self.point(&k);
        Ok((y.iter().zip(&shift).map(|(a, b)| a - b).collect(), k))
    }

    pub fn sampler(&self, seed: u64) -> ParallelotopeSampler<'_> {
        ParallelotopeSampler { lattice: self, seed }
    }
}

fn an_gram(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| if i == j { 2.0 } else { 1.0 })
}

/// A vertex of the fundamental parallelotope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub z: Vec<u8>,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelevantVectorSet {
    /// Integer coordinates, sorted.
    pub coords: Vec<Vec<i64>>,
    pub vectors: Vec<Vec<f64>>,
}

impl RelevantVectorSet {
    /// The Voronoi number τ_f.
    pub fn count(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        self.coords.binary_search_by(|c| c.as_slice().cmp(z)).is_ok()
    }
}

/// Corners adjacent to `x = x₀ + b_1` in `A_n`: `x₀` itself and `x₀ + b_j` for
/// every `j ≥ 2` not already used by `x₀`. Axis 0, C¹ input required.
pub fn an_neighbor_rule(x: &[u8]) -> Result<Vec<Vec<u8>>> {
    if x.first() != Some(&1) {
        return Err(Error::NotUpperCorner { z: x.to_vec(), axis: 0 });
    }
    let mut base = x.to_vec();
    base[0] = 0;
    let mut out = vec![base.clone()];
    for j in 1..x.len() {
        if base[j] == 0 {
            let mut y = base.clone();
            y[j] = 1;
            out.push(y);
        }
    }
    Ok(out)
}

/// Uniform samples of the fundamental parallelotope. Sample `i` depends
/// only on `(seed, i)`, so parallel and sequential runs agree.
#[derive(Clone, Copy)]
pub struct ParallelotopeSampler<'a> {
    lattice: &'a Lattice,
    seed: u64,
}

impl ParallelotopeSampler<'_> {
    pub fn alpha(&self, index: u64) -> Vec<f64> {
        let n = self.lattice.n;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // each f64 consumes one u64 = two 32-bit words
        rng.set_word_pos(index as u128 * n as u128 * 2);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.lattice.generator.vec_mul(&self.alpha(index)).expect("dimension")
    }
}

/// Uniform point of `P(B)` for sample `index` of stream `seed`.
pub fn sample_parallelotope(lattice: &Lattice, seed: u64, index: u64) -> Vec<f64> {
    lattice.sampler(seed).point(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dot, norm2};

    #[test]
    fn an_gram_and_norms() {
        let l = Lattice::an(2).unwrap();
        assert_eq!(l.gram().to_rows(), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let l3 = Lattice::an(3).unwrap();
        for i in 0..3 {
            assert!((norm2(l3.basis(i)) - 2.0).abs() < 1e-12);
            for j in 0..3 {
                if i != j {
                    assert!((dot(l3.basis(i), l3.basis(j)) - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(l3.is_an());
        assert!(Lattice::an(1).is_err());
    }

    #[test]
    fn an_frame() {
        for n in 2..=8 {
            let l = Lattice::an(n).unwrap();
            assert!(l.basis(0)[0] > 0.0);
            for i in 1..n {
                assert_eq!(l.basis(i)[0], 0.0);
            }
            assert!(l.generator().gram().max_abs_diff(l.gram()) < 1e-10);
        }
    }

    #[test]
    fn an3_minimum_distance() {
        let l = Lattice::an(3).unwrap();
        let mut min = f64::INFINITY;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                for c in -2i64..=2 {
                    if (a, b, c) != (0, 0, 0) {
                        min = min.min(norm2(&l.point(&[a, b, c])));
                    }
                }
            }
        }
        assert!((min.sqrt() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn corner_counts() {
        let l = Lattice::an(2).unwrap();
        let c = l.corners().unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[0].point, vec![0.0, 0.0]);
        assert_eq!(c[1].point, l.basis(0).to_vec());
        assert_eq!(c[2].point, l.basis(1).to_vec());
        let (c0, c1) = Lattice::an(3).unwrap().corner_split(0).unwrap();
        assert_eq!((c0.len(), c1.len()), (4, 4));
        assert_eq!(Lattice::an(8).unwrap().corners().unwrap().len(), 256);
        assert!(Lattice::an(25).unwrap().corners().is_err());
    }

    #[test]
    fn corner_split_partitions() {
        let l = Lattice::an(5).unwrap();
        for axis in 0..5 {
            let (c0, c1) = l.corner_split(axis).unwrap();
            assert!(c0.iter().all(|c| c.z[axis] == 0));
            assert!(c1.iter().all(|c| c.z[axis] == 1));
            assert_eq!(c0.len() + c1.len(), 32);
        }
    }

    // Independent oracle: relevant iff the midpoint v/2 has exactly two
    // nearest lattice points (0 and v), found by scanning a box.
    fn midpoint_is_facet(l: &Lattice, v: &[i64]) -> bool {
        let n = l.n();
        let mid: Vec<f64> = l.point(v).iter().map(|x| x / 2.0).collect();
        let r = 3i64;
        let mut z = vec![-r; n];
        let mut best = f64::INFINITY;
        let mut count = 0;
        loop {
            let d = crate::geometry::dist2(&mid, &l.point(&z));
            if d < best - 1e-9 {
                best = d;
                count = 1;
            } else if (d - best).abs() <= 1e-9 {
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return count == 2;
                }
                z[k] += 1;
                if z[k] <= r {
                    break;
                }
                z[k] = -r;
                k += 1;
            }
        }
    }

    #[test]
    fn relevant_counts() {
        assert_eq!(Lattice::an(2).unwrap().relevant_vectors().unwrap().count(), 6);
        assert_eq!(Lattice::an(3).unwrap().relevant_vectors().unwrap().count(), 12);
        let z2 = Lattice::from_gram(&Mat::identity(2)).unwrap();
        assert_eq!(z2.relevant_vectors().unwrap().count(), 4);
        // hexagonal-free generic lattice in 2D has 6 relevant vectors
        let g = Lattice::from_gram(&Mat::from_rows(&[[1.0, 0.3], [0.3, 1.7]]).unwrap()).unwrap();
        assert_eq!(g.relevant_vectors().unwrap().count(), 6);
        assert!(Lattice::an(9).unwrap().relevant_vectors().is_err());
    }

    #[test]
    fn relevant_vectors_negation_closed_and_facet_midpoints() {
        for n in 2..=4 {
            let l = Lattice::an(n).unwrap();
            let rel = l.relevant_vectors().unwrap();
            assert_eq!(rel.count(), n * (n + 1));
            for z in &rel.coords {
                let neg: Vec<i64> = z.iter().map(|x| -x).collect();
                assert!(rel.contains(&neg));
                assert!(midpoint_is_facet(&l, z));
            }
        }
        let g = Lattice::from_gram(&Mat::from_rows(&[[1.0, 0.3], [0.3, 1.7]]).unwrap()).unwrap();
        for z in &g.relevant_vectors().unwrap().coords {
            assert!(midpoint_is_facet(&g, z));
        }
    }

    #[test]
    fn facet_neighbors_examples() {
        let l = Lattice::an(3).unwrap();
        let rel = l.relevant_vectors().unwrap();
        let x = Corner { z: vec![1, 0, 0], point: l.corner_point(&[1, 0, 0]) };
        let nb: Vec<Vec<u8>> = l.facet_neighbors(&rel, &x, 0).unwrap().into_iter().map(|c| c.z).collect();
        assert_eq!(nb, vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let x = Corner { z: vec![1, 1, 0], point: l.corner_point(&[1, 1, 0]) };
        let nb: Vec<Vec<u8>> = l.facet_neighbors(&rel, &x, 0).unwrap().into_iter().map(|c| c.z).collect();
        assert_eq!(nb, vec![vec![0, 1, 0], vec![0, 1, 1]]);
        let bad = Corner { z: vec![0, 1, 0], point: l.corner_point(&[0, 1, 0]) };
        assert!(matches!(l.facet_neighbors(&rel, &bad, 0), Err(Error::NotUpperCorner { .. })));
    }

    #[test]
    fn facet_neighbors_match_an_rule() {
        for n in 2..=8 {
            let l = Lattice::an(n).unwrap();
            let rel = l.relevant_vectors().unwrap();
            let (_, upper) = l.corner_split(0).unwrap();
            for x in &upper {
                let mut generic: Vec<Vec<u8>> =
                    l.facet_neighbors(&rel, x, 0).unwrap().into_iter().map(|c| c.z).collect();
                let mut rule = an_neighbor_rule(&x.z).unwrap();
                generic.sort();
                rule.sort();
                assert_eq!(generic, rule, "n={n} x={:?}", x.z);
            }
            let top = vec![1u8; n];
            assert_eq!(an_neighbor_rule(&top).unwrap().len(), 1);
        }
    }

    #[test]
    fn reduce_examples() {
        let l = Lattice::an(4).unwrap();
        let (y, k) = l.reduce_to_parallelotope(&[0.0; 4]).unwrap();
        assert_eq!((y, k), (vec![0.0; 4], vec![0; 4]));
        let p: Vec<f64> = l.basis(0).iter().zip(l.basis(1)).map(|(a, b)| 3.0 * a + 0.5 * b).collect();
        let (y, k) = l.reduce_to_parallelotope(&p).unwrap();
        assert_eq!(k, vec![3, 0, 0, 0]);
        let expect: Vec<f64> = l.basis(1).iter().map(|b| 0.5 * b).collect();
        assert!(crate::geometry::dist2(&y, &expect) < 1e-20);
    }

    #[test]
    fn reduce_reconstructs_and_is_idempotent() {
        let l = Lattice::an(5).unwrap();
        let s = l.sampler(9);
        for i in 0..200 {
            let y: Vec<f64> = s.point(i).iter().map(|x| 7.0 * x - 11.0 * (i as f64 % 3.0)).collect();
            let (r, k) = l.reduce_to_parallelotope(&y).unwrap();
            let back: Vec<f64> = r.iter().zip(l.point(&k)).map(|(a, b)| a + b).collect();
            assert!(crate::geometry::dist2(&back, &y).sqrt() < 1e-10);
            let alpha = l.coords(&r).unwrap();
            assert!(alpha.iter().all(|a| *a >= -1e-12 && *a < 1.0 + 1e-12));
            let inside = s.point(i);
            assert_eq!(l.reduce_to_parallelotope(&inside).unwrap().0, inside);
        }
    }

    #[test]
    fn sampler_reproducible_and_in_range() {
        let l = Lattice::an(3).unwrap();
        let a = l.sampler(42);
        let b = l.sampler(42);
        for i in [0u64, 1, 17, 1000] {
            assert_eq!(a.point(i), b.point(i));
            let alpha = l.coords(&a.point(i)).unwrap();
            assert!(alpha.iter().all(|x| (-1e-12..1.0 + 1e-12).contains(x)));
        }
        assert_ne!(a.point(0), l.sampler(43).point(0));
        // indexed access equals sequential draws from the same stream
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let seq: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
        assert_eq!(a.alpha(0), seq[..3].to_vec());
        assert_eq!(a.alpha(1), seq[3..].to_vec());
    }

    #[test]
    fn sampler_mean_is_centroid() {
        let n = 4;
        let l = Lattice::an(n).unwrap();
        let s = l.sampler(5);
        let count = 100_000u64;
        let mut mean = vec![0.0; n];
        for i in 0..count {
            for (m, x) in mean.iter_mut().zip(s.point(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let centroid: Vec<f64> = l.corner_point(&vec![1; n]).iter().map(|x| x / 2.0).collect();
        // Var(y_k) = Σ_i G_ik² / 12 since α_i are independent U[0,1).
        for k in 0..n {
            let var: f64 = (0..n).map(|i| l.generator()[(i, k)].powi(2)).sum::<f64>() / 12.0;
            let sigma = (var / count as f64).sqrt();
            assert!((mean[k] - centroid[k]).abs() < 3.0 * sigma + 1e-15, "axis {k}");
        }
    }

    #[test]
    fn axis_view_preserves_gram_and_swaps() {
        let l = Lattice::an(4).unwrap();
        let (v, q) = l.axis_view(2).unwrap();
        assert!(v.is_an());
        let rotated = l.generator().matmul(&q).unwrap();
        // b_3 of the original is b_1 of the view
        assert!(crate::geometry::dist2(rotated.row(2), v.basis(0)) < 1e-20);
        assert!(crate::geometry::dist2(rotated.row(0), v.basis(2)) < 1e-20);
        for i in 1..4 {
            assert_eq!(v.basis(i)[0], 0.0);
        }
    }

    #[test]
    fn json_roundtrip() {
        let l = Lattice::an(3).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: Lattice = serde_json::from_str(&s).unwrap();
        assert_eq!(back.generator(), l.generator());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["gram"][0][1], 1.0);
    }
}
