//! The decision boundary between the corners with `z_axis = 0` and those
//! with `z_axis = 1`, written as a minimum over groups of maxima of affine
//! pieces, one group per upper corner.
//!
//! Everything here lives in the oriented frame of an axis view of the
//! lattice: the decoded basis vector is `b_1`, the other basis vectors are
//! orthogonal to the first axis, and a point is split as `y = (y₁, ỹ)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dist2, dot, norm, Mat};
use crate::lattice::{an_neighbor_rule, Lattice};

/// Largest dimension `build` accepts.
pub const BOUNDARY_GUARD: usize = 12;
/// Pieces or groups closer than this in value are ambiguous for counting.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Bisector between an upper corner and one of its lower facet neighbours:
/// `{ y : y·v = p }`, oriented so that the upper corner is on the positive side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffinePiece {
    pub v: Vec<f64>,
    pub p: f64,
    /// Corner labels in the original lattice's basis order.
    pub owner_z: Vec<u8>,
    pub neighbor_z: Vec<u8>,
}

impl AffinePiece {
    /// `y₁` on the bisector above `ỹ`.
    #[inline]
    pub fn height(&self, yt: &[f64]) -> f64 {
        (self.p - dot(&self.v[1..], yt)) / self.v[0]
    }

    /// `y·v − p`; positive on the owner's side.
    #[inline]
    pub fn side(&self, y: &[f64]) -> f64 {
        dot(y, &self.v) - self.p
    }

    /// Same affine function as `other` (up to `tol`).
    pub fn same_function(&self, other: &AffinePiece, tol: f64) -> bool {
        let (a0, b0) = (self.v[0], other.v[0]);
        (self.p / a0 - other.p / b0).abs() <= tol
            && self.v[1..].iter().zip(&other.v[1..]).all(|(x, y)| (x / a0 - y / b0).abs() <= tol)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryFunction {
    pub n: usize,
    pub axis: usize,
    /// `y_frame = y·rotation` maps the lattice frame to this boundary's frame.
    pub rotation: Mat,
    pub groups: Vec<Vec<AffinePiece>>,
    #[serde(skip)]
    view: Lattice,
}

/// Which piece realizes `f` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Active {
    pub group: usize,
    pub piece: usize,
    pub value: f64,
    /// Another group or piece comes within `ACTIVE_TOL` of the active one.
    pub ambiguous: bool,
}

impl BoundaryFunction {
    /// Boundary for decoding `z_axis` on `A_n`, neighbours from the
    /// combinatorial adjacency rule of `A_n`.
    pub fn build(lattice: &Lattice, axis: usize) -> Result<Self> {
        if !lattice.is_an() {
            return Err(Error::NotAn);
        }
        if lattice.n() > BOUNDARY_GUARD {
            return Err(Error::GuardExceeded { what: "boundary construction", n: lattice.n(), limit: BOUNDARY_GUARD });
        }
        let (view, rotation) = lattice.axis_view(axis)?;
        let uppers: Vec<Vec<u8>> = view.corner_split(0)?.1.into_iter().map(|c| c.z).collect();
        let mut neighbors = Vec::with_capacity(uppers.len());
        for x in uppers {
            let nb = an_neighbor_rule(&x)?;
            neighbors.push((x, nb));
        }
        Self::from_neighbors(view, rotation, axis, neighbors)
    }

    /// Boundary for any Voronoi-reduced basis, neighbours from the relevant
    /// Voronoi vectors.
    pub fn from_relevant(lattice: &Lattice, axis: usize) -> Result<Self> {
        let (view, rotation) = lattice.axis_view(axis)?;
        let rel = view.relevant_vectors()?;
        let (_, uppers) = view.corner_split(0)?;
        let mut neighbors = Vec::with_capacity(uppers.len());
        for x in uppers {
            let nb = view.facet_neighbors(&rel, &x, 0)?.into_iter().map(|c| c.z).collect();
            neighbors.push((x.z, nb));
        }
        Self::from_neighbors(view, rotation, axis, neighbors)
    }

    pub(crate) fn from_neighbors(
        view: Lattice,
        rotation: Mat,
        axis: usize,
        neighbors: Vec<(Vec<u8>, Vec<Vec<u8>>)>,
    ) -> Result<Self> {
        let relabel = |z: &[u8]| {
            let mut z = z.to_vec();
            z.swap(0, axis);
            z
        };
        let mut groups = Vec::new();
        for (x, nbs) in neighbors {
            // groups without lower neighbours are dropped
            if nbs.is_empty() {
                continue;
            }
            let xp = view.corner_point(&x);
            let mut group = Vec::with_capacity(nbs.len());
            for l in nbs {
                let lp = view.corner_point(&l);
                let v: Vec<f64> = xp.iter().zip(&lp).map(|(a, b)| a - b).collect();
                let p = 0.5 * (dot(&xp, &xp) - dot(&lp, &lp));
                if v[0] <= 1e-12 {
                    return Err(Error::NonPositiveNormal { owner: relabel(&x), neighbor: relabel(&l), v1: v[0] });
                }
                group.push(AffinePiece { v, p, owner_z: relabel(&x), neighbor_z: relabel(&l) });
            }
            groups.push(group);
        }
        Ok(BoundaryFunction { n: view.n(), axis, rotation, groups, view })
    }

    /// The oriented lattice this boundary is expressed in.
    pub fn view(&self) -> &Lattice {
        &self.view
    }

    pub fn piece_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn pieces(&self) -> impl Iterator<Item = &AffinePiece> {
        self.groups.iter().flatten()
    }

    /// Number of distinct affine functions among all pieces.
    pub fn distinct_functions(&self) -> usize {
        let mut seen: Vec<&AffinePiece> = Vec::new();
        for p in self.pieces() {
            if !seen.iter().any(|q| q.same_function(p, 1e-9)) {
                seen.push(p);
            }
        }
        seen.len()
    }

    pub fn to_frame(&self, y: &[f64]) -> Vec<f64> {
        self.rotation.vec_mul(y).expect("dimension")
    }

    /// `f(ỹ) = min_m max_k h_{m,k}(ỹ)`.
    pub fn evaluate(&self, yt: &[f64]) -> f64 {
        assert_eq!(yt.len(), self.n - 1, "ỹ has dimension n - 1");
        self.groups
            .iter()
            .map(|g| g.iter().map(|h| h.height(yt)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// The group and piece realizing `f(ỹ)`.
    pub fn active(&self, yt: &[f64]) -> Active {
        let mut best = Active { group: 0, piece: 0, value: f64::INFINITY, ambiguous: false };
        let mut runner_up = f64::INFINITY;
        let mut piece_gap = f64::INFINITY;
        for (gi, g) in self.groups.iter().enumerate() {
            let (mut top, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for (k, h) in g.iter().enumerate() {
                let v = h.height(yt);
                if v > top {
                    second = top;
                    top = v;
                    arg = k;
                } else if v > second {
                    second = v;
                }
            }
            if top < best.value {
                runner_up = best.value;
                best = Active { group: gi, piece: arg, value: top, ambiguous: false };
                piece_gap = top - second;
            } else if top < runner_up {
                runner_up = top;
            }
        }
        best.ambiguous = runner_up - best.value <= ACTIVE_TOL || piece_gap <= ACTIVE_TOL;
        best
    }

    /// Decoded bit for a point given in this boundary's frame: 1 iff some
    /// group has the point strictly on the owner side of all its pieces.
    pub fn hld_bit_frame(&self, y: &[f64]) -> u8 {
        u8::from(self.groups.iter().any(|g| g.iter().all(|h| h.side(y) > 0.0)))
    }

    /// Decoded bit for a point given in the lattice frame.
    pub fn hld_bit(&self, y: &[f64]) -> u8 {
        self.hld_bit_frame(&self.to_frame(y))
    }

    /// Uniform sample `i` of the domain `D` (projection of `P(B)`), together
    /// with the full point in this frame.
    pub fn sample_domain(&self, seed: u64, index: u64) -> (Vec<f64>, Vec<f64>) {
        let y = self.view.sampler(seed).point(index);
        (y[1..].to_vec(), y)
    }
}

/// `Σ_{i=1}^{n} i·C(n−1, n−i)`: affine pieces of the `A_n` boundary.
pub fn count_pieces_formula(n: usize) -> u128 {
    (1..=n).map(|i| i as u128 * binomial(n - 1, n - i)).sum()
}

/// `Σ_{i=2}^{n} (i−1)·C(n−1, n−i)`: neurons a one-hidden-layer network needs.
pub fn shallow_bound_formula(n: usize) -> u128 {
    (2..=n).map(|i| (i as u128 - 1) * binomial(n - 1, n - i)).sum()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimplexCensus {
    /// simplex dimension → number of upper corners spanning one
    pub counts: BTreeMap<usize, u64>,
    /// every simplex had equal edge lengths
    pub regular: bool,
}

impl SimplexCensus {
    /// `Σ_i i·census[i]`.
    pub fn piece_total(&self) -> u128 {
        self.counts.iter().map(|(&i, &c)| i as u128 * c as u128).sum()
    }
}

/// Walk the lower corners `x`, and for each upper corner `x + b_1` record the
/// dimension of the simplex it spans with its lower facet neighbours.
pub fn simplex_census(lattice: &Lattice) -> Result<SimplexCensus> {
    let rel = lattice.relevant_vectors()?;
    let (lower, _) = lattice.corner_split(0)?;
    let mut counts = BTreeMap::new();
    let mut regular = true;
    for x in lower {
        let mut top_z = x.z.clone();
        top_z[0] = 1;
        let top = crate::lattice::Corner { point: lattice.corner_point(&top_z), z: top_z };
        let nbs = lattice.facet_neighbors(&rel, &top, 0)?;
        let mut verts: Vec<&[f64]> = nbs.iter().map(|c| c.point.as_slice()).collect();
        verts.push(&top.point);
        let mut edge = None;
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                let d = dist2(verts[a], verts[b]);
                match edge {
                    None => edge = Some(d),
                    Some(e) if (e - d).abs() > 1e-9 => regular = false,
                    _ => {}
                }
            }
        }
        *counts.entry(nbs.len()).or_insert(0) += 1;
    }
    Ok(SimplexCensus { counts, regular })
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceCountReport {
    pub version: u32,
    pub n: usize,
    pub formula_count: u128,
    pub simplex_census: BTreeMap<usize, u64>,
    pub census_total: u128,
    pub census_regular: bool,
    pub empirical_count: usize,
    pub samples: u64,
    pub skipped: u64,
    pub groups: usize,
    pub distinct_functions: usize,
    pub seed: u64,
}

impl PieceCountReport {
    pub fn consistent(&self) -> bool {
        self.formula_count == self.census_total && self.formula_count == self.empirical_count as u128
    }
}

/// Distinct `(group, piece)` pairs realizing `f` on uniform samples of `D`,
/// and the number of samples skipped for being within `ACTIVE_TOL` of
/// another group or piece.
pub fn count_active(
    f: &BoundaryFunction,
    samples: u64,
    seed: u64,
    map: impl Fn(&[f64]) -> Vec<f64> + Sync,
) -> (usize, u64) {
    let hits: Vec<Option<(usize, usize)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (yt, _) = f.sample_domain(seed, i);
            let a = f.active(&map(&yt));
            (!a.ambiguous).then_some((a.group, a.piece))
        })
        .collect();
    let skipped = hits.iter().filter(|h| h.is_none()).count() as u64;
    let mut seen: Vec<(usize, usize)> = hits.into_iter().flatten().collect();
    seen.sort_unstable();
    seen.dedup();
    (seen.len(), skipped)
}

pub fn count_pieces_empirical(f: &BoundaryFunction, samples: u64, seed: u64) -> usize {
    count_active(f, samples, seed, |yt| yt.to_vec()).0
}

/// Formula, simplex census and empirical count side by side for `A_n`.
pub fn piece_count_report(n: usize, samples: u64, seed: u64) -> Result<PieceCountReport> {
    let lattice = Lattice::an(n)?;
    let f = BoundaryFunction::build(&lattice, 0)?;
    let census = simplex_census(&lattice)?;
    let (empirical, skipped) = count_active(&f, samples, seed, |yt| yt.to_vec());
    Ok(PieceCountReport {
        version: crate::REPORT_VERSION,
        n,
        formula_count: count_pieces_formula(n),
        census_total: census.piece_total(),
        simplex_census: census.counts,
        census_regular: census.regular,
        empirical_count: empirical,
        samples,
        skipped,
        groups: f.groups.len(),
        distinct_functions: f.distinct_functions(),
        seed,
    })
}

/// A crease `{ ỹ : w·ỹ = q }` in `D`, normalized so `‖w‖ = 1` and the first
/// non-negligible entry of `w` is positive.
#[derive(Clone, Debug, Serialize)]
pub struct Crease {
    pub w: Vec<f64>,
    pub q: f64,
}

impl Crease {
    fn between(a: &AffinePiece, b: &AffinePiece) -> Option<Crease> {
        let mut w: Vec<f64> = a.v[1..].iter().zip(&b.v[1..]).map(|(x, y)| x / a.v[0] - y / b.v[0]).collect();
        let mut q = a.p / a.v[0] - b.p / b.v[0];
        let len = norm(&w);
        if len <= 1e-12 {
            return None;
        }
        let lead = w.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let s = lead.signum() / len;
        w.iter_mut().for_each(|x| *x *= s);
        q *= s;
        Some(Crease { w, q })
    }

    fn same(&self, other: &Crease, tol: f64) -> bool {
        (self.q - other.q).abs() <= tol && self.w.iter().zip(&other.w).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn project(&self, yt: &[f64]) -> Vec<f64> {
        let c = dot(&self.w, yt) - self.q;
        yt.iter().zip(&self.w).map(|(y, w)| y - c * w).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShallowBoundReport {
    pub version: u32,
    pub n: usize,
    pub bound: u128,
    pub distinct_creases: usize,
    pub pairs_examined: usize,
    pub pairs_realized: usize,
    pub probe_points: u64,
    pub seed: u64,
}

/// Distinct `(n−2)`-dimensional creases of `f` inside `P(B)`.
///
/// For every group and pair of its pieces, probe points of `D` are projected
/// onto the pair's crease; the pair counts when some probe lands where both
/// pieces attain the group maximum strictly above the group's other pieces,
/// the group realizes `f`, and the lifted boundary point is interior to
/// `P(B)`. Realized creases are then deduplicated as hyperplanes of `D`.
pub fn distinct_crease_hyperplanes(f: &BoundaryFunction, probes: u64, seed: u64) -> (usize, usize, usize) {
    let pool: Vec<Vec<f64>> = (0..probes).map(|i| f.sample_domain(seed, i).0).collect();
    let view = f.view();
    let interior = |y: &[f64]| {
        view.coords(y).map(|a| a.iter().all(|&x| x > 1e-9 && x < 1.0 - 1e-9)).unwrap_or(false)
    };
    let mut candidates = Vec::new();
    for g in &f.groups {
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                candidates.push((g, a, b));
            }
        }
    }
    let examined = candidates.len();
    let realized: Vec<Crease> = candidates
        .par_iter()
        .filter_map(|&(g, a, b)| {
            let crease = Crease::between(&g[a], &g[b])?;
            let hit = pool.iter().any(|yt| {
                let p = crease.project(yt);
                let top = g[a].height(&p);
                let others_below = g
                    .iter()
                    .enumerate()
                    .all(|(k, h)| k == a || k == b || h.height(&p) < top - 1e-7);
                if !others_below || top > f.evaluate(&p) + ACTIVE_TOL {
                    return false;
                }
                let mut y = Vec::with_capacity(f.n);
                y.push(top);
                y.extend_from_slice(&p);
                interior(&y)
            });
            hit.then_some(crease)
        })
        .collect();
    let pairs_realized = realized.len();
    let mut distinct: Vec<Crease> = Vec::new();
    for c in realized {
        if !distinct.iter().any(|d| d.same(&c, 1e-9)) {
            distinct.push(c);
        }
    }
    (distinct.len(), examined, pairs_realized)
}

pub fn shallow_bound_report(n: usize, probes: u64, seed: u64) -> Result<ShallowBoundReport> {
    let f = BoundaryFunction::build(&Lattice::an(n)?, 0)?;
    let (distinct, examined, realized) = distinct_crease_hyperplanes(&f, probes, seed);
    Ok(ShallowBoundReport {
        version: crate::REPORT_VERSION,
        n,
        bound: shallow_bound_formula(n),
        distinct_creases: distinct,
        pairs_examined: examined,
        pairs_realized: realized,
        probe_points: probes,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::BruteForce;

    #[test]
    fn formulas() {
        let pieces: Vec<u128> = (2..=6).map(count_pieces_formula).collect();
        assert_eq!(pieces, vec![3, 8, 20, 48, 112]);
        let bound: Vec<u128> = (2..=6).map(shallow_bound_formula).collect();
        assert_eq!(bound, vec![1, 4, 12, 32, 80]);
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(3, 5), 0);
    }

    /// Brute-force versions of both sums straight from binomial rows.
    #[test]
    fn formulas_against_pascal_triangle() {
        let mut row = vec![1u128];
        for n in 2..=20usize {
            // row = C(n-2, ·) → advance to C(n-1, ·)
            let mut next = vec![1u128; row.len() + 1];
            for k in 1..row.len() {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            let pieces: u128 = (1..=n).map(|i| i as u128 * row[n - i]).sum();
            let bound: u128 = (2..=n).map(|i| (i as u128 - 1) * row[n - i]).sum();
            assert_eq!(count_pieces_formula(n), pieces);
            assert_eq!(shallow_bound_formula(n), bound);
        }
    }

    #[test]
    fn all_first_normal_coordinates_positive() {
        for n in 2..=BOUNDARY_GUARD {
            let l = Lattice::an(n).unwrap();
            let f = BoundaryFunction::build(&l, 0).unwrap();
            assert!(f.pieces().all(|p| p.v[0] > 1e-12));
            assert_eq!(f.piece_count() as u128, count_pieces_formula(n));
            assert_eq!(f.groups.len(), 1 << (n - 1));
        }
        assert!(matches!(BoundaryFunction::build(&Lattice::an(13).unwrap(), 0), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn rule_and_relevant_vectors_agree() {
        for n in 2..=6 {
            let l = Lattice::an(n).unwrap();
            for axis in [0, n - 1] {
                let a = BoundaryFunction::build(&l, axis).unwrap();
                let b = BoundaryFunction::from_relevant(&l, axis).unwrap();
                assert_eq!(a.groups, b.groups);
            }
        }
    }

    #[test]
    fn non_an_rejected() {
        let z2 = Lattice::from_gram(&Mat::identity(2)).unwrap();
        assert!(matches!(BoundaryFunction::build(&z2, 0), Err(Error::NotAn)));
        // square lattice: the boundary is the single plateau y₁ = 1/2
        let f = BoundaryFunction::from_relevant(&z2, 0).unwrap();
        assert_eq!(f.piece_count(), 2);
        assert!((f.evaluate(&[0.3]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn a2_value_at_origin() {
        // D for A_2 is the projection of P(B); at ỹ = 0 the boundary is
        // min(max(h_p1, h_1), h_p2). With b₁ = (√(3/2), b₁²) and p = 1 for
        // h_p1: h_p1(0) = 1/√(3/2); h_1 passes through the origin; h_p2(0) = 2/√(3/2).
        let l = Lattice::an(2).unwrap();
        let f = BoundaryFunction::build(&l, 0).unwrap();
        let c = 1.5f64.sqrt();
        assert!((l.basis(0)[0] - c).abs() < 1e-12);
        assert!((f.evaluate(&[0.0]) - 1.0 / c).abs() < 1e-12);
    }

    #[test]
    fn corners_sit_above_the_boundary() {
        for n in 2..=6 {
            let l = Lattice::an(n).unwrap();
            let f = BoundaryFunction::build(&l, 0).unwrap();
            for c in l.corner_split(0).unwrap().1 {
                assert!(f.evaluate(&c.point[1..]) < c.point[0]);
                assert_eq!(f.hld_bit(&c.point), 1);
            }
            assert_eq!(f.hld_bit(&vec![0.0; n]), 0);
        }
    }

    #[test]
    fn group_size_bounds() {
        for n in 2..=8 {
            let l = Lattice::an(n).unwrap();
            let tau = l.relevant_vectors().unwrap().count();
            let f = BoundaryFunction::build(&l, 0).unwrap();
            assert!(f.groups.iter().all(|g| !g.is_empty() && g.len() < tau));
            assert!(f.groups.len() <= 1 << (n - 1));
        }
    }

    #[test]
    fn census_matches_binomials() {
        for n in 2..=8 {
            let c = simplex_census(&Lattice::an(n).unwrap()).unwrap();
            assert!(c.regular);
            for i in 1..=n {
                assert_eq!(c.counts.get(&i).copied().unwrap_or(0) as u128, binomial(n - 1, n - i));
            }
            assert_eq!(c.piece_total(), count_pieces_formula(n));
        }
    }

    #[test]
    fn hld_bit_matches_oracle() {
        for n in 2..=5 {
            let l = Lattice::an(n).unwrap();
            let bf = BruteForce::new(&l, 2).unwrap();
            for axis in 0..n {
                let f = BoundaryFunction::build(&l, axis).unwrap();
                for i in 0..2000 {
                    let y = l.sampler(31).point(i);
                    let r = bf.closest(&y).unwrap();
                    if r.tie {
                        continue;
                    }
                    assert_eq!(f.hld_bit(&y) as i64, r.z[axis], "n={n} axis={axis} i={i}");
                    let yf = f.to_frame(&y);
                    let above = yf[0] > f.evaluate(&yf[1..]);
                    assert_eq!(above as i64, r.z[axis]);
                }
            }
        }
    }

    #[test]
    fn empirical_small() {
        let r = piece_count_report(2, 10_000, 1).unwrap();
        assert_eq!(r.empirical_count, 3);
        let r = piece_count_report(3, 100_000, 1).unwrap();
        assert_eq!(r.empirical_count, 8);
        assert!(r.consistent());
    }

    #[test]
    fn creases_exceed_bound() {
        for n in 2..=4 {
            let r = shallow_bound_report(n, 3000, 5).unwrap();
            assert!(r.distinct_creases as u128 >= r.bound, "{r:?}");
        }
    }
}
