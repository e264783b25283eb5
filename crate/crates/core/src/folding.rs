//! Folding the boundary domain by reflections across the bisectors of pairs
//! of basis vectors, and the short boundary that remains on the folded cone.

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{count_active, count_pieces_formula, BoundaryFunction};
use crate::error::{Error, Result};
use crate::geometry::{dot, reflect_unchecked, Hyperplane};
use crate::lattice::Lattice;

/// A reflection across the bisector of `b_j` and `b_k` (0-based basis indices).
#[derive(Clone, Debug, Serialize)]
pub struct Fold {
    pub j: usize,
    pub k: usize,
    pub plane: Hyperplane,
}

/// Ordered bisector reflections acting on `ỹ ∈ R^{n−1}`.
#[derive(Clone, Debug, Serialize)]
pub struct FoldingTransform {
    pub n: usize,
    pub reflections: Vec<Fold>,
}

impl FoldingTransform {
    /// One reflection per pair `1 ≤ j < k ≤ n−1` (0-based, so `b_1` is
    /// excluded), normal `b_j − b_k` with its zero first coordinate dropped,
    /// lexicographic order. Empty for `n = 2`.
    pub fn build(lattice: &Lattice) -> Result<Self> {
        if !lattice.is_an() {
            return Err(Error::NotAn);
        }
        let n = lattice.n();
        let mut reflections = Vec::with_capacity((n - 1) * (n - 2) / 2);
        for j in 1..n {
            for k in j + 1..n {
                let (bj, bk) = (lattice.basis(j), lattice.basis(k));
                debug_assert!(bj[0] == 0.0 && bk[0] == 0.0);
                let normal: Vec<f64> = bj[1..].iter().zip(&bk[1..]).map(|(a, b)| a - b).collect();
                reflections.push(Fold { j, k, plane: Hyperplane::new(normal, 0.0)? });
            }
        }
        Ok(FoldingTransform { n, reflections })
    }

    pub fn len(&self) -> usize {
        self.reflections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reflections.is_empty()
    }

    /// One pass: reflect whenever `ỹ·v_{j,k} < 0`. A point on a mirror is
    /// already its own image.
    fn pass(&self, yt: &mut Vec<f64>) {
        for f in &self.reflections {
            if dot(yt, &f.plane.normal) < 0.0 {
                *yt = reflect_unchecked(&f.plane, yt);
            }
        }
    }

    /// `true` when `ỹ·v_{j,k} ≥ −tol` for every pair.
    pub fn in_folded_domain(&self, yt: &[f64], tol: f64) -> bool {
        self.reflections.iter().all(|f| dot(yt, &f.plane.normal) >= -tol)
    }

    /// Fold `ỹ` into `D′`, repeating the pass until every product is
    /// non-negative (at most `n²` passes). Returns the image and the number
    /// of passes used.
    pub fn apply_traced(&self, yt: &[f64]) -> (Vec<f64>, usize) {
        assert_eq!(yt.len(), self.n - 1, "ỹ has dimension n - 1");
        let mut y = yt.to_vec();
        let mut passes = 0;
        while passes < self.n * self.n {
            self.pass(&mut y);
            passes += 1;
            if self.in_folded_domain(&y, 1e-10) {
                break;
            }
        }
        (y, passes)
    }

    pub fn apply(&self, yt: &[f64]) -> Vec<f64> {
        self.apply_traced(yt).0
    }
}

/// The boundary on `D′`: for `k = 1..n−1` the group of the corner
/// `b_1 + … + b_k` with its two surviving neighbours, then the group of
/// `b_1 + … + b_n` with its single neighbour.
#[derive(Clone, Debug, Serialize)]
pub struct FoldedBoundary {
    pub boundary: BoundaryFunction,
    pub fold: FoldingTransform,
}

impl FoldedBoundary {
    pub fn build(lattice: &Lattice) -> Result<Self> {
        let fold = FoldingTransform::build(lattice)?;
        let n = lattice.n();
        let chain = (1..=n)
            .map(|k| {
                let x: Vec<u8> = (0..n).map(|i| u8::from(i < k)).collect();
                let mut below = x.clone();
                below[0] = 0;
                let mut nbs = vec![below.clone()];
                if k < n {
                    let mut side = below;
                    side[k] = 1;
                    nbs.push(side);
                }
                (x, nbs)
            })
            .collect();
        let (view, rotation) = lattice.axis_view(0)?;
        let boundary = BoundaryFunction::from_neighbors(view, rotation, 0, chain)?;
        Ok(FoldedBoundary { boundary, fold })
    }

    pub fn piece_count(&self) -> usize {
        self.boundary.piece_count()
    }

    /// `f_{D′}` at a point already in `D′`.
    pub fn evaluate_folded(&self, yt_folded: &[f64]) -> f64 {
        self.boundary.evaluate(yt_folded)
    }

    /// `f_{D′}(F(ỹ))` for any `ỹ ∈ D`.
    pub fn evaluate(&self, yt: &[f64]) -> f64 {
        self.evaluate_folded(&self.fold.apply(yt))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldCheckReport {
    pub version: u32,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub reflections: usize,
    /// `max |f(ỹ) − f(F(ỹ))|`
    pub max_deviation: f64,
    /// `max |f(ỹ) − f_{D′}(F(ỹ))|`
    pub folded_boundary_deviation: f64,
    /// samples whose image is outside `D′` or outside the projection of `P(B)`
    pub domain_violations: u64,
    /// samples whose boundary point `(f(ỹ), F(ỹ))` is outside `P(B)`;
    /// informational, this happens near the rim of `D` even without folding
    pub lifted_outside: u64,
    pub max_passes: usize,
    pub folded_pieces: usize,
    pub folded_pieces_skipped: u64,
    pub folded_boundary_pieces: usize,
    pub unfolded_pieces: u128,
    /// "2n-1", "2n+1" or "neither"
    pub folded_count_matches: String,
}

impl FoldCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_deviation < tol
            && self.folded_boundary_deviation < tol
            && self.domain_violations == 0
            && self.folded_pieces_skipped < self.samples
            && (self.n < 3 || (self.folded_pieces as u128) < self.unfolded_pieces)
    }
}

/// Fold invariance of `f` on uniform samples of `D`. For `n = 2` the
/// transform is empty and the deviation is exactly zero.
pub fn verify_fold_invariance(f: &BoundaryFunction, fold: &FoldingTransform, samples: u64, seed: u64) -> f64 {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let (yt, _) = f.sample_domain(seed, i);
            (f.evaluate(&yt) - f.evaluate(&fold.apply(&yt))).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Distinct pieces of `f` active on folded samples, and the number of
/// samples skipped as ambiguous.
pub fn folded_piece_count(lattice: &Lattice, samples: u64, seed: u64) -> Result<(usize, u64)> {
    let f = BoundaryFunction::build(lattice, 0)?;
    let fold = FoldingTransform::build(lattice)?;
    Ok(count_active(&f, samples, seed, |yt| fold.apply(yt)))
}

pub fn fold_check(n: usize, samples: u64, seed: u64) -> Result<FoldCheckReport> {
    let lattice = Lattice::an(n)?;
    let f = BoundaryFunction::build(&lattice, 0)?;
    let folded = FoldedBoundary::build(&lattice)?;
    let fold = &folded.fold;

    let (max_dev, fb_dev, violations, max_passes, lifted_outside) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (yt, _) = f.sample_domain(seed, i);
            let (img, passes) = fold.apply_traced(&yt);
            let value = f.evaluate(&yt);
            let dev = (value - f.evaluate(&img)).abs();
            let fb = (value - folded.evaluate_folded(&img)).abs();
            let bad = !lattice.in_projected_parallelotope(&img, 1e-9) || !fold.in_folded_domain(&img, 1e-10);
            let mut lifted = Vec::with_capacity(n);
            lifted.push(value);
            lifted.extend_from_slice(&img);
            let inside = lattice
                .coords(&lifted)
                .map(|a| a.iter().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x)))
                .unwrap_or(false);
            (dev, fb, u64::from(bad), passes, u64::from(!inside))
        })
        .reduce(
            || (0.0, 0.0, 0, 0, 0),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2 + b.2, a.3.max(b.3), a.4 + b.4),
        );

    let (pieces, skipped) = count_active(&f, samples, seed, |yt| fold.apply(yt));
    let matches = if pieces == 2 * n - 1 {
        "2n-1"
    } else if pieces == 2 * n + 1 {
        "2n+1"
    } else {
        "neither"
    };
    Ok(FoldCheckReport {
        version: crate::REPORT_VERSION,
        n,
        samples,
        seed,
        reflections: fold.len(),
        max_deviation: max_dev,
        folded_boundary_deviation: fb_dev,
        domain_violations: violations,
        lifted_outside,
        max_passes,
        folded_pieces: pieces,
        folded_pieces_skipped: skipped,
        folded_boundary_pieces: folded.piece_count(),
        unfolded_pieces: count_pieces_formula(n),
        folded_count_matches: matches.to_string(),
    })
}
