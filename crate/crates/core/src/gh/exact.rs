use crate::error::{Error, Result};
use crate::gh::correspondence::gap;
use crate::gh::{diameter_bound, Correspondence, GhEstimate, GhMode};
use crate::metric::DistanceMatrix;

/// Largest `|X|·|Y|` accepted by [`gh_exact`].
pub const EXACT_CAP: usize = 64;

/// Pairs `(x, y)` are numbered `x·|Y| + y`; with at most 64 of them every
/// relation fits in one `u64`.
struct Search {
    nx: usize,
    ny: usize,
    /// `compat[p]`: pairs whose gap with `p` is within the threshold.
    compat: Vec<u64>,
    row: Vec<u64>,
    col: Vec<u64>,
}

impl Search {
    fn new(nx: usize, ny: usize) -> Self {
        let mut row = vec![0u64; nx];
        let mut col = vec![0u64; ny];
        for x in 0..nx {
            for y in 0..ny {
                let bit = 1u64 << (x * ny + y);
                row[x] |= bit;
                col[y] |= bit;
            }
        }
        Self {
            nx,
            ny,
            compat: vec![0; nx * ny],
            row,
            col,
        }
    }

    fn set_threshold(&mut self, dx: &DistanceMatrix, dy: &DistanceMatrix, t: f64) {
        let (nx, ny) = (self.nx, self.ny);
        for p in 0..nx * ny {
            let (a, c) = (p / ny, p % ny);
            let mut mask = 0u64;
            for q in 0..nx * ny {
                let (b, d) = (q / ny, q % ny);
                if gap(dx.get(a, b), dy.get(c, d)) <= t {
                    mask |= 1u64 << q;
                }
            }
            self.compat[p] = mask;
        }
    }

    /// A relation covering both sides whose pairs are pairwise compatible.
    fn solve(&self, forced: u64) -> Option<u64> {
        let mut allowed = u64::MAX >> (64 - self.nx * self.ny);
        let mut chosen = 0u64;
        let mut f = forced;
        while f != 0 {
            let p = f.trailing_zeros() as usize;
            if allowed & (1u64 << p) == 0 {
                return None;
            }
            allowed &= self.compat[p];
            chosen |= 1u64 << p;
            f &= f - 1;
        }
        self.extend(chosen, allowed)
    }

    fn extend(&self, chosen: u64, allowed: u64) -> Option<u64> {
        // Uncovered point with the fewest usable pairs.
        let mut best: Option<u64> = None;
        for mask in self.row.iter().chain(&self.col) {
            if chosen & mask != 0 {
                continue;
            }
            let options = allowed & mask;
            if options == 0 {
                return None;
            }
            if best.map_or(true, |b| options.count_ones() < b.count_ones()) {
                best = Some(options);
            }
        }
        let Some(mut options) = best else {
            return Some(chosen);
        };
        while options != 0 {
            let p = options.trailing_zeros() as usize;
            if let Some(found) = self.extend(chosen | (1u64 << p), allowed & self.compat[p]) {
                return Some(found);
            }
            options &= options - 1;
        }
        None
    }

    fn to_correspondence(&self, bits: u64) -> Result<Correspondence> {
        let pairs = (0..self.nx * self.ny)
            .filter(|p| bits & (1u64 << p) != 0)
            .map(|p| (p / self.ny, p % self.ny))
            .collect();
        Correspondence::new(self.nx, self.ny, pairs)
    }
}

/// Every value a correspondence distortion can take, sorted and unique.
fn candidate_distortions(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(dx.len().pow(2) * dy.len().pow(2));
    for a in 0..dx.len() {
        for b in a..dx.len() {
            for c in 0..dy.len() {
                for d in 0..dy.len() {
                    out.push(gap(dx.get(a, b), dy.get(c, d)));
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn check_cap(nx: usize, ny: usize) -> Result<()> {
    if nx == 0 || ny == 0 {
        return Err(Error::EmptyOperand("gh_exact needs nonempty spaces"));
    }
    if nx * ny > EXACT_CAP {
        return Err(Error::SizeCap(format!(
            "|X|·|Y| = {} exceeds {EXACT_CAP}",
            nx * ny
        )));
    }
    Ok(())
}

/// `d_GH(X, Y)` as half the least distortion over all correspondences.
pub fn gh_exact(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<GhEstimate> {
    solve_exact(dx, dy, None)
}

/// [`gh_exact`] over correspondences containing `(x0, y0)`.
pub fn gh_exact_pointed(
    dx: &DistanceMatrix,
    x0: usize,
    dy: &DistanceMatrix,
    y0: usize,
) -> Result<GhEstimate> {
    solve_exact(dx, dy, Some((x0, y0)))
}

fn solve_exact(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    forced: Option<(usize, usize)>,
) -> Result<GhEstimate> {
    let (nx, ny) = (dx.len(), dy.len());
    check_cap(nx, ny)?;
    if let Some((x, y)) = forced {
        if x >= nx {
            return Err(Error::UnknownPoint(x));
        }
        if y >= ny {
            return Err(Error::UnknownPoint(y));
        }
    }
    let forced_bits = forced.map_or(0, |(x, y)| 1u64 << (x * ny + y));
    let floor = 2.0 * diameter_bound(dx, dy);
    let candidates: Vec<f64> = candidate_distortions(dx, dy)
        .into_iter()
        .filter(|&t| t >= floor)
        .collect();

    let mut search = Search::new(nx, ny);
    // The full relation realizes the largest candidate.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    search.set_threshold(dx, dy, candidates[hi]);
    let mut best = search
        .solve(forced_bits)
        .expect("the full relation is always admissible");
    while lo < hi {
        let mid = (lo + hi) / 2;
        search.set_threshold(dx, dy, candidates[mid]);
        match search.solve(forced_bits) {
            Some(bits) => {
                best = bits;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let certificate = search.to_correspondence(best)?;
    let value = 0.5 * certificate.distortion(dx, dy)?;
    debug_assert_eq!(value, 0.5 * candidates[hi]);
    Ok(GhEstimate {
        lower: value,
        upper: value,
        certificate,
        mode: GhMode::Exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(a: f64) -> DistanceMatrix {
        DistanceMatrix::from_fn(2, |_, _| a)
    }

    #[test]
    fn two_point_spaces() {
        let g = gh_exact(&two_point(1.0), &two_point(2.0)).unwrap();
        assert_eq!(g.upper, 0.5);
        assert_eq!(g.lower, g.upper);
        assert_eq!(g.mode, GhMode::Exact);
    }

    #[test]
    fn point_against_diameter() {
        let one = DistanceMatrix::from_fn(1, |_, _| 0.0);
        let tri = DistanceMatrix::from_fn(3, |i, j| (i + j) as f64);
        assert_eq!(gh_exact(&one, &tri).unwrap().upper, 1.5);
    }

    #[test]
    fn size_cap() {
        let a = DistanceMatrix::from_fn(9, |_, _| 1.0);
        assert!(matches!(gh_exact(&a, &a), Err(Error::SizeCap(_))));
        let e = DistanceMatrix::from_fn(0, |_, _| 1.0);
        assert!(gh_exact(&e, &a).is_err());
    }

    #[test]
    fn infinite_distances() {
        let split = DistanceMatrix::from_fn(2, |_, _| f64::INFINITY);
        let joined = two_point(1.0);
        assert_eq!(gh_exact(&split, &split).unwrap().upper, 0.0);
        assert_eq!(gh_exact(&split, &joined).unwrap().upper, f64::INFINITY);
    }

    #[test]
    fn forced_pair_can_cost() {
        // Path 0-1-2 against itself with an end forced onto the middle.
        let p = DistanceMatrix::from_fn(3, |i, j| (j - i) as f64);
        assert_eq!(gh_exact_pointed(&p, 0, &p, 0).unwrap().upper, 0.0);
        assert!(gh_exact_pointed(&p, 0, &p, 1).unwrap().upper > 0.0);
    }
}
