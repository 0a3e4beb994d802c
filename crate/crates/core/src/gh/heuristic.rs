use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gh::correspondence::gap;
use crate::gh::{diameter_bound, Correspondence, GhEstimate, GhMode};
use crate::metric::DistanceMatrix;

/// A correspondence stored as a map each way: pairs `(x, f[x])` and
/// `(g[y], y)`.
#[derive(Debug, Clone)]
struct Matching {
    f: Vec<usize>,
    g: Vec<usize>,
}

impl Matching {
    fn pair(&self, i: usize) -> (usize, usize) {
        let nx = self.f.len();
        if i < nx {
            (i, self.f[i])
        } else {
            (self.g[i - nx], i - nx)
        }
    }

    fn len(&self) -> usize {
        self.f.len() + self.g.len()
    }

    /// Largest gap and one pair of pair indices attaining it.
    fn worst(&self, dx: &DistanceMatrix, dy: &DistanceMatrix) -> (f64, usize, usize) {
        let mut best = (0.0, 0, 0);
        for i in 0..self.len() {
            let (a, c) = self.pair(i);
            for j in i + 1..self.len() {
                let (b, d) = self.pair(j);
                let g = gap(dx.get(a, b), dy.get(c, d));
                if g > best.0 {
                    best = (g, i, j);
                }
            }
        }
        best
    }

    /// Largest gap between pair `skip` replaced by `(a, c)` and the rest.
    fn cost_of(&self, dx: &DistanceMatrix, dy: &DistanceMatrix, skip: usize, a: usize, c: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            if j != skip {
                let (b, d) = self.pair(j);
                worst = worst.max(gap(dx.get(a, b), dy.get(c, d)));
            }
        }
        worst
    }

    /// Moves the free end of pair `i` to the value that minimizes its own
    /// worst gap, if that beats `current`.
    fn improve(&mut self, dx: &DistanceMatrix, dy: &DistanceMatrix, i: usize, current: f64) -> bool {
        let nx = self.f.len();
        let (best_val, best_cost) = if i < nx {
            (0..self.g.len())
                .map(|y| (y, self.cost_of(dx, dy, i, i, y)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("Y is nonempty")
        } else {
            let y = i - nx;
            (0..nx)
                .map(|x| (x, self.cost_of(dx, dy, i, x, y)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("X is nonempty")
        };
        if best_cost < current {
            if i < nx {
                self.f[i] = best_val;
            } else {
                self.g[i - nx] = best_val;
            }
            true
        } else {
            false
        }
    }

    /// Worst-pair descent; returns the final distortion.
    fn descend(&mut self, dx: &DistanceMatrix, dy: &DistanceMatrix, frozen: &[usize], max_steps: usize) -> f64 {
        for _ in 0..max_steps {
            let (d, i, j) = self.worst(dx, dy);
            if d == 0.0 {
                return 0.0;
            }
            let moved = [i, j]
                .into_iter()
                .filter(|p| !frozen.contains(p))
                .any(|p| self.improve(dx, dy, p, d));
            if !moved {
                return d;
            }
        }
        self.worst(dx, dy).0
    }

    fn to_correspondence(&self) -> Result<Correspondence> {
        let pairs = (0..self.len()).map(|i| self.pair(i)).collect();
        Correspondence::new(self.f.len(), self.g.len(), pairs)
    }
}

fn eccentricities(d: &DistanceMatrix) -> Vec<f64> {
    (0..d.len())
        .map(|i| d.row(i).iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max))
        .collect()
}

fn farthest(d: &DistanceMatrix, a: usize) -> usize {
    (0..d.len())
        .filter(|&j| d.get(a, j).is_finite())
        .max_by(|&i, &j| d.get(a, i).total_cmp(&d.get(a, j)).then(j.cmp(&i)))
        .unwrap_or(a)
}

/// Index-proportional matching (exact for two samplings of one parameter
/// domain listed in the same order), rotated so that `x0` meets `y0`.
fn index_seed(nx: usize, ny: usize, x0: usize, y0: usize) -> Matching {
    Matching {
        f: (0..nx).map(|x| ((x + nx - x0) * ny / nx + y0) % ny).collect(),
        g: (0..ny).map(|y| ((y + ny - y0) * nx / ny + x0) % nx).collect(),
    }
}

/// Match points by their distance profile to two anchor pairs.
fn anchor_seed(dx: &DistanceMatrix, dy: &DistanceMatrix, anchors: [(usize, usize); 2]) -> Matching {
    let score = |x: usize, y: usize| {
        anchors
            .iter()
            .map(|&(a, b)| gap(dx.get(a, x), dy.get(b, y)))
            .sum::<f64>()
    };
    let f = (0..dx.len())
        .map(|x| {
            (0..dy.len())
                .min_by(|&p, &q| score(x, p).total_cmp(&score(x, q)))
                .expect("Y is nonempty")
        })
        .collect();
    let g = (0..dy.len())
        .map(|y| {
            (0..dx.len())
                .min_by(|&p, &q| score(p, y).total_cmp(&score(q, y)))
                .expect("X is nonempty")
        })
        .collect();
    Matching { f, g }
}

fn run(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    effort: usize,
    seed: u64,
    forced: Option<(usize, usize)>,
) -> Result<GhEstimate> {
    let (nx, ny) = (dx.len(), dy.len());
    if nx == 0 || ny == 0 {
        return Err(Error::EmptyOperand("gh_upper needs nonempty spaces"));
    }
    if let Some((x, y)) = forced {
        if x >= nx {
            return Err(Error::UnknownPoint(x));
        }
        if y >= ny {
            return Err(Error::UnknownPoint(y));
        }
    }
    let ecc_x = eccentricities(dx);
    let ecc_y = eccentricities(dy);
    let frozen: Vec<usize> = forced.map_or(Vec::new(), |(x, y)| vec![x, nx + y]);
    let max_steps = 20 * (nx + ny);

    let restarts = effort.max(1) + 1;
    let results: Vec<(f64, Matching)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let mut m = if r == 0 {
                let (x0, y0) = forced.unwrap_or((0, 0));
                index_seed(nx, ny, x0, y0)
            } else {
                let (a, b) = match forced {
                    Some(p) => p,
                    None => {
                        let a = if r == 1 {
                            (0..nx).max_by(|&i, &j| ecc_x[i].total_cmp(&ecc_x[j]).then(j.cmp(&i))).unwrap()
                        } else {
                            rand::Rng::gen_range(&mut rng, 0..nx)
                        };
                        let mut ys: Vec<usize> = (0..ny).collect();
                        ys.sort_by(|&p, &q| {
                            gap(ecc_y[p], ecc_x[a]).total_cmp(&gap(ecc_y[q], ecc_x[a])).then(p.cmp(&q))
                        });
                        let pool = &ys[..ys.len().min(4)];
                        (a, if r == 1 { pool[0] } else { *pool.choose(&mut rng).unwrap() })
                    }
                };
                // Odd restarts pair the farthest points; even ones pick a
                // random second anchor and one of its best-matching partners.
                let (a2, b2) = if r % 2 == 1 {
                    (farthest(dx, a), farthest(dy, b))
                } else {
                    let a2 = rand::Rng::gen_range(&mut rng, 0..nx);
                    let target = dx.get(a, a2);
                    let mut ys: Vec<usize> = (0..ny).collect();
                    ys.sort_by(|&p, &q| gap(dy.get(b, p), target).total_cmp(&gap(dy.get(b, q), target)).then(p.cmp(&q)));
                    (a2, *ys[..ys.len().min(2)].choose(&mut rng).unwrap())
                };
                anchor_seed(dx, dy, [(a, b), (a2, b2)])
            };
            if let Some((x, y)) = forced {
                m.f[x] = y;
                m.g[y] = x;
            }
            let d = m.descend(dx, dy, &frozen, max_steps);
            (d, m)
        })
        .collect();

    let (best_d, best) = results
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    let certificate = best.to_correspondence()?;
    debug_assert_eq!(certificate.distortion(dx, dy)?, best_d);
    let upper = 0.5 * best_d;
    let lower = if forced.is_some() {
        0.0
    } else {
        diameter_bound(dx, dy).min(upper)
    };
    Ok(GhEstimate {
        lower,
        upper,
        certificate,
        mode: GhMode::Heuristic,
    })
}

/// Upper bound on `d_GH` from the best of `effort + 1` seeded matchings,
/// each refined by moving endpoints of the worst pair of pairs.
pub fn gh_upper(dx: &DistanceMatrix, dy: &DistanceMatrix, effort: usize, seed: u64) -> Result<GhEstimate> {
    run(dx, dy, effort, seed, None)
}

/// [`gh_upper`] with `(x0, y0)` kept in every correspondence.
pub fn gh_upper_pointed(
    dx: &DistanceMatrix,
    x0: usize,
    dy: &DistanceMatrix,
    y0: usize,
    effort: usize,
    seed: u64,
) -> Result<GhEstimate> {
    run(dx, dy, effort, seed, Some((x0, y0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, length: f64) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |i, j| {
            let k = (j - i).min(n - (j - i));
            k as f64 * length / n as f64
        })
    }

    #[test]
    fn identical_spaces() {
        let c = circle(30, 2.0);
        for effort in [1, 4] {
            assert_eq!(gh_upper(&c, &c, effort, 7).unwrap().upper, 0.0);
        }
    }

    #[test]
    fn scaled_circle() {
        let g = gh_upper(&circle(200, 2.0), &circle(200, 2.2), 2, 1).unwrap();
        assert!(g.upper <= 0.06, "{}", g.upper);
        assert!(g.lower <= g.upper);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = circle(40, 2.0);
        let b = DistanceMatrix::from_fn(25, |i, j| ((j - i) as f64).sqrt());
        let g1 = gh_upper(&a, &b, 3, 11).unwrap();
        let g2 = gh_upper(&a, &b, 3, 11).unwrap();
        assert_eq!(g1.upper, g2.upper);
        assert_eq!(g1.certificate, g2.certificate);
    }

    #[test]
    fn pointed_keeps_basepoints() {
        let a = circle(20, 2.0);
        let g = gh_upper_pointed(&a, 3, &a, 9, 6, 0).unwrap();
        assert!(g.certificate.pairs().contains(&(3, 9)));
        assert_eq!(g.upper, 0.0);
    }
}
