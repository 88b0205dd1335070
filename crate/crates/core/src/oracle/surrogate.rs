use crate::error::{Error, Result};

/// Point pairs `(k, l)` of the four-point weight, in table order.
pub(crate) const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Stand-in for the four-point spacelike weight `f₄` in one space and
/// one time dimension.
///
/// The three later time coordinates sit on a lattice of offsets
/// `o δ` from the first, `δ = τ / n_τ`, `|o| ≤ n_τ`. A tuple of offsets is
/// allowed when every pairwise time difference is at most `τ` and at most
/// the spatial separation of that pair. The normalization is the number of
/// allowed tuples for the given separations, so the sum of `δ³ f₄` over
/// the lattice is exactly one.
#[derive(Debug, Clone)]
pub struct SurrogateF4 {
    tau: f64,
    n_tau: usize,
    counts: Vec<u32>,
}

impl SurrogateF4 {
    pub fn new(tau: f64, n_tau: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParams(format!(
                "window half-width must be positive, got {tau}"
            )));
        }
        if !(1..=6).contains(&n_tau) {
            return Err(Error::InvalidParams(format!(
                "offset lattice needs 1..=6 steps, got {n_tau}"
            )));
        }
        let side = n_tau + 1;
        let mut counts = vec![0u32; side.pow(6)];
        let mut caps = [0usize; 6];
        for (index, slot) in counts.iter_mut().enumerate() {
            let mut rest = index;
            for c in caps.iter_mut().rev() {
                *c = rest % side;
                rest /= side;
            }
            *slot = count_allowed(n_tau, &caps);
        }
        Ok(SurrogateF4 { tau, n_tau, counts })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_tau(&self) -> usize {
        self.n_tau
    }

    /// Lattice spacing `δ` of the time offsets.
    pub fn delta(&self) -> f64 {
        self.tau / self.n_tau as f64
    }

    /// Largest allowed offset difference, in lattice steps, for points a
    /// distance `dy` apart.
    pub fn cap(&self, dy: f64) -> usize {
        let steps = (dy.abs() / self.delta() * (1.0 + 1e-12)).floor();
        if steps >= self.n_tau as f64 {
            self.n_tau
        } else {
            steps as usize
        }
    }

    fn index(&self, caps: &[usize; 6]) -> usize {
        caps.iter().fold(0, |acc, &c| acc * (self.n_tau + 1) + c)
    }

    /// Number of allowed offset tuples for the given pair caps.
    pub fn count(&self, caps: &[usize; 6]) -> u32 {
        self.counts[self.index(caps)]
    }

    /// Pair caps for four positions.
    pub fn caps(&self, y: &[f64; 4]) -> [usize; 6] {
        PAIRS.map(|(k, l)| self.cap(y[k] - y[l]))
    }

    /// `f₄` for offsets `(0, o₂, o₃, o₄)` and positions `y`.
    pub fn value(&self, offsets: [i64; 3], y: &[f64; 4]) -> f64 {
        let caps = self.caps(y);
        if !allowed(&[0, offsets[0], offsets[1], offsets[2]], &caps) {
            return 0.0;
        }
        1.0 / (self.delta().powi(3) * self.count(&caps) as f64)
    }

    /// `Σ δ³ f₄` over offsets whose times `t₁ + o δ` stay inside `window`.
    /// One for interior `t₁`; smaller within `τ` of an edge.
    pub fn marginal(&self, t1: f64, y: &[f64; 4], window: (f64, f64)) -> f64 {
        let n = self.n_tau as i64;
        let d = self.delta();
        let inside = |o: i64| {
            let t = t1 + o as f64 * d;
            t >= window.0 && t <= window.1
        };
        let mut sum = 0.0;
        for o2 in -n..=n {
            for o3 in -n..=n {
                for o4 in -n..=n {
                    if inside(o2) && inside(o3) && inside(o4) {
                        sum += d.powi(3) * self.value([o2, o3, o4], y);
                    }
                }
            }
        }
        sum
    }
}

pub(crate) fn allowed(o: &[i64; 4], caps: &[usize; 6]) -> bool {
    PAIRS
        .iter()
        .zip(caps)
        .all(|(&(k, l), &c)| (o[k] - o[l]).unsigned_abs() as usize <= c)
}

fn count_allowed(n_tau: usize, caps: &[usize; 6]) -> u32 {
    let n = n_tau as i64;
    let mut count = 0;
    for o2 in -n..=n {
        for o3 in -n..=n {
            for o4 in -n..=n {
                if allowed(&[0, o2, o3, o4], caps) {
                    count += 1;
                }
            }
        }
    }
    count
}
