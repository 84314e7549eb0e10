//! Linear Bell-type functionals on the sixteen probabilities.

use serde::{Deserialize, Serialize};

use crate::probability::{OutcomeTable, ProbabilityVector};

/// `f(p) = sum_k c_k p_k`; positive values rule out a local model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    pub coefficients: [f64; 16],
}

/// Relabeling of settings and outcomes that maps local models to local models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Relabeling {
    pub swap_alice: bool,
    pub swap_bob: bool,
    /// Flip + and 0 for Alice's setting a, a'.
    pub flip_alice: [bool; 2],
    pub flip_bob: [bool; 2],
}

impl Relabeling {
    fn map_cell(&self, k: usize) -> usize {
        let (s, o) = (k / 4, k % 4);
        let (i, j) = (s / 2, s % 2);
        // outcome bits: 1 means "+", as in ++ = (1, 1)
        let (alpha, beta) = (1 - o / 2, 1 - o % 2);
        let alpha = alpha ^ self.flip_alice[i] as usize;
        let beta = beta ^ self.flip_bob[j] as usize;
        let i = i ^ self.swap_alice as usize;
        let j = j ^ self.swap_bob as usize;
        4 * (2 * i + j) + 2 * (1 - alpha) + (1 - beta)
    }

    pub fn all() -> Vec<Relabeling> {
        let mut out = Vec::with_capacity(64);
        for bits in 0..64u32 {
            let b = |n: u32| bits >> n & 1 == 1;
            out.push(Relabeling {
                swap_alice: b(0),
                swap_bob: b(1),
                flip_alice: [b(2), b(3)],
                flip_bob: [b(4), b(5)],
            });
        }
        out
    }
}

impl BellFunctional {
    /// `p(ab)++ - p(ab')+0 - p(a'b)0+ - p(a'b')++`.
    pub fn eberhard() -> Self {
        let mut c = [0.0; 16];
        c[0] = 1.0;
        c[5] = -1.0;
        c[10] = -1.0;
        c[12] = -1.0;
        Self { coefficients: c }
    }

    pub fn evaluate(&self, p: &[f64; 16]) -> f64 {
        self.coefficients.iter().zip(p).map(|(c, x)| c * x).sum()
    }

    /// The functional evaluated on relabeled probabilities.
    pub fn relabeled(&self, r: &Relabeling) -> Self {
        let mut c = [0.0; 16];
        for k in 0..16 {
            c[r.map_cell(k)] = self.coefficients[k];
        }
        Self { coefficients: c }
    }

    /// All distinct relabelings of the Eberhard functional.
    ///
    /// Together with positivity they cut out the local polytope.
    pub fn family() -> Vec<BellFunctional> {
        let base = Self::eberhard();
        let mut out: Vec<BellFunctional> = Vec::new();
        for r in Relabeling::all() {
            let f = base.relabeled(&r);
            if !out.iter().any(|g| equivalent(g, &f)) {
                out.push(f);
            }
        }
        out
    }

    /// Largest value over the family, with the maximizing member.
    pub fn strongest(p: &OutcomeTable) -> (f64, BellFunctional) {
        Self::family()
            .into_iter()
            .map(|f| (f.evaluate(p.values()), f))
            .fold((f64::NEG_INFINITY, Self::eberhard()), |a, b| if b.0 > a.0 { b } else { a })
    }
}

/// Affine coefficients of `f` on the no-signaling set in reduced coordinates
/// (p_a, p_a', p_b, p_b', four p_00), constant term last.
fn reduced_form(f: &BellFunctional) -> [f64; 9] {
    let c = &f.coefficients;
    let mut g = [0.0; 9];
    for s in 0..4 {
        let (ia, ib) = (s / 2, 2 + s % 2);
        let (pp, p0, zp, zz) = (c[4 * s], c[4 * s + 1], c[4 * s + 2], c[4 * s + 3]);
        g[ia] += pp - zp;
        g[ib] += pp - p0;
        g[4 + s] += pp - p0 - zp + zz;
        g[8] += -pp + p0 + zp;
    }
    g
}

/// Two functionals that agree on every no-signaling point.
fn equivalent(f: &BellFunctional, g: &BellFunctional) -> bool {
    reduced_form(f)
        .iter()
        .zip(reduced_form(g))
        .all(|(x, y)| (x - y).abs() < 1e-12)
}

/// The Eberhard-type violation `p(ab)++ - p(ab')+0 - p(a'b)0+ - p(a'b')++`.
pub fn bell_violation(p: &ProbabilityVector) -> f64 {
    BellFunctional::eberhard().evaluate(p.values())
}
