//! Point counting on elliptic curves over prime fields.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::arith::{inv_mod, sqrt_mod};

/// Integral Weierstrass model `y² + a1xy + a3y = x³ + a2x² + a4x + a6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weierstrass {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

impl Weierstrass {
    pub const fn new(a: [i64; 5]) -> Self {
        Weierstrass {
            a1: a[0],
            a2: a[1],
            a3: a[2],
            a4: a[3],
            a6: a[4],
        }
    }

    pub fn b2(&self) -> i128 {
        (self.a1 * self.a1 + 4 * self.a2) as i128
    }
    pub fn b4(&self) -> i128 {
        (2 * self.a4 + self.a1 * self.a3) as i128
    }
    pub fn b6(&self) -> i128 {
        (self.a3 * self.a3 + 4 * self.a6) as i128
    }
    pub fn b8(&self) -> i128 {
        let (a1, a2, a3, a4, a6) = (
            self.a1 as i128,
            self.a2 as i128,
            self.a3 as i128,
            self.a4 as i128,
            self.a6 as i128,
        );
        a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    }
    pub fn c4(&self) -> i128 {
        let b2 = self.b2();
        b2 * b2 - 24 * self.b4()
    }
    pub fn c6(&self) -> i128 {
        let (b2, b4, b6) = (self.b2(), self.b4(), self.b6());
        -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6
    }
    pub fn discriminant(&self) -> i128 {
        let (b2, b4, b6, b8) = (self.b2(), self.b4(), self.b6(), self.b8());
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    /// Number of projective points of the reduction mod `p`, singular point
    /// included.
    pub fn count_points_naive(&self, p: u64) -> u64 {
        let m = |v: i128| v.rem_euclid(p as i128) as u64;
        if p == 2 {
            let (a1, a2, a3, a4, a6) = (
                m(self.a1 as i128),
                m(self.a2 as i128),
                m(self.a3 as i128),
                m(self.a4 as i128),
                m(self.a6 as i128),
            );
            let mut count = 1;
            for x in 0..2u64 {
                for y in 0..2u64 {
                    let lhs = y * y + a1 * x * y + a3 * y;
                    let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                    if (lhs + rhs) % 2 == 0 {
                        count += 1;
                    }
                }
            }
            return count;
        }
        // (2y + a1x + a3)² = 4x³ + b2x² + 2b4x + b6
        let mut chi = vec![-1i8; p as usize];
        chi[0] = 0;
        for t in 1..p {
            chi[(t * t % p) as usize] = 1;
        }
        let (b2, b4, b6) = (m(self.b2()), m(2 * self.b4()), m(self.b6()));
        let mut count: i64 = 1;
        for x in 0..p {
            let d = ((4 * x % p * x % p + b2 * x) % p * x + b4 * x + b6) % p;
            count += 1 + chi[d as usize] as i64;
        }
        count as u64
    }

    /// `a_p = p + 1 − #E(F_p)`.
    ///
    /// Baby-step giant-step in the Hasse interval for good `p ≥ 1000`, naive
    /// counting otherwise (including every bad prime).
    pub fn ap(&self, p: u64) -> i64 {
        let disc_divisible = self.discriminant() % p as i128 == 0;
        let n = if p < BSGS_THRESHOLD || disc_divisible {
            self.count_points_naive(p)
        } else {
            let c4 = self.c4().rem_euclid(p as i128) as u64;
            let c6 = self.c6().rem_euclid(p as i128) as u64;
            let a = (p - 27 * c4 % p) % p;
            let b = (p - 54 * c6 % p) % p;
            ShortCurve { a, b, p }
                .order()
                .unwrap_or_else(|| self.count_points_naive(p))
        };
        p as i64 + 1 - n as i64
    }
}

const BSGS_THRESHOLD: u64 = 1000;

type Pt = Option<(u64, u64)>;

/// `y² = x³ + ax + b` over `F_p`, `p ≥ 5`, non-singular.
#[derive(Debug, Clone, Copy)]
struct ShortCurve {
    a: u64,
    b: u64,
    p: u64,
}

impl ShortCurve {
    fn rhs(&self, x: u64) -> u64 {
        let p = self.p;
        ((x * x % p + self.a) % p * x + self.b) % p
    }

    fn neg(&self, pt: Pt) -> Pt {
        pt.map(|(x, y)| (x, (self.p - y) % self.p))
    }

    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        let (Some((x1, y1)), Some((x2, y2))) = (u, v) else {
            return u.or(v);
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            let num = (3 * x1 % p * x1 + self.a) % p;
            num * inv_mod(2 * y1 % p, p)? % p
        } else {
            let num = (y2 + p - y1) % p;
            num * inv_mod((x2 + p - x1) % p, p)? % p
        };
        let x3 = (lambda * lambda % p + 2 * p - x1 - x2) % p;
        let y3 = (lambda * ((x1 + p - x3) % p) % p + p - y1) % p;
        Some((x3, y3))
    }

    fn mul(&self, mut k: u64, pt: Pt) -> Pt {
        let mut acc = None;
        let mut base = pt;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// Some point with `y ≠ 0`, scanning `x` from `start`.
    fn point_from(&self, start: &mut u64) -> Option<Pt> {
        while *start < self.p {
            let x = *start;
            *start += 1;
            let r = self.rhs(x);
            if r == 0 {
                continue;
            }
            if let Some(y) = sqrt_mod(r, self.p) {
                return Some(Some((x, y)));
            }
        }
        None
    }

    /// All `k ∈ [lo, hi]` with `k·P = O`.
    fn annihilators(&self, pt: Pt, lo: u64, hi: u64) -> Vec<u64> {
        let width = hi - lo + 1;
        let m = ((width as f64).sqrt().ceil() as u64).max(1);
        let mut baby: HashMap<(u64, u64), u64> = HashMap::with_capacity(m as usize);
        let mut cur = pt;
        for j in 1..=m {
            match cur {
                None => {
                    // ord(P) = j is small: every multiple of j qualifies.
                    let first = lo.div_ceil(j) * j;
                    return (first..=hi).step_by(j as usize).collect();
                }
                Some(c) => {
                    baby.entry(c).or_insert(j);
                }
            }
            cur = self.add(cur, pt);
        }
        let giant = self.mul(m, pt);
        let mut g = self.mul(lo, pt);
        let mut out = Vec::new();
        let mut i = 0;
        while lo + i * m <= hi {
            let base = lo + i * m;
            match g {
                None => out.push(base),
                Some(_) => {
                    if let Some(c) = self.neg(g) {
                        if let Some(&j) = baby.get(&c) {
                            if base + j <= hi {
                                out.push(base + j);
                            }
                        }
                    }
                }
            }
            g = self.add(g, giant);
            i += 1;
        }
        out
    }

    /// `#E(F_p)`, or `None` when the group structure leaves it ambiguous.
    fn order(&self) -> Option<u64> {
        let p = self.p;
        let r = {
            let mut r = (4.0 * p as f64).sqrt() as u64;
            while r * r > 4 * p {
                r -= 1;
            }
            while (r + 1) * (r + 1) <= 4 * p {
                r += 1;
            }
            r
        };
        let (lo, hi) = (p + 1 - r, p + 1 + r);
        let mut nonresidue = 2;
        while sqrt_mod(nonresidue, p).is_some() {
            nonresidue += 1;
        }
        let g2 = nonresidue * nonresidue % p;
        let twist = ShortCurve {
            a: self.a * g2 % p,
            b: self.b * (g2 * nonresidue % p) % p,
            p,
        };
        let mut cands: Vec<u64> = (lo..=hi).collect();
        let (mut xs, mut xt) = (0u64, 0u64);
        for _ in 0..12 {
            if let Some(pt) = self.point_from(&mut xs) {
                let ok = self.annihilators(pt, lo, hi);
                cands.retain(|c| ok.binary_search(c).is_ok());
            }
            if cands.len() == 1 {
                return Some(cands[0]);
            }
            if let Some(pt) = twist.point_from(&mut xt) {
                let ok = twist.annihilators(pt, lo, hi);
                cands.retain(|c| ok.binary_search(&(2 * p + 2 - c)).is_ok());
            }
            if cands.len() == 1 {
                return Some(cands[0]);
            }
        }
        None
    }
}
