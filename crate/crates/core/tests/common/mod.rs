#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Sub};

use lambdagen::analytic::Scalar;
use lambdagen::term::Term;

pub const ORDER: usize = 16;

/// Power series truncated after `z^ORDER`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series(pub [f64; ORDER + 1]);

impl Series {
    pub fn z() -> Self {
        let mut c = [0.0; ORDER + 1];
        c[1] = 1.0;
        Series(c)
    }

    pub fn coefficients(&self) -> Vec<u64> {
        self.0.iter().map(|c| c.round() as u64).collect()
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, o: Series) -> Series {
        Series(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        Series(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        Series(std::array::from_fn(|k| {
            (0..=k).map(|i| self.0[i] * o.0[k - i]).sum()
        }))
    }
}

impl Div for Series {
    type Output = Series;
    fn div(self, o: Series) -> Series {
        assert!(o.0[0] != 0.0);
        let mut q = [0.0; ORDER + 1];
        for k in 0..=ORDER {
            let acc: f64 = (0..k).map(|i| q[i] * o.0[k - i]).sum();
            q[k] = (self.0[k] - acc) / o.0[0];
        }
        Series(q)
    }
}

impl Scalar for Series {
    fn constant(c: f64) -> Self {
        let mut s = [0.0; ORDER + 1];
        s[0] = c;
        Series(s)
    }

    fn sqrt(self) -> Self {
        assert!(self.0[0] > 0.0);
        let mut r = [0.0; ORDER + 1];
        r[0] = self.0[0].sqrt();
        for k in 1..=ORDER {
            let acc: f64 = (1..k).map(|i| r[i] * r[k - i]).sum();
            r[k] = (self.0[k] - acc) / (2.0 * r[0]);
        }
        Series(r)
    }
}

/// Every term of the given unit size whose free indices are below `depth`
/// when `closed` is set, and every term at all otherwise. Built directly
/// from the grammar, without the library enumerator.
pub fn naive_terms(units: u32, depth: u32, closed: bool) -> Vec<Term> {
    let mut out = Vec::new();
    if !closed || units < depth {
        out.push(Term::Index(units));
    }
    if units >= 1 {
        for body in naive_terms(units - 1, depth + 1, closed) {
            out.push(Term::abs(body));
        }
    }
    if units >= 2 {
        for k in 0..=units - 2 {
            let funs = naive_terms(k, depth, closed);
            let args = naive_terms(units - 2 - k, depth, closed);
            for f in &funs {
                for a in &args {
                    out.push(Term::app(f.clone(), a.clone()));
                }
            }
        }
    }
    out
}
