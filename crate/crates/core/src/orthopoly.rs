//! Univariate orthonormal polynomial families and their three-term
//! recurrences.
//!
//! Both families are symmetric, so the recurrence has no diagonal term:
//!
//! ```text
//! y P_{j-1}(y) = c_j P_j(y) + c_{j-1} P_{j-2}(y),   P_0 = 1, P_{-1} = 0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolyFamily {
    /// Orthonormal w.r.t. the uniform density 1/2 on [-1, 1].
    LegendreUniform,
    /// Orthonormal w.r.t. the standard Gaussian density.
    HermiteGaussian,
}

impl PolyFamily {
    /// Recurrence coefficient `c_j` for `j >= 1`.
    pub fn recurrence_c(self, j: u32) -> Result<f64> {
        if j == 0 {
            return Err(Error::InvalidConfig(
                "recurrence coefficient index must be >= 1".into(),
            ));
        }
        Ok(self.c_unchecked(j))
    }

    #[inline]
    pub(crate) fn c_unchecked(self, j: u32) -> f64 {
        let j = j as f64;
        match self {
            PolyFamily::LegendreUniform => j / (4.0 * j * j - 1.0).sqrt(),
            PolyFamily::HermiteGaussian => j.sqrt(),
        }
    }

    /// `P_j(y)` by forward recurrence.
    pub fn evaluate(self, j: u32, y: f64) -> f64 {
        let mut prev = 0.0;
        let mut cur = 1.0;
        for n in 1..=j {
            let c_n = self.c_unchecked(n);
            let c_prev = if n > 1 { self.c_unchecked(n - 1) } else { 0.0 };
            let next = (y * cur - c_prev * prev) / c_n;
            prev = cur;
            cur = next;
        }
        cur
    }
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// `⟨P_i P_j, P_l⟩` for the orthonormal Hermite family.
///
/// Closed form: `sqrt(i! j! l!) / ((s-i)! (s-j)! (s-l)!)` with `2s = i+j+l`,
/// zero unless `i+j+l` is even and the triangle inequalities hold.
pub fn hermite_triple(i: u32, j: u32, l: u32) -> f64 {
    let total = i + j + l;
    if total % 2 == 1 {
        return 0.0;
    }
    let s = total / 2;
    if s < i || s < j || s < l {
        return 0.0;
    }
    let log = 0.5 * (ln_factorial(i) + ln_factorial(j) + ln_factorial(l))
        - ln_factorial(s - i)
        - ln_factorial(s - j)
        - ln_factorial(s - l);
    log.exp()
}
