//! Model parameters for the symmetric block model and the regime map.
//!
//! The block model is parameterized by `(n, q, a, b)`: `n` vertices, `q`
//! communities, within-community edge probability `a/n` and cross-community
//! probability `b/n`. Everything else (average degree, signal strength, the
//! dense-corrected quantities used by the low-degree bounds) is derived.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub q: usize,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    pub fn new(n: usize, q: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        if q < 1 {
            return Err(Error::InvalidParams("q must be at least 1".into()));
        }
        let nf = n as f64;
        for (name, r) in [("a", a), ("b", b)] {
            if !r.is_finite() || r < 0.0 || r / nf > 1.0 + 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "{name} = {r} gives edge probability outside [0, 1] for n = {n}"
                )));
            }
        }
        Ok(Self { n, q, a, b })
    }

    /// Builds parameters from average degree `d` and signal strength `lambda`.
    pub fn from_degree(n: usize, q: usize, d: f64, lambda: f64) -> Result<Self> {
        let (a, b) = invert_params(d, lambda, q)?;
        Self::new(n, q, a, b)
    }

    /// Average degree `(a + (q-1) b) / q`.
    pub fn d(&self) -> f64 {
        (self.a + (self.q as f64 - 1.0) * self.b) / self.q as f64
    }

    /// Signal strength `(a - b) / (a + (q-1) b)`; zero for the empty model.
    pub fn lambda(&self) -> f64 {
        let denom = self.a + (self.q as f64 - 1.0) * self.b;
        if denom == 0.0 {
            0.0
        } else {
            (self.a - self.b) / denom
        }
    }

    /// `s = d * lambda = (a - b) / q`.
    pub fn s(&self) -> f64 {
        (self.a - self.b) / self.q as f64
    }

    /// `ln q / ln n` for this instance.
    pub fn chi(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.q as f64).ln() / (self.n as f64).ln()
    }

    pub fn p_in(&self) -> f64 {
        self.a / self.n as f64
    }

    pub fn p_out(&self) -> f64 {
        self.b / self.n as f64
    }

    fn a_circ(&self) -> f64 {
        self.a * (1.0 - self.p_in())
    }

    fn b_circ(&self) -> f64 {
        self.b * (1.0 - self.p_out())
    }

    /// Adjusted average degree `(a(1-a/n) + (q-1) b(1-b/n)) / q`.
    pub fn d_circ(&self) -> f64 {
        (self.a_circ() + (self.q as f64 - 1.0) * self.b_circ()) / self.q as f64
    }

    /// Adjusted signal strength `(a - b) / (q d_circ)`.
    pub fn lambda_circ(&self) -> f64 {
        let dc = self.d_circ();
        if dc == 0.0 {
            0.0
        } else {
            (self.a - self.b) / (self.q as f64 * dc)
        }
    }

    pub fn xi(&self) -> f64 {
        let dc = self.d_circ();
        if dc == 0.0 {
            0.0
        } else {
            self.a_circ().min(self.b_circ()) / dc
        }
    }

    /// The Kesten–Stigum signal-to-noise ratio `d lambda^2`.
    pub fn ks_snr(&self) -> f64 {
        self.d() * self.lambda().powi(2)
    }

    /// The modified signal-to-noise ratio `d lambda^(1/chi)`.
    pub fn modified_snr(&self) -> f64 {
        let chi = self.chi();
        let lam = self.lambda();
        if chi <= 0.0 || lam <= 0.0 {
            return 0.0;
        }
        self.d() * lam.powf(1.0 / chi)
    }

    /// The dense-corrected SNR `d_circ lambda_circ^2` driving the low-degree bounds.
    pub fn circ_snr(&self) -> f64 {
        self.d_circ() * self.lambda_circ().powi(2)
    }
}

/// Inverts the `(a, b) -> (d, lambda)` reparametrization.
pub fn invert_params(d: f64, lambda: f64, q: usize) -> Result<(f64, f64)> {
    if q < 2 {
        return Err(Error::InvalidParams(format!("q must be at least 2, got {q}")));
    }
    let lower = -1.0 / (q as f64 - 1.0);
    if !(lambda >= lower - 1e-15 && lambda <= 1.0 + 1e-15) {
        return Err(Error::NegativeRate { lambda, q });
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidParams(format!("average degree must be >= 0, got {d}")));
    }
    let a = d * (1.0 + (q as f64 - 1.0) * lambda);
    let b = d * (1.0 - lambda);
    Ok((a.max(0.0), b.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    AboveKS,
    BelowKSAboveModified,
    BelowBoth,
    /// At least as many communities as vertices; the exponent chi is >= 1
    /// and the sparse-regime thresholds no longer apply.
    Supercritical,
}

impl RegimeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeKind::AboveKS => "AboveKS",
            RegimeKind::BelowKSAboveModified => "BelowKSAboveModified",
            RegimeKind::BelowBoth => "BelowBoth",
            RegimeKind::Supercritical => "Supercritical",
        }
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub ks_snr: f64,
    pub modified_snr: f64,
    /// `d lambda < 1`: weak recovery is information-theoretically impossible.
    pub it_impossible: bool,
}

pub fn classify_regime(p: &ModelParams) -> Regime {
    let ks_snr = p.ks_snr();
    let modified_snr = p.modified_snr();
    let kind = if p.q >= p.n {
        RegimeKind::Supercritical
    } else if ks_snr > 1.0 {
        RegimeKind::AboveKS
    } else if modified_snr > 1.0 {
        RegimeKind::BelowKSAboveModified
    } else {
        RegimeKind::BelowBoth
    };
    Regime {
        kind,
        ks_snr,
        modified_snr,
        it_impossible: p.s() < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() <= 1e-12 * y.abs().max(1.0)
    }

    #[test]
    fn invert_examples() {
        let (a, b) = invert_params(5.0, 0.6, 4).unwrap();
        assert!(close(a, 14.0) && close(b, 2.0), "{a} {b}");
        assert_eq!(invert_params(3.0, 0.0, 10).unwrap(), (3.0, 3.0));
        assert_eq!(invert_params(2.0, 1.0, 5).unwrap(), (10.0, 0.0));
    }

    #[test]
    fn invert_rejects_out_of_range_lambda() {
        assert!(matches!(invert_params(1.0, 1.5, 3), Err(Error::NegativeRate { .. })));
        assert!(matches!(invert_params(1.0, -0.6, 3), Err(Error::NegativeRate { .. })));
        assert!(invert_params(1.0, -0.5, 3).is_ok());
    }

    #[test]
    fn regime_examples() {
        let n = 1_000_000usize;
        let q = (n as f64).powf(0.3).round() as usize;
        let p = ModelParams::from_degree(n, q, 5.0, 0.5).unwrap();
        let r = classify_regime(&p);
        assert_eq!(r.kind, RegimeKind::AboveKS);
        assert!(close(r.ks_snr, 1.25));

        let q = (n as f64).powf(0.7).round() as usize;
        let p = ModelParams::from_degree(n, q, 4.0, 0.4).unwrap();
        let r = classify_regime(&p);
        assert_eq!(r.kind, RegimeKind::BelowKSAboveModified);
        assert!(close(r.ks_snr, 0.64));
        assert!((r.modified_snr - 4.0 * 0.4f64.powf(1.0 / 0.7)).abs() < 1e-4);
        assert!(r.modified_snr > 1.0);

        for q in [2usize, 50, 5000] {
            let p = ModelParams::from_degree(10_000, q, 1.0, 0.1).unwrap();
            assert_eq!(classify_regime(&p).kind, RegimeKind::BelowBoth);
        }
    }

    #[test]
    fn derived_quantities_sparse_limit() {
        let p = ModelParams::new(1_000_000_000, 10, 20.0, 2.0).unwrap();
        assert!((p.d_circ() - p.d()).abs() < 1e-6);
        assert!((p.lambda_circ() - p.lambda()).abs() < 1e-6);
        assert!((p.xi() - 2.0 / p.d()).abs() < 1e-6);
    }

    #[test]
    fn rejects_probabilities_above_one() {
        assert!(ModelParams::new(10, 2, 11.0, 1.0).is_err());
        assert!(ModelParams::new(10, 2, 10.0, 0.0).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip(a in 0.0f64..50.0, b in 0.0f64..50.0, q in 2usize..200) {
            prop_assume!(a + b > 1e-6);
            let p = ModelParams::new(1_000, q, a, b).unwrap();
            let (a2, b2) = invert_params(p.d(), p.lambda(), q).unwrap();
            prop_assert!((a2 - a).abs() <= 1e-12 * a.max(b).max(1.0));
            prop_assert!((b2 - b).abs() <= 1e-12 * a.max(b).max(1.0));
            let lam = p.lambda();
            prop_assert!(lam >= -1.0 / (q as f64 - 1.0) - 1e-12 && lam <= 1.0 + 1e-12);
        }
    }
}
