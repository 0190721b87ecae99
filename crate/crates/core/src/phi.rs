//! Integrability gauges `φ` and their normalized companions
//! `Φ(t) = ∫_0^t θ(s) ds` with `θ(t) = min(1, sup_{s≥t} (φ(s)+1)/s)`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mag::Mag;
use crate::rational::{big_to_ratio, ratio};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PhiFamily {
    /// `φ(t) = t^(num/den)`.
    Power { num: u64, den: u64 },
    /// `φ(t) = ln(1 + t)`.
    Log1p,
    /// Piecewise-linear through `points`, continued by `c t^b` beyond the last point.
    Table { points: Vec<(f64, f64)>, c: f64, b: f64 },
    /// `φ ≡ 0`.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiSpec {
    pub family: PhiFamily,
    /// Use `φ` itself instead of `Φ` (only sound when `φ` is increasing and
    /// subadditive).
    pub raw: bool,
    /// `θ = 1` on `[0, t_star]`.
    pub t_star: f64,
    /// `s_k` with `k s θ(s) <= Φ(s)` for all `s >= s_k`, `k = 1, 2, 3`.
    pub thresholds: [f64; 3],
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f(lo) < 0 <= f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

impl PhiFamily {
    pub fn parse(s: &str) -> Result<PhiFamily> {
        let s = s.trim();
        if s == "log1p" {
            return Ok(PhiFamily::Log1p);
        }
        if s == "zero" || s == "0" {
            return Ok(PhiFamily::Zero);
        }
        if let Some(rest) = s.strip_prefix("power:").or_else(|| s.strip_prefix("t^")) {
            let (n, d) = rest
                .split_once('/')
                .ok_or_else(|| Error::Input(format!("power exponent must be p/q, got {rest:?}")))?;
            let num: u64 = n.trim().parse().map_err(|_| Error::Input(format!("bad exponent {rest:?}")))?;
            let den: u64 = d.trim().parse().map_err(|_| Error::Input(format!("bad exponent {rest:?}")))?;
            return Ok(PhiFamily::Power { num, den });
        }
        Err(Error::Input(format!("unknown φ family {s:?} (use t^p/q, log1p or zero)")))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PhiFamily::Power { num, den } => t.powf(*num as f64 / *den as f64),
            PhiFamily::Log1p => t.ln_1p(),
            PhiFamily::Zero => 0.0,
            PhiFamily::Table { points, c, b } => {
                let last = points.last().expect("non-empty table");
                if t >= last.0 {
                    return c * t.powf(*b);
                }
                let k = points.partition_point(|p| p.0 <= t);
                if k == 0 {
                    return points[0].1 * t / points[0].0.max(f64::MIN_POSITIVE);
                }
                let (a, bp) = (points[k - 1], points[k]);
                a.1 + (bp.1 - a.1) * (t - a.0) / (bp.0 - a.0)
            }
        }
    }
}

/// Normalize `φ` to `Φ`: increasing, subadditive, `Φ(0) = 0`, `Φ ≥ φ` far out.
pub fn phi_normalize(family: PhiFamily) -> Result<PhiSpec> {
    let t_star = match &family {
        PhiFamily::Power { num, den } => {
            if *den == 0 || *num == 0 || 3 * num >= *den {
                return Err(Error::Input(format!(
                    "power exponent {num}/{den} must lie in (0, 1/3)"
                )));
            }
            let a = *num as f64 / *den as f64;
            bisect(1.0, 16.0, |t| t - t.powf(a) - 1.0)
        }
        PhiFamily::Log1p => bisect(1.0, 16.0, |t| t - t.ln_1p() - 1.0),
        PhiFamily::Zero => 1.0,
        PhiFamily::Table { points, c, b } => {
            if points.is_empty() || points.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Input("φ table needs strictly increasing abscissae".into()));
            }
            if !(*b < 1.0 / 3.0) || *c < 0.0 {
                return Err(Error::Input(format!(
                    "φ table tail c t^b needs c >= 0 and b < 1/3 (got c={c}, b={b})"
                )));
            }
            if points.iter().any(|p| p.0 <= 0.0 || p.1 < 0.0) {
                return Err(Error::Input("φ table points must have t > 0 and φ >= 0".into()));
            }
            let tmp = PhiSpec {
                family: family.clone(),
                raw: false,
                t_star: 0.0,
                thresholds: [0.0; 3],
            };
            bisect(1.0, 1e12, |t| if tmp.theta_sup(t) < 1.0 { 1.0 } else { -1.0 })
        }
    };
    let mut spec = PhiSpec {
        family,
        raw: false,
        t_star,
        thresholds: [0.0; 3],
    };
    for k in 1..=3 {
        let kf = k as f64;
        let g = |s: f64| spec.eval(s) - kf * s * spec.theta(s);
        // g is increasing beyond its root for the built-in families
        let mut hi = t_star.max(1.0);
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Input("no monotonicity threshold for φ".into()));
            }
        }
        let root = if g(t_star) >= 0.0 { t_star } else { bisect(t_star, hi, g) };
        let floor = match spec.family {
            // beyond e^2 the log1p derivative condition is automatic
            PhiFamily::Log1p => 7.0,
            _ => 0.0,
        };
        spec.thresholds[k - 1] = (root * 1.01).max(floor);
    }
    Ok(spec)
}

impl PhiSpec {
    pub fn power(num: u64, den: u64) -> Result<PhiSpec> {
        phi_normalize(PhiFamily::Power { num, den })
    }

    pub fn quarter() -> PhiSpec {
        PhiSpec::power(1, 4).expect("1/4 < 1/3")
    }

    pub fn log1p() -> PhiSpec {
        phi_normalize(PhiFamily::Log1p).expect("log1p is admissible")
    }

    pub fn zero() -> PhiSpec {
        PhiSpec {
            family: PhiFamily::Zero,
            raw: true,
            t_star: 0.0,
            thresholds: [0.0; 3],
        }
    }

    /// Use `φ` directly (increasing, concave, `φ(0) = 0`).
    pub fn raw(family: PhiFamily) -> Result<PhiSpec> {
        match family {
            PhiFamily::Power { num, den } if num > 0 && num <= den => {}
            PhiFamily::Log1p | PhiFamily::Zero => {}
            _ => return Err(Error::Input("raw φ must be increasing and subadditive".into())),
        }
        Ok(PhiSpec {
            family,
            raw: true,
            t_star: 0.0,
            thresholds: [0.0; 3],
        })
    }

    /// Whether certified upper bounds of `Φ` at huge arguments are available.
    pub fn is_certified(&self) -> bool {
        !matches!(self.family, PhiFamily::Table { .. })
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.family.eval(t)
    }

    fn theta_sup(&self, t: f64) -> f64 {
        match &self.family {
            PhiFamily::Table { points, c, b } => {
                let val = |s: f64| (self.family.eval(s) + 1.0) / s;
                let mut best = val(t);
                for p in points.iter().filter(|p| p.0 > t) {
                    best = best.max(val(p.0));
                }
                let _ = (c, b);
                best
            }
            _ => (self.family.eval(t) + 1.0) / t,
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            self.theta_sup(t).min(1.0)
        }
    }

    /// `Φ(t)` (or `φ(t)` in raw mode).
    pub fn eval(&self, t: f64) -> f64 {
        if self.raw {
            return self.family.eval(t);
        }
        if t <= self.t_star {
            return t.max(0.0);
        }
        let ts = self.t_star;
        match &self.family {
            PhiFamily::Power { num, den } => {
                let a = *num as f64 / *den as f64;
                ts + (t.powf(a) - ts.powf(a)) / a + (t / ts).ln()
            }
            PhiFamily::Zero => 0.0,
            _ => {
                // integrate in log scale: θ(e^u) e^u du
                let (u0, u1) = (ts.ln(), t.ln());
                let n = 2 * (((u1 - u0) * 64.0).ceil() as usize).clamp(8, 1 << 16);
                ts + simpson(|u| self.theta(u.exp()) * u.exp(), u0, u1, n)
            }
        }
    }

    /// Certified enclosure of `Φ(t)` (upper end sound; lower end zero).
    pub fn upper(&self, t: &Mag) -> Mag {
        let hi = match (&self.family, self.raw) {
            (PhiFamily::Zero, _) => Mag::ZERO,
            (PhiFamily::Power { num, den }, true) => t.pow_ratio(*num, *den),
            (PhiFamily::Log1p, true) => t.add_u64(1).ln(),
            (PhiFamily::Power { num, den }, false) => {
                // Φ(t) <= min(t, t^a/a + ln t) for t >= 1
                let tail = t
                    .pow_ratio(*num, *den)
                    .mul(&Mag::from_u64(*den))
                    .div(&Mag::from_u64(*num))
                    .add(&t.ln());
                if t.hi <= Mag::ONE.lo {
                    *t
                } else {
                    t.min(&tail)
                }
            }
            (PhiFamily::Log1p, false) => {
                // Φ(t) <= t* + (ln t + ln 2 + 1) ln(t / t*) with t* < 3
                let ts = Mag::from_f64(3.0);
                let tail = ts.add(&t.ln().add(&Mag::from_f64(1.7)).mul(&t.ln()));
                t.min(&tail)
            }
            (PhiFamily::Table { .. }, _) => {
                panic!("table gauges have no certified evaluation at huge arguments")
            }
        };
        Mag {
            lo: Mag::ZERO.lo,
            hi: hi.hi,
        }
    }

    /// Exact rational upper bound of `Φ(t)` at an integer, via integer roots
    /// and `ln t < 0.7 · bits(t)`.
    pub fn upper_exact(&self, t: &BigUint) -> Option<BigRational> {
        let tr = big_to_ratio(t);
        let ln_up = || ratio(7 * t.bits() as i64 + 10, 10);
        Some(match (&self.family, self.raw) {
            (PhiFamily::Zero, _) => BigRational::zero(),
            (PhiFamily::Power { num, den }, raw) => {
                let root = big_to_ratio(&(t.pow(*num as u32).nth_root(*den as u32) + BigUint::one()));
                if raw {
                    root
                } else {
                    let tail = root * ratio(*den as i64, *num as i64) + ln_up();
                    tr.min(tail)
                }
            }
            (PhiFamily::Log1p, true) => ratio(7 * (t + BigUint::one()).bits() as i64 + 10, 10),
            (PhiFamily::Log1p, false) => {
                let l = ln_up();
                tr.min(ratio(3, 1) + (&l + ratio(17, 10)) * l)
            }
            (PhiFamily::Table { .. }, _) => return None,
        })
    }

    pub fn label(&self) -> String {
        let base = match &self.family {
            PhiFamily::Power { num, den } => format!("t^{num}/{den}"),
            PhiFamily::Log1p => "log1p".into(),
            PhiFamily::Table { .. } => "table".into(),
            PhiFamily::Zero => "zero".into(),
        };
        if self.raw {
            format!("raw {base}")
        } else {
            base
        }
    }
}
