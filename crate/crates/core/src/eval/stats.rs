//! Nonparametric and parametric tests used to compare score distributions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// 1-based midranks of `xs` plus the tie group sizes.
pub fn midranks(xs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` of the first sample.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Largest sample size for which the null distribution is enumerated.
pub const MWU_EXACT_MAX: usize = 8;

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..=(n - (k - cur.len())) {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Two-sided Mann-Whitney U test with midranks for ties.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("Mann-Whitney U needs two non-empty samples".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let u = ranks[..n1].iter().sum::<f64>() - offset;
    let mu = (n1 * n2) as f64 / 2.0;

    if n1 <= MWU_EXACT_MAX && n2 <= MWU_EXACT_MAX {
        let observed = (u - mu).abs();
        let (mut extreme, mut total) = (0u64, 0u64);
        for_each_subset(n1 + n2, n1, &mut |idx| {
            let uu = idx.iter().map(|&i| ranks[i]).sum::<f64>() - offset;
            total += 1;
            if (uu - mu).abs() >= observed - 1e-9 {
                extreme += 1;
            }
        });
        return Ok(MannWhitney {
            u,
            p: extreme as f64 / total as f64,
            exact: true,
        });
    }

    let n = (n1 + n2) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * (1.0 - std_normal().cdf(z))).min(1.0)
    };
    Ok(MannWhitney { u, p, exact: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("Cliff's delta needs two non-empty samples".into()));
    }
    let mut d: i64 = 0;
    for x in a {
        for y in b {
            d += i64::from(x > y) - i64::from(x < y);
        }
    }
    Ok(d as f64 / (a.len() * b.len()) as f64)
}

pub fn delta_magnitude(delta: f64) -> Magnitude {
    let d = delta.abs();
    if d < 0.147 {
        Magnitude::Negligible
    } else if d < 0.33 {
        Magnitude::Small
    } else if d < 0.474 {
        Magnitude::Medium
    } else {
        Magnitude::Large
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p: f64,
    /// Zero-range sample; `w` and `p` are 0.
    pub degenerate: bool,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Coefficient approximation and normalizing transformation of Royston
/// (1995), as in the AS R94 algorithm.
pub fn shapiro_wilk(sample: &[f64]) -> Result<ShapiroWilk> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::Data(format!("Shapiro-Wilk needs 3..=5000 values, got {n}")));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Ok(ShapiroWilk {
            w: 0.0,
            p: 0.0,
            degenerate: true,
        });
    }

    let nn2 = n / 2;
    let an = n as f64;
    let mut a = vec![0.0; nn2];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let norm = std_normal();
        let an25 = an + 0.25;
        let m: Vec<f64> = (1..=nn2)
            .map(|i| norm.inverse_cdf((i as f64 - 0.375) / an25))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        a[0] = a1;
        for i in first..nn2 {
            a[i] = -m[i] / fac;
        }
    }

    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let mx = mean(&xs);
    let ssq: f64 = xs.iter().map(|v| (v - mx).powi(2)).sum();
    let num: f64 = (0..nn2).map(|i| a[i] * (xs[n - 1 - i] - xs[i])).sum();
    let w = ((num * num) / ssq).min(1.0);

    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::PI / 3.0;
        let p = (pi6 * (w.sqrt().asin() - stqr)).max(0.0);
        return Ok(ShapiroWilk { w, p, degenerate: false });
    }
    let w1 = (1.0 - w).ln();
    let (y, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return Ok(ShapiroWilk {
                w,
                p: 1e-99,
                degenerate: false,
            });
        }
        (-(gamma - w1).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (w1, poly(&C5, xx), poly(&C6, xx).exp())
    };
    let p = 1.0 - std_normal().cdf((y - m) / s);
    Ok(ShapiroWilk { w, p, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
}

/// Two-sided one-sample t test against `mu0`.
pub fn one_sample_t(sample: &[f64], mu0: f64) -> Result<TTest> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Data(format!("t test needs at least 2 values, got {n}")));
    }
    let m = mean(sample);
    let sd = sample_sd(sample);
    if sd == 0.0 {
        let (t, p) = if m == mu0 { (0.0, 1.0) } else { (f64::INFINITY.copysign(m - mu0), 0.0) };
        return Ok(TTest { t, p });
    }
    let t = (m - mu0) / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0).expect("valid t distribution");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest { t, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRank {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    pub p: f64,
    pub exact: bool,
}

/// Largest nonzero-difference count handled by the exact distribution.
pub const SIGNED_RANK_EXACT_MAX: usize = 50;

/// Two-sided Wilcoxon signed-rank test of `sample` against a point value.
/// Zero differences are dropped; tied magnitudes get midranks and the exact
/// distribution is taken over all sign assignments.
pub fn wilcoxon_signed_rank(sample: &[f64], value: f64) -> Result<SignedRank> {
    let d: Vec<f64> = sample.iter().map(|x| x - value).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(SignedRank {
            w_plus: 0.0,
            p: 1.0,
            exact: true,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();

    if n <= SIGNED_RANK_EXACT_MAX {
        // doubled ranks are integers even with midranks
        let twice: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = twice.iter().sum();
        let mut dist = vec![0.0f64; max + 1];
        dist[0] = 1.0;
        for &r in &twice {
            for s in (r..=max).rev() {
                dist[s] = 0.5 * dist[s] + 0.5 * dist[s - r];
            }
            for v in dist[..r].iter_mut() {
                *v *= 0.5;
            }
        }
        let obs = (w_plus * 2.0).round() as usize;
        let lower: f64 = dist[..=obs].iter().sum();
        let upper: f64 = dist[obs..].iter().sum();
        return Ok(SignedRank {
            w_plus,
            p: (2.0 * lower.min(upper)).min(1.0),
            exact: true,
        });
    }

    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = ((w_plus - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(SignedRank {
        w_plus,
        p: (2.0 * (1.0 - std_normal().cdf(z))).min(1.0),
        exact: false,
    })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_bonferroni(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Data(format!("p-value {p} outside [0,1]")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (j, &i) in order.iter().enumerate() {
        running = running.max(((m - j) as f64 * pvals[i]).min(1.0));
        out[i] = running;
    }
    Ok(out)
}

/// `(mean(sample) - value) / sd(sample)`; a zero-spread sample gives an
/// infinity signed by the difference, or 0 when there is none.
pub fn effect_size_vs_point(sample: &[f64], value: f64) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::Data(format!("effect size needs at least 2 values, got {}", sample.len())));
    }
    let diff = mean(sample) - value;
    let sd = sample_sd(sample);
    Ok(if sd == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    } else {
        diff / sd
    })
}

/// Threshold on [`effect_size_vs_point`] for a large effect.
pub const LARGE_EFFECT: f64 = 0.8;
