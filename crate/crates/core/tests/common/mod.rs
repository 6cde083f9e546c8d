//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use wpsched::fairness::normalized_ratio;
use wpsched::throughput::weighted_energy;
use wpsched::SystemConfig;

const GL5_NODES: [f64; 5] =
    [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Composite five-point Gauss-Legendre rule with panels of width `h`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    let w = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = lo + (p as f64 + 0.5) * w;
            GL5_NODES.iter().zip(GL5_WEIGHTS).map(|(&x, wt)| wt * f(mid + 0.5 * w * x)).sum::<f64>() * 0.5 * w
        })
        .sum()
}

/// `e^{-z} I₀(z)` by the trapezoid rule on `(1/π)∫₀^π e^{z(cos θ − 1)} dθ`.
pub fn scaled_bessel_i0(z: f64) -> f64 {
    let n = 64 + (16.0 * z.sqrt()) as usize;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * z).exp());
    for j in 1..n {
        s += (z * ((j as f64 * h).cos() - 1.0)).exp();
    }
    s * h / std::f64::consts::PI
}

/// `Q₁(a, b) = ∫_b^∞ x e^{-(x²+a²)/2} I₀(ax) dx` by direct quadrature.
pub fn marcum_q1_quadrature(a: f64, b: f64) -> f64 {
    let hi = a.max(b) + 16.0;
    gauss_legendre(|x| x * (-(x - a) * (x - a) / 2.0).exp() * scaled_bessel_i0(a * x), b, hi, 0.05)
}

/// Rician power CDF by integrating the power density
/// `f(x) = (Ψ+1)/H̄ · e^{-Ψ-(Ψ+1)x/H̄} · I₀(2√(Ψ(Ψ+1)x/H̄))`.
pub fn rician_cdf_quadrature(mean_gain: f64, psi: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // Substituting x = H̄ u²/(2(Ψ+1)) turns the density into the Rice density in u.
    let s = (2.0 * psi).sqrt();
    let u_max = (2.0 * (psi + 1.0) * x / mean_gain).sqrt();
    let density = |u: f64| u * (-(u - s) * (u - s) / 2.0).exp() * scaled_bessel_i0(s * u);
    gauss_legendre(density, 0.0, u_max, 0.01)
}

/// Probability that a harvest raises the battery by exactly `j` levels
/// (`j = K` collects the whole tail), from the quadrature CDF.
pub fn increment_prob(cfg: &SystemConfig, i: usize, j: usize) -> f64 {
    let h = cfg.mean_gain(i).unwrap();
    let x = |j: usize| {
        j as f64 * cfg.battery_capacity
            / (cfg.num_levels as f64 * cfg.conversion_eff * cfg.hap_power * cfg.block_duration)
    };
    let f = |j: usize| rician_cdf_quadrature(h, cfg.rician_factor, x(j));
    if j >= cfg.num_levels {
        1.0 - f(j)
    } else {
        f(j + 1) - f(j)
    }
}

/// Hand-assembled transition row for level `k` of a battery chain.
pub fn battery_row(cfg: &SystemConfig, i: usize, k: usize, upsilon: f64) -> Vec<f64> {
    let kk = cfg.num_levels;
    let mut row = vec![0.0; kk + 1];
    let (send, stay) = if k == 0 { (0.0, 1.0) } else { (upsilon, 1.0 - upsilon) };
    row[0] += send;
    for l in k..=kk {
        let p = if l == kk {
            1.0 - (0..kk - k).map(|j| increment_prob(cfg, i, j)).sum::<f64>()
        } else {
            increment_prob(cfg, i, l - k)
        };
        row[l] += stay * p;
    }
    row
}

/// Iterates `π ← Zᵀπ` on a dense matrix until the step is below `tol`.
pub fn power_iteration(z: &[Vec<f64>], tol: f64) -> Vec<f64> {
    let n = z.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000_000 {
        let mut next = vec![0.0; n];
        for (r, row) in z.iter().enumerate() {
            for (c, &p) in row.iter().enumerate() {
                next[c] += pi[r] * p;
            }
        }
        let lazy: Vec<f64> = pi.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let d: f64 = lazy.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = lazy;
        if d < tol {
            break;
        }
    }
    pi
}

/// Mean and standard error of per-batch frequencies.
pub fn batch_mean_se(batches: &[f64]) -> (f64, f64) {
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    let var = batches.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Winner of one block under the throughput-oriented rule.
pub fn throughput_winner(cfg: &SystemConfig, levels: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &k) in levels.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let w = weighted_energy(cfg.level_energy(k), cfg.mean_gain(i).unwrap());
        if best.is_none_or(|(_, b)| w > b) {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i)
}

/// Winner of one block under the fairness-oriented rule, states `(level, wait)`.
pub fn fairness_winner(cfg: &SystemConfig, states: &[(usize, usize)]) -> Option<usize> {
    let pick = |filter: &dyn Fn(usize) -> bool, key: &dyn Fn(usize) -> f64| {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..states.len()).filter(|&i| filter(i)) {
            let v = key(i);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    };
    let energy = |i: usize| cfg.level_energy(states[i].0);
    let nonempty = |i: usize| states[i].0 > 0;
    pick(&|i| nonempty(i) && states[i].1 == cfg.max_wait, &|i| weighted_energy(energy(i), cfg.mean_gain(i).unwrap()))
        .or_else(|| {
            pick(&nonempty, &|i| {
                normalized_ratio(energy(i), states[i].1, cfg.mean_harvest(i).unwrap(), cfg.battery_capacity)
            })
        })
}

/// Dense joint matrix and, per joint state, each IoD's `(level, wait)`.
pub type JointChain = (Vec<Vec<f64>>, Vec<Vec<(usize, usize)>>);

/// Exact chain of the whole network in discretized mode, per-IoD states
/// `(level, wait)` with `wait` fixed at 1 when `fair` is false. Returns the
/// dense matrix and the per-IoD state of every joint index.
pub fn joint_chain(cfg: &SystemConfig, fair: bool) -> JointChain {
    let (l, k) = (cfg.num_iods(), cfg.num_levels);
    let m = if fair { cfg.max_wait } else { 1 };
    let local: Vec<(usize, usize)> = (0..=k).flat_map(|q| (1..=m).map(move |w| (q, w))).collect();
    let mut joint: Vec<Vec<(usize, usize)>> = vec![vec![]];
    for _ in 0..l {
        joint = joint.into_iter().flat_map(|j| local.iter().map(move |&s| [j.clone(), vec![s]].concat())).collect();
    }
    let index = |states: &[(usize, usize)]| states.iter().fold(0, |acc, &(q, w)| acc * local.len() + q * m + (w - 1));
    let incr: Vec<Vec<f64>> = (0..l).map(|i| (0..=k).map(|j| increment_prob(cfg, i, j)).collect()).collect();
    let n = joint.len();
    let mut z = vec![vec![0.0; n]; n];
    for (from, states) in joint.iter().enumerate() {
        let winner = if fair {
            fairness_winner(cfg, states)
        } else {
            throughput_winner(cfg, &states.iter().map(|s| s.0).collect::<Vec<_>>())
        };
        // Enumerate the harvest outcomes of every IoD.
        let mut outcomes: Vec<(Vec<(usize, usize)>, f64)> = vec![(vec![], 1.0)];
        for (i, &(q, w)) in states.iter().enumerate() {
            let mut next = Vec::new();
            for (prefix, p) in outcomes {
                if winner == Some(i) {
                    next.push(([prefix, vec![(0, 1)]].concat(), p));
                    continue;
                }
                let wait = if fair { (w + 1).min(m) } else { 1 };
                for (j, &pj) in incr[i].iter().enumerate() {
                    let level = (q + j).min(k);
                    next.push(([prefix.clone(), vec![(level, wait)]].concat(), p * pj));
                }
            }
            outcomes = next;
        }
        for (to, p) in outcomes {
            z[from][index(&to)] += p;
        }
    }
    (z, joint)
}

/// Per-IoD marginals of a joint distribution from [`joint_chain`].
pub fn joint_marginals(pi: &[f64], joint: &[Vec<(usize, usize)>], levels: usize, max_wait: usize) -> Vec<Vec<f64>> {
    let l = joint[0].len();
    let mut out = vec![vec![0.0; (levels + 1) * max_wait]; l];
    for (p, states) in pi.iter().zip(joint) {
        for (i, &(q, w)) in states.iter().enumerate() {
            out[i][q * max_wait + (w - 1)] += p;
        }
    }
    out
}

/// Whether a one-block move between chain states is allowed: a full discharge
/// to empty (and wait 1), or a harvest that keeps or raises the level while
/// the wait advances by one, capped at `M`.
pub fn move_allowed(fair: bool, max_wait: usize, from: usize, to: usize) -> bool {
    if !fair {
        return to == 0 || to >= from;
    }
    let (k, m) = (from / max_wait, from % max_wait + 1);
    let (l, u) = (to / max_wait, to % max_wait + 1);
    (l == 0 && u == 1 && k > 0) || (l >= k && u == (m + 1).min(max_wait))
}

/// Largest row-sum defect and total forbidden mass of a built matrix.
pub fn chain_violations(z: &wpsched::TransitionMatrix, fair: bool, max_wait: usize) -> (f64, f64) {
    let mut defect = 0.0_f64;
    let mut forbidden = 0.0;
    for from in 0..z.dim() {
        let mut sum = 0.0;
        for &(to, p) in z.row(from) {
            sum += p;
            if !move_allowed(fair, max_wait, from, to) {
                forbidden += p.abs();
            }
        }
        defect = defect.max((sum - 1.0).abs());
    }
    (defect, forbidden)
}
