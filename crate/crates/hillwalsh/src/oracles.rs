//! Independent ground-truth discriminant computations: fixed-step
//! Runge-Kutta monodromy integration, exact closed forms for constant and
//! piecewise-constant coefficients, the truncated alternating Lyapunov
//! series, and the delta-power expansion harness.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};
use crate::excitation::HillProblem;

/// Monodromy matrix with derived quantities.
#[derive(Debug, Clone)]
pub struct MonodromyResult {
    /// State transition matrix over one period, row-major.
    pub m: [[f64; 2]; 2],
    /// Trace, i.e. the discriminant.
    pub trace: f64,
    pub det: f64,
    /// Floquet multipliers; the second is constructed as 1/rho_1 so their
    /// product is pinned by the characteristic polynomial's unit constant term.
    pub multipliers: [Complex64; 2],
    pub steps: usize,
}

/// 2x2 matrix product helper, a * b.
fn mat2_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Classical fixed-step 4th-order integration of Z' = tau A(s) Z over the
/// phase window [s0, s1] with A = [[0,1],[-q,0]] evaluated at phase s. The
/// window must not contain interior discontinuities; the final stage
/// evaluates the left limit at s1 so a step boundary there sees the segment
/// it closes.
fn rk4_segment(
    q_at: &impl Fn(f64, bool) -> f64,
    tau: f64,
    s0: f64,
    s1: f64,
    steps: usize,
    z: &mut [[f64; 2]; 2],
) -> Result<()> {
    let h = (s1 - s0) / steps as f64 * tau;
    let deriv = |q: f64, m: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
        [
            [m[1][0], m[1][1]],
            [-q * m[0][0], -q * m[0][1]],
        ]
    };
    let hs = (s1 - s0) / steps as f64;
    for i in 0..steps {
        let sa = s0 + i as f64 * hs;
        let sm = sa + 0.5 * hs;
        let sb = if i + 1 == steps { s1 } else { sa + hs };
        let qa = q_at(sa, false);
        let qm = q_at(sm, false);
        let qb = q_at(sb, i + 1 == steps);
        let k1 = deriv(qa, z);
        let z2 = add_scaled(z, &k1, 0.5 * h);
        let k2 = deriv(qm, &z2);
        let z3 = add_scaled(z, &k2, 0.5 * h);
        let k3 = deriv(qm, &z3);
        let z4 = add_scaled(z, &k3, h);
        let k4 = deriv(qb, &z4);
        for r in 0..2 {
            for c in 0..2 {
                z[r][c] += h / 6.0 * (k1[r][c] + 2.0 * k2[r][c] + 2.0 * k3[r][c] + k4[r][c]);
            }
        }
        if !z[0][0].is_finite() || !z[1][1].is_finite() {
            return Err(HillError::Numeric(format!(
                "integration blow-up near phase {sa:.6}"
            )));
        }
    }
    Ok(())
}

fn add_scaled(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2], s: f64) -> [[f64; 2]; 2] {
    [
        [a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]],
        [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]],
    ]
}

/// Integrates the fundamental matrix over one period with a fixed step,
/// forcing step boundaries onto the excitation's discontinuities, and reads
/// the discriminant off the trace.
///
/// Stepping happens in normalized phase with the derivative scaled by tau, so
/// stage phases compare exactly against the stored breakpoints and no stage
/// can misround across a discontinuity.
pub fn monodromy(problem: &HillProblem, steps: usize) -> Result<MonodromyResult> {
    if steps < 64 {
        return Err(HillError::Domain(format!(
            "monodromy needs at least 64 steps, got {steps}"
        )));
    }
    let tau = problem.tau;
    // segment boundaries in phase: 0, interior discontinuities, 1
    let mut bounds = vec![0.0];
    bounds.extend(
        problem
            .excitation
            .breakpoints()
            .into_iter()
            .filter(|s| *s > 0.0 && *s < 1.0),
    );
    bounds.push(1.0);

    let q_at = |s: f64, left_limit: bool| -> f64 {
        if left_limit {
            problem.alpha + problem.beta * problem.excitation.eval_phase_left(s)
        } else {
            let s = if s >= 1.0 { 0.0 } else { s };
            problem.alpha + problem.beta * problem.excitation.eval_phase(s)
        }
    };

    let mut z = [[1.0, 0.0], [0.0, 1.0]];
    let mut used_steps = 0usize;
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = b - a;
        let n = ((steps as f64 * span).ceil() as usize).max(1);
        rk4_segment(&q_at, tau, a, b, n, &mut z)?;
        used_steps += n;
    }

    let trace = z[0][0] + z[1][1];
    let det = z[0][0] * z[1][1] - z[0][1] * z[1][0];
    let disc = Complex64::new(trace * trace - 4.0, 0.0).sqrt();
    let rho1 = (Complex64::new(trace, 0.0) + disc) / 2.0;
    let rho2 = Complex64::new(1.0, 0.0) / rho1;
    Ok(MonodromyResult {
        m: z,
        trace,
        det,
        multipliers: [rho1, rho2],
        steps: used_steps,
    })
}

/// Exact discriminant for constant q = alpha over one period tau:
/// 2 cos(tau sqrt(alpha)) for alpha >= 0, 2 cosh(tau sqrt(-alpha)) otherwise.
pub fn constant_coeff_delta(alpha: f64, tau: f64) -> f64 {
    if alpha >= 0.0 {
        2.0 * (tau * alpha.sqrt()).cos()
    } else {
        2.0 * (tau * (-alpha).sqrt()).cosh()
    }
}

/// Exact propagator of x'' + q x = 0 over duration d for constant q.
fn constant_propagator(q: f64, d: f64) -> [[f64; 2]; 2] {
    if q > 0.0 {
        let w = q.sqrt();
        let (s, c) = (w * d).sin_cos();
        [[c, s / w], [-w * s, c]]
    } else if q < 0.0 {
        let w = (-q).sqrt();
        let (s, c) = ((w * d).sinh(), (w * d).cosh());
        [[c, s / w], [w * s, c]]
    } else {
        [[1.0, d], [0.0, 1.0]]
    }
}

/// Exact discriminant of a piecewise-constant q: trace of the time-ordered
/// product of constant-coefficient propagators. `levels` lists (q, duration)
/// in time order; durations must be positive.
pub fn piecewise_constant_delta(levels: &[(f64, f64)]) -> Result<f64> {
    if levels.is_empty() {
        return Err(HillError::Domain("no segments given".into()));
    }
    if levels.iter().any(|&(_, d)| !(d > 0.0)) {
        return Err(HillError::Domain("segment durations must be positive".into()));
    }
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for &(q, d) in levels {
        m = mat2_mul(&constant_propagator(q, d), &m);
    }
    Ok(m[0][0] + m[1][1])
}

/// Truncated alternating Lyapunov series: terms A_0..A_n with A_0 = 2 and
/// partial sums 2, 2 - A_1, 2 - A_1 + A_2, ...
///
/// The normalization targets the full discriminant (trace of the monodromy
/// matrix), so every coefficient is twice the classical characteristic
/// constant's, which expands half the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovSeries {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub quad_points: usize,
}

impl LyapunovSeries {
    /// The deepest available alternating partial sum.
    pub fn delta(&self) -> f64 {
        *self.partial_sums.last().unwrap()
    }
}

/// Multiple-integral coefficients of the alternating series by midpoint
/// quadrature per simplex dimension (inner intervals rescaled to [0, t_outer],
/// so no stage evaluates q at a segment endpoint):
///   A_1 = tau * int q,
///   A_2 = int over t2 <= t1 of (tau - t1 + t2)(t1 - t2) q q,
///   A_3 = int over t3 <= t2 <= t1 of (tau - t1 + t3)(t1 - t2)(t2 - t3) q q q.
pub fn lyapunov_terms(
    problem: &HillProblem,
    n_max: usize,
    quad_points: usize,
) -> Result<LyapunovSeries> {
    if n_max > 3 {
        return Err(HillError::Domain(format!(
            "series coefficients beyond A_3 are not implemented (asked for {n_max})"
        )));
    }
    if quad_points < 32 {
        return Err(HillError::Domain(format!(
            "need at least 32 quadrature points per dimension, got {quad_points}"
        )));
    }
    let tau = problem.tau;
    let m = quad_points;
    let q = |t: f64| problem.q(t);

    let mut terms = vec![2.0];

    if n_max >= 1 {
        let h = tau / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            acc += q((i as f64 + 0.5) * h);
        }
        terms.push(tau * acc * h);
    }

    if n_max >= 2 {
        let h1 = tau / m as f64;
        let mut acc = 0.0;
        for i1 in 0..m {
            let t1 = (i1 as f64 + 0.5) * h1;
            let q1 = q(t1);
            let h2 = t1 / m as f64;
            let mut inner = 0.0;
            for i2 in 0..m {
                let t2 = (i2 as f64 + 0.5) * h2;
                inner += (tau - t1 + t2) * (t1 - t2) * q(t2);
            }
            acc += q1 * inner * h2;
        }
        terms.push(acc * h1);
    }

    if n_max >= 3 {
        let h1 = tau / m as f64;
        let mut acc = 0.0;
        for i1 in 0..m {
            let t1 = (i1 as f64 + 0.5) * h1;
            let q1 = q(t1);
            let h2 = t1 / m as f64;
            let mut acc2 = 0.0;
            for i2 in 0..m {
                let t2 = (i2 as f64 + 0.5) * h2;
                let q2 = q(t2);
                let h3 = t2 / m as f64;
                let mut acc3 = 0.0;
                for i3 in 0..m {
                    let t3 = (i3 as f64 + 0.5) * h3;
                    acc3 += (tau - t1 + t3) * (t2 - t3) * q(t3);
                }
                acc2 += q2 * (t1 - t2) * acc3 * h3;
            }
            acc += q1 * acc2 * h2;
        }
        terms.push(acc * h1);
    }

    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut sum = 0.0;
    for (i, &a) in terms.iter().enumerate() {
        sum += if i % 2 == 0 { a } else { -a };
        partial_sums.push(sum);
    }

    for t in &terms {
        if !t.is_finite() {
            return Err(HillError::Numeric("non-finite series coefficient".into()));
        }
    }

    Ok(LyapunovSeries {
        terms,
        partial_sums,
        quad_points: m,
    })
}

/// Report of the delta-power expansion harness: the final running sums S and
/// Z assembled from definite integrals of q, truncated at increasing powers
/// of delta = tau / 2^k, against the exact recursion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub k: u32,
    pub order: usize,
    /// Discriminant from the exact recursion at the same order.
    pub delta_recursive: f64,
    /// S + Z from the integral-form recursions (the large-order limit of the
    /// coefficient recursions, with definite integrals of q).
    pub delta_integral_recursion: f64,
    /// S + Z from the delta-power expansion truncated at `order`.
    pub delta_expansion_by_order: Vec<f64>,
    /// Gaps |delta_recursive - expansion| per truncation order.
    pub gap_by_order: Vec<f64>,
    /// Signed order-r contributions (S-side plus Z-side); their continuum
    /// limits are the alternating series terms (-1)^r A_r.
    pub term_by_order: Vec<f64>,
}

/// Cumulative integral of q on the delta-grid: qcum[j] = int_0^{j delta} q,
/// by composite midpoint with `sub` points per delta cell.
fn q_cumulative_on_grid(problem: &HillProblem, k: u32, sub: usize) -> Vec<f64> {
    let n = 1usize << k;
    let delta = problem.tau / n as f64;
    let h = delta / sub as f64;
    let mut qcum = vec![0.0; n + 1];
    for j in 0..n {
        let base = j as f64 * delta;
        let mut acc = 0.0;
        for s in 0..sub {
            acc += problem.q(base + (s as f64 + 0.5) * h);
        }
        qcum[j + 1] = qcum[j] + acc * h;
    }
    qcum
}

/// Integral-form running sums: the definite-integral recursions
///   S_n = 1 - delta * sum_i S_i I(n+1, i+1),
///   Z_n = 1 - delta * sum_i (n - i) Z_i I(i+2, i+1),
/// where I(a, b) integrates q over [tau - a delta, tau - b delta].
/// Returns (S_{2^k - 1}, Z_{2^k - 1}).
pub fn integral_form_sums(problem: &HillProblem, k: u32, sub: usize) -> Result<(f64, f64)> {
    if !(2..=12).contains(&k) {
        return Err(HillError::Size(format!(
            "integral-form sums support k in 2..=12, got {k}"
        )));
    }
    let n = 1usize << k;
    let delta = problem.tau / n as f64;
    let qcum = q_cumulative_on_grid(problem, k, sub);
    // I(a, b) = qcum[n - b] - qcum[n - a]
    let integ = |a: usize, b: usize| qcum[n - b] - qcum[n - a];

    let mut s = vec![0.0; n];
    s[0] = 1.0;
    for idx in 1..n {
        let mut acc = 0.0;
        for (i, si) in s.iter().enumerate().take(idx) {
            acc += si * integ(idx + 1, i + 1);
        }
        s[idx] = 1.0 - delta * acc;
    }

    let mut z = vec![0.0; n];
    z[0] = 1.0;
    // running sums for the weighted form: sum (idx - i) z_i g_i with
    // g_i = I(i+2, i+1)
    let mut zg = 0.0; // sum z_i g_i over i < idx
    let mut izg = 0.0; // sum i z_i g_i over i < idx
    for idx in 1..n {
        let g_prev = integ(idx + 1, idx); // g_{idx-1}
        zg += z[idx - 1] * g_prev;
        izg += (idx - 1) as f64 * z[idx - 1] * g_prev;
        z[idx] = 1.0 - delta * (idx as f64 * zg - izg);
    }

    Ok((s[n - 1], z[n - 1]))
}

/// Assembles S and Z from powers of delta with nested integral sums, orders
/// 0..=order, and reports the gap against the exact recursion. O(4^k) work at
/// order 2 and O(8^k) at order 3, so k stays small.
pub fn delta_power_expansion_check(
    problem: &HillProblem,
    k: u32,
    order: usize,
) -> Result<ExpansionReport> {
    if !(2..=6).contains(&k) {
        return Err(HillError::Size(format!(
            "expansion check supports k in 2..=6, got {k}"
        )));
    }
    if order > 3 {
        return Err(HillError::Domain(format!(
            "expansion order {order} beyond the implemented 3"
        )));
    }
    let n = 1usize << k;
    let delta = problem.tau / n as f64;
    let qcum = q_cumulative_on_grid(problem, k, 64);
    let integ = |a: usize, b: usize| qcum[n - b] - qcum[n - a];

    let top = n - 1; // both streams stop at coefficient 2^k - 1

    // S side: 1 - d sum_{i=1..top} I(top+1, i)
    //           + d^2 sum_{i=2..top} I(top+1, i) sum_{j=1..i-1} I(i, j)
    //           - d^3 sum_{i=3..top} I(top+1,i) sum_{j=1..i-1} I(i,j) sum_{l=1..j} I(j,l)
    let mut s_orders = vec![1.0f64];
    if order >= 1 {
        let mut t1 = 0.0;
        for i in 1..=top {
            t1 += integ(top + 1, i);
        }
        s_orders.push(-delta * t1);
    }
    if order >= 2 {
        let mut t2 = 0.0;
        for i in 2..=top {
            let mut inner = 0.0;
            for j in 1..i {
                inner += integ(i, j);
            }
            t2 += integ(top + 1, i) * inner;
        }
        s_orders.push(delta * delta * t2);
    }
    if order >= 3 {
        let mut t3 = 0.0;
        for i in 3..=top {
            let mut inner = 0.0;
            for j in 1..i {
                let mut inner2 = 0.0;
                for l in 1..=j {
                    inner2 += integ(j, l);
                }
                inner += integ(i, j) * inner2;
            }
            t3 += integ(top + 1, i) * inner;
        }
        s_orders.push(-delta * delta * delta * t3);
    }

    // Z side: 1 - d sum_{i=2..top+1} I(i, 1)
    //           + d^2 sum_{i=2..top} I(i,1) sum_{j=i+1..top+1} I(j, i)
    //           - d^3 sum_{i=2..top-1} I(i,1) sum_{j=i+1..top} I(j,i) sum_{l=j+1..top+1} I(l,j)
    let mut z_orders = vec![1.0f64];
    if order >= 1 {
        let mut t1 = 0.0;
        for i in 2..=top + 1 {
            t1 += integ(i, 1);
        }
        z_orders.push(-delta * t1);
    }
    if order >= 2 {
        let mut t2 = 0.0;
        for i in 2..=top {
            let mut inner = 0.0;
            for j in i + 1..=top + 1 {
                inner += integ(j, i);
            }
            t2 += integ(i, 1) * inner;
        }
        z_orders.push(delta * delta * t2);
    }
    if order >= 3 {
        let mut t3 = 0.0;
        for i in 2..top {
            let mut inner = 0.0;
            for j in i + 1..=top {
                let mut inner2 = 0.0;
                for l in j + 1..=top + 1 {
                    inner2 += integ(l, j);
                }
                inner += integ(j, i) * inner2;
            }
            t3 += integ(i, 1) * inner;
        }
        z_orders.push(-delta * delta * delta * t3);
    }

    let rec = crate::discriminant::discriminant_recursive(problem, k)?.delta;
    let (s_int, z_int) = integral_form_sums(problem, k, 64)?;

    let mut delta_expansion_by_order = Vec::with_capacity(order + 1);
    let mut gap_by_order = Vec::with_capacity(order + 1);
    let mut term_by_order = Vec::with_capacity(order + 1);
    let mut s_acc = 0.0;
    let mut z_acc = 0.0;
    for ord in 0..=order {
        s_acc += s_orders[ord];
        z_acc += z_orders[ord];
        let d = s_acc + z_acc;
        delta_expansion_by_order.push(d);
        gap_by_order.push((d - rec).abs());
        term_by_order.push(s_orders[ord] + z_orders[ord]);
    }

    Ok(ExpansionReport {
        k,
        order,
        delta_recursive: rec,
        delta_integral_recursion: s_int + z_int,
        delta_expansion_by_order,
        gap_by_order,
        term_by_order,
    })
}
