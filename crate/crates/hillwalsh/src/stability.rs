//! Stability classification over the alpha-beta plane: grid scans of the
//! discriminant, transition-curve extraction by marching squares, and the
//! interlacing scan along alpha at fixed beta.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminant::{recursion_kernel, Method};
use crate::error::{HillError, Result};
use crate::excitation::{sample_p, Excitation, HillProblem};

/// Default classification tolerance: the transition band |2 - |Delta|| < tol.
pub const DEFAULT_CLASS_TOL: f64 = 1e-6;
/// An extremum of Delta -+ 2 within this distance of zero counts as a
/// double root (tangency) in the interlacing scan.
pub const TOUCH_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Stable,
    Unstable,
    Transition,
    Singular,
}

impl Class {
    pub fn label(&self) -> &'static str {
        match self {
            Class::Stable => "stable",
            Class::Unstable => "unstable",
            Class::Transition => "transition",
            Class::Singular => "singular",
        }
    }

    /// PGM gray level.
    pub fn gray(&self) -> u8 {
        match self {
            Class::Stable => 255,
            Class::Transition => 128,
            Class::Unstable => 0,
            Class::Singular => 64,
        }
    }
}

/// |Delta| < 2 - tol is stable, |Delta| > 2 + tol unstable, the band between
/// is an explicit transition class; non-finite values are singular.
pub fn classify(delta: f64, tol: f64) -> Class {
    if !delta.is_finite() {
        return Class::Singular;
    }
    let a = delta.abs();
    if a < 2.0 - tol {
        Class::Stable
    } else if a > 2.0 + tol {
        Class::Unstable
    } else {
        Class::Transition
    }
}

/// Uniform axis with `count` points from min to max inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(HillError::Usage("axis needs at least one point".into()));
        }
        if !(min <= max) {
            return Err(HillError::Usage(format!(
                "axis range [{min}, {max}] is not well ordered"
            )));
        }
        Ok(Axis { min, max, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }
}

/// Rectangular alpha-beta scan: per-cell discriminant and class.
#[derive(Debug, Clone)]
pub struct StabilityGrid {
    pub alpha_axis: Axis,
    pub beta_axis: Axis,
    /// Row-major, beta rows then alpha columns.
    pub deltas: Vec<f64>,
    pub classes: Vec<Class>,
    pub k: u32,
    pub method: Method,
    pub tol: f64,
}

impl StabilityGrid {
    #[inline]
    pub fn idx(&self, i_beta: usize, j_alpha: usize) -> usize {
        i_beta * self.alpha_axis.count + j_alpha
    }

    pub fn delta_at(&self, i_beta: usize, j_alpha: usize) -> f64 {
        self.deltas[self.idx(i_beta, j_alpha)]
    }

    pub fn class_at(&self, i_beta: usize, j_alpha: usize) -> Class {
        self.classes[self.idx(i_beta, j_alpha)]
    }
}

/// Scans the plane with the recursion kernel. The excitation samples are
/// hoisted: they do not depend on alpha or beta. Cells where the recursion
/// hits the singularity condition (or overflows) come back as Singular with a
/// NaN discriminant; everything else is classified against `tol`.
///
/// Rows are distributed over the current rayon pool; each cell is a pure
/// function of its coordinates, so the result is identical for any worker
/// count.
pub fn grid_scan(
    excitation: &Excitation,
    tau: f64,
    alpha_axis: Axis,
    beta_axis: Axis,
    k: u32,
    tol: f64,
) -> Result<StabilityGrid> {
    let probe = HillProblem::new(0.0, 0.0, tau, excitation.clone())?;
    let samples = sample_p(&probe, k)?;
    if !(2..=20).contains(&k) {
        return Err(HillError::Size(format!(
            "grid scan needs k in 2..=20, got {k}"
        )));
    }

    let na = alpha_axis.count;
    let nb = beta_axis.count;
    let mut deltas = vec![f64::NAN; na * nb];

    deltas
        .par_chunks_mut(na)
        .enumerate()
        .for_each(|(i_beta, row)| {
            let beta = beta_axis.value(i_beta);
            for (j, slot) in row.iter_mut().enumerate() {
                let alpha = alpha_axis.value(j);
                *slot = match recursion_kernel(alpha, beta, tau, k, &samples) {
                    Ok(out) => out.delta,
                    Err(_) => f64::NAN,
                };
            }
        });

    let classes = deltas.iter().map(|&d| classify(d, tol)).collect();
    Ok(StabilityGrid {
        alpha_axis,
        beta_axis,
        deltas,
        classes,
        k,
        method: Method::Recursive,
        tol,
    })
}

/// Polyline in the alpha-beta plane.
pub type Polyline = Vec<(f64, f64)>;

/// Level sets of Delta = +2 and Delta = -2 extracted from a grid.
#[derive(Debug, Clone)]
pub struct TransitionCurves {
    pub plus_level: Vec<Polyline>,
    pub minus_level: Vec<Polyline>,
    /// Count of grid cells skipped because a corner was singular.
    pub warnings: usize,
}

/// Edge of the node lattice: node index plus direction (0 = towards +alpha,
/// 1 = towards +beta). Crossing points are computed once per edge so shared
/// segment endpoints compare exactly equal.
type EdgeKey = (usize, usize, u8);

struct Marcher<'a> {
    grid: &'a StabilityGrid,
    level: f64,
    crossings: BTreeMap<EdgeKey, (f64, f64)>,
    links: BTreeMap<EdgeKey, Vec<EdgeKey>>,
    warnings: usize,
}

impl<'a> Marcher<'a> {
    fn new(grid: &'a StabilityGrid, level: f64) -> Self {
        Marcher {
            grid,
            level,
            crossings: BTreeMap::new(),
            links: BTreeMap::new(),
            warnings: 0,
        }
    }

    fn f(&self, i: usize, j: usize) -> f64 {
        self.grid.delta_at(i, j) - self.level
    }

    fn crossing(&mut self, key: EdgeKey) -> (f64, f64) {
        if let Some(&pt) = self.crossings.get(&key) {
            return pt;
        }
        let (i, j, dir) = key;
        let (i2, j2) = if dir == 0 { (i, j + 1) } else { (i + 1, j) };
        let f0 = self.f(i, j);
        let f1 = self.f(i2, j2);
        let t = f0 / (f0 - f1);
        let a0 = self.grid.alpha_axis.value(j);
        let b0 = self.grid.beta_axis.value(i);
        let a1 = self.grid.alpha_axis.value(j2);
        let b1 = self.grid.beta_axis.value(i2);
        let pt = (a0 + t * (a1 - a0), b0 + t * (b1 - b0));
        self.crossings.insert(key, pt);
        pt
    }

    fn link(&mut self, a: EdgeKey, b: EdgeKey) {
        self.crossing(a);
        self.crossing(b);
        self.links.entry(a).or_default().push(b);
        self.links.entry(b).or_default().push(a);
    }

    /// Runs marching squares over every node square; the node lattice is the
    /// scan grid (j indexes alpha, i indexes beta).
    fn march(&mut self) {
        let na = self.grid.alpha_axis.count;
        let nb = self.grid.beta_axis.count;
        for i in 0..nb.saturating_sub(1) {
            for j in 0..na.saturating_sub(1) {
                let corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)];
                if corners
                    .iter()
                    .any(|&(ci, cj)| !self.grid.delta_at(ci, cj).is_finite())
                {
                    self.warnings += 1;
                    continue;
                }
                let vals = [
                    self.f(i, j),
                    self.f(i, j + 1),
                    self.f(i + 1, j + 1),
                    self.f(i + 1, j),
                ];
                let mut case = 0usize;
                for (bit, v) in vals.iter().enumerate() {
                    if *v > 0.0 {
                        case |= 1 << bit;
                    }
                }
                if case == 0 || case == 15 {
                    continue;
                }
                // edges of the square: bottom, right, top, left
                let bottom: EdgeKey = (i, j, 0);
                let right: EdgeKey = (i, j + 1, 1);
                let top: EdgeKey = (i + 1, j, 0);
                let left: EdgeKey = (i, j, 1);
                match case {
                    1 | 14 => self.link(left, bottom),
                    2 | 13 => self.link(bottom, right),
                    4 | 11 => self.link(right, top),
                    8 | 7 => self.link(top, left),
                    3 | 12 => self.link(left, right),
                    6 | 9 => self.link(bottom, top),
                    5 | 10 => {
                        // saddle: resolve by the average-of-corners rule
                        let center = 0.25 * (vals[0] + vals[1] + vals[2] + vals[3]);
                        let center_pos = center > 0.0;
                        // corners 0 and 2 are positive in case 5
                        let first_pos = case == 5;
                        if center_pos == first_pos {
                            self.link(left, top);
                            self.link(bottom, right);
                        } else {
                            self.link(left, bottom);
                            self.link(right, top);
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Joins segments into polylines: open chains first (from endpoints in
    /// key order), then closed loops; a closed loop repeats its first point.
    fn assemble(mut self) -> (Vec<Polyline>, usize) {
        let mut visited: BTreeMap<EdgeKey, bool> = BTreeMap::new();
        let mut polylines = Vec::new();

        let endpoints: Vec<EdgeKey> = self
            .links
            .iter()
            .filter(|(_, v)| v.len() == 1)
            .map(|(k, _)| *k)
            .collect();

        let walk = |start: EdgeKey,
                        visited: &mut BTreeMap<EdgeKey, bool>,
                        links: &BTreeMap<EdgeKey, Vec<EdgeKey>>|
         -> Vec<EdgeKey> {
            let mut chain = vec![start];
            visited.insert(start, true);
            let mut cur = start;
            let mut prev: Option<EdgeKey> = None;
            loop {
                let next = links[&cur]
                    .iter()
                    .find(|&&n| Some(n) != prev && !visited.get(&n).copied().unwrap_or(false));
                match next {
                    Some(&n) => {
                        chain.push(n);
                        visited.insert(n, true);
                        prev = Some(cur);
                        cur = n;
                    }
                    None => break,
                }
            }
            chain
        };

        for start in endpoints {
            if visited.get(&start).copied().unwrap_or(false) {
                continue;
            }
            let chain = walk(start, &mut visited, &self.links);
            polylines.push(chain);
        }
        // remaining are closed loops
        let keys: Vec<EdgeKey> = self.links.keys().copied().collect();
        for start in keys {
            if visited.get(&start).copied().unwrap_or(false) {
                continue;
            }
            let mut chain = walk(start, &mut visited, &self.links);
            chain.push(start);
            polylines.push(chain);
        }

        let out = polylines
            .into_iter()
            .map(|chain| chain.into_iter().map(|k| self.crossing(k)).collect())
            .collect();
        (out, self.warnings)
    }
}

/// Linear-interpolated level sets of Delta = +2 and Delta = -2. Squares with
/// a singular corner are skipped and counted in `warnings`.
pub fn transition_contours(grid: &StabilityGrid) -> TransitionCurves {
    let mut plus = Marcher::new(grid, 2.0);
    plus.march();
    let (plus_level, w1) = plus.assemble();
    let mut minus = Marcher::new(grid, -2.0);
    minus.march();
    let (minus_level, w2) = minus.assemble();
    TransitionCurves {
        plus_level,
        minus_level,
        warnings: w1 + w2,
    }
}

/// Interval between roots with a stability label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalLabel {
    pub lo: f64,
    pub hi: f64,
    pub label: String,
}

/// Roots of Delta = 2 and Delta = -2 along alpha at fixed beta, with the
/// interlacing-order verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterlacingReport {
    pub beta: f64,
    /// Roots of Delta = +2, sorted; a tangency appears twice.
    pub lambdas: Vec<f64>,
    /// Roots of Delta = -2, sorted; a tangency appears twice.
    pub lambda_primes: Vec<f64>,
    pub ordering_ok: bool,
    pub intervals: Vec<IntervalLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RootKind {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
struct Root {
    alpha: f64,
    kind: RootKind,
    double: bool,
}

/// Bisection to width `tol` given a bracket with a sign change.
fn bisect(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..128 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the extremum of f (minimum of sign * f).
fn refine_extremum(
    f: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    maximize: bool,
) -> (f64, f64) {
    let phi = 0.5 * (3.0 - 5.0f64.sqrt());
    let sign = if maximize { -1.0 } else { 1.0 };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = a + phi * (b - a);
    let mut x2 = b - phi * (b - a);
    let mut f1 = sign * f(x1);
    let mut f2 = sign * f(x2);
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + phi * (b - a);
            f1 = sign * f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - phi * (b - a);
            f2 = sign * f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Finds the roots of delta(alpha) = level on [lo, hi]: sign-change brackets
/// refined by bisection, plus tangency detection at interior extrema that
/// approach the level within `TOUCH_TOL` without a mesh sign change. A
/// touching extremum that turns out to cross splits into its two roots; a
/// genuine touch is reported as a double root.
fn roots_of_level(
    eval: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    level: f64,
    mesh: usize,
    root_tol: f64,
    kind: RootKind,
) -> Vec<Root> {
    let mut f = |a: f64| eval(a) - level;
    let n = mesh.max(8);
    let xs: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&a| f(a)).collect();

    let mut roots = Vec::new();

    // a mesh node landing exactly on the level is either a tangency (same
    // sign both sides) or a plain crossing; handle it here so the bracket
    // scan below can require strictly nonzero endpoints
    for w in 0..=n {
        if fs[w] != 0.0 {
            continue;
        }
        let left = (1..=w).rev().map(|i| fs[i - 1]).find(|v| *v != 0.0);
        let right = (w + 1..=n).map(|i| fs[i]).find(|v| *v != 0.0);
        match (left, right) {
            (Some(l), Some(r)) if (l > 0.0) == (r > 0.0) => roots.push(Root {
                alpha: xs[w],
                kind,
                double: true,
            }),
            _ => roots.push(Root {
                alpha: xs[w],
                kind,
                double: false,
            }),
        }
    }

    for w in 0..n {
        if !fs[w].is_finite() || !fs[w + 1].is_finite() {
            continue;
        }
        if fs[w] == 0.0 || fs[w + 1] == 0.0 {
            continue;
        }
        if (fs[w] > 0.0) != (fs[w + 1] > 0.0) {
            let r = bisect(&mut f, xs[w], xs[w + 1], root_tol);
            roots.push(Root {
                alpha: r,
                kind,
                double: false,
            });
        }
    }

    // interior extrema that hug the level without crossing on the mesh
    for w in 1..n {
        let (fl, fm, fr) = (fs[w - 1], fs[w], fs[w + 1]);
        if !(fl.is_finite() && fm.is_finite() && fr.is_finite()) {
            continue;
        }
        if fl == 0.0 || fm == 0.0 || fr == 0.0 {
            continue;
        }
        let same_sign = (fl > 0.0) == (fm > 0.0) && (fm > 0.0) == (fr > 0.0);
        if !same_sign {
            continue;
        }
        let is_min = fm < fl && fm < fr && fm > 0.0;
        let is_max = fm > fl && fm > fr && fm < 0.0;
        if !(is_min || is_max) || fm.abs() > TOUCH_TOL {
            continue;
        }
        let (x_ext, f_ext) = refine_extremum(&mut f, xs[w - 1], xs[w + 1], root_tol * 0.1, is_max);
        if f_ext.abs() > TOUCH_TOL {
            continue;
        }
        let crossed = (f_ext > 0.0) != (fm > 0.0);
        if crossed {
            // the refined extremum pokes through the level: two simple roots
            let r1 = bisect(&mut f, xs[w - 1], x_ext, root_tol);
            let r2 = bisect(&mut f, x_ext, xs[w + 1], root_tol);
            roots.push(Root {
                alpha: r1,
                kind,
                double: false,
            });
            roots.push(Root {
                alpha: r2,
                kind,
                double: false,
            });
        } else {
            roots.push(Root {
                alpha: x_ext,
                kind,
                double: true,
            });
        }
    }

    roots.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    roots
}

/// Region of the alpha axis between roots.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Region {
    UnstableAboveTwo,
    Stable,
    UnstableBelowMinusTwo,
}

fn region_of(delta: f64) -> Region {
    if delta > 2.0 {
        Region::UnstableAboveTwo
    } else if delta < -2.0 {
        Region::UnstableBelowMinusTwo
    } else {
        Region::Stable
    }
}

/// Interlacing scan with a caller-supplied discriminant evaluator; the
/// mesh is 512 points per unit of alpha.
pub fn interlacing_scan_with(
    mut eval: impl FnMut(f64) -> f64,
    beta: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    root_tol: f64,
) -> Result<InterlacingReport> {
    if !(alpha_lo < alpha_hi) {
        return Err(HillError::Usage(format!(
            "alpha range [{alpha_lo}, {alpha_hi}] is not well ordered"
        )));
    }
    let mesh = ((alpha_hi - alpha_lo) * 512.0).ceil() as usize;

    let mut all = roots_of_level(
        &mut eval,
        alpha_lo,
        alpha_hi,
        2.0,
        mesh,
        root_tol,
        RootKind::Plus,
    );
    all.extend(roots_of_level(
        &mut eval,
        alpha_lo,
        alpha_hi,
        -2.0,
        mesh,
        root_tol,
        RootKind::Minus,
    ));
    all.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));

    // interval labels from midpoint evaluations, and the Theorem-4 state
    // machine: simple +2 roots toggle between Delta > 2 and the stable band,
    // simple -2 roots between the stable band and Delta < -2; double roots
    // leave the region unchanged.
    let mut ordering_ok = true;
    let mut intervals = Vec::new();
    let mut markers = vec![alpha_lo];
    markers.extend(all.iter().map(|r| r.alpha));
    markers.push(alpha_hi);

    let mut regions = Vec::new();
    for w in markers.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let d = eval(mid);
        let region = region_of(d);
        regions.push(region);
        intervals.push(IntervalLabel {
            lo: w[0],
            hi: w[1],
            label: match region {
                Region::Stable => "stable".into(),
                _ => "unstable".into(),
            },
        });
    }

    for (i, root) in all.iter().enumerate() {
        let before = regions[i];
        let after = regions[i + 1];
        let consistent = if root.double {
            before == after
        } else {
            match root.kind {
                RootKind::Plus => {
                    (before == Region::UnstableAboveTwo && after == Region::Stable)
                        || (before == Region::Stable && after == Region::UnstableAboveTwo)
                }
                RootKind::Minus => {
                    (before == Region::Stable && after == Region::UnstableBelowMinusTwo)
                        || (before == Region::UnstableBelowMinusTwo && after == Region::Stable)
                }
            }
        };
        if !consistent {
            ordering_ok = false;
        }
    }

    let mut lambdas = Vec::new();
    let mut lambda_primes = Vec::new();
    for r in &all {
        let target = match r.kind {
            RootKind::Plus => &mut lambdas,
            RootKind::Minus => &mut lambda_primes,
        };
        target.push(r.alpha);
        if r.double {
            target.push(r.alpha);
        }
    }

    Ok(InterlacingReport {
        beta,
        lambdas,
        lambda_primes,
        ordering_ok,
        intervals,
    })
}

/// Interlacing scan with the recursion evaluator at order 2^k; the excitation
/// samples are hoisted across all alpha evaluations.
pub fn interlacing_scan(
    excitation: &Excitation,
    tau: f64,
    beta: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    k: u32,
    root_tol: f64,
) -> Result<InterlacingReport> {
    let probe = HillProblem::new(0.0, beta, tau, excitation.clone())?;
    let samples = sample_p(&probe, k)?;
    let eval = |alpha: f64| match recursion_kernel(alpha, beta, tau, k, &samples) {
        Ok(out) => out.delta,
        Err(_) => f64::NAN,
    };
    interlacing_scan_with(eval, beta, alpha_lo, alpha_hi, root_tol)
}
