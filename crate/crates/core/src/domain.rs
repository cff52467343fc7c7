//! Nested observation subdomains, cutoff construction, and geometric
//! admissibility checks for the interior coefficient problem.
//!
//! The interval carries a tower of open subintervals
//! `O1 cc O2 cc O3 cc omega c omega1 c omega_tilde` together with an interior
//! patch `omega0 cc omega` and a reference point `x0` outside the closure of
//! `omega`'s complement-facing side. All regions are snapped to grid nodes and
//! handled as half-open index ranges; compact nesting means the interface
//! coordinates are separated by at least `dist_margin` except where both
//! regions touch the same outer boundary of the interval.

use crate::grid::{Grid, GridError, IndexRange, ScalarField};
use crate::profile::Smoothstep;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Omega0,
    Omega,
    Omega1,
    OmegaTilde,
    O1,
    O2,
    O3,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::Omega0 => "omega0",
            Region::Omega => "omega",
            Region::Omega1 => "omega1",
            Region::OmegaTilde => "omega_tilde",
            Region::O1 => "o1",
            Region::O2 => "o2",
            Region::O3 => "o3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `inner` is not compactly contained in `outer` (inclusion or separation margin failed).
    Nesting {
        inner: Region,
        outer: Region,
        detail: String,
    },
    /// Reference point does not lie strictly inside the admissible part of the interval.
    X0 { x0: f64, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Nesting { inner, outer, detail } => {
                write!(f, "nesting violation: {inner} in {outer}: {detail}")
            }
            Violation::X0 { x0, detail } => write!(f, "x0 violation: x0 = {x0}: {detail}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid subdomain layout:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

/// Coordinate-level description of the nested regions, before grid snapping.
#[derive(Debug, Clone)]
pub struct LayoutSpec {
    pub omega: (f64, f64),
    pub omega1: (f64, f64),
    pub omega_tilde: (f64, f64),
    pub o1: (f64, f64),
    pub o2: (f64, f64),
    pub o3: (f64, f64),
    pub omega0: (f64, f64),
    pub x0: f64,
    /// Observation horizon. Defaults to twice the escape distance sup |x - x0|.
    pub t_final: Option<f64>,
    /// Minimal interface separation for compact nesting. Defaults to 2h.
    pub dist_margin: Option<f64>,
}

/// Grid-snapped subdomain tower. Construct through [`define_subdomains`].
#[derive(Debug, Clone)]
pub struct SubdomainLayout {
    pub grid: Grid,
    pub omega0: IndexRange,
    pub omega: IndexRange,
    pub omega1: IndexRange,
    pub omega_tilde: IndexRange,
    pub o1: IndexRange,
    pub o2: IndexRange,
    pub o3: IndexRange,
    pub x0: f64,
    pub t_final: f64,
    pub dist_margin: f64,
}

/// Compact containment check for one region pair. Interfaces must be separated
/// by `margin` unless both regions end on the same outer boundary of the
/// interval, where plain inclusion is enough.
fn nesting_violation(
    grid: &Grid,
    inner: (Region, IndexRange),
    outer: (Region, IndexRange),
    margin: f64,
) -> Option<Violation> {
    let (iname, ir) = inner;
    let (oname, or) = outer;
    let h = grid.h();
    let tol = 1e-9 * h;
    let mut problems: Vec<String> = Vec::new();

    if !ir.is_subset_of(&or) {
        problems.push(format!(
            "[{}, {}) is not inside [{}, {})",
            ir.start, ir.end, or.start, or.end
        ));
    } else {
        if ir.touches_left_boundary() {
            if !or.touches_left_boundary() {
                problems.push("inner touches the left end of the interval, outer does not".into());
            }
        } else {
            let gap = (ir.start - or.start) as f64 * h;
            if gap + tol < margin {
                problems.push(format!("left separation {gap:.6} < margin {margin:.6}"));
            }
        }
        if ir.touches_right_boundary(grid) {
            if !or.touches_right_boundary(grid) {
                problems.push("inner touches the right end of the interval, outer does not".into());
            }
        } else {
            let gap = (or.end - ir.end) as f64 * h;
            if gap + tol < margin {
                problems.push(format!("right separation {gap:.6} < margin {margin:.6}"));
            }
        }
    }

    if problems.is_empty() {
        None
    } else {
        Some(Violation::Nesting {
            inner: iname,
            outer: oname,
            detail: problems.join("; "),
        })
    }
}

/// Snap the coordinate layout to the grid and verify every structural
/// condition. All violations are collected before failing.
pub fn define_subdomains(grid: &Grid, spec: &LayoutSpec) -> Result<SubdomainLayout, LayoutError> {
    let snap = |(a, b): (f64, f64)| IndexRange::from_coords(grid, a, b);
    let omega = snap(spec.omega)?;
    let omega1 = snap(spec.omega1)?;
    let omega_tilde = snap(spec.omega_tilde)?;
    let o1 = snap(spec.o1)?;
    let o2 = snap(spec.o2)?;
    let o3 = snap(spec.o3)?;
    let omega0 = snap(spec.omega0)?;

    let margin = spec.dist_margin.unwrap_or(2.0 * grid.h());
    let mut violations: Vec<Violation> = Vec::new();

    // Observation tower: omega c omega1 c omega_tilde, compactly at interior interfaces.
    for (inner, outer) in [
        ((Region::Omega, omega), (Region::Omega1, omega1)),
        ((Region::Omega1, omega1), (Region::OmegaTilde, omega_tilde)),
        ((Region::O1, o1), (Region::O2, o2)),
        ((Region::O2, o2), (Region::O3, o3)),
        ((Region::O3, o3), (Region::Omega, omega)),
    ] {
        if let Some(v) = nesting_violation(grid, inner, outer, margin) {
            violations.push(v);
        }
    }

    // Wherever omega reaches the interval boundary, O3 must reach it too: the
    // outer-boundary part of omega's boundary belongs to the boundary of O3.
    if omega.touches_left_boundary() && !o3.touches_left_boundary() {
        violations.push(Violation::Nesting {
            inner: Region::O3,
            outer: Region::Omega,
            detail: "omega touches the left interval end but o3 does not share that boundary"
                .into(),
        });
    }
    if omega.touches_right_boundary(grid) && !o3.touches_right_boundary(grid) {
        violations.push(Violation::Nesting {
            inner: Region::O3,
            outer: Region::Omega,
            detail: "omega touches the right interval end but o3 does not share that boundary"
                .into(),
        });
    }

    // Interior patch: closure(omega0) inside the open omega, so at least one
    // strict node on each side.
    if !(omega0.start > omega.start && omega0.end < omega.end) {
        violations.push(Violation::Nesting {
            inner: Region::Omega0,
            outer: Region::Omega,
            detail: format!(
                "closure of [{}, {}) must stay strictly inside [{}, {})",
                omega0.start, omega0.end, omega.start, omega.end
            ),
        });
    }

    // x0 must avoid the closure of the part of the interval not covered by
    // omega. In 1D that closure is everything at or beyond omega's interior
    // interfaces.
    if !(spec.x0 >= 0.0 && spec.x0 <= grid.length()) {
        violations.push(Violation::X0 {
            x0: spec.x0,
            detail: format!("outside the interval [0, {}]", grid.length()),
        });
    } else {
        if !omega.touches_left_boundary() && spec.x0 <= omega.left_coord(grid) {
            violations.push(Violation::X0 {
                x0: spec.x0,
                detail: format!(
                    "lies in the closure of the uncovered region left of omega (x <= {})",
                    omega.left_coord(grid)
                ),
            });
        }
        if !omega.touches_right_boundary(grid) && spec.x0 >= omega.right_coord(grid) {
            violations.push(Violation::X0 {
                x0: spec.x0,
                detail: format!(
                    "lies in the closure of the uncovered region right of omega (x >= {})",
                    omega.right_coord(grid)
                ),
            });
        }
    }

    if !violations.is_empty() {
        return Err(LayoutError::Invalid(violations));
    }

    let escape = spec.x0.max(grid.length() - spec.x0);
    Ok(SubdomainLayout {
        grid: grid.clone(),
        omega0,
        omega,
        omega1,
        omega_tilde,
        o1,
        o2,
        o3,
        x0: spec.x0,
        t_final: spec.t_final.unwrap_or(2.0 * escape),
        dist_margin: margin,
    })
}

impl SubdomainLayout {
    /// Nodes of `omega` minus the closed shadow `O2`, as index ranges.
    /// This is the annular observation region; it may have one or two pieces.
    pub fn omega_minus_o2(&self) -> Vec<IndexRange> {
        let mut parts = Vec::new();
        if self.omega.start < self.o2.start {
            parts.push(IndexRange::new(self.omega.start, self.o2.start));
        }
        if self.o2.end < self.omega.end {
            parts.push(IndexRange::new(self.o2.end, self.omega.end));
        }
        parts
    }

    /// Distance from x0 to the farthest point of the interval.
    pub fn escape_distance(&self) -> f64 {
        self.x0.max(self.grid.length() - self.x0)
    }
}

/// Finite observation-time condition: the horizon must strictly exceed the
/// escape distance `sup_x |x - x0|`. Returns the pass flag and the margin
/// `t_final - sup |x - x0|`.
pub fn check_geometric_time(layout: &SubdomainLayout) -> (bool, f64) {
    let margin = layout.t_final - layout.escape_distance();
    (margin > 0.0, margin)
}

/// Space cutoff vanishing on `O1` and equal to one on `omega \ O2`, with
/// smoothstep transitions across `O2 \ O1`. Zero outside `omega`.
pub fn build_cutoff_chi(layout: &SubdomainLayout, profile: Smoothstep) -> ScalarField {
    let grid = &layout.grid;
    let mut values = vec![0.0; grid.n_nodes()];
    let xa = grid.coord(layout.o2.start);
    let xb = grid.coord(layout.o1.start);
    let xc = grid.coord(layout.o1.end - 1);
    let xd = grid.coord(layout.o2.end - 1);
    for i in layout.omega.nodes() {
        let x = grid.coord(i);
        values[i] = if layout.o1.contains(i) {
            0.0
        } else if !layout.o2.contains(i) {
            1.0
        } else if i < layout.o1.start {
            // descending ramp 1 -> 0 over [xa, xb]
            1.0 - profile.eval((x - xa) / (xb - xa))
        } else {
            // ascending ramp 0 -> 1 over [xc, xd]
            profile.eval((x - xc) / (xd - xc))
        };
    }
    ScalarField::new(grid, values).expect("cutoff values are finite by construction")
}

/// Discrete sup-norms and pointwise conditions required of the principal
/// coefficient: uniform lower bound, C2-size bound, and the escape-ray
/// slope condition away from omega.
#[derive(Debug, Clone)]
pub struct PseudoconvexityReport {
    pub sup_a: f64,
    pub sup_da: f64,
    pub sup_dda: f64,
    /// Nodes where a <= theta1.
    pub below_theta1: Vec<usize>,
    /// True when any of the three sup-norms exceeds m0.
    pub above_m0: bool,
    /// Nodes outside omega where |a'(x)(x - x0)| > 2 a(x) (1 - theta0).
    pub escape_violations: Vec<usize>,
    pub theta0: f64,
    pub theta1: f64,
    pub m0: f64,
}

impl PseudoconvexityReport {
    pub fn passed(&self) -> bool {
        self.below_theta1.is_empty() && !self.above_m0 && self.escape_violations.is_empty()
    }
}

/// Centered first derivative with second-order one-sided stencils at the ends.
pub(crate) fn first_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// Centered second derivative with second-order one-sided stencils at the ends.
pub(crate) fn second_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let h2 = h * h;
    let mut d = vec![0.0; n];
    d[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
    }
    d[n - 1] =
        (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    d
}

pub fn check_pseudoconvexity(
    a: &ScalarField,
    layout: &SubdomainLayout,
    theta0: f64,
    theta1: f64,
    m0: f64,
) -> PseudoconvexityReport {
    let grid = &layout.grid;
    let h = grid.h();
    let da = first_derivative(a.values(), h);
    let dda = second_derivative(a.values(), h);
    let sup_a = a.sup_norm();
    let sup_da = da.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sup_dda = dda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let below_theta1: Vec<usize> = (0..grid.n_nodes())
        .filter(|&i| a.get(i) <= theta1)
        .collect();

    // The slope condition is demanded on the closure of the uncovered region,
    // that is at nodes at or beyond omega's interior interfaces.
    let omega = &layout.omega;
    let mut escape_violations = Vec::new();
    for i in 0..grid.n_nodes() {
        let left_of = !omega.touches_left_boundary() && i <= omega.start;
        let right_of = !omega.touches_right_boundary(grid) && i + 1 >= omega.end;
        if !(left_of || right_of) {
            continue;
        }
        let x = grid.coord(i);
        if (da[i] * (x - layout.x0)).abs() > 2.0 * a.get(i) * (1.0 - theta0) {
            escape_violations.push(i);
        }
    }

    PseudoconvexityReport {
        sup_a,
        sup_da,
        sup_dda,
        below_theta1,
        above_m0: sup_a > m0 || sup_da > m0 || sup_dda > m0,
        escape_violations,
        theta0,
        theta1,
        m0,
    }
}
