//! Shared test fixtures: a reference grid, layout, and coefficient data that
//! satisfy every admissibility check. Compiled only for tests.

use crate::domain::{define_subdomains, LayoutSpec, SubdomainLayout};
use crate::grid::Grid;

/// 101-node layout whose observation tower hugs the right boundary.
pub fn reference_spec() -> LayoutSpec {
    LayoutSpec {
        omega: (0.6, 1.0),
        omega1: (0.55, 1.0),
        omega_tilde: (0.5, 1.0),
        o1: (0.8, 0.84),
        o2: (0.75, 0.9),
        o3: (0.7, 1.0),
        omega0: (0.88, 0.96),
        x0: 0.8,
        t_final: Some(1.0),
        dist_margin: None,
    }
}

pub fn grid101() -> Grid {
    Grid::uniform(101, 1.0).unwrap()
}

/// Layout variant whose weight geometry also satisfies the level-set
/// conditions: the O-tower sits left of the weight peak and omega0 brackets it.
pub fn weight_friendly_spec() -> LayoutSpec {
    LayoutSpec {
        omega: (0.55, 1.0),
        omega1: (0.52, 1.0),
        omega_tilde: (0.5, 1.0),
        o1: (0.61, 0.63),
        o2: (0.59, 0.65),
        o3: (0.57, 1.0),
        omega0: (0.72, 0.83),
        x0: 0.775,
        t_final: Some(1.6),
        dist_margin: None,
    }
}

pub fn weight_friendly_layout() -> SubdomainLayout {
    define_subdomains(&grid101(), &weight_friendly_spec()).unwrap()
}
