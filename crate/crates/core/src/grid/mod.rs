//! Domains, uniform grids and sampled functions.

mod domain;
mod forms;
mod function;
mod region;
mod spec;

pub use domain::{Domain, Profile};
pub use forms::{
    sample, Bump, ClosedForm, Constant, FormFactory, FormRegistry, FormSupport, KovacikF, Tent,
    Window, Zero,
};
pub use function::GridFunction;
pub use region::Region;
pub use spec::{GridSpec, Index, Point};

pub(crate) use domain::dist;

/// Support of `gf`: closed cells touching a node with `|value| > threshold`.
pub fn support(gf: &GridFunction, threshold: f64) -> Region {
    Region::support(gf, threshold)
}

/// Whether every node outside `dom` carries `|value| ≤ tol`.
///
/// Only nodes are inspected; for a function without `zero_outside`, nothing
/// is claimed about points beyond the box.
pub fn vanishes_outside(gf: &GridFunction, dom: &Domain, tol: f64) -> bool {
    let spec = gf.spec();
    let dim = spec.dim();
    gf.values()
        .iter()
        .enumerate()
        .all(|(i, v)| v.abs() <= tol || dom.contains(&spec.point(i)[..dim]))
}

/// `u_n = max(−n, min(u, n))`.
pub fn clamp(gf: &GridFunction, n: f64) -> crate::Result<GridFunction> {
    gf.clamp(n)
}
