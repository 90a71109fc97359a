//! Green-function kernels on flat polygons with alternating boundary
//! conditions, built from hyperelliptic uniformization and Riemann theta
//! functions, together with the quadrature and linear algebra they need.

pub mod cli;
pub mod curve;
pub mod homotopy;
pub mod kernels;
pub mod numerics;
pub mod oracles;
pub mod theta;

pub fn run() -> i32 {
    cli::run()
}
