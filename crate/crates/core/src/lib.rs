//! Non-autonomous iteration of unicritical polynomials `z^d + c` along a
//! template, fixed-template Mandelbrot sets, iterated filled Julia sets,
//! and raster distances between them.

pub mod dynamics;
pub mod experiments;
pub mod metrics;
pub mod number;
pub mod pnm;
pub mod raster;
pub mod render;
pub mod templates;

pub use num_complex::Complex64;

pub use dynamics::{
    classify_orbit, compose, in_mandelbrot, step, CriticalTimes, DynamicsError, Membership, MembershipConfig,
    OrbitVerdict, Outcome, ParameterPoint, Witness,
};
pub use experiments::{CounterexampleConstants, ExperimentError, ExperimentReport};
pub use metrics::{
    compare, directed_distance, distance_transform, hausdorff_distance, point_to_set_distance, Comparison,
    DistanceField, Measured, MetricsError,
};
pub use raster::{
    boundary_of, raster_filled_julia, raster_mandelbrot_slice, with_workers, Cell, Raster, SliceSpec, Window,
};
pub use templates::{ultrametric_distance, Template, TemplateError, UltrametricDistance};
