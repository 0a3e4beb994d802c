//! Generators for the example families: flat tori, surfaces of revolution
//! (spheres, cusped cylinders, chains, dumbbells) and their sequences.

pub mod family;
pub mod profile;
pub mod revolution;
pub mod torus;

pub use family::{
    build_family, build_family_limit, build_family_member, Family, FamilyConfig, FamilyKind,
    FamilyMember, GeneratedSpace, Layout, PRESETS,
};
pub use profile::{gauss_curvature, Caps, ProfileSpec, Segment, SegmentShape};
pub use revolution::{
    build_revolution, build_revolution_with_step, step_for_resolution, RevolutionChart,
};
pub use torus::{build_circle, build_torus, build_torus_with_grid, TorusGrid, TorusSpec};
