pub mod expr;
pub mod fd;
pub mod flows;
pub mod invariants;
pub mod linalg;
pub mod ode;
pub mod report;
pub mod systems;
