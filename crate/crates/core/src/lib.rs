//! Foldy–Wouthuysen transformation for relativistic particles in external fields:
//! the block-operator algebra, exact and general transformation paths, concrete
//! spin-1/2 and spin-0 Hamiltonians, semiclassical equations of motion and
//! brute-force quantum validators.

pub mod algebra;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod oracle;
pub mod semiclassical;
pub mod transform;

pub use algebra::{BlockOperator, Space, Tolerances};
pub use error::{FwError, Result};
