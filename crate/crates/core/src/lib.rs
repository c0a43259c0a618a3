//! symf-core — a symbolic differential-equation engine.
//!
//! Right-hand sides of ODEs, DDEs and SDEs are entered as symbolic
//! expressions, lowered to a flat register program (with a tree-walking
//! evaluator as slow fallback), and integrated with adaptive methods:
//!
//! * explicit Dormand–Prince 5(4) for ODEs,
//! * the Shampine–Thompson method (Bogacki–Shampine 3(2) stages over a
//!   cursor-equipped anchor list with cubic Hermite past access) for DDEs,
//! * embedded Rößler-type stochastic Runge–Kutta pairs with
//!   rejection-sampling-with-memory step control for diagonal Itô SDEs.
//!
//! On top of the integrators, the [`lyap`] module automates the estimation of
//! regular and transversal Lyapunov exponents for ODEs and DDEs.
//!
//! All randomness flows through seeded ChaCha8 generators ([`rng::Rng64`]),
//! so every trajectory is reproducible across runs and builds.

pub mod dde;
pub mod error;
pub mod exec;
pub mod lower;
pub mod lyap;
pub mod ode;
pub mod rng;
pub mod sde;
pub mod serial;
pub mod symbolic;
pub mod system;

pub use error::{EvalError, LoadError, LowerError, ParseError, SpecError, StepError, SymError};
pub use exec::{ExecutableSystem, FnPast, PastAccessor, Scratch};
pub use lower::{Backend, LowerOptions};
pub use symbolic::{
    differentiate, eliminate_common_subexpressions, expand_helpers, jacobian, parse_expression,
    remap_states, simplify_basic, substitute, Expression, Func, HelperDefinition,
};
pub use system::{Calculus, SystemSpec};
