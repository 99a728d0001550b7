//! Accelerated gradient descent with mechanically checked convergence certificates.
//!
//! The crate implements Nesterov's momentum scheme with momentum parameter
//! `r >= 2` in three algebraically equivalent formulations, together with the
//! discrete Lyapunov functions that certify its `O(1/k^2)` objective rate and
//! `o(1/k^3)` squared-gradient rate, and the high-resolution continuous-time
//! limit of the iteration as a first-order ODE system.
//!
//! Modules:
//!
//! * [`objectives`] - smooth convex test functions with certified gradient
//!   Lipschitz constants.
//! * [`schemes`] - the three iteration schemes, seeding, and trace capture.
//! * [`diagnostics`] - Lyapunov values, per-step decrease bounds, rate
//!   envelopes, and summability budgets computed from a finished trace.
//! * [`ode`] - the continuous-time limit, an adaptive embedded Runge-Kutta
//!   integrator, and the continuous Lyapunov certificate.
//! * [`harness`] - TOML-driven experiments, CSV/SVG artifact emission, and
//!   the default verification matrix behind `nagcert verify-all`.

pub mod diagnostics;
pub mod harness;
pub mod objectives;
pub mod ode;
pub mod schemes;

pub use objectives::Objective;
pub use schemes::{SchemeConfig, SchemeKind, Trace};
