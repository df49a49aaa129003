//! Right-tail asymptotics from the explosion of the moment generating
//! function.
//!
//! The crate is organised bottom-up:
//!
//! * [`tauberian`]: the generic engine. Anything implementing [`MgfModel`]
//!   gets the Legendre transform, the Chernoff bound, the limsup band for
//!   `ln P(Z > R)`, and the window-integral diagnostics.
//! * [`analytic`]: closed-form models (Gamma, variance-gamma, Heston).
//! * [`riccati`]: closed-form `ψ`, `φ` and explosion times for the CIR
//!   process and its time integral, plus an ODE reference.
//! * [`critical`]: critical moments and the pole coefficient `ω` for
//!   `Z = λ₁V_t + λ₂I_t`.
//! * [`montecarlo`]: exact-transition simulation used to check all of the
//!   above.
//!
//! ```
//! use tailwedge::analytic::{gamma_model, GammaParams};
//! use tailwedge::tauberian::legendre;
//!
//! let exp1 = gamma_model(GammaParams::new(1.0, 1.0)?);
//! let pt = legendre(&exp1, 10.0)?;
//! assert!((pt.p_star - 0.9).abs() < 1e-12);
//! # Ok::<(), tailwedge::Error>(())
//! ```

pub mod analytic;
pub mod critical;
mod error;
pub mod montecarlo;
pub mod numeric;
pub mod riccati;
pub mod tauberian;

pub use error::{Error, Result};
pub use tauberian::MgfModel;

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(tail_engine, "../../../book/src/tail-engine.md");
    chapter!(riccati, "../../../book/src/riccati.md");
    chapter!(critical_moments, "../../../book/src/critical-moments.md");
    chapter!(monte_carlo, "../../../book/src/monte-carlo.md");
    chapter!(cli, "../../../book/src/cli.md");
    chapter!(readme, "../../../README.md");
}
