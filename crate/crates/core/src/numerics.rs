use crate::scalar::{lit, Real};

/// Tolerances, resolutions and budgets shared by the numerical modules.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig<S> {
    /// RK4 step; `None` means `|pi| / 20` for the partition in use.
    pub h_ode: Option<S>,
    /// Maximum RK4 steps per integration call.
    pub ode_step_cap: usize,
    /// Certificate tolerance of the matrix-game solver.
    pub tol_game: S,
    /// Artificial viscosity is `sigma_margin * F_max`.
    pub sigma_margin: S,
    /// Tolerance for discrete convexity/concavity checks.
    pub tol_cvx: S,
    /// Cap on pure-profile counts for exhaustive enumeration.
    pub brute_force_cap: usize,
    /// Largest state dimension the PDE route accepts.
    pub pde_dim_cap: usize,
    /// Fraction of recovery nodes allowed to attain their conjugate on the
    /// dual box boundary before a warning is raised.
    pub boundary_fraction: S,
    /// Memoize Hamiltonian evaluations for `d >= 2` sweeps.
    pub memoize: bool,
}

impl<S: Real> Default for NumericsConfig<S> {
    fn default() -> Self {
        Self {
            h_ode: None,
            ode_step_cap: 1_000_000,
            tol_game: lit(1e-9),
            sigma_margin: lit(1.05),
            tol_cvx: lit(1e-8),
            brute_force_cap: 4096,
            pde_dim_cap: 3,
            boundary_fraction: lit(0.05),
            memoize: true,
        }
    }
}

impl<S: Real> NumericsConfig<S> {
    /// ODE step for a partition with the given mesh.
    pub fn ode_step(&self, mesh: S) -> S {
        self.h_ode.unwrap_or(mesh / lit(20.0))
    }
}
