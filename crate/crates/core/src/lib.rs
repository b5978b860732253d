//! Synthetic-dimension Floquet pumping in a pair of coupled ring resonators.
//!
//! Two incommensurate drives play the role of crystal momenta of a Haldane
//! or brick-wall lattice. The energy pumped between the drives is quantized
//! by the Chern number of the synthesized band.
//!
//! - [`lattice`]: model geometry, Bloch Hamiltonians and the Chern number.
//! - [`drive`]: modulation waveforms and the effective spin Hamiltonian.
//! - [`evolve`]: RK4 evolution with running work integrals.
//! - [`observables`]: pumping slopes, Bloch coverage, DoS, tone energies.
//! - [`sweep`]: parallel phase-diagram grids.
//! - [`config`], [`output`], [`cli`]: configuration, files and the CLI.

pub mod cli;
pub mod config;
pub mod drive;
pub mod evolve;
pub mod hermitian;
pub mod lattice;
pub mod observables;
pub mod output;
pub mod sweep;

/// Any failure surfaced by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
    #[error(transparent)]
    Evolve(#[from] evolve::EvolveError),
    #[error(transparent)]
    Observable(#[from] observables::ObservableError),
    #[error(transparent)]
    Sweep(#[from] sweep::SweepError),
    #[error(transparent)]
    Export(#[from] output::ExportError),
    #[error("i/o: {0}")]
    Io(String),
}
