//! Time-dependent perturbation theory for atoms coupled to the field.

pub mod atom;
pub mod emission;
pub mod first_order;
pub mod kernel;
pub mod slots;
pub mod standard;

pub use atom::{MultiLevelAtom, TwoLevelAtom};
pub use emission::{emission_rate, multi_first_order, EmissionOptions, EmissionRate, MultiFirstOrder};
pub use first_order::{exact_interaction_state, first_order_residual, first_order_state, FirstOrderState};
pub use kernel::delta_t;
pub use slots::{
    closed_form_two_quanta, second_order_two_quanta, three_oscillator_identity_check, two_photon_probability, AmplitudeResult,
    SecondOrderOptions,
};
pub use standard::standard_oracle_two_photon;
