//! Constants, predicate A, the realizer stack and the majorized bound Θ.

pub mod constants;
pub mod majorize;
pub mod predicate;
pub mod psi;

pub use constants::ConstantsBundle;
pub use majorize::{alpha_m, g_m};
pub use predicate::{a_transcript, evaluate_a, ATranscript, DualTuple, Omega, StageFn, StageTuple};
pub use psi::{psi_realizer, PsiContext, PsiOutcome};
pub mod claim2;
pub mod phi;

pub use claim2::{claim2_instantiation, run_realizer, Claim2Constants, RealizerInstance, RealizerReport};
pub use phi::{phi_realizer, PhiInputs, PhiOutput};
pub mod theta;
pub use theta::{theta_bound, theta_constants, theta_prime, BoundParams, ThetaConstants, ThetaOutcome};
