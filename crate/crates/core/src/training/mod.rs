pub mod aux;
pub mod losses;
pub mod objective;
pub mod gradcheck;
pub mod optim;
pub mod rundir;
pub mod trainer;

pub use aux::{AuxClassifiers, AuxHead, AUX_PREFIX};
pub use losses::{loss_cls, loss_text, loss_total, loss_usability, LossBreakdown, LossWeights};
pub use objective::{objective, ObjectiveVars};
pub use optim::AdamW;
pub use trainer::{
    batch_gradients, evaluate_teacher, predict_all, sample_gradients, train, EpochRecord, TrainConfig,
    TrainOutcome, DEFAULT_SEED,
};
pub use gradcheck::{objective_gradcheck, random_instance, InstanceSpec, ObjectiveGradcheck, INERT_TOLERANCE};
pub use rundir::{read_history, RunDir};
