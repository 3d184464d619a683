pub mod checkpoint;
pub mod student;
pub mod trainer;

pub use checkpoint::{load_student, save_student, STUDENT_MAGIC};
pub use student::{teacher_features, Simulator, Student, SIMULATOR_BLOCKS, SIMULATOR_PREFIX};
pub use trainer::{
    distill_loss, distill_train, evaluate_student, student_predictions, teacher_targets, DistillConfig,
    DistillEpoch, DistillLoss, DistillOutcome, DEFAULT_LAMBDA,
};
