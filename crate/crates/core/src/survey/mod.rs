pub mod assignment;
pub mod flow;
pub mod pool;
pub mod questionnaire;

pub use assignment::{create_session, FramingArm, SessionAssignment};
pub use flow::{next_step, Phase, Protocol, Session, SessionEvent, SessionState, StepDescriptor};
pub use pool::{ImageCard, ImagePool, PoolLayout};
