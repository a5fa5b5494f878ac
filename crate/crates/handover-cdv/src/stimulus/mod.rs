//! Abstract test language, concretizer and reactive driver.
//!
//! Tests are two-tiered: [`AbstractTest`] fixes the action sequence,
//! [`concretize`] binds every parameter by seeded sampling from a
//! [`RangeCatalog`], and [`drive`] enacts the bound test against a fresh
//! world and controller, producing a [`SimTrace`].

mod actions;
mod catalog;
mod driver;
mod trace;

pub use actions::{
    AbstractAction, AbstractTest, MAX_TEST_LEN, Provenance, SensorChannel, TestFormatError,
};
pub use catalog::{
    ActionBinding, AttitudeBox, CatalogError, ConcreteTest, Interval, Profile, RangeCatalog,
    TickRange, concretize,
};
pub use driver::{DriveError, TraceSink, default_max_ticks, drive};
pub use trace::{SimTrace, TraceError, TraceEvent, TraceMeta, TraceRecord};
