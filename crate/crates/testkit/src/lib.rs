//! Reference implementations used only as test oracles. Each routine is
//! written from scratch so that it shares no code path with the library
//! under test.

pub mod oracle;
